#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "flashsim/config.hpp"
#include "flashsim/ldpc.hpp"

namespace flashsim {

// Construct the configured code and attach its d_min estimate (override
// beats the information-set search).
LdpcCode build_code(const CodeConfig& cfg);

struct LutRecord {
    double pe = 0.0, t = 0.0;
    bool valid = false;
    std::string error;  // reason when invalid
    double v1 = 0.0, v2 = 0.0;
    double theta = 0.0;
    std::array<double, 6> reads{};
    double c1 = 0.0, c2 = 0.0;
    int d_min = 0;
};

struct Lut {
    std::vector<LutRecord> points;

    const LutRecord* nearest(double pe, double t) const;
    void save(std::ostream& os) const;
    static Lut load(std::istream& is);
    void save_file(const std::string& path) const;
    static Lut load_file(const std::string& path);
};

struct Calibration {
    double pe = 0.0, t = 0.0;
    int d_min = 0;
    CostWeights weights{};
    std::vector<double> theta_grid, ber, cost_pe, cost_llr;

    void save(std::ostream& os) const;
    static Calibration load(std::istream& is);
    void save_file(const std::string& path) const;
    static Calibration load_file(const std::string& path);
};

// Everything needed to simulate one (PE, T) grid point.
struct ResolvedPoint {
    StateModel model{};
    WriteVoltages write{};
    ReadVoltages reads{};
    LlrTable table{};
    std::optional<double> theta;
    int d_min = 0;
};

struct PointResult {
    double pe = 0.0, t = 0.0;
    WriteScheme write_scheme = WriteScheme::Proposed;
    ReadScheme read_scheme = ReadScheme::Proposed;
    double ber_msb = 0.0, ber_lsb = 0.0, ber_total = 0.0, fer = 0.0;
    long long frames = 0;
    long long events = 0;  // residual bit errors across both pages
    double mean_iters = 0.0;
    double wall_time = 0.0;        // seconds; never serialized
    bool stopped_by_events = false;  // false -> the frame cap fired
};

ResolvedPoint resolve_point(const RunConfig& cfg, const LdpcCode& code, double pe, double t,
                            const Lut* lut = nullptr);

PointResult run_point(const RunConfig& cfg, const LdpcCode& code, double pe, double t,
                      const Lut* lut = nullptr);

// Maps run_point over the (pe, t) grid; when `csv` is given, the header and
// one row per completed point are written (and flushed) incrementally.
std::vector<PointResult> run_sweep(const RunConfig& cfg, const LdpcCode& code,
                                   std::ostream* csv = nullptr, const Lut* lut = nullptr);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const PointResult& r);

// Optimize every grid point with the proposed write+read pipeline and store
// the results; per-point failures mark the record invalid instead of
// aborting.  Trend warnings go to `log` when given.
Lut build_lut(const RunConfig& cfg, const LdpcCode& code, std::ostream* log = nullptr);

// Measure BER over the calibration theta grid at one (PE, T) point and fit
// the cost weights.
Calibration run_calibration(const RunConfig& cfg, const LdpcCode& code, double pe, double t);

}  // namespace flashsim
