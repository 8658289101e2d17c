#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "flashsim/channel.hpp"

namespace flashsim {

// H(v) = theta has no root on a flank (theta above the local entropy peak).
struct ThetaOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adjacent read windows crossed: theta too small for this noise level.
struct OverlapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReadVoltages {
    std::array<double, 6> r{};
    std::optional<double> theta;  // set when produced by the entropy method

    void validate() const;  // strictly increasing
    // Region index 0..6 for a sampled voltage.
    int region_of(double v) const {
        int i = 0;
        while (i < 6 && v > r[i]) ++i;
        return i;
    }
};

struct LlrTable {
    std::array<double, 7> l_msb{}, l_lsb{};  // region LLRs, clamped at +-30
    std::array<double, 7> p_msb{}, p_lsb{};  // per-region error masses
};

inline constexpr double kLlrClamp = 30.0;

// Normalized state-posterior entropy of the voltage v, in bits.
double entropy(const StateModel& m, double v);

// Six read voltages: the two H(v)=theta roots flanking each hard threshold.
ReadVoltages solve_read_voltages(const StateModel& m, double theta);

LlrTable llr_table(const StateModel& m, const ReadVoltages& reads);

struct Alphas {
    double pe_lsb = 0.0, llr_lsb = 0.0;
    double pe_msb = 0.0, llr_msb = 0.0;
};

Alphas alphas(const LlrTable& t);

struct CostWeights {
    double c1 = 1.0;
    double c2 = 0.0;
};

double read_cost_pe(const Alphas& a, int d_min);
double read_cost_llr(const Alphas& a, int d_min);
double read_cost(const Alphas& a, int d_min, const CostWeights& w);

// OLS of measured BER against the two cost components (with an intercept
// that is discarded); returns the two slopes.
CostWeights calibrate_weights(std::span<const double> theta_grid,
                              std::span<const double> ber,
                              std::span<const double> cost_pe,
                              std::span<const double> cost_llr);

struct ThetaResult {
    double theta_star = 0.0;
    ReadVoltages reads{};
    double cost = 0.0;
};

// Minimise C_read over theta: coarse feasibility scan plus golden-section
// refinement; shrinks the bounds once if nothing in them is solvable.
ThetaResult optimize_theta(const StateModel& m, int d_min, const CostWeights& w,
                           double lo = 0.05, double hi = 0.95, double tol = 1e-3);

// Six evenly spaced voltages across [mu_s11, mu_s01].
ReadVoltages uniform_reads(const StateModel& m);

// Maximum-mutual-information placement by cyclic coordinate ascent.
ReadVoltages mmi_reads(const StateModel& m);

// I(X;Y) in bits of the 4-input / 7-region channel, uniform input.
double soft_mutual_information(const StateModel& m, const ReadVoltages& reads);

enum class ReadScheme { Proposed, Uniform, Mmi, EntropyFixed };
ReadScheme parse_read_scheme(const std::string& name);
std::string to_string(ReadScheme s);

}  // namespace flashsim
