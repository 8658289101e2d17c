#pragma once

#include <array>
#include <random>
#include <stdexcept>
#include <string>

#include "flashsim/mathutil.hpp"

namespace flashsim {

// Cell states in increasing threshold-voltage order.  Labels are Gray coded;
// the left bit belongs to the MSB page, the right bit to the LSB page.
enum class CellState : int { S11 = 0, S10 = 1, S00 = 2, S01 = 3 };

inline constexpr std::array<CellState, 4> kStates = {
    CellState::S11, CellState::S10, CellState::S00, CellState::S01};
inline constexpr std::array<int, 4> kMsbOf = {1, 1, 0, 0};
inline constexpr std::array<int, 4> kLsbOf = {1, 0, 0, 1};

inline int msb_of(CellState s) { return kMsbOf[static_cast<int>(s)]; }
inline int lsb_of(CellState s) { return kLsbOf[static_cast<int>(s)]; }

inline CellState state_of_bits(int msb, int lsb) {
    for (CellState s : kStates)
        if (msb_of(s) == msb && lsb_of(s) == lsb) return s;
    throw std::invalid_argument("state_of_bits: bits must be 0/1");
}

struct ChannelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quadratic intersection of adjacent state densities has no root between
// the two means (wildly mismatched variances or collapsed spacing).
struct NoRootInInterval : ChannelError {
    using ChannelError::ChannelError;
};

struct ChannelParams {
    double v_min = 1.4;    // erase-state nominal voltage
    double v_max = 3.93;   // top of the programming window
    double sigma_e = 0.35; // erase-state spread
    double sigma_p = 0.05; // programming noise
    double v_pp = 0.3;     // incremental program step
    double a_r = 0.000055; // retention coefficient, PE^0.62 term
    double b_r = 0.000235; // retention coefficient, PE^0.32 term
    double x0 = 1.4;       // retention pivot voltage
    double pe = 0.0;       // programme/erase cycles endured
    double t_ret = 0.0;    // retention time elapsed

    void validate() const;
    // Random-telegraph-noise spread grows with wear.
    double sigma_t() const { return 0.00025 * std::pow(pe, 0.62); }
};

struct WriteVoltages {
    double v1 = 2.6;
    double v2 = 3.3;
};

struct RetentionShift {
    double mu = 0.0;
    double sigma = 0.0;
};

// Mean charge-loss shift and its spread for a cell whose noise-free level
// is v_nominal.
RetentionShift retention_shift(const ChannelParams& p, double v_nominal);

struct StateModel {
    std::array<double, 4> mu{};
    std::array<double, 4> sigma{};
    WriteVoltages write{};

    double pdf(CellState s, double v) const {
        const int i = static_cast<int>(s);
        return gauss_pdf(mu[i], sigma[i], v);
    }
    double log_pdf(CellState s, double v) const {
        const int i = static_cast<int>(s);
        return gauss_log_pdf(mu[i], sigma[i], v);
    }
    // P(a < V < b | state); endpoints may be +-inf.
    double interval_mass(CellState s, double a, double b) const {
        const int i = static_cast<int>(s);
        return gauss_interval(mu[i], sigma[i], a, b);
    }
};

StateModel build_state_model(const ChannelParams& p, const WriteVoltages& w);

struct HardThresholds {
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    double operator[](int i) const { return i == 0 ? t1 : (i == 1 ? t2 : t3); }
};

// MAP decision boundaries for equal priors: the voltages where adjacent
// state densities cross, each selected inside (mu_i, mu_{i+1}).
HardThresholds hard_thresholds(const StateModel& m);

struct Rber {
    double msb = 0.0;
    double lsb = 0.0;
};

Rber rber(const StateModel& m, const HardThresholds& th);

// Draw one threshold voltage for a cell programmed to `s`.
double sample_cell(const StateModel& m, CellState s, std::mt19937_64& rng);

// Reference density for a programmed state before the Gaussian
// approximation: uniform programming step folded with Gaussian noise.
double ispp_pdf(double v, double v_target, double sigma, double v_pp);

}  // namespace flashsim
