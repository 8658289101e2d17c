#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>

#include "flashsim/channel.hpp"

namespace flashsim {

struct WriteSearchConfig {
    int m_grid = 200;      // grid points per 1-D pass
    int q_max = 50;        // alternation cap
    double v2_init = 3.3;  // starting upper write voltage
    double tol = 1e-4;     // volts

    void validate() const;
};

// C_write = 2^(-1.5 d) w_lsb + 4^(-d) w_msb
double write_cost(const Rber& r, int d_min);

enum class WriteScheme { Proposed, Fixed, MinRber, Mrd, Mcc };
WriteScheme parse_write_scheme(const std::string& name);
std::string to_string(WriteScheme s);

struct WriteResult {
    WriteVoltages v{};
    Rber rber{};
    double cost = 0.0;       // C_write at the returned voltages (comparable across schemes)
    double objective = 0.0;  // the scheme's own objective value at the optimum
};

// Alternating 1-D searches for (V1*, V2*) minimising C_write.
WriteResult optimize_write(const ChannelParams& p, int d_min,
                           const WriteSearchConfig& cfg = {});

// Wear-independent constants; defaults split the window into equal thirds.
WriteResult baseline_fixed(const ChannelParams& p, int d_min,
                           std::optional<WriteVoltages> fixed = {});
// Same alternating search, objective w_msb + w_lsb.
WriteResult baseline_min_rber(const ChannelParams& p, int d_min,
                              const WriteSearchConfig& cfg = {});
// Balances the page error rates (see implementation note on the search).
WriteResult baseline_mrd(const ChannelParams& p, int d_min,
                         const WriteSearchConfig& cfg = {});
// Maximises the mutual information of the hard-quantized 4-ary channel.
WriteResult baseline_mcc(const ChannelParams& p, int d_min,
                         const WriteSearchConfig& cfg = {});

WriteResult run_write_scheme(WriteScheme s, const ChannelParams& p, int d_min,
                             const WriteSearchConfig& cfg = {},
                             std::optional<WriteVoltages> fixed = {});

// Row g: P(decide state h | programmed state g) at the hard thresholds.
std::array<std::array<double, 4>, 4> transition_matrix(const StateModel& m,
                                                       const HardThresholds& th);
// I(X;Y) in bits for uniform inputs over the 4x4 matrix above.
double hard_mutual_information(const StateModel& m, const HardThresholds& th);

// Reference ML-decoding BER estimates.  `spectrum` maps codeword weight d to
// the distance-spectrum count A(d); the caller supplies it (the optimizer
// path never uses these).
double ml_ber_lsb(double p_cross_lsb, int d_min, const std::function<double(int)>& spectrum);
double ml_ber_msb(double p_cross_msb, int d_min, const std::function<double(int)>& spectrum);

}  // namespace flashsim
