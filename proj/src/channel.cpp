#include "flashsim/channel.hpp"

#include <cmath>

namespace flashsim {

void ChannelParams::validate() const {
    auto bad = [](double x) { return !std::isfinite(x); };
    if (bad(v_min) || bad(v_max) || bad(sigma_e) || bad(sigma_p) || bad(v_pp) ||
        bad(a_r) || bad(b_r) || bad(x0) || bad(pe) || bad(t_ret))
        throw ChannelError("channel params must be finite");
    if (v_max <= v_min) throw ChannelError("v_max must exceed v_min");
    if (sigma_e <= 0 || sigma_p <= 0) throw ChannelError("sigmas must be positive");
    if (v_pp <= 0) throw ChannelError("v_pp must be positive");
    if (a_r < 0 || b_r < 0) throw ChannelError("retention coefficients must be >= 0");
    if (pe < 0 || t_ret < 0) throw ChannelError("pe and t_ret must be >= 0");
}

RetentionShift retention_shift(const ChannelParams& p, double v_nominal) {
    RetentionShift r;
    if (p.pe <= 0.0 || p.t_ret <= 0.0) return r;  // fresh device or no dwell
    const double wear = p.a_r * std::pow(p.pe, 0.62) + p.b_r * std::pow(p.pe, 0.32);
    r.mu = wear * (v_nominal - p.x0) * std::log(1.0 + p.t_ret);
    r.sigma = 0.4 * std::fabs(r.mu);
    return r;
}

StateModel build_state_model(const ChannelParams& p, const WriteVoltages& w) {
    p.validate();
    if (!(w.v1 > p.v_min) || !(w.v2 > w.v1) || !(w.v2 <= p.v_max))
        throw ChannelError("write voltages must satisfy v_min < v1 < v2 <= v_max");

    StateModel m;
    m.write = w;
    const double st2 = p.sigma_t() * p.sigma_t();

    // Erase state: nominal level v_min, spread sigma_e.
    {
        const RetentionShift r = retention_shift(p, p.v_min);
        m.mu[0] = p.v_min - r.mu;
        m.sigma[0] = std::sqrt(p.sigma_e * p.sigma_e + st2 + r.sigma * r.sigma);
    }
    // Programmed states: centred half a program step above the verify level.
    const std::array<double, 3> verify = {w.v1, w.v2, p.v_max};
    for (int i = 0; i < 3; ++i) {
        const double nominal = verify[i] + 0.5 * p.v_pp;
        const RetentionShift r = retention_shift(p, nominal);
        m.mu[i + 1] = nominal - r.mu;
        m.sigma[i + 1] = std::sqrt(p.sigma_p * p.sigma_p + st2 + r.sigma * r.sigma);
    }
    for (int i = 0; i < 3; ++i)
        if (!(m.mu[i] < m.mu[i + 1]))
            throw ChannelError("state means collapsed out of order");
    return m;
}

namespace {

// Crossing of two Gaussian log-densities, restricted to (mu1, mu2).
double density_crossing(double mu1, double s1, double mu2, double s2) {
    if (std::fabs(s1 - s2) < 1e-15) return 0.5 * (mu1 + mu2);
    // (t-mu2)^2/s2^2 - (t-mu1)^2/s1^2 = 2 ln(s1/s2)
    const double i1 = 1.0 / (s1 * s1), i2 = 1.0 / (s2 * s2);
    const double a = i2 - i1;
    const double b = -2.0 * (mu2 * i2 - mu1 * i1);
    const double c = mu2 * mu2 * i2 - mu1 * mu1 * i1 - 2.0 * std::log(s1 / s2);
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) throw NoRootInInterval("density crossing: negative discriminant");
    const double sq = std::sqrt(disc);
    // Evaluate the numerically stable root pair.
    const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
    const double r1 = q / a;
    const double r2 = c / q;
    const bool in1 = r1 > mu1 && r1 < mu2;
    const bool in2 = r2 > mu1 && r2 < mu2;
    if (in1 && in2) return std::fabs(r1 - 0.5 * (mu1 + mu2)) < std::fabs(r2 - 0.5 * (mu1 + mu2)) ? r1 : r2;
    if (in1) return r1;
    if (in2) return r2;
    throw NoRootInInterval("density crossing: no root between the means");
}

}  // namespace

HardThresholds hard_thresholds(const StateModel& m) {
    HardThresholds th;
    th.t1 = density_crossing(m.mu[0], m.sigma[0], m.mu[1], m.sigma[1]);
    th.t2 = density_crossing(m.mu[1], m.sigma[1], m.mu[2], m.sigma[2]);
    th.t3 = density_crossing(m.mu[2], m.sigma[2], m.mu[3], m.sigma[3]);
    return th;
}

Rber rber(const StateModel& m, const HardThresholds& th) {
    if (!(th.t1 < th.t2 && th.t2 < th.t3))
        throw ChannelError("rber: thresholds out of order");
    Rber r;
    r.msb = 0.25 * (m.interval_mass(CellState::S10, th.t2, kInf) +
                    m.interval_mass(CellState::S00, -kInf, th.t2));
    r.lsb = 0.25 * (m.interval_mass(CellState::S11, th.t1, kInf) +
                    m.interval_mass(CellState::S10, -kInf, th.t1)) +
            0.25 * (m.interval_mass(CellState::S00, th.t3, kInf) +
                    m.interval_mass(CellState::S01, -kInf, th.t3));
    return r;
}

double sample_cell(const StateModel& m, CellState s, std::mt19937_64& rng) {
    const int i = static_cast<int>(s);
    std::normal_distribution<double> n(m.mu[i], m.sigma[i]);
    return n(rng);
}

double ispp_pdf(double v, double v_target, double sigma, double v_pp) {
    // U[v_target, v_target + v_pp] convolved with N(0, sigma^2).
    const double hi = gauss_tail((v_target - v) / sigma);
    const double lo = gauss_tail((v_target + v_pp - v) / sigma);
    return (hi - lo) / v_pp;
}

}  // namespace flashsim
