#include "flashsim/writeopt.hpp"

#include <cmath>
#include <stdexcept>

#include "flashsim/mathutil.hpp"

namespace flashsim {

void WriteSearchConfig::validate() const {
    if (m_grid < 3) throw std::invalid_argument("write search: m_grid must be >= 3");
    if (q_max < 1) throw std::invalid_argument("write search: q_max must be >= 1");
    if (!(tol > 0)) throw std::invalid_argument("write search: tol must be positive");
    if (!std::isfinite(v2_init)) throw std::invalid_argument("write search: v2_init must be finite");
}

double write_cost(const Rber& r, int d_min) {
    if (d_min < 1) throw std::invalid_argument("write_cost: d_min must be positive");
    return std::exp2(-1.5 * d_min) * r.lsb + std::exp2(-2.0 * d_min) * r.msb;
}

WriteScheme parse_write_scheme(const std::string& name) {
    if (name == "proposed") return WriteScheme::Proposed;
    if (name == "fixed") return WriteScheme::Fixed;
    if (name == "min-rber") return WriteScheme::MinRber;
    if (name == "mrd") return WriteScheme::Mrd;
    if (name == "mcc") return WriteScheme::Mcc;
    throw std::invalid_argument("unknown write scheme '" + name + "'");
}

std::string to_string(WriteScheme s) {
    switch (s) {
        case WriteScheme::Proposed: return "proposed";
        case WriteScheme::Fixed: return "fixed";
        case WriteScheme::MinRber: return "min-rber";
        case WriteScheme::Mrd: return "mrd";
        case WriteScheme::Mcc: return "mcc";
    }
    return "?";
}

namespace {

// One objective evaluation: rebuild the state model and error rates.
// Infeasible geometry evaluates to +inf so searches can skim past it.
template <typename F>
double eval_or_inf(const ChannelParams& p, double v1, double v2, F&& f) {
    try {
        const StateModel m = build_state_model(p, {v1, v2});
        const HardThresholds th = hard_thresholds(m);
        return f(m, th);
    } catch (const ChannelError&) {
        return kInf;
    }
}

using PointObjective = std::function<double(double v1, double v2)>;

struct CdResult {
    WriteVoltages v{};
    double value = kInf;
};

// Alternating coordinate descent over the feasible triangle
// v_min < v1 < v2 <= v_max.  Only improving steps are accepted, so the
// objective sequence is non-increasing.
CdResult coordinate_descent(const ChannelParams& p, const PointObjective& obj,
                            const WriteSearchConfig& cfg) {
    cfg.validate();
    if (!(cfg.v2_init > p.v_min) || !(cfg.v2_init <= p.v_max))
        throw std::invalid_argument("write search: v2_init outside (v_min, v_max]");
    const int m = cfg.m_grid - 1;  // intervals per pass
    double v1 = std::numeric_limits<double>::quiet_NaN();
    double v2 = cfg.v2_init;
    double cur = kInf;
    for (int q = 0; q < cfg.q_max; ++q) {
        const double v1_prev = v1, v2_prev = v2;
        GridMinResult r1 =
            grid_golden_min([&](double x) { return obj(x, v2); }, p.v_min, v2, m, cfg.tol);
        if (!r1.found) throw DegenerateBracket("write search: no feasible v1");
        if (r1.value <= cur) { v1 = r1.x; cur = r1.value; }
        GridMinResult r2 =
            grid_golden_min([&](double x) { return obj(v1, x); }, v1, p.v_max, m, cfg.tol);
        if (!r2.found) throw DegenerateBracket("write search: no feasible v2");
        if (r2.value <= cur) { v2 = r2.x; cur = r2.value; }
        if (std::fabs(v1 - v1_prev) < cfg.tol && std::fabs(v2 - v2_prev) < cfg.tol) break;
    }
    return {{v1, v2}, cur};
}

WriteResult finish(const ChannelParams& p, WriteVoltages v, int d_min, double objective) {
    const StateModel m = build_state_model(p, v);
    const Rber r = rber(m, hard_thresholds(m));
    return {v, r, write_cost(r, d_min), objective};
}

}  // namespace

WriteResult optimize_write(const ChannelParams& p, int d_min, const WriteSearchConfig& cfg) {
    PointObjective obj = [&](double v1, double v2) {
        return eval_or_inf(p, v1, v2, [&](const StateModel& m, const HardThresholds& th) {
            return write_cost(rber(m, th), d_min);
        });
    };
    const CdResult r = coordinate_descent(p, obj, cfg);
    return finish(p, r.v, d_min, r.value);
}

WriteResult baseline_fixed(const ChannelParams& p, int d_min,
                           std::optional<WriteVoltages> fixed) {
    WriteVoltages v;
    if (fixed) {
        v = *fixed;
    } else {
        const double third = (p.v_max - p.v_min) / 3.0;
        v = {p.v_min + third, p.v_min + 2.0 * third};
    }
    WriteResult res = finish(p, v, d_min, 0.0);
    res.objective = res.cost;
    return res;
}

WriteResult baseline_min_rber(const ChannelParams& p, int d_min, const WriteSearchConfig& cfg) {
    PointObjective obj = [&](double v1, double v2) {
        return eval_or_inf(p, v1, v2, [&](const StateModel& m, const HardThresholds& th) {
            const Rber r = rber(m, th);
            return r.msb + r.lsb;
        });
    };
    const CdResult r = coordinate_descent(p, obj, cfg);
    return finish(p, r.v, d_min, r.value);
}

WriteResult baseline_mrd(const ChannelParams& p, int d_min, const WriteSearchConfig& cfg) {
    // Balancing the page error rates is solved as the equivalent minimax
    // problem min max(w_msb, w_lsb): the |w_msb - w_lsb| surface is flat to
    // first order along an entire curve of balanced points, which defeats
    // coordinate-wise descent, while the minimax objective picks the unique
    // best balanced point.  A nested search (inner exact 1-D solve for v1 at
    // each candidate v2) is used for the same reason.
    cfg.validate();
    auto gap_obj = [&](double v1, double v2) {
        return eval_or_inf(p, v1, v2, [&](const StateModel& m, const HardThresholds& th) {
            const Rber r = rber(m, th);
            return std::max(r.msb, r.lsb);
        });
    };
    const int m = cfg.m_grid - 1;
    auto inner = [&](double v2) -> GridMinResult {
        if (!(v2 > p.v_min + cfg.tol)) return {};  // empty v1 interval: infeasible
        return grid_golden_min([&](double v1) { return gap_obj(v1, v2); }, p.v_min, v2, m,
                               cfg.tol);
    };
    GridMinResult outer = grid_golden_min(
        [&](double v2) {
            const GridMinResult r = inner(v2);
            return r.found ? r.value : kInf;
        },
        p.v_min, p.v_max, m, cfg.tol);
    if (!outer.found) throw DegenerateBracket("mrd: no feasible point");
    const GridMinResult best_inner = inner(outer.x);
    return finish(p, {best_inner.x, outer.x}, d_min, best_inner.value);
}

WriteResult baseline_mcc(const ChannelParams& p, int d_min, const WriteSearchConfig& cfg) {
    PointObjective obj = [&](double v1, double v2) {
        return eval_or_inf(p, v1, v2, [&](const StateModel& m, const HardThresholds& th) {
            return -hard_mutual_information(m, th);
        });
    };
    const CdResult r = coordinate_descent(p, obj, cfg);
    return finish(p, r.v, d_min, r.value);
}

WriteResult run_write_scheme(WriteScheme s, const ChannelParams& p, int d_min,
                             const WriteSearchConfig& cfg, std::optional<WriteVoltages> fixed) {
    switch (s) {
        case WriteScheme::Proposed: return optimize_write(p, d_min, cfg);
        case WriteScheme::Fixed: return baseline_fixed(p, d_min, fixed);
        case WriteScheme::MinRber: return baseline_min_rber(p, d_min, cfg);
        case WriteScheme::Mrd: return baseline_mrd(p, d_min, cfg);
        case WriteScheme::Mcc: return baseline_mcc(p, d_min, cfg);
    }
    throw std::invalid_argument("run_write_scheme: bad scheme");
}

std::array<std::array<double, 4>, 4> transition_matrix(const StateModel& m,
                                                       const HardThresholds& th) {
    const std::array<double, 5> edges = {-kInf, th.t1, th.t2, th.t3, kInf};
    std::array<std::array<double, 4>, 4> t{};
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h)
            t[g][h] = m.interval_mass(kStates[g], edges[h], edges[h + 1]);
    return t;
}

double hard_mutual_information(const StateModel& m, const HardThresholds& th) {
    const auto t = transition_matrix(m, th);
    std::array<double, 4> py{};
    for (int h = 0; h < 4; ++h)
        for (int g = 0; g < 4; ++g) py[h] += 0.25 * t[g][h];
    double mi = 0.0;
    for (int g = 0; g < 4; ++g)
        for (int h = 0; h < 4; ++h)
            if (t[g][h] > 0.0 && py[h] > 0.0)
                mi += 0.25 * t[g][h] * std::log2(t[g][h] / py[h]);
    return mi;
}

namespace {

double binom(int n, int r) {
    double c = 1.0;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
}

}  // namespace

double ml_ber_lsb(double p_cross_lsb, int d_min, const std::function<double(int)>& spectrum) {
    if (d_min < 1) throw std::invalid_argument("ml_ber_lsb: d_min must be positive");
    const int half_up = (d_min + 1) / 2;
    double sum = 0.0;
    const int d2 = 2 * ((d_min + 1) / 2);
    for (int d : {d_min, d2}) {
        sum += spectrum(d) * std::exp2(-std::ceil(1.5 * d)) * binom(d, (d + 1) / 2);
        if (d2 == d_min) break;  // the two summation indices coincide
    }
    return std::pow(p_cross_lsb, half_up) * sum;
}

double ml_ber_msb(double p_cross_msb, int d_min, const std::function<double(int)>& spectrum) {
    if (d_min < 1) throw std::invalid_argument("ml_ber_msb: d_min must be positive");
    const int half_up = (d_min + 1) / 2;
    double sum = 0.0;
    const int d2 = 2 * ((d_min + 1) / 2);
    for (int d : {d_min, d2}) {
        sum += spectrum(d) * std::exp2(-2.0 * d) * binom(d, (d + 1) / 2);
        if (d2 == d_min) break;
    }
    return std::pow(p_cross_msb, half_up) * sum;
}

}  // namespace flashsim
