#include "flashsim/readopt.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

#include "flashsim/mathutil.hpp"

namespace flashsim {

void ReadVoltages::validate() const {
    for (int i = 0; i + 1 < 6; ++i)
        if (!(r[i] < r[i + 1]))
            throw OverlapError("read voltages must be strictly increasing");
}

double entropy(const StateModel& m, double v) {
    // Posterior over states in log-space; subtracting the max keeps the
    // dominant weight at exp(0) even deep in the tails.
    std::array<double, 4> lp{};
    double top = -kInf;
    for (int i = 0; i < 4; ++i) {
        lp[i] = m.log_pdf(kStates[i], v);
        top = std::max(top, lp[i]);
    }
    double sum = 0.0;
    std::array<double, 4> w{};
    for (int i = 0; i < 4; ++i) {
        w[i] = std::exp(lp[i] - top);
        sum += w[i];
    }
    double h = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double q = w[i] / sum;
        if (q > 0.0) h -= q * std::log2(q);
    }
    return h;
}

namespace {

// One H(v)=theta root: walk outward from t until H drops below theta, then
// bisect the bracketing step.  `dir` is -1 for the left flank, +1 for right.
double flank_root(const StateModel& m, double t, double theta, double sigma_loc, int dir) {
    const double step = sigma_loc / 20.0;
    const double reach = 6.0 * sigma_loc;
    double prev = t;
    for (double d = step; d <= reach + 0.5 * step; d += step) {
        const double x = t + dir * d;
        if (entropy(m, x) < theta) {
            double a = std::min(prev, x), b = std::max(prev, x);
            const double root = bisect([&](double v) { return entropy(m, v) - theta; }, a, b,
                                       1e-13);
            if (std::fabs(entropy(m, root) - theta) > 1e-9)
                throw ThetaOutOfRange("entropy root residual too large");
            return root;
        }
        prev = x;
    }
    throw ThetaOutOfRange("H(v)=theta has no root within 6 sigma of the threshold");
}

}  // namespace

ReadVoltages solve_read_voltages(const StateModel& m, double theta) {
    if (!(theta > 0.0) || !(theta < 1.0))
        throw ThetaOutOfRange("theta must lie strictly inside (0, 1)");
    const HardThresholds th = hard_thresholds(m);
    ReadVoltages out;
    out.theta = theta;
    for (int k = 0; k < 3; ++k) {
        const double t = th[k];
        if (entropy(m, t) <= theta)
            throw ThetaOutOfRange("theta is above the entropy peak at a hard threshold");
        const double sigma_loc = std::min(m.sigma[k], m.sigma[k + 1]);
        out.r[2 * k] = flank_root(m, t, theta, sigma_loc, -1);
        out.r[2 * k + 1] = flank_root(m, t, theta, sigma_loc, +1);
    }
    for (int i = 0; i + 1 < 6; ++i)
        if (!(out.r[i] < out.r[i + 1]))
            throw OverlapError("adjacent read windows crossed; theta too small");
    return out;
}

LlrTable llr_table(const StateModel& m, const ReadVoltages& reads) {
    reads.validate();
    std::array<double, 8> edges;
    edges[0] = -kInf;
    for (int i = 0; i < 6; ++i) edges[i + 1] = reads.r[i];
    edges[7] = kInf;

    LlrTable t;
    for (int i = 0; i < 7; ++i) {
        std::array<double, 4> mass{};
        for (int s = 0; s < 4; ++s)
            mass[s] = m.interval_mass(kStates[s], edges[i], edges[i + 1]);
        auto llr_of = [](double num, double den) {
            if (num <= 0.0 && den <= 0.0) return 0.0;
            if (num <= 0.0) return -kLlrClamp;
            if (den <= 0.0) return kLlrClamp;
            return std::clamp(std::log(num / den), -kLlrClamp, kLlrClamp);
        };
        // Positive LLR <=> bit 0 more likely: numerators collect bit-0 states.
        const double msb0 = mass[2] + mass[3], msb1 = mass[0] + mass[1];
        const double lsb0 = mass[1] + mass[2], lsb1 = mass[0] + mass[3];
        t.l_msb[i] = llr_of(msb0, msb1);
        t.l_lsb[i] = llr_of(lsb0, lsb1);
        const int dec_msb = t.l_msb[i] >= 0.0 ? 0 : 1;
        const int dec_lsb = t.l_lsb[i] >= 0.0 ? 0 : 1;
        for (int s = 0; s < 4; ++s) {
            if (msb_of(kStates[s]) != dec_msb) t.p_msb[i] += 0.25 * mass[s];
            if (lsb_of(kStates[s]) != dec_lsb) t.p_lsb[i] += 0.25 * mass[s];
        }
    }
    return t;
}

Alphas alphas(const LlrTable& t) {
    Alphas a;
    for (int i = 0; i < 7; ++i) {
        a.pe_lsb += std::fabs(t.l_lsb[i]) * t.p_lsb[i];
        a.llr_lsb += t.l_lsb[i] * t.p_lsb[i];
        a.pe_msb += std::fabs(t.l_msb[i]) * t.p_msb[i];
        a.llr_msb += t.l_msb[i] * t.p_msb[i];
    }
    return a;
}

double read_cost_pe(const Alphas& a, int d_min) {
    return std::exp2(-1.5 * d_min) * a.pe_lsb + std::exp2(-2.0 * d_min) * a.pe_msb;
}

double read_cost_llr(const Alphas& a, int d_min) {
    return std::exp2(-1.5 * d_min) * a.llr_lsb + std::exp2(-2.0 * d_min) * a.llr_msb;
}

double read_cost(const Alphas& a, int d_min, const CostWeights& w) {
    return w.c1 * read_cost_pe(a, d_min) + w.c2 * read_cost_llr(a, d_min);
}

CostWeights calibrate_weights(std::span<const double> theta_grid, std::span<const double> ber,
                              std::span<const double> cost_pe,
                              std::span<const double> cost_llr) {
    const size_t n = theta_grid.size();
    if (n < 3) throw RankDeficient("calibrate_weights: need at least 3 grid points");
    if (ber.size() != n || cost_pe.size() != n || cost_llr.size() != n)
        throw RankDeficient("calibrate_weights: sample vectors misaligned");
    // Scale the regressors to O(1) so the pivot tolerance is meaningful.
    double s1 = 0.0, s2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        s1 = std::max(s1, std::fabs(cost_pe[i]));
        s2 = std::max(s2, std::fabs(cost_llr[i]));
    }
    if (s1 == 0.0 || s2 == 0.0) throw RankDeficient("calibrate_weights: constant regressor");
    std::vector<std::vector<double>> rows(n);
    std::vector<double> y(ber.begin(), ber.end());
    for (size_t i = 0; i < n; ++i) rows[i] = {cost_pe[i] / s1, cost_llr[i] / s2, 1.0};
    const std::vector<double> beta = ols_solve(rows, y);
    return {beta[0] / s1, beta[1] / s2};
}

ThetaResult optimize_theta(const StateModel& m, int d_min, const CostWeights& w, double lo,
                           double hi, double tol) {
    if (!(lo > 0.0) || !(hi < 1.0) || !(lo < hi))
        throw ThetaOutOfRange("optimize_theta: bounds must satisfy 0 < lo < hi < 1");
    std::exception_ptr last_error;
    auto cost_at = [&](double theta) {
        try {
            const ReadVoltages rv = solve_read_voltages(m, theta);
            return read_cost(alphas(llr_table(m, rv)), d_min, w);
        } catch (const ThetaOutOfRange&) {
            last_error = std::current_exception();
            return kInf;
        } catch (const OverlapError&) {
            last_error = std::current_exception();
            return kInf;
        }
    };
    // Coarse scan guards the golden refinement against infeasible edges.
    GridMinResult res = grid_golden_min(cost_at, lo, hi, 64, tol);
    if (!res.found) {
        const double span = hi - lo;
        res = grid_golden_min(cost_at, lo + 0.25 * span, hi - 0.25 * span, 64, tol);
    }
    if (!res.found) {
        if (last_error) std::rethrow_exception(last_error);
        throw ThetaOutOfRange("optimize_theta: no feasible theta in bounds");
    }
    ThetaResult out;
    out.theta_star = res.x;
    out.reads = solve_read_voltages(m, res.x);
    out.cost = res.value;
    return out;
}

ReadVoltages uniform_reads(const StateModel& m) {
    ReadVoltages out;
    const double lo = m.mu[0], hi = m.mu[3];
    for (int k = 1; k <= 6; ++k) out.r[k - 1] = lo + (hi - lo) * k / 7.0;
    return out;
}

double soft_mutual_information(const StateModel& m, const ReadVoltages& reads) {
    std::array<double, 8> edges;
    edges[0] = -kInf;
    for (int i = 0; i < 6; ++i) edges[i + 1] = reads.r[i];
    edges[7] = kInf;
    std::array<std::array<double, 7>, 4> t{};
    std::array<double, 7> py{};
    for (int g = 0; g < 4; ++g)
        for (int i = 0; i < 7; ++i) {
            t[g][i] = m.interval_mass(kStates[g], edges[i], edges[i + 1]);
            py[i] += 0.25 * t[g][i];
        }
    double mi = 0.0;
    for (int g = 0; g < 4; ++g)
        for (int i = 0; i < 7; ++i)
            if (t[g][i] > 0.0 && py[i] > 0.0) mi += 0.25 * t[g][i] * std::log2(t[g][i] / py[i]);
    return mi;
}

ReadVoltages mmi_reads(const StateModel& m) {
    ReadVoltages cur = uniform_reads(m);
    const double lo_lim = m.mu[0] - 6.0 * m.sigma[0];
    const double hi_lim = m.mu[3] + 6.0 * m.sigma[3];
    const double sep = 1e-6;  // keep voltages strictly increasing

    auto ascend_pass = [&](double step) {
        bool moved = false;
        for (int k = 0; k < 6; ++k) {
            const double lo = (k == 0 ? lo_lim : cur.r[k - 1] + sep);
            const double hi = (k == 5 ? hi_lim : cur.r[k + 1] - sep);
            double best_x = cur.r[k];
            double best_mi = soft_mutual_information(m, cur);
            for (double x = lo; x <= hi; x += step) {
                ReadVoltages probe = cur;
                probe.r[k] = x;
                const double mi = soft_mutual_information(m, probe);
                if (mi > best_mi) {
                    best_mi = mi;
                    best_x = x;
                }
            }
            if (best_x != cur.r[k]) {
                cur.r[k] = best_x;
                moved = true;
            }
        }
        return moved;
    };

    // Cyclic coordinate ascent on a 1 mV grid until it settles...
    for (int pass = 0; pass < 32; ++pass)
        if (!ascend_pass(1e-3)) break;
    // ...then two local refinement passes at finer steps.
    auto refine_pass = [&](double step) {
        for (int k = 0; k < 6; ++k) {
            const double lo = std::max(k == 0 ? lo_lim : cur.r[k - 1] + sep, cur.r[k] - 2e-3);
            const double hi = std::min(k == 5 ? hi_lim : cur.r[k + 1] - sep, cur.r[k] + 2e-3);
            double best_x = cur.r[k];
            double best_mi = soft_mutual_information(m, cur);
            for (double x = lo; x <= hi; x += step) {
                ReadVoltages probe = cur;
                probe.r[k] = x;
                const double mi = soft_mutual_information(m, probe);
                if (mi > best_mi) {
                    best_mi = mi;
                    best_x = x;
                }
            }
            cur.r[k] = best_x;
        }
    };
    refine_pass(1e-4);
    refine_pass(1e-5);
    cur.theta.reset();
    return cur;
}

ReadScheme parse_read_scheme(const std::string& name) {
    if (name == "proposed") return ReadScheme::Proposed;
    if (name == "uniform") return ReadScheme::Uniform;
    if (name == "mmi") return ReadScheme::Mmi;
    if (name == "entropy-fixed") return ReadScheme::EntropyFixed;
    throw std::invalid_argument("unknown read scheme '" + name + "'");
}

std::string to_string(ReadScheme s) {
    switch (s) {
        case ReadScheme::Proposed: return "proposed";
        case ReadScheme::Uniform: return "uniform";
        case ReadScheme::Mmi: return "mmi";
        case ReadScheme::EntropyFixed: return "entropy-fixed";
    }
    return "?";
}

}  // namespace flashsim
