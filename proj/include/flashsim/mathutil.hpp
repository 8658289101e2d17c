#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace flashsim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper tail of the standard normal, Q(z) = P(Z > z).
inline double gauss_tail(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// P(a < X < b) for X ~ N(mu, sigma^2).  Endpoints may be +-inf.  Evaluated
// from whichever tail is smaller so that narrow far-out intervals do not
// cancel to zero.
inline double gauss_interval(double mu, double sigma, double a, double b) {
    if (!(b > a)) return 0.0;
    const double za = (a - mu) / sigma;  // -inf allowed
    const double zb = (b - mu) / sigma;
    if (za >= 0.0) return gauss_tail(za) - gauss_tail(zb);        // right tail
    if (zb <= 0.0) return gauss_tail(-zb) - gauss_tail(-za);      // left tail
    return 1.0 - gauss_tail(-za) - gauss_tail(zb);                // straddles mean
}

inline double gauss_pdf(double mu, double sigma, double v) {
    const double z = (v - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

inline double gauss_log_pdf(double mu, double sigma, double v) {
    const double z = (v - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
}

struct DegenerateBracket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Golden-section minimisation of a unimodal f on [a, b] to x-tolerance tol.
template <typename F>
double golden_min(F&& f, double a, double b, double tol) {
    if (!(b > a)) throw DegenerateBracket("golden_min: empty bracket");
    constexpr double r = 0.6180339887498949;  // 1/phi
    double x1 = b - r * (b - a);
    double x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1; f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2; f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

struct GridMinResult {
    double x = 0.0;
    double value = kInf;
    bool found = false;  // false when every probe evaluated to +inf
};

// Scan m+1 evenly spaced points of [lo, hi], then golden-refine inside the
// bracket around the best probe.  f may return +inf for infeasible points;
// the bracket is shrunk to the feasible neighbourhood of the minimiser.
template <typename F>
GridMinResult grid_golden_min(F&& f, double lo, double hi, int m, double tol) {
    GridMinResult res;
    if (!(hi > lo) || m < 2) throw DegenerateBracket("grid_golden_min: bad bracket");
    std::vector<double> xs(m + 1), vs(m + 1);
    int best = -1;
    for (int i = 0; i <= m; ++i) {
        xs[i] = lo + (hi - lo) * i / m;
        vs[i] = f(xs[i]);
        if (std::isfinite(vs[i]) && (best < 0 || vs[i] < vs[best])) best = i;
    }
    if (best < 0) return res;  // nothing feasible
    double a = xs[best > 0 ? best - 1 : 0];
    double b = xs[best < m ? best + 1 : m];
    if (best > 0 && !std::isfinite(vs[best - 1])) a = 0.5 * (xs[best - 1] + xs[best]);
    if (best < m && !std::isfinite(vs[best + 1])) b = 0.5 * (xs[best] + xs[best + 1]);
    double x = (b > a) ? golden_min(f, a, b, tol) : xs[best];
    double v = f(x);
    if (!(v <= vs[best])) { x = xs[best]; v = vs[best]; }  // golden never worsens the probe
    res.x = x;
    res.value = v;
    res.found = true;
    return res;
}

// Bisection for f(x) = 0 with a sign change on [a, b].
template <typename F>
double bisect(F&& f, double a, double b, double xtol, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw DegenerateBracket("bisect: no sign change");
    for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) { a = m; fa = fm; } else { b = m; fb = fm; }
    }
    return 0.5 * (a + b);
}

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ordinary least squares for a small dense system: returns beta minimising
// ||X beta - y||^2 via normal equations with partial pivoting.
inline std::vector<double> ols_solve(const std::vector<std::vector<double>>& rows,
                                     const std::vector<double>& y) {
    const size_t n = rows.size();
    if (n == 0 || rows[0].empty() || y.size() != n)
        throw RankDeficient("ols_solve: empty or mismatched system");
    const size_t p = rows[0].size();
    if (n < p) throw RankDeficient("ols_solve: fewer rows than unknowns");
    // Normal equations A = X'X, b = X'y.
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (size_t r = 0; r < n; ++r) {
        for (size_t i = 0; i < p; ++i) {
            for (size_t j = 0; j < p; ++j) a[i][j] += rows[r][i] * rows[r][j];
            a[i][p] += rows[r][i] * y[r];
        }
    }
    for (size_t col = 0; col < p; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-12) throw RankDeficient("ols_solve: singular design");
        std::swap(a[col], a[piv]);
        for (size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double m = a[r][col] / a[col][col];
            for (size_t j = col; j <= p; ++j) a[r][j] -= m * a[col][j];
        }
    }
    std::vector<double> beta(p);
    for (size_t i = 0; i < p; ++i) beta[i] = a[i][p] / a[i][i];
    return beta;
}

}  // namespace flashsim
