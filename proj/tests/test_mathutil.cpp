#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flashsim/mathutil.hpp"
#include "flashsim/rng.hpp"

using namespace flashsim;

namespace {

// Simpson quadrature ground truth for Gaussian interval masses.
double simpson_gauss(double mu, double sigma, double a, double b, int n = 4000) {
    double s = 0.0;
    const double h = (b - a) / n;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * gauss_pdf(mu, sigma, a + i * h);
    }
    return s * h / 3.0;
}

}  // namespace

TEST_SUITE("mathutil") {

TEST_CASE("gauss_tail matches reference values") {
    CHECK(gauss_tail(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(gauss_tail(1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-12));
    CHECK(gauss_tail(-1.0) == doctest::Approx(1.0 - 0.15865525393145707).epsilon(1e-12));
    CHECK(gauss_tail(3.0) == doctest::Approx(0.0013498980316300945).epsilon(1e-12));
    // Far tail stays positive instead of flushing to zero.
    CHECK(gauss_tail(38.0) > 0.0);
    CHECK(gauss_tail(38.0) < 1e-300);
}

TEST_CASE("gauss_interval agrees with quadrature") {
    CHECK(gauss_interval(0.0, 1.0, -1.0, 1.0) ==
          doctest::Approx(simpson_gauss(0.0, 1.0, -1.0, 1.0)).epsilon(1e-10));
    CHECK(gauss_interval(2.0, 0.5, 2.1, 3.7) ==
          doctest::Approx(simpson_gauss(2.0, 0.5, 2.1, 3.7)).epsilon(1e-10));
    CHECK(gauss_interval(-1.0, 2.0, -8.0, -4.0) ==
          doctest::Approx(simpson_gauss(-1.0, 2.0, -8.0, -4.0)).epsilon(1e-10));
}

TEST_CASE("gauss_interval handles infinite endpoints and degenerate input") {
    CHECK(gauss_interval(0.0, 1.0, -kInf, kInf) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(gauss_interval(0.0, 1.0, -kInf, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(gauss_interval(0.0, 1.0, 0.0, kInf) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(gauss_interval(0.0, 1.0, 1.0, 1.0) == 0.0);
    CHECK(gauss_interval(0.0, 1.0, 2.0, 1.0) == 0.0);
}

TEST_CASE("gauss_interval keeps precision in far tails") {
    // Naive cdf(b) - cdf(a) cancels to 0 here; the tail-side evaluation must not.
    const double m = gauss_interval(0.0, 1.0, 38.0, 39.0);
    CHECK(m > 0.0);
    // Q(39) is ~17 orders below Q(38), so the mass is Q(38) to double precision.
    CHECK(m <= gauss_tail(38.0));
    CHECK(m >= 0.99 * gauss_tail(38.0));
    // At a resolvable separation the upper cut genuinely reduces the mass.
    const double n = gauss_interval(0.0, 1.0, 8.0, 8.5);
    CHECK(n > 0.0);
    CHECK(n < gauss_tail(8.0));
    // Mirror symmetry between the two tails.
    CHECK(gauss_interval(0.0, 1.0, -39.0, -38.0) == doctest::Approx(m).epsilon(1e-12));
}

TEST_CASE("gauss_log_pdf is log of gauss_pdf and survives underflow") {
    CHECK(std::log(gauss_pdf(1.0, 0.3, 1.2)) ==
          doctest::Approx(gauss_log_pdf(1.0, 0.3, 1.2)).epsilon(1e-12));
    CHECK(gauss_pdf(0.0, 0.05, 3.0) == 0.0);  // underflows
    CHECK(std::isfinite(gauss_log_pdf(0.0, 0.05, 3.0)));
}

TEST_CASE("golden_min finds the minimum of a unimodal function") {
    const double x = golden_min([](double v) { return (v - 2.0) * (v - 2.0); }, 0.0, 5.0, 1e-9);
    CHECK(x == doctest::Approx(2.0).epsilon(1e-7));
    const double y = golden_min([](double v) { return std::cosh(v - 0.7); }, -3.0, 4.0, 1e-9);
    CHECK(y == doctest::Approx(0.7).epsilon(1e-7));
    CHECK_THROWS_AS(golden_min([](double v) { return v; }, 1.0, 1.0, 1e-9), DegenerateBracket);
}

TEST_CASE("grid_golden_min refines past grid resolution") {
    auto f = [](double v) { return (v - 2.3456) * (v - 2.3456); };
    const GridMinResult r = grid_golden_min(f, 0.0, 5.0, 10, 1e-8);
    CHECK(r.found);
    CHECK(r.x == doctest::Approx(2.3456).epsilon(1e-6));
    // Never worse than the best grid probe.
    double best_probe = kInf;
    for (int i = 0; i <= 10; ++i) best_probe = std::min(best_probe, f(0.0 + 5.0 * i / 10));
    CHECK(r.value <= best_probe);
}

TEST_CASE("grid_golden_min tolerates infeasible regions") {
    auto f = [](double v) { return v < 1.0 ? kInf : (v - 1.8) * (v - 1.8); };
    const GridMinResult r = grid_golden_min(f, 0.0, 5.0, 20, 1e-8);
    CHECK(r.found);
    CHECK(r.x == doctest::Approx(1.8).epsilon(1e-6));

    const GridMinResult none = grid_golden_min([](double) { return kInf; }, 0.0, 1.0, 10, 1e-8);
    CHECK_FALSE(none.found);

    CHECK_THROWS_AS(grid_golden_min([](double v) { return v; }, 0.0, 1.0, 1, 1e-8),
                    DegenerateBracket);
    CHECK_THROWS_AS(grid_golden_min([](double v) { return v; }, 1.0, 0.0, 10, 1e-8),
                    DegenerateBracket);
}

TEST_CASE("grid_golden_min picks the minimum at a bracket boundary") {
    // Monotone decreasing: the optimum sits at the right edge of the range.
    auto f = [](double v) { return -v; };
    const GridMinResult r = grid_golden_min(f, 0.0, 2.0, 8, 1e-9);
    CHECK(r.found);
    CHECK(r.x == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("bisect locates a sign change") {
    const double root = bisect([](double v) { return std::cos(v); }, 0.0, 2.0, 1e-12);
    CHECK(root == doctest::Approx(M_PI / 2).epsilon(1e-10));
    CHECK_THROWS_AS(bisect([](double v) { return v * v + 1.0; }, -1.0, 1.0, 1e-12),
                    DegenerateBracket);
    // Exact hits at either end return immediately.
    CHECK(bisect([](double v) { return v; }, 0.0, 1.0, 1e-12) == 0.0);
    CHECK(bisect([](double v) { return v - 1.0; }, 0.0, 1.0, 1e-12) == 1.0);
}

TEST_CASE("ols_solve recovers planted coefficients") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        const double a = u(rng), b = u(rng);
        rows.push_back({1.0, a, b});
        y.push_back(0.25 - 3.0 * a + 2.0 * b);
    }
    const std::vector<double> beta = ols_solve(rows, y);
    REQUIRE(beta.size() == 3);
    CHECK(beta[0] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(beta[1] == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(beta[2] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("ols_solve rejects degenerate systems") {
    CHECK_THROWS_AS(ols_solve({}, {}), RankDeficient);
    CHECK_THROWS_AS(ols_solve({{1.0, 2.0}}, {1.0}), RankDeficient);  // fewer rows than unknowns
    // Collinear columns.
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
        rows.push_back({1.0, static_cast<double>(i), 2.0 * i});
        y.push_back(i);
    }
    CHECK_THROWS_AS(ols_solve(rows, y), RankDeficient);
}

TEST_CASE("rng streams are deterministic and frame-indexed") {
    std::mt19937_64 a = make_stream(123, 456, 7);
    std::mt19937_64 b = make_stream(123, 456, 7);
    CHECK(a() == b());
    std::mt19937_64 c = make_stream(123, 456, 8);
    std::mt19937_64 d = make_stream(124, 456, 7);
    std::mt19937_64 e = make_stream(123, 457, 7);
    const uint64_t first = make_stream(123, 456, 7)();
    CHECK(c() != first);
    CHECK(d() != first);
    CHECK(e() != first);
    CHECK(mix64(1) != mix64(2));
    CHECK(mix64(1) == mix64(1));
}

}  // TEST_SUITE
