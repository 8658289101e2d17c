#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flashsim/harness.hpp"

using namespace flashsim;

namespace {

// Small rate-1/2 code and cheap schemes keep campaign tests fast.
RunConfig small_cfg() {
    RunConfig cfg;
    cfg.code.n = 128;
    cfg.code.k = 64;
    cfg.code.dmin_override = 4;
    cfg.write.scheme = WriteScheme::Fixed;
    cfg.read.scheme = ReadScheme::Uniform;
    cfg.harness.frames = 256;
    cfg.harness.stop_min_events = 1'000'000'000;
    cfg.harness.threads = 1;
    return cfg;
}

bool same_result(const PointResult& a, const PointResult& b) {
    return a.pe == b.pe && a.t == b.t && a.ber_msb == b.ber_msb && a.ber_lsb == b.ber_lsb &&
           a.ber_total == b.ber_total && a.fer == b.fer && a.frames == b.frames &&
           a.events == b.events && a.mean_iters == b.mean_iters &&
           a.stopped_by_events == b.stopped_by_events;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("build_code attaches a distance estimate") {
    CodeConfig cfg;
    cfg.n = 24;
    cfg.k = 8;
    cfg.dmin_trials = 50;
    const LdpcCode code = build_code(cfg);
    CHECK(code.n() == 24);
    CHECK(code.k() == 8);
    CHECK(code.d_min_est() >= 1);
    cfg.dmin_override = 7;
    CHECK(build_code(cfg).d_min_est() == 7);
}

TEST_CASE("run_point is deterministic in the master seed") {
    const RunConfig cfg = small_cfg();
    const LdpcCode code = build_code(cfg.code);
    const PointResult a = run_point(cfg, code, 18000, 20000);
    const PointResult b = run_point(cfg, code, 18000, 20000);
    CHECK(same_result(a, b));
    CHECK(a.events > 0);  // the point is noisy enough to be informative
    RunConfig other = cfg;
    other.harness.master_seed = 999;
    const PointResult c = run_point(other, code, 18000, 20000);
    CHECK((c.events != a.events || c.ber_msb != a.ber_msb));
}

TEST_CASE("results do not depend on the worker count") {
    RunConfig cfg = small_cfg();
    cfg.harness.frames = 512;
    const LdpcCode code = build_code(cfg.code);
    cfg.harness.threads = 1;
    const PointResult one = run_point(cfg, code, 18000, 20000);
    cfg.harness.threads = 4;
    const PointResult four = run_point(cfg, code, 18000, 20000);
    CHECK(same_result(one, four));
    cfg.harness.threads = 3;  // does not divide the batch size
    const PointResult three = run_point(cfg, code, 18000, 20000);
    CHECK(same_result(one, three));
}

TEST_CASE("stop rule fires only at batch boundaries") {
    RunConfig cfg = small_cfg();
    cfg.harness.frames = 100000;
    cfg.harness.stop_min_events = 1;
    const LdpcCode code = build_code(cfg.code);
    const PointResult r = run_point(cfg, code, 18000, 20000);
    CHECK(r.stopped_by_events);
    CHECK(r.frames == 256);  // first batch already has events
    CHECK(r.events >= 1);

    cfg.harness.stop_min_events = 1'000'000'000;
    cfg.harness.frames = 300;
    const PointResult cap = run_point(cfg, code, 18000, 20000);
    CHECK(!cap.stopped_by_events);
    CHECK(cap.frames == 300);
}

TEST_CASE("ber accounting matches the raw counters") {
    const RunConfig cfg = small_cfg();
    const LdpcCode code = build_code(cfg.code);
    const PointResult r = run_point(cfg, code, 18000, 20000);
    const double bits = static_cast<double>(r.frames) * code.n();
    CHECK(r.ber_total == doctest::Approx((r.ber_msb + r.ber_lsb) / 2.0).epsilon(1e-12));
    CHECK(r.events == doctest::Approx((r.ber_msb + r.ber_lsb) * bits).epsilon(1e-9));
    CHECK(r.fer >= 0.0);
    CHECK(r.fer <= 1.0);
    CHECK(r.mean_iters >= 0.0);
}

TEST_CASE("clean channel leaves no residual errors") {
    RunConfig cfg = small_cfg();
    cfg.harness.frames = 64;
    const LdpcCode code = build_code(cfg.code);
    const PointResult r = run_point(cfg, code, 0, 0);
    CHECK(r.events == 0);
    CHECK(r.fer == 0.0);
    CHECK(r.mean_iters >= 1.0);  // one pass to confirm the clean syndrome
    CHECK(r.mean_iters < 1.5);
}

TEST_CASE("csv header and row layout") {
    std::ostringstream os;
    write_csv_header(os);
    CHECK(os.str() ==
          "pe,t_ret,write_scheme,read_scheme,ber_msb,ber_lsb,ber_total,fer,frames,events,"
          "mean_iters\n");
    PointResult r;
    r.pe = 6000;
    r.t = 15000;
    r.write_scheme = WriteScheme::Fixed;
    r.read_scheme = ReadScheme::Uniform;
    r.ber_msb = 0.015625;
    r.ber_lsb = 0.25;
    r.ber_total = 0.1328125;
    r.fer = 0.5;
    r.frames = 128;
    r.events = 4096;
    r.mean_iters = 3.5;
    std::ostringstream row;
    write_csv_row(row, r);
    CHECK(row.str() == "6000,15000,fixed,uniform,0.015625,0.25,0.1328125,0.5,128,4096,3.5\n");
}

TEST_CASE("sweep reruns emit byte-identical csv") {
    RunConfig cfg = small_cfg();
    cfg.harness.frames = 128;
    cfg.sweep.pe_list = {6000, 18000};
    cfg.sweep.t_list = {20000};
    const LdpcCode code = build_code(cfg.code);
    std::ostringstream a, b;
    const auto ra = run_sweep(cfg, code, &a);
    const auto rb = run_sweep(cfg, code, &b);
    CHECK(ra.size() == 2);
    CHECK(a.str() == b.str());
    CHECK(a.str().substr(0, 3) == "pe,");
}

TEST_CASE("lut nearest picks the closest grid point") {
    Lut lut;
    for (double pe : {0.0, 6000.0, 12000.0}) {
        LutRecord rec;
        rec.pe = pe;
        rec.t = 15000;
        rec.valid = true;
        lut.points.push_back(rec);
    }
    CHECK(lut.nearest(5000, 15000)->pe == 6000);
    CHECK(lut.nearest(100, 0)->pe == 0);
    CHECK(lut.nearest(1e9, 1e9)->pe == 12000);
    CHECK(Lut{}.nearest(0, 0) == nullptr);
}

TEST_CASE("lut save and load round-trip") {
    Lut lut;
    LutRecord good;
    good.pe = 6000;
    good.t = 15000;
    good.valid = true;
    good.v1 = 2.4721639722;
    good.v2 = 2.9558005661;
    good.theta = 0.4815347801;
    good.reads = {2.0608560882, 2.2037060308, 2.5403243915, 2.6672860692, 3.1459784745,
                  3.2690813559};
    good.c1 = 8.8753602628;
    good.c2 = 27.1893560963;
    good.d_min = 4;
    LutRecord bad;
    bad.pe = 0;
    bad.t = 0;
    bad.valid = false;
    bad.error = "theta is above the entropy peak at a hard threshold";
    lut.points = {good, bad};

    std::ostringstream os;
    lut.save(os);
    std::istringstream is(os.str());
    const Lut back = Lut::load(is);
    REQUIRE(back.points.size() == 2);
    const LutRecord& g = back.points[0];
    CHECK(g.valid);
    CHECK(g.pe == 6000);
    CHECK(g.v1 == doctest::Approx(good.v1).epsilon(1e-8));
    CHECK(g.v2 == doctest::Approx(good.v2).epsilon(1e-8));
    CHECK(g.theta == doctest::Approx(good.theta).epsilon(1e-8));
    for (int i = 0; i < 6; ++i)
        CHECK(g.reads[i] == doctest::Approx(good.reads[i]).epsilon(1e-8));
    CHECK(g.c1 == doctest::Approx(good.c1).epsilon(1e-8));
    CHECK(g.d_min == 4);
    CHECK(!back.points[1].valid);
    CHECK(back.points[1].error == bad.error);
}

TEST_CASE("lut load rejects malformed files") {
    auto load_text = [](const std::string& text) {
        std::istringstream is(text);
        Lut::load(is);
    };
    CHECK_THROWS_AS(load_text("[point pe=1]\nvalid = 1\n"), ConfigError);
    CHECK_THROWS_AS(load_text("[point pe=1 t=2 x=3]\n"), ConfigError);
    CHECK_THROWS_AS(load_text("[other]\n"), ConfigError);
    CHECK_THROWS_AS(load_text("v1 = 2\n"), ConfigError);
    CHECK_THROWS_AS(load_text("[point pe=1 t=2]\nbogus = 3\n"), ConfigError);
    CHECK_THROWS_AS(Lut::load_file("/nonexistent/lut.txt"), ConfigError);
}

TEST_CASE("resolved points honor the lut verbatim") {
    RunConfig cfg = small_cfg();
    cfg.read.scheme = ReadScheme::Proposed;  // would need weights without the lut
    const LdpcCode code = build_code(cfg.code);
    Lut lut;
    LutRecord rec;
    rec.pe = 6000;
    rec.t = 15000;
    rec.valid = true;
    rec.v1 = 2.47;
    rec.v2 = 2.96;
    rec.theta = 0.48;
    rec.reads = {2.06, 2.20, 2.54, 2.67, 3.15, 3.27};
    rec.c1 = 8.9;
    rec.c2 = 27.2;
    rec.d_min = 4;
    lut.points.push_back(rec);

    const ResolvedPoint rp = resolve_point(cfg, code, 6100, 14900, &lut);
    CHECK(rp.write.v1 == 2.47);
    CHECK(rp.write.v2 == 2.96);
    for (int i = 0; i < 6; ++i) CHECK(rp.reads.r[i] == rec.reads[i]);
    CHECK(rp.theta == 0.48);
    CHECK(rp.d_min == 4);

    lut.points[0].valid = false;
    lut.points[0].error = "boom";
    CHECK_THROWS_AS(resolve_point(cfg, code, 6000, 15000, &lut), MissingDependency);
    const Lut empty;
    CHECK_THROWS_AS(resolve_point(cfg, code, 6000, 15000, &empty), MissingDependency);
}

TEST_CASE("proposed reads without weights fail loudly") {
    RunConfig cfg = small_cfg();
    cfg.read.scheme = ReadScheme::Proposed;
    const LdpcCode code = build_code(cfg.code);
    try {
        run_point(cfg, code, 6000, 15000);
        FAIL("expected MissingDependency");
    } catch (const MissingDependency& e) {
        CHECK(std::string(e.what()).find("weights") != std::string::npos);
    }
}

TEST_CASE("build_lut records failures without aborting") {
    RunConfig cfg = small_cfg();
    cfg.read.weights = CostWeights{8.875, 27.189};
    cfg.sweep.pe_list = {200000, 6000};  // extreme wear: write search infeasible
    cfg.sweep.t_list = {15000};
    const LdpcCode code = build_code(cfg.code);
    std::ostringstream log;
    const Lut lut = build_lut(cfg, code, &log);
    REQUIRE(lut.points.size() == 2);
    CHECK(lut.points[0].pe == 200000);
    CHECK(!lut.points[0].valid);
    CHECK(!lut.points[0].error.empty());
    CHECK(lut.points[1].valid);
    CHECK(lut.points[1].v1 > cfg.channel.v_min);
    CHECK(lut.points[1].v1 < lut.points[1].v2);
    CHECK(lut.points[1].theta > 0.05);
    CHECK(lut.points[1].theta < 0.95);
    CHECK(lut.points[1].c1 == 8.875);
    CHECK(log.str().find("invalid") != std::string::npos);

    RunConfig bare = small_cfg();
    CHECK_THROWS_AS(build_lut(bare, code, nullptr), MissingDependency);
}

TEST_CASE("calibration round-trip and measurement") {
    Calibration cal;
    cal.pe = 6000;
    cal.t = 15000;
    cal.d_min = 4;
    cal.weights = {8.875360262782158, 27.189356096277706};
    cal.theta_grid = {0.25, 0.45, 0.65};
    cal.ber = {6.5e-4, 4.8e-4, 5.7e-4};
    cal.cost_pe = {4.0e-4, 3.95e-4, 4.4e-4};
    cal.cost_llr = {2.7e-4, 2.36e-4, 2.29e-4};
    std::ostringstream os;
    cal.save(os);
    std::istringstream is(os.str());
    const Calibration back = Calibration::load(is);
    CHECK(back.pe == cal.pe);
    CHECK(back.d_min == 4);
    CHECK(back.weights.c1 == cal.weights.c1);  // format_double is exact
    CHECK(back.weights.c2 == cal.weights.c2);
    CHECK(back.theta_grid == cal.theta_grid);
    CHECK(back.ber == cal.ber);
    CHECK(back.cost_pe == cal.cost_pe);
    CHECK(back.cost_llr == cal.cost_llr);

    std::istringstream junk("[calibration]\nwat = 1\n");
    CHECK_THROWS_AS(Calibration::load(junk), ConfigError);
    std::istringstream empty("");
    CHECK_THROWS_AS(Calibration::load(empty), ConfigError);
}

TEST_CASE("run_calibration fits finite weights on a small campaign") {
    RunConfig cfg = small_cfg();
    cfg.write.fixed = WriteVoltages{2.6, 3.3};
    cfg.calibrate.theta_grid = {0.2, 0.35, 0.55, 0.8};
    cfg.calibrate.frames = 40;
    const LdpcCode code = build_code(cfg.code);
    const Calibration cal = run_calibration(cfg, code, 6000, 15000);
    CHECK(cal.pe == 6000);
    CHECK(cal.d_min == 4);
    REQUIRE(cal.theta_grid.size() >= 3);
    CHECK(cal.ber.size() == cal.theta_grid.size());
    CHECK(cal.cost_pe.size() == cal.theta_grid.size());
    CHECK(cal.cost_llr.size() == cal.theta_grid.size());
    CHECK(std::isfinite(cal.weights.c1));
    CHECK(std::isfinite(cal.weights.c2));
    for (double c : cal.cost_pe) CHECK(c > 0.0);
}

}  // TEST_SUITE
