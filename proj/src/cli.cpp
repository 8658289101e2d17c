#include "flashsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "flashsim/config.hpp"
#include "flashsim/harness.hpp"
#include "flashsim/mathutil.hpp"
#include "flashsim/readopt.hpp"
#include "flashsim/writeopt.hpp"

namespace flashsim::cli {

namespace {

struct State {
    std::string config_path;
    std::string out_path;
    std::string lut_path;
    std::string calibration_path;
    std::string alist_path;
    std::string weights_str;
    std::string write_scheme;
    std::string read_scheme;
    double pe = 0.0, t = 0.0, theta = 0.0;
    double v1 = 0.0, v2 = 0.0;
    long long frames = 0;
    uint64_t seed = 0;
    int threads = 0;
    int dmin = 0;
    int trials = 0;
};

void build_app(CLI::App& app, State& st) {
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", st.config_path, "Path to the run configuration file");
        sub->add_option("--pe", st.pe, "Programme/erase cycle count for this run");
        sub->add_option("--t", st.t, "Retention time for this run");
    };

    CLI::App* inspect = app.add_subcommand(
        "inspect", "Print the state model, hard thresholds, RBERs, and an entropy trace");
    add_common(inspect);
    inspect->add_option("--v1", st.v1, "Lower write voltage to inspect at");
    inspect->add_option("--v2", st.v2, "Upper write voltage to inspect at");
    inspect->add_option("-o,--out", st.out_path, "Write the report to this file");

    CLI::App* ow = app.add_subcommand("optimize-write", "Choose write voltages for one scheme");
    add_common(ow);
    ow->add_option("--scheme", st.write_scheme,
                   "Write scheme: proposed, fixed, min-rber, mrd, mcc");
    ow->add_option("--dmin", st.dmin, "Minimum-distance value to use (skips estimation)");
    ow->add_option("-o,--out", st.out_path, "Write the CSV row to this file");

    CLI::App* ord = app.add_subcommand("optimize-read", "Choose read voltages for one scheme");
    add_common(ord);
    ord->add_option("--scheme", st.read_scheme,
                    "Read scheme: proposed, uniform, mmi, entropy-fixed");
    ord->add_option("--theta", st.theta, "Entropy level for the entropy-fixed scheme");
    ord->add_option("--weights", st.weights_str, "Cost weights as 'c1,c2'");
    ord->add_option("--calibration", st.calibration_path, "Calibration file with cost weights");
    ord->add_option("--dmin", st.dmin, "Minimum-distance value to use (skips estimation)");
    ord->add_option("-o,--out", st.out_path, "Write the CSV row to this file");

    CLI::App* cal = app.add_subcommand("calibrate", "Fit cost weights from a BER campaign");
    add_common(cal);
    cal->add_option("--frames", st.frames, "Frames per theta grid point");
    cal->add_option("--seed", st.seed, "Master seed override");
    cal->add_option("--threads", st.threads, "Worker thread cap");
    cal->add_option("--dmin", st.dmin, "Minimum-distance value to use (skips estimation)");
    cal->add_option("-o,--out", st.out_path, "Calibration file to write")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo BER campaign over a (PE, T) grid");
    sweep->add_option("--config", st.config_path, "Path to the run configuration file");
    sweep->add_option("--frames", st.frames, "Frame cap per grid point");
    sweep->add_option("--seed", st.seed, "Master seed override");
    sweep->add_option("--threads", st.threads, "Worker thread cap");
    sweep->add_option("--write-scheme", st.write_scheme,
                      "Write scheme: proposed, fixed, min-rber, mrd, mcc");
    sweep->add_option("--read-scheme", st.read_scheme,
                      "Read scheme: proposed, uniform, mmi, entropy-fixed");
    sweep->add_option("--theta", st.theta, "Entropy level for the entropy-fixed scheme");
    sweep->add_option("--weights", st.weights_str, "Cost weights as 'c1,c2'");
    sweep->add_option("--calibration", st.calibration_path, "Calibration file with cost weights");
    sweep->add_option("--use-lut", st.lut_path, "Take voltages from this LUT file");
    sweep->add_option("--dmin", st.dmin, "Minimum-distance value to use (skips estimation)");
    sweep->add_option("-o,--out", st.out_path, "Write the CSV to this file");

    CLI::App* lut = app.add_subcommand("build-lut", "Optimize and store every grid point");
    lut->add_option("--config", st.config_path, "Path to the run configuration file");
    lut->add_option("--weights", st.weights_str, "Cost weights as 'c1,c2'");
    lut->add_option("--calibration", st.calibration_path, "Calibration file with cost weights");
    lut->add_option("--dmin", st.dmin, "Minimum-distance value to use (skips estimation)");
    lut->add_option("-o,--out", st.out_path, "LUT file to write")->required();

    CLI::App* dm = app.add_subcommand("dmin", "Estimate the code's minimum distance");
    dm->add_option("--config", st.config_path, "Path to the run configuration file");
    dm->add_option("--alist", st.alist_path, "Load the parity-check matrix from this alist file");
    dm->add_option("--trials", st.trials, "Information-set resampling trials");
    dm->add_option("-o,--out", st.out_path, "Write the CSV row to this file");
}

RunConfig load_config(const State& st) {
    RunConfig cfg = st.config_path.empty() ? RunConfig{} : RunConfig::from_file(st.config_path);
    if (const char* env = std::getenv("FLASHSIM_SEED")) {
        cfg.harness.master_seed = kv_parse_u64(env, 0);
    }
    return cfg;
}

CostWeights parse_weights(const std::string& s) {
    const std::vector<double> v = kv_parse_list(s, 0);
    if (v.size() != 2) throw ConfigError("--weights expects exactly 'c1,c2'");
    if (v[0] == 0.0 && v[1] == 0.0) throw ConfigError("--weights must not both be zero");
    return {v[0], v[1]};
}

// Flags beat the calibration file, which beats config-file weights.
void resolve_weights(RunConfig& cfg, const State& st, const CLI::App* sub) {
    if (sub->count("--weights")) {
        cfg.read.weights = parse_weights(st.weights_str);
    } else if (sub->count("--calibration")) {
        cfg.read.weights = Calibration::load_file(st.calibration_path).weights;
    }
}

int resolve_d_min(const RunConfig& cfg, const State& st, const CLI::App* sub,
                  const LdpcCode* code) {
    if (sub->count("--dmin")) {
        if (st.dmin < 1) throw ConfigError("--dmin must be >= 1");
        return st.dmin;
    }
    if (cfg.code.dmin_override) return *cfg.code.dmin_override;
    if (code) return code->d_min_est();
    LdpcCode built = build_code(cfg.code);
    return built.d_min_est();
}

std::ostream& select_out(const State& st, std::ofstream& file, std::ostream& fallback) {
    if (st.out_path.empty()) return fallback;
    file.open(st.out_path);
    if (!file) throw ConfigError("cannot open output file '" + st.out_path + "'");
    return file;
}

int cmd_inspect(const State& st, const CLI::App* sub, std::ostream& out) {
    RunConfig cfg = load_config(st);
    ChannelParams p = cfg.channel;
    if (sub->count("--pe")) p.pe = st.pe;
    if (sub->count("--t")) p.t_ret = st.t;
    WriteVoltages wv;
    if (cfg.write.fixed) wv = *cfg.write.fixed;
    else {
        const double third = (p.v_max - p.v_min) / 3.0;
        wv = {p.v_min + third, p.v_min + 2.0 * third};
    }
    if (sub->count("--v1")) wv.v1 = st.v1;
    if (sub->count("--v2")) wv.v2 = st.v2;

    const StateModel m = build_state_model(p, wv);
    const HardThresholds th = hard_thresholds(m);
    const Rber rb = rber(m, th);

    std::ofstream file;
    std::ostream& os = select_out(st, file, out);
    static const char* names[4] = {"s11", "s10", "s00", "s01"};
    os << "state,mu,sigma\n";
    for (int i = 0; i < 4; ++i)
        os << names[i] << ',' << format_double(m.mu[i]) << ',' << format_double(m.sigma[i])
           << '\n';
    os << "t1,t2,t3\n"
       << format_double(th.t1) << ',' << format_double(th.t2) << ',' << format_double(th.t3)
       << '\n';
    os << "omega_msb,omega_lsb\n"
       << format_double(rb.msb) << ',' << format_double(rb.lsb) << '\n';
    os << "v,entropy\n";
    const double lo = m.mu[0] - 3.0 * m.sigma[0];
    const double hi = m.mu[3] + 3.0 * m.sigma[3];
    for (int i = 0; i < 512; ++i) {
        const double v = lo + (hi - lo) * i / 511.0;
        os << format_double(v) << ',' << format_double(entropy(m, v)) << '\n';
    }
    return kOk;
}

int cmd_optimize_write(const State& st, const CLI::App* sub, std::ostream& out) {
    RunConfig cfg = load_config(st);
    ChannelParams p = cfg.channel;
    if (sub->count("--pe")) p.pe = st.pe;
    if (sub->count("--t")) p.t_ret = st.t;
    WriteScheme scheme = cfg.write.scheme;
    if (sub->count("--scheme")) {
        try {
            scheme = parse_write_scheme(st.write_scheme);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    const int d_min = resolve_d_min(cfg, st, sub, nullptr);
    const WriteResult wr = run_write_scheme(scheme, p, d_min, cfg.write.search, cfg.write.fixed);

    std::ofstream file;
    std::ostream& os = select_out(st, file, out);
    os << "v1,v2,cost,omega_msb,omega_lsb\n";
    os << format_double(wr.v.v1) << ',' << format_double(wr.v.v2) << ','
       << format_double(wr.cost) << ',' << format_double(wr.rber.msb) << ','
       << format_double(wr.rber.lsb) << '\n';
    return kOk;
}

int cmd_optimize_read(const State& st, const CLI::App* sub, std::ostream& out) {
    RunConfig cfg = load_config(st);
    ChannelParams p = cfg.channel;
    if (sub->count("--pe")) p.pe = st.pe;
    if (sub->count("--t")) p.t_ret = st.t;
    if (sub->count("--theta")) cfg.read.theta = st.theta;
    ReadScheme scheme = cfg.read.scheme;
    if (sub->count("--scheme")) {
        try {
            scheme = parse_read_scheme(st.read_scheme);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    resolve_weights(cfg, st, sub);
    cfg.validate();

    const int d_min = resolve_d_min(cfg, st, sub, nullptr);
    const WriteResult wr =
        run_write_scheme(cfg.write.scheme, p, d_min, cfg.write.search, cfg.write.fixed);
    const StateModel model = build_state_model(p, wr.v);

    std::optional<double> theta_star;
    ReadVoltages reads;
    switch (scheme) {
        case ReadScheme::Proposed: {
            if (!cfg.read.weights)
                throw MissingDependency(
                    "optimize-read --scheme proposed needs --weights or --calibration");
            const ThetaResult tr = optimize_theta(model, d_min, *cfg.read.weights,
                                                  cfg.read.theta_lo, cfg.read.theta_hi,
                                                  cfg.read.tol);
            theta_star = tr.theta_star;
            reads = tr.reads;
            break;
        }
        case ReadScheme::Uniform: reads = uniform_reads(model); break;
        case ReadScheme::Mmi: reads = mmi_reads(model); break;
        case ReadScheme::EntropyFixed:
            reads = solve_read_voltages(model, cfg.read.theta);
            theta_star = cfg.read.theta;
            break;
    }

    std::ofstream file;
    std::ostream& os = select_out(st, file, out);
    os << "theta_star,r1,r2,r3,r4,r5,r6,c1,c2,cost\n";
    os << (theta_star ? format_double(*theta_star) : "");
    for (int i = 0; i < 6; ++i) os << ',' << format_double(reads.r[i]);
    if (cfg.read.weights) {
        const double cost = read_cost(alphas(llr_table(model, reads)), d_min, *cfg.read.weights);
        os << ',' << format_double(cfg.read.weights->c1) << ','
           << format_double(cfg.read.weights->c2) << ',' << format_double(cost);
    } else {
        os << ",,,";
    }
    os << '\n';
    return kOk;
}

int cmd_calibrate(const State& st, const CLI::App* sub, std::ostream& out) {
    RunConfig cfg = load_config(st);
    if (sub->count("--frames")) cfg.calibrate.frames = st.frames;
    if (sub->count("--seed")) cfg.harness.master_seed = st.seed;
    if (sub->count("--threads")) cfg.harness.threads = st.threads;
    cfg.validate();
    const double pe = sub->count("--pe") ? st.pe : cfg.channel.pe;
    const double t = sub->count("--t") ? st.t : cfg.channel.t_ret;

    LdpcCode code = build_code(cfg.code);
    if (sub->count("--dmin")) {
        if (st.dmin < 1) throw ConfigError("--dmin must be >= 1");
        code.set_d_min_est(st.dmin);
    }
    const Calibration cal = run_calibration(cfg, code, pe, t);
    cal.save_file(st.out_path);
    out << "c1 = " << format_double(cal.weights.c1) << '\n';
    out << "c2 = " << format_double(cal.weights.c2) << '\n';
    return kOk;
}

int cmd_sweep(const State& st, const CLI::App* sub, std::ostream& out) {
    RunConfig cfg = load_config(st);
    if (sub->count("--frames")) cfg.harness.frames = st.frames;
    if (sub->count("--seed")) cfg.harness.master_seed = st.seed;
    if (sub->count("--threads")) cfg.harness.threads = st.threads;
    if (sub->count("--theta")) cfg.read.theta = st.theta;
    if (sub->count("--write-scheme")) {
        try {
            cfg.write.scheme = parse_write_scheme(st.write_scheme);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (sub->count("--read-scheme")) {
        try {
            cfg.read.scheme = parse_read_scheme(st.read_scheme);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    resolve_weights(cfg, st, sub);
    cfg.validate();

    std::optional<Lut> lut;
    if (sub->count("--use-lut")) lut = Lut::load_file(st.lut_path);

    LdpcCode code = build_code(cfg.code);
    if (sub->count("--dmin")) {
        if (st.dmin < 1) throw ConfigError("--dmin must be >= 1");
        code.set_d_min_est(st.dmin);
    }

    std::ofstream file;
    std::ostream& os = select_out(st, file, out);
    run_sweep(cfg, code, &os, lut ? &*lut : nullptr);
    return kOk;
}

int cmd_build_lut(const State& st, const CLI::App* sub, std::ostream& out, std::ostream& err) {
    RunConfig cfg = load_config(st);
    resolve_weights(cfg, st, sub);
    cfg.validate();
    LdpcCode code = build_code(cfg.code);
    if (sub->count("--dmin")) {
        if (st.dmin < 1) throw ConfigError("--dmin must be >= 1");
        code.set_d_min_est(st.dmin);
    }
    const Lut lut = build_lut(cfg, code, &err);
    lut.save_file(st.out_path);
    size_t valid = 0;
    for (const auto& rec : lut.points) valid += rec.valid ? 1 : 0;
    out << "lut: " << lut.points.size() << " points, " << valid << " valid\n";
    return kOk;
}

int cmd_dmin(const State& st, const CLI::App* sub, std::ostream& out) {
    RunConfig cfg = load_config(st);
    LdpcCode code = sub->count("--alist") ? load_alist_file(st.alist_path)
                                          : peg_construct(cfg.code.n, cfg.code.k,
                                                          DegreeProfile::parse(cfg.code.profile),
                                                          cfg.code.seed);
    int trials = cfg.code.dmin_trials;
    if (sub->count("--trials")) {
        if (st.trials < 1) throw ConfigError("--trials must be >= 1");
        trials = st.trials;
    }
    const int d = estimate_d_min(code, trials, cfg.code.seed);
    std::ofstream file;
    std::ostream& os = select_out(st, file, out);
    os << "n,k,d_min\n" << code.n() << ',' << code.k() << ',' << d << '\n';
    return kOk;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    State st;
    CLI::App app{"LDPC-coded MLC flash channel simulator and optimizer"};
    app.name("flashsim");
    build_app(app, st);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kConfigError;
    }

    try {
        for (CLI::App* sub : app.get_subcommands()) {
            const std::string& name = sub->get_name();
            if (name == "inspect") return cmd_inspect(st, sub, out);
            if (name == "optimize-write") return cmd_optimize_write(st, sub, out);
            if (name == "optimize-read") return cmd_optimize_read(st, sub, out);
            if (name == "calibrate") return cmd_calibrate(st, sub, out);
            if (name == "sweep") return cmd_sweep(st, sub, out);
            if (name == "build-lut") return cmd_build_lut(st, sub, out, err);
            if (name == "dmin") return cmd_dmin(st, sub, out);
        }
        err << "error: no subcommand selected\n";
        return kConfigError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const MissingDependency& e) {
        err << "missing dependency: " << e.what() << '\n';
        return kMissingDependency;
    } catch (const NoRootInInterval& e) {
        err << "optimizer error: " << e.what() << '\n';
        return kOptimizerError;
    } catch (const ThetaOutOfRange& e) {
        err << "optimizer error: " << e.what() << '\n';
        return kOptimizerError;
    } catch (const OverlapError& e) {
        err << "optimizer error: " << e.what() << '\n';
        return kOptimizerError;
    } catch (const DegenerateBracket& e) {
        err << "optimizer error: " << e.what() << '\n';
        return kOptimizerError;
    } catch (const ConstructionFailed& e) {
        err << "optimizer error: " << e.what() << '\n';
        return kOptimizerError;
    } catch (const RankDeficient& e) {
        err << "optimizer error: " << e.what() << '\n';
        return kOptimizerError;
    } catch (const ChannelError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const LdpcError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

std::vector<std::pair<std::string, std::vector<std::string>>> command_flags() {
    State st;
    CLI::App app{"flag inventory"};
    build_app(app, st);
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        std::vector<std::string> flags;
        for (const CLI::Option* opt : sub->get_options()) flags.push_back(opt->get_name());
        out.emplace_back(sub->get_name(), std::move(flags));
    }
    return out;
}

}  // namespace flashsim::cli
