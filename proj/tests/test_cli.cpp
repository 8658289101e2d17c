#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flashsim/cli.hpp"
#include "flashsim/ldpc.hpp"

namespace cli = flashsim::cli;

namespace {

struct CliResult {
    int code = -1;
    std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliResult r;
    r.code = cli::run(std::move(args), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    REQUIRE(os.good());
    os << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, sep)) out.push_back(item);
    return out;
}

// Value of `column` on the first data row of a two-line CSV block that starts
// with `header`.
double csv_field(const std::string& text, const std::string& header, int column) {
    const auto pos = text.find(header + "\n");
    REQUIRE(pos != std::string::npos);
    const auto start = pos + header.size() + 1;
    const auto end = text.find('\n', start);
    const auto fields = split(text.substr(start, end - start), ',');
    REQUIRE(column < static_cast<int>(fields.size()));
    return std::stod(fields[static_cast<size_t>(column)]);
}

// Guard against FLASHSIM_SEED leaking between test cases.
struct EnvGuard {
    std::string saved;
    bool had = false;
    EnvGuard() {
        if (const char* v = std::getenv("FLASHSIM_SEED")) {
            saved = v;
            had = true;
        }
        unsetenv("FLASHSIM_SEED");
    }
    ~EnvGuard() {
        if (had) setenv("FLASHSIM_SEED", saved.c_str(), 1);
        else unsetenv("FLASHSIM_SEED");
    }
};

const char* kSmallCodeCfg =
    "[code]\n"
    "n = 128\n"
    "k = 64\n"
    "dmin_override = 4\n"
    "[write]\n"
    "scheme = fixed\n"
    "[read]\n"
    "scheme = uniform\n"
    "[sweep]\n"
    "pe_list = 18000\n"
    "t_list = 20000\n"
    "[harness]\n"
    "frames = 64\n"
    "threads = 1\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("top-level help lists every subcommand") {
    const CliResult r = run_cli({"--help"});
    CHECK(r.code == cli::kOk);
    for (const char* name : {"inspect", "optimize-write", "optimize-read", "calibrate", "sweep",
                             "build-lut", "dmin"})
        CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("help text covers the full flag inventory") {
    const auto inventory = cli::command_flags();
    CHECK(inventory.size() == 7);
    for (const auto& [cmd, flags] : inventory) {
        const CliResult r = run_cli({cmd, "--help"});
        CHECK(r.code == cli::kOk);
        for (const std::string& flag : flags) {
            CAPTURE(cmd);
            CAPTURE(flag);
            CHECK(r.out.find(flag) != std::string::npos);
        }
    }
    // Spot-check flags that must exist per the interface contract.
    auto flags_of = [&](const std::string& cmd) -> const std::vector<std::string>& {
        for (const auto& [name, flags] : inventory)
            if (name == cmd) return flags;
        static const std::vector<std::string> none;
        return none;
    };
    auto has = [&](const std::string& cmd, const std::string& flag) {
        const auto& f = flags_of(cmd);
        return std::find(f.begin(), f.end(), flag) != f.end();
    };
    CHECK(has("inspect", "--v1"));
    CHECK(has("optimize-write", "--scheme"));
    CHECK(has("optimize-read", "--weights"));
    CHECK(has("optimize-read", "--calibration"));
    CHECK(has("calibrate", "--out"));
    CHECK(has("sweep", "--use-lut"));
    CHECK(has("sweep", "--write-scheme"));
    CHECK(has("sweep", "--read-scheme"));
    CHECK(has("build-lut", "--weights"));
    CHECK(has("dmin", "--alist"));
}

TEST_CASE("argument errors exit with the config code") {
    CHECK(run_cli({}).code == cli::kConfigError);
    CHECK(run_cli({"frobnicate"}).code == cli::kConfigError);
    CHECK(run_cli({"inspect", "--bogus"}).code == cli::kConfigError);
    CHECK(run_cli({"calibrate"}).code == cli::kConfigError);  // missing required -o
    CHECK(run_cli({"build-lut"}).code == cli::kConfigError);
    const CliResult r = run_cli({"optimize-write", "--scheme", "nope", "--dmin", "4"});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("unknown write scheme") != std::string::npos);
    CHECK(run_cli({"optimize-write", "--dmin", "0"}).code == cli::kConfigError);
    CHECK(run_cli({"inspect", "--config", "/nonexistent.cfg"}).code == cli::kConfigError);
    CHECK(run_cli({"inspect", "-o", "/nonexistent/dir/x.csv"}).code == cli::kConfigError);
}

TEST_CASE("malformed config files are rejected by key") {
    EnvGuard guard;
    const std::string path = "/tmp/flashsim_cli_badkey.cfg";
    write_file(path, "[channel]\nsigma_eee = 1\n");
    const CliResult r = run_cli({"inspect", "--config", path});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("sigma_eee") != std::string::npos);
    CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("inspect reports the pristine state model") {
    EnvGuard guard;
    const CliResult r = run_cli({"inspect", "--pe", "0", "--t", "0"});
    CHECK(r.code == cli::kOk);
    CHECK(csv_field(r.out, "state,mu,sigma", 1) == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(csv_field(r.out, "state,mu,sigma", 2) == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(r.out.find("omega_msb,omega_lsb") != std::string::npos);
    CHECK(r.out.find("v,entropy") != std::string::npos);
    // Explicit write voltages move the thresholds to the known crossings.
    const CliResult s =
        run_cli({"inspect", "--pe", "6000", "--t", "15000", "--v1", "2.6", "--v2", "3.3"});
    CHECK(s.code == cli::kOk);
    CHECK(csv_field(s.out, "t1,t2,t3", 0) == doctest::Approx(2.2324526169378722).epsilon(1e-9));
    CHECK(csv_field(s.out, "t1,t2,t3", 2) == doctest::Approx(3.385625676449058).epsilon(1e-9));
}

TEST_CASE("optimize-write emits one csv row") {
    EnvGuard guard;
    const CliResult r = run_cli(
        {"optimize-write", "--scheme", "min-rber", "--pe", "6000", "--t", "15000", "--dmin", "4"});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.substr(0, r.out.find('\n')) == "v1,v2,cost,omega_msb,omega_lsb");
    CHECK(csv_field(r.out, "v1,v2,cost,omega_msb,omega_lsb", 0) ==
          doctest::Approx(2.3299).epsilon(2e-3));
    CHECK(csv_field(r.out, "v1,v2,cost,omega_msb,omega_lsb", 1) ==
          doctest::Approx(3.0111).epsilon(2e-3));
}

TEST_CASE("optimize-read row shape depends on scheme and weights") {
    EnvGuard guard;
    const CliResult uniform = run_cli(
        {"optimize-read", "--scheme", "uniform", "--pe", "6000", "--t", "15000", "--dmin", "4"});
    CHECK(uniform.code == cli::kOk);
    const auto lines = split(uniform.out, '\n');
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "theta_star,r1,r2,r3,r4,r5,r6,c1,c2,cost");
    CHECK(lines[1].substr(0, 1) == ",");                       // no theta for uniform
    CHECK(lines[1].substr(lines[1].size() - 3) == ",,,");      // no weights -> no cost
    const CliResult weighted =
        run_cli({"optimize-read", "--scheme", "entropy-fixed", "--theta", "0.35", "--pe", "6000",
                 "--t", "15000", "--dmin", "4", "--weights", "1,0"});
    CHECK(weighted.code == cli::kOk);
    CHECK(csv_field(weighted.out, "theta_star,r1,r2,r3,r4,r5,r6,c1,c2,cost", 0) == 0.35);
    CHECK(csv_field(weighted.out, "theta_star,r1,r2,r3,r4,r5,r6,c1,c2,cost", 7) == 1.0);
    CHECK(csv_field(weighted.out, "theta_star,r1,r2,r3,r4,r5,r6,c1,c2,cost", 9) > 0.0);
    CHECK(run_cli({"optimize-read", "--weights", "0,0", "--dmin", "4"}).code ==
          cli::kConfigError);
    CHECK(run_cli({"optimize-read", "--weights", "1,2,3", "--dmin", "4"}).code ==
          cli::kConfigError);
}

TEST_CASE("proposed reads without calibration exit with the dependency code") {
    EnvGuard guard;
    const CliResult r = run_cli(
        {"optimize-read", "--scheme", "proposed", "--pe", "6000", "--t", "15000", "--dmin", "4"});
    CHECK(r.code == cli::kMissingDependency);
    CHECK(r.err.find("--weights") != std::string::npos);
}

TEST_CASE("infeasible entropy reads exit with the optimizer code") {
    EnvGuard guard;
    // Pristine cells under mid-window fixed writes never reach H = 0.35.
    const std::string path = "/tmp/flashsim_cli_fixed.cfg";
    write_file(path, "[write]\nscheme = fixed\nfixed_v1 = 2.6\nfixed_v2 = 3.3\n");
    const CliResult r = run_cli({"optimize-read", "--config", path, "--scheme", "entropy-fixed",
                                 "--theta", "0.35", "--pe", "0", "--t", "0", "--dmin", "4"});
    CHECK(r.code == cli::kOptimizerError);
    CHECK(r.err.find("optimizer error") != std::string::npos);
}

TEST_CASE("sweep validates campaign parameters") {
    EnvGuard guard;
    const std::string path = "/tmp/flashsim_cli_sweep.cfg";
    write_file(path, kSmallCodeCfg);
    CHECK(run_cli({"sweep", "--config", path, "--frames", "0"}).code == cli::kConfigError);
    const CliResult r = run_cli({"sweep", "--config", path});
    CHECK(r.code == cli::kOk);
    const auto lines = split(r.out, '\n');
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] ==
          "pe,t_ret,write_scheme,read_scheme,ber_msb,ber_lsb,ber_total,fer,frames,events,"
          "mean_iters");
    CHECK(lines[1].substr(0, 26) == "18000,20000,fixed,uniform,");
}

TEST_CASE("seed precedence is flag then environment then file") {
    EnvGuard guard;
    const std::string path = "/tmp/flashsim_cli_seed.cfg";
    write_file(path, std::string(kSmallCodeCfg) + "master_seed = 1\n");

    auto sweep = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = {"sweep", "--config", path};
        for (auto& a : extra) args.push_back(std::move(a));
        const CliResult r = run_cli(std::move(args));
        REQUIRE(r.code == cli::kOk);
        return r.out;
    };

    const std::string file_only = sweep({});
    setenv("FLASHSIM_SEED", "7", 1);
    const std::string env_over_file = sweep({});
    const std::string flag_over_env = sweep({"--seed", "42"});
    unsetenv("FLASHSIM_SEED");
    const std::string baseline_seed7 = sweep({"--seed", "7"});
    const std::string baseline_seed42 = sweep({"--seed", "42"});
    const std::string baseline_seed1 = sweep({"--seed", "1"});

    CHECK(file_only == baseline_seed1);
    CHECK(env_over_file == baseline_seed7);
    CHECK(flag_over_env == baseline_seed42);
    CHECK(file_only != env_over_file);  // the seed genuinely changes the draw
    const CliResult bad_env = [&] {
        setenv("FLASHSIM_SEED", "abc", 1);
        const CliResult r = run_cli({"sweep", "--config", path});
        unsetenv("FLASHSIM_SEED");
        return r;
    }();
    CHECK(bad_env.code == cli::kConfigError);
}

TEST_CASE("build-lut then sweep --use-lut") {
    EnvGuard guard;
    const std::string cfg = "/tmp/flashsim_cli_lut.cfg";
    write_file(cfg,
               "[code]\n"
               "n = 128\n"
               "k = 64\n"
               "dmin_override = 4\n"
               "[sweep]\n"
               "pe_list = 6000\n"
               "t_list = 15000\n"
               "[harness]\n"
               "frames = 32\n"
               "threads = 1\n");
    const std::string lut = "/tmp/flashsim_cli_test.lut";
    CHECK(run_cli({"build-lut", "--config", cfg, "-o", lut}).code == cli::kMissingDependency);
    const CliResult b =
        run_cli({"build-lut", "--config", cfg, "--weights", "8.875,27.189", "-o", lut});
    CHECK(b.code == cli::kOk);
    CHECK(b.out == "lut: 1 points, 1 valid\n");
    // The stored voltages let a proposed-read sweep run without weights.
    const CliResult s = run_cli({"sweep", "--config", cfg, "--write-scheme", "proposed",
                                 "--read-scheme", "proposed", "--use-lut", lut});
    CHECK(s.code == cli::kOk);
    CHECK(s.out.find("proposed,proposed,") != std::string::npos);
}

TEST_CASE("dmin reports exact small-code distances") {
    EnvGuard guard;
    const std::string cfg = "/tmp/flashsim_cli_dmin.cfg";
    write_file(cfg, "[code]\nn = 24\nk = 8\n");
    const CliResult r = run_cli({"dmin", "--config", cfg, "--trials", "50"});
    CHECK(r.code == cli::kOk);
    const auto lines = split(r.out, '\n');
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "n,k,d_min");
    CHECK(lines[1].substr(0, 5) == "24,8,");
    CHECK(std::stoi(lines[1].substr(5)) >= 2);

    // A known code through the alist path: the Hamming (7,4) distance is 3.
    const std::vector<std::vector<int>> rows = {
        {0, 1, 2, 3}, {0, 1, 4, 5}, {0, 2, 4, 6}};
    std::vector<std::vector<int>> check_vars(3);
    for (int c = 0; c < 3; ++c) check_vars[c] = rows[c];
    const flashsim::LdpcCode hamming = flashsim::LdpcCode::from_parity_check(7, check_vars);
    const std::string alist = "/tmp/flashsim_cli_hamming.alist";
    flashsim::save_alist_file(hamming, alist);
    const CliResult h = run_cli({"dmin", "--alist", alist, "--trials", "10"});
    CHECK(h.code == cli::kOk);
    CHECK(h.out.find("7,4,3") != std::string::npos);
    CHECK(run_cli({"dmin", "--alist", "/nonexistent.alist"}).code == cli::kConfigError);
    CHECK(run_cli({"dmin", "--config", cfg, "--trials", "0"}).code == cli::kConfigError);
}

}  // TEST_SUITE
