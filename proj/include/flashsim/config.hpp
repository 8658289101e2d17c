#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flashsim/channel.hpp"
#include "flashsim/readopt.hpp"
#include "flashsim/writeopt.hpp"

namespace flashsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A required artifact (calibration file, weights, LUT) was not supplied.
struct MissingDependency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest representation that parses back to exactly the same double.
std::string format_double(double v);
// Fixed 9-significant-digit form used by the LUT file.
std::string format_sig9(double v);

struct KvEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct KvSection {
    std::string name;  // "" for the root section
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<KvEntry> entries;
    int line = 0;

    const std::string* find(const std::string& key) const;
};

// Line-oriented `key = value` file with `[section attr=value ...]` headers
// and `#` comments.
struct KvFile {
    std::vector<KvSection> sections;

    static KvFile parse(std::istream& is);
    static KvFile parse_file(const std::string& path);
    void save(std::ostream& os) const;
};

double kv_parse_double(const std::string& value, int line);
long long kv_parse_int(const std::string& value, int line);
uint64_t kv_parse_u64(const std::string& value, int line);
std::vector<double> kv_parse_list(const std::string& value, int line);

struct CodeConfig {
    int n = 1024;
    int k = 911;
    std::string profile = "3";
    uint64_t seed = 1;
    int dmin_trials = 5000;
    std::optional<int> dmin_override;
};

struct WriteConfig {
    WriteScheme scheme = WriteScheme::Proposed;
    WriteSearchConfig search{};
    std::optional<WriteVoltages> fixed;  // overrides the equal-thirds default
};

struct ReadConfig {
    ReadScheme scheme = ReadScheme::Proposed;
    double theta = 0.35;  // entropy-fixed baseline level
    std::optional<CostWeights> weights;
    double theta_lo = 0.05;
    double theta_hi = 0.95;
    double tol = 1e-3;
};

struct SweepConfig {
    std::vector<double> pe_list = {6000.0};
    std::vector<double> t_list = {15000.0};
};

struct HarnessConfig {
    long long frames = 1000;
    uint64_t master_seed = 12345;
    long long stop_min_events = 100;
    int threads = 0;  // 0 -> hardware concurrency
    int bp_max_iter = 50;
};

struct CalibrateConfig {
    std::vector<double> theta_grid = {0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85};
    long long frames = 20000;
};

struct RunConfig {
    ChannelParams channel{};
    CodeConfig code{};
    WriteConfig write{};
    ReadConfig read{};
    SweepConfig sweep{};
    HarnessConfig harness{};
    CalibrateConfig calibrate{};

    static RunConfig from_kv(const KvFile& kv);
    static RunConfig from_file(const std::string& path);
    void validate() const;  // throws ConfigError
};

}  // namespace flashsim
