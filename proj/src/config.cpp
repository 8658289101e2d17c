#include "flashsim/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flashsim {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_sig9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-')
            return false;
    return true;
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

}  // namespace

const std::string* KvSection::find(const std::string& key) const {
    for (const auto& e : entries)
        if (e.key == key) return &e.value;
    return nullptr;
}

KvFile KvFile::parse(std::istream& is) {
    KvFile f;
    f.sections.push_back(KvSection{});  // root
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            KvSection sec;
            sec.line = line;
            std::istringstream hs(s.substr(1, s.size() - 2));
            std::string tok;
            bool first = true;
            while (hs >> tok) {
                const auto eq = tok.find('=');
                if (first) {
                    if (eq != std::string::npos) fail(line, "section name cannot contain '='");
                    sec.name = tok;
                    first = false;
                } else {
                    if (eq == std::string::npos)
                        fail(line, "section attribute must be key=value");
                    sec.attrs.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
                }
            }
            if (first) fail(line, "empty section header");
            f.sections.push_back(std::move(sec));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected 'key = value'");
        KvEntry e;
        e.key = trim(s.substr(0, eq));
        e.value = trim(s.substr(eq + 1));
        e.line = line;
        if (!valid_key(e.key)) fail(line, "invalid key '" + e.key + "'");
        f.sections.back().entries.push_back(std::move(e));
    }
    return f;
}

KvFile KvFile::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    return parse(is);
}

void KvFile::save(std::ostream& os) const {
    for (const auto& sec : sections) {
        if (!sec.name.empty()) {
            os << '[' << sec.name;
            for (const auto& [k, v] : sec.attrs) os << ' ' << k << '=' << v;
            os << "]\n";
        } else if (sec.entries.empty()) {
            continue;
        }
        for (const auto& e : sec.entries) os << e.key << " = " << e.value << '\n';
    }
}

double kv_parse_double(const std::string& value, int line) {
    double out = 0.0;
    const char* b = value.data();
    const char* e = b + value.size();
    const auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e) fail(line, "expected a number, got '" + value + "'");
    return out;
}

long long kv_parse_int(const std::string& value, int line) {
    long long out = 0;
    const char* b = value.data();
    const char* e = b + value.size();
    const auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e)
        fail(line, "expected an integer, got '" + value + "'");
    return out;
}

uint64_t kv_parse_u64(const std::string& value, int line) {
    uint64_t out = 0;
    const char* b = value.data();
    const char* e = b + value.size();
    const auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e)
        fail(line, "expected an unsigned integer, got '" + value + "'");
    return out;
}

std::vector<double> kv_parse_list(const std::string& value, int line) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(line, "empty list element");
        out.push_back(kv_parse_double(item, line));
    }
    if (out.empty()) fail(line, "empty list");
    return out;
}

namespace {

void apply_channel(ChannelParams& c, const KvEntry& e) {
    const double v = kv_parse_double(e.value, e.line);
    if (e.key == "v_min") c.v_min = v;
    else if (e.key == "v_max") c.v_max = v;
    else if (e.key == "sigma_e") c.sigma_e = v;
    else if (e.key == "sigma_p") c.sigma_p = v;
    else if (e.key == "v_pp") c.v_pp = v;
    else if (e.key == "a_r") c.a_r = v;
    else if (e.key == "b_r") c.b_r = v;
    else if (e.key == "x0") c.x0 = v;
    else if (e.key == "pe") c.pe = v;
    else if (e.key == "t_ret") c.t_ret = v;
    else fail(e.line, "unknown key 'channel." + e.key + "'");
}

void apply_code(CodeConfig& c, const KvEntry& e) {
    if (e.key == "n") c.n = static_cast<int>(kv_parse_int(e.value, e.line));
    else if (e.key == "k") c.k = static_cast<int>(kv_parse_int(e.value, e.line));
    else if (e.key == "profile") c.profile = e.value;
    else if (e.key == "seed") c.seed = kv_parse_u64(e.value, e.line);
    else if (e.key == "dmin_trials") c.dmin_trials = static_cast<int>(kv_parse_int(e.value, e.line));
    else if (e.key == "dmin_override") c.dmin_override = static_cast<int>(kv_parse_int(e.value, e.line));
    else fail(e.line, "unknown key 'code." + e.key + "'");
}

void apply_write(WriteConfig& w, const KvEntry& e) {
    if (e.key == "scheme") {
        try {
            w.scheme = parse_write_scheme(e.value);
        } catch (const std::invalid_argument& ex) {
            fail(e.line, ex.what());
        }
    } else if (e.key == "m_grid") w.search.m_grid = static_cast<int>(kv_parse_int(e.value, e.line));
    else if (e.key == "q_max") w.search.q_max = static_cast<int>(kv_parse_int(e.value, e.line));
    else if (e.key == "v2_init") w.search.v2_init = kv_parse_double(e.value, e.line);
    else if (e.key == "tol") w.search.tol = kv_parse_double(e.value, e.line);
    else if (e.key == "fixed_v1") {
        if (!w.fixed) w.fixed = WriteVoltages{};
        w.fixed->v1 = kv_parse_double(e.value, e.line);
    } else if (e.key == "fixed_v2") {
        if (!w.fixed) w.fixed = WriteVoltages{};
        w.fixed->v2 = kv_parse_double(e.value, e.line);
    } else fail(e.line, "unknown key 'write." + e.key + "'");
}

void apply_read(ReadConfig& r, const KvEntry& e) {
    if (e.key == "scheme") {
        try {
            r.scheme = parse_read_scheme(e.value);
        } catch (const std::invalid_argument& ex) {
            fail(e.line, ex.what());
        }
    } else if (e.key == "theta") r.theta = kv_parse_double(e.value, e.line);
    else if (e.key == "c1") {
        if (!r.weights) r.weights = CostWeights{0.0, 0.0};
        r.weights->c1 = kv_parse_double(e.value, e.line);
    } else if (e.key == "c2") {
        if (!r.weights) r.weights = CostWeights{0.0, 0.0};
        r.weights->c2 = kv_parse_double(e.value, e.line);
    } else if (e.key == "theta_lo") r.theta_lo = kv_parse_double(e.value, e.line);
    else if (e.key == "theta_hi") r.theta_hi = kv_parse_double(e.value, e.line);
    else if (e.key == "tol") r.tol = kv_parse_double(e.value, e.line);
    else fail(e.line, "unknown key 'read." + e.key + "'");
}

void apply_sweep(SweepConfig& s, const KvEntry& e) {
    if (e.key == "pe_list") s.pe_list = kv_parse_list(e.value, e.line);
    else if (e.key == "t_list") s.t_list = kv_parse_list(e.value, e.line);
    else fail(e.line, "unknown key 'sweep." + e.key + "'");
}

void apply_harness(HarnessConfig& h, const KvEntry& e) {
    if (e.key == "frames") h.frames = kv_parse_int(e.value, e.line);
    else if (e.key == "master_seed") h.master_seed = kv_parse_u64(e.value, e.line);
    else if (e.key == "stop_min_events") h.stop_min_events = kv_parse_int(e.value, e.line);
    else if (e.key == "threads") h.threads = static_cast<int>(kv_parse_int(e.value, e.line));
    else if (e.key == "bp_max_iter") h.bp_max_iter = static_cast<int>(kv_parse_int(e.value, e.line));
    else fail(e.line, "unknown key 'harness." + e.key + "'");
}

void apply_calibrate(CalibrateConfig& c, const KvEntry& e) {
    if (e.key == "theta_grid") c.theta_grid = kv_parse_list(e.value, e.line);
    else if (e.key == "frames") c.frames = kv_parse_int(e.value, e.line);
    else fail(e.line, "unknown key 'calibrate." + e.key + "'");
}

}  // namespace

RunConfig RunConfig::from_kv(const KvFile& kv) {
    RunConfig cfg;
    for (const auto& sec : kv.sections) {
        if (!sec.attrs.empty())
            fail(sec.line, "section [" + sec.name + "] does not take attributes");
        if (sec.name.empty()) {
            if (!sec.entries.empty())
                fail(sec.entries.front().line, "keys must appear inside a section");
            continue;
        }
        for (const auto& e : sec.entries) {
            if (sec.name == "channel") apply_channel(cfg.channel, e);
            else if (sec.name == "code") apply_code(cfg.code, e);
            else if (sec.name == "write") apply_write(cfg.write, e);
            else if (sec.name == "read") apply_read(cfg.read, e);
            else if (sec.name == "sweep") apply_sweep(cfg.sweep, e);
            else if (sec.name == "harness") apply_harness(cfg.harness, e);
            else if (sec.name == "calibrate") apply_calibrate(cfg.calibrate, e);
            else fail(sec.line, "unknown section [" + sec.name + "]");
        }
        if (sec.entries.empty() && sec.name != "channel" && sec.name != "code" &&
            sec.name != "write" && sec.name != "read" && sec.name != "sweep" &&
            sec.name != "harness" && sec.name != "calibrate")
            fail(sec.line, "unknown section [" + sec.name + "]");
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_kv(KvFile::parse_file(path));
}

void RunConfig::validate() const {
    try {
        channel.validate();
        write.search.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (code.n <= 1 || code.k <= 0 || code.k >= code.n)
        throw ConfigError("code: need 0 < k < n");
    if (code.dmin_trials < 1) throw ConfigError("code.dmin_trials must be >= 1");
    if (code.dmin_override && *code.dmin_override < 1)
        throw ConfigError("code.dmin_override must be >= 1");
    if (!(read.theta > 0.0) || !(read.theta < 1.0))
        throw ConfigError("read.theta must lie in (0, 1)");
    if (!(read.theta_lo > 0.0) || !(read.theta_hi < 1.0) || !(read.theta_lo < read.theta_hi))
        throw ConfigError("read theta bounds must satisfy 0 < lo < hi < 1");
    if (!(read.tol > 0.0)) throw ConfigError("read.tol must be positive");
    if (read.weights && read.weights->c1 == 0.0 && read.weights->c2 == 0.0)
        throw ConfigError("read weights must not both be zero");
    if (sweep.pe_list.empty() || sweep.t_list.empty())
        throw ConfigError("sweep lists must be non-empty");
    for (double pe : sweep.pe_list)
        if (!(pe >= 0.0)) throw ConfigError("sweep.pe_list entries must be >= 0");
    for (double t : sweep.t_list)
        if (!(t >= 0.0)) throw ConfigError("sweep.t_list entries must be >= 0");
    if (harness.frames < 1) throw ConfigError("harness.frames must be >= 1");
    if (harness.stop_min_events < 1) throw ConfigError("harness.stop_min_events must be >= 1");
    if (harness.threads < 0) throw ConfigError("harness.threads must be >= 0");
    if (harness.bp_max_iter < 1) throw ConfigError("harness.bp_max_iter must be >= 1");
    if (calibrate.theta_grid.size() < 3)
        throw ConfigError("calibrate.theta_grid needs at least 3 points");
    for (double th : calibrate.theta_grid)
        if (!(th > 0.0) || !(th < 1.0)) throw ConfigError("calibrate.theta_grid must lie in (0,1)");
    if (calibrate.frames < 1) throw ConfigError("calibrate.frames must be >= 1");
}

}  // namespace flashsim
