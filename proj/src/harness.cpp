#include "flashsim/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "flashsim/mathutil.hpp"
#include "flashsim/readopt.hpp"
#include "flashsim/rng.hpp"
#include "flashsim/writeopt.hpp"

namespace flashsim {

LdpcCode build_code(const CodeConfig& cfg) {
    LdpcCode code = peg_construct(cfg.n, cfg.k, DegreeProfile::parse(cfg.profile), cfg.seed);
    const int d = cfg.dmin_override ? *cfg.dmin_override
                                    : estimate_d_min(code, cfg.dmin_trials, cfg.seed);
    code.set_d_min_est(d);
    return code;
}

namespace {

uint64_t point_key(double pe, double t) {
    return mix64(mix64(std::bit_cast<uint64_t>(pe)) ^ std::bit_cast<uint64_t>(t));
}

struct FrameStat {
    long long err_msb = 0;
    long long err_lsb = 0;
    int frame_err = 0;
    long long iters = 0;
};

FrameStat sim_frame(const LdpcCode& code, const StateModel& model, const ReadVoltages& reads,
                    const LlrTable& table, int bp_max_iter, std::mt19937_64 rng) {
    const int n = code.n();
    const int k = code.k();
    std::vector<uint8_t> msg_m(k), msg_l(k);
    for (int i = 0; i < k; ++i) msg_m[i] = static_cast<uint8_t>(rng() & 1);
    for (int i = 0; i < k; ++i) msg_l[i] = static_cast<uint8_t>(rng() & 1);
    const std::vector<uint8_t> enc_m = code.encode(msg_m);
    const std::vector<uint8_t> enc_l = code.encode(msg_l);

    std::vector<double> llr_m(n), llr_l(n);
    for (int i = 0; i < n; ++i) {
        const CellState s = state_of_bits(enc_m[i], enc_l[i]);
        const double v = sample_cell(model, s, rng);
        const int region = reads.region_of(v);
        llr_m[i] = table.l_msb[region];
        llr_l[i] = table.l_lsb[region];
    }

    BpOptions opt;
    opt.max_iter = bp_max_iter;
    const BpResult rm = bp_decode(code, llr_m, opt);
    const BpResult rl = bp_decode(code, llr_l, opt);

    FrameStat st;
    for (int i = 0; i < n; ++i) {
        st.err_msb += rm.bits[i] != enc_m[i];
        st.err_lsb += rl.bits[i] != enc_l[i];
    }
    st.frame_err = (st.err_msb + st.err_lsb) > 0 ? 1 : 0;
    st.iters = rm.iterations + rl.iterations;
    return st;
}

struct CampaignTotals {
    long long err_msb = 0, err_lsb = 0, frame_errs = 0, iters = 0, frames = 0;
    bool stopped_by_events = false;
};

// Frames run in fixed-size batches; each frame owns an RNG stream derived
// from (master_seed, point, frame index), and the stop rule is evaluated at
// batch boundaries, so results do not depend on the worker count.
CampaignTotals run_frames(const LdpcCode& code, const StateModel& model,
                          const ReadVoltages& reads, const LlrTable& table, int bp_max_iter,
                          uint64_t master_seed, uint64_t point, long long frame_cap,
                          long long stop_min_events, int threads) {
    constexpr long long kBatch = 256;
    int workers = threads;
    if (workers <= 0)
        workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    CampaignTotals tot;
    std::vector<FrameStat> slot;
    for (long long f0 = 0; f0 < frame_cap;) {
        const long long m = std::min(kBatch, frame_cap - f0);
        slot.assign(static_cast<size_t>(m), FrameStat{});
        const int w = static_cast<int>(std::min<long long>(workers, m));
        auto work = [&](int wid) {
            for (long long j = wid; j < m; j += w)
                slot[static_cast<size_t>(j)] =
                    sim_frame(code, model, reads, table, bp_max_iter,
                              make_stream(master_seed, point, static_cast<uint64_t>(f0 + j)));
        };
        if (w <= 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(w);
            for (int i = 0; i < w; ++i) pool.emplace_back(work, i);
            for (auto& th : pool) th.join();
        }
        for (const FrameStat& st : slot) {
            tot.err_msb += st.err_msb;
            tot.err_lsb += st.err_lsb;
            tot.frame_errs += st.frame_err;
            tot.iters += st.iters;
        }
        f0 += m;
        tot.frames = f0;
        if (tot.err_msb + tot.err_lsb >= stop_min_events) {
            tot.stopped_by_events = true;
            break;
        }
    }
    return tot;
}

ReadVoltages reads_for_scheme(const RunConfig& cfg, const StateModel& model, int d_min,
                              std::optional<double>* theta_out) {
    switch (cfg.read.scheme) {
        case ReadScheme::Proposed: {
            if (!cfg.read.weights)
                throw MissingDependency(
                    "read scheme 'proposed' needs calibrated weights "
                    "(read.c1/read.c2, --weights, or a calibration file)");
            const ThetaResult tr = optimize_theta(model, d_min, *cfg.read.weights,
                                                  cfg.read.theta_lo, cfg.read.theta_hi,
                                                  cfg.read.tol);
            *theta_out = tr.theta_star;
            return tr.reads;
        }
        case ReadScheme::Uniform:
            return uniform_reads(model);
        case ReadScheme::Mmi:
            return mmi_reads(model);
        case ReadScheme::EntropyFixed: {
            ReadVoltages rv = solve_read_voltages(model, cfg.read.theta);
            *theta_out = cfg.read.theta;
            return rv;
        }
    }
    throw std::logic_error("reads_for_scheme: bad scheme");
}

}  // namespace

ResolvedPoint resolve_point(const RunConfig& cfg, const LdpcCode& code, double pe, double t,
                            const Lut* lut) {
    ChannelParams p = cfg.channel;
    p.pe = pe;
    p.t_ret = t;
    ResolvedPoint out;
    out.d_min = code.d_min_est();
    if (out.d_min < 1) throw LdpcError("resolve_point: code is missing its d_min estimate");

    if (lut) {
        const LutRecord* rec = lut->nearest(pe, t);
        if (!rec) throw MissingDependency("LUT is empty");
        if (!rec->valid)
            throw MissingDependency("LUT point pe=" + format_double(rec->pe) +
                                    " t=" + format_double(rec->t) + " is invalid: " + rec->error);
        out.write = {rec->v1, rec->v2};
        out.model = build_state_model(p, out.write);
        out.reads.r = rec->reads;
        out.reads.theta = rec->theta;
        out.theta = rec->theta;
        out.d_min = rec->d_min;
        out.table = llr_table(out.model, out.reads);
        return out;
    }

    const WriteResult wr =
        run_write_scheme(cfg.write.scheme, p, out.d_min, cfg.write.search, cfg.write.fixed);
    out.write = wr.v;
    out.model = build_state_model(p, wr.v);
    out.reads = reads_for_scheme(cfg, out.model, out.d_min, &out.theta);
    out.table = llr_table(out.model, out.reads);
    return out;
}

PointResult run_point(const RunConfig& cfg, const LdpcCode& code, double pe, double t,
                      const Lut* lut) {
    const auto t0 = std::chrono::steady_clock::now();
    const ResolvedPoint rp = resolve_point(cfg, code, pe, t, lut);
    const CampaignTotals tot =
        run_frames(code, rp.model, rp.reads, rp.table, cfg.harness.bp_max_iter,
                   cfg.harness.master_seed, point_key(pe, t), cfg.harness.frames,
                   cfg.harness.stop_min_events, cfg.harness.threads);

    PointResult r;
    r.pe = pe;
    r.t = t;
    r.write_scheme = cfg.write.scheme;
    r.read_scheme = cfg.read.scheme;
    const double bits = static_cast<double>(tot.frames) * code.n();
    r.ber_msb = tot.err_msb / bits;
    r.ber_lsb = tot.err_lsb / bits;
    r.ber_total = (tot.err_msb + tot.err_lsb) / (2.0 * bits);
    r.fer = tot.frame_errs / static_cast<double>(tot.frames);
    r.frames = tot.frames;
    r.events = tot.err_msb + tot.err_lsb;
    r.mean_iters = tot.iters / (2.0 * tot.frames);
    r.stopped_by_events = tot.stopped_by_events;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<PointResult> run_sweep(const RunConfig& cfg, const LdpcCode& code, std::ostream* csv,
                                   const Lut* lut) {
    if (csv) write_csv_header(*csv);
    std::vector<PointResult> out;
    for (double pe : cfg.sweep.pe_list) {
        for (double t : cfg.sweep.t_list) {
            out.push_back(run_point(cfg, code, pe, t, lut));
            if (csv) {
                write_csv_row(*csv, out.back());
                csv->flush();  // keep completed rows on interruption
            }
        }
    }
    return out;
}

void write_csv_header(std::ostream& os) {
    os << "pe,t_ret,write_scheme,read_scheme,ber_msb,ber_lsb,ber_total,fer,frames,events,"
          "mean_iters\n";
}

void write_csv_row(std::ostream& os, const PointResult& r) {
    os << format_double(r.pe) << ',' << format_double(r.t) << ',' << to_string(r.write_scheme)
       << ',' << to_string(r.read_scheme) << ',' << format_double(r.ber_msb) << ','
       << format_double(r.ber_lsb) << ',' << format_double(r.ber_total) << ','
       << format_double(r.fer) << ',' << r.frames << ',' << r.events << ','
       << format_double(r.mean_iters) << '\n';
}

const LutRecord* Lut::nearest(double pe, double t) const {
    const LutRecord* best = nullptr;
    double best_d = kInf;
    for (const auto& rec : points) {
        const double d = (rec.pe - pe) * (rec.pe - pe) + (rec.t - t) * (rec.t - t);
        if (d < best_d) {
            best_d = d;
            best = &rec;
        }
    }
    return best;
}

void Lut::save(std::ostream& os) const {
    for (const auto& rec : points) {
        os << "[point pe=" << format_sig9(rec.pe) << " t=" << format_sig9(rec.t) << "]\n";
        os << "valid = " << (rec.valid ? 1 : 0) << '\n';
        if (!rec.valid) {
            os << "error = " << rec.error << '\n';
            continue;
        }
        os << "v1 = " << format_sig9(rec.v1) << '\n';
        os << "v2 = " << format_sig9(rec.v2) << '\n';
        os << "theta = " << format_sig9(rec.theta) << '\n';
        for (int i = 0; i < 6; ++i)
            os << 'r' << i + 1 << " = " << format_sig9(rec.reads[i]) << '\n';
        os << "c1 = " << format_sig9(rec.c1) << '\n';
        os << "c2 = " << format_sig9(rec.c2) << '\n';
        os << "dmin = " << rec.d_min << '\n';
    }
}

Lut Lut::load(std::istream& is) {
    const KvFile kv = KvFile::parse(is);
    Lut lut;
    for (const auto& sec : kv.sections) {
        if (sec.name.empty()) {
            if (!sec.entries.empty())
                throw ConfigError("lut: keys before the first [point] block");
            continue;
        }
        if (sec.name != "point")
            throw ConfigError("lut: unexpected section [" + sec.name + "]");
        LutRecord rec;
        bool have_pe = false, have_t = false;
        for (const auto& [k, v] : sec.attrs) {
            if (k == "pe") {
                rec.pe = kv_parse_double(v, sec.line);
                have_pe = true;
            } else if (k == "t") {
                rec.t = kv_parse_double(v, sec.line);
                have_t = true;
            } else {
                throw ConfigError("lut: unknown point attribute '" + k + "'");
            }
        }
        if (!have_pe || !have_t) throw ConfigError("lut: point block needs pe= and t=");
        for (const auto& e : sec.entries) {
            if (e.key == "valid") rec.valid = kv_parse_int(e.value, e.line) != 0;
            else if (e.key == "error") rec.error = e.value;
            else if (e.key == "v1") rec.v1 = kv_parse_double(e.value, e.line);
            else if (e.key == "v2") rec.v2 = kv_parse_double(e.value, e.line);
            else if (e.key == "theta") rec.theta = kv_parse_double(e.value, e.line);
            else if (e.key.size() == 2 && e.key[0] == 'r' && e.key[1] >= '1' && e.key[1] <= '6')
                rec.reads[e.key[1] - '1'] = kv_parse_double(e.value, e.line);
            else if (e.key == "c1") rec.c1 = kv_parse_double(e.value, e.line);
            else if (e.key == "c2") rec.c2 = kv_parse_double(e.value, e.line);
            else if (e.key == "dmin") rec.d_min = static_cast<int>(kv_parse_int(e.value, e.line));
            else throw ConfigError("lut: unknown key '" + e.key + "' at line " +
                                   std::to_string(e.line));
        }
        lut.points.push_back(std::move(rec));
    }
    return lut;
}

void Lut::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("lut: cannot open '" + path + "' for writing");
    save(os);
}

Lut Lut::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("lut: cannot open '" + path + "'");
    return load(is);
}

Lut build_lut(const RunConfig& cfg, const LdpcCode& code, std::ostream* log) {
    if (!cfg.read.weights)
        throw MissingDependency("build_lut needs cost weights (read.c1/read.c2 or --weights)");
    Lut lut;
    const int d_min = code.d_min_est();
    for (double pe : cfg.sweep.pe_list) {
        for (double t : cfg.sweep.t_list) {
            LutRecord rec;
            rec.pe = pe;
            rec.t = t;
            rec.d_min = d_min;
            rec.c1 = cfg.read.weights->c1;
            rec.c2 = cfg.read.weights->c2;
            try {
                ChannelParams p = cfg.channel;
                p.pe = pe;
                p.t_ret = t;
                const WriteResult wr = optimize_write(p, d_min, cfg.write.search);
                const StateModel model = build_state_model(p, wr.v);
                const ThetaResult tr =
                    optimize_theta(model, d_min, *cfg.read.weights, cfg.read.theta_lo,
                                   cfg.read.theta_hi, cfg.read.tol);
                rec.v1 = wr.v.v1;
                rec.v2 = wr.v.v2;
                rec.theta = tr.theta_star;
                rec.reads = tr.reads.r;
                rec.valid = true;
            } catch (const ChannelError& e) {
                rec.error = e.what();
            } catch (const ThetaOutOfRange& e) {
                rec.error = e.what();
            } catch (const OverlapError& e) {
                rec.error = e.what();
            } catch (const DegenerateBracket& e) {
                rec.error = e.what();
            }
            if (log && !rec.valid)
                *log << "lut: point pe=" << format_double(pe) << " t=" << format_double(t)
                     << " invalid: " << rec.error << '\n';
            lut.points.push_back(std::move(rec));
        }
    }
    if (log) {
        // Flag non-monotone V1* over PE at T=0 for inspection.
        const LutRecord* prev = nullptr;
        for (const auto& rec : lut.points) {
            if (rec.t != 0.0 || !rec.valid) continue;
            if (prev && rec.pe > prev->pe && rec.v1 > prev->v1 + 1e-9)
                *log << "lut: warning: v1 trend violation at pe=" << format_double(rec.pe)
                     << " (v1 " << format_sig9(rec.v1) << " > " << format_sig9(prev->v1)
                     << " at pe=" << format_double(prev->pe) << ")\n";
            prev = &rec;
        }
    }
    return lut;
}

void Calibration::save(std::ostream& os) const {
    os << "[calibration]\n";
    os << "pe = " << format_double(pe) << '\n';
    os << "t = " << format_double(t) << '\n';
    os << "dmin = " << d_min << '\n';
    os << "c1 = " << format_double(weights.c1) << '\n';
    os << "c2 = " << format_double(weights.c2) << '\n';
    auto join = [](const std::vector<double>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += format_double(v[i]);
        }
        return s;
    };
    os << "theta_grid = " << join(theta_grid) << '\n';
    os << "ber = " << join(ber) << '\n';
    os << "cost_pe = " << join(cost_pe) << '\n';
    os << "cost_llr = " << join(cost_llr) << '\n';
}

Calibration Calibration::load(std::istream& is) {
    const KvFile kv = KvFile::parse(is);
    const KvSection* sec = nullptr;
    for (const auto& s : kv.sections)
        if (s.name == "calibration") sec = &s;
    if (!sec) throw ConfigError("calibration: missing [calibration] section");
    Calibration c;
    for (const auto& e : sec->entries) {
        if (e.key == "pe") c.pe = kv_parse_double(e.value, e.line);
        else if (e.key == "t") c.t = kv_parse_double(e.value, e.line);
        else if (e.key == "dmin") c.d_min = static_cast<int>(kv_parse_int(e.value, e.line));
        else if (e.key == "c1") c.weights.c1 = kv_parse_double(e.value, e.line);
        else if (e.key == "c2") c.weights.c2 = kv_parse_double(e.value, e.line);
        else if (e.key == "theta_grid") c.theta_grid = kv_parse_list(e.value, e.line);
        else if (e.key == "ber") c.ber = kv_parse_list(e.value, e.line);
        else if (e.key == "cost_pe") c.cost_pe = kv_parse_list(e.value, e.line);
        else if (e.key == "cost_llr") c.cost_llr = kv_parse_list(e.value, e.line);
        else throw ConfigError("calibration: unknown key '" + e.key + "' at line " +
                               std::to_string(e.line));
    }
    return c;
}

void Calibration::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("calibration: cannot open '" + path + "' for writing");
    save(os);
}

Calibration Calibration::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("calibration: cannot open '" + path + "'");
    return load(is);
}

Calibration run_calibration(const RunConfig& cfg, const LdpcCode& code, double pe, double t) {
    ChannelParams p = cfg.channel;
    p.pe = pe;
    p.t_ret = t;
    const int d_min = code.d_min_est();
    const WriteResult wr =
        run_write_scheme(cfg.write.scheme, p, d_min, cfg.write.search, cfg.write.fixed);
    const StateModel model = build_state_model(p, wr.v);

    Calibration cal;
    cal.pe = pe;
    cal.t = t;
    cal.d_min = d_min;
    for (double theta : cfg.calibrate.theta_grid) {
        ReadVoltages reads;
        try {
            reads = solve_read_voltages(model, theta);
        } catch (const ThetaOutOfRange&) {
            continue;  // drop infeasible grid points
        } catch (const OverlapError&) {
            continue;
        }
        const LlrTable table = llr_table(model, reads);
        const Alphas a = alphas(table);
        const CampaignTotals tot = run_frames(
            code, model, reads, table, cfg.harness.bp_max_iter, cfg.harness.master_seed,
            mix64(point_key(pe, t) ^ std::bit_cast<uint64_t>(theta)), cfg.calibrate.frames,
            std::numeric_limits<long long>::max(), cfg.harness.threads);
        const double bits = static_cast<double>(tot.frames) * code.n();
        cal.theta_grid.push_back(theta);
        cal.ber.push_back((tot.err_msb + tot.err_lsb) / (2.0 * bits));
        cal.cost_pe.push_back(read_cost_pe(a, d_min));
        cal.cost_llr.push_back(read_cost_llr(a, d_min));
    }
    cal.weights = calibrate_weights(cal.theta_grid, cal.ber, cal.cost_pe, cal.cost_llr);
    return cal;
}

}  // namespace flashsim
