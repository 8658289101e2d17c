#include "flashsim/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "flashsim/rng.hpp"

namespace flashsim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

DegreeProfile DegreeProfile::parse(const std::string& text) {
    DegreeProfile p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw LdpcError("degree profile: empty entry");
        const auto colon = item.find(':');
        try {
            if (colon == std::string::npos) {
                p.entries.emplace_back(std::stoi(item), 1.0);
            } else {
                p.entries.emplace_back(std::stoi(item.substr(0, colon)),
                                       std::stod(item.substr(colon + 1)));
            }
        } catch (const std::exception&) {
            throw LdpcError("degree profile: cannot parse '" + item + "'");
        }
    }
    if (p.entries.empty()) throw LdpcError("degree profile: empty");
    if (p.entries.size() > 1 || p.entries[0].second != 1.0) {
        double sum = 0.0;
        for (auto& [d, f] : p.entries) {
            if (f <= 0.0) throw LdpcError("degree profile: fractions must be positive");
            sum += f;
        }
        if (std::fabs(sum - 1.0) > 1e-6)
            throw LdpcError("degree profile: fractions must sum to 1");
    }
    for (auto& [d, f] : p.entries)
        if (d < 2) throw LdpcError("degree profile: degrees must be >= 2");
    return p;
}

std::string DegreeProfile::to_string() const {
    std::ostringstream os;
    if (entries.size() == 1 && entries[0].second == 1.0) {
        os << entries[0].first;
        return os.str();
    }
    for (size_t i = 0; i < entries.size(); ++i) {
        if (i) os << ',';
        os << entries[i].first << ':' << entries[i].second;
    }
    return os.str();
}

std::vector<int> DegreeProfile::column_degrees(int n) const {
    struct Slot { int degree; int count; double frac; };
    std::vector<Slot> slots;
    for (auto& [d, f] : entries) {
        const double exact = f * n;
        slots.push_back({d, static_cast<int>(std::floor(exact)), exact - std::floor(exact)});
    }
    int assigned = 0;
    for (auto& s : slots) assigned += s.count;
    // Largest remainder, ties to the lower degree, keeps the split deterministic.
    std::vector<int> order(slots.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (slots[a].frac != slots[b].frac) return slots[a].frac > slots[b].frac;
        return slots[a].degree < slots[b].degree;
    });
    for (int i = 0; assigned < n; ++i) {
        slots[order[i % order.size()]].count++;
        assigned++;
    }
    std::vector<int> degrees;
    degrees.reserve(n);
    std::vector<Slot> by_degree = slots;
    std::sort(by_degree.begin(), by_degree.end(),
              [](const Slot& a, const Slot& b) { return a.degree < b.degree; });
    for (auto& s : by_degree) degrees.insert(degrees.end(), s.count, s.degree);
    if (static_cast<int>(degrees.size()) != n)
        throw LdpcError("degree profile: apportionment failed");
    return degrees;
}

LdpcCode LdpcCode::from_parity_check(int n, std::vector<std::vector<int>> check_vars) {
    if (n <= 0 || check_vars.empty()) throw LdpcError("parity check: empty");
    LdpcCode code;
    code.n_ = n;
    code.check_vars_ = std::move(check_vars);
    code.var_checks_.assign(n, {});
    for (size_t c = 0; c < code.check_vars_.size(); ++c) {
        auto& row = code.check_vars_[c];
        std::sort(row.begin(), row.end());
        if (std::adjacent_find(row.begin(), row.end()) != row.end())
            throw LdpcError("parity check: duplicate edge in a row");
        for (int v : row) {
            if (v < 0 || v >= n) throw LdpcError("parity check: column index out of range");
            code.var_checks_[v].push_back(static_cast<int>(c));
        }
    }
    code.build_encoder();
    return code;
}

void LdpcCode::build_encoder() {
    const int eta = num_checks();
    const int words = (n_ + 63) / 64;
    std::vector<std::vector<uint64_t>> rows(eta, std::vector<uint64_t>(words, 0));
    for (int r = 0; r < eta; ++r)
        for (int v : check_vars_[r]) rows[r][v >> 6] ^= 1ULL << (v & 63);

    auto bit = [&](int r, int c) { return (rows[r][c >> 6] >> (c & 63)) & 1ULL; };

    pivot_cols_.clear();
    int rank = 0;
    for (int col = 0; col < n_ && rank < eta; ++col) {
        int piv = -1;
        for (int r = rank; r < eta; ++r)
            if (bit(r, col)) { piv = r; break; }
        if (piv < 0) continue;
        std::swap(rows[rank], rows[piv]);
        for (int r = 0; r < eta; ++r) {
            if (r != rank && bit(r, col))
                for (int w = 0; w < words; ++w) rows[r][w] ^= rows[rank][w];
        }
        pivot_cols_.push_back(col);
        ++rank;
    }

    std::vector<char> is_pivot(n_, 0);
    for (int c : pivot_cols_) is_pivot[c] = 1;
    info_cols_.clear();
    std::vector<int> msg_index(n_, -1);
    for (int c = 0; c < n_; ++c) {
        if (!is_pivot[c]) {
            msg_index[c] = static_cast<int>(info_cols_.size());
            info_cols_.push_back(c);
        }
    }
    row_info_.assign(rank, {});
    for (int r = 0; r < rank; ++r) {
        for (int w = 0; w < words; ++w) {
            uint64_t word = rows[r][w];
            while (word) {
                const int c = (w << 6) + std::countr_zero(word);
                word &= word - 1;
                if (c != pivot_cols_[r]) row_info_[r].push_back(msg_index[c]);
            }
        }
    }
}

std::vector<uint8_t> LdpcCode::encode(std::span<const uint8_t> msg) const {
    if (static_cast<int>(msg.size()) != k())
        throw LdpcError("encode: message length must equal k");
    std::vector<uint8_t> cw(n_, 0);
    for (size_t j = 0; j < msg.size(); ++j) cw[info_cols_[j]] = msg[j] & 1;
    for (size_t r = 0; r < row_info_.size(); ++r) {
        uint8_t acc = 0;
        for (int idx : row_info_[r]) acc ^= msg[idx] & 1;
        cw[pivot_cols_[r]] = acc;
    }
    return cw;
}

bool LdpcCode::is_codeword(std::span<const uint8_t> bits) const {
    if (static_cast<int>(bits.size()) != n_) return false;
    for (const auto& row : check_vars_) {
        uint8_t acc = 0;
        for (int v : row) acc ^= bits[v] & 1;
        if (acc) return false;
    }
    return true;
}

namespace {

int pick_tied_min(const std::vector<int>& candidates, const std::vector<int>& degree,
                  std::mt19937_64& rng) {
    int best = std::numeric_limits<int>::max();
    for (int c : candidates) best = std::min(best, degree[c]);
    std::vector<int> tied;
    for (int c : candidates) if (degree[c] == best) tied.push_back(c);
    if (tied.size() == 1) return tied[0];
    std::uniform_int_distribution<size_t> pick(0, tied.size() - 1);
    return tied[pick(rng)];
}

}  // namespace

LdpcCode peg_construct(int n, int k, const DegreeProfile& profile, uint64_t seed) {
    if (n <= 1 || k <= 0 || k >= n) throw ConstructionFailed("peg: need 0 < k < n");
    const int eta = n - k;
    const std::vector<int> degrees = profile.column_degrees(n);
    for (int d : degrees)
        if (d > eta) throw ConstructionFailed("peg: column degree exceeds check count");

    std::mt19937_64 rng(mix64(seed));
    std::vector<std::vector<int>> check_vars(eta), var_checks(n);
    std::vector<int> check_deg(eta, 0);
    std::vector<int> all_checks(eta);
    std::iota(all_checks.begin(), all_checks.end(), 0);

    std::vector<char> creached(eta), vseen(n);
    std::vector<int> frontier, next_frontier, newly, last_layer, candidates;

    for (int v = 0; v < n; ++v) {
        for (int t = 0; t < degrees[v]; ++t) {
            int chosen;
            if (t == 0) {
                chosen = pick_tied_min(all_checks, check_deg, rng);
            } else {
                // Breadth-first expansion from v over the current graph.
                std::fill(creached.begin(), creached.end(), 0);
                std::fill(vseen.begin(), vseen.end(), 0);
                frontier.assign(1, v);
                vseen[v] = 1;
                last_layer.clear();
                while (!frontier.empty()) {
                    newly.clear();
                    for (int u : frontier)
                        for (int c : var_checks[u])
                            if (!creached[c]) { creached[c] = 1; newly.push_back(c); }
                    if (newly.empty()) break;
                    last_layer = newly;
                    next_frontier.clear();
                    for (int c : newly)
                        for (int u : check_vars[c])
                            if (!vseen[u]) { vseen[u] = 1; next_frontier.push_back(u); }
                    frontier.swap(next_frontier);
                }
                candidates.clear();
                for (int c = 0; c < eta; ++c)
                    if (!creached[c]) candidates.push_back(c);
                if (candidates.empty()) {
                    // Whole graph reachable: fall back to the deepest layer.
                    for (int c : last_layer) candidates.push_back(c);
                    // Never reuse a check already attached to v.
                    std::erase_if(candidates, [&](int c) {
                        return std::find(var_checks[v].begin(), var_checks[v].end(), c) !=
                               var_checks[v].end();
                    });
                }
                if (candidates.empty())
                    throw ConstructionFailed("peg: no candidate check for variable " +
                                             std::to_string(v));
                chosen = pick_tied_min(candidates, check_deg, rng);
            }
            check_vars[chosen].push_back(v);
            var_checks[v].push_back(chosen);
            ++check_deg[chosen];
        }
    }

    LdpcCode code = LdpcCode::from_parity_check(n, std::move(check_vars));
    if (has_four_cycle(code))
        throw ConstructionFailed("peg: a length-4 cycle survived");
    return code;
}

bool has_four_cycle(const LdpcCode& code) {
    std::unordered_set<uint64_t> seen;
    for (int v = 0; v < code.n(); ++v) {
        const auto& checks = code.var_checks()[v];
        for (size_t i = 0; i < checks.size(); ++i)
            for (size_t j = i + 1; j < checks.size(); ++j) {
                const uint64_t key =
                    (static_cast<uint64_t>(checks[i]) << 32) | static_cast<uint32_t>(checks[j]);
                if (!seen.insert(key).second) return true;
            }
    }
    return false;
}

BpResult bp_decode(const LdpcCode& code, std::span<const double> llr, const BpOptions& opt) {
    const int n = code.n();
    const int eta = code.num_checks();
    if (static_cast<int>(llr.size()) != n) throw LdpcError("bp_decode: llr length != n");
    if (opt.max_iter < 1) throw LdpcError("bp_decode: max_iter must be >= 1");

    // Flatten the graph into CSR edge arrays.
    std::vector<int> check_start(eta + 1, 0);
    for (int c = 0; c < eta; ++c)
        check_start[c + 1] = check_start[c] + static_cast<int>(code.check_vars()[c].size());
    const int edges = check_start[eta];
    std::vector<int> edge_var(edges);
    std::vector<std::vector<int>> var_edges(n);
    for (int c = 0; c < eta; ++c) {
        int e = check_start[c];
        for (int v : code.check_vars()[c]) {
            edge_var[e] = v;
            var_edges[v].push_back(e);
            ++e;
        }
    }

    const double clamp = opt.clamp;
    auto clip = [clamp](double x) { return x > clamp ? clamp : (x < -clamp ? -clamp : x); };
    constexpr double kTanhLim = 1.0 - 1e-12;

    std::vector<double> m_vc(edges), m_cv(edges, 0.0), scratch, fwd;
    for (int e = 0; e < edges; ++e) m_vc[e] = clip(llr[edge_var[e]]);

    BpResult res;
    res.bits.assign(n, 0);
    res.posterior.assign(n, 0.0);

    for (int it = 1; it <= opt.max_iter; ++it) {
        // Check-node pass: tanh-rule with forward/backward partial products.
        for (int c = 0; c < eta; ++c) {
            const int e0 = check_start[c], e1 = check_start[c + 1];
            const int deg = e1 - e0;
            scratch.resize(deg);
            fwd.resize(deg);
            for (int i = 0; i < deg; ++i) scratch[i] = std::tanh(0.5 * m_vc[e0 + i]);
            double back = 1.0;
            double acc = 1.0;
            for (int i = 0; i < deg; ++i) { fwd[i] = acc; acc *= scratch[i]; }
            for (int i = deg - 1; i >= 0; --i) {
                double prod = fwd[i] * back;
                if (prod > kTanhLim) prod = kTanhLim;
                if (prod < -kTanhLim) prod = -kTanhLim;
                m_cv[e0 + i] = 2.0 * std::atanh(prod);
                back *= scratch[i];
            }
        }
        // Variable-node pass and hard decisions.
        for (int v = 0; v < n; ++v) {
            double total = llr[v];
            for (int e : var_edges[v]) total += m_cv[e];
            res.posterior[v] = total;
            res.bits[v] = total < 0.0 ? 1 : 0;
            for (int e : var_edges[v]) m_vc[e] = clip(total - m_cv[e]);
        }
        res.iterations = it;
        bool clean = true;
        for (int c = 0; c < eta && clean; ++c) {
            uint8_t acc = 0;
            for (int e = check_start[c]; e < check_start[c + 1]; ++e) acc ^= res.bits[edge_var[e]];
            clean = (acc == 0);
        }
        res.converged = clean;
        if (clean && opt.early_exit) break;
    }
    return res;
}

namespace {

int exhaustive_d_min(const LdpcCode& code) {
    const int n = code.n();
    const int k = code.k();
    std::vector<uint32_t> gen(k, 0);
    std::vector<uint8_t> unit(k, 0);
    for (int j = 0; j < k; ++j) {
        unit[j] = 1;
        const auto cw = code.encode(unit);
        unit[j] = 0;
        for (int b = 0; b < n; ++b)
            if (cw[b]) gen[j] |= 1u << b;
    }
    uint32_t cw = 0;
    int best = std::numeric_limits<int>::max();
    const uint64_t total = 1ULL << k;
    for (uint64_t i = 1; i < total; ++i) {
        cw ^= gen[std::countr_zero(i)];  // Gray-code walk over all messages
        best = std::min(best, std::popcount(cw));
    }
    return best;
}

}  // namespace

int estimate_d_min(const LdpcCode& code, int trials, uint64_t seed) {
    const int n = code.n();
    if (n <= 24) return exhaustive_d_min(code);
    if (trials < 1) throw LdpcError("estimate_d_min: trials must be >= 1");

    const int eta = code.num_checks();
    const int words = (n + 63) / 64;
    std::vector<std::vector<uint64_t>> base(eta, std::vector<uint64_t>(words, 0));
    for (int r = 0; r < eta; ++r)
        for (int v : code.check_vars()[r]) base[r][v >> 6] ^= 1ULL << (v & 63);

    std::mt19937_64 rng(mix64(seed ^ 0x9d2c5680ULL));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    int best = std::numeric_limits<int>::max();
    std::vector<std::vector<uint64_t>> rows;
    std::vector<int> pivot_col;
    std::vector<char> is_pivot(n);
    std::vector<uint8_t> best_cw;

    for (int trial = 0; trial < trials; ++trial) {
        std::shuffle(perm.begin(), perm.end(), rng);
        rows = base;
        pivot_col.clear();
        std::fill(is_pivot.begin(), is_pivot.end(), 0);
        auto bit = [&](int r, int c) { return (rows[r][c >> 6] >> (c & 63)) & 1ULL; };
        int rank = 0;
        for (int idx : perm) {
            if (rank == eta) break;
            int piv = -1;
            for (int r = rank; r < eta; ++r)
                if (bit(r, idx)) { piv = r; break; }
            if (piv < 0) continue;
            std::swap(rows[rank], rows[piv]);
            for (int r = 0; r < eta; ++r)
                if (r != rank && bit(r, idx))
                    for (int w = 0; w < words; ++w) rows[r][w] ^= rows[rank][w];
            pivot_col.push_back(idx);
            is_pivot[idx] = 1;
            ++rank;
        }
        // Column masks over the reduced rows.
        const int rwords = (rank + 63) / 64;
        std::vector<std::vector<uint64_t>> colmask(n, std::vector<uint64_t>(rwords, 0));
        for (int r = 0; r < rank; ++r) {
            for (int w = 0; w < words; ++w) {
                uint64_t word = rows[r][w];
                while (word) {
                    const int c = (w << 6) + std::countr_zero(word);
                    word &= word - 1;
                    colmask[c][r >> 6] |= 1ULL << (r & 63);
                }
            }
        }
        auto col_weight = [&](int c) {
            int w = 0;
            for (int i = 0; i < rwords; ++i) w += std::popcount(colmask[c][i]);
            return w;
        };
        auto build_cw = [&](int f, int g) {
            std::vector<uint8_t> cw(n, 0);
            cw[f] = 1;
            std::vector<uint64_t> mask = colmask[f];
            if (g >= 0) {
                cw[g] ^= 1;
                for (int w = 0; w < rwords; ++w) mask[w] ^= colmask[g][w];
            }
            for (int r = 0; r < rank; ++r)
                if ((mask[r >> 6] >> (r & 63)) & 1ULL) cw[pivot_col[r]] ^= 1;
            return cw;
        };

        // Each free column yields the codeword with a single 1 outside the
        // pivot set; light pairs are also combined (cheap, tightens the bound).
        std::vector<std::pair<int, int>> light;  // (weight, col)
        for (int c = 0; c < n; ++c) {
            if (is_pivot[c]) continue;
            const int w = 1 + col_weight(c);
            light.emplace_back(w, c);
            if (w < best) {
                best = w;
                best_cw = build_cw(c, -1);
            }
        }
        std::sort(light.begin(), light.end());
        const size_t top = std::min<size_t>(light.size(), 16);
        for (size_t i = 0; i < top; ++i) {
            for (size_t j = i + 1; j < top; ++j) {
                const int f = light[i].second, g = light[j].second;
                int w = 2;
                for (int wd = 0; wd < rwords; ++wd)
                    w += std::popcount(colmask[f][wd] ^ colmask[g][wd]);
                if (w < best) {
                    best = w;
                    best_cw = build_cw(f, g);
                }
            }
        }
    }
    if (!best_cw.empty() && !code.is_codeword(best_cw))
        throw LdpcError("estimate_d_min: internal witness is not a codeword");
    return best;
}

void save_alist(const LdpcCode& code, std::ostream& os) {
    const int n = code.n();
    const int eta = code.num_checks();
    size_t maxc = 0, maxr = 0;
    for (const auto& l : code.var_checks()) maxc = std::max(maxc, l.size());
    for (const auto& l : code.check_vars()) maxr = std::max(maxr, l.size());
    os << n << ' ' << eta << '\n' << maxc << ' ' << maxr << '\n';
    for (int v = 0; v < n; ++v) os << code.var_checks()[v].size() << (v + 1 < n ? ' ' : '\n');
    for (int c = 0; c < eta; ++c) os << code.check_vars()[c].size() << (c + 1 < eta ? ' ' : '\n');
    for (int v = 0; v < n; ++v) {
        const auto& l = code.var_checks()[v];
        for (size_t i = 0; i < maxc; ++i)
            os << (i < l.size() ? l[i] + 1 : 0) << (i + 1 < maxc ? ' ' : '\n');
    }
    for (int c = 0; c < eta; ++c) {
        const auto& l = code.check_vars()[c];
        for (size_t i = 0; i < maxr; ++i)
            os << (i < l.size() ? l[i] + 1 : 0) << (i + 1 < maxr ? ' ' : '\n');
    }
}

LdpcCode load_alist(std::istream& is) {
    auto next = [&is]() {
        long long x;
        if (!(is >> x)) throw LdpcError("alist: truncated file");
        return x;
    };
    const long long n = next(), eta = next();
    if (n <= 0 || eta <= 0 || n > 1'000'000 || eta > 1'000'000)
        throw LdpcError("alist: implausible dimensions");
    const long long maxc = next(), maxr = next();
    std::vector<int> cdeg(n), rdeg(eta);
    for (auto& d : cdeg) d = static_cast<int>(next());
    for (auto& d : rdeg) d = static_cast<int>(next());
    long long col_edges = 0, row_edges = 0;
    for (int d : cdeg) col_edges += d;
    for (int d : rdeg) row_edges += d;
    if (col_edges != row_edges) throw LdpcError("alist: edge counts disagree");
    // Variable lists (only cross-checked against the row lists below).
    std::vector<std::vector<int>> var_checks(n);
    for (long long v = 0; v < n; ++v) {
        for (long long i = 0; i < maxc; ++i) {
            const long long c = next();
            if (c == 0) continue;
            if (c < 1 || c > eta) throw LdpcError("alist: check index out of range");
            var_checks[v].push_back(static_cast<int>(c - 1));
        }
        if (static_cast<int>(var_checks[v].size()) != cdeg[v])
            throw LdpcError("alist: column degree mismatch");
    }
    std::vector<std::vector<int>> check_vars(eta);
    for (long long c = 0; c < eta; ++c) {
        for (long long i = 0; i < maxr; ++i) {
            const long long v = next();
            if (v == 0) continue;
            if (v < 1 || v > n) throw LdpcError("alist: variable index out of range");
            check_vars[c].push_back(static_cast<int>(v - 1));
        }
        if (static_cast<int>(check_vars[c].size()) != rdeg[c])
            throw LdpcError("alist: row degree mismatch");
    }
    LdpcCode code = LdpcCode::from_parity_check(static_cast<int>(n), std::move(check_vars));
    // Cross-validate the two adjacency blocks.
    for (int v = 0; v < code.n(); ++v) {
        auto sorted = var_checks[v];
        std::sort(sorted.begin(), sorted.end());
        if (sorted != code.var_checks()[v]) throw LdpcError("alist: adjacency blocks disagree");
    }
    return code;
}

void save_alist_file(const LdpcCode& code, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw LdpcError("alist: cannot open '" + path + "' for writing");
    save_alist(code, os);
    if (!os) throw LdpcError("alist: write failed for '" + path + "'");
}

LdpcCode load_alist_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw LdpcError("alist: cannot open '" + path + "'");
    return load_alist(is);
}

}  // namespace flashsim
