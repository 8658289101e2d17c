#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flashsim {

struct LdpcError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Progressive edge growth could not place an edge (or the result violates
// the girth requirement).
struct ConstructionFailed : LdpcError {
    using LdpcError::LdpcError;
};

// Variable-node degree profile: (degree, fraction of columns) pairs.
struct DegreeProfile {
    std::vector<std::pair<int, double>> entries;

    static DegreeProfile regular(int degree) { return {{{degree, 1.0}}}; }
    // "3" or "2:0.25,3:0.65,4:0.10"; fractions must sum to 1.
    static DegreeProfile parse(const std::string& text);
    std::string to_string() const;

    // Apportion degrees to n columns (largest remainder), ascending order.
    std::vector<int> column_degrees(int n) const;
};

class LdpcCode {
  public:
    int n() const { return n_; }
    int k() const { return static_cast<int>(info_cols_.size()); }
    int num_checks() const { return static_cast<int>(check_vars_.size()); }
    const std::vector<std::vector<int>>& check_vars() const { return check_vars_; }
    const std::vector<std::vector<int>>& var_checks() const { return var_checks_; }
    const std::vector<int>& info_cols() const { return info_cols_; }

    int d_min_est() const { return d_min_est_; }
    void set_d_min_est(int d) { d_min_est_ = d; }

    // Build from an explicit parity-check adjacency (vars per check row).
    static LdpcCode from_parity_check(int n, std::vector<std::vector<int>> check_vars);

    // Systematic encode: message bits appear verbatim at info_cols().
    std::vector<uint8_t> encode(std::span<const uint8_t> msg) const;
    bool is_codeword(std::span<const uint8_t> bits) const;

  private:
    void build_encoder();

    int n_ = 0;
    std::vector<std::vector<int>> check_vars_;
    std::vector<std::vector<int>> var_checks_;
    std::vector<int> pivot_cols_;                // one per reduced parity row
    std::vector<std::vector<int>> row_info_;     // message indices XORed per row
    std::vector<int> info_cols_;
    int d_min_est_ = 0;
};

// Progressive-edge-growth construction with n - k checks.  Deterministic for
// a given seed (ties between candidate checks are broken by the seeded RNG).
// Throws ConstructionFailed when an edge cannot be placed or a length-4
// cycle survives.
LdpcCode peg_construct(int n, int k, const DegreeProfile& profile, uint64_t seed);

// True when two columns share two check rows (Tanner girth < 6).
bool has_four_cycle(const LdpcCode& code);

struct BpOptions {
    int max_iter = 50;
    bool early_exit = true;   // stop as soon as the syndrome clears
    double clamp = 50.0;      // message magnitude limit
};

struct BpResult {
    std::vector<uint8_t> bits;      // hard decisions (positive LLR -> 0)
    std::vector<double> posterior;  // total LLR per variable
    int iterations = 0;
    bool converged = false;         // final syndrome is zero
};

BpResult bp_decode(const LdpcCode& code, std::span<const double> llr,
                   const BpOptions& opt = {});

// Upper bound on the minimum distance.  Exact (exhaustive) when n <= 24;
// otherwise the lightest codeword found over `trials` random information-set
// reductions.  Deterministic given seed.
int estimate_d_min(const LdpcCode& code, int trials, uint64_t seed);

// alist text serialisation of the parity-check matrix.
void save_alist(const LdpcCode& code, std::ostream& os);
LdpcCode load_alist(std::istream& is);
void save_alist_file(const LdpcCode& code, const std::string& path);
LdpcCode load_alist_file(const std::string& path);

}  // namespace flashsim
