#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dfr {

// Aggregation structure of a count hierarchy. Variables are ordered with the
// m basis (bottom-level) series first; each of the remaining n-m determined
// series is a nonnegative integer combination of the basis given by one row
// of agg_rows. Determined domain bounds are always derived from the basis
// bounds, never user-supplied.
struct Hierarchy {
    int n_total = 0;
    int n_basis = 0;
    std::vector<std::vector<int>> agg_rows;  // (n_total - n_basis) x n_basis
    std::vector<int> domain_max;             // length n_total

    static Hierarchy make(int n_basis, std::vector<std::vector<int>> agg_rows,
                          std::vector<int> domain_max_basis);
    static Hierarchy from_json(const std::string& json_text);
    static Hierarchy load(const std::string& path);

    std::string to_json() const;
    void validate() const;

    // Value of determined variable `row` at the given basis coordinates.
    int aggregate(int row, std::span<const int> basis) const;

    // Stable structural fingerprint; guards trained matrices against being
    // applied to a different hierarchy.
    std::uint64_t structure_hash() const;
};

enum class DomainKind { complete, coherent };

// Enumerated complete/coherent domains with canonical index maps. Canonical
// ordering is mixed-radix over (y_1,...,y_n) with y_1 most significant and
// y_n varying fastest; the coherent ordering applies the same rule to the
// basis variables. Immutable after construction.
class DomainTables {
public:
    static constexpr std::uint64_t kDefaultCap = 1ULL << 20;

    static DomainTables build(const Hierarchy& h, std::uint64_t max_complete = kDefaultCap);

    std::int64_t q() const { return q_; }
    std::int64_t r() const { return r_; }
    int n_vars() const { return n_; }
    int n_basis() const { return m_; }
    const Hierarchy& hierarchy() const { return hier_; }

    std::span<const int> complete_point(std::int64_t j) const {
        return {complete_points_.data() + j * n_, static_cast<std::size_t>(n_)};
    }
    std::span<const int> coherent_point(std::int64_t k) const {
        return {coherent_points_.data() + k * n_, static_cast<std::size_t>(n_)};
    }

    // Index of a complete-domain point j in the coherent domain, or -1.
    std::int64_t coherent_index_of(std::int64_t j) const { return coherent_of_complete_[j]; }

    std::int64_t point_to_index(std::span<const int> point, DomainKind kind) const;

    // Coherent index from basis coordinates alone.
    std::int64_t basis_to_coherent(std::span<const int> basis) const;

private:
    Hierarchy hier_;
    int n_ = 0;
    int m_ = 0;
    std::int64_t q_ = 0;
    std::int64_t r_ = 0;
    std::vector<int> complete_points_;              // q * n, row-major
    std::vector<int> coherent_points_;              // r * n, row-major
    std::vector<std::int64_t> coherent_of_complete_;  // size q, -1 if incoherent
    std::vector<std::int64_t> complete_strides_;    // mixed-radix strides, length n
    std::vector<std::int64_t> basis_strides_;       // length m
};

// Probability vector over an enumerated domain.
struct IndexedPmf {
    DomainKind kind = DomainKind::complete;
    std::vector<double> probs;

    void validate(double tol = 1e-9) const;
};

// Marginal pmf of one variable: out[v] = sum of probs over points with
// y_var = v.
std::vector<double> marginalize(const IndexedPmf& pmf, const DomainTables& tbl, int var);

// Sum check helper shared by pmf-producing operations.
double pmf_sum(std::span<const double> probs);

}  // namespace dfr
