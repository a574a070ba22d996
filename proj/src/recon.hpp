#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hierarchy.hpp"
#include "qp.hpp"

namespace dfr {

// Support structure of the reconciliation matrix under the movement
// restriction: a coherent complete-domain column is fixed to its own coherent
// index; an incoherent column may only send mass to its nearest coherent
// points under L1 distance (all ties kept as free entries).
struct MovementPattern {
    std::int64_t r = 0;
    std::int64_t q = 0;
    std::vector<std::int64_t> fixed_target;              // per column, -1 if free
    std::vector<std::vector<std::int64_t>> free_targets;  // per column, empty if fixed
    std::vector<int> costs_min;                          // per column, 0 for fixed

    std::int64_t free_entry_count() const;
    std::int64_t fixed_count() const;
};

MovementPattern build_movement_pattern(const DomainTables& tbl);

// Sparse r x q column-stochastic reassignment matrix.
struct ReconMatrix {
    std::int64_t r = 0;
    std::int64_t q = 0;
    struct Entry {
        std::int64_t k;
        std::int64_t j;
        double value;
    };
    std::vector<Entry> entries;
    int horizon = 1;
    std::uint64_t pattern_hash = 0;

    void validate() const;
    std::string to_json() const;
    static ReconMatrix from_json(const std::string& json_text);
    void save(const std::string& path) const;
    static ReconMatrix load(const std::string& path);

    // Dense copy, for tests and small problems.
    std::vector<std::vector<double>> dense() const;
};

// pi_tilde = A * pi_hat; negative round-off clamped and the result
// renormalized.
IndexedPmf apply(const ReconMatrix& mat, const IndexedPmf& base);

// One training window: incoherent base forecast plus realized coherent point.
struct ForecastPair {
    IndexedPmf base;                  // complete-domain pmf, length q
    std::int64_t realized_coherent;   // index of the one-hot z vector
};

// Averaged-Brier objective as an explicit QP over the free entries.
struct AssembledQp {
    qp::Problem problem;
    double constant = 0.0;  // objective offset dropped from the QP
    bool degenerate = false;  // no free columns at all
    // Decision variable layout: (column j, coherent target k) pairs, ordered
    // by ascending j then ascending k. Columns with a single free target are
    // pinned to 1 and eliminated.
    std::vector<std::int64_t> var_col;
    std::vector<std::int64_t> var_row;
    std::vector<std::int64_t> pinned_cols;  // single-target free columns
};

AssembledQp assemble_qp(const std::vector<ForecastPair>& pairs, const MovementPattern& pattern);

struct TrainReport {
    double objective = 0.0;  // averaged Brier score at the trained matrix
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = true;
    bool degenerate = false;
    bool rank_deficient = false;
    std::int64_t n_free = 0;
};

struct TrainOptions {
    double tol = 1e-6;
    int max_iter = 20000;
    int horizon = 1;
};

// Solve the assembled QP and reinstate fixed entries.
ReconMatrix solve_qp(const AssembledQp& qp_in, const MovementPattern& pattern,
                     const TrainOptions& opts, TrainReport* report = nullptr);

// build_movement_pattern -> assemble_qp -> solve_qp.
ReconMatrix train_dfr(const std::vector<ForecastPair>& pairs, const DomainTables& tbl,
                      const TrainOptions& opts = {}, TrainReport* report = nullptr);

// Averaged Brier score of A over a pair set; used for reporting and tests.
double averaged_brier(const ReconMatrix& mat, const std::vector<ForecastPair>& pairs);

// Equal split of each free column among its nearest targets; the solver's
// feasible starting point.
ReconMatrix uniform_split_matrix(const MovementPattern& pattern);

}  // namespace dfr
