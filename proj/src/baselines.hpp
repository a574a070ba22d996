#pragma once

#include <vector>

#include "recon.hpp"

namespace dfr {

// Discrete bottom-up: mass at a complete-domain point goes to the coherent
// point with the same basis coordinates (aggregate coordinates ignored).
ReconMatrix dbu_matrix(const DomainTables& tbl);

// Historical split of each top-level value across the coherent points that
// realize it. Defined for two-level hierarchies with a single top node.
struct HistoricalProportions {
    int top_var = 0;
    // props[v][i] is the share of coherent point coherent_points_of[v][i].
    std::vector<std::vector<double>> props;
    std::vector<std::vector<std::int64_t>> coherent_points_of;
};

// Proportions from observed coherent points; a top-level value never observed
// falls back to a uniform split.
HistoricalProportions fit_dtd(const std::vector<std::vector<int>>& observations,
                              const DomainTables& tbl);

// Discrete top-down: a column whose top-level coordinate is v distributes its
// mass over the coherent points with top value v according to the proportions.
ReconMatrix dtd_matrix(const HistoricalProportions& props, const DomainTables& tbl);

}  // namespace dfr
