#include "baselines.hpp"

#include <algorithm>

#include "error.hpp"

namespace dfr {

ReconMatrix dbu_matrix(const DomainTables& tbl) {
    ReconMatrix mat;
    mat.r = tbl.r();
    mat.q = tbl.q();
    mat.pattern_hash = tbl.hierarchy().structure_hash();
    const int m = tbl.n_basis();
    for (std::int64_t j = 0; j < tbl.q(); ++j) {
        auto pt = tbl.complete_point(j);
        std::int64_t k = tbl.basis_to_coherent(pt.subspan(0, m));
        mat.entries.push_back({k, j, 1.0});
    }
    mat.validate();
    return mat;
}

namespace {

int require_single_top(const DomainTables& tbl) {
    if (tbl.n_vars() != tbl.n_basis() + 1)
        throw ConfigError("dtd: defined only for two-level hierarchies with a single top node");
    return tbl.n_basis();  // index of the top variable
}

}  // namespace

HistoricalProportions fit_dtd(const std::vector<std::vector<int>>& observations,
                              const DomainTables& tbl) {
    if (observations.empty()) throw DataError("dtd: no observations");
    HistoricalProportions hp;
    hp.top_var = require_single_top(tbl);
    const int d_top = tbl.hierarchy().domain_max[hp.top_var];

    hp.coherent_points_of.assign(d_top + 1, {});
    for (std::int64_t k = 0; k < tbl.r(); ++k)
        hp.coherent_points_of[tbl.coherent_point(k)[hp.top_var]].push_back(k);

    std::vector<double> counts(tbl.r(), 0.0);
    std::vector<int> clamped(tbl.n_vars());
    for (const auto& obs : observations) {
        if (static_cast<int>(obs.size()) != tbl.n_vars())
            throw DataError("dtd: observation has wrong dimension");
        for (int i = 0; i < tbl.n_vars(); ++i)
            clamped[i] = std::clamp(obs[i], 0, tbl.hierarchy().domain_max[i]);
        counts[tbl.point_to_index(clamped, DomainKind::coherent)] += 1.0;
    }

    hp.props.assign(d_top + 1, {});
    for (int v = 0; v <= d_top; ++v) {
        const auto& pts = hp.coherent_points_of[v];
        double total = 0.0;
        for (std::int64_t k : pts) total += counts[k];
        hp.props[v].resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            hp.props[v][i] = total > 0.0 ? counts[pts[i]] / total
                                         : 1.0 / static_cast<double>(pts.size());
    }
    return hp;
}

ReconMatrix dtd_matrix(const HistoricalProportions& props, const DomainTables& tbl) {
    int top = require_single_top(tbl);
    if (top != props.top_var) throw ConfigError("dtd: proportions built for a different hierarchy");
    const int d_top = tbl.hierarchy().domain_max[top];
    if (static_cast<int>(props.props.size()) != d_top + 1)
        throw ConfigError("dtd: proportions do not cover all top-level values");

    ReconMatrix mat;
    mat.r = tbl.r();
    mat.q = tbl.q();
    mat.pattern_hash = tbl.hierarchy().structure_hash();
    for (std::int64_t j = 0; j < tbl.q(); ++j) {
        int v = tbl.complete_point(j)[top];
        const auto& pts = props.coherent_points_of[v];
        const auto& shares = props.props[v];
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (shares[i] > 0.0) mat.entries.push_back({pts[i], j, shares[i]});
    }
    mat.validate();
    return mat;
}

}  // namespace dfr
