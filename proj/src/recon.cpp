#include "recon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace dfr {

std::int64_t MovementPattern::free_entry_count() const {
    std::int64_t n = 0;
    for (const auto& t : free_targets) n += static_cast<std::int64_t>(t.size());
    return n;
}

std::int64_t MovementPattern::fixed_count() const {
    return std::count_if(fixed_target.begin(), fixed_target.end(),
                         [](std::int64_t t) { return t >= 0; });
}

MovementPattern build_movement_pattern(const DomainTables& tbl) {
    MovementPattern pat;
    pat.r = tbl.r();
    pat.q = tbl.q();
    pat.fixed_target.assign(tbl.q(), -1);
    pat.free_targets.assign(tbl.q(), {});
    pat.costs_min.assign(tbl.q(), 0);

    const int n = tbl.n_vars();
    for (std::int64_t j = 0; j < tbl.q(); ++j) {
        std::int64_t self = tbl.coherent_index_of(j);
        if (self >= 0) {
            pat.fixed_target[j] = self;
            continue;
        }
        auto pj = tbl.complete_point(j);
        int best = INT32_MAX;
        auto& targets = pat.free_targets[j];
        for (std::int64_t k = 0; k < tbl.r(); ++k) {
            auto pk = tbl.coherent_point(k);
            int cost = 0;
            for (int i = 0; i < n && cost <= best; ++i) cost += std::abs(pj[i] - pk[i]);
            if (cost < best) {
                best = cost;
                targets.clear();
                targets.push_back(k);
            } else if (cost == best) {
                targets.push_back(k);
            }
        }
        pat.costs_min[j] = best;
    }
    return pat;
}

void ReconMatrix::validate() const {
    std::vector<double> colsum(q, 0.0);
    for (const auto& e : entries) {
        if (e.k < 0 || e.k >= r || e.j < 0 || e.j >= q)
            throw DataError("recon matrix: entry index out of range");
        if (e.value < -1e-10 || e.value > 1.0 + 1e-10)
            throw NumericError("recon matrix: entry outside [0,1]");
        colsum[e.j] += e.value;
    }
    for (std::int64_t j = 0; j < q; ++j)
        if (std::abs(colsum[j] - 1.0) > 1e-8)
            throw NumericError("recon matrix: column " + std::to_string(j) + " sums to " +
                               std::to_string(colsum[j]));
}

std::vector<std::vector<double>> ReconMatrix::dense() const {
    std::vector<std::vector<double>> m(r, std::vector<double>(q, 0.0));
    for (const auto& e : entries) m[e.k][e.j] += e.value;
    return m;
}

std::string ReconMatrix::to_json() const {
    nlohmann::json j;
    j["r"] = r;
    j["q"] = q;
    j["horizon"] = horizon;
    j["pattern_hash"] = pattern_hash;
    auto triplets = nlohmann::json::array();
    for (const auto& e : entries) triplets.push_back({e.k, e.j, e.value});
    j["triplets"] = std::move(triplets);
    return j.dump();
}

ReconMatrix ReconMatrix::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
        ReconMatrix m;
        m.r = j.at("r").get<std::int64_t>();
        m.q = j.at("q").get<std::int64_t>();
        m.horizon = j.value("horizon", 1);
        m.pattern_hash = j.value("pattern_hash", std::uint64_t{0});
        for (const auto& t : j.at("triplets"))
            m.entries.push_back({t.at(0).get<std::int64_t>(), t.at(1).get<std::int64_t>(),
                                 t.at(2).get<double>()});
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("recon matrix: bad JSON: ") + e.what());
    }
}

void ReconMatrix::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("recon matrix: cannot write " + path);
    out << to_json() << '\n';
}

ReconMatrix ReconMatrix::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("recon matrix: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

IndexedPmf apply(const ReconMatrix& mat, const IndexedPmf& base) {
    if (base.kind != DomainKind::complete ||
        static_cast<std::int64_t>(base.probs.size()) != mat.q)
        throw DataError("apply: base pmf dimension does not match the matrix");
    IndexedPmf out;
    out.kind = DomainKind::coherent;
    out.probs.assign(mat.r, 0.0);
    for (const auto& e : mat.entries) out.probs[e.k] += e.value * base.probs[e.j];
    double sum = 0.0;
    for (double& v : out.probs) {
        if (v < 0.0) {
            if (v < -1e-10) throw NumericError("apply: negative probability beyond tolerance");
            v = 0.0;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-8)
        throw NumericError("apply: reconciled mass " + std::to_string(sum));
    if (sum > 0.0)
        for (double& v : out.probs) v /= sum;
    return out;
}

AssembledQp assemble_qp(const std::vector<ForecastPair>& pairs, const MovementPattern& pattern) {
    if (pairs.empty()) throw DataError("assemble qp: need at least one forecast pair");
    for (const auto& pr : pairs) {
        if (static_cast<std::int64_t>(pr.base.probs.size()) != pattern.q ||
            pr.base.kind != DomainKind::complete)
            throw DataError("assemble qp: pair base pmf does not match the pattern");
        if (pr.realized_coherent < 0 || pr.realized_coherent >= pattern.r)
            throw DataError("assemble qp: realized index out of range");
    }

    AssembledQp out;

    // Variable layout; single-target free columns are pinned to 1.
    std::vector<std::vector<std::int64_t>> col_vars(pattern.q);
    for (std::int64_t j = 0; j < pattern.q; ++j) {
        const auto& targets = pattern.free_targets[j];
        if (targets.empty()) continue;
        if (targets.size() == 1) {
            out.pinned_cols.push_back(j);
            continue;
        }
        for (std::int64_t k : targets) {
            col_vars[j].push_back(static_cast<std::int64_t>(out.var_col.size()));
            out.var_col.push_back(j);
            out.var_row.push_back(k);
        }
    }
    const auto n_vars = static_cast<Eigen::Index>(out.var_col.size());
    if (n_vars == 0) {
        out.degenerate = pattern.free_entry_count() == 0;
        // Objective is fully determined; keep the constant for reporting.
    }

    // Group variables by coherent row: the quadratic form is block diagonal,
    // so accumulate one dense block per row across windows.
    std::vector<std::vector<std::int64_t>> row_vars(pattern.r);
    for (std::int64_t v = 0; v < n_vars; ++v) row_vars[out.var_row[v]].push_back(v);
    std::vector<Eigen::MatrixXd> blocks(pattern.r);
    for (std::int64_t k = 0; k < pattern.r; ++k) {
        auto sz = static_cast<Eigen::Index>(row_vars[k].size());
        blocks[k] = Eigen::MatrixXd::Zero(sz, sz);
    }

    const double w = 1.0 / static_cast<double>(pairs.size());

    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_vars);
    double constant = 0.0;

    // Fixed contribution g_k per window: mass arriving at k through fixed and
    // pinned columns.
    std::vector<double> g(pattern.r);
    Eigen::VectorXd u;
    for (const auto& pr : pairs) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::int64_t j = 0; j < pattern.q; ++j) {
            if (pattern.fixed_target[j] >= 0) g[pattern.fixed_target[j]] += pr.base.probs[j];
        }
        for (std::int64_t j : out.pinned_cols) g[pattern.free_targets[j][0]] += pr.base.probs[j];

        for (std::int64_t k = 0; k < pattern.r; ++k) {
            const auto& vars = row_vars[k];
            double zk = k == pr.realized_coherent ? 1.0 : 0.0;
            double resid = g[k] - zk;
            constant += w * resid * resid;
            if (vars.empty()) continue;
            u.resize(static_cast<Eigen::Index>(vars.size()));
            for (std::size_t a = 0; a < vars.size(); ++a)
                u[static_cast<Eigen::Index>(a)] = pr.base.probs[out.var_col[vars[a]]];
            for (std::size_t a = 0; a < vars.size(); ++a)
                c[vars[a]] += 2.0 * w * u[static_cast<Eigen::Index>(a)] * resid;
            blocks[k].noalias() += (2.0 * w) * (u * u.transpose());
        }
    }

    std::vector<Eigen::Triplet<double>> p_triplets;
    for (std::int64_t k = 0; k < pattern.r; ++k) {
        const auto& vars = row_vars[k];
        for (std::size_t a = 0; a < vars.size(); ++a)
            for (std::size_t b = 0; b < vars.size(); ++b) {
                double val = blocks[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                if (val != 0.0)
                    p_triplets.emplace_back(static_cast<int>(vars[a]), static_cast<int>(vars[b]),
                                            val);
            }
    }
    out.problem.P.resize(n_vars, n_vars);
    out.problem.P.setFromTriplets(p_triplets.begin(), p_triplets.end());
    out.problem.c = std::move(c);
    out.problem.lower = Eigen::VectorXd::Zero(n_vars);
    out.problem.upper = Eigen::VectorXd::Ones(n_vars);
    out.constant = constant;

    // One equality row per free column with >= 2 targets.
    std::vector<Eigen::Triplet<double>> e_triplets;
    std::vector<std::int64_t> eq_cols;
    for (std::int64_t j = 0; j < pattern.q; ++j)
        if (!col_vars[j].empty()) eq_cols.push_back(j);
    out.problem.E.resize(static_cast<Eigen::Index>(eq_cols.size()), n_vars);
    for (std::size_t row = 0; row < eq_cols.size(); ++row)
        for (std::int64_t v : col_vars[eq_cols[row]])
            e_triplets.emplace_back(static_cast<int>(row), static_cast<int>(v), 1.0);
    out.problem.E.setFromTriplets(e_triplets.begin(), e_triplets.end());
    out.problem.d = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(eq_cols.size()));
    return out;
}

namespace {

// Block ranks of the quadratic form; any singular block means the optimum is
// not unique.
bool detect_rank_deficiency(const AssembledQp& qp_in, const MovementPattern& pattern) {
    std::vector<std::vector<std::int64_t>> row_vars(pattern.r);
    for (std::size_t v = 0; v < qp_in.var_row.size(); ++v)
        row_vars[qp_in.var_row[v]].push_back(static_cast<std::int64_t>(v));
    for (const auto& vars : row_vars) {
        if (vars.empty()) continue;
        Eigen::MatrixXd block(vars.size(), vars.size());
        for (std::size_t a = 0; a < vars.size(); ++a)
            for (std::size_t b = 0; b < vars.size(); ++b)
                block(a, b) =
                    qp_in.problem.P.coeff(static_cast<Eigen::Index>(vars[a]),
                                          static_cast<Eigen::Index>(vars[b]));
        Eigen::FullPivLU<Eigen::MatrixXd> lu(block);
        lu.setThreshold(1e-10);
        if (lu.rank() < static_cast<Eigen::Index>(vars.size())) return true;
    }
    return false;
}

}  // namespace

ReconMatrix solve_qp(const AssembledQp& qp_in, const MovementPattern& pattern,
                     const TrainOptions& opts, TrainReport* report) {
    ReconMatrix mat;
    mat.r = pattern.r;
    mat.q = pattern.q;
    mat.horizon = opts.horizon;

    TrainReport rep;
    rep.degenerate = qp_in.degenerate;
    rep.n_free = static_cast<std::int64_t>(qp_in.var_col.size());

    Eigen::VectorXd x;
    if (qp_in.var_col.empty()) {
        rep.objective = qp_in.constant;
        rep.converged = true;
    } else {
        qp::Options qopts;
        qopts.tol = opts.tol;
        qopts.max_iter = opts.max_iter;
        auto sol = qp::solve(qp_in.problem, qopts);
        x = std::move(sol.x);
        rep.iterations = sol.report.iterations;
        rep.primal_residual = sol.report.primal_residual;
        rep.dual_residual = sol.report.dual_residual;
        rep.converged = sol.report.converged;
        rep.rank_deficient = detect_rank_deficiency(qp_in, pattern);
    }

    for (std::int64_t j = 0; j < pattern.q; ++j)
        if (pattern.fixed_target[j] >= 0) mat.entries.push_back({pattern.fixed_target[j], j, 1.0});
    for (std::int64_t j : qp_in.pinned_cols)
        mat.entries.push_back({pattern.free_targets[j][0], j, 1.0});

    // Free entries: clamp into [0,1] and renormalize each column exactly.
    std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>> cols;
    for (std::size_t v = 0; v < qp_in.var_col.size(); ++v)
        cols[qp_in.var_col[v]].push_back({qp_in.var_row[v], std::clamp(x[v], 0.0, 1.0)});
    for (auto& [j, col] : cols) {
        double sum = 0.0;
        for (auto& [k, val] : col) sum += val;
        if (sum <= 0.0) {
            // Fully collapsed column: fall back to the uniform split.
            for (auto& [k, val] : col) val = 1.0 / static_cast<double>(col.size());
        } else {
            for (auto& [k, val] : col) val /= sum;
        }
        for (auto& [k, val] : col) mat.entries.push_back({k, j, val});
    }

    mat.validate();
    if (report) *report = rep;
    return mat;
}

ReconMatrix train_dfr(const std::vector<ForecastPair>& pairs, const DomainTables& tbl,
                      const TrainOptions& opts, TrainReport* report) {
    auto pattern = build_movement_pattern(tbl);
    auto qp_in = assemble_qp(pairs, pattern);
    auto mat = solve_qp(qp_in, pattern, opts, report);
    mat.pattern_hash = tbl.hierarchy().structure_hash();
    if (report) report->objective = averaged_brier(mat, pairs);
    return mat;
}

double averaged_brier(const ReconMatrix& mat, const std::vector<ForecastPair>& pairs) {
    if (pairs.empty()) throw DataError("averaged brier: empty pair list");
    double total = 0.0;
    for (const auto& pr : pairs) {
        IndexedPmf rec = apply(mat, pr.base);
        for (std::int64_t k = 0; k < mat.r; ++k) {
            double z = k == pr.realized_coherent ? 1.0 : 0.0;
            double dlt = rec.probs[k] - z;
            total += dlt * dlt;
        }
    }
    return total / static_cast<double>(pairs.size());
}

ReconMatrix uniform_split_matrix(const MovementPattern& pattern) {
    ReconMatrix mat;
    mat.r = pattern.r;
    mat.q = pattern.q;
    for (std::int64_t j = 0; j < pattern.q; ++j) {
        if (pattern.fixed_target[j] >= 0) {
            mat.entries.push_back({pattern.fixed_target[j], j, 1.0});
        } else {
            const auto& targets = pattern.free_targets[j];
            for (std::int64_t k : targets)
                mat.entries.push_back({k, j, 1.0 / static_cast<double>(targets.size())});
        }
    }
    mat.validate();
    return mat;
}

}  // namespace dfr
