#include "stepwise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace dfr {

namespace {

void require_single_top(const Hierarchy& h) {
    if (h.n_total != h.n_basis + 1)
        throw ConfigError("sdfr: defined for two-level hierarchies with a single top node");
}

std::vector<double> stretch(const std::vector<double>& pmf, int weight) {
    if (weight == 1) return pmf;
    std::vector<double> out((pmf.size() - 1) * weight + 1, 0.0);
    for (std::size_t v = 0; v < pmf.size(); ++v) out[v * weight] = pmf[v];
    return out;
}

}  // namespace

std::vector<double> bottom_up_pmf(const std::vector<std::vector<double>>& margins,
                                  const std::vector<int>& weights) {
    if (margins.size() != weights.size())
        throw ConfigError("bottom up: margins/weights length mismatch");
    std::vector<std::vector<double>> stretched;
    stretched.reserve(margins.size());
    for (std::size_t i = 0; i < margins.size(); ++i)
        stretched.push_back(stretch(margins[i], weights[i]));
    return convolve_margins(stretched);
}

StepPlan plan_steps(const Hierarchy& h, const std::vector<int>& ordering) {
    require_single_top(h);
    const int m = h.n_basis;
    if (m < 2) throw ConfigError("sdfr: need at least two bottom series");
    std::vector<int> check(ordering);
    std::sort(check.begin(), check.end());
    for (int i = 0; i < m; ++i)
        if (static_cast<int>(ordering.size()) != m || check[i] != i)
            throw ConfigError("sdfr: ordering must be a permutation of the basis indices");

    StepPlan plan;
    plan.ordering = ordering;
    if (m == 2) {
        plan.single_step = true;
        return plan;
    }

    const auto& row = h.agg_rows[0];
    for (int s = 0; s + 1 < m; ++s) {
        StepPlan::Step step;
        step.left_var = ordering[s];
        step.left_weight = row[step.left_var];
        int right_max = 0;
        for (int l = s + 1; l < m; ++l) right_max += row[ordering[l]] * h.domain_max[ordering[l]];
        step.hier = Hierarchy::make(2, {{step.left_weight, 1}},
                                    {h.domain_max[step.left_var], right_max});
        plan.steps.push_back(std::move(step));
    }
    return plan;
}

std::vector<std::vector<int>> make_orderings(int m, int count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("sdfr: need at least one ordering");
    std::vector<std::vector<int>> out;
    std::vector<int> identity(m);
    std::iota(identity.begin(), identity.end(), 0);
    out.push_back(identity);
    Rng rng(seed);
    for (int i = 1; i < count; ++i) {
        auto perm = identity;
        rng.shuffle(perm);
        out.push_back(std::move(perm));
    }
    return out;
}

namespace {

struct StepContext {
    DomainTables tbl;
};

std::vector<StepContext> build_step_tables(const StepPlan& plan) {
    std::vector<StepContext> out;
    out.reserve(plan.steps.size());
    for (const auto& step : plan.steps) out.push_back({DomainTables::build(step.hier)});
    return out;
}

// Base complete-domain pmf of a three-node step from (left, right, total)
// margins under independence.
IndexedPmf step_base(const DomainTables& tbl, const std::vector<double>& left,
                     const std::vector<double>& right, const std::vector<double>& total) {
    std::vector<MarginalForecast> margins(3);
    margins[0].var = 0;
    margins[0].probs = left;
    margins[1].var = 1;
    margins[1].probs = right;
    margins[2].var = 2;
    margins[2].probs = total;
    return independence_product(margins, tbl);
}

// Right-node (partial-sum) margins of the remaining bottoms for every step.
std::vector<std::vector<double>> right_margins_per_step(
    const StepPlan& plan, const Hierarchy& h, const std::vector<MarginalForecast>& margins) {
    const int m = h.n_basis;
    const auto& row = h.agg_rows[0];
    std::vector<std::vector<double>> out(plan.steps.size());
    // Suffix convolutions, built from the back.
    std::vector<double> acc = stretch(margins[plan.ordering[m - 1]].probs, row[plan.ordering[m - 1]]);
    for (int s = static_cast<int>(plan.steps.size()) - 1; s >= 0; --s) {
        out[s] = acc;
        if (s > 0) {
            auto left = stretch(margins[plan.ordering[s]].probs, row[plan.ordering[s]]);
            acc = convolve_margins({left, acc});
        }
    }
    return out;
}

}  // namespace

SdfrModel train_sdfr(const std::vector<SdfrWindow>& windows, const DomainTables& tbl,
                     const std::vector<int>& ordering, const TrainOptions& opts) {
    const Hierarchy& h = tbl.hierarchy();
    require_single_top(h);
    if (windows.empty()) throw DataError("sdfr: no training windows");
    const int m = h.n_basis;
    for (const auto& w : windows) {
        if (static_cast<int>(w.margins.size()) != h.n_total)
            throw DataError("sdfr: window must carry one margin per variable");
        if (static_cast<int>(w.realized_basis.size()) != m)
            throw DataError("sdfr: realized basis point has wrong dimension");
    }

    SdfrModel model;
    model.plan = plan_steps(h, ordering);
    model.horizon = opts.horizon;
    model.pattern_hash = h.structure_hash();

    if (model.plan.single_step) {
        std::vector<ForecastPair> pairs;
        pairs.reserve(windows.size());
        for (const auto& w : windows)
            pairs.push_back({independence_product(w.margins, tbl),
                             tbl.basis_to_coherent(w.realized_basis)});
        model.step_matrices.push_back(train_dfr(pairs, tbl, opts));
        return model;
    }

    auto contexts = build_step_tables(model.plan);
    const auto& row = h.agg_rows[0];

    // Current total margin per window; starts at the base top forecast.
    std::vector<std::vector<double>> totals(windows.size());
    std::vector<std::vector<std::vector<double>>> rights(windows.size());
    for (std::size_t w = 0; w < windows.size(); ++w) {
        totals[w] = windows[w].margins[m].probs;
        rights[w] = right_margins_per_step(model.plan, h, windows[w].margins);
    }

    for (std::size_t s = 0; s < model.plan.steps.size(); ++s) {
        const auto& step = model.plan.steps[s];
        const auto& stbl = contexts[s].tbl;
        std::vector<ForecastPair> pairs;
        pairs.reserve(windows.size());
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const auto& left = windows[w].margins[step.left_var].probs;
            IndexedPmf base = step_base(stbl, left, rights[w][s], totals[w]);
            int left_val = windows[w].realized_basis[step.left_var];
            int right_val = 0;
            for (int l = static_cast<int>(s) + 1; l < m; ++l)
                right_val += row[model.plan.ordering[l]] *
                             windows[w].realized_basis[model.plan.ordering[l]];
            std::vector<int> basis{left_val, right_val};
            pairs.push_back({std::move(base), stbl.basis_to_coherent(basis)});
        }
        TrainOptions sopts = opts;
        model.step_matrices.push_back(train_dfr(pairs, stbl, sopts));

        // Reconciled right-node marginals feed the next step's total.
        if (s + 1 < model.plan.steps.size()) {
            for (std::size_t w = 0; w < windows.size(); ++w) {
                IndexedPmf rec = apply(model.step_matrices[s], pairs[w].base);
                totals[w] = marginalize(rec, stbl, 1);
            }
        }
    }
    return model;
}

IndexedPmf sdfr_forecast(const std::vector<MarginalForecast>& margins, const SdfrModel& model,
                         const DomainTables& tbl) {
    const Hierarchy& h = tbl.hierarchy();
    require_single_top(h);
    if (model.pattern_hash != h.structure_hash())
        throw ConfigError("sdfr: model was trained for a different hierarchy");
    if (static_cast<int>(margins.size()) != h.n_total)
        throw DataError("sdfr: need one margin per variable");

    if (model.plan.single_step)
        return apply(model.step_matrices[0], independence_product(margins, tbl));

    const int m = h.n_basis;
    const auto& row = h.agg_rows[0];
    auto contexts = build_step_tables(model.plan);
    auto rights = right_margins_per_step(model.plan, h, margins);

    // Forward pass through the trained steps.
    std::vector<IndexedPmf> step_pmfs(model.plan.steps.size());
    std::vector<double> total = margins[m].probs;
    for (std::size_t s = 0; s < model.plan.steps.size(); ++s) {
        const auto& step = model.plan.steps[s];
        const auto& stbl = contexts[s].tbl;
        IndexedPmf base = step_base(stbl, margins[step.left_var].probs, rights[s], total);
        step_pmfs[s] = apply(model.step_matrices[s], base);
        if (s + 1 < model.plan.steps.size()) total = marginalize(step_pmfs[s], stbl, 1);
    }

    // Convert a step's coherent pmf to a joint over (total, left, right).
    auto to_joint = [&](std::size_t s) {
        const auto& stbl = contexts[s].tbl;
        const auto& hs = stbl.hierarchy();
        JointPmf joint =
            JointPmf::zeros({hs.domain_max[2] + 1, hs.domain_max[0] + 1, hs.domain_max[1] + 1});
        for (std::int64_t k = 0; k < stbl.r(); ++k) {
            auto pt = stbl.coherent_point(k);
            joint.probs[joint.index_of({pt[2], pt[0], pt[1]})] = step_pmfs[s].probs[k];
        }
        return joint;
    };

    // Gluing pass: average the shared-node marginals, adjust, construct.
    JointPmf acc = to_joint(0);  // (y_top, left_0, right_0)
    for (std::size_t s = 1; s < model.plan.steps.size(); ++s) {
        JointPmf stepj = to_joint(s);  // (total_s = right_{s-1}, left_s, right_s)
        int shared = static_cast<int>(acc.n_vars()) - 1;
        auto m1 = acc.marginal(shared);
        auto m2 = stepj.marginal(0);
        std::vector<double> avg(m1.size());
        for (std::size_t v = 0; v < avg.size(); ++v) avg[v] = 0.5 * (m1[v] + m2[v]);
        acc = adjust(acc, shared, avg);
        stepj = adjust(stepj, 0, avg);
        acc.validate();
        stepj.validate();
        acc = construct_joint(acc, stepj);
        acc.validate();
    }

    // Re-express on the full coherent domain: bottoms determine the point and
    // the top coordinate is summed out.
    IndexedPmf out;
    out.kind = DomainKind::coherent;
    out.probs.assign(tbl.r(), 0.0);
    std::vector<int> cell;
    std::vector<int> basis(m, 0);
    const int last_weight = row[model.plan.ordering[m - 1]];
    double kept = 0.0;
    for (std::int64_t idx = 0; idx < acc.size(); ++idx) {
        double p = acc.probs[idx];
        if (p == 0.0) continue;
        acc.decode(idx, cell);
        // cell = (y_top, left_0, ..., left_{m-2}, right_{m-2}).
        bool representable = cell.back() % last_weight == 0;
        if (!representable) continue;
        for (int s = 0; s + 1 < m; ++s) basis[model.plan.ordering[s]] = cell[1 + s];
        basis[model.plan.ordering[m - 1]] = cell.back() / last_weight;
        out.probs[tbl.basis_to_coherent(basis)] += p;
        kept += p;
    }
    if (kept <= 0.0) throw NumericError("sdfr: glued distribution carries no coherent mass");
    for (double& v : out.probs) v /= kept;
    out.validate(1e-8);
    return out;
}

IndexedPmf sdfr_averaged(const std::vector<MarginalForecast>& margins,
                         const std::vector<SdfrModel>& models, const DomainTables& tbl) {
    if (models.empty()) throw ConfigError("sdfr: need at least one trained ordering");
    IndexedPmf out;
    out.kind = DomainKind::coherent;
    out.probs.assign(tbl.r(), 0.0);
    for (const auto& model : models) {
        IndexedPmf one = sdfr_forecast(margins, model, tbl);
        for (std::int64_t k = 0; k < tbl.r(); ++k) out.probs[k] += one.probs[k];
    }
    for (double& v : out.probs) v /= static_cast<double>(models.size());
    out.validate(1e-8);
    return out;
}

std::string SdfrModel::to_json() const {
    nlohmann::json j;
    j["horizon"] = horizon;
    j["pattern_hash"] = pattern_hash;
    j["ordering"] = plan.ordering;
    j["single_step"] = plan.single_step;
    auto mats = nlohmann::json::array();
    for (const auto& m : step_matrices) mats.push_back(nlohmann::json::parse(m.to_json()));
    j["step_matrices"] = std::move(mats);
    return j.dump();
}

SdfrModel SdfrModel::from_json(const std::string& json_text, const Hierarchy& h) {
    try {
        nlohmann::json j = nlohmann::json::parse(json_text);
        SdfrModel model;
        model.horizon = j.at("horizon").get<int>();
        model.pattern_hash = j.at("pattern_hash").get<std::uint64_t>();
        model.plan = plan_steps(h, j.at("ordering").get<std::vector<int>>());
        if (model.plan.single_step != j.at("single_step").get<bool>())
            throw ConfigError("sdfr model: plan shape does not match the hierarchy");
        for (const auto& m : j.at("step_matrices"))
            model.step_matrices.push_back(ReconMatrix::from_json(m.dump()));
        std::size_t expect = model.plan.single_step ? 1 : model.plan.steps.size();
        if (model.step_matrices.size() != expect)
            throw ConfigError("sdfr model: wrong number of step matrices");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("sdfr model: bad JSON: ") + e.what());
    }
}

}  // namespace dfr
