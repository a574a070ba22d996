#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "base_models.hpp"
#include "hierarchy.hpp"
#include "joint_pmf.hpp"
#include "recon.hpp"

namespace dfr {

// Decomposition of an (m+1)-node two-level hierarchy into m-1 three-node
// hierarchies chained through partial sums of the bottom series. For m == 2
// the plan degenerates to a single direct reconciliation of the original
// hierarchy.
struct StepPlan {
    std::vector<int> ordering;  // permutation of basis indices 0..m-1
    bool single_step = false;

    struct Step {
        int left_var = 0;    // original basis index of the left node
        int left_weight = 1; // aggregation weight of the left node
        Hierarchy hier;      // basis: (left, right partial sum); total derived
    };
    std::vector<Step> steps;
};

StepPlan plan_steps(const Hierarchy& h, const std::vector<int>& ordering);

// Identity ordering followed by seeded shuffles.
std::vector<std::vector<int>> make_orderings(int m, int count, std::uint64_t seed);

// Margins for every variable of the full hierarchy (basis first, top last)
// plus the realized basis point of the forecast target.
struct SdfrWindow {
    std::vector<MarginalForecast> margins;
    std::vector<int> realized_basis;
};

struct SdfrModel {
    StepPlan plan;
    std::vector<ReconMatrix> step_matrices;  // one per step
    int horizon = 1;
    std::uint64_t pattern_hash = 0;  // full-hierarchy fingerprint

    std::string to_json() const;
    static SdfrModel from_json(const std::string& json_text, const Hierarchy& h);
};

// Trains one three-node reconciliation per step. Step training pairs are
// built exactly as in forecasting: the left margin from input, the right via
// bottom-up convolution, the total from the previous step's reconciled
// marginal (the base total forecast for the first step).
SdfrModel train_sdfr(const std::vector<SdfrWindow>& windows, const DomainTables& tbl,
                     const std::vector<int>& ordering, const TrainOptions& opts = {});

// Applies the trained steps, averages the shared-node marginals of adjacent
// joints, adjusts both, glues, and re-expresses the result on the full
// hierarchy's coherent domain.
IndexedPmf sdfr_forecast(const std::vector<MarginalForecast>& margins, const SdfrModel& model,
                         const DomainTables& tbl);

// Arithmetic mean of per-ordering coherent forecasts.
IndexedPmf sdfr_averaged(const std::vector<MarginalForecast>& margins,
                         const std::vector<SdfrModel>& models, const DomainTables& tbl);

// Sum-node pmf under independence: convolution of the margins, each stretched
// by its aggregation weight.
std::vector<double> bottom_up_pmf(const std::vector<std::vector<double>>& margins,
                                  const std::vector<int>& weights);

}  // namespace dfr
