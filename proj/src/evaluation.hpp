#pragma once

#include <functional>
#include <string>
#include <vector>

#include "base_models.hpp"
#include "csv.hpp"
#include "hierarchy.hpp"

namespace dfr {

// Brier score of a pmf against a one-hot outcome.
double brier(std::span<const double> pmf, std::int64_t outcome_index);

enum class WindowKind { expanding, rolling };

struct WindowSpec {
    int origin = 1;   // length of the first training window
    int step = 1;
    int horizon = 1;
    WindowKind kind = WindowKind::expanding;
};

// One backtest window: per-variable margins, their independence product and
// the realized point.
struct WindowForecast {
    std::vector<MarginalForecast> margins;
    IndexedPmf base;                  // complete-domain product
    std::int64_t realized_complete = 0;
    std::int64_t realized_coherent = 0;
    std::vector<int> realized_point;  // after clamping
    int train_begin = 0;              // training rows [train_begin, train_end)
    int train_end = 0;
    bool clamped = false;
};

// Produces per-variable margins for horizon h given training rows
// [t_begin, t_end) of the series table.
using Forecaster =
    std::function<std::vector<MarginalForecast>(const SeriesTable&, int t_begin, int t_end, int h)>;

std::vector<WindowForecast> run_windows(const SeriesTable& data, const WindowSpec& spec,
                                        const Forecaster& forecaster, const DomainTables& tbl);

// Multiple-comparison-with-the-best summary over per-sample scores.
struct McbResult {
    std::vector<double> mean_rank;
    double half_width = 0.0;
    int best = 0;
    std::vector<bool> significant;  // interval disjoint from the best method's
};

// scores[sample][method]; alpha must be 0.05 (critical values are embedded
// for K <= 10 methods at that level only).
McbResult mcb(const std::vector<std::vector<double>>& scores, double alpha = 0.05);

// Per-method, per-target score matrix across evaluation samples.
struct EvalReport {
    std::vector<std::string> methods;
    std::vector<std::string> targets;  // variable names plus "joint"
    // scores[target][sample][method]
    std::vector<std::vector<std::vector<double>>> scores;

    std::size_t n_samples() const { return scores.empty() ? 0 : scores[0].size(); }
    double mean(std::size_t target, std::size_t method) const;

    void append_samples(const EvalReport& other);

    std::string to_json() const;
    static EvalReport from_json(const std::string& json_text);

    void write_json(const std::string& path) const;
    static EvalReport read_json(const std::string& path);
    void write_means_csv(const std::string& path) const;
    // Rank-plot data: target, method, mean rank, half-width, significance.
    void write_mcb_csv(const std::string& path) const;
};

// Deterministic shortest round-trip formatting used by all report writers.
std::string format_double(double v);

}  // namespace dfr
