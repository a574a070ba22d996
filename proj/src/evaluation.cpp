#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace dfr {

double brier(std::span<const double> pmf, std::int64_t outcome_index) {
    if (outcome_index < 0 || outcome_index >= static_cast<std::int64_t>(pmf.size()))
        throw DataError("brier: outcome index out of range");
    double total = 0.0;
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(pmf.size()); ++k) {
        double z = k == outcome_index ? 1.0 : 0.0;
        double d = pmf[k] - z;
        total += d * d;
    }
    return total;
}

std::vector<WindowForecast> run_windows(const SeriesTable& data, const WindowSpec& spec,
                                        const Forecaster& forecaster, const DomainTables& tbl) {
    const int t_total = static_cast<int>(data.n_rows());
    const int n = tbl.n_vars();
    if (static_cast<int>(data.n_cols()) != n)
        throw DataError("run windows: series has " + std::to_string(data.n_cols()) +
                        " columns, hierarchy has " + std::to_string(n) + " variables");
    if (spec.origin < 1 || spec.step < 1 || spec.horizon < 1)
        throw ConfigError("run windows: origin, step and horizon must be positive");
    if (spec.origin + spec.horizon > t_total)
        throw DataError("run windows: series too short for the window specification");

    std::vector<WindowForecast> out;
    for (int t_end = spec.origin; t_end + spec.horizon <= t_total; t_end += spec.step) {
        WindowForecast wf;
        wf.train_begin = spec.kind == WindowKind::rolling ? t_end - spec.origin : 0;
        wf.train_end = t_end;
        wf.margins = forecaster(data, wf.train_begin, t_end, spec.horizon);
        if (static_cast<int>(wf.margins.size()) != n)
            throw DataError("run windows: forecaster returned wrong number of margins");
        wf.base = independence_product(wf.margins, tbl);

        const int target_row = t_end + spec.horizon - 1;
        wf.realized_point.resize(n);
        for (int i = 0; i < n; ++i) {
            int v = data.rows[target_row][i];
            int clamped = std::clamp(v, 0, tbl.hierarchy().domain_max[i]);
            if (clamped != v) wf.clamped = true;
            wf.realized_point[i] = clamped;
        }
        try {
            wf.realized_coherent = tbl.point_to_index(wf.realized_point, DomainKind::coherent);
        } catch (const DataError&) {
            throw DataError("run windows: observation at row " + std::to_string(target_row) +
                            " is incoherent after clamping");
        }
        wf.realized_complete = tbl.point_to_index(wf.realized_point, DomainKind::complete);
        out.push_back(std::move(wf));
    }
    return out;
}

namespace {

// Nemenyi critical values at alpha = 0.05 (studentized range / sqrt(2)),
// K = 2..10 methods.
constexpr double kCritical05[] = {1.959964, 2.343701, 2.569032, 2.727774, 2.849705,
                                  2.948319, 3.030879, 3.101730, 3.163684};

}  // namespace

McbResult mcb(const std::vector<std::vector<double>>& scores, double alpha) {
    if (std::abs(alpha - 0.05) > 1e-12)
        throw ConfigError("mcb: critical values are embedded for alpha = 0.05 only");
    const std::size_t n_samples = scores.size();
    if (n_samples < 2) throw ConfigError("mcb: need at least two samples");
    const std::size_t k = scores[0].size();
    if (k < 2) throw ConfigError("mcb: need at least two methods");
    if (k > 10) throw ConfigError("mcb: critical values are embedded for up to 10 methods");

    McbResult res;
    res.mean_rank.assign(k, 0.0);
    std::vector<std::pair<double, std::size_t>> row(k);
    for (const auto& sample : scores) {
        if (sample.size() != k) throw DataError("mcb: ragged score matrix");
        for (std::size_t m = 0; m < k; ++m) row[m] = {sample[m], m};
        std::sort(row.begin(), row.end());
        // Average ranks across ties.
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i;
            while (j + 1 < k && row[j + 1].first == row[i].first) ++j;
            double rank = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) res.mean_rank[row[t].second] += rank;
            i = j + 1;
        }
    }
    for (double& r : res.mean_rank) r /= static_cast<double>(n_samples);

    double kk = static_cast<double>(k);
    res.half_width = kCritical05[k - 2] *
                     std::sqrt(kk * (kk + 1.0) / (12.0 * static_cast<double>(n_samples)));
    res.best = static_cast<int>(
        std::min_element(res.mean_rank.begin(), res.mean_rank.end()) - res.mean_rank.begin());
    res.significant.assign(k, false);
    for (std::size_t m = 0; m < k; ++m)
        res.significant[m] =
            std::abs(res.mean_rank[m] - res.mean_rank[res.best]) > 2.0 * res.half_width;
    return res;
}

double EvalReport::mean(std::size_t target, std::size_t method) const {
    const auto& samples = scores.at(target);
    if (samples.empty()) throw DataError("eval report: no samples");
    double total = 0.0;
    for (const auto& s : samples) total += s.at(method);
    return total / static_cast<double>(samples.size());
}

void EvalReport::append_samples(const EvalReport& other) {
    if (methods != other.methods || targets != other.targets)
        throw DataError("eval report: cannot merge reports with different layouts");
    for (std::size_t t = 0; t < targets.size(); ++t)
        scores[t].insert(scores[t].end(), other.scores[t].begin(), other.scores[t].end());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["methods"] = methods;
    j["targets"] = targets;
    j["n_samples"] = n_samples();
    j["scores"] = scores;
    return j.dump();
}

EvalReport EvalReport::from_json(const std::string& json_text) {
    try {
        nlohmann::json j = nlohmann::json::parse(json_text);
        EvalReport rep;
        rep.methods = j.at("methods").get<std::vector<std::string>>();
        rep.targets = j.at("targets").get<std::vector<std::string>>();
        rep.scores = j.at("scores").get<std::vector<std::vector<std::vector<double>>>>();
        if (rep.scores.size() != rep.targets.size())
            throw DataError("eval report: score tensor does not match targets");
        return rep;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("eval report: bad JSON: ") + e.what());
    }
}

void EvalReport::write_json(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("eval report: cannot write " + path);
    out << to_json() << '\n';
}

EvalReport EvalReport::read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("eval report: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void EvalReport::write_means_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("eval report: cannot write " + path);
    out << "target";
    for (const auto& m : methods) out << ',' << m;
    out << '\n';
    for (std::size_t t = 0; t < targets.size(); ++t) {
        out << targets[t];
        for (std::size_t m = 0; m < methods.size(); ++m) out << ',' << format_double(mean(t, m));
        out << '\n';
    }
}

void EvalReport::write_mcb_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("eval report: cannot write " + path);
    out << "target,method,mean_rank,half_width,significant_vs_best\n";
    for (std::size_t t = 0; t < targets.size(); ++t) {
        auto res = mcb(scores[t]);
        for (std::size_t m = 0; m < methods.size(); ++m)
            out << targets[t] << ',' << methods[m] << ',' << format_double(res.mean_rank[m])
                << ',' << format_double(res.half_width) << ',' << (res.significant[m] ? 1 : 0)
                << '\n';
    }
}

}  // namespace dfr
