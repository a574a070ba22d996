#include "hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace dfr {

Hierarchy Hierarchy::make(int n_basis, std::vector<std::vector<int>> agg_rows,
                          std::vector<int> domain_max_basis) {
    if (n_basis <= 0) throw ConfigError("hierarchy: n_basis must be positive");
    if (static_cast<int>(domain_max_basis.size()) != n_basis)
        throw ConfigError("hierarchy: domain_max_basis length must equal n_basis");
    Hierarchy h;
    h.n_basis = n_basis;
    h.n_total = n_basis + static_cast<int>(agg_rows.size());
    h.agg_rows = std::move(agg_rows);
    h.domain_max = std::move(domain_max_basis);
    for (const auto& row : h.agg_rows) {
        if (static_cast<int>(row.size()) != n_basis)
            throw ConfigError("hierarchy: aggregation row length must equal n_basis");
        long v = 0;
        for (int i = 0; i < n_basis; ++i) v += static_cast<long>(row[i]) * h.domain_max[i];
        h.domain_max.push_back(static_cast<int>(v));
    }
    h.validate();
    return h;
}

void Hierarchy::validate() const {
    if (n_basis <= 0 || n_total < n_basis)
        throw ConfigError("hierarchy: need 1 <= n_basis <= n_total");
    if (static_cast<int>(agg_rows.size()) != n_total - n_basis)
        throw ConfigError("hierarchy: agg_rows count must equal n_total - n_basis");
    if (static_cast<int>(domain_max.size()) != n_total)
        throw ConfigError("hierarchy: domain_max length must equal n_total");
    for (int i = 0; i < n_total; ++i)
        if (domain_max[i] <= 0) throw ConfigError("hierarchy: domain_max entries must be positive");
    for (std::size_t d = 0; d < agg_rows.size(); ++d) {
        const auto& row = agg_rows[d];
        if (static_cast<int>(row.size()) != n_basis)
            throw ConfigError("hierarchy: aggregation row length must equal n_basis");
        long sum = 0;
        bool any = false;
        for (int i = 0; i < n_basis; ++i) {
            if (row[i] < 0) throw ConfigError("hierarchy: aggregation weights must be nonnegative");
            if (row[i] > 0) any = true;
            sum += static_cast<long>(row[i]) * domain_max[i];
        }
        if (!any) throw ConfigError("hierarchy: aggregation row is all zero");
        if (sum != domain_max[n_basis + static_cast<int>(d)])
            throw ConfigError("hierarchy: domain_max of determined variable " +
                              std::to_string(n_basis + d) +
                              " is inconsistent with its aggregation row");
    }
}

int Hierarchy::aggregate(int row, std::span<const int> basis) const {
    long v = 0;
    for (int i = 0; i < n_basis; ++i) v += static_cast<long>(agg_rows[row][i]) * basis[i];
    return static_cast<int>(v);
}

std::uint64_t Hierarchy::structure_hash() const {
    // FNV-1a over the structural fields.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (b * 8)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(static_cast<std::uint64_t>(n_total));
    mix(static_cast<std::uint64_t>(n_basis));
    for (int d : domain_max) mix(static_cast<std::uint64_t>(d));
    for (const auto& row : agg_rows)
        for (int w : row) mix(static_cast<std::uint64_t>(w));
    return h;
}

Hierarchy Hierarchy::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("hierarchy: invalid JSON: ") + e.what());
    }
    try {
        int n_basis = j.at("n_basis").get<int>();
        auto rows = j.value("agg_rows", std::vector<std::vector<int>>{});
        auto dmax = j.at("domain_max_basis").get<std::vector<int>>();
        return make(n_basis, std::move(rows), std::move(dmax));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("hierarchy: bad schema: ") + e.what());
    }
}

Hierarchy Hierarchy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("hierarchy: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string Hierarchy::to_json() const {
    nlohmann::json j;
    j["n_basis"] = n_basis;
    j["agg_rows"] = agg_rows;
    j["domain_max_basis"] =
        std::vector<int>(domain_max.begin(), domain_max.begin() + n_basis);
    return j.dump();
}

DomainTables DomainTables::build(const Hierarchy& h, std::uint64_t max_complete) {
    h.validate();
    DomainTables t;
    t.hier_ = h;
    t.n_ = h.n_total;
    t.m_ = h.n_basis;

    // Cardinalities with overflow/cap guard.
    std::uint64_t q = 1;
    for (int i = 0; i < t.n_; ++i) {
        std::uint64_t card = static_cast<std::uint64_t>(h.domain_max[i]) + 1;
        if (q > max_complete / card + 1) {
            q = 0;
            break;
        }
        q *= card;
    }
    if (q == 0 || q > max_complete) {
        std::ostringstream msg;
        msg << "domain enumeration: complete domain cardinality ";
        if (q == 0)
            msg << "overflows";
        else
            msg << q;
        msg << " exceeds cap " << max_complete;
        throw ConfigError(msg.str());
    }
    std::uint64_t r = 1;
    for (int i = 0; i < t.m_; ++i) r *= static_cast<std::uint64_t>(h.domain_max[i]) + 1;
    t.q_ = static_cast<std::int64_t>(q);
    t.r_ = static_cast<std::int64_t>(r);

    t.complete_strides_.assign(t.n_, 1);
    for (int i = t.n_ - 2; i >= 0; --i)
        t.complete_strides_[i] = t.complete_strides_[i + 1] * (h.domain_max[i + 1] + 1);
    t.basis_strides_.assign(t.m_, 1);
    for (int i = t.m_ - 2; i >= 0; --i)
        t.basis_strides_[i] = t.basis_strides_[i + 1] * (h.domain_max[i + 1] + 1);

    t.complete_points_.resize(static_cast<std::size_t>(t.q_) * t.n_);
    t.coherent_of_complete_.assign(static_cast<std::size_t>(t.q_), -1);
    t.coherent_points_.resize(static_cast<std::size_t>(t.r_) * t.n_);

    // Coherent points from the basis enumeration; aggregates recomputed.
    std::vector<int> point(t.n_, 0);
    for (std::int64_t k = 0; k < t.r_; ++k) {
        std::int64_t rem = k;
        for (int i = 0; i < t.m_; ++i) {
            point[i] = static_cast<int>(rem / t.basis_strides_[i]);
            rem %= t.basis_strides_[i];
        }
        for (int d = 0; d < t.n_ - t.m_; ++d)
            point[t.m_ + d] = h.aggregate(d, std::span<const int>(point.data(), t.m_));
        std::copy(point.begin(), point.end(), t.coherent_points_.begin() + k * t.n_);
    }

    for (std::int64_t j = 0; j < t.q_; ++j) {
        std::int64_t rem = j;
        bool coherent = true;
        for (int i = 0; i < t.n_; ++i) {
            point[i] = static_cast<int>(rem / t.complete_strides_[i]);
            rem %= t.complete_strides_[i];
        }
        for (int d = 0; d < t.n_ - t.m_ && coherent; ++d)
            coherent = point[t.m_ + d] == h.aggregate(d, std::span<const int>(point.data(), t.m_));
        std::copy(point.begin(), point.end(), t.complete_points_.begin() + j * t.n_);
        if (coherent) {
            std::int64_t k = 0;
            for (int i = 0; i < t.m_; ++i) k += point[i] * t.basis_strides_[i];
            t.coherent_of_complete_[j] = k;
        }
    }
    return t;
}

std::int64_t DomainTables::point_to_index(std::span<const int> point, DomainKind kind) const {
    if (static_cast<int>(point.size()) != n_)
        throw DataError("point_to_index: point has wrong dimension");
    for (int i = 0; i < n_; ++i)
        if (point[i] < 0 || point[i] > hier_.domain_max[i])
            throw DataError("point_to_index: coordinate " + std::to_string(i) +
                            " out of domain bounds");
    std::int64_t j = 0;
    for (int i = 0; i < n_; ++i) j += point[i] * complete_strides_[i];
    if (kind == DomainKind::complete) return j;
    std::int64_t k = coherent_of_complete_[j];
    if (k < 0) throw DataError("point_to_index: point is incoherent");
    return k;
}

std::int64_t DomainTables::basis_to_coherent(std::span<const int> basis) const {
    if (static_cast<int>(basis.size()) != m_)
        throw DataError("basis_to_coherent: wrong basis dimension");
    std::int64_t k = 0;
    for (int i = 0; i < m_; ++i) {
        if (basis[i] < 0 || basis[i] > hier_.domain_max[i])
            throw DataError("basis_to_coherent: coordinate out of bounds");
        k += basis[i] * basis_strides_[i];
    }
    return k;
}

void IndexedPmf::validate(double tol) const {
    for (double p : probs)
        if (!(p >= 0.0) || p > 1.0 + 1e-12)
            throw NumericError("pmf: probability out of [0,1]");
    double s = pmf_sum(probs);
    if (std::abs(s - 1.0) > tol)
        throw NumericError("pmf: probabilities sum to " + std::to_string(s));
}

double pmf_sum(std::span<const double> probs) {
    // Kahan summation; marginalization accuracy is specified to 1e-12.
    double sum = 0.0, c = 0.0;
    for (double p : probs) {
        double y = p - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    return sum;
}

std::vector<double> marginalize(const IndexedPmf& pmf, const DomainTables& tbl, int var) {
    if (var < 0 || var >= tbl.n_vars())
        throw DataError("marginalize: unknown variable id " + std::to_string(var));
    std::int64_t size = pmf.kind == DomainKind::complete ? tbl.q() : tbl.r();
    if (static_cast<std::int64_t>(pmf.probs.size()) != size)
        throw DataError("marginalize: pmf length does not match its domain");
    std::vector<double> out(tbl.hierarchy().domain_max[var] + 1, 0.0);
    for (std::int64_t idx = 0; idx < size; ++idx) {
        auto pt = pmf.kind == DomainKind::complete ? tbl.complete_point(idx)
                                                   : tbl.coherent_point(idx);
        out[pt[var]] += pmf.probs[idx];
    }
    return out;
}

}  // namespace dfr
