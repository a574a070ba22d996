#include "joint_pmf.hpp"

#include <cmath>
#include <numeric>

#include "error.hpp"
#include "hierarchy.hpp"

namespace dfr {

JointPmf JointPmf::zeros(std::vector<int> cards) {
    JointPmf j;
    std::int64_t total = 1;
    for (int c : cards) {
        if (c <= 0) throw ConfigError("joint pmf: cardinalities must be positive");
        total *= c;
    }
    j.cards = std::move(cards);
    j.probs.assign(static_cast<std::size_t>(total), 0.0);
    return j;
}

std::int64_t JointPmf::index_of(const std::vector<int>& point) const {
    if (point.size() != cards.size()) throw DataError("joint pmf: point dimension mismatch");
    std::int64_t idx = 0;
    for (std::size_t i = 0; i < cards.size(); ++i) {
        if (point[i] < 0 || point[i] >= cards[i])
            throw DataError("joint pmf: coordinate out of range");
        idx = idx * cards[i] + point[i];
    }
    return idx;
}

void JointPmf::decode(std::int64_t idx, std::vector<int>& point) const {
    point.resize(cards.size());
    for (std::size_t i = cards.size(); i-- > 0;) {
        point[i] = static_cast<int>(idx % cards[i]);
        idx /= cards[i];
    }
}

std::vector<double> JointPmf::marginal(int var) const {
    if (var < 0 || var >= static_cast<int>(cards.size()))
        throw DataError("joint pmf: unknown variable");
    // Stride of `var`: product of cardinalities after it.
    std::int64_t stride = 1;
    for (std::size_t i = var + 1; i < cards.size(); ++i) stride *= cards[i];
    std::vector<double> out(cards[var], 0.0);
    for (std::int64_t idx = 0; idx < size(); ++idx)
        out[(idx / stride) % cards[var]] += probs[idx];
    return out;
}

JointPmf JointPmf::sum_out(int var) const {
    if (var < 0 || var >= static_cast<int>(cards.size()))
        throw DataError("joint pmf: unknown variable");
    std::vector<int> new_cards;
    for (std::size_t i = 0; i < cards.size(); ++i)
        if (static_cast<int>(i) != var) new_cards.push_back(cards[i]);
    if (new_cards.empty()) throw DataError("joint pmf: cannot sum out the only variable");
    JointPmf out = zeros(new_cards);
    std::int64_t stride = 1;
    for (std::size_t i = var + 1; i < cards.size(); ++i) stride *= cards[i];
    for (std::int64_t idx = 0; idx < size(); ++idx) {
        std::int64_t hi = idx / (stride * cards[var]);
        std::int64_t lo = idx % stride;
        out.probs[hi * stride + lo] += probs[idx];
    }
    return out;
}

void JointPmf::validate(double tol) const {
    for (double p : probs)
        if (!(p >= -1e-12)) throw NumericError("joint pmf: negative probability");
    double s = pmf_sum(probs);
    if (std::abs(s - 1.0) > tol)
        throw NumericError("joint pmf: mass sums to " + std::to_string(s));
}

JointPmf adjust(const JointPmf& joint, int var, const std::vector<double>& target) {
    if (var < 0 || var >= static_cast<int>(joint.cards.size()))
        throw DataError("adjust: unknown variable");
    if (static_cast<int>(target.size()) != joint.cards[var])
        throw DataError("adjust: target margin over the wrong domain");

    auto current = joint.marginal(var);
    std::int64_t stride = 1;
    for (std::size_t i = var + 1; i < joint.cards.size(); ++i) stride *= joint.cards[i];
    const std::int64_t slice_size = joint.size() / joint.cards[var];

    JointPmf out = joint;
    for (int v = 0; v < joint.cards[var]; ++v) {
        if (current[v] > 0.0) {
            double scale = target[v] / current[v];
            for (std::int64_t idx = 0; idx < joint.size(); ++idx)
                if ((idx / stride) % joint.cards[var] == v) out.probs[idx] = joint.probs[idx] * scale;
        } else {
            // Zero-mass slice: spread the target mass uniformly over it.
            double fill = target[v] / static_cast<double>(slice_size);
            for (std::int64_t idx = 0; idx < joint.size(); ++idx)
                if ((idx / stride) % joint.cards[var] == v) out.probs[idx] = fill;
        }
    }
    return out;
}

JointPmf construct_joint(const JointPmf& left, const JointPmf& right, double tol) {
    if (left.cards.empty() || right.cards.empty())
        throw DataError("construct joint: empty inputs");
    const int s_card = left.cards.back();
    if (right.cards.front() != s_card)
        throw DataError("construct joint: shared variable domains differ");

    auto ml = left.marginal(static_cast<int>(left.cards.size()) - 1);
    auto mr = right.marginal(0);
    for (int s = 0; s < s_card; ++s)
        if (std::abs(ml[s] - mr[s]) > tol)
            throw DataError("construct joint: shared marginals disagree at value " +
                            std::to_string(s));

    // left is laid out as (U, s): index = u * s_card + s;
    // right as (s, V): index = s * v_size + v.
    const std::int64_t u_size = left.size() / s_card;
    const std::int64_t v_size = right.size() / s_card;

    std::vector<int> out_cards(left.cards.begin(), left.cards.end() - 1);
    out_cards.insert(out_cards.end(), right.cards.begin() + 1, right.cards.end());
    JointPmf out = JointPmf::zeros(out_cards);

    for (int s = 0; s < s_card; ++s) {
        double mass = mr[s];
        if (mass <= 0.0) continue;
        for (std::int64_t u = 0; u < u_size; ++u) {
            double pl = left.probs[u * s_card + s];
            if (pl == 0.0) continue;
            for (std::int64_t v = 0; v < v_size; ++v) {
                double pr = right.probs[s * v_size + v];
                if (pr == 0.0) continue;
                out.probs[u * v_size + v] += pl * pr / mass;
            }
        }
    }
    return out;
}

std::vector<double> convolve_margins(const std::vector<std::vector<double>>& margins) {
    if (margins.empty()) throw DataError("convolution: no margins");
    std::vector<double> acc = margins[0];
    for (std::size_t i = 1; i < margins.size(); ++i) {
        const auto& m = margins[i];
        std::vector<double> next(acc.size() + m.size() - 1, 0.0);
        for (std::size_t a = 0; a < acc.size(); ++a) {
            if (acc[a] == 0.0) continue;
            for (std::size_t b = 0; b < m.size(); ++b) next[a + b] += acc[a] * m[b];
        }
        acc = std::move(next);
    }
    return acc;
}

}  // namespace dfr
