#pragma once

#include <string>
#include <vector>

namespace dfr {

// Joint pmf over an explicit list of variables, indexed mixed-radix with the
// first variable most significant and the last varying fastest.
struct JointPmf {
    std::vector<int> cards;     // per-variable cardinality (D_i + 1)
    std::vector<double> probs;  // length = product of cards

    static JointPmf zeros(std::vector<int> cards);

    std::size_t n_vars() const { return cards.size(); }
    std::int64_t size() const { return static_cast<std::int64_t>(probs.size()); }

    std::int64_t index_of(const std::vector<int>& point) const;
    void decode(std::int64_t idx, std::vector<int>& point) const;

    std::vector<double> marginal(int var) const;
    // Marginalize a variable away, keeping the others in order.
    JointPmf sum_out(int var) const;

    void validate(double tol = 1e-8) const;
};

// Slice-rescaling so the marginal of `var` equals `target` while conditionals
// on non-degenerate slices are preserved; a zero-mass slice with positive
// target mass is filled uniformly.
JointPmf adjust(const JointPmf& joint, int var, const std::vector<double>& target);

// Glue two joints sharing one variable (last of `left`, first of `right`)
// under conditional independence given the shared variable, eliminating it:
// out(u, v) = sum_s left(u, s) * right(s, v) / m(s).
JointPmf construct_joint(const JointPmf& left, const JointPmf& right, double tol = 1e-8);

// Pmf of the sum of independent margins (iterated convolution).
std::vector<double> convolve_margins(const std::vector<std::vector<double>>& margins);

}  // namespace dfr
