#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>

namespace dfr::qp {

// minimize 1/2 x'Px + c'x  subject to  Ex = d,  lower <= x <= upper.
struct Problem {
    Eigen::SparseMatrix<double> P;  // n x n, symmetric positive semidefinite
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> E;  // m_eq x n (may have zero rows)
    Eigen::VectorXd d;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Eigen::Index n() const { return c.size(); }
    void validate() const;
};

struct Options {
    double tol = 1e-6;
    int max_iter = 20000;
    double sigma = 1e-6;       // x-regularization
    double alpha = 1.6;        // over-relaxation
    double rho0 = 0.1;         // initial penalty
    int rho_interval = 50;     // iterations between penalty adaptations
    bool debug_iterates = false;  // dump residual trace to stderr
};

struct Report {
    double objective = 0.0;  // 1/2 x'Px + c'x at the returned point
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = false;
};

struct Solution {
    Eigen::VectorXd x;
    Report report;
};

// Deterministic operator-splitting (ADMM) solve. Starts from the clamped
// midpoint of the bounds projected onto the equality constraints unless a
// warm start is supplied. Throws NumericError on NaN input or when negative
// curvature beyond -1e-8 is observed along an iterate direction.
Solution solve(const Problem& p, const Options& opts = {},
               const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

}  // namespace dfr::qp
