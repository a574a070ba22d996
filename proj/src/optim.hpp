#pragma once

#include <functional>
#include <vector>

namespace dfr {

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

struct SimplexOptions {
    int max_evaluations = 5000;
    double x_tol = 1e-8;
    double f_tol = 1e-10;
    double initial_step = 0.5;
    int restarts = 1;  // re-expand the simplex around the incumbent
};

// Derivative-free Nelder-Mead minimization. Non-finite objective values are
// treated as +inf so the simplex retreats from invalid regions.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const SimplexOptions& opts = {});

}  // namespace dfr
