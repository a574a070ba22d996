#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dfr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const SimplexOptions& opts) {
    const std::size_t n = x0.size();
    SimplexResult res;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        double v = f(x);
        return std::isfinite(v) ? v : kInf;
    };

    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    double step = opts.initial_step;

    auto init_simplex = [&](const std::vector<double>& center) {
        pts.assign(1, center);
        vals.assign(1, eval(center));
        for (std::size_t i = 0; i < n; ++i) {
            auto p = center;
            p[i] += step;
            pts.push_back(p);
            vals.push_back(eval(p));
        }
    };

    init_simplex(x0);
    int restarts_left = opts.restarts;

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    std::vector<std::size_t> order(n + 1);

    while (evals < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        double spread = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            spread = std::max(spread, std::abs(pts[worst][i] - pts[best][i]));
        double fspread = vals[worst] - vals[best];
        if ((spread < opts.x_tol && fspread < opts.f_tol) || !std::isfinite(fspread)) {
            if (restarts_left-- > 0 && std::isfinite(vals[best])) {
                step *= 0.1;
                init_simplex(pts[best]);
                continue;
            }
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d)
                p[d] = centroid[d] + coef * (centroid[d] - pts[worst][d]);
            return p;
        };

        auto reflected = blend(alpha);
        double fr = eval(reflected);
        if (fr < vals[order[0]]) {
            auto expanded = blend(gamma);
            double fe = eval(expanded);
            if (fe < fr) {
                pts[worst] = std::move(expanded);
                vals[worst] = fe;
            } else {
                pts[worst] = std::move(reflected);
                vals[worst] = fr;
            }
        } else if (fr < vals[second]) {
            pts[worst] = std::move(reflected);
            vals[worst] = fr;
        } else {
            auto contracted = blend(-rho);
            double fc = eval(contracted);
            if (fc < vals[worst]) {
                pts[worst] = std::move(contracted);
                vals[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        pts[i][d] = pts[best][d] + sigma * (pts[i][d] - pts[best][d]);
                    vals[i] = eval(pts[i]);
                }
            }
        }
    }

    std::size_t argbest = 0;
    for (std::size_t i = 1; i <= n && i < vals.size(); ++i)
        if (vals[i] < vals[argbest]) argbest = i;
    res.x = pts[argbest];
    res.value = vals[argbest];
    res.evaluations = evals;
    return res;
}

}  // namespace dfr
