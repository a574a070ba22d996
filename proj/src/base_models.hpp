#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hierarchy.hpp"

namespace dfr {

// Predictive pmf of one variable at a given horizon.
struct MarginalForecast {
    int var = 0;
    int horizon = 1;
    std::vector<double> probs;  // over {0..D_var}

    void validate(double tol = 1e-9) const;
};

// ------------------------------------------------------------ binomial AR(1)

// Binomial AR(1) with marginal Binomial(N, p) and lag-1 autocorrelation rho;
// thinning parameters beta = p(1-rho), alpha = beta + rho must lie in (0,1).
struct BinAR1Params {
    int N = 1;
    double p = 0.5;
    double rho = 0.0;
    bool constant_series = false;  // fit fell back to rho = 0

    double alpha() const { return beta() + rho; }
    double beta() const { return p * (1.0 - rho); }
    void validate() const;
};

// Moment fit: p from the sample mean, rho from the lag-1 autocorrelation,
// both clamped so the thinning parameters stay inside (0,1).
BinAR1Params fit_binar1(std::span<const int> series, int N);

// h-step predictive pmf via the h-th power of the one-step Markov transition
// matrix (row x is Binomial(x, alpha) convolved with Binomial(N-x, beta)).
MarginalForecast forecast_binar1(const BinAR1Params& params, int last_value, int h);

// ----------------------------------------------------------------- INGARCH

struct IngarchParams {
    int p = 0;
    int q = 0;
    double beta0 = 1.0;
    std::vector<double> beta;   // length p, lagged observations
    std::vector<double> alpha;  // length q, lagged conditional means
    double loglik = 0.0;
    bool converged = true;
    bool degenerate = false;  // beta0 clamped at its lower bound

    void validate() const;
};

// Conditional Poisson maximum likelihood via Nelder-Mead on transformed
// parameters (positivity and sum(beta)+sum(alpha) < 1 enforced smoothly);
// the lambda recursion is initialized at the sample mean.
IngarchParams fit_ingarch(std::span<const int> series, int p, int q);

// Conditional means over the sample plus the one-step-ahead mean.
std::vector<double> ingarch_lambda_path(const IngarchParams& params, std::span<const int> series);

// Predictive pmf on {0..D} with the Poisson tail mass lumped onto D.
// One step ahead is exact; h > 1 uses seeded Monte-Carlo path simulation.
MarginalForecast forecast_ingarch(const IngarchParams& params, std::span<const int> history, int D,
                                  int h = 1, int n_paths = 5000, std::uint64_t seed = 1);

// --------------------------------------------------------- logistic with lags

struct LogisticLagParams {
    int n_lags = 6;
    int period = 7;
    std::vector<double> coef;  // intercept, lags, period-1 seasonal dummies
    bool separation_flag = false;

    void validate() const;
};

// IRLS with a small ridge term against separation. `phase` is the position of
// series[0] within the seasonal cycle.
LogisticLagParams fit_logistic(std::span<const int> series, int n_lags = 6, int period = 7,
                               int phase = 0);

// Bernoulli pmfs for steps 1..h via seeded Monte-Carlo rollout.
std::vector<MarginalForecast> forecast_logistic_path(const LogisticLagParams& params,
                                                     std::span<const int> series, int h,
                                                     int n_paths = 5000, std::uint64_t seed = 1,
                                                     int phase = 0);

// Single h-step-ahead forecast (fit + rollout).
MarginalForecast fit_forecast_logistic(std::span<const int> series, int n_lags, int period, int h,
                                       int n_paths = 5000, std::uint64_t seed = 1);

// ------------------------------------------------------------ joint assembly

// Independent joint base forecast on the complete domain:
// probs[j] = prod_i margins[i][point_j[i]].
IndexedPmf independence_product(const std::vector<MarginalForecast>& margins,
                                const DomainTables& tbl);

// Relative frequencies over coherent points with additive smoothing.
// Values above a variable's domain bound are clamped to the bound.
IndexedPmf empirical_joint(const std::vector<std::vector<int>>& observations,
                           const DomainTables& tbl, double laplace = 0.0);

// Poisson helpers shared with tests and the INGARCH forecaster.
double poisson_pmf(int k, double lambda);
double poisson_cdf(int k, double lambda);

}  // namespace dfr
