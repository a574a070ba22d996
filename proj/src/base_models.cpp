#include "base_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"
#include "optim.hpp"
#include "rng.hpp"

namespace dfr {

namespace {

constexpr double kEps = 1e-4;  // clamp margin for estimated probabilities

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double inv_softplus(double y) {
    if (y > 30.0) return y;
    return std::log(std::expm1(std::max(y, 1e-12)));
}

std::vector<double> binomial_pmf(int n, double prob) {
    std::vector<double> pmf(n + 1, 0.0);
    pmf[0] = 1.0;
    // Recurrence over trials keeps every term nonnegative.
    for (int t = 0; t < n; ++t) {
        for (int k = t + 1; k > 0; --k) pmf[k] = pmf[k] * (1.0 - prob) + pmf[k - 1] * prob;
        pmf[0] *= 1.0 - prob;
    }
    return pmf;
}

}  // namespace

void MarginalForecast::validate(double tol) const {
    for (double p : probs)
        if (!(p >= -1e-12) || p > 1.0 + 1e-12) throw NumericError("marginal forecast: probability out of [0,1]");
    double s = pmf_sum(probs);
    if (std::abs(s - 1.0) > tol)
        throw NumericError("marginal forecast: probabilities sum to " + std::to_string(s));
}

// ------------------------------------------------------------ binomial AR(1)

void BinAR1Params::validate() const {
    if (N <= 0) throw ConfigError("binar1: N must be positive");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("binar1: p must be in (0,1)");
    if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("binar1: rho must be in (-1,1)");
    if (!(alpha() > 0.0 && alpha() < 1.0 && beta() > 0.0 && beta() < 1.0))
        throw ConfigError("binar1: thinning parameters fall outside (0,1)");
}

BinAR1Params fit_binar1(std::span<const int> series, int N) {
    if (N <= 0) throw ConfigError("binar1: N must be positive");
    if (series.size() < 10) throw DataError("binar1: need at least 10 observations");
    for (int v : series)
        if (v < 0 || v > N) throw DataError("binar1: observation outside {0..N}");

    const double len = static_cast<double>(series.size());
    double mean = std::accumulate(series.begin(), series.end(), 0.0) / len;

    BinAR1Params out;
    out.N = N;
    out.p = std::clamp(mean / N, kEps, 1.0 - kEps);

    double var = 0.0, cov = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        double d = series[t] - mean;
        var += d * d;
        if (t + 1 < series.size()) cov += d * (series[t + 1] - mean);
    }
    double rho;
    if (var < 1e-12) {
        rho = 0.0;
        out.constant_series = true;
    } else {
        rho = cov / var;
    }

    // Feasible interval for rho keeping alpha = p + rho(1-p) and
    // beta = p(1-rho) inside (eps, 1-eps).
    double lo = std::max({-1.0, (kEps - out.p) / (1.0 - out.p), 1.0 - (1.0 - kEps) / out.p});
    double hi = std::min({1.0, (1.0 - kEps - out.p) / (1.0 - out.p), 1.0 - kEps / out.p});
    out.rho = std::clamp(rho, lo + 1e-9, hi - 1e-9);
    out.validate();
    return out;
}

MarginalForecast forecast_binar1(const BinAR1Params& params, int last_value, int h) {
    params.validate();
    if (last_value < 0 || last_value > params.N)
        throw DataError("binar1 forecast: last_value outside {0..N}");
    if (h < 1) throw ConfigError("binar1 forecast: horizon must be positive");

    const int n = params.N;
    const double a = params.alpha();
    const double b = params.beta();

    // One-step transition rows: state x -> Binomial(x, alpha) + Binomial(n-x, beta).
    std::vector<std::vector<double>> trans(n + 1);
    for (int x = 0; x <= n; ++x) {
        auto survive = binomial_pmf(x, a);
        auto recruit = binomial_pmf(n - x, b);
        std::vector<double> row(n + 1, 0.0);
        for (int i = 0; i <= x; ++i)
            for (int j = 0; j <= n - x; ++j) row[i + j] += survive[i] * recruit[j];
        double s = pmf_sum(row);
        for (double& v : row) v /= s;
        trans[x] = std::move(row);
    }

    std::vector<double> dist(n + 1, 0.0);
    dist[last_value] = 1.0;
    std::vector<double> next(n + 1);
    for (int step = 0; step < h; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int x = 0; x <= n; ++x) {
            if (dist[x] == 0.0) continue;
            for (int y = 0; y <= n; ++y) next[y] += dist[x] * trans[x][y];
        }
        double s = pmf_sum(next);
        for (double& v : next) v /= s;
        dist.swap(next);
    }

    MarginalForecast f;
    f.horizon = h;
    f.probs = std::move(dist);
    f.validate();
    return f;
}

// ----------------------------------------------------------------- INGARCH

void IngarchParams::validate() const {
    if (p < 0 || q < 0) throw ConfigError("ingarch: lag orders must be nonnegative");
    if (static_cast<int>(beta.size()) != p || static_cast<int>(alpha.size()) != q)
        throw ConfigError("ingarch: coefficient vector lengths must match lag orders");
    if (!(beta0 > 0.0)) throw ConfigError("ingarch: beta0 must be positive");
    double s = 0.0;
    for (double v : beta) {
        if (v < 0.0) throw ConfigError("ingarch: beta coefficients must be nonnegative");
        s += v;
    }
    for (double v : alpha) {
        if (v < 0.0) throw ConfigError("ingarch: alpha coefficients must be nonnegative");
        s += v;
    }
    if (s >= 1.0) throw ConfigError("ingarch: sum of coefficients must stay below 1");
}

namespace {

// Conditional means for t = 0..T; entry T is the one-step-ahead mean.
// Pre-sample observations and means are set to the sample mean.
std::vector<double> lambda_path_impl(const IngarchParams& par, std::span<const int> series) {
    const int t_max = static_cast<int>(series.size());
    double mean = t_max > 0
                      ? std::accumulate(series.begin(), series.end(), 0.0) / t_max
                      : par.beta0;
    if (mean <= 0.0) mean = std::max(par.beta0, 1e-4);
    std::vector<double> lambda(t_max + 1, 0.0);
    for (int t = 0; t <= t_max; ++t) {
        double v = par.beta0;
        for (int k = 1; k <= par.p; ++k)
            v += par.beta[k - 1] * (t - k >= 0 ? static_cast<double>(series[t - k]) : mean);
        for (int l = 1; l <= par.q; ++l) v += par.alpha[l - 1] * (t - l >= 0 ? lambda[t - l] : mean);
        lambda[t] = v;
    }
    return lambda;
}

}  // namespace

std::vector<double> ingarch_lambda_path(const IngarchParams& params, std::span<const int> series) {
    params.validate();
    return lambda_path_impl(params, series);
}

IngarchParams fit_ingarch(std::span<const int> series, int p, int q) {
    if (p < 0 || q < 0) throw ConfigError("ingarch: lag orders must be nonnegative");
    if (static_cast<int>(series.size()) <= 10 * (p + q + 1))
        throw DataError("ingarch: series too short for requested lag orders");
    for (int v : series)
        if (v < 0) throw DataError("ingarch: negative observation");

    const int dim = 1 + p + q;
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) /
                        static_cast<double>(series.size());

    auto unpack = [&](const std::vector<double>& theta) {
        IngarchParams par;
        par.p = p;
        par.q = q;
        par.beta0 = softplus(theta[0]) + 1e-6;
        double total = 1.0;
        std::vector<double> raw(p + q);
        for (int i = 0; i < p + q; ++i) {
            raw[i] = softplus(theta[1 + i]);
            total += raw[i];
        }
        for (int i = 0; i < p; ++i) par.beta.push_back(raw[i] / total);
        for (int i = 0; i < q; ++i) par.alpha.push_back(raw[p + i] / total);
        return par;
    };

    auto neg_loglik = [&](const std::vector<double>& theta) {
        IngarchParams par = unpack(theta);
        auto lambda = lambda_path_impl(par, series);
        double ll = 0.0;
        for (std::size_t t = 0; t < series.size(); ++t)
            ll += series[t] * std::log(lambda[t]) - lambda[t];
        return -ll;
    };

    // Start at a mild persistence guess consistent with the sample mean.
    std::vector<double> theta0(dim, 0.0);
    double c0 = p + q > 0 ? 0.3 / (p + q) : 0.0;
    double sum0 = c0 * (p + q);
    theta0[0] = inv_softplus(std::max(mean * (1.0 - sum0), 1e-4));
    for (int i = 0; i < p + q; ++i) theta0[1 + i] = inv_softplus(c0 * (1.0 + sum0 / (1.0 - sum0)));

    if (!std::isfinite(neg_loglik(theta0)))
        throw NumericError("ingarch: objective not finite at the initial parameters");

    SimplexOptions opts;
    opts.max_evaluations = 800 * dim;
    opts.restarts = 2;
    auto res = nelder_mead(neg_loglik, theta0, opts);

    IngarchParams out = unpack(res.x);
    out.loglik = -res.value;
    out.converged = res.converged;
    if (out.beta0 < 1e-5) {
        out.beta0 = 1e-6;
        out.degenerate = true;
    }
    out.validate();
    return out;
}

double poisson_pmf(int k, double lambda) {
    if (k < 0) return 0.0;
    if (lambda <= 0.0) return k == 0 ? 1.0 : 0.0;
    double term = std::exp(-lambda);
    for (int i = 1; i <= k; ++i) term *= lambda / i;
    return term;
}

double poisson_cdf(int k, double lambda) {
    if (k < 0) return 0.0;
    if (lambda <= 0.0) return 1.0;
    double term = std::exp(-lambda);
    double sum = term;
    for (int i = 1; i <= k; ++i) {
        term *= lambda / i;
        sum += term;
    }
    return std::min(sum, 1.0);
}

MarginalForecast forecast_ingarch(const IngarchParams& params, std::span<const int> history, int D,
                                  int h, int n_paths, std::uint64_t seed) {
    params.validate();
    if (D <= 0) throw ConfigError("ingarch forecast: domain bound must be positive");
    if (h < 1) throw ConfigError("ingarch forecast: horizon must be positive");
    int need = std::max(params.p, params.q);
    if (static_cast<int>(history.size()) < need)
        throw DataError("ingarch forecast: history shorter than lag order");

    MarginalForecast f;
    f.horizon = h;
    f.probs.assign(D + 1, 0.0);

    auto lambda = lambda_path_impl(params, history);
    const int t_hist = static_cast<int>(history.size());

    if (h == 1) {
        double lam = lambda[t_hist];
        for (int k = 0; k < D; ++k) f.probs[k] = poisson_pmf(k, lam);
        f.probs[D] = 1.0 - poisson_cdf(D - 1, lam);  // tail mass lumped onto D
        f.validate(1e-12);
        return f;
    }

    Rng rng(seed);
    std::vector<int> y_ext(history.begin(), history.end());
    std::vector<double> lam_ext;
    for (int path = 0; path < n_paths; ++path) {
        y_ext.resize(history.size());
        lam_ext.assign(lambda.begin(), lambda.begin() + t_hist);
        int y_last = 0;
        for (int s = 0; s < h; ++s) {
            int t = t_hist + s;
            double lam = params.beta0;
            for (int k = 1; k <= params.p; ++k)
                lam += params.beta[k - 1] * (t - k >= 0 ? y_ext[t - k] : 0.0);
            for (int l = 1; l <= params.q; ++l)
                lam += params.alpha[l - 1] * (t - l >= 0 && t - l < static_cast<int>(lam_ext.size())
                                                  ? lam_ext[t - l]
                                                  : lam_ext.empty() ? params.beta0 : lam_ext.back());
            lam_ext.push_back(lam);
            y_last = static_cast<int>(rng.poisson(lam));
            y_ext.push_back(y_last);
        }
        f.probs[std::min(y_last, D)] += 1.0;
    }
    for (double& v : f.probs) v /= n_paths;
    f.validate(1e-9);
    return f;
}

// --------------------------------------------------------- logistic with lags

void LogisticLagParams::validate() const {
    if (n_lags <= 0) throw ConfigError("logistic: n_lags must be positive");
    if (period <= 0) throw ConfigError("logistic: period must be positive");
    if (static_cast<int>(coef.size()) != 1 + n_lags + (period - 1))
        throw ConfigError("logistic: coefficient vector length must be 1 + n_lags + (period-1)");
}

namespace {

// Feature vector for predicting position t: intercept, the n_lags previous
// values, then dummies for cycle positions 1..period-1.
void fill_features(std::vector<double>& x, std::span<const int> series, int t, int n_lags,
                   int period, int phase) {
    x.assign(1 + n_lags + (period - 1), 0.0);
    x[0] = 1.0;
    for (int k = 1; k <= n_lags; ++k) x[k] = static_cast<double>(series[t - k]);
    int pos = (phase + t) % period;
    if (pos > 0) x[n_lags + pos] = 1.0;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-std::clamp(z, -30.0, 30.0))); }

}  // namespace

LogisticLagParams fit_logistic(std::span<const int> series, int n_lags, int period, int phase) {
    if (n_lags <= 0 || period <= 0) throw ConfigError("logistic: bad lag/period configuration");
    if (static_cast<int>(series.size()) < 5 * (n_lags + period))
        throw DataError("logistic: series too short");
    for (int v : series)
        if (v != 0 && v != 1) throw DataError("logistic: series must be binary");

    const int dim = 1 + n_lags + (period - 1);
    const int t0 = n_lags;
    const int t_max = static_cast<int>(series.size());
    const double ridge = 1e-8;

    std::vector<double> beta(dim, 0.0);
    std::vector<double> x(dim);
    std::vector<double> grad(dim), hess(dim * dim);

    // Newton / IRLS with ridge jitter against separation.
    bool converged = false;
    for (int iter = 0; iter < 60 && !converged; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(hess.begin(), hess.end(), 0.0);
        for (int t = t0; t < t_max; ++t) {
            fill_features(x, series, t, n_lags, period, phase);
            double eta = 0.0;
            for (int d = 0; d < dim; ++d) eta += beta[d] * x[d];
            double mu = sigmoid(eta);
            double w = std::max(mu * (1.0 - mu), 1e-10);
            double resid = series[t] - mu;
            for (int d = 0; d < dim; ++d) {
                grad[d] += resid * x[d];
                for (int e = d; e < dim; ++e) hess[d * dim + e] += w * x[d] * x[e];
            }
        }
        for (int d = 0; d < dim; ++d) {
            grad[d] -= ridge * beta[d];
            hess[d * dim + d] += ridge;
            for (int e = 0; e < d; ++e) hess[d * dim + e] = hess[e * dim + d];
        }
        // Cholesky solve of hess * delta = grad.
        std::vector<double> chol(hess);
        for (int c = 0; c < dim; ++c) {
            for (int k = 0; k < c; ++k) chol[c * dim + c] -= chol[c * dim + k] * chol[c * dim + k];
            if (chol[c * dim + c] <= 0.0) throw NumericError("logistic: singular IRLS system");
            chol[c * dim + c] = std::sqrt(chol[c * dim + c]);
            for (int rr = c + 1; rr < dim; ++rr) {
                for (int k = 0; k < c; ++k)
                    chol[rr * dim + c] -= chol[rr * dim + k] * chol[c * dim + k];
                chol[rr * dim + c] /= chol[c * dim + c];
            }
        }
        std::vector<double> delta(grad);
        for (int rr = 0; rr < dim; ++rr) {
            for (int k = 0; k < rr; ++k) delta[rr] -= chol[rr * dim + k] * delta[k];
            delta[rr] /= chol[rr * dim + rr];
        }
        for (int rr = dim - 1; rr >= 0; --rr) {
            for (int k = rr + 1; k < dim; ++k) delta[rr] -= chol[k * dim + rr] * delta[k];
            delta[rr] /= chol[rr * dim + rr];
        }
        double step_max = 0.0;
        for (int d = 0; d < dim; ++d) {
            beta[d] += delta[d];
            step_max = std::max(step_max, std::abs(delta[d]));
        }
        converged = step_max < 1e-8;
    }

    LogisticLagParams out;
    out.n_lags = n_lags;
    out.period = period;
    out.coef = std::move(beta);
    for (double b : out.coef)
        if (std::abs(b) > 15.0) out.separation_flag = true;
    if (!converged) out.separation_flag = true;
    out.validate();
    return out;
}

std::vector<MarginalForecast> forecast_logistic_path(const LogisticLagParams& params,
                                                     std::span<const int> series, int h,
                                                     int n_paths, std::uint64_t seed, int phase) {
    params.validate();
    if (h < 1) throw ConfigError("logistic forecast: horizon must be positive");
    if (static_cast<int>(series.size()) < params.n_lags)
        throw DataError("logistic forecast: history shorter than n_lags");

    const int dim = static_cast<int>(params.coef.size());
    std::vector<double> ones_count(h, 0.0);
    std::vector<int> path(series.begin(), series.end());
    std::vector<double> x(dim);
    Rng rng(seed);
    for (int p = 0; p < n_paths; ++p) {
        path.resize(series.size());
        for (int s = 0; s < h; ++s) {
            int t = static_cast<int>(path.size());
            fill_features(x, path, t, params.n_lags, params.period, phase);
            double eta = 0.0;
            for (int d = 0; d < dim; ++d) eta += params.coef[d] * x[d];
            int y = rng.bernoulli(sigmoid(eta)) ? 1 : 0;
            path.push_back(y);
            ones_count[s] += y;
        }
    }

    std::vector<MarginalForecast> out;
    for (int s = 0; s < h; ++s) {
        MarginalForecast f;
        f.horizon = s + 1;
        double p1 = ones_count[s] / n_paths;
        f.probs = {1.0 - p1, p1};
        out.push_back(std::move(f));
    }
    return out;
}

MarginalForecast fit_forecast_logistic(std::span<const int> series, int n_lags, int period, int h,
                                       int n_paths, std::uint64_t seed) {
    auto params = fit_logistic(series, n_lags, period, 0);
    auto path = forecast_logistic_path(params, series, h, n_paths, seed, 0);
    return path.back();
}

// ------------------------------------------------------------ joint assembly

IndexedPmf independence_product(const std::vector<MarginalForecast>& margins,
                                const DomainTables& tbl) {
    const int n = tbl.n_vars();
    if (static_cast<int>(margins.size()) != n)
        throw DataError("independence product: need exactly one margin per variable");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(margins[i].probs.size()) != tbl.hierarchy().domain_max[i] + 1)
            throw DataError("independence product: margin " + std::to_string(i) +
                            " does not cover the variable domain");
    }
    IndexedPmf pmf;
    pmf.kind = DomainKind::complete;
    pmf.probs.assign(tbl.q(), 0.0);
    for (std::int64_t j = 0; j < tbl.q(); ++j) {
        auto pt = tbl.complete_point(j);
        double v = 1.0;
        for (int i = 0; i < n; ++i) v *= margins[i].probs[pt[i]];
        pmf.probs[j] = v;
    }
    return pmf;
}

IndexedPmf empirical_joint(const std::vector<std::vector<int>>& observations,
                           const DomainTables& tbl, double laplace) {
    if (observations.empty()) throw DataError("empirical joint: no observations");
    if (laplace < 0.0) throw ConfigError("empirical joint: smoothing must be nonnegative");
    std::vector<double> counts(tbl.r(), laplace);
    std::vector<int> clamped(tbl.n_vars());
    for (const auto& obs : observations) {
        if (static_cast<int>(obs.size()) != tbl.n_vars())
            throw DataError("empirical joint: observation has wrong dimension");
        for (int i = 0; i < tbl.n_vars(); ++i)
            clamped[i] = std::clamp(obs[i], 0, tbl.hierarchy().domain_max[i]);
        counts[tbl.point_to_index(clamped, DomainKind::coherent)] += 1.0;
    }
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    IndexedPmf pmf;
    pmf.kind = DomainKind::coherent;
    pmf.probs.resize(tbl.r());
    for (std::int64_t k = 0; k < tbl.r(); ++k) pmf.probs[k] = counts[k] / total;
    return pmf;
}

}  // namespace dfr
