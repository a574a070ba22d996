#include "qp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <iostream>

#include "error.hpp"

namespace dfr::qp {

namespace {

bool has_nan(const Eigen::SparseMatrix<double>& m) {
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            if (!std::isfinite(it.value())) return true;
    return false;
}

bool has_nan(const Eigen::VectorXd& v) { return !v.allFinite(); }

double objective_at(const Problem& p, const Eigen::VectorXd& x) {
    return 0.5 * x.dot(p.P * x) + p.c.dot(x);
}

}  // namespace

void Problem::validate() const {
    const Eigen::Index nn = c.size();
    if (P.rows() != nn || P.cols() != nn) throw ConfigError("qp: P dimension mismatch");
    if (lower.size() != nn || upper.size() != nn) throw ConfigError("qp: bound dimension mismatch");
    if (E.rows() != d.size() || (E.rows() > 0 && E.cols() != nn))
        throw ConfigError("qp: equality dimension mismatch");
    if (has_nan(P) || has_nan(c) || has_nan(lower) || has_nan(upper) || has_nan(E) || has_nan(d))
        throw NumericError("qp: NaN in problem data");
    for (Eigen::Index i = 0; i < nn; ++i)
        if (lower[i] > upper[i]) throw ConfigError("qp: lower bound exceeds upper bound");
    // Symmetry within 1e-12.
    Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(P.transpose()) - P;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
            if (std::abs(it.value()) > 1e-12) throw ConfigError("qp: P is not symmetric");
}

Solution solve(const Problem& p, const Options& opts,
               const std::optional<Eigen::VectorXd>& warm_start) {
    p.validate();
    const Eigen::Index n = p.n();
    const Eigen::Index me = p.E.rows();

    Solution sol;
    if (n == 0) {
        sol.x.resize(0);
        sol.report.converged = true;
        return sol;
    }

    // Starting point: clamped midpoint of the bounds projected onto Ex = d.
    Eigen::VectorXd x0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double lo = std::isfinite(p.lower[i]) ? p.lower[i] : -1.0;
        double hi = std::isfinite(p.upper[i]) ? p.upper[i] : 1.0;
        x0[i] = 0.5 * (lo + hi);
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> eq_solver;
    if (me > 0) {
        Eigen::SparseMatrix<double> gram = p.E * Eigen::SparseMatrix<double>(p.E.transpose());
        Eigen::SparseMatrix<double> reg(me, me);
        reg.setIdentity();
        gram += 1e-12 * reg;
        eq_solver.compute(gram);
        if (eq_solver.info() == Eigen::Success) {
            Eigen::VectorXd lam = eq_solver.solve(p.E * x0 - p.d);
            x0 -= p.E.transpose() * lam;
        }
        x0 = x0.cwiseMax(p.lower).cwiseMin(p.upper);
    } else {
        x0 = x0.cwiseMax(p.lower).cwiseMin(p.upper);
    }
    const Eigen::VectorXd x_start = x0;
    Eigen::VectorXd x = warm_start && warm_start->size() == n ? *warm_start : x0;

    // Splitting variable z = [Ex; x] with z_eq pinned to d and z_box boxed.
    double rho = opts.rho0;
    const double rho_eq_scale = 1e3;

    Eigen::SparseMatrix<double> ete(n, n);
    if (me > 0) ete = Eigen::SparseMatrix<double>(p.E.transpose()) * p.E;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> kkt;
    Eigen::SparseMatrix<double> identity(n, n);
    identity.setIdentity();
    auto factorize = [&](double rho_value) {
        Eigen::SparseMatrix<double> kmat =
            p.P + (opts.sigma + rho_value) * identity;
        if (me > 0) kmat += (rho_value * rho_eq_scale) * ete;
        kkt.compute(kmat);
        if (kkt.info() != Eigen::Success)
            throw NumericError("qp: KKT factorization failed (matrix may not be PSD)");
    };
    factorize(rho);

    Eigen::VectorXd z_eq = me > 0 ? Eigen::VectorXd(p.d) : Eigen::VectorXd(0);
    Eigen::VectorXd z_box = x.cwiseMax(p.lower).cwiseMin(p.upper);
    Eigen::VectorXd y_eq = Eigen::VectorXd::Zero(me);
    Eigen::VectorXd y_box = Eigen::VectorXd::Zero(n);

    Eigen::VectorXd px_prev = p.P * x;
    Eigen::VectorXd x_prev = x;

    Report rep;
    int it = 0;
    for (it = 1; it <= opts.max_iter; ++it) {
        const double rho_eq = rho * rho_eq_scale;

        Eigen::VectorXd rhs = opts.sigma * x - p.c + rho * z_box - y_box;
        if (me > 0) rhs += p.E.transpose() * (rho_eq * z_eq - y_eq);
        x_prev = x;
        x = kkt.solve(rhs);

        // Negative-curvature guard along the step direction.
        Eigen::VectorXd px = p.P * x;
        Eigen::VectorXd dx = x - x_prev;
        double dx2 = dx.squaredNorm();
        if (dx2 > 1e-20) {
            double curv = dx.dot(px - px_prev);
            if (curv < -1e-8 * dx2)
                throw NumericError("qp: negative curvature detected; P is not PSD");
        }
        px_prev = px;

        Eigen::VectorXd ex = me > 0 ? Eigen::VectorXd(p.E * x) : Eigen::VectorXd(0);

        // Over-relaxed splitting update.
        Eigen::VectorXd relax_box = opts.alpha * x + (1.0 - opts.alpha) * z_box;
        Eigen::VectorXd z_box_new =
            (relax_box + y_box / rho).cwiseMax(p.lower).cwiseMin(p.upper);
        y_box += rho * (relax_box - z_box_new);
        z_box = z_box_new;
        if (me > 0) {
            Eigen::VectorXd relax_eq = opts.alpha * ex + (1.0 - opts.alpha) * z_eq;
            y_eq += rho_eq * (relax_eq - p.d);
            z_eq = p.d;
        }

        // Residuals.
        double prim = (x - z_box).lpNorm<Eigen::Infinity>();
        if (me > 0) prim = std::max(prim, (ex - p.d).lpNorm<Eigen::Infinity>());
        Eigen::VectorXd dual_vec = px + p.c + y_box;
        if (me > 0) dual_vec += p.E.transpose() * y_eq;
        double dual = dual_vec.lpNorm<Eigen::Infinity>();

        if (opts.debug_iterates && it % 100 == 0)
            std::cerr << "qp iter " << it << " prim " << prim << " dual " << dual << " rho "
                      << rho << '\n';

        if (prim <= opts.tol && dual <= opts.tol) {
            rep.converged = true;
            rep.primal_residual = prim;
            rep.dual_residual = dual;
            break;
        }
        rep.primal_residual = prim;
        rep.dual_residual = dual;

        if (it % opts.rho_interval == 0) {
            double prim_scale = std::max({x.lpNorm<Eigen::Infinity>(),
                                          z_box.lpNorm<Eigen::Infinity>(), 1e-12});
            double dual_scale = std::max({px.lpNorm<Eigen::Infinity>(),
                                          p.c.lpNorm<Eigen::Infinity>(),
                                          y_box.lpNorm<Eigen::Infinity>(), 1e-12});
            double ratio = std::sqrt((prim / prim_scale) / std::max(dual / dual_scale, 1e-16));
            ratio = std::clamp(ratio, 1e-3, 1e3);
            double rho_new = std::clamp(rho * ratio, 1e-6, 1e6);
            if (rho_new > 2.0 * rho || rho_new < 0.5 * rho) {
                rho = rho_new;
                factorize(rho);
            }
        }
    }

    rep.iterations = std::min(it, opts.max_iter);
    // x satisfies both feasibility bounds at the primal residual level.
    Eigen::VectorXd x_final = x;
    rep.objective = objective_at(p, x_final);

    if (!rep.converged) {
        // Never return anything worse than the feasible starting point.
        double start_obj = objective_at(p, x_start);
        if (start_obj < rep.objective) {
            x_final = x_start;
            rep.objective = start_obj;
        }
    }
    sol.x = std::move(x_final);
    sol.report = rep;
    return sol;
}

}  // namespace dfr::qp
