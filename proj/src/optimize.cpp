#include "sgmvar/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgmvar/error.hpp"

namespace sgmvar {

namespace {

double step_for(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

}  // namespace

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd g(n);
    Eigen::VectorXd xp = x;
    double f0 = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = step_for(x[i], rel_step);
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        const bool okp = std::isfinite(fp);
        const bool okm = std::isfinite(fm);
        if (okp && okm) {
            g[i] = (fp - fm) / (2.0 * h);
        } else if (okp || okm) {
            if (std::isnan(f0)) f0 = f(x);
            g[i] = okp ? (fp - f0) / h : (f0 - fm) / h;
            if (!std::isfinite(g[i])) g[i] = 0.0;
        } else {
            g[i] = 0.0;
        }
    }
    return g;
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double rel_step) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) h[i] = step_for(x[i], rel_step);
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd xp = x;
    const double f0 = f(x);
    for (Eigen::Index i = 0; i < n; ++i) {
        xp[i] = x[i] + h[i];
        const double fp = f(xp);
        xp[i] = x[i] - h[i];
        const double fm = f(xp);
        xp[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            auto eval = [&](double si, double sj) {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                const double v = f(xp);
                xp[i] = x[i];
                xp[j] = x[j];
                return v;
            };
            const double v = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h[i] * h[j]);
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return H;
}

BfgsResult maximize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& options) {
    BfgsResult res;
    res.x = x0;
    res.value = f(x0);
    if (!std::isfinite(res.value)) throw InvalidParameters("maximize_bfgs: starting point is infeasible");
    res.trace.push_back(res.value);
    const Eigen::Index n = x0.size();
    if (n == 0) {
        res.converged = true;
        res.message = "no free parameters";
        return res;
    }

    Eigen::VectorXd g = numeric_gradient(f, res.x, options.gradient_step);
    res.gradient_norm = g.norm();
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;

    for (int it = 0; it < options.max_iterations; ++it) {
        if (res.gradient_norm < options.convergence_tol) {
            res.converged = true;
            res.message = "gradient norm below tolerance";
            return res;
        }
        Eigen::VectorXd dir = Hinv * g;
        double slope = g.dot(dir);
        if (!(slope > 0.0)) {
            Hinv.setIdentity();
            scaled = false;
            dir = g;
            slope = g.squaredNorm();
        }
        double t = 1.0;
        if (!scaled) t = std::min(1.0, 0.1 * std::max(1.0, res.x.norm()) / dir.norm());

        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = 0.0;
        for (int k = 0; k < options.max_backtracks; ++k) {
            x_new = res.x + t * dir;
            f_new = f(x_new);
            if (std::isfinite(f_new) && f_new >= res.value + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            res.message = "line search failed to find an ascent step";
            return res;
        }

        const Eigen::VectorXd g_new = numeric_gradient(f, x_new, options.gradient_step);
        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g - g_new;  // gradient change of the minimized objective -f
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                Hinv *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd Hy = Hinv * y;
            Hinv += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
        }

        const double improvement = f_new - res.value;
        res.x = x_new;
        res.value = f_new;
        g = g_new;
        res.gradient_norm = g.norm();
        res.iterations = it + 1;
        res.trace.push_back(f_new);
        if (improvement <= 1e-14 * std::max(1.0, std::abs(f_new)) && res.gradient_norm >= options.convergence_tol) {
            // Progress has stalled at the resolution of the finite-difference gradient.
            res.message = "objective change below machine resolution";
            res.converged = res.gradient_norm < 10.0 * options.convergence_tol;
            return res;
        }
    }
    res.converged = res.gradient_norm < options.convergence_tol;
    res.message = res.converged ? "gradient norm below tolerance" : "iteration limit reached";
    return res;
}

}  // namespace sgmvar
