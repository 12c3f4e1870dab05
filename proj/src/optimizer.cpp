#include "plfsi/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace plfsi {

namespace {

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi)
{
    return x.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double fx, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi, double h, int& evals)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        const bool up = x[i] + h <= hi[i];
        const bool down = x[i] - h >= lo[i];
        if (up && down) {
            xp[i] += h;
            xm[i] -= h;
            g[i] = (f(xp) - f(xm)) / (2.0 * h);
            evals += 2;
        } else if (up) {
            xp[i] += h;
            g[i] = (f(xp) - fx) / h;
            ++evals;
        } else {
            xm[i] -= h;
            g[i] = (fx - f(xm)) / h;
            ++evals;
        }
    }
    return g;
}

} // namespace

BoxResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, const BoxOptions& opt)
{
    const auto n = x0.size();
    BoxResult res;
    Eigen::VectorXd x = project(std::move(x0), lower, upper);
    double fx = f(x);
    res.evaluations = 1;
    Eigen::VectorXd g = numerical_gradient(f, x, fx, lower, upper, opt.fd_step, res.evaluations);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);

    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        res.iterations = iter;

        const Eigen::VectorXd pg = project(x - g, lower, upper) - x;
        if (pg.lpNorm<Eigen::Infinity>() <= opt.pg_tolerance) {
            res.converged = true;
            res.message = "projected gradient below tolerance";
            break;
        }

        // Variables held at a bound by the gradient are fixed for this step.
        Eigen::VectorXd free = Eigen::VectorXd::Ones(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)) {
                free[i] = 0.0;
            }
        }
        const Eigen::MatrixXd mask = free.asDiagonal();
        Eigen::VectorXd dir = -(mask * h_inv * mask) * g;
        if (g.dot(dir) >= 0.0) {
            h_inv.setIdentity();
            dir = -(mask * g);
        }
        double step = 1.0;
        const double dir_norm = dir.lpNorm<Eigen::Infinity>();
        if (dir_norm > opt.max_step) {
            step = opt.max_step / dir_norm;
        }

        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = fx;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = project(x + step * dir, lower, upper);
            f_new = f(x_new);
            ++res.evaluations;
            if (f_new <= fx + 1e-4 * g.dot(x_new - x)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No decrease along a descent direction of the numerical gradient:
            // the iterate is stationary to working precision.
            res.converged = iter > 1 || pg.lpNorm<Eigen::Infinity>() < 1e-6;
            res.message = "line search found no further decrease";
            break;
        }

        const Eigen::VectorXd g_new = numerical_gradient(f, x_new, f_new, lower, upper, opt.fd_step, res.evaluations);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            h_inv = (I - rho * s * y.transpose()) * h_inv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const double reduction = (fx - f_new) / std::max({std::abs(fx), std::abs(f_new), 1.0});
        x = x_new;
        fx = f_new;
        g = g_new;
        if (reduction <= opt.tolerance) {
            res.converged = true;
            res.message = "relative reduction of objective below tolerance";
            break;
        }
        if (iter == opt.max_iterations) {
            res.message = "iteration limit reached";
        }
    }
    res.x = x;
    res.value = fx;
    return res;
}

} // namespace plfsi
