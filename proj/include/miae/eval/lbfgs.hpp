#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>

namespace miae::eval {

// Objective callback: given x, fill grad and return f(x).
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsOptions {
    std::size_t memory = 10;
    double grad_tol = 1e-6; // max-norm of the gradient
    std::size_t max_iters = 1000;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with backtracking Armijo line search. Deterministic:
// no randomness, fixed evaluation order.
inline LbfgsResult minimize_lbfgs(const Objective& obj, Eigen::VectorXd x,
                                  const LbfgsOptions& opts = {}) {
    const double c1 = 1e-4;
    Eigen::VectorXd g(x.size());
    double fx = obj(x, g);

    std::deque<Eigen::VectorXd> s_list, y_list;
    std::deque<double> rho_list;

    LbfgsResult out;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        out.iterations = it;
        if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
            out.converged = true;
            break;
        }

        // two-loop recursion for d = -H g
        Eigen::VectorXd d = -g;
        std::deque<double> alpha(s_list.size());
        for (std::size_t k = s_list.size(); k-- > 0;) {
            alpha[k] = rho_list[k] * s_list[k].dot(d);
            d -= alpha[k] * y_list[k];
        }
        if (!s_list.empty()) {
            const double gamma =
                s_list.back().dot(y_list.back()) / y_list.back().squaredNorm();
            d *= gamma;
        }
        for (std::size_t k = 0; k < s_list.size(); ++k) {
            const double beta = rho_list[k] * y_list[k].dot(d);
            d += (alpha[k] - beta) * s_list[k];
        }
        double dg = d.dot(g);
        if (dg >= 0.0) { // not a descent direction; fall back to steepest descent
            d = -g;
            dg = -g.squaredNorm();
        }

        double t = 1.0;
        Eigen::VectorXd x_new(x.size()), g_new(x.size());
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + t * d;
            f_new = obj(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + c1 * t * dg) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break; // no further progress at floating-point resolution

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            s_list.push_back(s);
            y_list.push_back(yv);
            rho_list.push_back(1.0 / sy);
            if (s_list.size() > opts.memory) {
                s_list.pop_front();
                y_list.pop_front();
                rho_list.pop_front();
            }
        }
        x = std::move(x_new);
        g = std::move(g_new);
        fx = f_new;
    }

    out.x = std::move(x);
    out.f = fx;
    out.grad_norm = g.lpNorm<Eigen::Infinity>();
    return out;
}

} // namespace miae::eval
