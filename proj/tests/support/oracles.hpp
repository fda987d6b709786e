// SPDX-License-Identifier: Apache-2.0
//
// Test-only oracles, independent of the conic solver path:
//  - a log-barrier Newton descent over directly parametrized
//    beamformers (real/imaginary entries), used to cross-check
//    subproblem optima from many random starts;
//  - scalar-arithmetic helpers re-implementing the signal-model
//    formulas entry by entry.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

// One smooth constraint c(x) <= 0 with analytic value and gradient.
struct Constraint {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

// Minimizes ||x||^2 subject to constraints via a log-barrier Newton
// path. `start` must be strictly feasible. Returns the final point.
inline Eigen::VectorXd barrier_descent(const std::vector<Constraint>& constraints,
                                       Eigen::VectorXd x) {
    const auto barrier_grad = [&](const Eigen::VectorXd& p, double mu) {
        Eigen::VectorXd g = 2.0 * p;
        for (const auto& c : constraints) g += mu / (-c.value(p)) * c.gradient(p);
        return g;
    };
    const auto feasible = [&](const Eigen::VectorXd& p) {
        for (const auto& c : constraints)
            if (!(c.value(p) < 0.0)) return false;
        return true;
    };
    const auto barrier_value = [&](const Eigen::VectorXd& p, double mu) {
        double v = p.squaredNorm();
        for (const auto& c : constraints) v -= mu * std::log(-c.value(p));
        return v;
    };

    const int dim = static_cast<int>(x.size());
    for (double mu = 1.0; mu > 1e-12; mu *= 0.2) {
        for (int newton = 0; newton < 60; ++newton) {
            const Eigen::VectorXd grad = barrier_grad(x, mu);
            if (grad.norm() < 1e-10 * std::max(1.0, x.squaredNorm())) break;
            // Hessian by central differences of the analytic gradient;
            // the step shrinks until both probes stay strictly feasible.
            Eigen::MatrixXd hess(dim, dim);
            double h = 1e-6 * std::max(1.0, x.norm());
            for (int halve = 0; halve < 40; ++halve) {
                bool probes_ok = true;
                for (int j = 0; j < dim && probes_ok; ++j) {
                    Eigen::VectorXd xp = x, xm = x;
                    xp(j) += h;
                    xm(j) -= h;
                    probes_ok = feasible(xp) && feasible(xm);
                }
                if (probes_ok) break;
                h *= 0.5;
            }
            for (int j = 0; j < dim; ++j) {
                Eigen::VectorXd xp = x, xm = x;
                xp(j) += h;
                xm(j) -= h;
                hess.col(j) = (barrier_grad(xp, mu) - barrier_grad(xm, mu)) / (2.0 * h);
            }
            hess = 0.5 * (hess + hess.transpose().eval());
            hess.diagonal().array() += 1e-12 * std::max(1.0, hess.norm());
            Eigen::VectorXd step = hess.ldlt().solve(-grad);
            if (!step.allFinite()) step = -grad;
            double t = 1.0;
            const double f0 = barrier_value(x, mu);
            while (t > 1e-14 &&
                   (!feasible(x + t * step) || barrier_value(x + t * step, mu) > f0))
                t *= 0.5;
            if (t <= 1e-14) break;
            x += t * step;
        }
    }

    // Active-set polish: Newton on the KKT system of min ||x||^2 with
    // the near-active constraints held at equality, nailing the optimum
    // to machine precision.
    std::vector<int> active;
    for (std::size_t i = 0; i < constraints.size(); ++i)
        if (constraints[i].value(x) > -1e-5 * std::max(1.0, x.squaredNorm()))
            active.push_back(static_cast<int>(i));
    if (!active.empty()) {
        const int na = static_cast<int>(active.size());
        Eigen::VectorXd lambda(na);
        for (int i = 0; i < na; ++i)
            lambda(i) = 1e-12 / (-constraints[active[i]].value(x));
        const auto kkt = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& lam) {
            Eigen::VectorXd f(dim + na);
            Eigen::VectorXd stat = 2.0 * p;
            for (int i = 0; i < na; ++i)
                stat += lam(i) * constraints[active[i]].gradient(p);
            f.head(dim) = stat;
            for (int i = 0; i < na; ++i) f(dim + i) = constraints[active[i]].value(p);
            return f;
        };
        Eigen::VectorXd best_x = x;
        for (int newton = 0; newton < 30; ++newton) {
            const Eigen::VectorXd f0 = kkt(x, lambda);
            if (f0.norm() < 1e-13 * std::max(1.0, x.squaredNorm())) break;
            Eigen::MatrixXd jac(dim + na, dim + na);
            const double h = 1e-7 * std::max(1.0, x.norm());
            for (int j = 0; j < dim + na; ++j) {
                Eigen::VectorXd xp = x, lp = lambda;
                if (j < dim)
                    xp(j) += h;
                else
                    lp(j - dim) += h;
                jac.col(j) = (kkt(xp, lp) - f0) / h;
            }
            const Eigen::VectorXd delta = jac.fullPivLu().solve(-f0);
            if (!delta.allFinite()) break;
            x += delta.head(dim);
            lambda += delta.tail(na);
            if (lambda.minCoeff() < 0.0) {  // wrong active set; keep barrier point
                x = best_x;
                break;
            }
        }
        // The polished point sits on the boundary by construction;
        // reject it only on a real violation.
        double worst = 0.0;
        for (const auto& c : constraints) worst = std::max(worst, c.value(x));
        if (worst > 1e-9 * std::max(1.0, x.squaredNorm())) x = best_x;
    }
    return x;
}

// Complex inner product h^H w recomputed with scalar arithmetic only.
inline std::complex<double> scalar_inner(const Eigen::VectorXcd& h,
                                         const Eigen::VectorXcd& w) {
    double re = 0.0, im = 0.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        const double hr = h(i).real(), hi = h(i).imag();
        const double wr = w(i).real(), wi = w(i).imag();
        // conj(h_i) * w_i
        re += hr * wr + hi * wi;
        im += hr * wi - hi * wr;
    }
    return {re, im};
}

inline double scalar_gain(const Eigen::VectorXcd& h, const Eigen::VectorXcd& w) {
    const std::complex<double> inner = scalar_inner(h, w);
    return inner.real() * inner.real() + inner.imag() * inner.imag();
}

// Direct summation of the SINR quotient.
inline double scalar_sinr(const std::vector<Eigen::VectorXcd>& channels,
                          const std::vector<Eigen::VectorXcd>& beams, double noise_variance,
                          int k, int l) {
    const double signal = scalar_gain(channels[l], beams[k]);
    double interference = 0.0;
    for (std::size_t m = k + 1; m < beams.size(); ++m)
        interference += scalar_gain(channels[l], beams[m]);
    return signal / (interference + noise_variance);
}

// Realified view of a complex beamformer stack: (Re w_0, Im w_0, Re w_1, ...).
inline Eigen::VectorXd pack(const std::vector<Eigen::VectorXcd>& beams) {
    const int m = static_cast<int>(beams.front().size());
    Eigen::VectorXd x(2 * m * static_cast<int>(beams.size()));
    for (std::size_t k = 0; k < beams.size(); ++k)
        for (int i = 0; i < m; ++i) {
            x(2 * m * k + i) = beams[k](i).real();
            x(2 * m * k + m + i) = beams[k](i).imag();
        }
    return x;
}

inline std::vector<Eigen::VectorXcd> unpack(const Eigen::VectorXd& x, int users, int m) {
    std::vector<Eigen::VectorXcd> beams(users, Eigen::VectorXcd(m));
    for (int k = 0; k < users; ++k)
        for (int i = 0; i < m; ++i)
            beams[k](i) = {x(2 * m * k + i), x(2 * m * k + m + i)};
    return beams;
}

// |h^H w_k|^2 as a function of the packed variables, with gradient.
inline Constraint gain_term(const Eigen::VectorXcd& h, int k, int m, double coeff) {
    return {
        [h, k, m, coeff](const Eigen::VectorXd& x) {
            const auto beams = unpack(x, static_cast<int>(x.size()) / (2 * m), m);
            return coeff * scalar_gain(h, beams[k]);
        },
        [h, k, m, coeff](const Eigen::VectorXd& x) {
            const auto beams = unpack(x, static_cast<int>(x.size()) / (2 * m), m);
            // d|h^H w|^2 / dw = 2 h h^H w in complex coordinates
            const Eigen::VectorXcd g = 2.0 * coeff * h * scalar_inner(h, beams[k]);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
            for (int i = 0; i < m; ++i) {
                grad(2 * m * k + i) = g(i).real();
                grad(2 * m * k + m + i) = g(i).imag();
            }
            return grad;
        },
    };
}

// Sum of constraints (affine combination helper).
inline Constraint combine(std::vector<Constraint> parts, double constant) {
    return {
        [parts, constant](const Eigen::VectorXd& x) {
            double v = constant;
            for (const auto& p : parts) v += p.value(x);
            return v;
        },
        [parts](const Eigen::VectorXd& x) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
            for (const auto& p : parts) g += p.gradient(x);
            return g;
        },
    };
}

// Affine term a + l' x restricted to user k's block, encoded from the
// complex gradient of the Taylor expansion (re-derived in test code).
inline Constraint affine_term(const Eigen::VectorXcd& complex_gradient, double constant,
                              int k, int m, double coeff) {
    return {
        [complex_gradient, constant, k, m, coeff](const Eigen::VectorXd& x) {
            const auto beams = unpack(x, static_cast<int>(x.size()) / (2 * m), m);
            double v = constant;
            for (int i = 0; i < m; ++i) {
                v += 2.0 * complex_gradient(i).real() * beams[k](i).real();
                v += 2.0 * complex_gradient(i).imag() * beams[k](i).imag();
            }
            return coeff * v;
        },
        [complex_gradient, k, m, coeff](const Eigen::VectorXd& x) {
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
            for (int i = 0; i < m; ++i) {
                grad(2 * m * k + i) = coeff * 2.0 * complex_gradient(i).real();
                grad(2 * m * k + m + i) = coeff * 2.0 * complex_gradient(i).imag();
            }
            return grad;
        },
    };
}

}  // namespace oracle
