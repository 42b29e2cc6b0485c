#pragma once

#include <functional>

namespace symreg {

/// Outcome of an adaptive quadrature run. `converged` is false when the
/// error estimate could not be pushed below the requested tolerance within
/// the evaluation budget (divergent or near-divergent integrands).
struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    int evaluations = 0;

    QuadResult& operator+=(const QuadResult& other) {
        value += other.value;
        error += other.error;
        converged = converged && other.converged;
        evaluations += other.evaluations;
        return *this;
    }
};

/// Globally adaptive Gauss-Kronrod (G7,K15) integration of f on [a, b].
/// Worst-interval bisection until the summed error estimate drops below
/// abs_tol or the interval budget is exhausted.
QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              double a, double b, double abs_tol,
                              int max_intervals = 4000);

/// Integral of f over [0, inf). Splits at 1; the (0,1] piece uses the
/// power stretch z = s^16 (tames integrable endpoint singularities at 0),
/// the [1, inf) piece uses z = tan(theta) (bounded images of algebraic
/// tails). f must evaluate safely for arbitrarily large finite z.
QuadResult integrate_half_line(const std::function<double(double)>& f,
                               double abs_tol);

/// Integral of f over (-inf, inf) for f of known parity: even integrands
/// are folded onto [0, inf), odd ones are exactly zero.
QuadResult integrate_real_line_even(const std::function<double(double)>& f,
                                    double abs_tol);

}  // namespace symreg
