#pragma once

namespace symreg {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Upper-tail probability of a chi-squared variable with df degrees of
/// freedom: P(X > x).
double chisq_upper_tail(double x, double df);

/// Quantile of the chi-squared distribution: smallest x with
/// P(X <= x) >= prob. prob in (0, 1).
double chisq_quantile(double prob, double df);

}  // namespace symreg
