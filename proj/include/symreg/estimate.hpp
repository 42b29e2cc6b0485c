#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "symreg/design.hpp"
#include "symreg/distribution.hpp"

namespace symreg {

/// Raised when Fisher scoring fails to converge; message carries the
/// iteration trace tail.
class convergence_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A regression problem: response, hypothesis-partitioned design, error law,
/// log-scale flag. The partition is shared (fits reuse its factorizations).
struct ModelSpec {
    std::shared_ptr<const DesignPartition> partition;
    Eigen::VectorXd y;
    FamilySpec family;
    bool log_scale = false;  // y is log(t) of a positive response t
};

struct FitOptions {
    double rel_loglik_tol = 1e-10;
    double grad_tol = 1e-6;
    int max_iterations = 200;
    int max_halvings = 40;
};

struct FitResult {
    Eigen::VectorXd beta;        // p-vector (restricted: beta10 spliced in)
    double phi = 0.0;
    double loglik = 0.0;
    Eigen::VectorXd weights;     // w_l at the optimum
    Eigen::VectorXd residuals;   // y - X beta
    Eigen::VectorXd standardized;  // residuals / phi
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;     // residuals collapsed; phi at floor
    bool restricted = false;
};

/// Log-likelihood of Eq.-(3) form: -n log(phi) + sum g((y_l - x_l'beta)/phi).
double loglik(const ModelSpec& spec, const Eigen::VectorXd& beta, double phi);

/// Unrestricted maximum likelihood fit by Fisher scoring with step halving.
FitResult fit(const ModelSpec& spec, const FitOptions& options = {});

/// Fit under H0: the tested block is fixed at beta10; (beta2, phi) estimated
/// with the offset X1 beta10 absorbed into the response. Only phi is
/// estimated when q = p.
FitResult fit_restricted(const ModelSpec& spec, const FitOptions& options = {});

/// Positive-response adapter: fits the symmetric model to log(t). Throws
/// std::domain_error listing offending rows when t has nonpositive entries.
/// The returned fit is the log-scale symmetric fit, bit for bit.
FitResult fit_logsymmetric(const DesignPartition& partition,
                           const Eigen::VectorXd& t, const FamilySpec& family,
                           const FitOptions& options = {});

/// Fitted medians of the log-symmetric model: exp(x_l' beta).
Eigen::VectorXd fitted_medians(const DesignPartition& partition,
                               const FitResult& fit);

/// Corrected AIC: -2 loglik + 2k + 2k(k+1)/(n-k-1).
double aicc(double loglik_value, int n, int n_params);

/// Asymptotic standard errors from the block-diagonal Fisher information.
struct StandardErrors {
    Eigen::VectorXd beta_se;
    double phi_se = 0.0;
};
StandardErrors standard_errors(const ModelSpec& spec, const FitResult& fit);

}  // namespace symreg
