#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace symreg {

/// Raised when the design (or a sub-block) is numerically rank deficient.
class singular_design_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Trace quantities of the hat matrices Z and Z2 that drive all the
/// correction coefficients.
struct RhoSet {
    double rho_zz = 0.0;
    double rho_z2z2 = 0.0;
    double rho_zz2 = 0.0;
    Eigen::VectorXd z_diag;    // diag of X (X'X)^-1 X'
    Eigen::VectorXd z2_diag;   // diag of X2 (X2'X2)^-1 X2', zero when q = p
};

/// Hypothesis partition of a full-rank design: the tested coefficients are
/// identified by column index and internally permuted to the leading block
/// (results are reported in the original column order). Holds the QR
/// machinery reused by every fit on the same X.
class DesignPartition {
public:
    /// X: n x p, full column rank, n > p. tested: distinct column indices
    /// (q of them, 1 <= q <= p). beta10: the q tested values, aligned with
    /// `tested`.
    DesignPartition(Eigen::MatrixXd X, std::vector<int> tested,
                    Eigen::VectorXd beta10);

    int n() const { return static_cast<int>(x_.rows()); }
    int p() const { return static_cast<int>(x_.cols()); }
    int q() const { return static_cast<int>(tested_.size()); }

    const Eigen::MatrixXd& X() const { return x_; }                // original order
    const std::vector<int>& tested_columns() const { return tested_; }
    const Eigen::VectorXd& beta10() const { return beta10_; }

    /// X2 block (untested columns, original relative order). Empty when q = p.
    const Eigen::MatrixXd& X2() const { return x2_; }
    /// X1 block (tested columns).
    const Eigen::MatrixXd& X1() const { return x1_; }

    /// Solve (X'X) d = v through the cached QR factor.
    Eigen::VectorXd solve_gram(const Eigen::VectorXd& v) const;
    /// Solve (X2'X2) d = v. q = p is an error.
    Eigen::VectorXd solve_gram_x2(const Eigen::VectorXd& v) const;
    /// Least-squares coefficients for X (OLS start values).
    Eigen::VectorXd least_squares(const Eigen::VectorXd& y) const;
    /// Least-squares coefficients for X2.
    Eigen::VectorXd least_squares_x2(const Eigen::VectorXd& y) const;

    /// R'R with R = X1 - X2 (X2'X2)^-1 X2' X1; reduces to X1'X1 = X'X when
    /// q = p. Symmetric positive definite for full-rank designs.
    const Eigen::MatrixXd& rtr() const { return rtr_; }
    /// Solve (R'R) d = v.
    Eigen::VectorXd solve_rtr(const Eigen::VectorXd& v) const;

    const RhoSet& rho() const { return rho_; }

    /// Extracts the tested sub-vector of a full coefficient vector (original
    /// column order).
    Eigen::VectorXd tested_block(const Eigen::VectorXd& beta_full) const;

    /// true for the columns in the tested set.
    const std::vector<bool>& tested_mask() const { return tested_mask_; }

private:
    Eigen::MatrixXd x_;
    std::vector<int> tested_;
    std::vector<bool> tested_mask_;
    Eigen::VectorXd beta10_;
    Eigen::MatrixXd x1_, x2_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_x_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_x2_;
    Eigen::MatrixXd thin_q_;     // n x p orthonormal basis of col(X)
    Eigen::MatrixXd thin_q2_;    // n x (p-q) orthonormal basis of col(X2)
    Eigen::MatrixXd rtr_;
    Eigen::LLT<Eigen::MatrixXd> rtr_llt_;
    RhoSet rho_;
};

/// RhoSet of a partition (already cached inside; exposed as the module-level
/// operation).
RhoSet projections(const DesignPartition& partition);

/// R'R for the partition.
Eigen::MatrixXd r_matrix(const DesignPartition& partition);

}  // namespace symreg
