#include "symreg/design.hpp"

#include <algorithm>
#include <string>

namespace symreg {

namespace {

// Orthonormal basis of col(M) via thin QR; throws naming the first column
// whose contribution falls below the rank threshold.
Eigen::MatrixXd thin_orthonormal(const Eigen::MatrixXd& m, const char* what) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double threshold = 1e-10 * sv(0);
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) < threshold)
            throw singular_design_error(std::string(what) +
                                        ": rank deficient (singular value ratio " +
                                        std::to_string(sv(i) / sv(0)) + " at index " +
                                        std::to_string(i) + ")");
    }
    return svd.matrixU();
}

}  // namespace

DesignPartition::DesignPartition(Eigen::MatrixXd X, std::vector<int> tested,
                                 Eigen::VectorXd beta10)
    : x_(std::move(X)), tested_(std::move(tested)), beta10_(std::move(beta10)) {
    const int n = static_cast<int>(x_.rows());
    const int p = static_cast<int>(x_.cols());
    const int q = static_cast<int>(tested_.size());
    if (q < 1 || q > p) throw std::invalid_argument("partition: need 1 <= q <= p");
    if (n <= p) throw std::invalid_argument("partition: need n > p");
    if (beta10_.size() != q)
        throw std::invalid_argument("partition: beta10 size must equal q");

    tested_mask_.assign(p, false);
    for (int idx : tested_) {
        if (idx < 0 || idx >= p)
            throw std::invalid_argument("partition: tested column index out of range");
        if (tested_mask_[idx])
            throw std::invalid_argument("partition: duplicate tested column");
        tested_mask_[idx] = true;
    }

    // X1 columns follow the order of `tested` so beta10 stays aligned.
    x1_.resize(n, q);
    x2_.resize(n, p - q);
    for (int i = 0; i < q; ++i) x1_.col(i) = x_.col(tested_[i]);
    for (int j = 0, j2 = 0; j < p; ++j)
        if (!tested_mask_[j]) x2_.col(j2++) = x_.col(j);

    // Rank check on the full design; identify the offending column by
    // projecting it on the span of the previous ones.
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(x_);
        pivoted.setThreshold(1e-10);
        if (pivoted.rank() < p) {
            const int bad = pivoted.colsPermutation().indices()(pivoted.rank());
            throw singular_design_error("design matrix is rank deficient; column " +
                                        std::to_string(bad) + " lies in the span of the others");
        }
    }

    qr_x_.compute(x_);
    thin_q_ = thin_orthonormal(x_, "design");
    rho_.z_diag = thin_q_.array().square().rowwise().sum();
    if (q < p) {
        qr_x2_.compute(x2_);
        thin_q2_ = thin_orthonormal(x2_, "untested block");
        rho_.z2_diag = thin_q2_.array().square().rowwise().sum();
    } else {
        rho_.z2_diag = Eigen::VectorXd::Zero(n);
    }
    const double nn = static_cast<double>(n);
    rho_.rho_zz = nn * rho_.z_diag.squaredNorm();
    rho_.rho_z2z2 = nn * rho_.z2_diag.squaredNorm();
    rho_.rho_zz2 = nn * rho_.z_diag.dot(rho_.z2_diag);

    // R'R = X1'(I - Z2)X1 computed from the orthonormal basis of col(X2).
    if (q < p) {
        Eigen::MatrixXd m1 = x1_ - thin_q2_ * (thin_q2_.transpose() * x1_);
        rtr_ = m1.transpose() * m1;
    } else {
        rtr_ = x_.transpose() * x_;
    }
    rtr_llt_.compute(rtr_);
    if (rtr_llt_.info() != Eigen::Success)
        throw singular_design_error("R'R is not positive definite");
}

Eigen::VectorXd DesignPartition::solve_gram(const Eigen::VectorXd& v) const {
    // X = QR => X'X = R'R; two triangular solves.
    const auto r = qr_x_.matrixQR().topRows(p()).triangularView<Eigen::Upper>();
    return r.solve(r.transpose().solve(v));
}

Eigen::VectorXd DesignPartition::solve_gram_x2(const Eigen::VectorXd& v) const {
    const int p2 = p() - q();
    if (p2 == 0) throw std::logic_error("solve_gram_x2: empty X2");
    const auto r = qr_x2_.matrixQR().topRows(p2).triangularView<Eigen::Upper>();
    return r.solve(r.transpose().solve(v));
}

Eigen::VectorXd DesignPartition::least_squares(const Eigen::VectorXd& y) const {
    return qr_x_.solve(y);
}

Eigen::VectorXd DesignPartition::least_squares_x2(const Eigen::VectorXd& y) const {
    if (p() == q()) throw std::logic_error("least_squares_x2: empty X2");
    return qr_x2_.solve(y);
}

Eigen::VectorXd DesignPartition::solve_rtr(const Eigen::VectorXd& v) const {
    return rtr_llt_.solve(v);
}

Eigen::VectorXd DesignPartition::tested_block(const Eigen::VectorXd& beta_full) const {
    Eigen::VectorXd out(q());
    for (int i = 0; i < q(); ++i) out(i) = beta_full(tested_[i]);
    return out;
}

RhoSet projections(const DesignPartition& partition) { return partition.rho(); }

Eigen::MatrixXd r_matrix(const DesignPartition& partition) { return partition.rtr(); }

}  // namespace symreg
