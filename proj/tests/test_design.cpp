#include <doctest.h>

#include <random>

#include "symreg/design.hpp"

using namespace symreg;

namespace {

Eigen::MatrixXd random_design(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    for (int j = 1; j < p; ++j)
        for (int l = 0; l < n; ++l) x(l, j) = unif(rng);
    return x;
}

std::vector<int> last_columns(int p, int q) {
    std::vector<int> idx(q);
    for (int i = 0; i < q; ++i) idx[i] = p - q + i;
    return idx;
}

}  // namespace

TEST_CASE("projection diagonals: intercept-only and identity designs") {
    {
        Eigen::MatrixXd x(2, 1);
        x << 1, 1;
        DesignPartition part(x, {0}, Eigen::VectorXd::Zero(1));
        const RhoSet rho = projections(part);
        CHECK(rho.z_diag(0) == doctest::Approx(0.5));
        CHECK(rho.z_diag(1) == doctest::Approx(0.5));
        CHECK(rho.rho_zz == doctest::Approx(1.0));
        CHECK(rho.rho_z2z2 == 0.0);
        CHECK(rho.rho_zz2 == 0.0);
    }
    {
        // n = p is rejected; embed the identity in a taller design instead.
        Eigen::MatrixXd x(3, 2);
        x << 1, 0, 0, 1, 0, 0;
        DesignPartition part(x, {0, 1}, Eigen::VectorXd::Zero(2));
        const RhoSet rho = projections(part);
        CHECK(rho.z_diag(0) == doctest::Approx(1.0));
        CHECK(rho.z_diag(1) == doctest::Approx(1.0));
        CHECK(rho.z_diag(2) == doctest::Approx(0.0));
        CHECK(rho.rho_zz == doctest::Approx(3.0 * 2.0));
    }
}

TEST_CASE("projections match a dense brute-force oracle") {
    const Eigen::MatrixXd x = random_design(20, 4, 99);
    DesignPartition part(x, last_columns(4, 3), Eigen::VectorXd::Zero(3));
    const RhoSet rho = projections(part);

    // Dense oracle: explicit hat matrices.
    const Eigen::MatrixXd z = x * (x.transpose() * x).inverse() * x.transpose();
    Eigen::MatrixXd x2 = x.leftCols(1);
    const Eigen::MatrixXd z2 = x2 * (x2.transpose() * x2).inverse() * x2.transpose();

    CHECK((z * z - z).cwiseAbs().maxCoeff() < 1e-10);       // idempotent
    CHECK(std::abs(z.trace() - 4.0) < 1e-10);
    CHECK(std::abs(z2.trace() - 1.0) < 1e-10);
    for (int l = 0; l < 20; ++l) {
        CHECK(rho.z_diag(l) == doctest::Approx(z(l, l)).epsilon(1e-10));
        CHECK(rho.z2_diag(l) == doctest::Approx(z2(l, l)).epsilon(1e-10));
        CHECK(rho.z_diag(l) >= rho.z2_diag(l) - 1e-12);
        CHECK(rho.z2_diag(l) >= -1e-12);
    }
    double zz = 0.0, z2z2 = 0.0, zz2 = 0.0;
    for (int l = 0; l < 20; ++l) {
        zz += z(l, l) * z(l, l);
        z2z2 += z2(l, l) * z2(l, l);
        zz2 += z(l, l) * z2(l, l);
    }
    CHECK(rho.rho_zz == doctest::Approx(20.0 * zz).epsilon(1e-10));
    CHECK(rho.rho_z2z2 == doctest::Approx(20.0 * z2z2).epsilon(1e-10));
    CHECK(rho.rho_zz2 == doctest::Approx(20.0 * zz2).epsilon(1e-10));
    CHECK(std::abs(rho.z_diag.sum() - 4.0) < 1e-10);
    CHECK(std::abs(rho.z2_diag.sum() - 1.0) < 1e-10);
}

TEST_CASE("rho quantities depend only on column spaces and scale") {
    const Eigen::MatrixXd x = random_design(25, 5, 7);
    const auto tested = last_columns(5, 2);
    DesignPartition base(x, tested, Eigen::VectorXd::Zero(2));

    SUBCASE("invertible reparameterization of X2") {
        Eigen::MatrixXd t(3, 3);
        t << 2, 1, 0, 0, 1, -1, 0.5, 0, 3;
        Eigen::MatrixXd x_re = x;
        x_re.leftCols(3) = x.leftCols(3) * t;
        DesignPartition re(x_re, tested, Eigen::VectorXd::Zero(2));
        CHECK(re.rho().rho_zz == doctest::Approx(base.rho().rho_zz).epsilon(1e-10));
        CHECK(re.rho().rho_z2z2 == doctest::Approx(base.rho().rho_z2z2).epsilon(1e-10));
        CHECK(re.rho().rho_zz2 == doctest::Approx(base.rho().rho_zz2).epsilon(1e-10));
    }
    SUBCASE("scaling X leaves Z unchanged") {
        DesignPartition scaled(3.7 * x, tested, Eigen::VectorXd::Zero(2));
        CHECK(scaled.rho().rho_zz == doctest::Approx(base.rho().rho_zz).epsilon(1e-10));
        CHECK(scaled.rho().rho_zz2 == doctest::Approx(base.rho().rho_zz2).epsilon(1e-10));
        for (int l = 0; l < 25; ++l)
            CHECK(scaled.rho().z_diag(l) == doctest::Approx(base.rho().z_diag(l)).epsilon(1e-10));
    }
}

TEST_CASE("R matrix") {
    SUBCASE("q = p gives X'X") {
        const Eigen::MatrixXd x = random_design(15, 3, 5);
        DesignPartition part(x, {0, 1, 2}, Eigen::VectorXd::Zero(3));
        CHECK((r_matrix(part) - x.transpose() * x).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(part.rho().z2_diag.cwiseAbs().maxCoeff() == 0.0);  // Z2 = 0 when q = p
    }
    SUBCASE("single ones column") {
        Eigen::MatrixXd x(2, 1);
        x << 1, 1;
        DesignPartition part(x, {0}, Eigen::VectorXd::Zero(1));
        CHECK(r_matrix(part)(0, 0) == doctest::Approx(2.0));
    }
    SUBCASE("orthogonal blocks: projection removes nothing") {
        Eigen::MatrixXd x(6, 2);
        x << 1, 1, 1, -1, 1, 1, 1, -1, 1, 1, 1, -1;
        // col1 sums against col0: 1-1+1-1+1-1 = 0, orthogonal.
        DesignPartition part(x, {1}, Eigen::VectorXd::Zero(1));
        CHECK(r_matrix(part)(0, 0) == doctest::Approx(x.col(1).squaredNorm()).epsilon(1e-12));
    }
    SUBCASE("positive definite on random designs") {
        const Eigen::MatrixXd x = random_design(30, 6, 11);
        DesignPartition part(x, last_columns(6, 3), Eigen::VectorXd::Zero(3));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r_matrix(part));
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("rank deficiency is reported with the offending column") {
    Eigen::MatrixXd x = random_design(12, 4, 3);
    x.col(3) = 2.0 * x.col(1);  // exact collinearity
    bool threw = false;
    try {
        DesignPartition part(x, {3}, Eigen::VectorXd::Zero(1));
    } catch (const singular_design_error& e) {
        threw = true;
        CHECK(std::string(e.what()).find("column") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("partition validation") {
    const Eigen::MatrixXd x = random_design(10, 3, 1);
    CHECK_THROWS_AS(DesignPartition(x, {}, Eigen::VectorXd()), std::invalid_argument);
    CHECK_THROWS_AS(DesignPartition(x, {0, 0}, Eigen::VectorXd::Zero(2)), std::invalid_argument);
    CHECK_THROWS_AS(DesignPartition(x, {5}, Eigen::VectorXd::Zero(1)), std::invalid_argument);
    CHECK_THROWS_AS(DesignPartition(x, {0}, Eigen::VectorXd::Zero(2)), std::invalid_argument);
    CHECK_THROWS_AS(DesignPartition(random_design(3, 3, 2), {0}, Eigen::VectorXd::Zero(1)),
                    std::invalid_argument);
    // Tested columns listed out of order stay aligned with beta10.
    Eigen::VectorXd b10(2);
    b10 << 7.0, -3.0;
    DesignPartition part(x, {2, 0}, b10);
    CHECK(part.X1().col(0) == x.col(2));
    CHECK(part.X1().col(1) == x.col(0));
    Eigen::VectorXd beta(3);
    beta << 10, 20, 30;
    const Eigen::VectorXd blk = part.tested_block(beta);
    CHECK(blk(0) == 30);
    CHECK(blk(1) == 10);
}
