#include <doctest.h>

#include <cmath>
#include <random>

#include "symreg/estimate.hpp"

using namespace symreg;

namespace {

std::shared_ptr<DesignPartition> make_partition(Eigen::MatrixXd x, std::vector<int> tested,
                                                Eigen::VectorXd beta10) {
    return std::make_shared<DesignPartition>(std::move(x), std::move(tested), std::move(beta10));
}

ModelSpec make_spec(std::shared_ptr<const DesignPartition> part, Eigen::VectorXd y,
                    FamilySpec family) {
    ModelSpec spec;
    spec.partition = std::move(part);
    spec.y = std::move(y);
    spec.family = family;
    return spec;
}

Eigen::MatrixXd random_design(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    for (int j = 1; j < p; ++j)
        for (int l = 0; l < n; ++l) x(l, j) = unif(rng);
    return x;
}

const Eigen::MatrixXd kTwoOnes = (Eigen::MatrixXd(2, 1) << 1, 1).finished();

}  // namespace

TEST_CASE("log-likelihood worked examples") {
    auto part = make_partition(kTwoOnes, {0}, Eigen::VectorXd::Zero(1));
    Eigen::VectorXd y(2);
    y << 0, 2;

    SUBCASE("normal hand value") {
        const ModelSpec spec = make_spec(part, y, FamilySpec::normal());
        const double expected = -1.0 - std::log(2.0 * M_PI);
        CHECK(loglik(spec, Eigen::VectorXd::Ones(1), 1.0) ==
              doctest::Approx(expected).epsilon(1e-12));
        CHECK_THROWS_AS(loglik(spec, Eigen::VectorXd::Ones(1), 0.0), std::domain_error);
        CHECK_THROWS_AS(loglik(spec, Eigen::VectorXd::Ones(1), -1.0), std::domain_error);
    }
    SUBCASE("scaling identity: loglik(c beta, c phi; c y) = loglik - n log c") {
        for (const FamilySpec& family :
             {FamilySpec::normal(), FamilySpec::student_t(4.0), FamilySpec::logistic2()}) {
            const ModelSpec spec = make_spec(part, y, family);
            const ModelSpec scaled = make_spec(part, 5.0 * y, family);
            Eigen::VectorXd beta = Eigen::VectorXd::Ones(1) * 0.7;
            const double base = loglik(spec, beta, 1.3);
            CHECK(loglik(scaled, 5.0 * beta, 5.0 * 1.3) ==
                  doctest::Approx(base - 2.0 * std::log(5.0)).epsilon(1e-12));
        }
    }
    SUBCASE("cauchy at an exact fit") {
        Eigen::VectorXd mu = Eigen::VectorXd::Constant(2, 2.0);
        const ModelSpec spec = make_spec(part, mu, FamilySpec::cauchy());
        const double phi = 0.4;
        CHECK(loglik(spec, Eigen::VectorXd::Constant(1, 2.0), phi) ==
              doctest::Approx(-2.0 * std::log(phi) - 2.0 * std::log(M_PI)).epsilon(1e-12));
    }
}

TEST_CASE("normal-family fit equals the OLS closed form on 100 instances") {
    std::mt19937_64 rng(2025);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 12 + static_cast<int>(rng() % 20);
        const int p = 2 + static_cast<int>(rng() % 3);
        Eigen::MatrixXd x = random_design(n, p, rng());
        Eigen::VectorXd y(n);
        for (int l = 0; l < n; ++l) y(l) = 1.0 + 0.5 * x(l, p - 1) + gauss(rng);

        auto part = make_partition(x, {p - 1}, Eigen::VectorXd::Zero(1));
        const ModelSpec spec = make_spec(part, y, FamilySpec::normal());
        const FitResult res = fit(spec);
        REQUIRE(res.converged);

        const Eigen::VectorXd ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
        const double rss = (y - x * ols).squaredNorm();
        CHECK((res.beta - ols).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(res.phi * res.phi == doctest::Approx(rss / n).epsilon(1e-10));
        CHECK(res.loglik == doctest::Approx(loglik(spec, res.beta, res.phi)).epsilon(1e-12));
    }
}

TEST_CASE("heavier families: score vanishes at the optimum, phi fixed point holds") {
    for (const FamilySpec& family :
         {FamilySpec::student_t(4.0), FamilySpec::logistic1(), FamilySpec::logistic2(),
          FamilySpec::cauchy(), FamilySpec::power_exp(-0.4)}) {
        CAPTURE(family.name());
        const int n = 40, p = 3;
        Eigen::MatrixXd x = random_design(n, p, 77);
        const DistributionKernel k = kernel(family);
        RngStream noise = substream(4, 4);
        Eigen::VectorXd y(n);
        for (int l = 0; l < n; ++l)
            y(l) = 1.0 + x(l, 1) - 0.5 * x(l, 2) + 2.0 * draw(k, noise);

        auto part = make_partition(x, {2}, Eigen::VectorXd::Zero(1));
        const ModelSpec spec = make_spec(part, y, family);
        const FitResult res = fit(spec);
        REQUIRE(res.converged);

        const Eigen::VectorXd we = res.weights.cwiseProduct(res.residuals);
        const Eigen::VectorXd u_beta = x.transpose() * we / (res.phi * res.phi);
        const double u_phi = (we.dot(res.residuals) / (res.phi * res.phi) - n) / res.phi;
        CHECK(u_beta.cwiseAbs().maxCoeff() < 1e-6);
        CHECK(std::abs(u_phi) < 1e-6);
        CHECK(res.phi * res.phi == doctest::Approx(we.dot(res.residuals) / n).epsilon(1e-8));
    }
}

TEST_CASE("student-t consistency at large n") {
    const int n = 10000, p = 3;
    Eigen::MatrixXd x = random_design(n, p, 31);
    const FamilySpec family = FamilySpec::student_t(4.0);
    const DistributionKernel k = kernel(family);
    RngStream noise = substream(5150, 0);
    Eigen::VectorXd beta_true(p);
    beta_true << 1.0, -2.0, 0.5;
    Eigen::VectorXd y = x * beta_true;
    const double phi = 1.5;
    for (int l = 0; l < n; ++l) y(l) += phi * draw(k, noise);

    auto part = make_partition(x, {p - 1}, Eigen::VectorXd::Zero(1));
    const FitResult res = fit(make_spec(part, y, family));
    REQUIRE(res.converged);
    // Var(beta_hat) ~ phi^2 / delta_20000 (X'X)^-1; allow 3 MC sigmas.
    const Eigen::MatrixXd cov = phi * phi / k.delta_20000() * (x.transpose() * x).inverse();
    for (int j = 0; j < p; ++j)
        CHECK(std::abs(res.beta(j) - beta_true(j)) < 3.0 * std::sqrt(cov(j, j)));
}

TEST_CASE("zero-noise data degenerates gracefully") {
    Eigen::MatrixXd x = random_design(10, 2, 9);
    Eigen::VectorXd y = x * Eigen::Vector2d(2.0, -1.0);
    auto part = make_partition(x, {1}, Eigen::VectorXd::Zero(1));
    const FitResult res = fit(make_spec(part, y, FamilySpec::normal()));
    CHECK(res.degenerate);
    CHECK(res.phi <= 1e-12);
    CHECK((res.beta - Eigen::Vector2d(2.0, -1.0)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("restricted fits") {
    SUBCASE("normal q = p = 1 closed form") {
        auto part = make_partition(kTwoOnes, {0}, Eigen::VectorXd::Zero(1));
        Eigen::VectorXd y(2);
        y << 0, 2;
        const FitResult res = fit_restricted(make_spec(part, y, FamilySpec::normal()));
        REQUIRE(res.converged);
        CHECK(res.beta(0) == 0.0);
        CHECK(res.phi * res.phi == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(res.restricted);
    }
    SUBCASE("null at the unrestricted optimum recovers its likelihood") {
        Eigen::MatrixXd x = random_design(25, 3, 21);
        RngStream noise = substream(88, 1);
        const DistributionKernel k = kernel(FamilySpec::student_t(4.0));
        Eigen::VectorXd y(25);
        for (int l = 0; l < 25; ++l) y(l) = 1.0 + x(l, 1) + draw(k, noise);

        auto free_part = make_partition(x, {2}, Eigen::VectorXd::Zero(1));
        const FitResult unres = fit(make_spec(free_part, y, FamilySpec::student_t(4.0)));
        auto pinned = make_partition(x, {2}, unres.beta.tail(1));
        const FitResult res = fit_restricted(make_spec(pinned, y, FamilySpec::student_t(4.0)));
        CHECK(res.loglik == doctest::Approx(unres.loglik).epsilon(1e-8));
        CHECK(std::abs(2.0 * (unres.loglik - res.loglik)) < 1e-6);
    }
    SUBCASE("q = p: only phi estimated") {
        Eigen::MatrixXd x = random_design(9, 2, 2);
        Eigen::VectorXd beta10(2);
        beta10 << 0.3, 1.4;
        Eigen::VectorXd y(9);
        RngStream noise = substream(3, 3);
        const DistributionKernel k = kernel(FamilySpec::normal());
        for (int l = 0; l < 9; ++l) y(l) = 0.1 + draw(k, noise);
        auto part = make_partition(x, {0, 1}, beta10);
        const FitResult res = fit_restricted(make_spec(part, y, FamilySpec::normal()));
        REQUIRE(res.converged);
        CHECK(res.beta(0) == 0.3);
        CHECK(res.beta(1) == 1.4);
        const double rss = (y - x * beta10).squaredNorm();
        CHECK(res.phi * res.phi == doctest::Approx(rss / 9.0).epsilon(1e-10));
    }
}

TEST_CASE("restricted optimum: beta2 and phi score components vanish") {
    Eigen::MatrixXd x = random_design(30, 4, 47);
    RngStream noise = substream(12, 12);
    const DistributionKernel k = kernel(FamilySpec::logistic2());
    Eigen::VectorXd y(30);
    for (int l = 0; l < 30; ++l) y(l) = 1.0 + 0.5 * x(l, 1) + 2.0 * draw(k, noise);
    Eigen::VectorXd beta10(2);
    beta10 << 0.2, -0.3;
    auto part = make_partition(x, {2, 3}, beta10);
    const FitResult res = fit_restricted(make_spec(part, y, FamilySpec::logistic2()));
    REQUIRE(res.converged);
    CHECK(res.beta(2) == 0.2);
    CHECK(res.beta(3) == -0.3);
    const Eigen::VectorXd we = res.weights.cwiseProduct(res.residuals);
    const Eigen::VectorXd u_beta2 = part->X2().transpose() * we / (res.phi * res.phi);
    const double u_phi = (we.dot(res.residuals) / (res.phi * res.phi) - 30.0) / res.phi;
    CHECK(u_beta2.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(u_phi) < 1e-6);
}

TEST_CASE("log-symmetric adapter") {
    SUBCASE("t = exp(y) bit-matches the symmetric fit on log t") {
        Eigen::MatrixXd x = random_design(18, 3, 6);
        RngStream noise = substream(14, 2);
        const DistributionKernel k = kernel(FamilySpec::logistic2());
        Eigen::VectorXd y(18);
        for (int l = 0; l < 18; ++l) y(l) = 0.5 + 0.25 * x(l, 1) + 0.5 * draw(k, noise);
        const Eigen::VectorXd t = y.array().exp();

        auto part = make_partition(x, {2}, Eigen::VectorXd::Zero(1));
        // The adapter is the symmetric fit on log t, bit for bit.
        const FitResult on_logs =
            fit(make_spec(part, t.array().log(), FamilySpec::logistic2()));
        const FitResult adapted = fit_logsymmetric(*part, t, FamilySpec::logistic2());
        CHECK(adapted.beta == on_logs.beta);  // bitwise
        CHECK(adapted.phi == on_logs.phi);
        CHECK(adapted.loglik == on_logs.loglik);
        // And log(exp(y)) only differs from y by rounding, so the original
        // fit agrees to numerical precision.
        const FitResult direct = fit(make_spec(part, y, FamilySpec::logistic2()));
        CHECK((adapted.beta - direct.beta).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(adapted.phi == doctest::Approx(direct.phi).epsilon(1e-10));
    }
    SUBCASE("intercept-only log-normal closed form") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 1);
        Eigen::VectorXd t(3);
        t << 1.0, std::exp(2.0), std::exp(4.0);
        auto part = make_partition(x, {0}, Eigen::VectorXd::Zero(1));
        const FitResult res = fit_logsymmetric(*part, t, FamilySpec::normal());
        REQUIRE(res.converged);
        CHECK(res.beta(0) == doctest::Approx(2.0).epsilon(1e-10));
        CHECK(res.phi * res.phi == doctest::Approx(8.0 / 3.0).epsilon(1e-10));
        const Eigen::VectorXd medians = fitted_medians(*part, res);
        CHECK(medians(0) == doctest::Approx(std::exp(2.0)).epsilon(1e-10));
        CHECK(medians.minCoeff() > 0.0);
    }
    SUBCASE("nonpositive response names the offending rows") {
        Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
        Eigen::VectorXd t(4);
        t << 1.0, 0.0, 2.0, -3.0;
        auto part = make_partition(x, {0}, Eigen::VectorXd::Zero(1));
        bool threw = false;
        try {
            fit_logsymmetric(*part, t, FamilySpec::normal());
        } catch (const std::domain_error& e) {
            threw = true;
            const std::string msg = e.what();
            CHECK(msg.find('1') != std::string::npos);
            CHECK(msg.find('3') != std::string::npos);
        }
        CHECK(threw);
    }
}

TEST_CASE("scale equivariance of the fit for every family") {
    for (const FamilySpec& family :
         {FamilySpec::normal(), FamilySpec::cauchy(), FamilySpec::student_t(4.0),
          FamilySpec::logistic1(), FamilySpec::logistic2(), FamilySpec::power_exp(0.25)}) {
        CAPTURE(family.name());
        Eigen::MatrixXd x = random_design(22, 3, 101);
        RngStream noise = substream(55, 5);
        const DistributionKernel k = kernel(family);
        Eigen::VectorXd y(22);
        for (int l = 0; l < 22; ++l) y(l) = 1.0 - x(l, 1) + 1.5 * draw(k, noise);

        auto part = make_partition(x, {2}, Eigen::VectorXd::Zero(1));
        const FitResult base = fit(make_spec(part, y, family));
        const double c = 3.25;
        const FitResult scaled = fit(make_spec(part, c * y, family));
        REQUIRE(base.converged);
        REQUIRE(scaled.converged);
        CHECK((scaled.beta / c - base.beta).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(scaled.phi / c == doctest::Approx(base.phi).epsilon(1e-8));
        CHECK((scaled.standardized - base.standardized).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((scaled.weights - base.weights).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("Fisher information cross blocks vanish in expectation") {
    // E[d^2 l / dbeta dphi] = 0: average finite-difference cross second
    // derivatives of the log-likelihood at the true parameters over
    // simulated samples.
    const FamilySpec family = FamilySpec::student_t(4.0);
    const DistributionKernel k = kernel(family);
    const int n = 50;
    Eigen::MatrixXd x = random_design(n, 2, 404);
    auto part = make_partition(x, {1}, Eigen::VectorXd::Zero(1));
    const Eigen::Vector2d beta_true(1.0, 2.0);
    const double phi_true = 1.0;

    const int reps = 4000;
    double sum = 0.0, sumsq = 0.0;
    RngStream noise = substream(1717, 0);
    const double h = 1e-4;
    for (int r = 0; r < reps; ++r) {
        Eigen::VectorXd y = x * beta_true;
        for (int l = 0; l < n; ++l) y(l) += phi_true * draw(k, noise);
        const ModelSpec spec = make_spec(part, y, family);
        auto ll = [&](double b0_shift, double phi_shift) {
            Eigen::VectorXd b = beta_true;
            b(0) += b0_shift;
            return loglik(spec, b, phi_true + phi_shift);
        };
        const double cross = (ll(h, h) - ll(h, -h) - ll(-h, h) + ll(-h, -h)) / (4.0 * h * h);
        sum += cross;
        sumsq += cross * cross;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
    CHECK(std::abs(mean) < 4.0 * se + 1e-3);
}

TEST_CASE("corrected AIC") {
    CHECK(aicc(0.0, 10, 1) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(aicc(0.0, 100, 2) == doctest::Approx(4.0 + 12.0 / 97.0).epsilon(1e-12));
    // k fixed, n large: AICc approaches AIC.
    CHECK(aicc(-12.0, 100000, 3) == doctest::Approx(24.0 + 6.0).epsilon(1e-4));
    CHECK_THROWS_AS(aicc(0.0, 4, 3), std::domain_error);
}

TEST_CASE("standard errors against the normal closed form") {
    Eigen::MatrixXd x = random_design(30, 3, 19);
    RngStream noise = substream(6, 6);
    const DistributionKernel k = kernel(FamilySpec::normal());
    Eigen::VectorXd y(30);
    for (int l = 0; l < 30; ++l) y(l) = 2.0 + x(l, 1) + draw(k, noise);
    auto part = make_partition(x, {2}, Eigen::VectorXd::Zero(1));
    const ModelSpec spec = make_spec(part, y, FamilySpec::normal());
    const FitResult res = fit(spec);
    const StandardErrors se = standard_errors(spec, res);
    const Eigen::MatrixXd cov = res.phi * res.phi * (x.transpose() * x).inverse();
    for (int j = 0; j < 3; ++j)
        CHECK(se.beta_se(j) == doctest::Approx(std::sqrt(cov(j, j))).epsilon(1e-10));
    CHECK(se.phi_se == doctest::Approx(res.phi / std::sqrt(30.0 * 2.0)).epsilon(1e-12));
}
