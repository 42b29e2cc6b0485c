#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "symreg/resample.hpp"
#include "symreg/special_functions.hpp"

using namespace symreg;

namespace {

std::shared_ptr<DesignPartition> make_partition(Eigen::MatrixXd x, std::vector<int> tested,
                                                Eigen::VectorXd beta10) {
    return std::make_shared<DesignPartition>(std::move(x), std::move(tested), std::move(beta10));
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

ModelSpec simulated_spec(const FamilySpec& family, int n, int p, std::uint64_t seed,
                         double effect = 0.0) {
    Eigen::MatrixXd x = random_design(n, p, seed);
    const DistributionKernel k = kernel(family);
    RngStream noise = substream(seed, 1);
    Eigen::VectorXd y(n);
    for (int l = 0; l < n; ++l) y(l) = 1.0 + effect * x(l, p - 1) + 2.0 * draw(k, noise);
    ModelSpec spec;
    spec.partition = make_partition(std::move(x), {p - 1}, Eigen::VectorXd::Zero(1));
    spec.y = std::move(y);
    spec.family = family;
    return spec;
}

}  // namespace

TEST_CASE("bootstrap determinism and p-value conventions") {
    const ModelSpec spec = simulated_spec(FamilySpec::normal(), 20, 3, 404);
    const FitResult fu = fit(spec);
    const FitResult fr = fit_restricted(spec);

    const auto run1 = bootstrap_test(spec, fu, fr, 99, 2024);
    const auto run2 = bootstrap_test(spec, fu, fr, 99, 2024);
    for (int j = 0; j < 4; ++j) {
        CHECK(run1[j].replicates == run2[j].replicates);  // bitwise identical
        CHECK(run1[j].pvalue == run2[j].pvalue);
        CHECK(run1[j].b == 99);
        CHECK(run1[j].seed == 2024);
    }
    const auto run3 = bootstrap_test(spec, fu, fr, 99, 2025);
    CHECK(run1[1].replicates != run3[1].replicates);

    // p-value respects the (1 + count)/(B + 1) convention and its bounds.
    for (int j = 0; j < 4; ++j) {
        int count = 0;
        for (double v : run1[j].replicates)
            if (v >= run1[j].observed) ++count;
        CHECK(run1[j].pvalue ==
              doctest::Approx((1.0 + count) / (run1[j].replicates.size() + 1.0)));
        CHECK(run1[j].pvalue >= 1.0 / (run1[j].replicates.size() + 1.0));
        CHECK(run1[j].pvalue <= 1.0);
    }

    SUBCASE("huge observed effect floors the p-value at 1/(B+1)") {
        const ModelSpec strong = simulated_spec(FamilySpec::normal(), 20, 3, 405, 50.0);
        const FitResult su = fit(strong);
        const FitResult sr = fit_restricted(strong);
        const auto boot = bootstrap_test(strong, su, sr, 60, 7);
        CHECK(boot[0].pvalue == doctest::Approx(1.0 / 61.0));
        CHECK(boot[1].pvalue == doctest::Approx(1.0 / 61.0));
    }
}

TEST_CASE("replicate statistics stay nonnegative; threading is invisible") {
    const ModelSpec spec = simulated_spec(FamilySpec::student_t(4.0), 20, 4, 11);
    const FitResult fu = fit(spec);
    const FitResult fr = fit_restricted(spec);
    BootstrapOptions serial;
    serial.threads = 1;
    BootstrapOptions parallel;
    parallel.threads = 3;

    const auto a = bootstrap_test(spec, fu, fr, 120, 99, serial);
    const auto b = bootstrap_test(spec, fu, fr, 120, 99, parallel);
    for (int j = 0; j < 4; ++j) {
        CHECK(a[j].replicates == b[j].replicates);
        CHECK(a[j].pvalue == b[j].pvalue);
    }
    for (int j = 0; j < 3; ++j)  // wald, LR, score are nonnegative by construction
        for (double v : a[j].replicates) CHECK(v >= -1e-8);
}

TEST_CASE("critical value is the ceil((1-alpha)(B+1)) order statistic") {
    BootstrapResult res;
    res.replicates = {5.0, 1.0, 4.0, 2.0, 3.0};
    CHECK(res.critical_value(0.5) == 3.0);   // ceil(0.5 * 6) = 3rd smallest
    CHECK(res.critical_value(0.05) == 5.0);  // ceil(0.95 * 6) = 6 -> clamped to max
    CHECK(res.critical_value(0.999) == 1.0);
}

TEST_CASE("bootstrap null distribution approaches chi-squared for large n") {
    // Normal null, n = 200: the empirical CDF of the bootstrapped S_LR must
    // lie within KS distance 0.05 of chi2(1).
    const ModelSpec spec = simulated_spec(FamilySpec::normal(), 200, 3, 31415);
    const FitResult fu = fit(spec);
    const FitResult fr = fit_restricted(spec);
    const auto boot = bootstrap_test(spec, fu, fr, 2000, 8);
    std::vector<double> lr = boot[1].replicates;
    std::sort(lr.begin(), lr.end());
    double dmax = 0.0;
    for (std::size_t i = 0; i < lr.size(); ++i) {
        const double cdf = 1.0 - chisq_upper_tail(lr[i], 1);
        dmax = std::max(dmax, std::abs(cdf - static_cast<double>(i + 1) / lr.size()));
        dmax = std::max(dmax, std::abs(cdf - static_cast<double>(i) / lr.size()));
    }
    CHECK(dmax < 0.05);
}

TEST_CASE("failure handling") {
    const ModelSpec spec = simulated_spec(FamilySpec::student_t(4.0), 20, 3, 500);
    const FitResult fu = fit(spec);
    const FitResult fr = fit_restricted(spec);
    CHECK_THROWS_AS(bootstrap_test(spec, fu, fr, 0, 1), std::invalid_argument);

    // Starving the replicate fits of iterations makes (nearly) all of them
    // fail, which must trip the 1% threshold.
    BootstrapOptions starved;
    starved.fit_options.max_iterations = 1;
    CHECK_THROWS_AS(bootstrap_test(spec, fu, fr, 50, 1, starved), bootstrap_error);
}
