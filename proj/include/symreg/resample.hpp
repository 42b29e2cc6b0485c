#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "symreg/estimate.hpp"
#include "symreg/testsuite.hpp"

namespace symreg {

/// Raised when too many bootstrap replicates fail to fit.
class bootstrap_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BootstrapResult {
    std::string statistic_name;
    double observed = 0.0;
    std::vector<double> replicates;  // indexed by replicate; failures dropped
    double pvalue = 1.0;             // (1 + #{replicates >= observed}) / (B + 1)
    int b = 0;                       // requested replicate count
    int failures = 0;
    std::uint64_t seed = 0;

    /// Critical value at level alpha: the ceil((1-alpha)(B+1))-th order
    /// statistic of the replicate values.
    double critical_value(double alpha) const;
};

struct BootstrapOptions {
    int threads = 1;
    double max_failure_fraction = 0.01;
    FitOptions fit_options{};
};

/// Parametric bootstrap of the four uncorrected statistics: simulates
/// y* = X beta~ + phi~ eps* under the restricted fit, refits both models,
/// and recomputes each statistic. Replicate r draws from the stream
/// substream(seed, r), so results are independent of threading.
/// Returns results in the order {wald, likelihood_ratio, score, gradient}.
std::array<BootstrapResult, 4> bootstrap_test(const ModelSpec& spec,
                                              const FitResult& unrestricted,
                                              const FitResult& restricted,
                                              int b, std::uint64_t seed,
                                              const BootstrapOptions& options = {});

}  // namespace symreg
