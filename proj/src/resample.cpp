#include "symreg/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "symreg/parallel.hpp"

namespace symreg {

double BootstrapResult::critical_value(double alpha) const {
    if (replicates.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> sorted = replicates;
    std::sort(sorted.begin(), sorted.end());
    const auto count = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * (count + 1.0)));
    rank = std::min<std::size_t>(std::max<std::size_t>(rank, 1), sorted.size());
    return sorted[rank - 1];
}

std::array<BootstrapResult, 4> bootstrap_test(const ModelSpec& spec,
                                              const FitResult& unrestricted,
                                              const FitResult& restricted,
                                              int b, std::uint64_t seed,
                                              const BootstrapOptions& options) {
    if (b < 1) throw std::invalid_argument("bootstrap_test: B >= 1 required");
    if (!restricted.converged && !restricted.degenerate)
        throw bootstrap_error("bootstrap_test: restricted fit did not converge");

    const DesignPartition& part = *spec.partition;
    const DistributionKernel kern = kernel(spec.family);
    const RawStatistics observed =
        statistics(unrestricted, restricted, part, kern, /*force=*/true);

    const Eigen::VectorXd mean = part.X() * restricted.beta;
    const double phi_tilde = restricted.phi;

    struct Slot {
        RawStatistics stats;
        bool ok = false;
    };
    std::vector<Slot> slots(b);

    parallel_for(static_cast<std::size_t>(b), options.threads, [&](std::size_t r) {
        RngStream rng = substream(seed, r);
        Eigen::VectorXd ystar(part.n());
        for (int l = 0; l < part.n(); ++l)
            ystar(l) = mean(l) + phi_tilde * draw(kern, rng);
        ModelSpec replicate = spec;
        replicate.y = std::move(ystar);
        try {
            const FitResult fu = fit(replicate, options.fit_options);
            const FitResult fr = fit_restricted(replicate, options.fit_options);
            slots[r].stats = statistics(fu, fr, part, kern);
            slots[r].ok = true;
        } catch (const std::runtime_error&) {
            slots[r].ok = false;
        }
    });

    std::array<BootstrapResult, 4> out;
    const char* names[4] = {"wald", "likelihood_ratio", "score", "gradient"};
    const double observed_values[4] = {observed.s_w, observed.s_lr, observed.s_r,
                                       observed.s_t};
    int failures = 0;
    for (const Slot& s : slots)
        if (!s.ok) ++failures;
    if (failures > options.max_failure_fraction * b)
        throw bootstrap_error("bootstrap_test: " + std::to_string(failures) + " of " +
                              std::to_string(b) + " replicate fits failed");

    for (int j = 0; j < 4; ++j) {
        BootstrapResult& res = out[j];
        res.statistic_name = names[j];
        res.observed = observed_values[j];
        res.b = b;
        res.failures = failures;
        res.seed = seed;
        res.replicates.reserve(b - failures);
        for (const Slot& s : slots) {
            if (!s.ok) continue;
            const double v = j == 0   ? s.stats.s_w
                             : j == 1 ? s.stats.s_lr
                             : j == 2 ? s.stats.s_r
                                      : s.stats.s_t;
            res.replicates.push_back(v);
        }
        int exceed = 0;
        for (double v : res.replicates)
            if (v >= res.observed) ++exceed;
        res.pvalue = (1.0 + exceed) / (static_cast<double>(res.replicates.size()) + 1.0);
    }
    return out;
}

}  // namespace symreg
