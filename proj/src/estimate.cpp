#include "symreg/estimate.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace symreg {

namespace {

constexpr double kPhiFloor = 1e-12;
constexpr double kWeightZClamp = 1e-10;  // keeps pexp weights finite at z = 0

double loglik_raw(const DistributionKernel& kernel, const Eigen::VectorXd& e,
                  double phi) {
    const int n = static_cast<int>(e.size());
    double sum = -n * std::log(phi);
    for (int l = 0; l < n; ++l) sum += kernel.g(e(l) / phi);
    return sum;
}

Eigen::VectorXd weights_at(const DistributionKernel& kernel,
                           const Eigen::VectorXd& z) {
    Eigen::VectorXd w(z.size());
    for (int l = 0; l < z.size(); ++l) {
        const double zl = std::abs(z(l));
        w(l) = kernel.weight(zl < kWeightZClamp ? kWeightZClamp : zl);
    }
    return w;
}

// Fisher scoring on a working problem: response v, design columns given
// through gram_solve / design product callbacks. Estimates (gamma, phi);
// gamma is absent for the phi-only (q = p restricted) case.
struct ScoringProblem {
    const DistributionKernel& kernel;
    const Eigen::MatrixXd* design;  // nullptr for phi-only
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gram_solve;
    const Eigen::VectorXd& v;
};

struct ScoringState {
    Eigen::VectorXd gamma;
    double phi = 1.0;
    double loglik = 0.0;
    Eigen::VectorXd residuals;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
};

ScoringState run_scoring(const ScoringProblem& prob, Eigen::VectorXd gamma0,
                         double phi0, const FitOptions& opt) {
    const int n = static_cast<int>(prob.v.size());
    const double d20000 = prob.kernel.delta_20000();
    const double d20002 = prob.kernel.delta_20002();

    ScoringState st;
    st.gamma = std::move(gamma0);
    st.phi = phi0;

    auto residuals_of = [&](const Eigen::VectorXd& gamma) -> Eigen::VectorXd {
        if (prob.design == nullptr) return prob.v;
        return prob.v - (*prob.design) * gamma;
    };

    st.residuals = residuals_of(st.gamma);
    if (st.phi < kPhiFloor) {
        st.phi = kPhiFloor;
        st.degenerate = true;
        st.converged = true;
        st.loglik = loglik_raw(prob.kernel, st.residuals, st.phi);
        return st;
    }
    st.loglik = loglik_raw(prob.kernel, st.residuals, st.phi);
    if (!std::isfinite(st.loglik))
        throw convergence_error("non-finite log-likelihood at the starting values");

    double rel_dll = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        st.iterations = iter;
        const Eigen::VectorXd z = st.residuals / st.phi;
        const Eigen::VectorXd w = weights_at(prob.kernel, z);
        const Eigen::VectorXd we = w.cwiseProduct(st.residuals);
        const double ewe = we.dot(st.residuals);

        // Score components.
        double grad_inf = 0.0;
        Eigen::VectorXd dtwe;
        if (prob.design != nullptr) {
            dtwe = prob.design->transpose() * we;
            grad_inf = (dtwe / (st.phi * st.phi)).cwiseAbs().maxCoeff();
        }
        const double u_phi = (ewe / (st.phi * st.phi) - n) / st.phi;
        grad_inf = std::max(grad_inf, std::abs(u_phi));

        // Scoring step: the paper's two-block update, phi on the log scale.
        Eigen::VectorXd dgamma;
        if (prob.design != nullptr) dgamma = prob.gram_solve(dtwe) / d20000;
        const double dlogphi =
            (ewe / n - st.phi * st.phi) / (st.phi * st.phi * (d20002 - 1.0));

        // Scale-invariant step size (fitted-value shift in phi units); keeps
        // polishing past the nominal criteria so the fixed point is hit to
        // machine precision independently of the data scale.
        double step_scale = std::abs(dlogphi);
        if (prob.design != nullptr)
            step_scale = std::max(step_scale,
                                  ((*prob.design) * dgamma).cwiseAbs().maxCoeff() / st.phi);
        const bool step_small = step_scale < 1e-11;
        if (iter > 1 && rel_dll < opt.rel_loglik_tol && grad_inf < opt.grad_tol &&
            step_small) {
            st.converged = true;
            st.iterations = iter - 1;
            return st;
        }

        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd gamma_new = st.gamma;
        double phi_new = st.phi;
        double ll_new = st.loglik;
        Eigen::VectorXd res_new;
        for (int half = 0; half < opt.max_halvings; ++half) {
            gamma_new = prob.design != nullptr
                            ? Eigen::VectorXd(st.gamma + step * dgamma)
                            : st.gamma;
            phi_new = st.phi * std::exp(step * dlogphi);
            if (phi_new < kPhiFloor) {
                res_new = residuals_of(gamma_new);
                st.gamma = gamma_new;
                st.phi = kPhiFloor;
                st.residuals = res_new;
                st.loglik = loglik_raw(prob.kernel, st.residuals, st.phi);
                st.degenerate = true;
                st.converged = true;
                return st;
            }
            res_new = residuals_of(gamma_new);
            ll_new = loglik_raw(prob.kernel, res_new, phi_new);
            if (std::isfinite(ll_new) &&
                ll_new >= st.loglik - 1e-12 * (1.0 + std::abs(st.loglik))) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No uphill step left; converged only if the score is already flat.
            st.converged = grad_inf < opt.grad_tol;
            return st;
        }
        rel_dll = std::abs(ll_new - st.loglik) / (1.0 + std::abs(ll_new));
        st.gamma = gamma_new;
        st.phi = phi_new;
        st.residuals = res_new;
        st.loglik = ll_new;
    }
    // Iteration cap: report convergence by the nominal criteria at the
    // final state (the step-size polish is best-effort only).
    {
        const Eigen::VectorXd z = st.residuals / st.phi;
        const Eigen::VectorXd w = weights_at(prob.kernel, z);
        const Eigen::VectorXd we = w.cwiseProduct(st.residuals);
        double grad_inf = 0.0;
        if (prob.design != nullptr)
            grad_inf = (prob.design->transpose() * we / (st.phi * st.phi))
                           .cwiseAbs()
                           .maxCoeff();
        const double u_phi = (we.dot(st.residuals) / (st.phi * st.phi) - n) / st.phi;
        grad_inf = std::max(grad_inf, std::abs(u_phi));
        st.converged = rel_dll < opt.rel_loglik_tol && grad_inf < opt.grad_tol;
    }
    return st;
}

FitResult package(const ModelSpec& spec, const ScoringState& st,
                  const Eigen::VectorXd& beta_full, bool restricted) {
    const DistributionKernel k = kernel(spec.family);
    FitResult out;
    out.beta = beta_full;
    out.phi = st.phi;
    out.loglik = st.loglik;
    out.residuals = spec.y - spec.partition->X() * beta_full;
    out.standardized = out.residuals / st.phi;
    out.weights = weights_at(k, out.standardized);
    out.iterations = st.iterations;
    out.converged = st.converged;
    out.degenerate = st.degenerate;
    out.restricted = restricted;
    return out;
}

}  // namespace

double loglik(const ModelSpec& spec, const Eigen::VectorXd& beta, double phi) {
    if (!(phi > 0.0)) throw std::domain_error("loglik: phi > 0 required");
    const DistributionKernel k = kernel(spec.family);
    const Eigen::VectorXd e = spec.y - spec.partition->X() * beta;
    return loglik_raw(k, e, phi);
}

FitResult fit(const ModelSpec& spec, const FitOptions& options) {
    const DesignPartition& part = *spec.partition;
    const DistributionKernel k = kernel(spec.family);

    Eigen::VectorXd beta0 = part.least_squares(spec.y);
    const Eigen::VectorXd e0 = spec.y - part.X() * beta0;
    const double phi0 = std::sqrt(e0.squaredNorm() / part.n());

    const Eigen::MatrixXd& X = part.X();
    ScoringProblem prob{k, &X,
                        [&part](const Eigen::VectorXd& v) { return part.solve_gram(v); },
                        spec.y};
    ScoringState st = run_scoring(prob, std::move(beta0), phi0, options);
    return package(spec, st, st.gamma, /*restricted=*/false);
}

FitResult fit_restricted(const ModelSpec& spec, const FitOptions& options) {
    const DesignPartition& part = *spec.partition;
    const DistributionKernel k = kernel(spec.family);
    const int p = part.p();
    const int q = part.q();

    const Eigen::VectorXd offset = part.X1() * part.beta10();
    const Eigen::VectorXd v = spec.y - offset;

    ScoringState st;
    if (q < p) {
        Eigen::VectorXd gamma0 = part.least_squares_x2(v);
        const Eigen::VectorXd e0 = v - part.X2() * gamma0;
        const double phi0 = std::sqrt(e0.squaredNorm() / part.n());
        const Eigen::MatrixXd& X2 = part.X2();
        ScoringProblem prob{k, &X2,
                            [&part](const Eigen::VectorXd& u) { return part.solve_gram_x2(u); },
                            v};
        st = run_scoring(prob, std::move(gamma0), phi0, options);
    } else {
        const double phi0 = std::sqrt(v.squaredNorm() / part.n());
        ScoringProblem prob{k, nullptr, {}, v};
        st = run_scoring(prob, Eigen::VectorXd(), phi0, options);
    }

    // Splice beta10 and the estimated block back into original column order.
    Eigen::VectorXd beta_full(p);
    const auto& mask = part.tested_mask();
    for (int i = 0; i < q; ++i) beta_full(part.tested_columns()[i]) = part.beta10()(i);
    for (int j = 0, j2 = 0; j < p; ++j)
        if (!mask[j]) beta_full(j) = st.gamma(j2++);

    return package(spec, st, beta_full, /*restricted=*/true);
}

FitResult fit_logsymmetric(const DesignPartition& partition,
                           const Eigen::VectorXd& t, const FamilySpec& family,
                           const FitOptions& options) {
    std::ostringstream bad;
    int bad_count = 0;
    for (int l = 0; l < t.size(); ++l) {
        if (!(t(l) > 0.0)) {
            if (bad_count++ > 0) bad << ", ";
            bad << l;
        }
    }
    if (bad_count > 0)
        throw std::domain_error("log-symmetric model needs a positive response; offending row(s): " +
                                bad.str());
    ModelSpec spec;
    spec.partition = std::shared_ptr<const DesignPartition>(std::shared_ptr<void>(), &partition);
    spec.y = t.array().log();
    spec.family = family;
    spec.log_scale = true;
    return fit(spec, options);
}

Eigen::VectorXd fitted_medians(const DesignPartition& partition, const FitResult& fit) {
    return (partition.X() * fit.beta).array().exp();
}

double aicc(double loglik_value, int n, int n_params) {
    if (n - n_params - 1 <= 0)
        throw std::domain_error("aicc: need n > n_params + 1");
    const double k = n_params;
    return -2.0 * loglik_value + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}

StandardErrors standard_errors(const ModelSpec& spec, const FitResult& fit) {
    const DesignPartition& part = *spec.partition;
    const DistributionKernel k = kernel(spec.family);
    const int p = part.p();
    StandardErrors se;
    se.beta_se.resize(p);
    const double scale = fit.phi * fit.phi / k.delta_20000();
    for (int j = 0; j < p; ++j) {
        Eigen::VectorXd ej = Eigen::VectorXd::Zero(p);
        ej(j) = 1.0;
        se.beta_se(j) = std::sqrt(scale * part.solve_gram(ej)(j));
    }
    se.phi_se = fit.phi / std::sqrt(part.n() * (k.delta_20002() - 1.0));
    return se;
}

}  // namespace symreg
