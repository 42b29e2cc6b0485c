#include "symreg/testsuite.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "symreg/special_functions.hpp"

namespace symreg {

RawStatistics statistics(const FitResult& unrestricted, const FitResult& restricted,
                         const DesignPartition& partition,
                         const DistributionKernel& kernel, bool force) {
    if (!force) {
        if (!unrestricted.converged && !unrestricted.degenerate)
            throw convergence_error("statistics: unrestricted fit did not converge "
                                    "(pass force to override)");
        if (!restricted.converged && !restricted.degenerate)
            throw convergence_error("statistics: restricted fit did not converge "
                                    "(pass force to override)");
    }
    const double d20000 = kernel.delta_20000();
    const Eigen::VectorXd diff = partition.tested_block(unrestricted.beta) - partition.beta10();

    RawStatistics s;
    const double phi_hat2 = unrestricted.phi * unrestricted.phi;
    s.s_w = d20000 / phi_hat2 * diff.dot(partition.rtr() * diff);

    s.s_lr = 2.0 * (unrestricted.loglik - restricted.loglik);

    const Eigen::VectorXd we = restricted.weights.cwiseProduct(restricted.residuals);
    const Eigen::VectorXd x1twe = partition.X1().transpose() * we;
    const double phi_til2 = restricted.phi * restricted.phi;
    s.s_r = x1twe.dot(partition.solve_rtr(x1twe)) / (phi_til2 * d20000);

    s.s_t = x1twe.dot(diff) / phi_til2;
    return s;
}

std::pair<double, double> bartlett_lr(double s_lr, const DesignPartition& partition,
                                      const RhoSet& rho, const CorrectionConstants& constants,
                                      bool phi_known) {
    const double n = partition.n();
    const double p = partition.p();
    const double q = partition.q();
    double a_lr = constants.d0 / (n * q) * (rho.rho_zz - rho.rho_z2z2);
    if (!phi_known)
        a_lr += constants.d1 / n + constants.d2 / n * (2.0 * p - q) / 2.0;
    return {s_lr * (1.0 - a_lr), a_lr};
}

ScoreCorrection bartlett_type_score(double s_r, const DesignPartition& partition,
                                    const RhoSet& rho, const CorrectionConstants& constants,
                                    bool phi_known) {
    const double n = partition.n();
    const double p = partition.p();
    const double q = partition.q();
    const double a_r1 = 12.0 * constants.b0 / n * (rho.rho_zz2 - rho.rho_z2z2);
    const double a_r2 =
        -9.0 * constants.b0 / n * (rho.rho_zz - 2.0 * rho.rho_zz2 + rho.rho_z2z2);
    const double a_r3 = 0.0;
    double a_r11 = a_r1;
    double a_r22 = a_r2;
    if (!phi_known) {
        a_r11 += 12.0 * constants.b1 / n * q * (p - q) - 6.0 * constants.b2 / n * q;
        a_r22 += -12.0 * constants.b3 / n * q * (q + 2.0);
    }
    ScoreCorrection out;
    out.a_r = a_r3 / (12.0 * q * (q + 2.0) * (q + 4.0));
    out.b_r = (a_r22 - 2.0 * a_r3) / (12.0 * q * (q + 2.0));
    out.c_r = (a_r11 - a_r22 + a_r3) / (12.0 * q);
    out.corrected = s_r * (1.0 - (out.c_r + out.b_r * s_r + out.a_r * s_r * s_r));
    return out;
}

GradientCorrection bartlett_type_gradient(double s_t, const DesignPartition& partition,
                                          const RhoSet& rho, const CorrectionConstants& constants,
                                          bool phi_known) {
    const double n = partition.n();
    const double p = partition.p();
    const double q = partition.q();
    const double a_t1 = 6.0 * constants.c0 / n * (rho.rho_zz2 - rho.rho_z2z2);
    const double a_t2 =
        -3.0 * constants.c0 / n * (rho.rho_zz - 2.0 * rho.rho_zz2 + rho.rho_z2z2);
    const double a_t3 = 0.0;
    double a_t11 = a_t1;
    double a_t22 = a_t2;
    if (!phi_known) {
        a_t11 += 6.0 * constants.c1 / n * q * (p - q) + 6.0 * constants.c2 / n * q;
        a_t22 += -3.0 * constants.c1 / n * q * (q + 2.0);
    }
    GradientCorrection out;
    out.a_t = a_t3 / (12.0 * q * (q + 2.0) * (q + 4.0));
    out.b_t = (a_t22 - 2.0 * a_t3) / (12.0 * q * (q + 2.0));
    out.c_t = (a_t11 - a_t22 + a_t3) / (12.0 * q);
    out.corrected = s_t * (1.0 - (out.c_t + out.b_t * s_t + out.a_t * s_t * s_t));
    return out;
}

double chisq_pvalue(double statistic, int q) {
    if (q < 1) throw std::domain_error("chisq_pvalue: q >= 1 required");
    if (!(statistic > 0.0)) return 1.0;
    if (std::isinf(statistic)) return 0.0;
    return chisq_upper_tail(statistic, q);
}

TestReport test_report(const FitResult& unrestricted, const FitResult& restricted,
                       const DesignPartition& partition, const FamilySpec& family,
                       bool phi_known, bool force) {
    const DistributionKernel k = kernel(family);
    TestReport rep;
    rep.q = partition.q();
    rep.raw = statistics(unrestricted, restricted, partition, k, force);
    rep.p_w = chisq_pvalue(rep.raw.s_w, rep.q);
    rep.p_lr = chisq_pvalue(rep.raw.s_lr, rep.q);
    rep.p_r = chisq_pvalue(rep.raw.s_r, rep.q);
    rep.p_t = chisq_pvalue(rep.raw.s_t, rep.q);

    try {
        const CorrectionConstants constants = correction_constants(family);
        const RhoSet& rho = partition.rho();
        auto [lr_star, a_lr] = bartlett_lr(rep.raw.s_lr, partition, rho, constants, phi_known);
        ScoreCorrection sc = bartlett_type_score(rep.raw.s_r, partition, rho, constants, phi_known);
        GradientCorrection gc =
            bartlett_type_gradient(rep.raw.s_t, partition, rho, constants, phi_known);
        rep.s_lr_star = lr_star;
        rep.s_r_star = sc.corrected;
        rep.s_t_star = gc.corrected;
        rep.coefficients = {a_lr, sc.a_r, sc.b_r, sc.c_r, gc.a_t, gc.b_t, gc.c_t};
        rep.correction_clamped = lr_star < 0.0 || sc.corrected < 0.0 || gc.corrected < 0.0;
        rep.p_lr_star = chisq_pvalue(lr_star, rep.q);
        rep.p_r_star = chisq_pvalue(sc.corrected, rep.q);
        rep.p_t_star = chisq_pvalue(gc.corrected, rep.q);
    } catch (const unsupported_correction_error&) {
        rep.corrections_available = false;
    }
    return rep;
}

std::string test_report_json(const TestReport& rep, int indent) {
    nlohmann::json j;
    j["q"] = rep.q;
    j["statistics"] = {{"wald", rep.raw.s_w},
                       {"likelihood_ratio", rep.raw.s_lr},
                       {"score", rep.raw.s_r},
                       {"gradient", rep.raw.s_t}};
    j["pvalues"] = {{"wald", rep.p_w},
                    {"likelihood_ratio", rep.p_lr},
                    {"score", rep.p_r},
                    {"gradient", rep.p_t}};
    if (rep.corrections_available) {
        j["corrected_statistics"] = {{"likelihood_ratio", rep.s_lr_star},
                                     {"score", rep.s_r_star},
                                     {"gradient", rep.s_t_star}};
        j["corrected_pvalues"] = {{"likelihood_ratio", rep.p_lr_star},
                                  {"score", rep.p_r_star},
                                  {"gradient", rep.p_t_star}};
        j["coefficients"] = {{"a_lr", rep.coefficients.a_lr}, {"a_r", rep.coefficients.a_r},
                             {"b_r", rep.coefficients.b_r},   {"c_r", rep.coefficients.c_r},
                             {"a_t", rep.coefficients.a_t},   {"b_t", rep.coefficients.b_t},
                             {"c_t", rep.coefficients.c_t}};
    }
    j["flags"] = {{"correction_clamped", rep.correction_clamped},
                  {"corrections_available", rep.corrections_available}};
    return j.dump(indent);
}

}  // namespace symreg
