#pragma once

#include <optional>
#include <string>

#include "symreg/design.hpp"
#include "symreg/distribution.hpp"
#include "symreg/estimate.hpp"

namespace symreg {

/// Raw statistic quadruple for one hypothesis.
struct RawStatistics {
    double s_w = 0.0;
    double s_lr = 0.0;
    double s_r = 0.0;
    double s_t = 0.0;
};

/// Coefficient sets of the corrected statistics. a_r and a_t are zero in
/// these models (the cubic term vanishes structurally) but kept so the
/// report spells the full polynomial.
struct CorrectionCoefficients {
    double a_lr = 0.0;
    double a_r = 0.0, b_r = 0.0, c_r = 0.0;
    double a_t = 0.0, b_t = 0.0, c_t = 0.0;
};

struct TestReport {
    RawStatistics raw;
    double s_lr_star = 0.0;
    double s_r_star = 0.0;
    double s_t_star = 0.0;
    CorrectionCoefficients coefficients;
    int q = 0;
    // Upper-tail chi-squared(q) p-values; corrected statistics are clamped
    // at zero for the p-value when the polynomial correction overshoots.
    double p_w = 1.0, p_lr = 1.0, p_r = 1.0, p_t = 1.0;
    double p_lr_star = 1.0, p_r_star = 1.0, p_t_star = 1.0;
    bool correction_clamped = false;
    bool corrections_available = true;  // false: family without constants (pexp k >= 1/3)
};

/// The four test statistics from a matched pair of fits.
/// Throws convergence_error unless both fits converged (or are flagged
/// degenerate) or force is set.
RawStatistics statistics(const FitResult& unrestricted, const FitResult& restricted,
                         const DesignPartition& partition,
                         const DistributionKernel& kernel, bool force = false);

/// Bartlett-corrected likelihood ratio: S_LR (1 - a_LR). Returns the
/// corrected value and a_LR.
std::pair<double, double> bartlett_lr(double s_lr, const DesignPartition& partition,
                                      const RhoSet& rho, const CorrectionConstants& constants,
                                      bool phi_known = false);

/// Bartlett-type corrected score: S_R [1 - (c_R + b_R S_R + a_R S_R^2)].
struct ScoreCorrection {
    double corrected;
    double a_r, b_r, c_r;
};
ScoreCorrection bartlett_type_score(double s_r, const DesignPartition& partition,
                                    const RhoSet& rho, const CorrectionConstants& constants,
                                    bool phi_known = false);

/// Bartlett-type corrected gradient: S_T [1 - (c_T + b_T S_T + a_T S_T^2)].
struct GradientCorrection {
    double corrected;
    double a_t, b_t, c_t;
};
GradientCorrection bartlett_type_gradient(double s_t, const DesignPartition& partition,
                                          const RhoSet& rho, const CorrectionConstants& constants,
                                          bool phi_known = false);

/// Upper-tail chi-squared(q) probability; the statistic is clamped below
/// at zero.
double chisq_pvalue(double statistic, int q);

/// Full report: statistics, corrections (when available for the family),
/// p-values, flags.
TestReport test_report(const FitResult& unrestricted, const FitResult& restricted,
                       const DesignPartition& partition, const FamilySpec& family,
                       bool phi_known = false, bool force = false);

/// JSON serialization of the report (documented shape; see docs/schema).
std::string test_report_json(const TestReport& report, int indent = 2);

}  // namespace symreg
