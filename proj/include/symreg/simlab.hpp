#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "symreg/estimate.hpp"
#include "symreg/resample.hpp"

namespace symreg {

class simulation_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Column order of every tabulated output.
inline constexpr int kNumAnalytic = 7;
inline constexpr int kNumStatistics = 11;
inline constexpr const char* kStatisticNames[kNumStatistics] = {
    "S_W", "S_LR", "S_R", "S_T", "S*_LR", "S*_R", "S*_T",
    "S^b_W", "S^b_LR", "S^b_R", "S^b_T"};

/// A Monte Carlo experiment. The design matrix is [1, x_1 .. x_{p-1}] with
/// U(0,1) covariates drawn once from covariate_seed and held fixed across
/// replicates; the hypothesis tests the LAST q columns against beta10
/// (zeros unless set). beta_true defaults to 1 everywhere with the tested
/// block at beta10 (null true); the power study overrides the tested block
/// with each grid delta.
struct SimDesign {
    FamilySpec family;
    int n = 20;
    int p = 4;
    int q = 3;
    double phi = 3.0;
    std::vector<double> beta_true;   // empty: default pattern
    std::vector<double> beta10;      // empty: zeros
    std::vector<double> alphas = {0.10, 0.05, 0.01};
    int replicates = 15000;
    int bootstrap_b = 0;             // 0: skip bootstrap columns
    std::uint64_t covariate_seed = 20250801;
    std::uint64_t noise_seed = 1;
    std::vector<double> delta_grid;  // power study only
    int calibration_replicates = 100000;
    int threads = 1;
    bool self_test = false;          // statistics replaced by exact chi2_q draws
};

struct SimResult {
    SimDesign design;
    // [alpha index][statistic index], percent; bootstrap columns are NaN
    // when bootstrap_b == 0, corrected columns NaN when the family has no
    // correction constants.
    std::vector<std::array<double, kNumStatistics>> rejection_rate;
    std::vector<std::array<double, kNumStatistics>> mc_standard_error;
    // Empirical (1 - alpha) quantiles of the realized analytic statistics.
    std::vector<std::array<double, kNumAnalytic>> critical_values;
    int failure_count = 0;
    int completed_replicates = 0;
};

struct PowerResult {
    SimDesign design;
    std::vector<double> delta_grid;
    // [delta index][alpha index][statistic index 0..6], percent, size-corrected.
    std::vector<std::vector<std::array<double, kNumAnalytic>>> power;
    std::vector<std::vector<std::array<double, kNumAnalytic>>> mc_standard_error;
    // Size-corrected critical values from the calibration run.
    std::vector<std::array<double, kNumAnalytic>> calibrated_critical_values;
};

/// Null rejection rates of all configured statistics against the chi2_q
/// quantiles (and bootstrap critical values when bootstrap_b > 0).
/// Aborts with simulation_error when more than 1% of replicates fail.
SimResult size_study(const SimDesign& design);

/// Size-corrected power over delta_grid: critical values estimated from a
/// calibration_replicates null run (separate noise streams), then rejection
/// rates of the 7 analytic statistics at each delta.
PowerResult power_study(const SimDesign& design);

/// Rendering of one or more size studies in the tabulated layout
/// (q, n, alpha rows; the 11 statistic columns).
struct TableReport {
    std::string text;
    std::string csv;
};
TableReport table_report(const std::vector<SimResult>& results);

/// Plot-ready CSV for a power study (delta, alpha, one column per statistic).
std::string power_csv(const PowerResult& result);

std::string sim_result_json(const SimResult& result, int indent = 2);
std::string power_result_json(const PowerResult& result, int indent = 2);

/// Plain-text design config: `key = value` lines, '#' comments. Keys:
/// family, n, p, q, phi, beta, beta10, alphas, reps, boot, covariate_seed,
/// noise_seed, delta_grid, calibration_reps, threads. All validation
/// problems are reported together.
SimDesign parse_sim_design(const std::string& text);
std::string sim_design_to_string(const SimDesign& design);

/// The fixed design matrix of a SimDesign (intercept plus U(0,1) columns).
Eigen::MatrixXd covariate_matrix(const SimDesign& design);

}  // namespace symreg
