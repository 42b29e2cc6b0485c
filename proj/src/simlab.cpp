#include "symreg/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "symreg/parallel.hpp"
#include "symreg/special_functions.hpp"

namespace symreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(mix64(seed) ^ mix64(tag));
}

struct Experiment {
    SimDesign design;
    std::shared_ptr<DesignPartition> partition;
    Eigen::VectorXd beta_true;
    Eigen::VectorXd mean;  // X beta_true
    DistributionKernel kern;
    bool corrections_available = false;
    // Correction coefficients are data-free: fixed per experiment.
    double a_lr = 0.0, b_r = 0.0, c_r = 0.0, b_t = 0.0, c_t = 0.0;
};

void validate_design(const SimDesign& d) {
    std::vector<std::string> problems;
    if (d.n <= d.p) problems.push_back("need n > p");
    if (d.p < 1) problems.push_back("need p >= 1");
    if (d.q < 1 || d.q > d.p) problems.push_back("need 1 <= q <= p");
    if (!(d.phi > 0.0)) problems.push_back("need phi > 0");
    if (d.replicates < 1) problems.push_back("need reps >= 1");
    if (d.alphas.empty() && d.delta_grid.empty())
        problems.push_back("need at least one alpha level");
    for (double a : d.alphas)
        if (!(a > 0.0 && a < 1.0)) problems.push_back("alpha levels must lie in (0,1)");
    if (!d.beta_true.empty() && static_cast<int>(d.beta_true.size()) != d.p)
        problems.push_back("beta must have p entries");
    if (!d.beta10.empty() && static_cast<int>(d.beta10.size()) != d.q)
        problems.push_back("beta10 must have q entries");
    if (d.bootstrap_b < 0) problems.push_back("boot must be >= 0");
    if (d.threads < 1) problems.push_back("threads must be >= 1");
    if (!problems.empty()) {
        std::string all = "invalid simulation design:";
        for (const auto& p : problems) all += "\n  - " + p;
        throw simulation_error(all);
    }
}

Experiment build_experiment(const SimDesign& design) {
    validate_design(design);
    Eigen::MatrixXd x = covariate_matrix(design);

    std::vector<int> tested(design.q);
    for (int i = 0; i < design.q; ++i) tested[i] = design.p - design.q + i;
    Eigen::VectorXd beta10 = Eigen::VectorXd::Zero(design.q);
    for (std::size_t i = 0; i < design.beta10.size(); ++i) beta10(i) = design.beta10[i];

    Experiment ex{design,
                  std::make_shared<DesignPartition>(std::move(x), tested, beta10),
                  Eigen::VectorXd(),
                  Eigen::VectorXd(),
                  kernel(design.family)};

    ex.beta_true = Eigen::VectorXd::Ones(design.p);
    for (int i = 0; i < design.q; ++i) ex.beta_true(tested[i]) = beta10(i);
    if (!design.beta_true.empty())
        for (int j = 0; j < design.p; ++j) ex.beta_true(j) = design.beta_true[j];
    ex.mean = ex.partition->X() * ex.beta_true;

    try {
        const CorrectionConstants constants = correction_constants(design.family);
        const RhoSet& rho = ex.partition->rho();
        ex.a_lr = bartlett_lr(1.0, *ex.partition, rho, constants).second;
        const ScoreCorrection sc = bartlett_type_score(1.0, *ex.partition, rho, constants);
        const GradientCorrection gc = bartlett_type_gradient(1.0, *ex.partition, rho, constants);
        ex.b_r = sc.b_r;
        ex.c_r = sc.c_r;
        ex.b_t = gc.b_t;
        ex.c_t = gc.c_t;
        ex.corrections_available = true;
    } catch (const unsupported_correction_error&) {
        ex.corrections_available = false;
    }
    return ex;
}

struct ReplicateOutput {
    std::array<double, kNumAnalytic> stats;
    std::array<double, 4> bootstrap_pvalues;
    bool ok = false;
};

// One Monte Carlo replicate: simulate y under beta (mean vector given),
// fit both models, return the seven analytic statistics (and bootstrap
// p-values when requested).
ReplicateOutput run_replicate(const Experiment& ex, const Eigen::VectorXd& mean,
                              std::uint64_t noise_seed, std::size_t r,
                              int bootstrap_b, std::uint64_t bootstrap_seed_base) {
    ReplicateOutput out;
    out.stats.fill(kNaN);
    out.bootstrap_pvalues.fill(kNaN);
    const SimDesign& d = ex.design;

    RngStream rng = substream(noise_seed, r);

    if (d.self_test) {
        // Calibration mode: exact chi2_q draws through the same tabulation.
        std::gamma_distribution<double> chi2(0.5 * d.q, 2.0);
        const double v = chi2(rng);
        out.stats.fill(v);
        out.ok = true;
        return out;
    }

    Eigen::VectorXd y(d.n);
    for (int l = 0; l < d.n; ++l) y(l) = mean(l) + d.phi * draw(ex.kern, rng);

    ModelSpec spec{ex.partition, std::move(y), d.family, false};
    try {
        const FitResult fu = fit(spec);
        const FitResult fr = fit_restricted(spec);
        const RawStatistics s = statistics(fu, fr, *ex.partition, ex.kern);
        out.stats[0] = s.s_w;
        out.stats[1] = s.s_lr;
        out.stats[2] = s.s_r;
        out.stats[3] = s.s_t;
        if (ex.corrections_available) {
            out.stats[4] = s.s_lr * (1.0 - ex.a_lr);
            out.stats[5] = s.s_r * (1.0 - (ex.c_r + ex.b_r * s.s_r));
            out.stats[6] = s.s_t * (1.0 - (ex.c_t + ex.b_t * s.s_t));
        }
        if (bootstrap_b > 0) {
            BootstrapOptions bopt;
            bopt.threads = 1;  // parallelism lives at the replicate level
            const auto boot = bootstrap_test(spec, fu, fr, bootstrap_b,
                                             derive_seed(bootstrap_seed_base, r), bopt);
            for (int j = 0; j < 4; ++j) out.bootstrap_pvalues[j] = boot[j].pvalue;
        }
        out.ok = true;
    } catch (const std::runtime_error&) {
        out.ok = false;
    }
    return out;
}

std::vector<ReplicateOutput> run_batch(const Experiment& ex, const Eigen::VectorXd& mean,
                                       std::uint64_t noise_seed, int replicates,
                                       int bootstrap_b) {
    std::vector<ReplicateOutput> slots(replicates);
    const std::uint64_t boot_base = derive_seed(noise_seed, 0xb007u);
    parallel_for(static_cast<std::size_t>(replicates), ex.design.threads,
                 [&](std::size_t r) {
                     slots[r] = run_replicate(ex, mean, noise_seed, r, bootstrap_b, boot_base);
                 });
    int failures = 0;
    for (const auto& s : slots)
        if (!s.ok) ++failures;
    if (failures * 100 > replicates)
        throw simulation_error("simulation aborted: " + std::to_string(failures) + " of " +
                               std::to_string(replicates) + " replicates failed to fit (" +
                               ex.design.family.name() + ", n=" + std::to_string(ex.design.n) +
                               ", p=" + std::to_string(ex.design.p) + ")");
    return slots;
}

double empirical_quantile(std::vector<double>& sorted_values, double level) {
    if (sorted_values.empty()) return kNaN;
    auto rank = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(sorted_values.size())));
    rank = std::min(std::max<std::size_t>(rank, 1), sorted_values.size());
    return sorted_values[rank - 1];
}

}  // namespace

Eigen::MatrixXd covariate_matrix(const SimDesign& design) {
    Eigen::MatrixXd x(design.n, design.p);
    x.col(0).setOnes();
    RngStream rng = substream(design.covariate_seed, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int j = 1; j < design.p; ++j)
        for (int l = 0; l < design.n; ++l) x(l, j) = unif(rng);
    return x;
}

SimResult size_study(const SimDesign& design) {
    const Experiment ex = build_experiment(design);
    const auto slots =
        run_batch(ex, ex.mean, design.noise_seed, design.replicates, design.bootstrap_b);

    SimResult result;
    result.design = design;
    for (const auto& s : slots)
        if (s.ok) ++result.completed_replicates;
    result.failure_count = design.replicates - result.completed_replicates;

    const double completed = result.completed_replicates;
    result.rejection_rate.resize(design.alphas.size());
    result.mc_standard_error.resize(design.alphas.size());
    result.critical_values.resize(design.alphas.size());

    std::array<std::vector<double>, kNumAnalytic> sorted;
    for (int j = 0; j < kNumAnalytic; ++j) {
        sorted[j].reserve(result.completed_replicates);
        for (const auto& s : slots)
            if (s.ok && std::isfinite(s.stats[j])) sorted[j].push_back(s.stats[j]);
        std::sort(sorted[j].begin(), sorted[j].end());
    }

    for (std::size_t ai = 0; ai < design.alphas.size(); ++ai) {
        const double alpha = design.alphas[ai];
        const double chi2_crit = chisq_quantile(1.0 - alpha, design.q);
        auto& rates = result.rejection_rate[ai];
        auto& ses = result.mc_standard_error[ai];
        rates.fill(kNaN);
        ses.fill(kNaN);
        result.critical_values[ai].fill(kNaN);
        for (int j = 0; j < kNumAnalytic; ++j) {
            if (j >= 4 && !ex.corrections_available && !design.self_test) continue;
            int rejections = 0;
            for (const auto& s : slots)
                if (s.ok && s.stats[j] > chi2_crit) ++rejections;
            const double rate = rejections / completed;
            rates[j] = 100.0 * rate;
            ses[j] = 100.0 * std::sqrt(rate * (1.0 - rate) / completed);
            result.critical_values[ai][j] = empirical_quantile(sorted[j], 1.0 - alpha);
        }
        if (design.bootstrap_b > 0) {
            for (int j = 0; j < 4; ++j) {
                int rejections = 0;
                for (const auto& s : slots)
                    if (s.ok && s.bootstrap_pvalues[j] <= alpha) ++rejections;
                const double rate = rejections / completed;
                rates[kNumAnalytic + j] = 100.0 * rate;
                ses[kNumAnalytic + j] = 100.0 * std::sqrt(rate * (1.0 - rate) / completed);
            }
        }
    }
    return result;
}

PowerResult power_study(const SimDesign& design) {
    if (design.delta_grid.empty())
        throw simulation_error("power_study: delta_grid must be nonempty");
    const Experiment ex = build_experiment(design);

    // Size-corrected critical values from a dedicated null run.
    const std::uint64_t calibration_seed = derive_seed(design.noise_seed, 0xca11u);
    const auto null_slots =
        run_batch(ex, ex.mean, calibration_seed, design.calibration_replicates, 0);

    PowerResult result;
    result.design = design;
    result.delta_grid = design.delta_grid;
    result.calibrated_critical_values.resize(design.alphas.size());
    {
        std::array<std::vector<double>, kNumAnalytic> sorted;
        for (int j = 0; j < kNumAnalytic; ++j) {
            for (const auto& s : null_slots)
                if (s.ok && std::isfinite(s.stats[j])) sorted[j].push_back(s.stats[j]);
            std::sort(sorted[j].begin(), sorted[j].end());
        }
        for (std::size_t ai = 0; ai < design.alphas.size(); ++ai) {
            for (int j = 0; j < kNumAnalytic; ++j)
                result.calibrated_critical_values[ai][j] =
                    empirical_quantile(sorted[j], 1.0 - design.alphas[ai]);
        }
    }

    result.power.resize(design.delta_grid.size());
    result.mc_standard_error.resize(design.delta_grid.size());
    for (std::size_t di = 0; di < design.delta_grid.size(); ++di) {
        const double delta = design.delta_grid[di];
        Eigen::VectorXd beta = ex.beta_true;
        for (int i = 0; i < design.q; ++i)
            beta(ex.partition->tested_columns()[i]) = ex.partition->beta10()(i) + delta;
        const Eigen::VectorXd mean = ex.partition->X() * beta;
        const std::uint64_t seed = derive_seed(design.noise_seed, 0xde17a000u + di);
        const auto slots = run_batch(ex, mean, seed, design.replicates, 0);

        double completed = 0;
        for (const auto& s : slots)
            if (s.ok) ++completed;
        auto& rates = result.power[di];
        auto& ses = result.mc_standard_error[di];
        rates.resize(design.alphas.size());
        ses.resize(design.alphas.size());
        for (std::size_t ai = 0; ai < design.alphas.size(); ++ai) {
            rates[ai].fill(kNaN);
            ses[ai].fill(kNaN);
            for (int j = 0; j < kNumAnalytic; ++j) {
                if (j >= 4 && !ex.corrections_available && !design.self_test) continue;
                const double crit = result.calibrated_critical_values[ai][j];
                int rejections = 0;
                for (const auto& s : slots)
                    if (s.ok && s.stats[j] > crit) ++rejections;
                const double rate = rejections / completed;
                rates[ai][j] = 100.0 * rate;
                ses[ai][j] = 100.0 * std::sqrt(rate * (1.0 - rate) / completed);
            }
        }
    }
    return result;
}

TableReport table_report(const std::vector<SimResult>& results) {
    std::ostringstream text;
    std::ostringstream csv;
    csv << "family,q,n,alpha_percent";
    for (const char* name : kStatisticNames) csv << "," << name;
    csv << "\n";

    char buf[64];
    text << "  q   n  alpha%";
    for (const char* name : kStatisticNames) {
        std::snprintf(buf, sizeof buf, " %8s", name);
        text << buf;
    }
    text << "\n";

    for (const SimResult& res : results) {
        for (std::size_t ai = 0; ai < res.design.alphas.size(); ++ai) {
            std::snprintf(buf, sizeof buf, "%3d %3d  %5.1f ", res.design.q, res.design.n,
                          100.0 * res.design.alphas[ai]);
            text << buf;
            csv << res.design.family.name() << "," << res.design.q << "," << res.design.n
                << "," << 100.0 * res.design.alphas[ai];
            for (int j = 0; j < kNumStatistics; ++j) {
                const double r = res.rejection_rate[ai][j];
                if (std::isnan(r)) {
                    text << "        -";
                    csv << ",";
                } else {
                    std::snprintf(buf, sizeof buf, " %8.2f", r);
                    text << buf;
                    csv << "," << r;
                }
            }
            text << "\n";
            csv << "\n";
        }
    }
    return {text.str(), csv.str()};
}

std::string power_csv(const PowerResult& result) {
    std::ostringstream csv;
    csv << "delta,alpha_percent";
    for (int j = 0; j < kNumAnalytic; ++j) csv << "," << kStatisticNames[j];
    csv << "\n";
    for (std::size_t di = 0; di < result.delta_grid.size(); ++di) {
        for (std::size_t ai = 0; ai < result.design.alphas.size(); ++ai) {
            csv << result.delta_grid[di] << "," << 100.0 * result.design.alphas[ai];
            for (int j = 0; j < kNumAnalytic; ++j) {
                csv << ",";
                const double v = result.power[di][ai][j];
                if (!std::isnan(v)) csv << v;
            }
            csv << "\n";
        }
    }
    return csv.str();
}

namespace {

nlohmann::json design_json(const SimDesign& d) {
    nlohmann::json j;
    j["family"] = d.family.name();
    j["n"] = d.n;
    j["p"] = d.p;
    j["q"] = d.q;
    j["phi"] = d.phi;
    j["beta"] = d.beta_true;
    j["beta10"] = d.beta10;
    j["alphas"] = d.alphas;
    j["replicates"] = d.replicates;
    j["bootstrap_b"] = d.bootstrap_b;
    j["covariate_seed"] = d.covariate_seed;
    j["noise_seed"] = d.noise_seed;
    j["delta_grid"] = d.delta_grid;
    j["calibration_replicates"] = d.calibration_replicates;
    return j;
}

nlohmann::json row_json(const std::array<double, kNumStatistics>& row, int count) {
    nlohmann::json j = nlohmann::json::object();
    for (int i = 0; i < count; ++i) {
        const double v = row[i];
        if (!std::isnan(v)) j[kStatisticNames[i]] = v;
    }
    return j;
}

}  // namespace

std::string sim_result_json(const SimResult& result, int indent) {
    nlohmann::json j;
    j["design"] = design_json(result.design);
    j["failure_count"] = result.failure_count;
    j["completed_replicates"] = result.completed_replicates;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t ai = 0; ai < result.design.alphas.size(); ++ai) {
        nlohmann::json row;
        row["alpha"] = result.design.alphas[ai];
        row["rejection_rate_percent"] = row_json(result.rejection_rate[ai], kNumStatistics);
        row["mc_standard_error_percent"] =
            row_json(result.mc_standard_error[ai], kNumStatistics);
        nlohmann::json crit = nlohmann::json::object();
        for (int jx = 0; jx < kNumAnalytic; ++jx)
            if (!std::isnan(result.critical_values[ai][jx]))
                crit[kStatisticNames[jx]] = result.critical_values[ai][jx];
        row["empirical_critical_values"] = crit;
        rows.push_back(row);
    }
    j["levels"] = rows;
    return j.dump(indent);
}

std::string power_result_json(const PowerResult& result, int indent) {
    nlohmann::json j;
    j["design"] = design_json(result.design);
    nlohmann::json grid = nlohmann::json::array();
    for (std::size_t di = 0; di < result.delta_grid.size(); ++di) {
        nlohmann::json point;
        point["delta"] = result.delta_grid[di];
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t ai = 0; ai < result.design.alphas.size(); ++ai) {
            nlohmann::json row;
            row["alpha"] = result.design.alphas[ai];
            nlohmann::json rates = nlohmann::json::object();
            nlohmann::json ses = nlohmann::json::object();
            for (int jx = 0; jx < kNumAnalytic; ++jx) {
                if (!std::isnan(result.power[di][ai][jx]))
                    rates[kStatisticNames[jx]] = result.power[di][ai][jx];
                if (!std::isnan(result.mc_standard_error[di][ai][jx]))
                    ses[kStatisticNames[jx]] = result.mc_standard_error[di][ai][jx];
            }
            row["power_percent"] = rates;
            row["mc_standard_error_percent"] = ses;
            rows.push_back(row);
        }
        point["levels"] = rows;
        grid.push_back(point);
    }
    j["grid"] = grid;
    return j.dump(indent);
}

namespace {

std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

}  // namespace

SimDesign parse_sim_design(const std::string& text) {
    SimDesign d;
    std::vector<std::string> problems;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                problems.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "family") d.family = FamilySpec::parse(value);
            else if (key == "n") d.n = std::stoi(value);
            else if (key == "p") d.p = std::stoi(value);
            else if (key == "q") d.q = std::stoi(value);
            else if (key == "phi") d.phi = std::stod(value);
            else if (key == "beta") d.beta_true = parse_double_list(value);
            else if (key == "beta10") d.beta10 = parse_double_list(value);
            else if (key == "alphas") d.alphas = parse_double_list(value);
            else if (key == "reps") d.replicates = std::stoi(value);
            else if (key == "boot") d.bootstrap_b = std::stoi(value);
            else if (key == "covariate_seed") d.covariate_seed = std::stoull(value);
            else if (key == "noise_seed") d.noise_seed = std::stoull(value);
            else if (key == "delta_grid") d.delta_grid = parse_double_list(value);
            else if (key == "calibration_reps") d.calibration_replicates = std::stoi(value);
            else if (key == "threads") d.threads = std::stoi(value);
            else problems.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        } catch (const std::exception& e) {
            problems.push_back("line " + std::to_string(lineno) + ": bad value for '" + key +
                               "': " + e.what());
        }
    }
    try {
        validate_design(d);
    } catch (const simulation_error& e) {
        problems.push_back(e.what());
    }
    if (!problems.empty()) {
        std::string all = "design config problems:";
        for (const auto& p : problems) all += "\n  - " + p;
        throw simulation_error(all);
    }
    return d;
}

std::string sim_design_to_string(const SimDesign& d) {
    std::ostringstream out;
    out << "family = " << d.family.name() << "\n";
    out << "n = " << d.n << "\np = " << d.p << "\nq = " << d.q << "\n";
    out << "phi = " << d.phi << "\n";
    auto write_list = [&out](const char* key, const std::vector<double>& v) {
        if (v.empty()) return;
        out << key << " = ";
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
        out << "\n";
    };
    write_list("beta", d.beta_true);
    write_list("beta10", d.beta10);
    write_list("alphas", d.alphas);
    out << "reps = " << d.replicates << "\n";
    if (d.bootstrap_b > 0) out << "boot = " << d.bootstrap_b << "\n";
    out << "covariate_seed = " << d.covariate_seed << "\n";
    out << "noise_seed = " << d.noise_seed << "\n";
    write_list("delta_grid", d.delta_grid);
    if (!d.delta_grid.empty()) out << "calibration_reps = " << d.calibration_replicates << "\n";
    out << "threads = " << d.threads << "\n";
    return out.str();
}

}  // namespace symreg
