#include "symreg/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "symreg/dataset.hpp"
#include "symreg/estimate.hpp"
#include "symreg/resample.hpp"
#include "symreg/simlab.hpp"
#include "symreg/testsuite.hpp"

namespace symreg::cli {

namespace {

using nlohmann::json;

struct ModelArgs {
    std::string data_path;
    std::string response;
    std::string family_text = "normal";
    bool log_scale = false;
    std::vector<std::string> test_columns;
    std::vector<double> null_values;
};

struct Problem {
    Dataset dataset;
    std::vector<std::string> design_names;  // "(intercept)" first
    std::shared_ptr<DesignPartition> partition;
    Eigen::VectorXd response;               // raw (t when log_scale)
    FamilySpec family;
};

Problem build_problem(const ModelArgs& args, bool need_test_columns) {
    Problem prob;
    prob.dataset = load_csv(args.data_path);
    prob.family = FamilySpec::parse(args.family_text);

    const int resp_idx = prob.dataset.column_index(args.response);
    if (resp_idx < 0)
        throw data_error("response column '" + args.response + "' not found in " +
                         args.data_path);

    const int n = prob.dataset.rows();
    const int p = prob.dataset.cols();  // intercept replaces the response column
    prob.design_names.push_back("(intercept)");
    Eigen::MatrixXd x(n, p);
    x.col(0).setOnes();
    int out_col = 1;
    for (int j = 0; j < prob.dataset.cols(); ++j) {
        if (j == resp_idx) continue;
        x.col(out_col++) = prob.dataset.table.col(j);
        prob.design_names.push_back(prob.dataset.columns[j]);
    }
    prob.response = prob.dataset.table.col(resp_idx);
    if (n <= p)
        throw data_error("need more rows than design columns (n=" + std::to_string(n) +
                         ", p=" + std::to_string(p) + ")");

    std::vector<int> tested;
    Eigen::VectorXd beta10;
    if (need_test_columns) {
        if (args.test_columns.empty())
            throw data_error("--test must name at least one design column");
        for (const auto& name : args.test_columns) {
            int idx = -1;
            for (std::size_t k = 0; k < prob.design_names.size(); ++k)
                if (prob.design_names[k] == name) idx = static_cast<int>(k);
            if (idx < 0)
                throw data_error("--test column '" + name + "' is not a design column");
            tested.push_back(idx);
        }
        beta10 = Eigen::VectorXd::Zero(tested.size());
        if (!args.null_values.empty()) {
            if (args.null_values.size() != tested.size())
                throw data_error("--null must supply one value per tested column");
            for (std::size_t i = 0; i < args.null_values.size(); ++i)
                beta10(i) = args.null_values[i];
        }
    } else {
        tested = {0};
        beta10 = Eigen::VectorXd::Zero(1);
    }
    prob.partition = std::make_shared<DesignPartition>(std::move(x), tested, beta10);
    return prob;
}

std::pair<ModelSpec, FitResult> fit_problem(const Problem& prob, bool log_scale) {
    ModelSpec spec;
    spec.partition = prob.partition;
    spec.family = prob.family;
    spec.log_scale = log_scale;
    FitResult result;
    if (log_scale) {
        result = fit_logsymmetric(*prob.partition, prob.response, prob.family);
        spec.y = prob.response.array().log();
    } else {
        spec.y = prob.response;
        result = fit(spec);
    }
    return {std::move(spec), std::move(result)};
}

json fit_json(const Problem& prob, const ModelSpec& spec, const FitResult& res) {
    json j;
    j["family"] = prob.family.name();
    j["n"] = prob.partition->n();
    j["p"] = prob.partition->p();
    j["log_scale"] = spec.log_scale;
    const StandardErrors se = standard_errors(spec, res);
    json coef = json::array();
    for (int k = 0; k < prob.partition->p(); ++k)
        coef.push_back({{"name", prob.design_names[k]},
                        {"estimate", res.beta(k)},
                        {"std_error", se.beta_se(k)}});
    j["coefficients"] = coef;
    j["phi"] = {{"estimate", res.phi}, {"std_error", se.phi_se}};
    j["loglik"] = res.loglik;
    const int k_params = prob.partition->p() + 1;
    if (prob.partition->n() - k_params - 1 > 0)
        j["aicc"] = aicc(res.loglik, prob.partition->n(), k_params);
    else
        j["aicc"] = nullptr;
    j["converged"] = res.converged;
    j["degenerate"] = res.degenerate;
    j["iterations"] = res.iterations;
    if (spec.log_scale) {
        const Eigen::VectorXd medians = fitted_medians(*prob.partition, res);
        j["fitted_medians"] = std::vector<double>(medians.data(), medians.data() + medians.size());
    }
    return j;
}

void emit(const json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw data_error("cannot write output file '" + out_path + "'");
        out << text;
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path.string() + "'");
    out << content;
}

json manifest_json(const std::string& command, const SimDesign& design,
                   long long wall_ms, const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["design"] = json::parse(R"({})");
    m["design"]["text"] = sim_design_to_string(design);
    m["seeds"] = {{"covariate_seed", design.covariate_seed},
                  {"noise_seed", design.noise_seed}};
    m["threads"] = design.threads;
    m["wall_ms"] = wall_ms;
    m["outputs"] = outputs;
    return m;
}

int cmd_fit(const ModelArgs& args, const std::string& out_path) {
    const Problem prob = build_problem(args, /*need_test_columns=*/false);
    const auto [spec, result] = fit_problem(prob, args.log_scale);
    emit(fit_json(prob, spec, result), out_path);
    return result.converged || result.degenerate ? 0 : 1;
}

int cmd_test(const ModelArgs& args, int boot, std::uint64_t seed, int threads,
             const std::vector<double>& alphas, const std::string& out_path) {
    const Problem prob = build_problem(args, /*need_test_columns=*/true);
    const auto [spec, unres] = fit_problem(prob, args.log_scale);
    const FitResult res = fit_restricted(spec);

    const TestReport report = test_report(unres, res, *prob.partition, prob.family);
    json j = json::parse(test_report_json(report));
    j["family"] = prob.family.name();
    j["tested_columns"] = args.test_columns;
    json null_values = json::array();
    for (int i = 0; i < prob.partition->q(); ++i) null_values.push_back(prob.partition->beta10()(i));
    j["null_values"] = null_values;

    if (boot > 0) {
        BootstrapOptions opt;
        opt.threads = threads;
        const auto boot_results = bootstrap_test(spec, unres, res, boot, seed, opt);
        json jb;
        jb["b"] = boot;
        jb["seed"] = seed;
        jb["failures"] = boot_results[0].failures;
        json pv;
        for (const auto& b : boot_results) pv[b.statistic_name] = b.pvalue;
        jb["pvalues"] = pv;
        json crit = json::object();
        for (const auto& b : boot_results) {
            json per_alpha = json::object();
            for (double a : alphas) {
                char key[32];
                std::snprintf(key, sizeof key, "%g", a);
                per_alpha[key] = b.critical_value(a);
            }
            crit[b.statistic_name] = per_alpha;
        }
        jb["critical_values"] = crit;
        j["bootstrap"] = jb;
    }
    emit(j, out_path);
    return 0;
}

SimDesign load_design(const std::string& config_path, int reps_override,
                      int boot_override, std::int64_t seed_override, int threads) {
    std::ifstream in(config_path);
    if (!in) throw data_error("cannot open config file '" + config_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    SimDesign design = parse_sim_design(buf.str());
    if (reps_override > 0) design.replicates = reps_override;
    if (boot_override >= 0) design.bootstrap_b = boot_override;
    if (seed_override >= 0) design.noise_seed = static_cast<std::uint64_t>(seed_override);
    if (threads > 0) design.threads = threads;
    return design;
}

int cmd_simulate_size(const SimDesign& design, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    const SimResult result = size_study(design);
    const auto wall =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    const TableReport table = table_report({result});
    std::cout << table.text;

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "results.csv", table.csv);
    write_file(dir / "results.json", sim_result_json(result) + "\n");
    write_file(dir / "manifest.json",
               manifest_json("simulate-size", design, wall.count(),
                             {"results.csv", "results.json"})
                       .dump(2) +
                   "\n");
    return 0;
}

int cmd_simulate_power(const SimDesign& design, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    const PowerResult result = power_study(design);
    const auto wall =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    std::cout << power_csv(result);

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "power.csv", power_csv(result));
    write_file(dir / "power.json", power_result_json(result) + "\n");
    write_file(dir / "manifest.json",
               manifest_json("simulate-power", design, wall.count(), {"power.csv", "power.json"})
                       .dump(2) +
                   "\n");
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"symmetric and log-symmetric linear regression: estimation, "
                 "small-sample corrected tests, bootstrap, Monte Carlo lab"};
    app.require_subcommand(1);

    ModelArgs margs;
    std::string out_path;
    int boot = 0;
    std::int64_t seed = 0;
    int threads = 1;
    std::vector<double> alphas = {0.10, 0.05, 0.01};

    auto add_model_flags = [&](CLI::App* cmd, bool with_test) {
        cmd->add_option("--data", margs.data_path, "CSV file (header row required)")->required();
        cmd->add_option("--response", margs.response, "response column name")->required();
        cmd->add_option("--family", margs.family_text,
                        "normal|cauchy|student-t:NU|logistic1|logistic2|pexp:K");
        cmd->add_flag("--log", margs.log_scale, "log-symmetric model (positive response)");
        cmd->add_option("--out", out_path, "also write the JSON report to this file");
        if (with_test) {
            cmd->add_option("--test", margs.test_columns, "tested design columns")
                ->delimiter(',')
                ->required();
            cmd->add_option("--null", margs.null_values, "null values (default all 0)")
                ->delimiter(',');
            cmd->add_option("--boot", boot, "parametric bootstrap replicates");
            cmd->add_option("--seed", seed, "bootstrap seed");
            cmd->add_option("--threads", threads, "bootstrap worker threads");
            cmd->add_option("--alpha", alphas, "levels for bootstrap critical values")
                ->delimiter(',');
        }
    };

    CLI::App* fit_cmd = app.add_subcommand("fit", "maximum likelihood fit");
    add_model_flags(fit_cmd, false);

    CLI::App* test_cmd = app.add_subcommand("test", "hypothesis tests with corrections");
    add_model_flags(test_cmd, true);

    std::string config_path;
    std::string out_dir = ".";
    int reps_override = 0;
    int boot_override = -1;
    std::int64_t seed_override = -1;
    int sim_threads = 0;
    std::vector<double> sim_alphas;
    auto add_sim_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "design config file")->required();
        cmd->add_option("--alpha", sim_alphas, "override config alpha levels")->delimiter(',');
        cmd->add_option("--reps", reps_override, "override replicate count");
        cmd->add_option("--boot", boot_override, "override bootstrap replicates");
        cmd->add_option("--seed", seed_override, "override noise seed");
        cmd->add_option("--threads", sim_threads, "worker threads");
        cmd->add_option("--out", out_dir, "output directory");
    };
    CLI::App* size_cmd = app.add_subcommand("simulate-size", "null rejection rate study");
    add_sim_flags(size_cmd);
    CLI::App* power_cmd = app.add_subcommand("simulate-power", "size-corrected power study");
    add_sim_flags(power_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(margs, out_path);
        if (test_cmd->parsed())
            return cmd_test(margs, boot, static_cast<std::uint64_t>(seed), threads, alphas,
                            out_path);
        if (size_cmd->parsed() || power_cmd->parsed()) {
            SimDesign design;
            try {
                design = load_design(config_path, reps_override, boot_override, seed_override,
                                     sim_threads);
                if (!sim_alphas.empty()) design.alphas = sim_alphas;
            } catch (const simulation_error& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
            return size_cmd->parsed() ? cmd_simulate_size(design, out_dir)
                                      : cmd_simulate_power(design, out_dir);
        }
    } catch (const convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const bootstrap_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const simulation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace symreg::cli
