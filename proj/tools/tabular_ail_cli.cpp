// tabular-ail: environment generation, experiment sweeps, plot tables and
// invariant checks. Exit codes: 0 success, 1 runtime failure, 2 usage.

#include "tabular_ail.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>

namespace ta = tabular_ail;
namespace harness = tabular_ail::harness;

namespace {

constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenEnvArgs {
    std::string kind;
    std::size_t states = 20;
    std::size_t actions = 5;
    std::size_t horizon = 20;
    std::size_t m = 100;
    std::uint64_t seed = 0;
    std::string out;
};

int gen_env(const GenEnvArgs& a) {
    ta::TabularMdp mdp = [&] {
        try {
            if (a.kind == "reset-cliff") return ta::build_reset_cliff({a.states, a.actions, a.horizon, a.m});
            return ta::build_random_mdp(a.states, a.actions, a.horizon, a.seed);
        } catch (const ta::ConfigError& e) {
            throw UsageError(e.what());
        }
    }();
    const double expert_value = a.kind == "reset-cliff"
                                    ? ta::evaluate_policy_direct(mdp, ta::reset_cliff_expert({a.states, a.actions, a.horizon, a.m}))
                                    : ta::value_iteration(mdp).value;
    ta::save_mdp(mdp, a.out);
    std::cout << "wrote " << a.out << "\nexpert value: " << std::setprecision(10) << expert_value << '\n';
    return 0;
}

int run(const std::string& config_path, std::optional<std::size_t> jobs, const std::string& output,
        const std::string& abstraction) {
    auto cfg = harness::load_config(config_path);
    if (jobs) cfg.jobs = *jobs;
    if (!abstraction.empty()) cfg.abstraction_file = abstraction;
    if (const char* env = std::getenv("TABULAR_AIL_JOBS"); env && *env) {
        cfg.jobs = harness::detail::parse_number<std::size_t>(env, "TABULAR_AIL_JOBS");
    }
    if (!output.empty()) cfg.output_dir = output;
    const auto rows = harness::run_experiment(cfg);
    harness::write_outputs(rows, cfg.output_dir);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
    std::cout << harness::summary_csv(rows);
    std::cout << rows.size() << " cells, " << failed << " failed; outputs in " << cfg.output_dir << '\n';
    return 0;
}

int plot(const std::string& csv_path, const std::string& out) {
    std::ifstream in(csv_path);
    if (!in) throw ta::ConfigError("cannot open " + csv_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string table = harness::plot_data(buffer.str());
    if (out.empty()) {
        std::cout << table;
    } else {
        ta::write_text_file(out, table);
    }
    return 0;
}

int check(const std::string& mdp_path, std::uint64_t seed) {
    const auto mdp = ta::load_mdp(mdp_path);
    bool ok = true;
    for (const auto& c : harness::run_checks(mdp, seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular imitation learning experiments"};
    app.require_subcommand(1);

    GenEnvArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-env", "Write an environment as JSON and print the expert value");
    gen_cmd->add_option("kind", gen.kind, "reset-cliff or random")
        ->required()
        ->check(CLI::IsMember({"reset-cliff", "random"}));
    gen_cmd->add_option("--states", gen.states)->required();
    gen_cmd->add_option("--actions", gen.actions)->required();
    gen_cmd->add_option("--horizon", gen.horizon)->required();
    gen_cmd->add_option("--m", gen.m, "Reset Cliff initial-distribution parameter");
    gen_cmd->add_option("--seed", gen.seed, "Seed for random MDPs");
    gen_cmd->add_option("--out", gen.out, "Output JSON path")->required();

    std::string config_path, run_output, abstraction_path;
    std::optional<std::size_t> jobs;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep from a config file");
    run_cmd->add_option("config", config_path)->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--jobs", jobs, "Parallel cells (TABULAR_AIL_JOBS overrides)");
    run_cmd->add_option("--output", run_output, "Output directory (overrides config)");
    run_cmd->add_option("--abstraction", abstraction_path, "State abstraction JSON (needed by mbtail-abs)")
        ->check(CLI::ExistingFile);

    std::string csv_path, plot_out;
    auto* plot_cmd = app.add_subcommand("plot-data", "Turn results.csv into a gnuplot table");
    plot_cmd->add_option("csv", csv_path)->required();
    plot_cmd->add_option("--out", plot_out);

    std::string mdp_path;
    std::uint64_t check_seed = 0;
    auto* check_cmd = app.add_subcommand("check", "Run invariant checks on an MDP file");
    check_cmd->add_option("mdp", mdp_path)->required()->check(CLI::ExistingFile);
    check_cmd->add_option("--seed", check_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kUsage;
    }

    try {
        if (*gen_cmd) return gen_env(gen);
        if (*run_cmd) return run(config_path, jobs, run_output, abstraction_path);
        if (*plot_cmd) return plot(csv_path, plot_out);
        if (*check_cmd) return check(mdp_path, check_seed);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n' << gen_cmd->help();
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kUsage;
}
