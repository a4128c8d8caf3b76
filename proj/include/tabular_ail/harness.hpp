#pragma once

// Experiment runner behind the tabular_ail CLI: config parsing, the
// (algorithm x seed x budget) sweep, CSV emission, plot tables and the
// invariant checks of the `check` subcommand.

#include "tabular_ail/algorithms.hpp"
#include "tabular_ail/mdp_io.hpp"
#include "tabular_ail/stats.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

namespace tabular_ail::harness {

inline constexpr std::string_view kResultsSchema = "# tabular-ail results v1";
inline constexpr std::string_view kSummarySchema = "# tabular-ail summary v1";

struct EnvSpec {
    /// "reset-cliff", "random" or "file".
    std::string kind = "reset-cliff";
    std::string mdp_file;
    std::size_t states = 20;
    std::size_t actions = 5;
    std::size_t horizon = 20;
    /// Initial-distribution parameter of Reset Cliff; defaults to the expert dataset size.
    std::optional<std::size_t> cliff_m;
    std::uint64_t env_seed = 0;
};

struct ExperimentConfig {
    EnvSpec env;
    std::vector<std::string> algorithms;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> budgets;
    std::size_t m = 100;
    double rfe_fraction = 0.8;
    std::uint64_t master_seed = 0;
    std::string output_dir = "results";
    std::string abstraction_file;
    std::size_t jobs = 1;
    AlgorithmConfig algo;

    void validate() const {
        if (algorithms.empty()) throw ConfigError("config: no algorithms listed");
        if (seeds.empty()) throw ConfigError("config: no seeds listed");
        if (budgets.empty()) throw ConfigError("config: empty budget grid");
        for (const auto& name : algorithms) find_algorithm(name);
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_number(const std::string& text, std::string_view what) {
    T value{};
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("config: invalid value '" + text + "' for " + std::string(what));
    }
    return value;
}

/// "a, b, c" or "lo..hi" (inclusive).
template <class T>
std::vector<T> parse_list(const std::string& text, std::string_view what) {
    std::vector<T> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const T lo = parse_number<T>(trim(text.substr(0, dots)), what);
        const T hi = parse_number<T>(trim(text.substr(dots + 2)), what);
        if (hi < lo) throw ConfigError("config: empty range for " + std::string(what));
        for (T v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    for (const auto& item : split(text, ',')) {
        if (!item.empty()) out.push_back(parse_number<T>(item, what));
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string sanitize(std::string text) {
    for (char& c : text) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return text;
}

} // namespace detail

/**
 * INI-style configuration. Blank lines and lines starting with '#' or ';' are
 * ignored; `[section]` headers switch section; everything else is `key = value`.
 *
 *   [experiment]  env (reset-cliff|random|file), mdp_file, states, actions, horizon,
 *                 cliff_m, env_seed, algorithms, seeds, budgets, m, rfe_fraction,
 *                 master_seed, output, abstraction, jobs
 *   [mbtail]      iterations, step (adaptive|constant), step_param, epsilon, delta,
 *                 bonus_scale, bonus_continuation
 *   [oal]         iterations, delta, policy_step, reward_diameter
 *
 * Lists are comma separated; `seeds` and `budgets` also accept `lo..hi`.
 * Relative paths are resolved against `base_dir`.
 */
inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig cfg;
    std::string section = "experiment";
    std::size_t line_no = 0;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return (path.is_absolute() || base_dir.empty()) ? path.string() : (base_dir / path).string();
    };
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": bad section");
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (section != "experiment" && section != "mbtail" && section != "oal") {
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        const std::string what = section + "." + key;
        using detail::parse_number;

        if (section == "experiment") {
            if (key == "env") cfg.env.kind = value;
            else if (key == "mdp_file") cfg.env.mdp_file = resolve(value);
            else if (key == "states") cfg.env.states = parse_number<std::size_t>(value, what);
            else if (key == "actions") cfg.env.actions = parse_number<std::size_t>(value, what);
            else if (key == "horizon") cfg.env.horizon = parse_number<std::size_t>(value, what);
            else if (key == "cliff_m") cfg.env.cliff_m = parse_number<std::size_t>(value, what);
            else if (key == "env_seed") cfg.env.env_seed = parse_number<std::uint64_t>(value, what);
            else if (key == "algorithms") {
                cfg.algorithms.clear();
                for (auto& a : detail::split(value, ',')) {
                    if (!a.empty()) cfg.algorithms.push_back(a);
                }
            } else if (key == "seeds") cfg.seeds = detail::parse_list<std::uint64_t>(value, what);
            else if (key == "budgets") cfg.budgets = detail::parse_list<std::size_t>(value, what);
            else if (key == "m") cfg.m = parse_number<std::size_t>(value, what);
            else if (key == "rfe_fraction") cfg.rfe_fraction = parse_number<double>(value, what);
            else if (key == "master_seed") cfg.master_seed = parse_number<std::uint64_t>(value, what);
            else if (key == "output") cfg.output_dir = resolve(value);
            else if (key == "abstraction") cfg.abstraction_file = resolve(value);
            else if (key == "jobs") cfg.jobs = parse_number<std::size_t>(value, what);
            else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key " + what);
        } else if (section == "mbtail") {
            auto& mb = cfg.algo.mbtail;
            if (key == "iterations") mb.optimizer.iterations = parse_number<std::size_t>(value, what);
            else if (key == "step") {
                if (value == "adaptive") mb.optimizer.step_kind = StepSizeKind::adaptive;
                else if (value == "constant") mb.optimizer.step_kind = StepSizeKind::constant;
                else throw ConfigError("config: step must be adaptive or constant");
            } else if (key == "step_param") mb.optimizer.step_param = parse_number<double>(value, what);
            else if (key == "epsilon") mb.rfe.epsilon = parse_number<double>(value, what);
            else if (key == "delta") mb.rfe.delta = parse_number<double>(value, what);
            else if (key == "bonus_scale") mb.rfe.constants.scale = parse_number<double>(value, what);
            else if (key == "bonus_continuation") mb.rfe.constants.continuation = parse_number<double>(value, what);
            else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key " + what);
        } else {
            auto& oal = cfg.algo.oal;
            if (key == "iterations") oal.iterations = parse_number<std::size_t>(value, what);
            else if (key == "delta") oal.delta = parse_number<double>(value, what);
            else if (key == "policy_step") oal.policy_step = parse_number<double>(value, what);
            else if (key == "reward_diameter") oal.reward_diameter = parse_number<double>(value, what);
            else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key " + what);
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), std::filesystem::path(path).parent_path());
}

struct Environment {
    TabularMdp mdp;
    Policy expert;
};

/// Reset Cliff uses its expert action; other environments use the optimal policy.
inline Environment build_environment(const ExperimentConfig& cfg) {
    const auto& e = cfg.env;
    if (e.kind == "reset-cliff") {
        ResetCliffSpec spec{e.states, e.actions, e.horizon, e.cliff_m.value_or(cfg.m)};
        return {build_reset_cliff(spec), reset_cliff_expert(spec)};
    }
    TabularMdp mdp = e.kind == "random" ? build_random_mdp(e.states, e.actions, e.horizon, e.env_seed)
                     : e.kind == "file" ? load_mdp(e.mdp_file)
                                        : throw ConfigError("config: unknown env '" + e.kind + "'");
    if (!mdp.has_rewards()) throw ConfigError("config: environment needs rewards to define the expert");
    Policy expert = value_iteration(mdp).policy;
    return {std::move(mdp), std::move(expert)};
}

struct ResultRow {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    std::size_t interactions = 0;
    std::size_t m = 0;
    double imitation_gap = 0.0;
    double wall_time_ms = 0.0;
    std::size_t rfe_episodes = 0;
    std::size_t rollout_episodes = 0;
    std::string error;
};

/// Per-cell seed from (master seed, algorithm name, seed index).
inline std::uint64_t cell_seed(std::uint64_t master, const std::string& algorithm, std::uint64_t seed) {
    Rng rng = make_rng({master, fnv1a(algorithm), seed});
    return rng();
}

/// Runs every (algorithm, seed, budget) cell, `jobs` at a time. Rows come back
/// in (algorithm, seed, budget) order regardless of completion order; a failed
/// cell becomes a row with the error column set.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Environment env = build_environment(cfg);
    AlgorithmConfig algo = cfg.algo;
    if (!cfg.abstraction_file.empty()) algo.abstraction = abstraction_from_json(read_json_file(cfg.abstraction_file));

    struct Cell {
        std::string algorithm;
        std::uint64_t seed;
        std::size_t budget;
    };
    std::vector<Cell> cells;
    for (const auto& a : cfg.algorithms) {
        for (auto s : cfg.seeds) {
            for (auto b : cfg.budgets) cells.push_back({a, s, b});
        }
    }
    std::vector<ResultRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell& c = cells[i];
            ResultRow& row = rows[i];
            row.algorithm = c.algorithm;
            row.seed = c.seed;
            row.budget = c.budget;
            row.m = cfg.m;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                SamplingEnv sampler(env.mdp);
                const GapOracle oracle(env.mdp);
                ImitationBudget budget{cfg.m, c.budget, cfg.rfe_fraction};
                const auto result = find_algorithm(c.algorithm)(sampler, oracle, env.expert, budget, algo,
                                                                cell_seed(cfg.master_seed, c.algorithm, c.seed));
                row.imitation_gap = result.imitation_gap;
                row.interactions = sampler.episodes();
                row.rfe_episodes = result.diagnostics.rfe_episodes;
                row.rollout_episodes = result.diagnostics.rollout_episodes;
            } catch (const std::exception& ex) {
                row.error = detail::sanitize(ex.what());
            }
            row.wall_time_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

/// Deterministic results table (no timings).
inline std::string results_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << kResultsSchema << '\n'
        << "algorithm,seed,budget,interactions,m,imitation_gap,rfe_episodes,rollout_episodes,error\n";
    for (const auto& r : rows) {
        out << r.algorithm << ',' << r.seed << ',' << r.budget << ',' << r.interactions << ',' << r.m << ','
            << (r.error.empty() ? detail::format_double(r.imitation_gap) : "") << ',' << r.rfe_episodes << ','
            << r.rollout_episodes << ',' << r.error << '\n';
    }
    return out.str();
}

inline std::string timings_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << "algorithm,seed,budget,wall_time_ms\n";
    for (const auto& r : rows) {
        out << r.algorithm << ',' << r.seed << ',' << r.budget << ',' << detail::format_double(r.wall_time_ms) << '\n';
    }
    return out.str();
}

struct SummaryRow {
    std::string algorithm;
    std::size_t budget;
    std::size_t runs;
    double mean_gap;
    double stderr_gap;
};

/// Mean and standard error of the gap per (algorithm, budget), in first-seen order.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::vector<std::pair<std::string, std::size_t>> keys;
    std::map<std::pair<std::string, std::size_t>, std::vector<double>> gaps;
    for (const auto& r : rows) {
        auto key = std::make_pair(r.algorithm, r.budget);
        if (!gaps.contains(key)) keys.push_back(key);
        auto& bucket = gaps[key];
        if (r.error.empty()) bucket.push_back(r.imitation_gap);
    }
    std::vector<SummaryRow> out;
    for (const auto& key : keys) {
        const auto& g = gaps[key];
        out.push_back({key.first, key.second, g.size(), stats::mean(g), stats::standard_error(g)});
    }
    return out;
}

inline std::string summary_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << kSummarySchema << '\n' << "algorithm,budget,runs,mean_gap,stderr_gap\n";
    for (const auto& s : summarize(rows)) {
        out << s.algorithm << ',' << s.budget << ',' << s.runs << ',' << detail::format_double(s.mean_gap) << ','
            << detail::format_double(s.stderr_gap) << '\n';
    }
    return out.str();
}

/// Writes results.csv, summary.csv and timings.csv into `dir`.
inline void write_outputs(const std::vector<ResultRow>& rows, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file((dir / "results.csv").string(), results_csv(rows));
    write_text_file((dir / "summary.csv").string(), summary_csv(rows));
    write_text_file((dir / "timings.csv").string(), timings_csv(rows));
}

/// Parses a results CSV back into rows; comment lines start with '#'.
inline std::vector<ResultRow> parse_results_csv(std::string_view text) {
    std::vector<ResultRow> rows;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    for (const auto& raw : detail::split(text, '\n')) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto fields = detail::split(line, ',');
        if (header.empty()) {
            header = fields;
            for (const char* need : {"algorithm", "budget", "imitation_gap"}) {
                if (std::find(header.begin(), header.end(), need) == header.end()) {
                    throw ConfigError("line " + std::to_string(line_no) + ": header lacks column '" + need + "'");
                }
            }
            continue;
        }
        if (fields.size() != header.size()) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                              " fields, got " + std::to_string(fields.size()));
        }
        ResultRow row;
        try {
            for (std::size_t i = 0; i < header.size(); ++i) {
                const auto& col = header[i];
                const auto& v = fields[i];
                if (col == "algorithm") row.algorithm = v;
                else if (col == "seed") row.seed = detail::parse_number<std::uint64_t>(v, col);
                else if (col == "budget") row.budget = detail::parse_number<std::size_t>(v, col);
                else if (col == "interactions") row.interactions = detail::parse_number<std::size_t>(v, col);
                else if (col == "m") row.m = detail::parse_number<std::size_t>(v, col);
                else if (col == "rfe_episodes") row.rfe_episodes = detail::parse_number<std::size_t>(v, col);
                else if (col == "rollout_episodes") row.rollout_episodes = detail::parse_number<std::size_t>(v, col);
                else if (col == "error") row.error = v;
            }
            if (row.error.empty()) {
                const auto gap_col = std::find(header.begin(), header.end(), "imitation_gap") - header.begin();
                row.imitation_gap = detail::parse_number<double>(fields[static_cast<std::size_t>(gap_col)], "imitation_gap");
            }
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/**
 * Whitespace-delimited table for gnuplot: one line per budget,
 * columns `budget <alg>_mean <alg>_stderr ...` per algorithm; NaN where a
 * cell is missing.
 */
inline std::string plot_data(std::string_view csv) {
    const auto summary = summarize(parse_results_csv(csv));
    std::vector<std::string> algorithms;
    std::set<std::size_t> budgets;
    std::map<std::pair<std::string, std::size_t>, SummaryRow> cells;
    for (const auto& s : summary) {
        if (std::find(algorithms.begin(), algorithms.end(), s.algorithm) == algorithms.end()) {
            algorithms.push_back(s.algorithm);
        }
        budgets.insert(s.budget);
        cells.emplace(std::make_pair(s.algorithm, s.budget), s);
    }
    std::ostringstream out;
    out << "# interactions";
    for (const auto& a : algorithms) out << ' ' << a << "_mean " << a << "_stderr";
    out << '\n';
    for (auto b : budgets) {
        out << b;
        for (const auto& a : algorithms) {
            auto it = cells.find({a, b});
            if (it == cells.end() || it->second.runs == 0) {
                out << " NaN NaN";
            } else {
                out << ' ' << detail::format_double(it->second.mean_gap) << ' '
                    << detail::format_double(it->second.stderr_gap);
            }
        }
        out << '\n';
    }
    return out.str();
}

struct CheckOutcome {
    std::string name;
    bool passed;
    std::string detail;
};

/// Invariant checks on one MDP: occupancy normalization, dual value
/// equivalence, planning optimality, sampling consistency.
inline std::vector<CheckOutcome> run_checks(const TabularMdp& mdp, std::uint64_t seed, std::size_t samples = 20000) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    Rng rng(seed);
    std::vector<CheckOutcome> out;
    const StateActionTable rewards = mdp.has_rewards() ? mdp.rewards() : random_rewards(H, S, A, 0.0, 1.0, rng);

    double worst_norm = 0.0, worst_dual = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Policy pi = random_policy(H, S, A, rng);
        const OccupancyMeasure d = compute_occupancy(mdp, pi);
        for (std::size_t h = 0; h < H; ++h) worst_norm = std::max(worst_norm, std::abs(d.table().layer_sum(h) - 1.0));
        worst_dual = std::max(worst_dual, std::abs(policy_value(d, rewards) - evaluate_policy_direct(mdp, pi, rewards)));
    }
    out.push_back({"occupancy-normalization", worst_norm <= 1e-8, "max layer deviation " + detail::format_double(worst_norm)});
    out.push_back({"dual-equivalence", worst_dual <= 1e-8, "max value difference " + detail::format_double(worst_dual)});

    const PlanningResult best = value_iteration(mdp, rewards);
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
        const Policy pi = i % 2 == 0 ? random_deterministic_policy(H, S, A, rng) : random_policy(H, S, A, rng);
        worst_excess = std::max(worst_excess, evaluate_policy_direct(mdp, pi, rewards) - best.value);
    }
    out.push_back({"planning-optimality", worst_excess <= 1e-9,
                   "max probe excess over optimum " + detail::format_double(worst_excess)});

    const Policy pi = random_policy(H, S, A, rng);
    const OccupancyMeasure d = compute_occupancy(mdp, pi);
    StateActionTable freq(H, S, A, 0.0);
    for (std::size_t i = 0; i < samples; ++i) {
        const Trajectory tr = rollout(mdp, pi, rng);
        for (std::size_t h = 0; h < H; ++h) freq(h, tr[h].state, tr[h].action) += 1.0;
    }
    double worst_z = 0.0;
    const double n = static_cast<double>(samples);
    for (std::size_t i = 0; i < freq.size(); ++i) {
        const double p = d.table().data()[i];
        const double sd = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
        worst_z = std::max(worst_z, std::abs(freq.data()[i] / n - p) / sd);
    }
    out.push_back({"sampling-consistency", worst_z <= 5.0, "max |z| " + detail::format_double(worst_z)});
    return out;
}

} // namespace tabular_ail::harness
