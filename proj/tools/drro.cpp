// Command-line front end: solve, compare-dro, train, sweep, verify, calibrate, config.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drro/config.hpp"
#include "drro/dro_baseline.hpp"
#include "drro/experiment.hpp"
#include "drro/robust_simplex.hpp"
#include "drro/verify.hpp"

namespace fs = std::filesystem;
using namespace drro;

namespace {

constexpr int kExitFailure = 1;  // a verification suite failed
constexpr int kExitUsage = 2;    // malformed input or invalid configuration

std::vector<double> parse_reals(const std::string& text, char sep = ',') {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, sep);) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("cannot parse '" + cell + "' as a real number");
        }
        if (used != cell.size()) throw std::invalid_argument("cannot parse '" + cell + "' as a real number");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list of reals");
    return out;
}

MonotoneTransform parse_transform(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "identity") return MonotoneTransform(IdentityTransform{});
    if (kind == "affine") {
        const auto v = parse_reals(args);
        require(v.size() == 2, "affine transform takes a,b");
        return MonotoneTransform(AffineTransform{v[0], v[1]});
    }
    if (kind == "power") {
        const auto v = parse_reals(args);
        require(v.size() == 2, "power transform takes exponent,shift");
        return MonotoneTransform(PowerTransform{v[0], v[1]});
    }
    if (kind == "tabulated") {
        TabulatedTransform t;
        std::stringstream ss(args);
        for (std::string knot; std::getline(ss, knot, ',');) {
            const auto xy = parse_reals(knot, ':');
            require(xy.size() == 2, "tabulated knots are x:y pairs");
            t.xs.push_back(xy[0]);
            t.ys.push_back(xy[1]);
        }
        return MonotoneTransform(std::move(t));
    }
    throw std::invalid_argument("unknown transform '" + kind + "' (identity, affine:a,b, power:e,s, tabulated:x:y,...)");
}

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    return parse_experiment(read_file(path));
}

fs::path output_root(const ExperimentConfig& c, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("DRRO_OUTPUT_DIR"); env && *env) return env;
    return c.output_dir;
}

Json solve_json(const RewardVector& r, double delta, std::optional<double> tau, std::optional<double> p) {
    Json out{{"rewards", r.values()}, {"delta", delta}};
    PolicyVector policy;
    if (delta == 0.0) {
        policy = greedy_policy(r);
        out["greedy"] = true;
        out["t0"] = nullptr;
        out["t_star"] = nullptr;
    } else {
        const auto sol = solve_water_filling(r, delta);
        policy = sol.policy;
        out["greedy"] = false;
        out["t0"] = sol.t0;
        out["t_star"] = sol.t_star;
        out["sort_permutation"] = sol.sort_permutation;
    }
    const auto adv = worst_case_regret(policy, r, delta);
    out["policy"] = policy.probs();
    out["worst_case_regret"] = adv.value;
    out["adversary_index"] = adv.adversary_index;
    out["hard_utility"] = hard_utility(policy, r, delta);
    const auto dro = solve_dro(r, delta);
    out["dro"] = Json{{"policy", dro.policy.probs()},
                      {"support_size", dro.support_size},
                      {"worst_case_value", dro.objective},
                      {"worst_case_regret", worst_case_regret(dro.policy, r, delta).value}};
    if (tau) out["soft_utility"] = soft_utility(policy, r, delta, *tau);
    if (p) out["lp_robust_regret"] = lp_robust_regret(policy, r, delta, *p);
    return out;
}

struct TrainResult {
    std::vector<RunSpec> specs;
    std::vector<std::vector<RunLog>> logs;
};

TrainResult train_into(const ExperimentConfig& c, const SyntheticEnvironment& env, const GridPoint& point,
                       const fs::path& dir, std::size_t jobs) {
    TrainResult res;
    res.specs = plan_runs(c, env, point);
    res.logs = execute_runs(env, res.specs, jobs);
    for (std::size_t i = 0; i < res.specs.size(); ++i)
        write_file_atomic(dir / run_log_file_name(res.specs[i].method, res.specs[i].seed), run_log_csv(res.logs[i]));
    return res;
}

int cmd_train(const std::string& config_path, const std::string& out_flag, std::size_t jobs, bool quiet) {
    const auto c = load_config(config_path);
    const fs::path dir = output_root(c, out_flag);
    const auto env = build_environment(c.environment);
    const auto res = train_into(c, env, {}, dir, jobs);
    const Json frontier = frontier_json(res.specs, res.logs);
    write_file_atomic(dir / "frontier.json", frontier.dump(2) + "\n");
    write_file_atomic(dir / "environment.json", environment_json(env, false).dump(2) + "\n");
    write_file_atomic(dir / "config.json", to_json(c).dump(2) + "\n");
    if (!quiet) std::cout << frontier.dump(2) << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_flag, std::size_t jobs, bool quiet) {
    const auto c = load_config(config_path);
    const auto points = expand_grid(c.sweep);
    std::cerr << "sweep: " << points.size() << " grid point(s) x " << c.methods.size() << " method(s) x "
              << c.seeds.size() << " seed(s)\n";
    const fs::path dir = output_root(c, out_flag);
    const auto env = build_environment(c.environment);
    Json all = Json::array();
    for (std::size_t g = 0; g < points.size(); ++g) {
        const auto res = train_into(c, env, points[g], dir / ("grid_" + std::to_string(g)), jobs);
        all.push_back(Json{{"grid_index", g}, {"grid", to_json(points[g])}, {"frontier", frontier_json(res.specs, res.logs)}});
    }
    write_file_atomic(dir / "sweep.json", all.dump(2) + "\n");
    write_file_atomic(dir / "config.json", to_json(c).dump(2) + "\n");
    if (!quiet) std::cout << all.dump(2) << "\n";
    return 0;
}

int cmd_verify(const std::vector<std::string>& names, std::uint64_t seed) {
    const auto& suites = verify_suites();
    std::vector<std::string> selected = names;
    if (selected.empty() || (selected.size() == 1 && selected[0] == "all")) {
        selected.clear();
        for (const auto& [name, fn] : suites) selected.push_back(name);
    }
    VerifyOptions opts;
    opts.seed = seed;
    Json report = Json::array();
    bool ok = true;
    for (const auto& name : selected) {
        const auto it = std::find_if(suites.begin(), suites.end(), [&](const auto& s) { return s.first == name; });
        if (it == suites.end()) {
            std::string known = "all";
            for (const auto& s : suites) known += ", " + s.first;
            std::cerr << "error: unknown suite '" << name << "' (available: " << known << ")\n";
            return kExitUsage;
        }
        const auto r = it->second(opts);
        ok = ok && r.passed();
        report.push_back(Json{{"suite", r.name},
                              {"cases", r.cases},
                              {"failures", r.failures},
                              {"max_violation", r.max_violation},
                              {"tolerance", r.tolerance},
                              {"passed", r.passed()}});
    }
    std::cout << Json{{"passed", ok}, {"suites", report}}.dump(2) << "\n";
    return ok ? 0 : kExitFailure;
}

int cmd_calibrate(const std::string& config_path) {
    const auto c = load_config(config_path);
    const auto env = build_environment(c.environment);
    const PilotConfig pilot = c.pilot.value_or(PilotConfig{});
    const auto res = run_pilot(env, pilot, c.training.group_size);
    std::cout << Json{{"pilot_value", res.pilot_value},
                      {"scaled_budget", res.scaled},
                      {"group_size", c.training.group_size},
                      {"responses", env.responses()},
                      {"pilot", to_json(pilot)},
                      {"hack_bonus", env.hack_bonus},
                      {"agreement", env.agreement}}
                     .dump(2)
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust regret optimization toolkit"};
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "Solve one promptwise robust-regret problem");
    std::string rewards_text;
    double delta = 0.0;
    std::optional<double> tau, p;
    solve->add_option("--rewards", rewards_text, "Comma-separated proxy rewards")->required();
    solve->add_option("--delta", delta, "l1 reward budget (0 = greedy)")->required()->check(CLI::NonNegativeNumber);
    solve->add_option("--tau", tau, "Temperature for the soft utility")->check(CLI::PositiveNumber);
    solve->add_option("--p", p, "Report the lp-ball robust regret of the solution for this p >= 1");

    auto* compare = app.add_subcommand("compare-dro", "Compare DRRO and DRO policies under a monotone true reward");
    std::string transform_text = "identity";
    compare->add_option("--rewards", rewards_text, "Comma-separated, pairwise distinct proxy rewards")->required();
    compare->add_option("--delta", delta, "l1 reward budget (> 0)")->required()->check(CLI::PositiveNumber);
    compare->add_option("--transform", transform_text,
                        "identity | affine:a,b | power:exponent,shift | tabulated:x:y,x:y,...");

    std::string config_path, out_flag;
    std::size_t jobs = 1;
    bool quiet = false;
    auto* train = app.add_subcommand("train", "Train every (method, seed) of a config; write CSV logs and frontier.json");
    auto* sweep = app.add_subcommand("sweep", "Train the cross-product sweep grid of a config; write sweep.json");
    for (auto* sub : {train, sweep}) {
        sub->add_option("--config", config_path, "Experiment config JSON (defaults when omitted)");
        sub->add_option("--output", out_flag, "Output directory (overrides DRRO_OUTPUT_DIR and the config)");
        sub->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", quiet, "Do not print the summary JSON");
    }

    auto* verify = app.add_subcommand("verify", "Run oracle and invariant suites (nonzero exit on failure)");
    std::vector<std::string> suite_names;
    std::uint64_t verify_seed = VerifyOptions{}.seed;
    verify->add_option("suites", suite_names, "Suite names or 'all'");
    verify->add_option("--seed", verify_seed, "Seed for the randomized instances");

    auto* calibrate = app.add_subcommand("calibrate", "Pilot calibration of the zero-drift budget");
    calibrate->add_option("--config", config_path, "Experiment config JSON (defaults when omitted)");

    auto* config = app.add_subcommand("config", "Print the default config, or validate and normalize one");
    config->add_option("--config", config_path, "Config to validate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*solve) {
            std::cout << solve_json(RewardVector(parse_reals(rewards_text)), delta, tau, p).dump(2) << "\n";
            return 0;
        }
        if (*compare) {
            const RewardVector r(parse_reals(rewards_text));
            const auto res = dominance_check(r, delta, parse_transform(transform_text));
            std::cout << Json{{"drro_true_value", res.drro_true_value},
                              {"dro_true_value", res.dro_true_value},
                              {"prefix_dominance", res.prefix_dominance},
                              {"drro_support", res.drro_support},
                              {"dro_support", res.dro_support}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        if (*train) return cmd_train(config_path, out_flag, jobs, quiet);
        if (*sweep) return cmd_sweep(config_path, out_flag, jobs, quiet);
        if (*verify) return cmd_verify(suite_names, verify_seed);
        if (*calibrate) return cmd_calibrate(config_path);
        if (*config) {
            std::cout << to_json(load_config(config_path)).dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
