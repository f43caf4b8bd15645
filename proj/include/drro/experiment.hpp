#pragma once

/// Run planning and execution, run-log CSV files, frontier aggregation, and environment replay JSON.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "drro/config.hpp"

namespace drro {

// ---- run-log CSV ----

inline constexpr const char* kRunLogHeader =
    "step,method,seed,kl_seq,proxy_raw,gold_raw,proxy_improvement,gold_improvement,budget";

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string run_log_csv(std::span<const RunLog> logs) {
    std::string out = kRunLogHeader;
    out += '\n';
    for (const auto& r : logs) {
        for (char c : r.method)
            if (c == ',' || c == '"' || c == '\n') throw std::invalid_argument("run_log_csv: method label needs quoting");
        out += std::to_string(r.step) + ',' + r.method + ',' + std::to_string(r.seed) + ',' + format_real(r.kl_seq) +
               ',' + format_real(r.proxy_raw) + ',' + format_real(r.gold_raw) + ',' +
               format_real(r.proxy_improvement) + ',' + format_real(r.gold_improvement) + ',' + format_real(r.budget) +
               '\n';
    }
    return out;
}

/// Inverse of run_log_csv; rejects files whose header differs from kRunLogHeader.
inline std::vector<RunLog> parse_run_log_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kRunLogHeader) throw std::invalid_argument("run-log CSV: header mismatch");
    std::vector<RunLog> logs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 9) throw std::invalid_argument("run-log CSV: expected 9 columns in '" + line + "'");
        RunLog r;
        r.step = std::stoull(f[0]);
        r.method = f[1];
        r.seed = std::stoull(f[2]);
        r.kl_seq = std::stod(f[3]);
        r.proxy_raw = std::stod(f[4]);
        r.gold_raw = std::stod(f[5]);
        r.proxy_improvement = std::stod(f[6]);
        r.gold_improvement = std::stod(f[7]);
        r.budget = std::stod(f[8]);
        logs.push_back(std::move(r));
    }
    return logs;
}

inline std::string run_log_file_name(Method m, std::uint64_t seed) {
    return to_string(m) + "_seed" + std::to_string(seed) + ".csv";
}

/// Write via a unique temporary file in the same directory, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    static std::atomic<std::uint64_t> counter{0};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- planning ----

struct GridPoint {
    std::optional<double> delta;
    std::optional<double> alpha;
    std::optional<double> tau;
    std::optional<std::size_t> group_size;
};

inline Json to_json(const GridPoint& g) {
    auto opt = [](const auto& v) { return v ? Json(*v) : Json(nullptr); };
    return Json{{"delta", opt(g.delta)}, {"alpha", opt(g.alpha)}, {"tau", opt(g.tau)}, {"group_size", opt(g.group_size)}};
}

/// Cross product in (delta, alpha, tau, group_size) order, last axis fastest.
inline std::vector<GridPoint> expand_grid(const SweepGrid& grid) {
    auto axis = [](const auto& values) {
        using T = typename std::decay_t<decltype(values)>::value_type;
        std::vector<std::optional<T>> out;
        if (values.empty()) out.emplace_back(std::nullopt);
        for (const auto& v : values) out.emplace_back(v);
        return out;
    };
    std::vector<GridPoint> points;
    for (const auto& d : axis(grid.delta))
        for (const auto& a : axis(grid.alpha))
            for (const auto& t : axis(grid.tau))
                for (const auto& g : axis(grid.group_size)) points.push_back({d, a, t, g});
    return points;
}

struct PilotResult {
    double pilot_value = 0.0;  ///< mean promptwise l1 discrepancy
    double scaled = 0.0;       ///< (G / n) * pilot_value
};

inline PilotResult run_pilot(const SyntheticEnvironment& env, const PilotConfig& p, std::size_t group_size) {
    const double v = pilot_budget_calibration(env, p.prompts, p.samples, p.seed);
    return {v, scaled_budget(v, group_size, env.responses())};
}

struct RunSpec {
    Method method;
    std::uint64_t seed;
    TrainConfig train;
};

/// Resolved training configuration for every (method, seed) at one grid point.
inline std::vector<RunSpec> plan_runs(const ExperimentConfig& c, const SyntheticEnvironment& env,
                                      const GridPoint& point = {}) {
    std::vector<RunSpec> specs;
    for (Method m : c.methods) {
        TrainingSection t = training_for(c, m);
        if (point.group_size) t.group_size = *point.group_size;
        if (point.tau) t.tau = *point.tau;
        if (point.alpha) t.budget.alpha = *point.alpha;
        if (c.pilot && std::find(c.pilot->methods.begin(), c.pilot->methods.end(), m) != c.pilot->methods.end())
            t.budget.base = run_pilot(env, *c.pilot, t.group_size).scaled;
        if (point.delta) t.budget.base = *point.delta;
        for (std::uint64_t s : c.seeds) specs.push_back({m, s, make_train_config(t, m, s)});
    }
    return specs;
}

/// Run all specs on up to `jobs` threads; results are returned in spec order.
inline std::vector<std::vector<RunLog>> execute_runs(const SyntheticEnvironment& env, const std::vector<RunSpec>& specs,
                                                     std::size_t jobs = 1) {
    std::vector<std::vector<RunLog>> results(specs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            try {
                results[i] = run_training(env, specs[i].train);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, specs.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

// ---- frontier aggregation ----

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation (n - 1); 0 for a single value
};

inline MeanStd mean_std(std::span<const double> v) {
    require(!v.empty(), "mean_std: empty input");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline Json to_json(const FrontierSummary& f) {
    return Json{{"peak_gold", f.peak_gold},
                {"proxy_at_peak", f.proxy_at_peak},
                {"gold_proxy_gap", f.gold_proxy_gap},
                {"peak_kl", f.peak_kl},
                {"peak_step", f.peak_step}};
}

/// One object per method: mean and std over seeds of each FrontierSummary field, plus per-seed values.
inline Json frontier_json(const std::vector<RunSpec>& specs, const std::vector<std::vector<RunLog>>& logs) {
    require_same_size(specs.size(), logs.size(), "frontier_json");
    std::vector<Method> order;
    for (const auto& s : specs)
        if (std::find(order.begin(), order.end(), s.method) == order.end()) order.push_back(s.method);
    Json out = Json::array();
    for (Method m : order) {
        std::vector<double> peak, proxy, gap, kl;
        Json per_seed = Json::array();
        double budget0 = 0.0;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            if (specs[i].method != m) continue;
            const auto f = frontier(logs[i]);
            peak.push_back(f.peak_gold);
            proxy.push_back(f.proxy_at_peak);
            gap.push_back(f.gold_proxy_gap);
            kl.push_back(f.peak_kl);
            Json row = to_json(f);
            row["seed"] = specs[i].seed;
            per_seed.push_back(row);
            budget0 = specs[i].train.budget.base;
        }
        auto stat = [](const std::vector<double>& v) {
            const auto s = mean_std(v);
            return Json{{"mean", s.mean}, {"std", s.std}};
        };
        out.push_back(Json{{"method", to_string(m)},
                           {"seeds", peak.size()},
                           {"budget_base", uses_budget(m) ? budget0 : 0.0},
                           {"peak_gold", stat(peak)},
                           {"proxy_at_peak", stat(proxy)},
                           {"gold_proxy_gap", stat(gap)},
                           {"peak_kl", stat(kl)},
                           {"per_seed", per_seed}});
    }
    return out;
}

// ---- environment replay JSON ----

inline Json environment_json(const SyntheticEnvironment& env, bool include_matrices) {
    Json j{{"config", to_json(env.config)}, {"hack_bonus", env.hack_bonus}, {"agreement", env.agreement}};
    if (include_matrices) {
        auto rows = [](const std::vector<RewardVector>& m) {
            Json a = Json::array();
            for (const auto& r : m) a.push_back(r.values());
            return a;
        };
        j["gold"] = rows(env.gold);
        j["proxy"] = rows(env.proxy);
        j["initial_logits"] = env.initial.all_logits();
    }
    return j;
}

/// Rebuild from the stored configuration; explicit matrices, when present, replace the generated ones.
inline SyntheticEnvironment environment_from_json(const Json& j) {
    detail::ObjectReader r(j, "environment_document");
    const Json* cfg = r.find("config");
    if (!cfg) throw ConfigError("environment_document: missing 'config'");
    SyntheticEnvironment env = build_environment(environment_config_from_json(*cfg, "environment_document.config"));
    r.find("hack_bonus");
    r.find("agreement");
    auto matrix = [&](const Json& m, const char* what) {
        auto rows = detail::Decoder<std::vector<std::vector<double>>>::run(m, std::string("environment_document.") + what);
        if (rows.size() != env.prompts()) throw ConfigError(std::string(what) + ": wrong number of prompts");
        std::vector<RewardVector> out;
        for (auto& row : rows) {
            if (row.size() != env.responses()) throw ConfigError(std::string(what) + ": wrong number of responses");
            out.emplace_back(std::move(row));
        }
        return out;
    };
    if (const Json* g = r.find("gold")) env.gold = matrix(*g, "gold");
    if (const Json* p = r.find("proxy")) env.proxy = matrix(*p, "proxy");
    if (const Json* l = r.find("initial_logits")) {
        auto logits = detail::Decoder<std::vector<double>>::run(*l, "environment_document.initial_logits");
        env.initial = TabularSoftmaxPolicy(env.prompts(), env.responses(), std::move(logits));
        env.coverage.clear();
        for (std::size_t x = 0; x < env.prompts(); ++x) env.coverage.push_back(env.initial.policy(x));
    }
    r.finish();
    return env;
}

}  // namespace drro
