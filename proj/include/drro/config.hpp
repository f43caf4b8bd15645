#pragma once

/// Experiment configuration and its strict JSON encoding (unknown keys and wrong types are rejected).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "drro/policy_optimizer.hpp"
#include "drro/shaping_estimators.hpp"
#include "drro/synthetic_env.hpp"

namespace drro {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Training hyperparameters shared by every method of an experiment (method and seed vary per run).
struct TrainingSection {
    std::size_t outer_iterations = 300;
    std::size_t prompt_batch = 16;
    std::size_t group_size = 16;
    double clip_radius = 0.2;
    std::size_t pg_steps = 1;
    double learning_rate = 64.0;
    double tau = 2.0;
    BudgetConfig budget;
    double adv_epsilon = 1e-6;
    double uwo_lambda = 1.0;
    std::size_t eval_interval = 5;

    bool operator==(const TrainingSection&) const = default;
};

inline TrainConfig make_train_config(const TrainingSection& t, Method method, std::uint64_t seed) {
    TrainConfig c;
    c.method = method;
    c.seed = seed;
    c.outer_iterations = t.outer_iterations;
    c.prompt_batch = t.prompt_batch;
    c.group_size = t.group_size;
    c.clip_radius = t.clip_radius;
    c.pg_steps = t.pg_steps;
    c.learning_rate = t.learning_rate;
    c.tau = t.tau;
    c.budget = t.budget;
    c.adv_epsilon = t.adv_epsilon;
    c.uwo_lambda = t.uwo_lambda;
    c.eval_interval = t.eval_interval;
    return c;
}

/// Pilot calibration of the zero-drift budget from initial-policy samples.
struct PilotConfig {
    std::size_t prompts = 64;
    std::size_t samples = 16;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::DRRO_hard, Method::DRRO_soft, Method::DRRO_soft_dynamic};

    bool operator==(const PilotConfig&) const = default;
};

/// Cross-product grid; an empty axis keeps the configured value.
struct SweepGrid {
    std::vector<double> delta;  ///< budget.base
    std::vector<double> alpha;
    std::vector<double> tau;
    std::vector<std::size_t> group_size;

    std::size_t size() const {
        auto axis = [](std::size_t k) { return k == 0 ? std::size_t{1} : k; };
        return axis(delta.size()) * axis(alpha.size()) * axis(tau.size()) * axis(group_size.size());
    }
    bool operator==(const SweepGrid&) const = default;
};

struct ExperimentConfig {
    EnvironmentConfig environment;
    TrainingSection training;
    std::map<std::string, Json> overrides;  ///< method name -> partial training object
    std::vector<Method> methods{Method::GRPO, Method::DRRO_soft_dynamic, Method::DRO};
    std::vector<std::uint64_t> seeds{0};
    std::optional<PilotConfig> pilot = PilotConfig{};
    SweepGrid sweep;
    std::string output_dir = "runs";

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string type_name(const Json& j) { return j.type_name(); }

template <class T>
T decode(const Json& j, const std::string& path);

template <>
inline double decode<double>(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number, got " + type_name(j));
    return j.get<double>();
}

template <>
inline std::uint64_t decode<std::uint64_t>(const Json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
        throw ConfigError(path + ": expected a nonnegative integer, got " + j.dump());
    return j.get<std::uint64_t>();
}

template <>
inline bool decode<bool>(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean, got " + type_name(j));
    return j.get<bool>();
}

template <>
inline std::string decode<std::string>(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string, got " + type_name(j));
    return j.get<std::string>();
}

template <>
inline Method decode<Method>(const Json& j, const std::string& path) {
    const auto name = decode<std::string>(j, path);
    try {
        return parse_method(name);
    } catch (const std::invalid_argument&) {
        std::string known;
        for (const auto& [m, s] : method_names()) known += (known.empty() ? "" : ", ") + s;
        throw ConfigError(path + ": unknown method '" + name + "' (expected one of " + known + ")");
    }
}

template <>
inline BudgetMode decode<BudgetMode>(const Json& j, const std::string& path) {
    const auto s = decode<std::string>(j, path);
    if (s == "fixed") return BudgetMode::fixed;
    if (s == "dynamic") return BudgetMode::dynamic;
    throw ConfigError(path + ": expected \"fixed\" or \"dynamic\", got '" + s + "'");
}

template <>
inline HackTargets decode<HackTargets>(const Json& j, const std::string& path) {
    const auto s = decode<std::string>(j, path);
    if (s == "low_coverage") return HackTargets::low_coverage;
    if (s == "random") return HackTargets::random;
    throw ConfigError(path + ": expected \"low_coverage\" or \"random\", got '" + s + "'");
}

template <class T>
struct Decoder {
    static T run(const Json& j, const std::string& path) { return decode<T>(j, path); }
};

template <>
struct Decoder<std::size_t> {  // also std::uint64_t on LP64
    static std::size_t run(const Json& j, const std::string& path) {
        return static_cast<std::size_t>(decode<std::uint64_t>(j, path));
    }
};

template <class T>
struct Decoder<std::vector<T>> {
    static std::vector<T> run(const Json& j, const std::string& path) {
        if (!j.is_array()) throw ConfigError(path + ": expected an array, got " + type_name(j));
        std::vector<T> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(Decoder<T>::run(j[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }
};

template <class T>
struct Decoder<std::optional<T>> {
    static std::optional<T> run(const Json& j, const std::string& path) {
        if (j.is_null()) return std::nullopt;
        return Decoder<T>::run(j, path);
    }
};

/// Reads the keys of one JSON object and rejects any key that was not read.
class ObjectReader {
  public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object, got " + type_name(j_));
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) out = Decoder<T>::run(*it, child(key));
    }

    const Json* find(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string child(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.contains(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }

  private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline Json method_list_json(const std::vector<Method>& ms) {
    Json a = Json::array();
    for (Method m : ms) a.push_back(to_string(m));
    return a;
}

inline void check(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace detail

// ---- encoders ----

inline Json to_json(const MisspecConfig& m) {
    return Json{{"noise_sigma", m.noise_sigma},
                {"hack_fraction", m.hack_fraction},
                {"hack_bonus", m.hack_bonus},
                {"hack_targets", to_string(m.hack_targets)},
                {"target_agreement", m.target_agreement ? Json(*m.target_agreement) : Json(nullptr)}};
}

inline Json to_json(const EnvironmentConfig& e) {
    return Json{{"prompts", e.prompts},
                {"responses", e.responses},
                {"seed", e.seed},
                {"misspec", to_json(e.misspec)},
                {"init_logit_scale", e.init_logit_scale},
                {"init_gold_coupling", e.init_gold_coupling},
                {"ensemble_size", e.ensemble_size},
                {"ensemble_sigma", e.ensemble_sigma},
                {"agreement_pairs", e.agreement_pairs}};
}

inline Json to_json(const BudgetConfig& b) {
    return Json{{"base", b.base}, {"alpha", b.alpha}, {"mode", to_string(b.mode)}, {"window", b.window},
                {"per_prompt", b.per_prompt}};
}

inline Json to_json(const TrainingSection& t) {
    return Json{{"outer_iterations", t.outer_iterations},
                {"prompt_batch", t.prompt_batch},
                {"group_size", t.group_size},
                {"clip_radius", t.clip_radius},
                {"pg_steps", t.pg_steps},
                {"learning_rate", t.learning_rate},
                {"tau", t.tau},
                {"budget", to_json(t.budget)},
                {"adv_epsilon", t.adv_epsilon},
                {"uwo_lambda", t.uwo_lambda},
                {"eval_interval", t.eval_interval}};
}

inline Json to_json(const PilotConfig& p) {
    return Json{{"prompts", p.prompts}, {"samples", p.samples}, {"seed", p.seed},
                {"methods", detail::method_list_json(p.methods)}};
}

inline Json to_json(const SweepGrid& g) {
    return Json{{"delta", g.delta}, {"alpha", g.alpha}, {"tau", g.tau}, {"group_size", g.group_size}};
}

inline Json to_json(const ExperimentConfig& c) {
    Json overrides = Json::object();
    for (const auto& [k, v] : c.overrides) overrides[k] = v;
    return Json{{"environment", to_json(c.environment)},
                {"training", to_json(c.training)},
                {"overrides", overrides},
                {"methods", detail::method_list_json(c.methods)},
                {"seeds", c.seeds},
                {"pilot", c.pilot ? to_json(*c.pilot) : Json(nullptr)},
                {"sweep", to_json(c.sweep)},
                {"output_dir", c.output_dir}};
}

// ---- decoders ----

inline MisspecConfig misspec_from_json(const Json& j, const std::string& path = "misspec") {
    MisspecConfig m;
    detail::ObjectReader r(j, path);
    r.read("noise_sigma", m.noise_sigma);
    r.read("hack_fraction", m.hack_fraction);
    r.read("hack_bonus", m.hack_bonus);
    r.read("hack_targets", m.hack_targets);
    r.read("target_agreement", m.target_agreement);
    r.finish();
    detail::check(m.noise_sigma >= 0.0, path + ".noise_sigma: must be >= 0");
    detail::check(m.hack_fraction >= 0.0 && m.hack_fraction < 1.0, path + ".hack_fraction: must lie in [0, 1)");
    detail::check(m.hack_bonus >= 0.0, path + ".hack_bonus: must be >= 0");
    if (m.target_agreement)
        detail::check(*m.target_agreement > 0.5 && *m.target_agreement <= 1.0,
                      path + ".target_agreement: must lie in (0.5, 1]");
    return m;
}

inline EnvironmentConfig environment_config_from_json(const Json& j, const std::string& path = "environment") {
    EnvironmentConfig e;
    detail::ObjectReader r(j, path);
    r.read("prompts", e.prompts);
    r.read("responses", e.responses);
    r.read("seed", e.seed);
    if (const Json* m = r.find("misspec")) e.misspec = misspec_from_json(*m, r.child("misspec"));
    r.read("init_logit_scale", e.init_logit_scale);
    r.read("init_gold_coupling", e.init_gold_coupling);
    r.read("ensemble_size", e.ensemble_size);
    r.read("ensemble_sigma", e.ensemble_sigma);
    r.read("agreement_pairs", e.agreement_pairs);
    r.finish();
    detail::check(e.prompts >= 1 && e.responses >= 1, path + ": prompts and responses must be >= 1");
    detail::check(e.init_logit_scale >= 0.0, path + ".init_logit_scale: must be >= 0");
    detail::check(e.ensemble_sigma >= 0.0, path + ".ensemble_sigma: must be >= 0");
    detail::check(e.agreement_pairs >= 1, path + ".agreement_pairs: must be >= 1");
    return e;
}

inline BudgetConfig budget_from_json(const Json& j, const std::string& path = "budget") {
    BudgetConfig b;
    detail::ObjectReader r(j, path);
    r.read("base", b.base);
    r.read("alpha", b.alpha);
    r.read("mode", b.mode);
    r.read("window", b.window);
    r.read("per_prompt", b.per_prompt);
    r.finish();
    return b;
}

inline TrainingSection training_from_json(const Json& j, const std::string& path = "training") {
    TrainingSection t;
    detail::ObjectReader r(j, path);
    r.read("outer_iterations", t.outer_iterations);
    r.read("prompt_batch", t.prompt_batch);
    r.read("group_size", t.group_size);
    r.read("clip_radius", t.clip_radius);
    r.read("pg_steps", t.pg_steps);
    r.read("learning_rate", t.learning_rate);
    r.read("tau", t.tau);
    if (const Json* b = r.find("budget")) t.budget = budget_from_json(*b, r.child("budget"));
    r.read("adv_epsilon", t.adv_epsilon);
    r.read("uwo_lambda", t.uwo_lambda);
    r.read("eval_interval", t.eval_interval);
    r.finish();
    try {
        validate(make_train_config(t, Method::GRPO, 0));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return t;
}

inline PilotConfig pilot_from_json(const Json& j, const std::string& path = "pilot") {
    PilotConfig p;
    detail::ObjectReader r(j, path);
    r.read("prompts", p.prompts);
    r.read("samples", p.samples);
    r.read("seed", p.seed);
    r.read("methods", p.methods);
    r.finish();
    detail::check(p.prompts >= 1 && p.samples >= 1, path + ": prompts and samples must be >= 1");
    return p;
}

inline SweepGrid sweep_from_json(const Json& j, const std::string& path = "sweep") {
    SweepGrid g;
    detail::ObjectReader r(j, path);
    r.read("delta", g.delta);
    r.read("alpha", g.alpha);
    r.read("tau", g.tau);
    r.read("group_size", g.group_size);
    r.finish();
    for (double d : g.delta) detail::check(d >= 0.0, path + ".delta: values must be >= 0");
    for (double a : g.alpha) detail::check(a >= 0.0, path + ".alpha: values must be >= 0");
    for (double t : g.tau) detail::check(t > 0.0, path + ".tau: values must be > 0");
    for (std::size_t k : g.group_size) detail::check(k >= 2, path + ".group_size: values must be >= 2");
    return g;
}

/// Training section for one method: the shared section with that method's override patch applied.
inline TrainingSection training_for(const ExperimentConfig& c, Method m) {
    const auto it = c.overrides.find(to_string(m));
    if (it == c.overrides.end()) return c.training;
    Json merged = to_json(c.training);
    merged.merge_patch(it->second);
    return training_from_json(merged, "overrides." + it->first);
}

inline ExperimentConfig experiment_from_json(const Json& j) {
    ExperimentConfig c;
    detail::ObjectReader r(j, "config");
    if (const Json* e = r.find("environment")) c.environment = environment_config_from_json(*e, "environment");
    if (const Json* t = r.find("training")) c.training = training_from_json(*t, "training");
    if (const Json* o = r.find("overrides")) {
        if (!o->is_object()) throw ConfigError("overrides: expected an object");
        for (const auto& [k, v] : o->items()) {
            detail::decode<Method>(Json(k), "overrides." + k);
            if (!v.is_object()) throw ConfigError("overrides." + k + ": expected an object");
            c.overrides[k] = v;
        }
    }
    r.read("methods", c.methods);
    r.read("seeds", c.seeds);
    if (const Json* p = r.find("pilot")) c.pilot = p->is_null() ? std::nullopt : std::optional(pilot_from_json(*p));
    if (const Json* s = r.find("sweep")) c.sweep = sweep_from_json(*s);
    r.read("output_dir", c.output_dir);
    r.finish();
    for (const auto& [name, patch] : c.overrides) training_for(c, parse_method(name));
    detail::check(!c.methods.empty(), "config.methods: must be non-empty");
    detail::check(!c.seeds.empty(), "config.seeds: must be non-empty");
    for (Method m : c.methods) {
        const auto t = training_for(c, m);
        detail::check(t.group_size <= c.environment.responses,
                      "config: group_size exceeds environment.responses for " + to_string(m));
    }
    for (std::size_t g : c.sweep.group_size)
        detail::check(g <= c.environment.responses, "sweep.group_size: values must not exceed environment.responses");
    return c;
}

inline ExperimentConfig parse_experiment(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    return experiment_from_json(j);
}

}  // namespace drro
