#pragma once

// Experiment configuration, its JSON form, and the built-in presets.
//
// JSON schema (unknown keys are rejected):
//   {
//     "instance": "polytope" | "karmed-random" | {
//         "kind": "box" | "finite" | "contextual" | "polytope" | "karmed-random",
//         "mu": [..], "B": [[..], ..], "c": real, "R": real, "S": real?, "L": real?,
//         "noise": "gaussian" | "uniform",
//         "lower": [..], "upper": [..], "grid_resolution": int,   // box
//         "arms": [[..], ..],                                      // finite
//         "K": int, "n_warmup": int, "context_seed": u64?          // contextual
//     },
//     "policies": [{ "name": str, "kind": "safe-lucb" | "gslucb" | "no-exploration" | "oracle",
//                    "region": "ell1" | "ell2", "sampler": "rejection" | "surface", "epsilon": real?,
//                    "T_prime": int | "T_delta" | "T_zero" | "t_delta", "gap_every": int,
//                    "delta": real?, "lambda": real? }],
//     "horizon": int, "replications": int, "base_seed": u64,
//     "delta": 0.01, "lambda": 1.0,
//     "output_dir": str, "snapshot_rounds": [int | "T_prime+1"], "grid_resolution": int
//   }

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "safeban/environment.hpp"
#include "safeban/errors.hpp"
#include "safeban/policies.hpp"

namespace safeban {

using Json = nlohmann::json;

inline constexpr double kDefaultDelta = 0.01;
inline constexpr double kDefaultLambda = 1.0;
inline constexpr double kDefaultNoise = 0.1;
inline constexpr std::uint64_t kPolytopeTPrime = 1054;
inline constexpr std::uint64_t kKarmedHorizon = 20000;
inline constexpr std::uint64_t kPolytopeHorizon = 100000;
inline constexpr std::size_t kPresetReplications = 20;

enum class InstanceKind { Box, Finite, Contextual, Polytope, KarmedRandom };

struct InstanceSpec {
    InstanceKind kind = InstanceKind::Polytope;
    Vec mu;
    Mat B;
    double c = 0.0;
    double R = kDefaultNoise;
    std::optional<double> S;
    std::optional<double> L;
    NoiseKind noise = NoiseKind::Gaussian;
    Vec lower, upper;
    std::size_t grid_resolution = kDefaultGridResolution;
    std::vector<Vec> arms;
    std::size_t K = kKarmedArms;
    std::size_t n_warmup = kKarmedWarmupArms;
    std::optional<std::uint64_t> context_seed;
};

// A snapshot round: a fixed round, or the first round after pure exploration.
struct SnapshotRound {
    std::optional<std::uint64_t> round;  // nullopt means "T_prime+1"
    std::string label() const { return round ? std::to_string(*round) : "T_prime+1"; }
    friend bool operator==(const SnapshotRound&, const SnapshotRound&) = default;
};

struct ExperimentConfig {
    InstanceSpec instance;
    std::vector<PolicySpec> policies;
    std::uint64_t horizon = 1000;
    std::size_t replications = 1;
    std::uint64_t base_seed = 1;
    double delta = kDefaultDelta;
    double lambda = kDefaultLambda;
    std::string output_dir;
    std::vector<SnapshotRound> snapshot_rounds;
    std::size_t grid_resolution = kDefaultGridResolution;

    void validate() const {
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        if (replications < 1) throw ConfigError("replications must be >= 1");
        if (policies.empty()) throw ConfigError("at least one policy is required");
        std::set<std::string> names;
        for (const auto& p : policies) {
            if (p.name.empty()) throw ConfigError("every policy needs a name");
            if (!names.insert(p.name).second) throw ConfigError("duplicate policy name: " + p.name);
            if (p.name.find_first_of("/\\ ") != std::string::npos) throw ConfigError("policy names may not contain '/', '\\\\' or spaces");
            if (!(p.delta > 0.0 && p.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
            if (!(p.lambda > 0.0)) throw ConfigError("lambda must be positive");
            if (p.gap_every < 1) throw ConfigError("gap_every must be >= 1");
        }
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
        if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
        for (const auto& s : snapshot_rounds)
            if (s.round && *s.round < 1) throw ConfigError("snapshot rounds must be >= 1");
        if (!snapshot_rounds.empty() && instance.kind != InstanceKind::Polytope &&
            !(instance.kind == InstanceKind::Box && instance.lower.size() == 2))
            throw ConfigError("safe-set snapshots need a two-dimensional box instance");
    }
};

/// Builds the concrete instance of replication `rep`.
inline ProblemInstance make_instance(const InstanceSpec& spec, std::uint64_t base_seed, std::size_t rep) {
    constexpr std::uint64_t kInstanceTag = 0x1A57A7CEULL;
    switch (spec.kind) {
        case InstanceKind::Polytope: return polytope_instance(spec.grid_resolution, spec.R);
        case InstanceKind::KarmedRandom: {
            RandomStream rng(derive_key(base_seed, kInstanceTag, rep));
            return sample_karmed_instance(rng, spec.R);
        }
        default: break;
    }
    InstanceParams p;
    p.mu = spec.mu;
    p.B = spec.B;
    p.c = spec.c;
    p.R = spec.R;
    p.S = spec.S;
    p.L = spec.L;
    p.noise = spec.noise;
    if (spec.kind == InstanceKind::Box)
        p.action_set = BoxPolytope{spec.lower, spec.upper, spec.grid_resolution};
    else if (spec.kind == InstanceKind::Finite)
        p.action_set = FiniteArms{spec.arms};
    else
        p.action_set = Contextual{spec.K, spec.n_warmup, spec.context_seed.value_or(derive_key(base_seed, kInstanceTag, rep))};
    return ProblemInstance(p);
}

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get(const Json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline Vec to_vec(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || j.size() > kMaxDim) throw ConfigError(where + " must be a nonempty array of at most 8 numbers");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(where + " must contain numbers");
        v[i] = j[i].get<double>();
    }
    return v;
}

inline Mat to_mat(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || j.size() > kMaxDim) throw ConfigError(where + " must be a square array of arrays");
    Mat m(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vec r = to_vec(j[i], where);
        if (r.size() != j.size()) throw ConfigError(where + " must be square");
        for (std::size_t k = 0; k < r.size(); ++k) m(i, k) = r[k];
    }
    return m;
}

inline Json from_vec(const Vec& v) { return Json(std::vector<double>(v.begin(), v.end())); }
inline Json from_mat(const Mat& m) {
    Json out = Json::array();
    for (std::size_t i = 0; i < m.size(); ++i) out.push_back(from_vec(m.row(i)));
    return out;
}

inline InstanceSpec parse_instance(const Json& j) {
    InstanceSpec s;
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "polytope") s.kind = InstanceKind::Polytope;
        else if (name == "karmed-random") s.kind = InstanceKind::KarmedRandom;
        else throw ConfigError("unknown instance preset '" + name + "'");
        return s;
    }
    check_keys(j, {"kind", "mu", "B", "c", "R", "S", "L", "noise", "lower", "upper", "grid_resolution", "arms", "K", "n_warmup",
                   "context_seed"},
               "instance");
    const auto kind = get<std::string>(j, "kind", "instance");
    if (kind == "box") s.kind = InstanceKind::Box;
    else if (kind == "finite") s.kind = InstanceKind::Finite;
    else if (kind == "contextual") s.kind = InstanceKind::Contextual;
    else if (kind == "polytope") s.kind = InstanceKind::Polytope;
    else if (kind == "karmed-random") s.kind = InstanceKind::KarmedRandom;
    else throw ConfigError("unknown instance kind '" + kind + "'");
    if (j.contains("R")) s.R = get<double>(j, "R", "instance");
    if (j.contains("grid_resolution")) s.grid_resolution = get<std::size_t>(j, "grid_resolution", "instance");
    if (s.kind == InstanceKind::Polytope || s.kind == InstanceKind::KarmedRandom) {
        // fixed instances: only the noise scale and grid resolution are adjustable
        check_keys(j, {"kind", "R", "grid_resolution"}, "instance (" + kind + ")");
        return s;
    }

    s.mu = to_vec(j.at("mu"), "instance.mu");
    s.B = to_mat(j.at("B"), "instance.B");
    s.c = get<double>(j, "c", "instance");
    if (j.contains("S")) s.S = get<double>(j, "S", "instance");
    if (j.contains("L")) s.L = get<double>(j, "L", "instance");
    if (j.contains("noise")) {
        const auto n = get<std::string>(j, "noise", "instance");
        if (n == "gaussian") s.noise = NoiseKind::Gaussian;
        else if (n == "uniform") s.noise = NoiseKind::Uniform;
        else throw ConfigError("unknown noise kind '" + n + "'");
    }
    if (s.kind == InstanceKind::Box) {
        if (!j.contains("lower") || !j.contains("upper")) throw ConfigError("box instance needs lower and upper");
        s.lower = to_vec(j.at("lower"), "instance.lower");
        s.upper = to_vec(j.at("upper"), "instance.upper");
    } else if (s.kind == InstanceKind::Finite) {
        if (!j.contains("arms") || !j.at("arms").is_array() || j.at("arms").empty())
            throw ConfigError("finite instance needs a nonempty arms list");
        for (const auto& a : j.at("arms")) s.arms.push_back(to_vec(a, "instance.arms"));
    } else {
        if (j.contains("K")) s.K = get<std::size_t>(j, "K", "instance");
        if (j.contains("n_warmup")) s.n_warmup = get<std::size_t>(j, "n_warmup", "instance");
        if (j.contains("context_seed")) s.context_seed = get<std::uint64_t>(j, "context_seed", "instance");
    }
    return s;
}

inline Json instance_to_json(const InstanceSpec& s) {
    if (s.kind == InstanceKind::Polytope || s.kind == InstanceKind::KarmedRandom) {
        Json j{{"kind", s.kind == InstanceKind::Polytope ? "polytope" : "karmed-random"}, {"R", s.R}};
        if (s.kind == InstanceKind::Polytope) j["grid_resolution"] = s.grid_resolution;
        return j;
    }
    Json j;
    j["kind"] = s.kind == InstanceKind::Box ? "box" : s.kind == InstanceKind::Finite ? "finite" : "contextual";
    j["mu"] = from_vec(s.mu);
    j["B"] = from_mat(s.B);
    j["c"] = s.c;
    j["R"] = s.R;
    if (s.S) j["S"] = *s.S;
    if (s.L) j["L"] = *s.L;
    j["noise"] = s.noise == NoiseKind::Gaussian ? "gaussian" : "uniform";
    if (s.kind == InstanceKind::Box) {
        j["lower"] = from_vec(s.lower);
        j["upper"] = from_vec(s.upper);
        j["grid_resolution"] = s.grid_resolution;
    } else if (s.kind == InstanceKind::Finite) {
        j["arms"] = Json::array();
        for (const auto& a : s.arms) j["arms"].push_back(from_vec(a));
    } else {
        j["K"] = s.K;
        j["n_warmup"] = s.n_warmup;
        if (s.context_seed) j["context_seed"] = *s.context_seed;
    }
    return j;
}

inline PolicySpec parse_policy(const Json& j, double delta, double lambda) {
    check_keys(j, {"name", "kind", "region", "sampler", "epsilon", "T_prime", "gap_every", "delta", "lambda"}, "policy");
    PolicySpec p;
    p.name = get<std::string>(j, "name", "policy");
    const auto kind = get<std::string>(j, "kind", "policy");
    if (kind == "safe-lucb") p.kind = PolicyKind::SafeLucb;
    else if (kind == "gslucb") p.kind = PolicyKind::Gslucb;
    else if (kind == "no-exploration") p.kind = PolicyKind::NoExploration;
    else if (kind == "oracle") p.kind = PolicyKind::Oracle;
    else throw ConfigError("unknown policy kind '" + kind + "'");
    if (j.contains("region")) {
        const auto r = get<std::string>(j, "region", "policy");
        if (r == "ell1") p.region = RegionKind::ell1;
        else if (r == "ell2") p.region = RegionKind::ell2;
        else throw ConfigError("unknown region kind '" + r + "'");
    }
    if (j.contains("sampler")) {
        const auto s = get<std::string>(j, "sampler", "policy");
        if (s == "rejection") p.sampler.kind = SamplerKind::RejectionUniform;
        else if (s == "surface") p.sampler.kind = SamplerKind::EllipsoidSurface;
        else throw ConfigError("unknown sampler '" + s + "'");
    }
    if (j.contains("epsilon")) p.sampler.epsilon = get<double>(j, "epsilon", "policy");
    if (p.kind == PolicyKind::SafeLucb) {
        if (!j.contains("T_prime")) throw ConfigError("safe-lucb policy '" + p.name + "' needs T_prime");
        const Json& t = j.at("T_prime");
        if (t.is_number_unsigned() || (t.is_number_integer() && t.get<std::int64_t>() >= 0)) {
            p.length = ExplorationLength::Fixed;
            p.T_prime = t.get<std::uint64_t>();
        } else if (t.is_string()) {
            const auto s = t.get<std::string>();
            if (s == "T_delta") p.length = ExplorationLength::TDelta;
            else if (s == "T_zero") p.length = ExplorationLength::TZero;
            else if (s == "t_delta") p.length = ExplorationLength::TSmallDelta;
            else throw ConfigError("unknown T_prime rule '" + s + "'");
        } else {
            throw ConfigError("T_prime must be a nonnegative integer or one of T_delta, T_zero, t_delta");
        }
    } else if (j.contains("T_prime")) {
        throw ConfigError("T_prime only applies to safe-lucb policies");
    }
    if (j.contains("gap_every")) p.gap_every = get<std::size_t>(j, "gap_every", "policy");
    p.delta = j.contains("delta") ? get<double>(j, "delta", "policy") : delta;
    p.lambda = j.contains("lambda") ? get<double>(j, "lambda", "policy") : lambda;
    return p;
}

inline Json policy_to_json(const PolicySpec& p) {
    Json j;
    j["name"] = p.name;
    switch (p.kind) {
        case PolicyKind::SafeLucb: j["kind"] = "safe-lucb"; break;
        case PolicyKind::Gslucb: j["kind"] = "gslucb"; break;
        case PolicyKind::NoExploration: j["kind"] = "no-exploration"; break;
        case PolicyKind::Oracle: j["kind"] = "oracle"; break;
    }
    j["region"] = to_string(p.region);
    j["sampler"] = p.sampler.kind == SamplerKind::RejectionUniform ? "rejection" : "surface";
    if (p.sampler.epsilon) j["epsilon"] = *p.sampler.epsilon;
    if (p.kind == PolicyKind::SafeLucb) {
        switch (p.length) {
            case ExplorationLength::Fixed: j["T_prime"] = p.T_prime; break;
            case ExplorationLength::TDelta: j["T_prime"] = "T_delta"; break;
            case ExplorationLength::TZero: j["T_prime"] = "T_zero"; break;
            case ExplorationLength::TSmallDelta: j["T_prime"] = "t_delta"; break;
        }
    }
    if (p.kind == PolicyKind::Gslucb) j["gap_every"] = p.gap_every;
    j["delta"] = p.delta;
    j["lambda"] = p.lambda;
    return j;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
    detail::check_keys(j, {"instance", "policies", "horizon", "replications", "base_seed", "delta", "lambda", "output_dir",
                           "snapshot_rounds", "grid_resolution"},
                       "config");
    ExperimentConfig cfg;
    if (!j.contains("instance")) throw ConfigError("config needs an instance");
    cfg.instance = detail::parse_instance(j.at("instance"));
    if (j.contains("delta")) cfg.delta = detail::get<double>(j, "delta", "config");
    if (j.contains("lambda")) cfg.lambda = detail::get<double>(j, "lambda", "config");
    if (!j.contains("policies") || !j.at("policies").is_array()) throw ConfigError("config needs a policies array");
    for (const auto& p : j.at("policies")) cfg.policies.push_back(detail::parse_policy(p, cfg.delta, cfg.lambda));
    if (!j.contains("horizon")) throw ConfigError("config needs a horizon");
    cfg.horizon = detail::get<std::uint64_t>(j, "horizon", "config");
    if (j.contains("replications")) cfg.replications = detail::get<std::size_t>(j, "replications", "config");
    if (j.contains("base_seed")) cfg.base_seed = detail::get<std::uint64_t>(j, "base_seed", "config");
    if (j.contains("output_dir")) cfg.output_dir = detail::get<std::string>(j, "output_dir", "config");
    if (j.contains("grid_resolution")) cfg.grid_resolution = detail::get<std::size_t>(j, "grid_resolution", "config");
    if (j.contains("snapshot_rounds")) {
        if (!j.at("snapshot_rounds").is_array()) throw ConfigError("snapshot_rounds must be an array");
        for (const auto& s : j.at("snapshot_rounds")) {
            if (s.is_string() && s.get<std::string>() == "T_prime+1") cfg.snapshot_rounds.push_back({std::nullopt});
            else if (s.is_number_unsigned()) cfg.snapshot_rounds.push_back({s.get<std::uint64_t>()});
            else throw ConfigError("snapshot_rounds entries must be positive integers or \"T_prime+1\"");
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

inline Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["instance"] = detail::instance_to_json(cfg.instance);
    j["policies"] = Json::array();
    for (const auto& p : cfg.policies) j["policies"].push_back(detail::policy_to_json(p));
    j["horizon"] = cfg.horizon;
    j["replications"] = cfg.replications;
    j["base_seed"] = cfg.base_seed;
    j["delta"] = cfg.delta;
    j["lambda"] = cfg.lambda;
    if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
    if (!cfg.snapshot_rounds.empty()) {
        j["snapshot_rounds"] = Json::array();
        for (const auto& s : cfg.snapshot_rounds) {
            if (s.round) j["snapshot_rounds"].push_back(*s.round);
            else j["snapshot_rounds"].push_back("T_prime+1");
        }
    }
    j["grid_resolution"] = cfg.grid_resolution;
    return j;
}

inline PolicySpec make_policy(std::string name, PolicyKind kind, ExplorationLength length = ExplorationLength::Fixed,
                              std::uint64_t T_prime = 0) {
    PolicySpec p;
    p.name = std::move(name);
    p.kind = kind;
    p.length = length;
    p.T_prime = T_prime;
    p.region = RegionKind::ell1;
    p.delta = kDefaultDelta;
    p.lambda = kDefaultLambda;
    return p;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig1-karmed", "fig2-polytope", "fig3-safesets"};
    return names;
}

/// Built-in experiment presets.
///   fig1-karmed   random 15-arm instances in d=4; Safe-LUCB with T_Δ (known gap),
///                 GSLUCB, and Safe-LUCB with T₀; 20 replications, T = 2·10⁴.
///   fig2-polytope the two-dimensional box instance; Safe-LUCB with T′ = 1054 and
///                 the no-exploration ablation; 20 replications, T = 10⁵.
///   fig3-safesets fig2 with safe-set snapshots at T′+1 and at round 50000.
inline ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.delta = kDefaultDelta;
    cfg.lambda = kDefaultLambda;
    cfg.replications = kPresetReplications;
    cfg.base_seed = 1;
    if (name == "fig1-karmed") {
        cfg.instance.kind = InstanceKind::KarmedRandom;
        cfg.horizon = kKarmedHorizon;
        cfg.policies = {make_policy("safe-lucb-tdelta", PolicyKind::SafeLucb, ExplorationLength::TDelta),
                        make_policy("gslucb", PolicyKind::Gslucb),
                        make_policy("safe-lucb-tzero", PolicyKind::SafeLucb, ExplorationLength::TZero)};
    } else if (name == "fig2-polytope" || name == "fig3-safesets") {
        cfg.instance.kind = InstanceKind::Polytope;
        cfg.horizon = kPolytopeHorizon;
        cfg.policies = {make_policy("safe-lucb", PolicyKind::SafeLucb, ExplorationLength::Fixed, kPolytopeTPrime),
                        make_policy("no-exploration", PolicyKind::NoExploration)};
        if (name == "fig3-safesets") cfg.snapshot_rounds = {{std::nullopt}, {50000}};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    cfg.validate();
    return cfg;
}

/// Divides the horizon, fixed exploration lengths and fixed snapshot rounds by 10^k.
inline ExperimentConfig apply_scale(ExperimentConfig cfg, unsigned k) {
    if (k == 0) return cfg;
    std::uint64_t div = 1;
    for (unsigned i = 0; i < k; ++i) div *= 10;
    auto scaled = [div](std::uint64_t x) { return std::max<std::uint64_t>(1, x / div); };
    cfg.horizon = scaled(cfg.horizon);
    for (auto& p : cfg.policies)
        if (p.kind == PolicyKind::SafeLucb && p.length == ExplorationLength::Fixed && p.T_prime > 0) p.T_prime = scaled(p.T_prime);
    for (auto& s : cfg.snapshot_rounds)
        if (s.round) s.round = scaled(*s.round);
    return cfg;
}

}  // namespace safeban
