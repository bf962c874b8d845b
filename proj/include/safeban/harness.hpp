#pragma once

// Seeded replication runner: per-run CSV streams, aggregate per-step regret,
// safe-set snapshots and the run summary.
//
// Output layout under the output directory:
//   runs/<policy>_rep<NNN>.csv        one row per round
//   aggregate_<policy>.csv            round, mean, std, n of the per-step regret
//   snapshots/<policy>_t<round>.csv   safe-set grids of replication 0
//   regret.svg, safeset_<policy>.svg  plots
//   summary.json                      configuration echo and per-run metadata

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "safeban/config.hpp"
#include "safeban/csv.hpp"
#include "safeban/policies.hpp"
#include "safeban/svg.hpp"

namespace safeban {

inline const std::vector<std::string>& run_columns() {
    static const std::vector<std::string> cols{"round", "x",     "loss",    "regret", "cum_regret", "per_step_regret",
                                               "term1", "term2", "alpha_t", "safe",   "phase"};
    return cols;
}

inline const std::vector<std::string>& aggregate_columns() {
    static const std::vector<std::string> cols{"round", "mean", "std", "n"};
    return cols;
}

inline std::string format_action(const Vec& x) {
    std::string s;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j) s += ';';
        s += format_number(x[j]);
    }
    return s;
}

inline std::vector<std::string> run_row(const RoundRecord& r, double cum_regret) {
    return {std::to_string(r.round),
            format_action(r.action),
            format_number(r.loss),
            format_number(r.regret),
            format_number(cum_regret),
            format_number(cum_regret / static_cast<double>(r.round)),
            format_number(r.term1),
            format_number(r.term2),
            format_number(r.alpha),
            r.safe ? "1" : "0",
            to_string(r.phase)};
}

/// Writes a finished list of records (header only when empty).
inline void emit_run_csv(const std::vector<RoundRecord>& records, const std::string& path) {
    CsvWriter w(path, run_columns());
    double cum = 0.0;
    for (const auto& r : records) {
        cum += r.regret;
        w.row(run_row(r, cum));
    }
    w.close();
}

/// Per-round statistics of the per-step regret across replications.
struct AggregateStats {
    std::string policy;
    std::vector<double> mean;
    std::vector<double> std;  // sample standard deviation (0 for a single run)
    std::size_t n = 0;        // replications that completed
    std::size_t violations = 0;       // rounds with a truly unsafe action, all replications
    std::size_t violating_runs = 0;
    std::size_t failed_runs = 0;
};

/// Two-pass mean and sample standard deviation, round by round.
inline AggregateStats aggregate(const std::vector<const std::vector<double>*>& series) {
    AggregateStats s;
    s.n = series.size();
    if (series.empty()) return s;
    const std::size_t T = series.front()->size();
    for (const auto* v : series)
        if (v->size() != T) throw std::invalid_argument("aggregate: series lengths differ");
    s.mean.assign(T, 0.0);
    s.std.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (const auto* v : series) sum += (*v)[t];
        const double m = sum / static_cast<double>(s.n);
        double ss = 0.0;
        for (const auto* v : series) ss += ((*v)[t] - m) * ((*v)[t] - m);
        s.mean[t] = m;
        s.std[t] = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    }
    return s;
}

inline void emit_aggregate_csv(const AggregateStats& s, const std::string& path) {
    CsvWriter w(path, aggregate_columns());
    for (std::size_t t = 0; t < s.mean.size(); ++t)
        w.row({std::to_string(t + 1), format_number(s.mean[t]), format_number(s.std[t]), std::to_string(s.n)});
    w.close();
}

/// Safe-set membership grids for a two-dimensional box, using the policy's current region.
inline SafeSetSnapshot safe_set_snapshot(const Policy& policy, const ProblemInstance& inst, std::size_t grid_resolution) {
    const auto* box = std::get_if<BoxPolytope>(&inst.action_set());
    if (inst.dim() != 2) throw UnsupportedDimensionError("safe_set_snapshot: only d = 2 is supported");
    if (!box) throw ConfigError("safe_set_snapshot: requires a box action set");
    if (grid_resolution < 1) throw ConfigError("safe_set_snapshot: grid_resolution must be >= 1");
    const ConfidenceRegion reg = policy.region();
    SafeSetSnapshot sn;
    sn.resolution = grid_resolution;
    sn.round = policy.round() + 1;
    for (std::size_t a = 0; a < 2; ++a) {
        sn.lower[a] = box->lower[a];
        sn.upper[a] = box->upper[a];
    }
    const double w_radius = inst.c() / inst.S();
    for (std::size_t i = 0; i < grid_resolution; ++i)
        for (std::size_t j = 0; j < grid_resolution; ++j) {
            Vec x(2);
            x[0] = sn.coordinate(0, i);
            x[1] = sn.coordinate(1, j);
            const Vec bx = inst.B() * x;
            sn.truth.push_back(is_safe(inst, x));
            sn.warmup.push_back(norm2(bx) <= w_radius);
            sn.estimate.push_back(declared_safe(reg, inst.B(), inst.c(), x));
        }
    return sn;
}

struct SnapshotInfo {
    std::string label;
    std::uint64_t round = 0;
    bool xstar_declared_safe = false;
};

/// Metadata and series of one (policy, replication) run.
struct RunSummary {
    std::size_t policy_index = 0;
    std::string policy;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    std::uint64_t T_prime_realized = 0;  // rounds of pure exploration actually played
    std::optional<double> lambda_minus;
    std::uint64_t T_zero = 0;
    std::optional<double> safety_gap;
    std::size_t violations = 0;
    std::size_t fallbacks = 0;
    bool covered_l2_all = true;
    bool covered_region_all = true;
    double final_cum_regret = 0.0;
    std::vector<double> per_step_regret;
    std::vector<SnapshotInfo> snapshots;
    std::vector<SafeSetSnapshot> snapshot_grids;  // replication 0 only
    std::optional<std::string> error;
};

using RoundObserver = std::function<void(const RunSummary& run, const RoundRecord& rec, const Simulation& sim)>;

struct RunOptions {
    std::optional<std::string> output_dir;  // overrides the config
    std::size_t threads = 0;                // 0: SAFEBAN_THREADS or 1
    bool write_files = true;
    bool keep_series = true;
    SimulationOptions simulation;
    RoundObserver observer;  // called from worker threads
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RunSummary> runs;  // policy-major, then replication
    std::vector<AggregateStats> aggregates;
    std::size_t total_violations = 0;
    std::size_t failed_runs = 0;

    const RunSummary& run(std::size_t policy, std::size_t rep) const { return runs.at(policy * config.replications + rep); }
};

inline std::size_t default_threads() {
    if (const char* env = std::getenv("SAFEBAN_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw ConfigError("SAFEBAN_THREADS must be a positive integer");
    }
    return 1;
}

inline std::uint64_t run_seed(std::uint64_t base_seed, std::size_t policy_index, std::size_t rep) {
    return derive_key(base_seed, policy_index, rep);
}

namespace detail {

inline std::string rep_tag(std::size_t rep) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", rep);
    return buf;
}

inline void run_one(const ExperimentConfig& cfg, const RunOptions& opts, const std::filesystem::path& out,
                    std::shared_ptr<const ProblemInstance> inst, RunSummary& run) {
    const PolicySpec& spec = cfg.policies[run.policy_index];
    Simulation sim(inst, spec, cfg.horizon, run.seed, opts.simulation);
    if (!std::holds_alternative<Contextual>(inst->action_set())) run.safety_gap = safety_gap(*inst);
    if (sim.policy()) {
        run.lambda_minus = sim.policy()->lambda_minus_used();
        run.T_zero = sim.policy()->T_zero();
    }

    std::optional<CsvWriter> csv;
    if (opts.write_files) csv.emplace((out / "runs" / (spec.name + "_rep" + rep_tag(run.replication) + ".csv")).string(), run_columns());
    if (opts.keep_series) run.per_step_regret.reserve(cfg.horizon);

    std::vector<bool> taken(cfg.snapshot_rounds.size(), false);
    double cum = 0.0;
    std::uint64_t explored = 0;
    while (!sim.done()) {
        const std::uint64_t t = sim.round() + 1;
        std::vector<std::size_t> due;
        if (sim.policy()) {
            for (std::size_t k = 0; k < cfg.snapshot_rounds.size(); ++k) {
                const auto& s = cfg.snapshot_rounds[k];
                if (taken[k]) continue;
                if ((s.round && *s.round == t) || (!s.round && !sim.policy()->explores_next())) due.push_back(k);
            }
            for (std::size_t k : due) {
                taken[k] = true;
                if (run.replication == 0)
                    run.snapshot_grids.push_back(safe_set_snapshot(*sim.policy(), *inst, cfg.grid_resolution));
            }
        }
        const RoundRecord rec = sim.step();
        for (std::size_t k : due) run.snapshots.push_back({cfg.snapshot_rounds[k].label(), t, rec.xstar_declared_safe});
        cum += rec.regret;
        if (!rec.safe) ++run.violations;
        if (rec.phase == Phase::PureExploration) ++explored;
        run.covered_l2_all = run.covered_l2_all && rec.covered_l2;
        run.covered_region_all = run.covered_region_all && rec.covered_region;
        if (opts.keep_series) run.per_step_regret.push_back(cum / static_cast<double>(t));
        if (csv) csv->row(run_row(rec, cum));
        if (opts.observer) opts.observer(run, rec, sim);
    }
    if (csv) csv->close();
    run.final_cum_regret = cum;
    run.T_prime_realized = explored;
    if (sim.policy()) run.fallbacks = sim.policy()->fallback_count();
}

inline Json summary_json(const ExperimentResult& res) {
    Json j;
    j["config"] = config_to_json(res.config);
    j["total_violations"] = res.total_violations;
    j["failed_runs"] = res.failed_runs;
    j["aggregates"] = Json::array();
    for (const auto& a : res.aggregates) {
        Json ja{{"policy", a.policy}, {"n", a.n}, {"violations", a.violations}, {"violating_runs", a.violating_runs},
                {"failed_runs", a.failed_runs}};
        if (!a.mean.empty()) {
            ja["final_mean_per_step_regret"] = a.mean.back();
            ja["final_std_per_step_regret"] = a.std.back();
        }
        j["aggregates"].push_back(ja);
    }
    j["runs"] = Json::array();
    for (const auto& r : res.runs) {
        const PolicySpec& spec = res.config.policies[r.policy_index];
        Json jr{{"policy", r.policy},
                {"replication", r.replication},
                {"seed", r.seed},
                {"sampler", spec.sampler.kind == SamplerKind::RejectionUniform ? "rejection" : "surface"},
                {"T_prime_realized", r.T_prime_realized},
                {"T_zero", r.T_zero},
                {"violations", r.violations},
                {"fallbacks", r.fallbacks},
                {"mu_covered_all_rounds", r.covered_l2_all},
                {"final_cum_regret", r.final_cum_regret}};
        jr["lambda_minus"] = r.lambda_minus ? Json(*r.lambda_minus) : Json(nullptr);
        jr["safety_gap"] = r.safety_gap ? Json(*r.safety_gap) : Json(nullptr);
        jr["error"] = r.error ? Json(*r.error) : Json(nullptr);
        jr["snapshots"] = Json::array();
        for (const auto& s : r.snapshots)
            jr["snapshots"].push_back({{"label", s.label}, {"round", s.round}, {"xstar_declared_safe", s.xstar_declared_safe}});
        j["runs"].push_back(jr);
    }
    return j;
}

}  // namespace detail

/// Runs every (policy, replication) pair. Configuration problems are raised as
/// ConfigError before any simulation starts; a fault inside one run is recorded
/// in its summary and the remaining runs proceed.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
    namespace fs = std::filesystem;
    cfg.validate();
    const std::size_t threads = opts.threads ? opts.threads : default_threads();
    fs::path out = opts.output_dir ? fs::path(*opts.output_dir) : fs::path(cfg.output_dir);
    if (opts.write_files) {
        if (out.empty()) throw ConfigError("no output directory given");
        std::error_code ec;
        fs::create_directories(out / "runs", ec);
        if (!ec && !cfg.snapshot_rounds.empty()) fs::create_directories(out / "snapshots", ec);
        if (ec) throw ConfigError("cannot create output directory '" + out.string() + "': " + ec.message());
    }

    // Instances (one per replication, shared read-only by every policy), then a
    // dry construction of each policy so that parameter errors surface up front.
    std::vector<std::shared_ptr<const ProblemInstance>> instances;
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
        try {
            instances.push_back(std::make_shared<const ProblemInstance>(make_instance(cfg.instance, cfg.base_seed, rep)));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("invalid instance: ") + e.what());
        }
    }
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
        try {
            Simulation probe(instances.front(), cfg.policies[p], cfg.horizon, run_seed(cfg.base_seed, p, 0));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError("policy '" + cfg.policies[p].name + "': " + e.what());
        }
        if (!cfg.snapshot_rounds.empty() && instances.front()->dim() != 2)
            throw ConfigError("safe-set snapshots need a two-dimensional instance");
    }

    ExperimentResult res;
    res.config = cfg;
    const std::size_t jobs = cfg.policies.size() * cfg.replications;
    res.runs.resize(jobs);
    for (std::size_t p = 0; p < cfg.policies.size(); ++p)
        for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
            RunSummary& r = res.runs[p * cfg.replications + rep];
            r.policy_index = p;
            r.policy = cfg.policies[p].name;
            r.replication = rep;
            r.seed = run_seed(cfg.base_seed, p, rep);
        }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            RunSummary& r = res.runs[job];
            try {
                detail::run_one(cfg, opts, out, instances[r.replication], r);
            } catch (const std::exception& e) {
                r.error = e.what();
                r.per_step_regret.clear();
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(threads, jobs));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Deterministic reduction in (policy, replication) order.
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
        std::vector<const std::vector<double>*> series;
        AggregateStats agg;
        for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
            const RunSummary& r = res.runs[p * cfg.replications + rep];
            if (r.error) {
                ++agg.failed_runs;
                continue;
            }
            agg.violations += r.violations;
            if (r.violations) ++agg.violating_runs;
            if (opts.keep_series) series.push_back(&r.per_step_regret);
        }
        if (opts.keep_series) {
            AggregateStats stats = aggregate(series);
            agg.mean = std::move(stats.mean);
            agg.std = std::move(stats.std);
            agg.n = stats.n;
        } else {
            agg.n = cfg.replications - agg.failed_runs;
        }
        agg.policy = cfg.policies[p].name;
        res.total_violations += agg.violations;
        res.failed_runs += agg.failed_runs;
        res.aggregates.push_back(std::move(agg));
    }

    if (opts.write_files) {
        std::vector<RegretCurve> curves;
        for (const auto& a : res.aggregates) {
            if (!opts.keep_series || a.mean.empty()) continue;
            emit_aggregate_csv(a, (out / ("aggregate_" + a.policy + ".csv")).string());
            RegretCurve c{a.policy, {}, a.mean, a.std};
            for (std::size_t t = 1; t <= a.mean.size(); ++t) c.rounds.push_back(static_cast<double>(t));
            curves.push_back(std::move(c));
        }
        if (!curves.empty()) emit_regret_svg(curves, (out / "regret.svg").string());
        for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
            const RunSummary& r0 = res.runs[p * cfg.replications];
            if (r0.snapshot_grids.empty()) continue;
            for (const auto& sn : r0.snapshot_grids)
                emit_snapshot_csv(sn, (out / "snapshots" / (r0.policy + "_t" + std::to_string(sn.round) + ".csv")).string());
            emit_safeset_svg(r0.snapshot_grids, (out / ("safeset_" + r0.policy + ".svg")).string(), r0.policy);
        }
        std::ofstream js(out / "summary.json", std::ios::binary);
        js << detail::summary_json(res).dump(2) << "\n";
        if (!js) throw std::runtime_error("cannot write '" + (out / "summary.json").string() + "'");
    }
    return res;
}

}  // namespace safeban
