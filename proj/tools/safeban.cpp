// safeban: run experiments, print presets, and plot results.
//
//   safeban run --config <file> [--out <dir>] [--seed <u64>] [--reps <n>] [--threads <n>] [--scale <k>]
//   safeban preset <name> [--print-config] [--out <dir>] [--seed <u64>] [--reps <n>] [--threads <n>] [--scale <k>]
//   safeban plot --in <csv>... --out <svg> [--kind regret|safeset]
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime fault.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "safeban/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunFlags {
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> threads;
    unsigned scale = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "base seed");
    cmd->add_option("--reps", f.reps, "number of replications")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", f.threads, "worker threads (default: SAFEBAN_THREADS or 1)")->check(CLI::PositiveNumber);
    cmd->add_option("--scale", f.scale, "divide T (and fixed T') by 10^k")->check(CLI::Range(0, 9));
}

int execute(safeban::ExperimentConfig cfg, const RunFlags& f, const std::string& default_out) {
    if (f.seed) cfg.base_seed = *f.seed;
    if (f.reps) cfg.replications = *f.reps;
    cfg = safeban::apply_scale(std::move(cfg), f.scale);
    safeban::RunOptions opts;
    opts.output_dir = !f.out.empty() ? f.out : !cfg.output_dir.empty() ? cfg.output_dir : default_out;
    opts.threads = f.threads.value_or(safeban::default_threads());

    const auto res = safeban::run_experiment(cfg, opts);
    for (const auto& a : res.aggregates) {
        std::printf("%-24s n=%zu violations=%zu", a.policy.c_str(), a.n, a.violations);
        if (!a.mean.empty()) std::printf(" final per-step regret %.6g (std %.3g)", a.mean.back(), a.std.back());
        std::printf("\n");
    }
    for (const auto& r : res.runs)
        if (r.error) std::fprintf(stderr, "run %s rep %zu failed: %s\n", r.policy.c_str(), r.replication, r.error->c_str());
    std::printf("outputs written to %s\n", opts.output_dir->c_str());
    return res.failed_runs ? kExitRuntime : 0;
}

int plot(const std::vector<std::string>& inputs, const std::string& out, const std::string& kind) {
    if (kind == "regret") {
        std::vector<safeban::RegretCurve> curves;
        for (const auto& in : inputs) {
            std::string label = std::filesystem::path(in).stem().string();
            if (label.rfind("aggregate_", 0) == 0) label = label.substr(10);
            curves.push_back(safeban::read_aggregate_csv(in, label));
        }
        safeban::emit_regret_svg(curves, out);
    } else {
        std::vector<safeban::SafeSetSnapshot> snaps;
        for (const auto& in : inputs) {
            auto sn = safeban::read_snapshot_csv(in);
            const std::string stem = std::filesystem::path(in).stem().string();
            const auto pos = stem.rfind("_t");
            if (pos != std::string::npos) {
                try {
                    sn.round = std::stoull(stem.substr(pos + 2));
                } catch (const std::exception&) {
                }
            }
            snaps.push_back(std::move(sn));
        }
        safeban::emit_safeset_svg(snaps, out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"safeban: safe linear bandits under a linear safety constraint"};
    app.require_subcommand(1);

    RunFlags run_flags;
    std::string config_path;
    auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    add_run_flags(run, run_flags);

    RunFlags preset_flags;
    std::string preset_name;
    bool print_config = false;
    auto* pre = app.add_subcommand("preset", "print or run a built-in preset");
    pre->add_option("name", preset_name, "fig1-karmed | fig2-polytope | fig3-safesets")->required();
    pre->add_flag("--print-config", print_config, "print the preset config as JSON and exit");
    add_run_flags(pre, preset_flags);

    std::vector<std::string> plot_in;
    std::string plot_out, plot_kind = "regret";
    auto* pl = app.add_subcommand("plot", "render an SVG from aggregate or snapshot CSVs");
    pl->add_option("--in", plot_in, "input CSV (repeatable)")->required();
    pl->add_option("--out", plot_out, "output SVG")->required();
    pl->add_option("--kind", plot_kind, "regret | safeset")->check(CLI::IsMember({"regret", "safeset"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run->parsed()) return execute(safeban::load_config(config_path), run_flags, "safeban-out");
        if (pre->parsed()) {
            safeban::ExperimentConfig cfg = safeban::preset(preset_name);
            if (print_config) {
                std::cout << safeban::config_to_json(cfg).dump(2) << "\n";
                return 0;
            }
            return execute(std::move(cfg), preset_flags, "safeban-out/" + preset_name);
        }
        return plot(plot_in, plot_out, plot_kind);
    } catch (const safeban::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
