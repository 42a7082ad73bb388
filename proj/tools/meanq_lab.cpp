#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "meanq/environments.hpp"
#include "meanq/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::string& seeds_override, int jobs) {
    meanq::ExperimentConfig cfg = meanq::parse_config_file(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (!seeds_override.empty()) {
        // Reuse the config grammar for the override.
        std::string patched = meanq::serialize_config(cfg);
        meanq::ExperimentConfig probe = cfg;
        const std::string text = "environment = " + meanq::format_env_descriptor(cfg.env) +
                                 "\nvariant = " + meanq::variant_name(cfg.variant) +
                                 "\nseeds = " + seeds_override + "\n";
        probe = meanq::parse_config(text);
        cfg.seeds = probe.seeds;
    }
    const meanq::RunManifest manifest = meanq::run_experiment(cfg, jobs);
    int failures = 0;
    for (const auto& s : manifest.seeds) {
        if (s.ok()) {
            std::printf("seed %ld: ok  final=%.4f best=%.4f  %s\n", s.seed, s.final_return,
                        s.best_return, s.csv_path.c_str());
        } else {
            ++failures;
            std::printf("seed %ld: FAILED (%s)\n", s.seed, s.status.c_str());
        }
    }
    std::printf("manifest: %s\n", manifest.manifest_path.c_str());
    if (!manifest.cross_run_csv.empty())
        std::printf("cross-run stats: %s\n", manifest.cross_run_csv.c_str());
    if (!manifest.records.empty()) {
        const meanq::SummaryRow row = meanq::summarize(manifest);
        std::fputs(meanq::format_summary_table({&row, 1}).c_str(), stdout);
    }
    return failures == 0 ? 0 : 1;
}

int cmd_summarize(const std::vector<std::string>& manifest_paths) {
    std::vector<meanq::SummaryRow> rows;
    for (const std::string& path : manifest_paths)
        rows.push_back(meanq::summarize(meanq::load_manifest(path)));
    std::fputs(meanq::format_summary_table(rows).c_str(), stdout);
    return 0;
}

int cmd_oracle(const std::string& descriptor, double gamma, double tol) {
    const meanq::EnvDescriptor d = meanq::parse_env_descriptor(descriptor);
    const meanq::BuiltEnvironment built = meanq::make_environment(d, gamma);
    const meanq::ValueIterationResult vi = meanq::value_iteration(built.mdp, tol);
    std::printf("# %s  gamma=%g  iterations=%ld  residual=%.3g\n",
                meanq::format_env_descriptor(d).c_str(), gamma, vi.iterations, vi.residual);
    std::printf("%6s", "state");
    for (int a = 0; a < built.mdp.n_actions; ++a) std::printf(" %12s%d", "Q*_a", a);
    std::printf(" %12s\n", "V*");
    for (int s = 0; s < built.mdp.n_states; ++s) {
        std::printf("%6d", s);
        for (int a = 0; a < built.mdp.n_actions; ++a)
            std::printf(" %13.6f", vi.q(s, a, built.mdp.n_actions));
        std::printf(" %12.6f\n", vi.v_star[s]);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale ensemble TD-learning lab"};
    app.require_subcommand(1);

    std::string config_path, out_override, seeds_override;
    int jobs = 1;
    CLI::App* run = app.add_subcommand("run", "Run a config's seeded experiments");
    run->add_option("config", config_path, "Path to an experiment config")->required();
    run->add_option("--out", out_override, "Override the config's output directory");
    run->add_option("--seeds", seeds_override, "Override seeds (comma list or lo..hi)");
    run->add_option("--jobs", jobs, "Parallel seed workers")->check(CLI::PositiveNumber);

    std::vector<std::string> manifest_paths;
    CLI::App* sum = app.add_subcommand("summarize", "Summarize one or more run manifests");
    sum->add_option("manifests", manifest_paths, "manifest.json paths")->required();

    std::string descriptor;
    double gamma = 0.99, tol = 1e-10;
    CLI::App* oracle = app.add_subcommand("oracle", "Print a tabular environment's Q* table");
    oracle->add_option("environment", descriptor, "Environment descriptor, e.g. chain_walk(n=5)")
        ->required();
    oracle->add_option("--gamma", gamma, "Discount factor");
    oracle->add_option("--tol", tol, "Bellman residual tolerance");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(config_path, out_override, seeds_override, jobs);
        if (sum->parsed()) return cmd_summarize(manifest_paths);
        if (oracle->parsed()) return cmd_oracle(descriptor, gamma, tol);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
