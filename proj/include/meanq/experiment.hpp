#pragma once

#include <optional>
#include <string>
#include <vector>

#include "meanq/diagnostics.hpp"
#include "meanq/environments.hpp"
#include "meanq/exploration.hpp"
#include "meanq/learner.hpp"
#include "meanq/replay.hpp"

namespace meanq {

enum class Variant { meanq, dqn, dqn_no_target, meanq_no_target, avg_dqn, ens_dqn };

std::string variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

enum class ExplorationKind { epsilon_greedy, ucb };

struct ModelConfig {
    enum class Kind { table, mlp } kind = Kind::mlp;
    std::vector<int> hidden; // empty = linear
    Activation activation = Activation::relu;
};

// Fully resolved experiment description. parse_config() fills defaults,
// enforces variant-implied constraints, and rejects unknown keys with
// line-anchored errors; serialize_config() emits the canonical form the
// config hash is computed over.
struct ExperimentConfig {
    EnvDescriptor env;
    Variant variant = Variant::meanq;
    std::vector<long> seeds;
    long total_steps = 100000;
    long eval_every = 2000;
    long cross_run_every = 10000;
    int n_eval = 20;
    int n_s0_resets = 50;
    std::string output_dir = "runs/experiment";

    LearnerConfig learner;
    ModelConfig model;
    ReplayMemory::Options replay_options;
    int replay_capacity = 100000;

    ExplorationKind exploration = ExplorationKind::epsilon_greedy;
    EpsilonSchedule epsilon;
    double ucb_lambda = 1.0;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config); // 16 hex digits

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

struct SeedOutcome {
    long seed = 0;
    std::string status = "ok"; // "ok" or an error description
    std::string csv_path;
    std::string checkpoint_path; // final ensemble parameters
    double final_return = 0.0;
    double best_return = 0.0;
    bool ok() const { return status == "ok"; }
};

struct RunManifest {
    std::string config_hash;
    std::string canonical_config;
    std::string output_dir;
    double reference_low = 0.0;  // random-policy undiscounted return
    double reference_high = 0.0; // optimal-policy undiscounted return
    std::vector<SeedOutcome> seeds;
    std::string cross_run_csv; // empty when fewer than 2 runs succeeded
    std::string summary_csv;
    std::string manifest_path;

    // In-memory copies for callers that aggregate without re-reading CSVs.
    std::vector<std::vector<CheckpointRecord>> records; // per ok seed, seed order
    std::vector<CrossRunStat> cross_run;
};

// Executes every seed (jobs in parallel), writes one CSV per seed plus the
// cross-run CSV, summary CSV and manifest.json under output_dir. A failing
// seed is recorded in the manifest without aborting the others.
RunManifest run_experiment(const ExperimentConfig& config, int jobs = 1);

// One seed's full training loop; exposed for tests. When checkpoint_path
// is non-empty the final ensemble is saved there in the checkpoint format.
std::vector<CheckpointRecord> run_single(const ExperimentConfig& config, long seed,
                                         const std::string& checkpoint_path = "");

void save_manifest(const RunManifest& manifest);
RunManifest load_manifest(const std::string& path); // re-reads per-seed CSVs

struct SummaryRow {
    std::string variant;
    std::string environment;
    int n_runs = 0;
    double final_mean = 0.0;
    double final_std = 0.0;
    double best_mean = 0.0;
    double best_std = 0.0;
};

SummaryRow summarize(const RunManifest& manifest);
std::string format_summary_table(std::span<const SummaryRow> rows);
void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);

} // namespace meanq
