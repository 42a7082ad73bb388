#pragma once

#include <optional>
#include <span>
#include <vector>

#include "meanq/distributional.hpp"
#include "meanq/replay.hpp"
#include "meanq/rng.hpp"
#include "meanq/value_model.hpp"

namespace meanq {

enum class ValueMode { scalar, distributional };
enum class SamplingMode { independent, shared };
enum class EnsembleMode { true_ensemble, snapshot };

// Gradient-pass cadence as passes per environment step, e.g. {1, 2} is one
// full pass every 2 steps and {3, 1} is three passes per step.
struct Rational {
    int num = 1;
    int den = 1;
};

struct LearnerConfig {
    double gamma = 0.99;
    int ensemble_size = 5; // K (snapshot count in snapshot mode)
    int batch_size = 32;   // B
    int multi_step = 1;    // M
    bool online_targets = true;
    long target_sync_period = 8000;
    ValueMode value_mode = ValueMode::scalar;
    Support support; // distributional mode only
    SamplingMode sampling = SamplingMode::independent;
    EnsembleMode ensemble_mode = EnsembleMode::true_ensemble;
    Rational updates_per_interaction{1, 1};
    int warmup = 0; // 0 derives max(batch_size, 1000)
    double grad_clip = 0.0;
    double beta_start = 0.4; // prioritized-replay correction anneal
    double beta_end = 1.0;
    long beta_horizon = 1;
    OptimizerConfig optimizer;

    int effective_warmup() const;
    void validate() const;
};

// Discounted sum of rewards in temporal order.
double multi_step_reward(std::span<const double> rewards, double gamma);

// gamma^m by repeated multiplication (exact for m = 0, 1).
double discount_power(double gamma, int m);

// y_b = r_mstep + gamma^eff * max_a mean_k Q_k(s^(M), a), dropping the
// bootstrap term entirely for terminal samples.
std::vector<double> compute_scalar_targets(std::span<const MultiStepSample> batch,
                                           const ModelView& targets, double gamma);

struct ScalarLossResult {
    double loss = 0.0;       // is_weight * (y - q)^2
    double dq = 0.0;         // d loss / d q = -2 * is_weight * (y - q)
    double priority = 0.0;   // |y - q|, unweighted
};

ScalarLossResult scalar_loss(double y, double q, double is_weight);

// Per sample: a* by mean expected value over the target models at s^(M),
// the members' distributions at (s^(M), a*) averaged, then projected with
// (r_mstep, gamma^eff, terminal).
std::vector<std::vector<double>> compute_distributional_targets(
    std::span<const MultiStepSample> batch, const std::vector<const CategoricalQModel*>& targets,
    const Support& support, double gamma);

std::vector<const CategoricalQModel*> distributional_view(const ModelView& members);

struct MemberMetrics {
    double loss_mean = 0.0;
    double priority_mean = 0.0;
};

struct IterationMetrics {
    int gradient_passes = 0;
    double loss_sum = 0.0;     // summed member loss means
    double priority_sum = 0.0;
    int member_updates = 0;
};

// Per-member training iteration over a shared replay buffer. The learner
// borrows the ensemble, targets, snapshot history (snapshot mode only),
// memory, per-member optimizers and per-member sampling streams; it owns
// nothing but the pass-cadence accumulator.
class Learner {
public:
    Learner(LearnerConfig config, Ensemble& ensemble, TargetEnsemble& targets,
            SnapshotHistory* snapshots, ReplayMemory& memory, std::vector<Optimizer>& optimizers,
            std::vector<Rng>& sample_rngs);

    // One environment step worth of training: runs due gradient passes and
    // syncs lagging targets when env_step hits the sync period.
    IterationMetrics train_iteration(long env_step);

    // Trains member k on its own independently sampled batch and updates
    // its priority tree. Nothing belonging to other members is touched.
    MemberMetrics train_member(int k, long env_step);

    // The models the agent acts/evaluates with: the snapshot history in
    // snapshot mode (live model before the first push), else the live
    // ensemble.
    ModelView exploitation_view() const;

    // The models targets are computed from, per target_mode/ensemble_mode.
    ModelView target_view() const;

    double beta_at(long env_step) const;
    const LearnerConfig& config() const { return cfg_; }

private:
    LearnerConfig cfg_;
    Ensemble& ensemble_;
    TargetEnsemble& targets_;
    SnapshotHistory* snapshots_;
    ReplayMemory& memory_;
    std::vector<Optimizer>& optimizers_;
    std::vector<Rng>& sample_rngs_;
    int pass_credits_ = 0;

    MemberMetrics train_member_on_batch(int k, std::span<const MultiStepSample> batch,
                                        std::vector<double>& priorities_out);
    void run_gradient_pass(long env_step, IterationMetrics& metrics);
};

} // namespace meanq
