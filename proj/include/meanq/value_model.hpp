#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meanq/distributional.hpp"
#include "meanq/rng.hpp"

namespace meanq {

// A state-indexed action-value estimator. States are small-MDP indices;
// function-approximation models featurize them internally (one-hot).
// Parameters are exposed as one flat array so optimizers, checkpoints and
// snapshots stay model-agnostic.
class QModel {
public:
    virtual ~QModel() = default;

    virtual int n_actions() const = 0;
    virtual int n_states() const = 0;
    virtual std::vector<double> predict(int state) const = 0;

    virtual std::vector<double>& params() = 0;
    virtual const std::vector<double>& params() const = 0;

    virtual std::unique_ptr<QModel> clone() const = 0;

    // Checkpoint identity: kind tag plus the integers/doubles needed to
    // rebuild an empty model of the same shape.
    virtual std::string kind() const = 0;
    virtual std::vector<long> shape_ints() const = 0;
    virtual std::vector<double> shape_doubles() const { return {}; }
};

// Plain tabular Q(s, a), zero-initialized.
class ActionValueTable : public QModel {
public:
    ActionValueTable(int n_states, int n_actions);

    int n_actions() const override { return n_actions_; }
    int n_states() const override { return n_states_; }
    std::vector<double> predict(int state) const override;

    double at(int state, int action) const;
    double& at(int state, int action);

    std::vector<double>& params() override { return values_; }
    const std::vector<double>& params() const override { return values_; }
    std::unique_ptr<QModel> clone() const override;

    std::string kind() const override { return "table"; }
    std::vector<long> shape_ints() const override { return {n_states_, n_actions_}; }

private:
    int n_states_;
    int n_actions_;
    std::vector<double> values_; // [s][a]
};

enum class Activation { relu, tanh };

// Fully connected network with linear output, evaluated on one-hot state
// features. Parameters are flat, per layer: W (out x in, row-major) then b.
class MlpQNetwork : public QModel {
public:
    // layer_sizes = [input_dim, hidden..., output_dim]
    MlpQNetwork(std::vector<int> layer_sizes, Activation activation = Activation::relu);

    int n_actions() const override { return layer_sizes_.back(); }
    int n_states() const override { return layer_sizes_.front(); }
    std::vector<double> predict(int state) const override;

    std::vector<double> forward(std::span<const double> features) const;

    // Backpropagates output_gradient (dLoss/dOutput) through the network,
    // accumulating dLoss/dParam into grads (flat, same layout as params).
    // Returns the forward output of this pass.
    std::vector<double> forward_backward(std::span<const double> features,
                                         std::span<const double> output_gradient,
                                         std::span<double> grads) const;

    // Independent fan-in-scaled uniform draws; biases zero.
    void init_random(Rng& rng);

    std::vector<double>& params() override { return params_; }
    const std::vector<double>& params() const override { return params_; }
    std::unique_ptr<QModel> clone() const override;

    const std::vector<int>& layer_sizes() const { return layer_sizes_; }
    Activation activation() const { return activation_; }
    int param_count() const { return static_cast<int>(params_.size()); }

    std::string kind() const override { return "mlp"; }
    std::vector<long> shape_ints() const override;

private:
    std::vector<int> layer_sizes_;
    Activation activation_;
    std::vector<double> params_;
    std::vector<std::size_t> w_offset_, b_offset_;

    std::vector<double> one_hot(int state) const;
};

// Categorical return-distribution model: an MLP body emitting
// n_actions * n_atoms logits; per-action probabilities via softmax.
// predict() returns per-action expected values z . p(s, a).
class CategoricalQModel : public QModel {
public:
    CategoricalQModel(int n_states, std::vector<int> hidden, int n_actions, Support support,
                      Activation activation = Activation::relu);

    int n_actions() const override { return n_actions_; }
    int n_states() const override { return body_.n_states(); }
    std::vector<double> predict(int state) const override;

    std::vector<double> action_logits(int state, int action) const;
    std::vector<double> action_distribution(int state, int action) const;
    std::vector<std::vector<double>> distributions(int state) const; // per action

    // Backprop of dLoss/dLogits for one action's atom block.
    void backward_action(int state, int action, std::span<const double> dlogits,
                         std::span<double> grads) const;

    void init_random(Rng& rng) { body_.init_random(rng); }

    std::vector<double>& params() override { return body_.params(); }
    const std::vector<double>& params() const override { return body_.params(); }
    std::unique_ptr<QModel> clone() const override;

    const Support& support() const { return support_; }
    const MlpQNetwork& body() const { return body_; }

    std::string kind() const override { return "categorical"; }
    std::vector<long> shape_ints() const override;
    std::vector<double> shape_doubles() const override { return {support_.v_min, support_.v_max}; }

private:
    int n_actions_;
    Support support_;
    MlpQNetwork body_;
};

// --- Ensemble aggregation -----------------------------------------------

using ModelView = std::vector<const QModel*>;

std::vector<double> ensemble_mean_values(const ModelView& members, int state);
double ensemble_value(const ModelView& members, int state); // max of the mean
int greedy_action(const ModelView& members, int state);     // lowest-index tie-break
// Per-action population standard deviation (divisor K).
std::vector<double> ensemble_std(const ModelView& members, int state);

// K independently initialized members of identical shape.
class Ensemble {
public:
    Ensemble() = default;
    explicit Ensemble(std::vector<std::unique_ptr<QModel>> members);

    int size() const { return static_cast<int>(members_.size()); }
    QModel& member(int k) { return *members_[k]; }
    const QModel& member(int k) const { return *members_[k]; }
    ModelView view() const;

private:
    std::vector<std::unique_ptr<QModel>> members_;
};

// Lagging copies of the live parameters, or a zero-lag alias of them.
// In online mode every read reflects the current live parameters.
class TargetEnsemble {
public:
    static TargetEnsemble online(const Ensemble& live);
    static TargetEnsemble lagging(const Ensemble& live, long sync_period);

    bool is_online() const { return !sync_period_.has_value(); }
    long sync_period() const { return sync_period_.value_or(0); }

    // Lagging mode: copies live params into the targets exactly when
    // step % sync_period == 0. Online mode: no-op.
    void sync(const Ensemble& live, long step);
    void force_sync(const Ensemble& live);

    ModelView view() const;

private:
    TargetEnsemble() = default;
    const Ensemble* live_ = nullptr;
    std::vector<std::unique_ptr<QModel>> copies_;
    std::optional<long> sync_period_;
};

// Ring of the most recent parameter snapshots of a single live model
// (the snapshot-reuse training mode). Mean-value queries over the history
// follow ensemble_mean_values semantics via view().
class SnapshotHistory {
public:
    explicit SnapshotHistory(int capacity);

    void push(const QModel& current);
    int size() const { return static_cast<int>(snaps_.size()); }
    int capacity() const { return capacity_; }
    ModelView view() const;

private:
    int capacity_;
    std::deque<std::unique_ptr<QModel>> snaps_;
};

// --- Optimizers -----------------------------------------------------------

enum class OptimizerKind { sgd, sgd_decay, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double alpha = 6.25e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1.5e-4;
    double decay = 1e-3; // sgd_decay: step = alpha / (1 + decay * visits_i)
};

// Per-model optimizer state. step() applies one update in place; non-finite
// gradient entries raise NumericalError before any parameter changes.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    void step(std::vector<double>& params, std::span<const double> grads);

    const OptimizerConfig& config() const { return cfg_; }
    long steps_taken() const { return t_; }

private:
    OptimizerConfig cfg_;
    std::vector<double> m_, v_;      // adam moments
    std::vector<double> visits_;     // sgd_decay per-parameter counters
    long t_ = 0;
};

// Rescales grads in place so the global L2 norm is at most max_norm.
// max_norm <= 0 disables clipping.
void clip_gradient_norm(std::span<double> grads, double max_norm);

// --- Checkpoints -----------------------------------------------------------

// Binary format, documented in the README: magic "MQCK" + version, then
// per member a kind tag, shape integers/doubles, and the flat parameter
// array as little-endian IEEE-754 doubles.
void save_checkpoint(const std::string& path, const Ensemble& ensemble);
Ensemble load_checkpoint(const std::string& path);

std::unique_ptr<QModel> make_model(const std::string& kind, const std::vector<long>& shape_ints,
                                   const std::vector<double>& shape_doubles);

} // namespace meanq
