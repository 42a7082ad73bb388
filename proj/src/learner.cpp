#include "meanq/learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "meanq/errors.hpp"

namespace meanq {

int LearnerConfig::effective_warmup() const {
    return warmup > 0 ? warmup : std::max(batch_size, 1000);
}

void LearnerConfig::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("LearnerConfig: gamma must be in [0, 1)");
    if (ensemble_size < 1) throw std::invalid_argument("LearnerConfig: K >= 1 required");
    if (batch_size < 1) throw std::invalid_argument("LearnerConfig: B >= 1 required");
    if (multi_step < 1) throw std::invalid_argument("LearnerConfig: M >= 1 required");
    if (!online_targets && target_sync_period <= 0)
        throw std::invalid_argument("LearnerConfig: lagging targets need a positive sync period");
    if (updates_per_interaction.num < 1 || updates_per_interaction.den < 1)
        throw std::invalid_argument("LearnerConfig: updates_per_interaction must be positive");
    if (beta_start < 0.0 || beta_end > 1.0 || beta_start > beta_end)
        throw std::invalid_argument("LearnerConfig: beta anneal must satisfy 0 <= start <= end <= 1");
    if (beta_horizon < 1) throw std::invalid_argument("LearnerConfig: beta horizon must be >= 1");
    if (optimizer.alpha < 0.0)
        throw std::invalid_argument("LearnerConfig: alpha must be non-negative");
}

double multi_step_reward(std::span<const double> rewards, double gamma) {
    if (rewards.empty()) throw std::invalid_argument("multi_step_reward: empty reward list");
    double sum = 0.0;
    double discount = 1.0;
    for (const double r : rewards) {
        sum += discount * r;
        discount *= gamma;
    }
    return sum;
}

double discount_power(double gamma, int m) {
    double d = 1.0;
    for (int i = 0; i < m; ++i) d *= gamma;
    return d;
}

std::vector<double> compute_scalar_targets(std::span<const MultiStepSample> batch,
                                           const ModelView& targets, double gamma) {
    std::vector<double> ys;
    ys.reserve(batch.size());
    for (const MultiStepSample& sample : batch) {
        const double r_mstep = multi_step_reward(sample.rewards, gamma);
        double y = r_mstep;
        if (!sample.terminal) {
            const double v = ensemble_value(targets, sample.final_state);
            y = r_mstep + discount_power(gamma, sample.effective_m) * v;
        }
        if (!std::isfinite(y)) throw NumericalError("compute_scalar_targets: non-finite target");
        ys.push_back(y);
    }
    return ys;
}

ScalarLossResult scalar_loss(double y, double q, double is_weight) {
    if (!std::isfinite(y) || !std::isfinite(q) || !std::isfinite(is_weight))
        throw std::invalid_argument("scalar_loss: non-finite input");
    const double delta = y - q;
    ScalarLossResult out;
    out.loss = is_weight * delta * delta;
    out.dq = -2.0 * is_weight * delta;
    out.priority = std::abs(delta);
    return out;
}

std::vector<const CategoricalQModel*> distributional_view(const ModelView& members) {
    std::vector<const CategoricalQModel*> out;
    out.reserve(members.size());
    for (const QModel* m : members) {
        const auto* cat = dynamic_cast<const CategoricalQModel*>(m);
        if (!cat)
            throw std::invalid_argument("distributional mode requires categorical models");
        out.push_back(cat);
    }
    return out;
}

std::vector<std::vector<double>> compute_distributional_targets(
    std::span<const MultiStepSample> batch, const std::vector<const CategoricalQModel*>& targets,
    const Support& support, double gamma) {
    if (targets.empty())
        throw std::invalid_argument("compute_distributional_targets: empty target view");
    for (const CategoricalQModel* m : targets)
        if (!(m->support() == support))
            throw std::invalid_argument("compute_distributional_targets: support mismatch");

    std::vector<std::vector<double>> out;
    out.reserve(batch.size());
    std::vector<std::vector<std::vector<double>>> member_dists(targets.size());
    for (const MultiStepSample& sample : batch) {
        for (std::size_t k = 0; k < targets.size(); ++k)
            member_dists[k] = targets[k]->distributions(sample.final_state);
        const int a_star = distributional_greedy_action(member_dists, support);
        std::vector<std::vector<double>> picked(targets.size());
        for (std::size_t k = 0; k < targets.size(); ++k) picked[k] = member_dists[k][a_star];
        const std::vector<double> mixed = mean_distribution(picked);
        const double r_mstep = multi_step_reward(sample.rewards, gamma);
        const double discount =
            sample.terminal ? 1.0 : discount_power(gamma, sample.effective_m);
        out.push_back(project(mixed, r_mstep, discount, sample.terminal, support));
    }
    return out;
}

// --- Learner -----------------------------------------------------------------

Learner::Learner(LearnerConfig config, Ensemble& ensemble, TargetEnsemble& targets,
                 SnapshotHistory* snapshots, ReplayMemory& memory,
                 std::vector<Optimizer>& optimizers, std::vector<Rng>& sample_rngs)
    : cfg_(config), ensemble_(ensemble), targets_(targets), snapshots_(snapshots),
      memory_(memory), optimizers_(optimizers), sample_rngs_(sample_rngs) {
    cfg_.validate();
    if (cfg_.ensemble_mode == EnsembleMode::snapshot) {
        if (ensemble_.size() != 1)
            throw std::invalid_argument("Learner: snapshot mode uses a single live model");
        if (!snapshots_)
            throw std::invalid_argument("Learner: snapshot mode needs a snapshot history");
        if (snapshots_->capacity() != cfg_.ensemble_size)
            throw std::invalid_argument("Learner: snapshot capacity must equal K");
    } else {
        if (ensemble_.size() != cfg_.ensemble_size)
            throw std::invalid_argument("Learner: ensemble size must equal K");
    }
    if (static_cast<int>(optimizers_.size()) != ensemble_.size())
        throw std::invalid_argument("Learner: one optimizer per live member required");
    if (static_cast<int>(sample_rngs_.size()) != ensemble_.size())
        throw std::invalid_argument("Learner: one sampling stream per live member required");
    if (memory_.n_members() != ensemble_.size())
        throw std::invalid_argument("Learner: replay member count must match the ensemble");
    if (targets_.is_online() != cfg_.online_targets)
        throw std::invalid_argument("Learner: target ensemble mode disagrees with config");
}

double Learner::beta_at(long env_step) const {
    const double frac = std::min(
        static_cast<double>(env_step) / static_cast<double>(cfg_.beta_horizon), 1.0);
    return cfg_.beta_start + (cfg_.beta_end - cfg_.beta_start) * frac;
}

ModelView Learner::exploitation_view() const {
    if (cfg_.ensemble_mode == EnsembleMode::snapshot && snapshots_->size() > 0)
        return snapshots_->view();
    return ensemble_.view();
}

ModelView Learner::target_view() const {
    if (cfg_.ensemble_mode == EnsembleMode::snapshot) {
        if (snapshots_->size() > 0) return snapshots_->view();
        return ensemble_.view(); // before the first push
    }
    return targets_.view();
}

IterationMetrics Learner::train_iteration(long env_step) {
    IterationMetrics metrics;
    if (memory_.size() < cfg_.effective_warmup()) {
        pass_credits_ = 0; // no catch-up burst once warm
    } else {
        pass_credits_ += cfg_.updates_per_interaction.num;
        while (pass_credits_ >= cfg_.updates_per_interaction.den) {
            pass_credits_ -= cfg_.updates_per_interaction.den;
            run_gradient_pass(env_step, metrics);
        }
    }
    targets_.sync(ensemble_, env_step);
    return metrics;
}

void Learner::run_gradient_pass(long env_step, IterationMetrics& metrics) {
    ++metrics.gradient_passes;
    if (cfg_.ensemble_mode == EnsembleMode::snapshot) {
        const MemberMetrics mm = train_member(0, env_step);
        snapshots_->push(ensemble_.member(0));
        metrics.loss_sum += mm.loss_mean;
        metrics.priority_sum += mm.priority_mean;
        ++metrics.member_updates;
        return;
    }
    if (cfg_.sampling == SamplingMode::shared) {
        // One batch drawn from member 0's tree feeds every member; the
        // shared tree is updated once with the member-mean priorities.
        const std::vector<MultiStepSample> batch = memory_.sample_batch(
            0, cfg_.batch_size, cfg_.multi_step, beta_at(env_step), sample_rngs_[0]);
        std::vector<double> mean_priorities(batch.size(), 0.0);
        for (int k = 0; k < ensemble_.size(); ++k) {
            std::vector<double> prios;
            const MemberMetrics mm = train_member_on_batch(k, batch, prios);
            for (std::size_t b = 0; b < prios.size(); ++b) mean_priorities[b] += prios[b];
            metrics.loss_sum += mm.loss_mean;
            metrics.priority_sum += mm.priority_mean;
            ++metrics.member_updates;
        }
        const double inv_k = 1.0 / static_cast<double>(ensemble_.size());
        for (double& p : mean_priorities) p *= inv_k;
        std::vector<int> indices(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) indices[b] = batch[b].index;
        memory_.update_priorities(0, indices, mean_priorities);
        return;
    }
    for (int k = 0; k < ensemble_.size(); ++k) {
        const MemberMetrics mm = train_member(k, env_step);
        metrics.loss_sum += mm.loss_mean;
        metrics.priority_sum += mm.priority_mean;
        ++metrics.member_updates;
    }
}

MemberMetrics Learner::train_member(int k, long env_step) {
    const std::vector<MultiStepSample> batch = memory_.sample_batch(
        k, cfg_.batch_size, cfg_.multi_step, beta_at(env_step), sample_rngs_[k]);
    std::vector<double> priorities;
    const MemberMetrics mm = train_member_on_batch(k, batch, priorities);
    std::vector<int> indices(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) indices[b] = batch[b].index;
    memory_.update_priorities(k, indices, priorities);
    return mm;
}

MemberMetrics Learner::train_member_on_batch(int k, std::span<const MultiStepSample> batch,
                                             std::vector<double>& priorities_out) {
    QModel& model = ensemble_.member(k);
    std::vector<double> grads(model.params().size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    priorities_out.assign(batch.size(), 0.0);

    double loss_sum = 0.0;
    if (cfg_.value_mode == ValueMode::scalar) {
        const ModelView targets = target_view();
        const std::vector<double> ys = compute_scalar_targets(batch, targets, cfg_.gamma);
        auto* table = dynamic_cast<ActionValueTable*>(&model);
        auto* mlp = table ? nullptr : dynamic_cast<MlpQNetwork*>(&model);
        if (!table && !mlp)
            throw std::invalid_argument("Learner: scalar mode requires a table or MLP model");
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const MultiStepSample& sample = batch[b];
            const double q = model.predict(sample.state)[sample.action];
            const ScalarLossResult lr = scalar_loss(ys[b], q, sample.is_weight);
            loss_sum += lr.loss;
            priorities_out[b] = lr.priority;
            // TD step convention: the applied gradient is w*(q - y)/B, so a
            // unit-weight B=1 tabular SGD update is exactly Q += alpha*(y - Q).
            const double gq = (sample.is_weight * (q - ys[b])) * inv_b;
            if (table) {
                grads[static_cast<std::size_t>(sample.state) * table->n_actions() +
                      sample.action] += gq;
            } else {
                std::vector<double> features(mlp->n_states(), 0.0);
                features[sample.state] = 1.0;
                std::vector<double> dout(mlp->n_actions(), 0.0);
                dout[sample.action] = gq;
                mlp->forward_backward(features, dout, grads);
            }
        }
    } else {
        auto* cat = dynamic_cast<CategoricalQModel*>(&model);
        if (!cat)
            throw std::invalid_argument("Learner: distributional mode requires categorical models");
        const std::vector<const CategoricalQModel*> targets =
            distributional_view(target_view());
        const std::vector<std::vector<double>> cs =
            compute_distributional_targets(batch, targets, cfg_.support, cfg_.gamma);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const MultiStepSample& sample = batch[b];
            const std::vector<double> p = cat->action_distribution(sample.state, sample.action);
            const CrossEntropyResult ce = cross_entropy_loss(cs[b], p);
            loss_sum += sample.is_weight * ce.loss;
            priorities_out[b] = ce.loss;
            std::vector<double> dlogits(ce.logit_gradient.size());
            const double scale = sample.is_weight * inv_b;
            for (std::size_t j = 0; j < dlogits.size(); ++j)
                dlogits[j] = scale * ce.logit_gradient[j];
            cat->backward_action(sample.state, sample.action, dlogits, grads);
        }
    }

    clip_gradient_norm(grads, cfg_.grad_clip);
    optimizers_[k].step(model.params(), grads);

    MemberMetrics mm;
    mm.loss_mean = loss_sum * inv_b;
    double prio_sum = 0.0;
    for (const double p : priorities_out) prio_sum += p;
    mm.priority_mean = prio_sum * inv_b;
    return mm;
}

} // namespace meanq
