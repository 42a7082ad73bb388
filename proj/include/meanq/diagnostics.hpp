#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "meanq/environments.hpp"
#include "meanq/value_model.hpp"

namespace meanq {

// The value estimator an algorithm acts and reports with: for ensembles
// the member mean, for a single network its own outputs, for snapshot
// training the snapshot mean.
struct AgentView {
    std::function<std::vector<double>(int)> action_values;

    double value(int state) const {
        const std::vector<double> q = action_values(state);
        double best = q[0];
        for (std::size_t a = 1; a < q.size(); ++a) best = std::max(best, q[a]);
        return best;
    }
    int greedy(int state) const {
        const std::vector<double> q = action_values(state);
        int best = 0;
        for (std::size_t a = 1; a < q.size(); ++a)
            if (q[a] > q[best]) best = static_cast<int>(a);
        return best;
    }
};

AgentView make_agent_view(ModelView members);

struct EvalResult {
    double undiscounted = 0.0;
    double discounted = 0.0;
};

// Greedy-policy evaluation plus the bias statistic, all from one shared
// set of n_eval episodes.
struct CheckpointEval {
    EvalResult returns;
    double bias = 0.0;   // mean of V(s_0) - realized discounted return
    double v_s0 = 0.0;   // mean of V(s_0) over the episodes' own initial states
};

CheckpointEval checkpoint_eval(const AgentView& agent, EnvironmentHandle& env, int n_eval,
                               double gamma);

EvalResult eval_performance(const AgentView& agent, EnvironmentHandle& env, int n_eval,
                            double gamma);

double estimation_bias(const AgentView& agent, EnvironmentHandle& env, int n_eval, double gamma);

struct VarianceResult {
    double raw_std = 0.0;                 // cross-run sample std, averaged over resets
    std::optional<double> relative_std;   // raw / standardized performance
};

// v_s0[run][reset] at one matched checkpoint. Normalization references:
// reference_low = random-policy return, reference_high = optimal return.
// A non-positive standardized performance leaves the relative form unset.
VarianceResult estimation_variance(const std::vector<std::vector<double>>& v_s0, double mean_perf,
                                   double reference_low, double reference_high);

// E[max_a Q(s0, a)] - max_a E[Q(s0, a)] across runs; reported as computed
// (may be slightly negative under sampling noise).
double jensen_gap(const std::vector<std::vector<double>>& per_run_action_values);

// Mean per-reset gap; q[run][reset][action].
double jensen_gap_over_resets(const std::vector<std::vector<std::vector<double>>>& q);

struct GroupedResult {
    std::vector<double> per_group;
    double mean = 0.0;
    std::optional<double> std_dev; // unset for a single group
};

// Splits runs into contiguous equal groups and applies the statistic
// within each; reports across-group mean and sample std.
template <typename T, typename Stat>
GroupedResult grouped_stats(const std::vector<T>& runs, int group_size, Stat&& stat) {
    if (group_size < 1 || runs.empty() || runs.size() % static_cast<std::size_t>(group_size) != 0)
        throw std::invalid_argument("grouped_stats: runs must divide into equal groups");
    GroupedResult out;
    const std::size_t n_groups = runs.size() / static_cast<std::size_t>(group_size);
    for (std::size_t g = 0; g < n_groups; ++g) {
        std::vector<T> group(runs.begin() + g * group_size, runs.begin() + (g + 1) * group_size);
        out.per_group.push_back(stat(group));
    }
    double sum = 0.0;
    for (const double x : out.per_group) sum += x;
    out.mean = sum / static_cast<double>(out.per_group.size());
    if (out.per_group.size() >= 2) {
        double ss = 0.0;
        for (const double x : out.per_group) ss += (x - out.mean) * (x - out.mean);
        out.std_dev = std::sqrt(ss / static_cast<double>(out.per_group.size() - 1));
    }
    return out;
}

// --- Checkpoint records and CSV schemas -----------------------------------

struct CheckpointRecord {
    int run_id = 0;
    long step = 0;
    double eval_return_undiscounted = 0.0;
    double eval_return_discounted = 0.0;
    double v_s0 = 0.0;
    double bias = 0.0;
    double loss_mean = 0.0;
    double priority_mean = 0.0;
    double epsilon = 0.0;
    // Cross-run payload, present only at matched cross-run checkpoints:
    // V(s0) and the aggregated action values at shared initial-state draws.
    std::vector<double> v_s0_resets;
    std::vector<std::vector<double>> q_s0_resets;
};

struct CrossRunStat {
    long step = 0;
    int n_runs = 0;
    int n_s0_resets = 0;
    double return_mean = 0.0;
    double return_std = 0.0;
    double v_s0_std = 0.0;
    std::optional<double> v_s0_std_rel;
    double jensen_gap_value = 0.0;
    std::optional<double> jensen_gap_rel;
};

// One row per checkpoint. Header:
// step,eval_return_undiscounted,eval_return_discounted,v_s0,bias,loss_mean,priority_mean,epsilon
void write_run_csv(std::ostream& os, std::span<const CheckpointRecord> records);
std::vector<CheckpointRecord> read_run_csv(std::istream& is);

// Cross-run statistics at checkpoints where every run carries a payload.
std::vector<CrossRunStat> compute_cross_run_stats(
    const std::vector<std::vector<CheckpointRecord>>& runs, double reference_low,
    double reference_high);

// Header: step,n_runs,n_s0_resets,return_mean,return_std,v_s0_std,
// v_s0_std_rel,jensen_gap,jensen_gap_rel
void write_cross_run_csv(std::ostream& os, std::span<const CrossRunStat> stats);

} // namespace meanq
