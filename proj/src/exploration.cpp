#include "meanq/exploration.hpp"

#include <algorithm>
#include <stdexcept>

namespace meanq {

double epsilon_at(const EpsilonSchedule& schedule, long t) {
    if (schedule.horizon <= 0) throw std::invalid_argument("EpsilonSchedule: horizon must be > 0");
    if (schedule.start < schedule.end || schedule.end < 0.0)
        throw std::invalid_argument("EpsilonSchedule: requires start >= end >= 0");
    if (t < 0) throw std::invalid_argument("epsilon_at: negative step");
    if (t >= schedule.horizon) return schedule.end;
    const double frac = static_cast<double>(t) / static_cast<double>(schedule.horizon);
    return schedule.start + (schedule.end - schedule.start) * frac;
}

int epsilon_greedy_action(const ModelView& members, int state, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("epsilon_greedy_action: epsilon in [0,1]");
    if (rng.uniform() < epsilon) {
        const int n = members.front()->n_actions();
        return rng.uniform_int(n);
    }
    return greedy_action(members, state);
}

int ucb_action(const ModelView& members, int state, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("ucb_action: lambda must be >= 0");
    const std::vector<double> mean = ensemble_mean_values(members, state);
    const std::vector<double> std_dev = ensemble_std(members, state);
    int best = 0;
    double best_score = mean[0] + lambda * std_dev[0];
    for (std::size_t a = 1; a < mean.size(); ++a) {
        const double score = mean[a] + lambda * std_dev[a];
        if (score > best_score) {
            best = static_cast<int>(a);
            best_score = score;
        }
    }
    return best;
}

} // namespace meanq
