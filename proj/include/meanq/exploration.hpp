#pragma once

#include "meanq/rng.hpp"
#include "meanq/value_model.hpp"

namespace meanq {

struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.1;
    long horizon = 200000;
};

// Linear interpolation from start to end over horizon steps, clamped after.
double epsilon_at(const EpsilonSchedule& schedule, long t);

// Greedy on the ensemble mean with probability 1 - epsilon, uniform action
// otherwise. Consumes one uniform draw, plus one more on the explore branch.
int epsilon_greedy_action(const ModelView& members, int state, double epsilon, Rng& rng);

struct UcbConfig {
    double lambda = 1.0;
};

// argmax_a of mean_k Q_k(s,a) + lambda * std_k Q_k(s,a), population std,
// lowest-index tie-break.
int ucb_action(const ModelView& members, int state, double lambda);

} // namespace meanq
