#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "meanq/rng.hpp"

namespace meanq {

// Exact description of a finite MDP. Rewards are expected values r(s, a);
// per-step reward noise, when an environment has any, lives in the
// interactive EnvironmentHandle so that value iteration stays exact.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;       // p(s'|s,a), laid out [s][a][s']
    std::vector<double> reward;           // r(s,a), laid out [s][a]
    double gamma = 0.99;
    std::vector<double> initial_distribution;
    std::vector<std::uint8_t> terminal;   // terminal states self-absorb with zero reward

    double p(int s, int a, int s2) const {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& p_ref(int s, int a, int s2) {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
    double& r_ref(int s, int a) { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
    bool is_terminal(int s) const { return terminal[s] != 0; }

    // Checks row sums, finiteness, terminal self-absorption. Throws
    // std::invalid_argument on violation.
    void validate() const;
};

struct ValueIterationResult {
    std::vector<double> q_star; // [s][a]
    std::vector<double> v_star; // row max of q_star
    long iterations = 0;
    double residual = 0.0;

    double q(int s, int a, int n_actions) const {
        return q_star[static_cast<std::size_t>(s) * n_actions + a];
    }
};

// Bellman optimality fixed point by synchronous sweeps until the sup-norm
// residual drops below tol. Requires gamma < 1.
ValueIterationResult value_iteration(const TabularMdp& mdp, double tol = 1e-10,
                                     long max_iterations = 1000000);

struct StepResult {
    int next_state = 0;
    double reward = 0.0;
    bool terminal = false;
};

// Interactive layer over a TabularMdp: samples transitions, adds optional
// Gaussian reward noise, enforces the episode cap. After a terminal state
// or the cap, step() is rejected until reset().
class EnvironmentHandle {
public:
    EnvironmentHandle(TabularMdp mdp, double reward_noise_sigma, int episode_cap, Rng rng);

    int reset();
    StepResult step(int action);

    bool episode_over() const { return needs_reset_; }
    int state() const { return state_; }
    int steps_in_episode() const { return steps_in_episode_; }
    const TabularMdp& mdp() const { return mdp_; }
    double noise_sigma() const { return noise_sigma_; }
    int episode_cap() const { return episode_cap_; }

private:
    TabularMdp mdp_;
    double noise_sigma_;
    int episode_cap_;
    Rng rng_;
    int state_ = 0;
    int steps_in_episode_ = 0;
    bool needs_reset_ = true;
};

using Policy = std::function<int(int state)>;

struct EpisodeRecord {
    std::vector<int> states;    // s_0, s_1, ..., one longer than actions
    std::vector<int> actions;
    std::vector<double> rewards;
    double discounted_return = 0.0;
    double undiscounted_return = 0.0;
};

// Resets the environment, then follows the policy for at most max_steps
// (and at most the environment's episode cap).
EpisodeRecord run_episode(EnvironmentHandle& env, const Policy& policy, int max_steps,
                          double gamma);

struct McReturn {
    double mean_discounted = 0.0;
    double mean_undiscounted = 0.0;
    double std_discounted = 0.0;    // sample std, divisor n-1 (0 when n = 1)
    double std_undiscounted = 0.0;
};

McReturn monte_carlo_return(EnvironmentHandle& env, const Policy& policy, int n_episodes,
                            double gamma, int max_steps = 200);

// --- Built-in environment catalogue ------------------------------------

// n-state deterministic chain: actions {0 = left, 1 = right}; reward 1 on
// the transition into the far-end terminal state, 0 elsewhere; start at
// state 0.
TabularMdp chain_walk(int n, double gamma);

// w x h gridworld. Start bottom-left, terminal goal bottom-right, cliff
// cells along the bottom row between them. Moving lands in the intended
// direction with probability 1 - p_slip, and slips perpendicular with
// p_slip/2 each. Entering the cliff redirects to the start; r(s,a) folds
// in the +1 goal / -1 fall outcomes by expectation plus a -0.01 step cost.
TabularMdp cliff_grid(int w, int h, double p_slip, double gamma);

// Single self-looping state with m actions of identical expected reward.
// The per-step reward noise (interactive layer) is what makes it a
// max-bias testbed.
TabularMdp biased_bandit(int m, double mean_reward, double gamma);

// Parsed "name(key=value, ...)" environment descriptor.
struct EnvDescriptor {
    std::string name;
    std::map<std::string, double> params; // ordered for canonical serialization
};

EnvDescriptor parse_env_descriptor(const std::string& text);
std::string format_env_descriptor(const EnvDescriptor& d);

struct BuiltEnvironment {
    TabularMdp mdp;
    double noise_sigma = 0.0;
    int episode_cap = 200;
};

// Instantiates a catalogue environment:
//   chain_walk(n=5)
//   noisy_chain(n=9, sigma=0.5)       chain_walk + reward noise
//   cliff_grid(w=5, h=3, p_slip=0.1)
//   biased_bandit(m=4, mean=0, sigma=1)
// Optional common key: cap (episode step cap, default 200).
BuiltEnvironment make_environment(const EnvDescriptor& d, double gamma);

} // namespace meanq
