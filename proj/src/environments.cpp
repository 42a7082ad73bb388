#include "meanq/environments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meanq {

void TabularMdp::validate() const {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("TabularMdp: dimensions must be positive");
    if (transition.size() != static_cast<std::size_t>(n_states) * n_actions * n_states ||
        reward.size() != static_cast<std::size_t>(n_states) * n_actions ||
        initial_distribution.size() != static_cast<std::size_t>(n_states) ||
        terminal.size() != static_cast<std::size_t>(n_states))
        throw std::invalid_argument("TabularMdp: field sizes inconsistent with dimensions");
    for (const double x : reward)
        if (!std::isfinite(x)) throw std::invalid_argument("TabularMdp: non-finite reward");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < n_states; ++s2) {
                const double prob = p(s, a, s2);
                if (prob < 0.0 || !std::isfinite(prob))
                    throw std::invalid_argument("TabularMdp: invalid transition probability");
                sum += prob;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
            if (is_terminal(s)) {
                if (p(s, a, s) != 1.0 || r(s, a) != 0.0)
                    throw std::invalid_argument(
                        "TabularMdp: terminal states must self-absorb with zero reward");
            }
        }
    }
    double init_sum = 0.0;
    for (const double x : initial_distribution) {
        if (x < 0.0 || !std::isfinite(x))
            throw std::invalid_argument("TabularMdp: invalid initial distribution");
        init_sum += x;
    }
    if (std::abs(init_sum - 1.0) > 1e-12)
        throw std::invalid_argument("TabularMdp: initial distribution does not sum to 1");
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, long max_iterations) {
    if (mdp.gamma >= 1.0)
        throw std::invalid_argument("value_iteration: requires gamma < 1");
    mdp.validate();

    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    ValueIterationResult out;
    out.q_star.assign(static_cast<std::size_t>(S) * A, 0.0);
    out.v_star.assign(S, 0.0);
    std::vector<double> q_next(out.q_star.size(), 0.0);

    double residual = 0.0;
    long iter = 0;
    for (; iter < max_iterations; ++iter) {
        residual = 0.0;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double ev = 0.0;
                for (int s2 = 0; s2 < S; ++s2) {
                    const double prob = mdp.p(s, a, s2);
                    if (prob != 0.0) ev += prob * out.v_star[s2];
                }
                const double q = mdp.r(s, a) + mdp.gamma * ev;
                q_next[static_cast<std::size_t>(s) * A + a] = q;
                residual = std::max(residual,
                                    std::abs(q - out.q_star[static_cast<std::size_t>(s) * A + a]));
            }
        }
        out.q_star.swap(q_next);
        for (int s = 0; s < S; ++s) {
            double best = out.q_star[static_cast<std::size_t>(s) * A];
            for (int a = 1; a < A; ++a)
                best = std::max(best, out.q_star[static_cast<std::size_t>(s) * A + a]);
            out.v_star[s] = best;
        }
        if (residual < tol) {
            ++iter;
            break;
        }
    }
    out.iterations = iter;
    out.residual = residual;
    return out;
}

EnvironmentHandle::EnvironmentHandle(TabularMdp mdp, double reward_noise_sigma, int episode_cap,
                                     Rng rng)
    : mdp_(std::move(mdp)), noise_sigma_(reward_noise_sigma), episode_cap_(episode_cap),
      rng_(rng) {
    mdp_.validate();
    if (episode_cap_ <= 0) throw std::invalid_argument("EnvironmentHandle: episode cap must be positive");
}

int EnvironmentHandle::reset() {
    const double u = rng_.uniform();
    double cum = 0.0;
    int s0 = mdp_.n_states - 1;
    for (int s = 0; s < mdp_.n_states; ++s) {
        cum += mdp_.initial_distribution[s];
        if (u < cum) {
            s0 = s;
            break;
        }
    }
    state_ = s0;
    steps_in_episode_ = 0;
    needs_reset_ = false;
    return s0;
}

StepResult EnvironmentHandle::step(int action) {
    if (needs_reset_)
        throw std::logic_error("EnvironmentHandle: step after terminal/cap; reset required");
    if (action < 0 || action >= mdp_.n_actions)
        throw std::out_of_range("EnvironmentHandle: action index out of range");

    double reward = mdp_.r(state_, action);
    if (noise_sigma_ > 0.0) reward += noise_sigma_ * rng_.gaussian();

    const double u = rng_.uniform();
    double cum = 0.0;
    int next = mdp_.n_states - 1;
    for (int s2 = 0; s2 < mdp_.n_states; ++s2) {
        cum += mdp_.p(state_, action, s2);
        if (u < cum) {
            next = s2;
            break;
        }
    }

    state_ = next;
    ++steps_in_episode_;
    const bool terminal = mdp_.is_terminal(next);
    if (terminal || steps_in_episode_ >= episode_cap_) needs_reset_ = true;
    return StepResult{next, reward, terminal};
}

EpisodeRecord run_episode(EnvironmentHandle& env, const Policy& policy, int max_steps,
                          double gamma) {
    EpisodeRecord rec;
    rec.states.push_back(env.reset());
    double discount = 1.0;
    for (int t = 0; t < max_steps && !env.episode_over(); ++t) {
        const int a = policy(rec.states.back());
        const StepResult sr = env.step(a);
        rec.actions.push_back(a);
        rec.rewards.push_back(sr.reward);
        rec.states.push_back(sr.next_state);
        rec.discounted_return += discount * sr.reward;
        rec.undiscounted_return += sr.reward;
        discount *= gamma;
    }
    return rec;
}

McReturn monte_carlo_return(EnvironmentHandle& env, const Policy& policy, int n_episodes,
                            double gamma, int max_steps) {
    if (n_episodes < 1) throw std::invalid_argument("monte_carlo_return: n_episodes >= 1");
    std::vector<double> disc(n_episodes), undisc(n_episodes);
    for (int i = 0; i < n_episodes; ++i) {
        const EpisodeRecord rec = run_episode(env, policy, max_steps, gamma);
        disc[i] = rec.discounted_return;
        undisc[i] = rec.undiscounted_return;
    }
    auto mean_of = [](const std::vector<double>& xs) {
        double m = 0.0;
        for (const double x : xs) m += x;
        return m / static_cast<double>(xs.size());
    };
    auto sample_std = [](const std::vector<double>& xs, double mean) {
        if (xs.size() < 2) return 0.0;
        double ss = 0.0;
        for (const double x : xs) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(xs.size() - 1));
    };
    McReturn out;
    out.mean_discounted = mean_of(disc);
    out.mean_undiscounted = mean_of(undisc);
    out.std_discounted = sample_std(disc, out.mean_discounted);
    out.std_undiscounted = sample_std(undisc, out.mean_undiscounted);
    return out;
}

namespace {

TabularMdp blank_mdp(int n_states, int n_actions, double gamma) {
    TabularMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.gamma = gamma;
    m.transition.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    m.initial_distribution.assign(n_states, 0.0);
    m.terminal.assign(n_states, 0);
    return m;
}

void make_absorbing(TabularMdp& m, int s) {
    m.terminal[s] = 1;
    for (int a = 0; a < m.n_actions; ++a) {
        for (int s2 = 0; s2 < m.n_states; ++s2) m.p_ref(s, a, s2) = 0.0;
        m.p_ref(s, a, s) = 1.0;
        m.r_ref(s, a) = 0.0;
    }
}

} // namespace

TabularMdp chain_walk(int n, double gamma) {
    if (n < 2) throw std::invalid_argument("chain_walk: need at least 2 states");
    TabularMdp m = blank_mdp(n, 2, gamma);
    m.initial_distribution[0] = 1.0;
    const int goal = n - 1;
    for (int s = 0; s < n - 1; ++s) {
        m.p_ref(s, 0, std::max(s - 1, 0)) = 1.0; // left
        m.p_ref(s, 1, s + 1) = 1.0;              // right
    }
    m.r_ref(n - 2, 1) = 1.0; // reward on reaching the far end
    make_absorbing(m, goal);
    return m;
}

TabularMdp cliff_grid(int w, int h, double p_slip, double gamma) {
    if (w < 3 || h < 2) throw std::invalid_argument("cliff_grid: need w >= 3, h >= 2");
    if (p_slip < 0.0 || p_slip > 1.0) throw std::invalid_argument("cliff_grid: p_slip in [0,1]");

    const int n_states = w * h;
    TabularMdp m = blank_mdp(n_states, 4, gamma);
    auto idx = [w](int x, int y) { return y * w + x; };
    const int start = idx(0, 0);
    const int goal = idx(w - 1, 0);
    auto is_cliff = [&](int x, int y) { return y == 0 && x > 0 && x < w - 1; };

    // Exploring starts: episodes begin uniformly over the safe non-goal
    // cells, so initial-state statistics average over the whole grid.
    const int n_safe = n_states - (w - 2) - 1;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!is_cliff(x, y) && idx(x, y) != goal)
                m.initial_distribution[idx(x, y)] = 1.0 / static_cast<double>(n_safe);

    // action -> (dx, dy): 0 up, 1 right, 2 down, 3 left
    const int dx[4] = {0, 1, 0, -1};
    const int dy[4] = {1, 0, -1, 0};

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int s = idx(x, y);
            if (s == goal || is_cliff(x, y)) continue; // goal handled below; cliff unreachable
            for (int a = 0; a < 4; ++a) {
                // Perpendicular slips of the intended move.
                const int moves[3] = {a, (a + 1) % 4, (a + 3) % 4};
                const double probs[3] = {1.0 - p_slip, p_slip / 2.0, p_slip / 2.0};
                double expected_reward = -0.01; // per-step cost
                for (int i = 0; i < 3; ++i) {
                    if (probs[i] == 0.0) continue;
                    int nx = std::clamp(x + dx[moves[i]], 0, w - 1);
                    int ny = std::clamp(y + dy[moves[i]], 0, h - 1);
                    if (is_cliff(nx, ny)) {
                        expected_reward += -1.0 * probs[i]; // fall penalty, back to start
                        m.p_ref(s, a, start) += probs[i];
                    } else {
                        if (idx(nx, ny) == goal) expected_reward += 1.0 * probs[i];
                        m.p_ref(s, a, idx(nx, ny)) += probs[i];
                    }
                }
                m.r_ref(s, a) = expected_reward;
            }
        }
    }
    // Cliff cells are never occupied; give them a valid self-loop row.
    for (int x = 1; x < w - 1; ++x) {
        const int s = idx(x, 0);
        for (int a = 0; a < 4; ++a) m.p_ref(s, a, s) = 1.0;
    }
    make_absorbing(m, goal);
    return m;
}

TabularMdp biased_bandit(int m_actions, double mean_reward, double gamma) {
    if (m_actions < 1) throw std::invalid_argument("biased_bandit: need at least 1 action");
    TabularMdp m = blank_mdp(1, m_actions, gamma);
    m.initial_distribution[0] = 1.0;
    for (int a = 0; a < m_actions; ++a) {
        m.p_ref(0, a, 0) = 1.0;
        m.r_ref(0, a) = mean_reward;
    }
    return m;
}

EnvDescriptor parse_env_descriptor(const std::string& text) {
    EnvDescriptor d;
    const auto open = text.find('(');
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    if (open == std::string::npos) {
        d.name = trim(text);
        if (d.name.empty()) throw std::invalid_argument("environment descriptor: empty name");
        return d;
    }
    const auto close = text.rfind(')');
    if (close == std::string::npos || close < open)
        throw std::invalid_argument("environment descriptor: unbalanced parentheses");
    d.name = trim(text.substr(0, open));
    std::string args = text.substr(open + 1, close - open - 1);
    std::size_t pos = 0;
    while (pos < args.size()) {
        auto comma = args.find(',', pos);
        if (comma == std::string::npos) comma = args.size();
        const std::string item = trim(args.substr(pos, comma - pos));
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("environment descriptor: expected key=value, got '" +
                                            item + "'");
            const std::string key = trim(item.substr(0, eq));
            const std::string val = trim(item.substr(eq + 1));
            try {
                std::size_t used = 0;
                const double x = std::stod(val, &used);
                if (used != val.size()) throw std::invalid_argument("trailing characters");
                d.params[key] = x;
            } catch (const std::exception&) {
                throw std::invalid_argument("environment descriptor: bad numeric value for '" +
                                            key + "'");
            }
        }
        pos = comma + 1;
    }
    return d;
}

std::string format_env_descriptor(const EnvDescriptor& d) {
    std::string out = d.name;
    if (d.params.empty()) return out;
    out += "(";
    bool first = true;
    for (const auto& [k, v] : d.params) {
        if (!first) out += ", ";
        first = false;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += k + "=" + buf;
    }
    out += ")";
    return out;
}

BuiltEnvironment make_environment(const EnvDescriptor& d, double gamma) {
    auto get = [&](const std::string& key, double fallback) {
        const auto it = d.params.find(key);
        return it == d.params.end() ? fallback : it->second;
    };
    auto require_keys = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : d.params) {
            bool ok = false;
            for (const char* a : allowed)
                if (k == a) ok = true;
            if (!ok)
                throw std::invalid_argument("environment '" + d.name + "': unknown parameter '" +
                                            k + "'");
        }
    };

    BuiltEnvironment out;
    out.episode_cap = static_cast<int>(get("cap", 200));
    if (d.name == "chain_walk") {
        require_keys({"n", "cap"});
        out.mdp = chain_walk(static_cast<int>(get("n", 5)), gamma);
    } else if (d.name == "noisy_chain") {
        require_keys({"n", "sigma", "cap"});
        out.mdp = chain_walk(static_cast<int>(get("n", 9)), gamma);
        out.noise_sigma = get("sigma", 0.5);
    } else if (d.name == "cliff_grid") {
        require_keys({"w", "h", "p_slip", "cap"});
        out.mdp = cliff_grid(static_cast<int>(get("w", 5)), static_cast<int>(get("h", 3)),
                             get("p_slip", 0.1), gamma);
    } else if (d.name == "biased_bandit") {
        require_keys({"m", "mean", "sigma", "cap"});
        out.mdp = biased_bandit(static_cast<int>(get("m", 4)), get("mean", 0.0), gamma);
        out.noise_sigma = get("sigma", 1.0);
    } else {
        throw std::invalid_argument("unknown environment '" + d.name + "'");
    }
    return out;
}

} // namespace meanq
