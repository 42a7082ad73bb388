// Acceptance suite: one pass/fail line per criterion. Exit code is the
// number of failed criteria. Pass criterion ids as arguments to run a
// subset, e.g. `acceptance 2 3 5`.

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "meanq/diagnostics.hpp"
#include "meanq/environments.hpp"
#include "meanq/experiment.hpp"
#include "meanq/exploration.hpp"
#include "meanq/learner.hpp"
#include "meanq/value_model.hpp"
#include "projection_oracle.hpp"

using namespace meanq;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmtf(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

// ---- criterion 1: tabular convergence against the value-iteration oracle --

Outcome criterion_tabular_convergence() {
    const double gamma = 0.9;
    const TabularMdp mdp = chain_walk(5, gamma);
    const ValueIterationResult vi = value_iteration(mdp, 1e-12);

    LearnerConfig cfg;
    cfg.gamma = gamma;
    cfg.ensemble_size = 1;
    cfg.batch_size = 1;
    cfg.multi_step = 1;
    cfg.online_targets = true;
    cfg.warmup = 1;
    cfg.optimizer.kind = OptimizerKind::sgd_decay; // decaying step size
    cfg.optimizer.alpha = 0.5;
    cfg.optimizer.decay = 1e-3;
    cfg.beta_start = cfg.beta_end = 0.0;
    cfg.beta_horizon = 1;

    std::vector<std::unique_ptr<QModel>> members;
    members.push_back(std::make_unique<ActionValueTable>(mdp.n_states, mdp.n_actions));
    Ensemble ensemble(std::move(members));
    TargetEnsemble targets = TargetEnsemble::online(ensemble);
    ReplayMemory::Options ropts;
    ropts.priority_exponent = 0.0; // uniform priorities
    ReplayMemory memory(20000, 1, ropts);
    std::vector<Optimizer> opts(1, Optimizer(cfg.optimizer));
    std::vector<Rng> rngs{derive_rng(7, "replay", 0)};
    Learner learner(cfg, ensemble, targets, nullptr, memory, opts, rngs);

    EnvironmentHandle env(mdp, 0.0, 100, derive_rng(7, "env"));
    Rng explore = derive_rng(7, "explore");
    const EpsilonSchedule schedule{1.0, 0.2, 10000};

    std::uint64_t episode = 0;
    int state = env.reset();
    const long total_steps = 50000;
    for (long t = 1; t <= total_steps; ++t) {
        const double eps = epsilon_at(schedule, t - 1);
        const int a = epsilon_greedy_action(ensemble.view(), state, eps, explore);
        const StepResult sr = env.step(a);
        memory.push(Transition{state, a, sr.reward, sr.next_state, sr.terminal, episode});
        if (env.episode_over()) {
            state = env.reset();
            ++episode;
        } else {
            state = sr.next_state;
        }
        learner.train_iteration(t);
    }

    const auto& table = dynamic_cast<const ActionValueTable&>(ensemble.member(0));
    double max_err = 0.0;
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            max_err = std::max(max_err,
                               std::abs(table.at(s, a) - vi.q(s, a, mdp.n_actions)));
    Outcome out;
    out.pass = max_err < 0.01;
    out.detail = fmtf("max|Q - Q*| = %.5f (< 0.01 required) after %ld steps", max_err,
                      total_steps);
    return out;
}

// ---- criterion 2: projection against the naive scalar oracle ---------------

Outcome criterion_projection_oracle() {
    Rng rng(20202);
    double worst = 0.0, worst_mass = 0.0;
    const int cases = 10000;
    for (int i = 0; i < cases; ++i) {
        const double v_min = rng.uniform(-20, 0);
        const double v_max = v_min + rng.uniform(0.5, 30);
        const int atoms = 2 + rng.uniform_int(79);
        const Support support(v_min, v_max, atoms);
        const std::vector<double> p = oracle::random_distribution(rng, atoms);
        const double r = rng.uniform(v_min - 10, v_max + 10);
        const double discount = rng.uniform(0.05, 1.0);
        const bool terminal = rng.uniform() < 0.25;

        const std::vector<double> ours = project(p, r, discount, terminal, support);
        const std::vector<double> naive = oracle::naive_project(p, r, discount, terminal, support);
        double mass = 0.0;
        for (int j = 0; j < atoms; ++j) {
            worst = std::max(worst, std::abs(ours[j] - naive[j]));
            mass += ours[j];
        }
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
    }
    Outcome out;
    out.pass = worst < 1e-12 && worst_mass < 1e-9;
    out.detail = fmtf("%d cases: max |ours - oracle| = %.2e (<1e-12), max mass error = %.2e "
                      "(<1e-9)",
                      cases, worst, worst_mass);
    return out;
}

// ---- criterion 3: gradient checks -------------------------------------------

Outcome criterion_gradient_checks() {
    Rng rng(30303);
    double worst_mlp = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> sizes;
        sizes.push_back(1 + rng.uniform_int(5));
        const int depth = 1 + rng.uniform_int(2);
        for (int l = 0; l < depth; ++l) sizes.push_back(1 + rng.uniform_int(6));
        sizes.push_back(1 + rng.uniform_int(4));
        MlpQNetwork mlp(sizes, Activation::tanh);
        mlp.init_random(rng);
        std::vector<double> x(sizes.front()), g(sizes.back());
        for (double& v : x) v = rng.uniform(-1, 1);
        for (double& v : g) v = rng.uniform(-1, 1);

        std::vector<double> analytic(mlp.params().size(), 0.0);
        mlp.forward_backward(x, g, analytic);
        const double h = 1e-6;
        for (std::size_t i = 0; i < mlp.params().size(); ++i) {
            const double saved = mlp.params()[i];
            mlp.params()[i] = saved + h;
            const std::vector<double> up = mlp.forward(x);
            mlp.params()[i] = saved - h;
            const std::vector<double> down = mlp.forward(x);
            mlp.params()[i] = saved;
            double fd = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) fd += g[j] * (up[j] - down[j]);
            fd /= 2.0 * h;
            const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
            worst_mlp = std::max(worst_mlp, std::abs(fd - analytic[i]) / scale);
        }
    }

    double worst_ce = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int L = 2 + rng.uniform_int(31);
        const std::vector<double> c = oracle::random_distribution(rng, L);
        std::vector<double> logits(L);
        for (double& v : logits) v = rng.uniform(-3, 3);
        const CrossEntropyResult ce = cross_entropy_loss(c, softmax(logits));
        const double h = 1e-6;
        for (int j = 0; j < L; ++j) {
            std::vector<double> up = logits, down = logits;
            up[j] += h;
            down[j] -= h;
            const double fd = (cross_entropy_loss(c, softmax(up)).loss -
                               cross_entropy_loss(c, softmax(down)).loss) /
                              (2 * h);
            const double scale = std::max({1.0, std::abs(fd), std::abs(ce.logit_gradient[j])});
            worst_ce = std::max(worst_ce, std::abs(fd - ce.logit_gradient[j]) / scale);
        }
    }

    Outcome out;
    out.pass = worst_mlp < 1e-5 && worst_ce < 1e-5;
    out.detail = fmtf("100 MLP instances: max rel err %.2e; 100 cross-entropy instances: %.2e "
                      "(<1e-5)",
                      worst_mlp, worst_ce);
    return out;
}

// ---- criterion 4: prioritized sampling --------------------------------------

Outcome criterion_prioritized_sampling() {
    // Fixed priorities (3, 1, 1, 1): stratified frequencies vs p_i / root.
    SumTree tree(4);
    tree.set(0, 3.0);
    for (int i = 1; i < 4; ++i) tree.set(i, 1.0);
    Rng rng(40404);
    const int batches = 25000, B = 4;
    int counts[4] = {0};
    for (int i = 0; i < batches; ++i) {
        const double segment = tree.total() / B;
        for (int b = 0; b < B; ++b)
            ++counts[tree.prefix_sum_select((b + rng.uniform()) * segment)];
    }
    const int draws = batches * B;
    bool freq_ok = true;
    std::string freq_detail;
    for (int i = 0; i < 4; ++i) {
        const double p = tree.get(i) / tree.total();
        const double freq = counts[i] / static_cast<double>(draws);
        const double se = std::sqrt(p * (1 - p) / draws);
        if (std::abs(freq - p) >= 3.0 * se) freq_ok = false;
        if (i == 0) freq_detail = fmtf("leaf0 freq %.4f vs %.4f +/- %.4f", freq, p, 3 * se);
    }

    // Member isolation, bitwise.
    ReplayMemory mem(8, 4);
    for (int i = 0; i < 8; ++i) {
        Transition t;
        t.state = i;
        mem.push(t);
    }
    std::vector<std::vector<double>> before;
    for (int k = 1; k < 4; ++k) before.push_back(mem.tree(k).sum_nodes());
    mem.update_priorities(0, std::vector<int>{0, 3, 5}, std::vector<double>{2.0, 0.5, 9.0});
    bool isolated = true;
    for (int k = 1; k < 4; ++k)
        if (mem.tree(k).sum_nodes() != before[k - 1]) isolated = false;

    Outcome out;
    out.pass = freq_ok && isolated;
    out.detail = fmtf("%s; other trees bitwise unchanged: %s", freq_detail.c_str(),
                      isolated ? "yes" : "NO");
    return out;
}

// ---- criterion 5: Jensen-gap mechanism --------------------------------------

Outcome criterion_jensen_gap() {
    Rng rng(50505);
    const int n_runs = 100000;
    std::vector<std::vector<double>> runs(n_runs, std::vector<double>(2));
    for (auto& row : runs) {
        row[0] = rng.gaussian();
        row[1] = rng.gaussian();
    }
    const double gap = jensen_gap(runs);
    const double expected = 1.0 / std::sqrt(std::numbers::pi);

    std::vector<std::vector<double>> averaged(n_runs, std::vector<double>(2));
    for (auto& row : averaged)
        for (int a = 0; a < 2; ++a) {
            double sum = 0.0;
            for (int k = 0; k < 5; ++k) sum += rng.gaussian();
            row[a] = sum / 5.0;
        }
    const double gap5 = jensen_gap(averaged);
    const double ratio_err = std::abs(gap5 / gap * std::sqrt(5.0) - 1.0);

    Outcome out;
    out.pass = std::abs(gap - expected) <= 0.02 && ratio_err <= 0.05;
    out.detail = fmtf("gap = %.4f vs 1/sqrt(pi) = %.4f (+/-0.02); K=5 shrink ratio off by %.1f%% "
                      "(<=5%%)",
                      gap, expected, 100.0 * ratio_err);
    return out;
}

// ---- criterion 6: directional reproduction ----------------------------------

struct VariantStats {
    double final_return_mean = 0.0;
    double mean_bias = 0.0;        // checkpoints past the exploration anneal
    double mean_v_s0_std = 0.0;    // matched cross-run checkpoints past anneal
    double mean_jensen_gap = 0.0;
    double final_jensen_gap = 0.0;
};

VariantStats collect_stats(const RunManifest& m, long settle_step) {
    VariantStats out;
    double finals = 0.0;
    double bias_sum = 0.0;
    long bias_n = 0;
    for (const auto& run : m.records) {
        finals += run.back().eval_return_undiscounted;
        for (const auto& rec : run) {
            if (rec.step < settle_step) continue;
            bias_sum += rec.bias;
            ++bias_n;
        }
    }
    out.final_return_mean = finals / static_cast<double>(m.records.size());
    out.mean_bias = bias_sum / static_cast<double>(bias_n);

    double std_sum = 0.0, gap_sum = 0.0;
    long n = 0;
    for (const CrossRunStat& s : m.cross_run) {
        if (s.step < settle_step) continue;
        std_sum += s.v_s0_std;
        gap_sum += s.jensen_gap_value;
        ++n;
    }
    out.mean_v_s0_std = std_sum / static_cast<double>(n);
    out.mean_jensen_gap = gap_sum / static_cast<double>(n);
    out.final_jensen_gap = m.cross_run.back().jensen_gap_value;
    return out;
}

std::string directional_config(const std::string& env, const std::string& variant,
                               const std::string& out_dir) {
    std::ostringstream os;
    os << "environment = " << env << "\n";
    os << "variant = " << variant << "\n";
    os << "seeds = 0..19\n";
    os << "total_steps = 100000\n";
    os << "eval_every = 2000\n";
    os << "cross_run_every = 10000\n";
    os << "output_dir = " << out_dir << "\n";
    os << "[learner]\n";
    os << "gamma = 0.95\n";
    os << "alpha = 0.001\n";
    os << "batch_size = 32\n";
    os << "model = mlp(24)\n";
    os << "updates_per_interaction = 1/4\n";
    if (variant == "dqn" || variant == "meanq" || variant == "ens_dqn")
        os << "target_sync_period = 2000\n";
    os << "[exploration]\n";
    os << "epsilon_horizon = 20000\n";
    os << "[replay]\n";
    os << "capacity = 100000\n";
    return os.str();
}

Outcome criterion_directional() {
    const int jobs = std::max(2u, std::thread::hardware_concurrency());
    const long settle_step = 20000;
    const std::vector<std::string> envs = {"noisy_chain(n=9, sigma=0.5)",
                                           "cliff_grid(w=5, h=3, p_slip=0.1)"};
    const std::vector<std::string> variants = {"dqn", "dqn_no_target", "meanq",
                                               "meanq_no_target", "ens_dqn"};
    Outcome out;
    out.pass = true;
    std::ostringstream detail;
    for (const std::string& env : envs) {
        std::map<std::string, VariantStats> stats;
        for (const std::string& variant : variants) {
            std::string dir = "acceptance_runs/";
            for (const char c : env)
                dir += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
            dir += "_" + variant;
            const ExperimentConfig cfg = parse_config(directional_config(env, variant, dir));
            const RunManifest manifest = run_experiment(cfg, jobs);
            for (const auto& s : manifest.seeds)
                if (!s.ok()) {
                    out.pass = false;
                    detail << env << "/" << variant << " seed " << s.seed << " failed: "
                           << s.status << "; ";
                }
            if (manifest.records.size() >= 2)
                stats[variant] = collect_stats(manifest, settle_step);
        }
        const bool a = stats["meanq_no_target"].final_return_mean >=
                       stats["dqn"].final_return_mean;
        const bool b = stats["meanq_no_target"].mean_v_s0_std <
                           stats["dqn_no_target"].mean_v_s0_std &&
                       stats["meanq_no_target"].mean_jensen_gap <
                           stats["dqn_no_target"].mean_jensen_gap;
        const bool c = stats["dqn_no_target"].mean_bias > stats["dqn"].mean_bias;
        const bool d = stats["ens_dqn"].final_jensen_gap > stats["meanq"].final_jensen_gap;
        out.pass = out.pass && a && b && c && d;
        detail << env << ": (a) return " << stats["meanq_no_target"].final_return_mean
               << (a ? " >= " : " < ") << stats["dqn"].final_return_mean << "; (b) std "
               << stats["meanq_no_target"].mean_v_s0_std << (b ? " < " : " !< ")
               << stats["dqn_no_target"].mean_v_s0_std << ", gap "
               << stats["meanq_no_target"].mean_jensen_gap << " vs "
               << stats["dqn_no_target"].mean_jensen_gap << "; (c) bias "
               << stats["dqn_no_target"].mean_bias << (c ? " > " : " !> ")
               << stats["dqn"].mean_bias << "; (d) gap " << stats["ens_dqn"].final_jensen_gap
               << (d ? " > " : " !> ") << stats["meanq"].final_jensen_gap << " | ";
    }
    out.detail = detail.str();
    return out;
}

// ---- criterion 7: reduction identities --------------------------------------

// Minimal uniform ring buffer mirroring ReplayMemory's stratified draw for
// unit priorities: index = floor(u * size).
struct UniformRing {
    int capacity;
    std::vector<Transition> slots;
    int cursor = 0, size = 0;
    explicit UniformRing(int n) : capacity(n), slots(n) {}
    void push(const Transition& t) {
        slots[cursor] = t;
        cursor = (cursor + 1) % capacity;
        size = std::min(size + 1, capacity);
    }
    const Transition& draw(Rng& rng) const {
        int idx = static_cast<int>(rng.uniform() * size);
        if (idx >= size) idx = size - 1;
        return slots[idx];
    }
};

struct Trace {
    std::vector<int> states, actions;
    std::vector<double> rewards;
    std::vector<double> final_params;
    bool operator==(const Trace&) const = default;
};

// The learner pipeline at K=1, B=1, M=1, omega=0, plain SGD.
Trace learner_trace(bool online, long sync_period, std::uint64_t seed, long steps) {
    const TabularMdp mdp = chain_walk(5, 0.9);
    LearnerConfig cfg;
    cfg.gamma = 0.9;
    cfg.ensemble_size = 1;
    cfg.batch_size = 1;
    cfg.multi_step = 1;
    cfg.online_targets = online;
    cfg.target_sync_period = sync_period;
    cfg.warmup = 1;
    cfg.optimizer.kind = OptimizerKind::sgd;
    cfg.optimizer.alpha = 0.25;
    cfg.beta_horizon = 1;

    std::vector<std::unique_ptr<QModel>> members;
    members.push_back(std::make_unique<ActionValueTable>(mdp.n_states, mdp.n_actions));
    Ensemble ensemble(std::move(members));
    TargetEnsemble targets = online ? TargetEnsemble::online(ensemble)
                                    : TargetEnsemble::lagging(ensemble, sync_period);
    ReplayMemory::Options ropts;
    ropts.priority_exponent = 0.0;
    ReplayMemory memory(256, 1, ropts);
    std::vector<Optimizer> opts(1, Optimizer(cfg.optimizer));
    std::vector<Rng> rngs{derive_rng(seed, "replay", 0)};
    Learner learner(cfg, ensemble, targets, nullptr, memory, opts, rngs);

    EnvironmentHandle env(mdp, 0.0, 50, derive_rng(seed, "env"));
    Rng explore = derive_rng(seed, "explore");
    const EpsilonSchedule schedule{1.0, 0.1, 500};

    Trace trace;
    std::uint64_t episode = 0;
    int state = env.reset();
    for (long t = 1; t <= steps; ++t) {
        const double eps = epsilon_at(schedule, t - 1);
        const int a = epsilon_greedy_action(ensemble.view(), state, eps, explore);
        const StepResult sr = env.step(a);
        trace.states.push_back(state);
        trace.actions.push_back(a);
        trace.rewards.push_back(sr.reward);
        memory.push(Transition{state, a, sr.reward, sr.next_state, sr.terminal, episode});
        if (env.episode_over()) {
            state = env.reset();
            ++episode;
        } else {
            state = sr.next_state;
        }
        learner.train_iteration(t);
    }
    trace.final_params = ensemble.member(0).params();
    return trace;
}

// Directly coded baseline: classical Q-learning with a uniform replay draw
// and an optional lagging target table.
Trace baseline_trace(bool online, long sync_period, std::uint64_t seed, long steps) {
    const TabularMdp mdp = chain_walk(5, 0.9);
    const double alpha = 0.25, gamma = 0.9;
    const int A = mdp.n_actions;
    std::vector<double> q(static_cast<std::size_t>(mdp.n_states) * A, 0.0);
    std::vector<double> q_target = q;

    UniformRing ring(256);
    Rng replay_rng = derive_rng(seed, "replay", 0);
    EnvironmentHandle env(mdp, 0.0, 50, derive_rng(seed, "env"));
    Rng explore = derive_rng(seed, "explore");
    const EpsilonSchedule schedule{1.0, 0.1, 500};

    ActionValueTable acting_table(mdp.n_states, A); // reuse the shared argmax rule
    Trace trace;
    std::uint64_t episode = 0;
    int state = env.reset();
    for (long t = 1; t <= steps; ++t) {
        const double eps = epsilon_at(schedule, t - 1);
        acting_table.params() = q;
        const int a = epsilon_greedy_action({&acting_table}, state, eps, explore);
        const StepResult sr = env.step(a);
        trace.states.push_back(state);
        trace.actions.push_back(a);
        trace.rewards.push_back(sr.reward);
        ring.push(Transition{state, a, sr.reward, sr.next_state, sr.terminal, episode});
        if (env.episode_over()) {
            state = env.reset();
            ++episode;
        } else {
            state = sr.next_state;
        }

        const Transition& sample = ring.draw(replay_rng);
        const std::vector<double>& boot = online ? q : q_target;
        double y = sample.reward;
        if (!sample.terminal) {
            double vmax = boot[static_cast<std::size_t>(sample.next_state) * A];
            for (int a2 = 1; a2 < A; ++a2)
                vmax = std::max(vmax, boot[static_cast<std::size_t>(sample.next_state) * A + a2]);
            y = sample.reward + gamma * vmax;
        }
        double& cell = q[static_cast<std::size_t>(sample.state) * A + sample.action];
        cell += alpha * (y - cell);
        if (!online && t % sync_period == 0) q_target = q;
    }
    trace.final_params = q;
    return trace;
}

Outcome criterion_reductions() {
    Outcome out;
    out.pass = true;
    std::ostringstream detail;

    // K=1 + online targets reduces to classical no-target Q-learning.
    {
        const Trace a = learner_trace(true, 0, 4242, 1000);
        const Trace b = baseline_trace(true, 0, 4242, 1000);
        const bool ok = a == b;
        out.pass = out.pass && ok;
        detail << "no-target reduction bitwise: " << (ok ? "yes" : "NO") << "; ";
    }
    // K=1 + lagging targets reduces to directly coded DQN.
    {
        const Trace a = learner_trace(false, 50, 777, 1000);
        const Trace b = baseline_trace(false, 50, 777, 1000);
        const bool ok = a == b;
        out.pass = out.pass && ok;
        detail << "DQN reduction bitwise: " << (ok ? "yes" : "NO") << "; ";
    }
    // omega = 0 turns prefix-sum selection into the uniform floor(u * n) draw.
    {
        ReplayMemory::Options ropts;
        ropts.priority_exponent = 0.0;
        ReplayMemory mem(64, 1, ropts);
        for (int i = 0; i < 50; ++i) {
            Transition t;
            t.state = i;
            mem.push(t);
        }
        mem.update_priorities(0, std::vector<int>{3, 17}, std::vector<double>{5.0, 0.25});
        Rng rng(99);
        bool ok = true;
        for (int i = 0; i < 10000; ++i) {
            const double u = rng.uniform();
            const int direct = std::min(static_cast<int>(u * 50), 49);
            if (mem.tree(0).prefix_sum_select(u * mem.tree(0).total()) != direct) ok = false;
        }
        out.pass = out.pass && ok;
        detail << "omega=0 uniform draw: " << (ok ? "yes" : "NO") << "; ";
    }
    // lambda = 0 reduces UCB to the greedy policy.
    {
        Rng rng(55);
        bool ok = true;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<std::unique_ptr<QModel>> owners;
            ModelView view;
            for (int k = 0; k < 3; ++k) {
                auto t = std::make_unique<ActionValueTable>(4, 3);
                for (double& v : t->params()) v = rng.uniform(-2, 2);
                view.push_back(t.get());
                owners.push_back(std::move(t));
            }
            for (int s = 0; s < 4; ++s)
                if (ucb_action(view, s, 0.0) != greedy_action(view, s)) ok = false;
        }
        out.pass = out.pass && ok;
        detail << "lambda=0 greedy: " << (ok ? "yes" : "NO") << "; ";
    }
    // M = 1 targets equal the direct single-step bootstrap bitwise.
    {
        Rng rng(66);
        ReplayMemory mem(64, 1);
        for (int i = 0; i < 40; ++i) {
            Transition t;
            t.state = rng.uniform_int(6);
            t.action = rng.uniform_int(2);
            t.reward = rng.uniform(-1, 1);
            t.next_state = rng.uniform_int(6);
            t.terminal = rng.uniform() < 0.2;
            t.episode_id = i / 5;
            mem.push(t);
        }
        auto table = std::make_unique<ActionValueTable>(6, 2);
        for (double& v : table->params()) v = rng.uniform(-1, 1);
        const ModelView targets{table.get()};
        bool ok = true;
        for (int idx = 0; idx < 40; ++idx) {
            const MultiStepSample sample = mem.assemble(idx, 1);
            const double y = compute_scalar_targets({&sample, 1}, targets, 0.9)[0];
            const Transition& t = mem.at(idx);
            double direct = t.reward;
            if (!t.terminal) {
                const std::vector<double> row = table->predict(t.next_state);
                direct = t.reward + 0.9 * std::max(row[0], row[1]);
            }
            if (y != direct) ok = false;
        }
        out.pass = out.pass && ok;
        detail << "M=1 single-step targets: " << (ok ? "yes" : "NO");
    }
    out.detail = detail.str();
    return out;
}

// ---- criterion 8: CSV determinism -------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome criterion_determinism() {
    const auto base = [](const std::string& out_dir) {
        return "environment = noisy_chain(n=7, sigma=0.3)\nvariant = meanq_no_target\n"
               "seeds = 0,1\ntotal_steps = 6000\neval_every = 2000\ncross_run_every = 2000\n"
               "n_eval = 5\nn_s0_resets = 4\noutput_dir = " +
               out_dir +
               "\n[learner]\nensemble_size = 2\nalpha = 0.001\nbatch_size = 16\n"
               "model = mlp(12)\nwarmup = 200\n[exploration]\nepsilon_horizon = 2000\n";
    };
    const ExperimentConfig cfg_a = parse_config(base("acceptance_runs/det_a"));
    const ExperimentConfig cfg_b = parse_config(base("acceptance_runs/det_b"));
    std::filesystem::remove_all("acceptance_runs/det_a");
    std::filesystem::remove_all("acceptance_runs/det_b");
    const RunManifest a = run_experiment(cfg_a, 2);
    const RunManifest b = run_experiment(cfg_b, 1);
    bool ok = a.seeds.size() == b.seeds.size();
    for (std::size_t i = 0; ok && i < a.seeds.size(); ++i)
        ok = a.seeds[i].ok() && b.seeds[i].ok() &&
             slurp(a.seeds[i].csv_path) == slurp(b.seeds[i].csv_path);
    ok = ok && slurp(a.cross_run_csv) == slurp(b.cross_run_csv);
    Outcome out;
    out.pass = ok;
    out.detail = ok ? "reruns produced bytewise-identical per-seed and cross-run CSVs"
                    : "CSV bytes differ between reruns";
    return out;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

    struct Entry {
        int id;
        const char* name;
        double budget_seconds;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "tabular convergence vs value-iteration oracle", 10.0, criterion_tabular_convergence},
        {2, "categorical projection vs naive scalar oracle", 5.0, criterion_projection_oracle},
        {3, "backprop and cross-entropy gradient checks", 30.0, criterion_gradient_checks},
        {4, "prioritized sampling frequencies and isolation", 0.0, criterion_prioritized_sampling},
        {5, "Jensen gap magnitude and ensemble shrinkage", 10.0, criterion_jensen_gap},
        {6, "directional reproduction across variants", 1800.0, criterion_directional},
        {7, "configuration reduction identities", 0.0, criterion_reductions},
        {8, "per-seed CSV determinism", 0.0, criterion_determinism},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        if (!wanted(e.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome res;
        try {
            res = e.fn();
        } catch (const std::exception& ex) {
            res.pass = false;
            res.detail = std::string("exception: ") + ex.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (e.budget_seconds > 0.0 && seconds > e.budget_seconds) {
            res.pass = false;
            res.detail += fmtf(" [over %.0fs budget]", e.budget_seconds);
        }
        if (!res.pass) ++failures;
        std::printf("[%s] criterion %d: %s (%.1fs) %s\n", res.pass ? "PASS" : "FAIL", e.id,
                    e.name, seconds, res.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
