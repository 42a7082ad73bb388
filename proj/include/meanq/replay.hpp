#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "meanq/rng.hpp"

namespace meanq {

struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminal = false;
    std::uint64_t episode_id = 0;
};

// Complete binary tree over leaf priorities; internal nodes hold partial
// sums so prefix-sum selection and updates are O(log n). A parallel max
// tree tracks the largest current priority for insertion defaults.
class SumTree {
public:
    explicit SumTree(int capacity);

    void set(int leaf, double priority);
    double get(int leaf) const;
    double total() const { return sums_[1]; }
    double max_priority() const { return maxs_[1]; }
    int leaf_count() const { return leaf_count_; }

    // The unique leaf i with cumsum(p_0..p_{i-1}) <= mass < cumsum(p_0..p_i).
    // mass must lie in [0, total).
    int prefix_sum_select(double mass) const;

    // Raw node arrays (for consistency checks and bitwise comparisons).
    const std::vector<double>& sum_nodes() const { return sums_; }
    const std::vector<double>& max_nodes() const { return maxs_; }

private:
    int leaf_count_;
    std::vector<double> sums_; // 1-based heap layout, size 2*leaf_count
    std::vector<double> maxs_;
};

// One sampled training example: the stored transition expanded to at most
// M steps within its episode. terminal means the walk ended in a terminal
// transition (no bootstrap); terminated_early additionally means it did so
// before collecting M rewards.
struct MultiStepSample {
    int state = 0;
    int action = 0;
    std::vector<double> rewards;  // r^(0) .. r^(effective_m - 1), temporal order
    int final_state = 0;          // s^(M), the bootstrap state
    bool terminal = false;
    bool terminated_early = false;
    int effective_m = 1;
    int index = 0;                // buffer position of the head transition
    double is_weight = 1.0;
};

// w_b = (size * P(b))^(-beta), normalized by the batch maximum.
std::vector<double> importance_weights(std::span<const double> probabilities, int size,
                                       double beta);

struct ReplayOptions {
    double priority_exponent = 0.5;  // omega
    double priority_floor = 1e-6;    // epsilon_p
    double initial_priority = 1.0;   // used while a tree is empty
};

// Shared ring of transitions with one independent proportional-priority
// sum-tree per ensemble member. Not internally synchronized: one writer,
// priority updates serialized by the caller.
class ReplayMemory {
public:
    using Options = ReplayOptions;

    ReplayMemory(int capacity, int n_members, Options options = Options());

    // Stores the transition at the write cursor (evicting the oldest once
    // full) and primes every member's leaf with that tree's current max
    // priority. Returns the buffer index written.
    int push(const Transition& t);

    int size() const { return size_; }
    int capacity() const { return capacity_; }
    int n_members() const { return static_cast<int>(trees_.size()); }
    std::uint64_t total_pushes() const { return total_pushes_; }

    const Transition& at(int index) const;
    bool occupied(int index) const { return index >= 0 && index < size_; }

    // Expands the stored transition at index into an at-most-M-step sample
    // by walking temporal successors within the same episode.
    MultiStepSample assemble(int index, int max_steps) const;

    // B stratified proportional draws from member k's tree, with
    // importance weights at inverse-priority exponent beta.
    std::vector<MultiStepSample> sample_batch(int member, int batch_size, int max_steps,
                                              double beta, Rng& rng) const;

    // Sets member k's leaf priorities to (error + floor)^omega. Other
    // members' trees are untouched.
    void update_priorities(int member, std::span<const int> indices,
                           std::span<const double> errors);

    const SumTree& tree(int member) const;
    const Options& options() const { return options_; }

    // Newline-delimited audit dump: "episode_id state action reward terminal".
    void dump(std::ostream& os) const;

private:
    int capacity_;
    Options options_;
    std::vector<Transition> storage_;
    std::vector<std::uint64_t> push_seq_; // global push number per slot
    int write_cursor_ = 0;
    int size_ = 0;
    std::uint64_t total_pushes_ = 0;
    std::vector<SumTree> trees_;
};

} // namespace meanq
