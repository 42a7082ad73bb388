#include "meanq/replay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace meanq {

namespace {
int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}
} // namespace

SumTree::SumTree(int capacity) {
    if (capacity <= 0) throw std::invalid_argument("SumTree: capacity must be positive");
    leaf_count_ = next_pow2(capacity);
    sums_.assign(static_cast<std::size_t>(2) * leaf_count_, 0.0);
    maxs_.assign(static_cast<std::size_t>(2) * leaf_count_, 0.0);
}

void SumTree::set(int leaf, double priority) {
    if (leaf < 0 || leaf >= leaf_count_) throw std::out_of_range("SumTree: leaf out of range");
    if (!(priority >= 0.0) || !std::isfinite(priority))
        throw std::invalid_argument("SumTree: priority must be finite and non-negative");
    std::size_t i = static_cast<std::size_t>(leaf_count_) + leaf;
    sums_[i] = priority;
    maxs_[i] = priority;
    while (i > 1) {
        i >>= 1;
        sums_[i] = sums_[2 * i] + sums_[2 * i + 1];
        maxs_[i] = std::max(maxs_[2 * i], maxs_[2 * i + 1]);
    }
}

double SumTree::get(int leaf) const {
    if (leaf < 0 || leaf >= leaf_count_) throw std::out_of_range("SumTree: leaf out of range");
    return sums_[static_cast<std::size_t>(leaf_count_) + leaf];
}

int SumTree::prefix_sum_select(double mass) const {
    if (!(mass >= 0.0) || mass >= total())
        throw std::out_of_range("SumTree: mass outside [0, total)");
    std::size_t i = 1;
    while (i < static_cast<std::size_t>(leaf_count_)) {
        const double left = sums_[2 * i];
        if (mass < left) {
            i = 2 * i;
        } else {
            mass -= left;
            i = 2 * i + 1;
        }
    }
    return static_cast<int>(i - leaf_count_);
}

std::vector<double> importance_weights(std::span<const double> probabilities, int size,
                                       double beta) {
    if (probabilities.empty()) throw std::invalid_argument("importance_weights: empty batch");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("importance_weights: beta in [0,1]");
    std::vector<double> w(probabilities.size());
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        if (!(probabilities[i] > 0.0))
            throw std::invalid_argument("importance_weights: zero probability");
        w[i] = std::pow(static_cast<double>(size) * probabilities[i], -beta);
    }
    const double wmax = *std::max_element(w.begin(), w.end());
    for (double& x : w) x /= wmax;
    return w;
}

ReplayMemory::ReplayMemory(int capacity, int n_members, Options options)
    : capacity_(capacity), options_(options) {
    if (capacity <= 0) throw std::invalid_argument("ReplayMemory: capacity must be positive");
    if (n_members <= 0) throw std::invalid_argument("ReplayMemory: need at least one member");
    if (options_.priority_floor <= 0.0)
        throw std::invalid_argument("ReplayMemory: priority floor must be positive");
    storage_.resize(capacity);
    push_seq_.assign(capacity, 0);
    trees_.reserve(n_members);
    for (int k = 0; k < n_members; ++k) trees_.emplace_back(capacity);
}

int ReplayMemory::push(const Transition& t) {
    if (!std::isfinite(t.reward)) throw std::invalid_argument("ReplayMemory: non-finite reward");
    const int index = write_cursor_;
    storage_[index] = t;
    push_seq_[index] = total_pushes_;
    ++total_pushes_;
    write_cursor_ = (write_cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    for (SumTree& tree : trees_) {
        const double pmax = tree.max_priority();
        tree.set(index, pmax > 0.0 ? pmax : options_.initial_priority);
    }
    return index;
}

const Transition& ReplayMemory::at(int index) const {
    if (!occupied(index)) throw std::out_of_range("ReplayMemory: index unoccupied");
    return storage_[index];
}

MultiStepSample ReplayMemory::assemble(int index, int max_steps) const {
    if (!occupied(index)) throw std::out_of_range("ReplayMemory: index unoccupied");
    if (max_steps < 1) throw std::invalid_argument("ReplayMemory: max_steps must be >= 1");

    MultiStepSample out;
    out.index = index;
    const Transition& head = storage_[index];
    out.state = head.state;
    out.action = head.action;

    int cur = index;
    for (int m = 0; m < max_steps; ++m) {
        const Transition& t = storage_[cur];
        out.rewards.push_back(t.reward);
        out.final_state = t.next_state;
        out.terminal = t.terminal;
        if (t.terminal) break;
        if (m + 1 >= max_steps) break;
        // The temporal successor must sit in the next slot, be newer, and
        // belong to the same episode.
        const int next = (cur + 1) % capacity_;
        if (!occupied(next)) break;
        if (push_seq_[next] != push_seq_[cur] + 1) break;
        if (storage_[next].episode_id != t.episode_id) break;
        cur = next;
    }
    out.effective_m = static_cast<int>(out.rewards.size());
    out.terminated_early = out.terminal && out.effective_m < max_steps;
    return out;
}

std::vector<MultiStepSample> ReplayMemory::sample_batch(int member, int batch_size, int max_steps,
                                                        double beta, Rng& rng) const {
    if (member < 0 || member >= n_members())
        throw std::out_of_range("ReplayMemory: member index out of range");
    if (batch_size < 1) throw std::invalid_argument("ReplayMemory: batch size must be >= 1");
    if (size_ == 0) throw std::logic_error("ReplayMemory: sampling from an empty buffer");

    const SumTree& tree = trees_[member];
    const double total = tree.total();
    const double segment = total / static_cast<double>(batch_size);

    std::vector<MultiStepSample> batch;
    batch.reserve(batch_size);
    std::vector<double> probs(batch_size);
    for (int b = 0; b < batch_size; ++b) {
        // Stratified: one draw per equal-mass segment.
        double mass = (static_cast<double>(b) + rng.uniform()) * segment;
        if (mass >= total) mass = std::nextafter(total, 0.0);
        const int index = tree.prefix_sum_select(mass);
        batch.push_back(assemble(index, max_steps));
        probs[b] = tree.get(index) / total;
    }
    const std::vector<double> w = importance_weights(probs, size_, beta);
    for (int b = 0; b < batch_size; ++b) batch[b].is_weight = w[b];
    return batch;
}

void ReplayMemory::update_priorities(int member, std::span<const int> indices,
                                     std::span<const double> errors) {
    if (member < 0 || member >= n_members())
        throw std::out_of_range("ReplayMemory: member index out of range");
    if (indices.size() != errors.size())
        throw std::invalid_argument("ReplayMemory: indices/errors size mismatch");
    SumTree& tree = trees_[member];
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (!occupied(indices[i])) throw std::out_of_range("ReplayMemory: index unoccupied");
        if (!(errors[i] >= 0.0))
            throw std::invalid_argument("ReplayMemory: negative priority error");
        tree.set(indices[i],
                 std::pow(errors[i] + options_.priority_floor, options_.priority_exponent));
    }
}

const SumTree& ReplayMemory::tree(int member) const {
    if (member < 0 || member >= n_members())
        throw std::out_of_range("ReplayMemory: member index out of range");
    return trees_[member];
}

void ReplayMemory::dump(std::ostream& os) const {
    os << "# meanq-replay v1: episode_id state action reward terminal\n";
    // Oldest to newest.
    const int start = size_ < capacity_ ? 0 : write_cursor_;
    for (int i = 0; i < size_; ++i) {
        const Transition& t = storage_[(start + i) % capacity_];
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%llu %d %d %.17g %d\n",
                      static_cast<unsigned long long>(t.episode_id), t.state, t.action, t.reward,
                      t.terminal ? 1 : 0);
        os << buf;
    }
}

} // namespace meanq
