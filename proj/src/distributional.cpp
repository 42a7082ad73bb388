#include "meanq/distributional.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "meanq/errors.hpp"

namespace meanq {

void Support::rebuild() {
    if (!(v_min < v_max)) throw std::invalid_argument("Support: requires v_min < v_max");
    if (n_atoms < 2) throw std::invalid_argument("Support: requires at least 2 atoms");
    delta_z = (v_max - v_min) / static_cast<double>(n_atoms - 1);
    z.resize(n_atoms);
    for (int j = 0; j < n_atoms; ++j) z[j] = v_min + j * delta_z;
}

void check_distribution(std::span<const double> probs) {
    double sum = 0.0;
    for (const double p : probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("distribution entry negative or NaN");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("distribution does not sum to 1");
}

std::vector<double> mean_distribution(const std::vector<std::vector<double>>& members) {
    if (members.empty()) throw std::invalid_argument("mean_distribution: empty ensemble");
    const std::size_t L = members.front().size();
    for (const auto& m : members) {
        if (m.size() != L) throw std::invalid_argument("mean_distribution: support mismatch");
        check_distribution(m);
    }
    std::vector<double> out(L, 0.0);
    for (const auto& m : members)
        for (std::size_t j = 0; j < L; ++j) out[j] += m[j];
    const double inv_k = 1.0 / static_cast<double>(members.size());
    for (double& x : out) x *= inv_k;
    return out;
}

int distributional_greedy_action(
    const std::vector<std::vector<std::vector<double>>>& member_action_dists,
    const Support& support) {
    if (member_action_dists.empty())
        throw std::invalid_argument("distributional_greedy_action: empty ensemble");
    const std::size_t n_actions = member_action_dists.front().size();
    const double inv_k = 1.0 / static_cast<double>(member_action_dists.size());

    int best = 0;
    double best_score = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
        double mean_q = 0.0;
        for (const auto& dists : member_action_dists) {
            if (dists.size() != n_actions)
                throw std::invalid_argument("distributional_greedy_action: action count mismatch");
            if (dists[a].size() != support.z.size())
                throw std::invalid_argument("distributional_greedy_action: support mismatch");
            mean_q += expected_value(dists[a], support);
        }
        mean_q *= inv_k;
        if (a == 0 || mean_q > best_score) {
            best = static_cast<int>(a);
            best_score = mean_q;
        }
    }
    return best;
}

double expected_value(std::span<const double> probs, const Support& support) {
    if (probs.size() != support.z.size())
        throw std::invalid_argument("expected_value: support mismatch");
    double out = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) out += support.z[j] * probs[j];
    return out;
}

std::vector<double> project(std::span<const double> target_probs, double reward,
                            double discount, bool terminal, const Support& support) {
    check_distribution(target_probs);
    if (target_probs.size() != support.z.size())
        throw std::invalid_argument("project: support mismatch");
    if (!(discount > 0.0 && discount <= 1.0))
        throw std::invalid_argument("project: discount must be in (0, 1]");

    const int L = support.n_atoms;
    std::vector<double> c(L, 0.0);
    for (int j = 0; j < L; ++j) {
        const double mass = target_probs[j];
        double tz = terminal ? reward : reward + discount * support.z[j];
        tz = std::clamp(tz, support.v_min, support.v_max);
        // The fractional index can round a hair outside [0, L-1] even after
        // the value clip; clamp it so the edge atoms absorb the mass.
        double hj = (tz - support.v_min) / support.delta_z;
        hj = std::clamp(hj, 0.0, static_cast<double>(L - 1));
        const int lo = static_cast<int>(std::floor(hj));
        const int hi = static_cast<int>(std::ceil(hj));
        if (lo == hi) {
            c[lo] += mass; // integral index: whole mass on one atom
        } else {
            c[lo] += mass * (hi - hj);
            c[hi] += mass * (hj - lo);
        }
    }
    return c;
}

CrossEntropyResult cross_entropy_loss(std::span<const double> target,
                                      std::span<const double> probs) {
    if (target.size() != probs.size())
        throw std::invalid_argument("cross_entropy_loss: support mismatch");
    constexpr double kFloor = 1e-12;
    CrossEntropyResult out;
    out.logit_gradient.resize(probs.size());
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0 && target[j] > 0.0)
            throw NumericalError("cross_entropy_loss: zero probability under target mass");
        if (target[j] > 0.0)
            out.loss -= target[j] * std::log(std::max(probs[j], kFloor));
        out.logit_gradient[j] = probs[j] - target[j];
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

} // namespace meanq
