#pragma once

#include <span>
#include <vector>

namespace meanq {

// Fixed atom grid for categorical return distributions.
struct Support {
    double v_min = -10.0;
    double v_max = 10.0;
    int n_atoms = 51;
    double delta_z = 0.0;
    std::vector<double> z; // z_j = v_min + j * delta_z

    Support() { rebuild(); }
    Support(double v_min_, double v_max_, int n_atoms_)
        : v_min(v_min_), v_max(v_max_), n_atoms(n_atoms_) {
        rebuild();
    }

    bool operator==(const Support& o) const {
        return v_min == o.v_min && v_max == o.v_max && n_atoms == o.n_atoms;
    }

private:
    void rebuild();
};

// Probability vector over a support's atoms. Throws std::invalid_argument
// if entries are negative or do not sum to 1 within 1e-9.
void check_distribution(std::span<const double> probs);

// Element-wise mean of K distributions on a shared support.
std::vector<double> mean_distribution(const std::vector<std::vector<double>>& members);

// argmax_a of mean_k z . p_k(s, a); ties break to the lowest action index.
// member_action_dists[k][a] is member k's distribution for action a.
int distributional_greedy_action(
    const std::vector<std::vector<std::vector<double>>>& member_action_dists,
    const Support& support);

double expected_value(std::span<const double> probs, const Support& support);

// Bellman projection of a next-state distribution onto the fixed support.
// Each atom is shifted to r + discount * z_j (just r when terminal),
// clipped to [v_min, v_max], and its mass split linearly between the two
// bracketing atoms. An exactly integral fractional index deposits the
// whole mass on that single atom, so the projection conserves mass.
std::vector<double> project(std::span<const double> target_probs, double reward,
                            double discount, bool terminal, const Support& support);

struct CrossEntropyResult {
    double loss = 0.0;
    std::vector<double> logit_gradient; // = probs - target
};

// loss = -sum_j c_j log p_j with a 1e-12 probability floor inside the log.
// A true zero probability carrying nonzero target mass is a numerical
// floor violation and raises NumericalError.
CrossEntropyResult cross_entropy_loss(std::span<const double> target,
                                      std::span<const double> probs);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

} // namespace meanq
