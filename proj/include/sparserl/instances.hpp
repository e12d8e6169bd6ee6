#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sparserl/features.hpp"
#include "sparserl/mdp.hpp"

namespace sparserl {

/// Binary-tree instance with one rewarded action per level: r(s, a) = eps iff
/// a equals the level's hidden optimal action. d = k = 1, theta* = 1,
/// phi(s, a) = (H - h - 1) * eps at level h.
struct TreeInstance {
    TabularMdp mdp;
    FeatureMap features;
    std::vector<ActionId> optimal_actions;  // a*_h, one per level
    double epsilon = 0.0;
    std::vector<SparseParam> theta_star;

    /// Closed form: (H - h) eps at the optimal action, (H - h - 1) eps else.
    double closed_form_q(StateId s, ActionId a) const;
};

TreeInstance make_tree_instance(int H, double eps, const std::vector<ActionId>& a_star);
TreeInstance make_tree_instance(int H, double eps, Rng& rng);

/// Blocked binary-tree instance: the H levels split into H/T blocks, each
/// paying eps only at the block-final (state, action) pairs reached by
/// following the block's hidden action window from any block-entry state.
struct BlockInstance {
    TabularMdp mdp;
    FeatureMap features;
    int block_len = 1;                      // T
    std::vector<int> target_indices;        // i*_q in [2^T], one per block
    std::vector<ActionId> optimal_actions;  // concatenated g(i*_q)
    double epsilon = 0.0;
    std::vector<SparseParam> theta_star;
    std::vector<char> on_spine;  // per state: s = P*(s', t) for its block

    /// Piecewise closed form: (H/T - q) eps on-spine at the optimal action,
    /// (H/T - q - 1) eps otherwise, for s at level qT + t.
    double closed_form_q(StateId s, ActionId a) const;
};

BlockInstance make_block_instance(int H, int T, double eps, const std::vector<int>& targets);
BlockInstance make_block_instance(int H, int T, double eps, Rng& rng);

/// Fixed bijection g between [2^T] and action windows: bit b of the index,
/// most-significant first, maps to action b.
std::vector<ActionId> block_bijection(int index, int T);
int block_bijection_inverse(const std::vector<ActionId>& window);

/// One-state, n-arm instance with phi(a) = eps, r(a*) = 2 * sign * eps and 0
/// elsewhere. Approximation gap is exactly eps. sign = -1 places one reward
/// below 0, mirroring the information-theoretic construction.
struct BanditInstance {
    TabularMdp mdp;
    FeatureMap features;
    int num_arms = 0;
    double epsilon = 0.0;
    int theta_sign = 1;      // hidden theta* in {-1, +1}
    ActionId special_arm = 0;  // hidden a*
    std::vector<SparseParam> theta_star;
};

BanditInstance make_bandit_instance(int n, double eps, Rng& rng);

/// Binary tree with terminal reward eps on both actions and d-dimensional
/// one-hot-indexed features; the Bellman error matrix over the d one-hot
/// parameters at the last level equals eps * (I - J) and has full rank.
struct RankInstance {
    TabularMdp mdp;
    FeatureMap features;
    int dim = 0;  // d = 2^H
    double epsilon = 0.0;
    std::vector<SparseParam> theta_star;  // per-level witness (one-hot on 0)

    int horizon() const { return mdp.horizon; }

    /// Terminal pair index <-> (state, action) at the last level.
    std::pair<StateId, ActionId> terminal_pair(int idx) const;

    /// Per-level one-hot coordinate whose greedy policy steers to terminal
    /// pair `idx`: at level h the coordinate is the (h+1)-bit prefix of idx.
    std::vector<int> steering_indices(int idx) const;
    std::vector<SparseParam> steering_sequence(int idx) const;
    TabularPolicy steering_policy(int idx) const;
};

RankInstance make_rank_instance(int d, double eps);

/// Largest eps for which the rank instance's features keep unit norm.
double max_rank_epsilon(int d);

/// Layered deterministic instance that satisfies the sparse linear
/// approximation assumption by construction: target values are encoded
/// exactly into features on theta*'s support, rewards are the value
/// differences, and an optional last-level perturbation in [-eps, eps]
/// yields a realized gap of at most eps.
struct RandomSparseInstance {
    TabularMdp mdp;
    FeatureMap features;
    std::vector<SparseParam> theta_star;
    std::vector<std::size_t> theta_star_candidates;  // net ids when drawn from a net
    double realized_gap = 0.0;
};

RandomSparseInstance make_random_sparse_instance(int d, int k, int H, double eps, int branching,
                                                 Rng& rng, const ParamNet* net = nullptr);

/// Feature sidecar (JSON) for any generated instance.
std::string features_to_json(const FeatureMap& fm);
FeatureMap features_from_json(const std::string& text);

}  // namespace sparserl
