#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sparserl/instances.hpp"

namespace sparserl {

/// Exact average Bellman error of the parameter sequence at level h under the
/// given roll-in policy, computed from the closed-form state occupancy. With
/// the sequence's own greedy policy as roll-in this is the quantity the
/// elimination loop estimates empirically.
double exact_avg_bellman_error(const TabularMdp& mdp, const FeatureMap& fm,
                               std::span<const SparseParam> theta, int h,
                               const TabularPolicy& rollin);

struct BellmanErrorMatrix {
    int level = 0;
    std::vector<std::vector<double>> entries;  // [evaluated][roll-in]
};

/// Bellman error matrix over the d one-hot steering sequences of a rank
/// instance. At the last level the entries are asserted to match
/// eps * (I - J) within 1e-12.
BellmanErrorMatrix bellman_error_matrix(const RankInstance& inst, int level);

/// Rank by row reduction with partial pivoting; pivots below
/// tolerance * max|entry| count as zero.
int matrix_rank(std::vector<std::vector<double>> m, double tolerance = 1e-9);

/// The multi-index guessing game: m hidden indices in [n]; a query (j, i)
/// asks whether i equals the j-th hidden index.
struct IndqGame {
    int num_values = 0;        // n
    int num_slots = 0;         // m
    std::vector<int> targets;  // i*_j

    static IndqGame with_targets(int n, std::vector<int> targets);
    static IndqGame random(int n, int m, Rng& rng);
};

struct IndqQuery {
    int slot = 0;
    int guess = 0;
    bool correct = false;
};

struct IndqOutcome {
    bool success = false;
    int slot = -1;
    int guess = -1;
    long long queries_used = 0;
    std::vector<IndqQuery> log;
};

/// A strategy maps the query history to the next (slot, guess) pair.
using IndqStrategy =
    std::function<std::pair<int, int>(long long round, const std::vector<IndqQuery>& history)>;

/// Plays the strategy for at most `budget` queries; succeeds on the first
/// correct guess. Out-of-range queries raise StrategyError.
IndqOutcome indq_play(const IndqGame& game, const IndqStrategy& strategy, long long budget);

/// Fixed scan strategy: queries (0, 0), (0, 1), ..., slot by slot.
IndqStrategy scan_strategy(int n, int m);

struct IndqProbability {
    double value = 0.0;
    bool exact = false;  // numerator/denominator valid only when exact
    unsigned long long numerator = 0;
    unsigned long long denominator = 1;
};

/// Success probability of a fixed query sequence against uniform targets:
/// 1 - prod_j (n - n_j) / n^m with n_j the distinct guesses at slot j.
/// Counted exactly in integers whenever n^m fits 64 bits.
IndqProbability indq_success_probability(int n, int m,
                                         std::span<const std::pair<int, int>> queries);

struct ReductionEntry {
    int trajectory = 0;
    int block = 0;        // q
    int guess = 0;        // g^{-1} of the block's action window
    bool correct = false;
    double block_reward = 0.0;  // reward observed at the block-final level
};

/// Maps each trajectory on a block instance to its H/T index-query guesses
/// and checks the defining consistency: the block-final reward is eps iff the
/// block's guess is correct. Violations raise InstanceIntegrityError.
std::vector<ReductionEntry> rl_to_indq_reduction(const BlockInstance& inst,
                                                 std::span<const Trajectory> trace);

}  // namespace sparserl
