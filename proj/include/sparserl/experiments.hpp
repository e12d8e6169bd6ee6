#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparserl/elimination.hpp"
#include "sparserl/instances.hpp"
#include "sparserl/oracles.hpp"

namespace sparserl {

/// Shared configuration for every experiment subcommand. Fields that a given
/// subcommand does not use are ignored by it.
struct ExperimentConfig {
    std::string command;
    std::string family = "random-sparse";  // elimination: random-sparse|tree|block|bandit|rank

    // Instance parameters.
    int d = 6;
    int k = 1;
    int horizon = 3;
    int block_len = 1;  // T
    int n_arms = 20;
    int branching = 2;
    double epsilon = 0.0;

    // Algorithm parameters.
    double eps_net = 0.5;
    double eps_stat = 0.2;
    double delta = 0.1;
    std::optional<long long> m_override;

    int trials = 50;
    std::uint64_t master_seed = 1;
    std::string output_dir;  // empty: no files written
    int threads = 1;

    EliminationConfig elimination() const;

    /// Rejects any combination that violates a module precondition, before
    /// any computation runs.
    void validate() const;
};

/// Per-trial rows plus a summary derived purely from (config, rows), so the
/// emitted summary is recomputable from the emitted CSV. Wall-clock timings
/// are kept apart from the rows to preserve byte-identical reruns.
struct ExperimentResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::uint64_t> trial_seeds;  // parallel to rows
    std::vector<double> wall_ms;             // parallel to rows; excluded from rows.csv
    std::string summary;
    bool passed = true;
    std::vector<std::string> failures;

    std::string rows_csv() const;
    void write(const std::string& dir) const;  // rows.csv, summary.txt, timing.csv
};

/// Suboptimality bound the elimination loop guarantees:
/// (4 eps_stat + 2 eps_net + 2 eps) H. At H = 1 it coincides with the bandit
/// gap bound 2 eps + 2 eps_net + 4 eps_stat.
double suboptimality_bound(const ExperimentConfig& config, int H);

/// Seed of trial `i` under `master`; the scheme is pure so any single trial
/// can be replayed without running the ones before it.
std::uint64_t trial_seed(std::uint64_t master, int i);

/// Monte Carlo acceptance slack for a frequency with target rate p over N
/// trials: p + 3 sqrt(p / N).
double frequency_allowance(double p, int n);

/// Suboptimality of a fixed action sequence on the rewarded-action tree with
/// hidden optimal sequence a_star: eps * #mismatches. Matches the
/// materialized instance's exact oracles; usable at horizons far beyond what
/// can be materialized.
double tree_fixed_policy_suboptimality(double eps, const std::vector<ActionId>& a_star,
                                       const std::vector<ActionId>& policy_actions);

/// Small fixed instance with stochastic transitions and rewards, for the
/// deviation-bound experiments. Deterministic function of nothing: the same
/// instance every call.
struct StochasticTestInstance {
    TabularMdp mdp;
    FeatureMap features;
    std::vector<SparseParam> theta;
    TabularPolicy rollin;  // greedy under theta
};
StochasticTestInstance make_stochastic_test_instance();

ExperimentResult cmd_elimination(const ExperimentConfig& config);
ExperimentResult cmd_deviation(const ExperimentConfig& config);
ExperimentResult cmd_lower_bound_no_sample(const ExperimentConfig& config);
ExperimentResult cmd_query_complexity(const ExperimentConfig& config);
ExperimentResult cmd_bellman_rank(const ExperimentConfig& config);

}  // namespace sparserl
