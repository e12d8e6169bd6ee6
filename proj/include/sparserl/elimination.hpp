#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sparserl/features.hpp"
#include "sparserl/mdp.hpp"

namespace sparserl {

struct EliminationConfig {
    double epsilon = 0.0;    // approximation error of the linear model
    double eps_net = 0.5;    // candidate net separation
    double eps_stat = 0.2;   // statistical error
    double delta = 0.1;      // failure rate
    std::optional<long long> m_override;

    void validate() const;
};

/// Per-dataset sample size:
/// ceil((16 k ln((1 + 4/eps_net) d) + 16 ln(H/delta)) / eps_stat^2).
long long compute_m(const EliminationConfig& config, int d, int k, int H);

/// Hard loop bound ceil((1 + 4/eps_net)^k) * C(d, k) * H. The loop aborts
/// with a diagnostic if it is ever reached, so a violated precondition
/// (e.g. approximation gap above epsilon) fails loudly instead of spinning.
long long iteration_cap(int d, int k, int H, double eps_net);

struct IterationRecord {
    int iteration = 0;
    std::vector<std::size_t> selected;    // candidate id per level
    std::vector<double> mean_value;       // maximized empirical value per level
    std::vector<double> bellman_error;    // empirical error per level
    std::vector<int> eliminated_levels;   // levels whose selection was removed
    bool accepted = false;                // all thresholds passed here
    bool reference_eliminated = false;    // a tracked reference id was removed
};

/// Full audit trail of one elimination run.
struct RunReport {
    bool terminated = false;
    int iterations = 0;
    long long m = 0;
    long long trajectories = 0;  // iterations * H * m
    long long samples = 0;       // trajectories * H
    long long cap = 0;
    long long realized_cap = 0;  // sum over levels of the initial family size
    std::vector<std::size_t> returned;        // candidate ids of the output policy
    std::vector<SparseParam> returned_params;
    std::vector<IterationRecord> records;
    bool reference_ever_eliminated = false;

    void write_json(std::ostream& out) const;
    /// Flat rows: iteration, level, candidate id, empirical error, eliminated.
    void write_csv(std::ostream& out) const;
};

/// argmax over the active candidates of sum_i V_theta(states[i]); ties go to
/// the lowest candidate index in net order. Throws EliminationExhausted on an
/// empty active set.
std::size_t select_level_param(const ParamNet& net, const std::vector<std::size_t>& active,
                               const TabularMdp& mdp, const FeatureMap& fm,
                               std::span<const StateId> states, int level);

/// Greedy under prefix[h'] for levels h' < upto_level, fixed action 0 at
/// levels >= upto_level. upto_level = H gives the full greedy policy.
TabularPolicy rollin_policy(const TabularMdp& mdp, const FeatureMap& fm,
                            std::span<const SparseParam> prefix, int upto_level);

/// Mean over the dataset of <phi(s_h, a_h), theta_h> - r_h - V_{theta_{h+1}}
/// (s_{h+1}); the value term is dropped at the last level.
double empirical_bellman_error(const TabularMdp& mdp, const FeatureMap& fm,
                               std::span<const Trajectory> dataset,
                               std::span<const SparseParam> theta, int h);

/// Runs the full elimination loop and returns the audit report. `reference`
/// optionally tracks one candidate id per level (e.g. the net-rounded optimal
/// parameter) and records whether any of them is ever eliminated.
RunReport run_elimination(const TabularMdp& mdp, const FeatureMap& fm, const ParamNet& net,
                          const EliminationConfig& config, Rng& rng,
                          const std::vector<std::size_t>* reference = nullptr);

}  // namespace sparserl
