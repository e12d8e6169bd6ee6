#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sparserl/errors.hpp"
#include "sparserl/rng.hpp"

namespace sparserl {

using StateId = int;
using ActionId = int;

/// One transition table entry: a single next state (deterministic) or a
/// finite distribution over next-level states.
struct Transition {
    bool deterministic = true;
    StateId target = -1;
    std::vector<std::pair<StateId, double>> support;  // (target, probability)

    static Transition to(StateId s) {
        Transition t;
        t.deterministic = true;
        t.target = s;
        return t;
    }
    static Transition mixed(std::vector<std::pair<StateId, double>> support);

    StateId sample(Rng& rng) const;
};

/// One reward table entry: a fixed value or a finite distribution of values,
/// both confined to [0, 1] for well-formed instances.
struct Reward {
    bool deterministic = true;
    double value = 0.0;
    std::vector<std::pair<double, double>> support;  // (value, probability)

    static Reward fixed(double v) {
        Reward r;
        r.deterministic = true;
        r.value = v;
        return r;
    }
    static Reward mixed(std::vector<std::pair<double, double>> support);

    double mean() const;
    double min_value() const;
    double max_value() const;
    double sample(Rng& rng) const;
};

struct ValidationOptions {
    // The lower-bound bandit construction intentionally places one reward
    // outside [0, 1]; its generator relaxes these two checks.
    bool require_reward_range = true;
    bool require_path_sums = true;
};

/// Finite-horizon layered MDP. States live in per-level disjoint sets; state
/// ids are dense in [0, num_states). Level 0 holds exactly the initial state.
struct TabularMdp {
    int horizon = 0;
    std::vector<std::vector<StateId>> levels;           // level -> state ids
    std::vector<std::string> action_names;              // index = ActionId
    std::vector<std::vector<Transition>> transition;    // [state][action]; empty row at last level
    std::vector<std::vector<Reward>> reward;            // [state][action]
    StateId initial_state = 0;

    // Derived by finalize().
    std::vector<int> level_of;        // state -> level
    std::vector<int> index_in_level;  // state -> position within levels[level]

    int num_states() const { return static_cast<int>(level_of.size()); }
    int num_actions() const { return static_cast<int>(action_names.size()); }
    bool is_deterministic() const;

    /// Fills the derived lookups and checks every structural invariant:
    /// disjoint dense levels, targets in the next level, probability rows
    /// summing to 1 within 1e-12, rewards in [0, 1], and cumulative reward
    /// along every reachable trajectory confined to [0, 1].
    void finalize(const ValidationOptions& options = {});
};

struct Step {
    StateId state;
    ActionId action;
    double reward;
};

/// One episode in level order.
struct Trajectory {
    std::vector<Step> steps;
    double total_reward() const;
};

/// Total deterministic policy; -1 marks an undefined entry, which is a
/// structural error if ever reached.
struct TabularPolicy {
    std::vector<ActionId> action;  // by state id

    static TabularPolicy constant(const TabularMdp& mdp, ActionId a);
    ActionId at(StateId s) const;
};

/// Plays one episode of `policy` on `mdp`. Deterministic instance + fixed
/// policy yields the identical trajectory on every call.
Trajectory sample_trajectory(const TabularMdp& mdp, const TabularPolicy& policy, Rng& rng);

/// m episodes with per-episode seeds derived from `dataset_seed`, so the
/// result is independent of sampling order.
std::vector<Trajectory> sample_dataset(const TabularMdp& mdp, const TabularPolicy& policy,
                                       long long m, std::uint64_t dataset_seed);

struct OptimalSolution {
    std::vector<std::vector<double>> q;  // [state][action]
    std::vector<double> v;               // [state]
    TabularPolicy policy;                // greedy, lowest-action-index ties
    double value() const;                // shorthand used by callers; v at s0
    StateId initial_state = 0;
};

/// Backward-induction oracle over expected rewards: exact Q*, V*, and the
/// greedy optimal policy with lowest-action-index tie-break.
OptimalSolution exact_optimal(const TabularMdp& mdp);

/// Exact V^pi(s0) by forward distribution propagation.
double exact_policy_value(const TabularMdp& mdp, const TabularPolicy& policy);

/// Exact occupancy of level-`level` states under `policy`, aligned with
/// mdp.levels[level]. Masses sum to 1 within 1e-12.
std::vector<double> state_distribution(const TabularMdp& mdp, const TabularPolicy& policy,
                                       int level);

/// Lossless structured-text (JSON) round trip. Deterministic entries are
/// written as scalars, stochastic entries as (target, probability) lists.
std::string mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const std::string& text, const ValidationOptions& options = {});

}  // namespace sparserl
