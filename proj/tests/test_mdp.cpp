#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sparserl/experiments.hpp"
#include "sparserl/instances.hpp"
#include "sparserl/mdp.hpp"
#include "support.hpp"

using namespace sparserl;

namespace {

TabularMdp all_zero_tree(int H) {
    std::vector<ActionId> a_star(H, 0);
    return make_tree_instance(H, 0.0, a_star).mdp;
}

}  // namespace

TEST_CASE("trajectory on the rewarded-action tree follows the stated rewards") {
    const TreeInstance inst = make_tree_instance(3, 0.1, {0, 1, 0});
    const TabularPolicy always_a1 = TabularPolicy::constant(inst.mdp, 0);
    Rng rng(1);
    const Trajectory traj = sample_trajectory(inst.mdp, always_a1, rng);
    REQUIRE(traj.steps.size() == 3);
    CHECK(traj.steps[0].reward == 0.1);
    CHECK(traj.steps[1].reward == 0.0);
    CHECK(traj.steps[2].reward == 0.1);
    CHECK(traj.steps[0].state == 0);
    CHECK(traj.steps[1].state == 1);
    CHECK(traj.steps[2].state == 3);
}

TEST_CASE("zero-reward instance yields all-zero trajectories") {
    const TabularMdp mdp = all_zero_tree(4);
    Rng rng(2);
    const Trajectory traj = sample_trajectory(mdp, TabularPolicy::constant(mdp, 1), rng);
    for (const Step& s : traj.steps) CHECK(s.reward == 0.0);
}

TEST_CASE("block-instance trajectory pays only at the block-final level") {
    // H = T = 2, target 0, g(0) = (a1, a1): always-a1 earns (0, eps).
    const BlockInstance inst = make_block_instance(2, 2, 0.25, std::vector<int>{0});
    Rng rng(3);
    const Trajectory traj =
        sample_trajectory(inst.mdp, TabularPolicy::constant(inst.mdp, 0), rng);
    CHECK(traj.steps[0].reward == 0.0);
    CHECK(traj.steps[1].reward == 0.25);
}

TEST_CASE("trajectory errors on an undefined policy entry") {
    const TabularMdp mdp = all_zero_tree(2);
    TabularPolicy partial = TabularPolicy::constant(mdp, 0);
    partial.action[1] = -1;  // reached at level 1
    Rng rng(4);
    CHECK_THROWS_AS(sample_trajectory(mdp, partial, rng), StructuralError);
}

TEST_CASE("backward induction reproduces the tree closed form") {
    const TreeInstance inst = make_tree_instance(3, 0.1, {0, 1, 0});
    const OptimalSolution sol = exact_optimal(inst.mdp);
    CHECK(sol.q[0][0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(sol.q[0][1] == doctest::Approx(0.2).epsilon(1e-15));
    for (StateId s = 0; s < inst.mdp.num_states(); ++s) {
        for (ActionId a = 0; a < 2; ++a) {
            CHECK(std::abs(sol.q[s][a] - inst.closed_form_q(s, a)) <= 1e-14);
        }
    }
}

TEST_CASE("all-zero instance has identically zero optimal values") {
    const OptimalSolution sol = exact_optimal(all_zero_tree(4));
    for (const auto& row : sol.q)
        for (const double q : row) CHECK(q == 0.0);
    for (const double v : sol.v) CHECK(v == 0.0);
}

TEST_CASE("block instance optimal value is (H/T) * eps") {
    Rng rng(5);
    const BlockInstance inst = make_block_instance(4, 2, 0.1, rng);
    const OptimalSolution sol = exact_optimal(inst.mdp);
    CHECK(sol.value() == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("backward induction agrees with brute-force policy enumeration") {
    // Instances small enough to enumerate every deterministic policy.
    Rng rng(6);
    const TreeInstance tree = make_tree_instance(3, 0.125, rng);  // 7 states
    const auto brute_tree = testsupport::brute_force_q(tree.mdp);
    const OptimalSolution sol_tree = exact_optimal(tree.mdp);
    for (StateId s = 0; s < tree.mdp.num_states(); ++s)
        for (ActionId a = 0; a < 2; ++a) CHECK(sol_tree.q[s][a] == brute_tree[s][a]);

    const StochasticTestInstance stoch = make_stochastic_test_instance();  // 3 states
    const auto brute_stoch = testsupport::brute_force_q(stoch.mdp);
    const OptimalSolution sol_stoch = exact_optimal(stoch.mdp);
    for (StateId s = 0; s < stoch.mdp.num_states(); ++s)
        for (ActionId a = 0; a < 2; ++a) CHECK(sol_stoch.q[s][a] == brute_stoch[s][a]);
}

TEST_CASE("policy evaluation: optimal policy recovers V*, wrong policy gets 0") {
    const TreeInstance inst = make_tree_instance(4, 0.0625, {0, 1, 1, 0});
    const OptimalSolution sol = exact_optimal(inst.mdp);
    CHECK(exact_policy_value(inst.mdp, sol.policy) == 4 * 0.0625);  // dyadic: exact
    CHECK(exact_policy_value(inst.mdp, sol.policy) == sol.value());

    TabularPolicy wrong;
    wrong.action.assign(inst.mdp.num_states(), -1);
    for (int h = 0; h < 4; ++h)
        for (const StateId s : inst.mdp.levels[h]) wrong.action[s] = 1 - inst.optimal_actions[h];
    CHECK(exact_policy_value(inst.mdp, wrong) == 0.0);

    const TabularMdp zero = all_zero_tree(3);
    CHECK(exact_policy_value(zero, TabularPolicy::constant(zero, 0)) == 0.0);
}

TEST_CASE("policy evaluation cross-checks direct recursion on stochastic instances") {
    const StochasticTestInstance inst = make_stochastic_test_instance();
    for (ActionId a0 : {0, 1}) {
        for (ActionId a1 : {0, 1}) {
            TabularPolicy policy;
            policy.action = {a0, a1, static_cast<ActionId>(1 - a1)};
            const double lib = exact_policy_value(inst.mdp, policy);
            const double ref = testsupport::recursive_value(inst.mdp, policy, 0);
            CHECK(lib == doctest::Approx(ref).epsilon(1e-15));
        }
    }
}

TEST_CASE("state distribution basics") {
    const StochasticTestInstance inst = make_stochastic_test_instance();
    const TabularPolicy a0 = TabularPolicy::constant(inst.mdp, 0);

    const auto level0 = state_distribution(inst.mdp, a0, 0);
    REQUIRE(level0.size() == 1);
    CHECK(level0[0] == 1.0);

    // 0.5 / 0.5 split under the first action from the initial state.
    const auto level1 = state_distribution(inst.mdp, a0, 1);
    REQUIRE(level1.size() == 2);
    CHECK(level1[0] == 0.5);
    CHECK(level1[1] == 0.5);

    // Deterministic system: unit mass on one state per level.
    const TreeInstance tree = make_tree_instance(4, 0.1, {0, 0, 0, 0});
    for (int h = 0; h < 4; ++h) {
        const auto dist = state_distribution(tree.mdp, TabularPolicy::constant(tree.mdp, 1), h);
        CHECK(std::count(dist.begin(), dist.end(), 1.0) == 1);
        double mass = 0.0;
        for (const double p : dist) mass += p;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("Monte Carlo mean of trajectory returns converges to the exact value") {
    const StochasticTestInstance inst = make_stochastic_test_instance();
    const TabularPolicy policy = TabularPolicy::constant(inst.mdp, 0);
    const double exact = exact_policy_value(inst.mdp, policy);
    const int N = 40000;
    Rng rng(7);
    double mean = 0.0;
    for (int i = 0; i < N; ++i) mean += sample_trajectory(inst.mdp, policy, rng).total_reward();
    mean /= N;
    CHECK(std::abs(mean - exact) <= 3.0 / std::sqrt(static_cast<double>(N)) + 1e-12);
}

TEST_CASE("same seed gives bit-identical trajectory sequences") {
    const StochasticTestInstance inst = make_stochastic_test_instance();
    const TabularPolicy policy = TabularPolicy::constant(inst.mdp, 1);
    Rng rng_a(99), rng_b(99);
    for (int i = 0; i < 200; ++i) {
        const Trajectory a = sample_trajectory(inst.mdp, policy, rng_a);
        const Trajectory b = sample_trajectory(inst.mdp, policy, rng_b);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t j = 0; j < a.steps.size(); ++j) {
            CHECK(a.steps[j].state == b.steps[j].state);
            CHECK(a.steps[j].reward == b.steps[j].reward);
        }
    }
    // Per-episode seeds make datasets independent of sampling order.
    const auto d1 = sample_dataset(inst.mdp, policy, 50, 1234);
    const auto d2 = sample_dataset(inst.mdp, policy, 50, 1234);
    for (int i = 0; i < 50; ++i) CHECK(d1[i].total_reward() == d2[i].total_reward());
}

TEST_CASE("path-sum invariant holds on generated instances (enumeration oracle)") {
    Rng rng(8);
    const TreeInstance tree = make_tree_instance(5, 0.2, rng);
    for (const double s : testsupport::all_path_sums(tree.mdp)) {
        CHECK(s >= -1e-12);
        CHECK(s <= 1.0 + 1e-12);
    }
    const StochasticTestInstance stoch = make_stochastic_test_instance();
    for (const double s : testsupport::all_path_sums(stoch.mdp)) {
        CHECK(s >= -1e-12);
        CHECK(s <= 1.0 + 1e-12);
    }
}

TEST_CASE("structural validation rejects malformed tables") {
    TabularMdp mdp;
    mdp.horizon = 2;
    mdp.levels = {{0}, {1}};
    mdp.action_names = {"a1"};
    mdp.initial_state = 0;
    mdp.transition.resize(2);
    mdp.reward.assign(2, {Reward::fixed(0.0)});

    SUBCASE("target outside the next level") {
        mdp.transition[0] = {Transition::to(0)};
        CHECK_THROWS_AS(mdp.finalize(), StructuralError);
    }
    SUBCASE("stochastic row must sum to one") {
        mdp.transition[0] = {Transition::mixed({{1, 0.7}})};
        CHECK_THROWS_AS(mdp.finalize(), StructuralError);
    }
    SUBCASE("rewards outside [0,1] are rejected") {
        mdp.transition[0] = {Transition::to(1)};
        mdp.reward[1] = {Reward::fixed(1.5)};
        CHECK_THROWS_AS(mdp.finalize(), StructuralError);
    }
    SUBCASE("reward sums above 1 along a path are rejected") {
        mdp.transition[0] = {Transition::to(1)};
        mdp.reward[0] = {Reward::fixed(0.8)};
        mdp.reward[1] = {Reward::fixed(0.8)};
        CHECK_THROWS_AS(mdp.finalize(), StructuralError);
    }
    SUBCASE("well-formed version passes") {
        mdp.transition[0] = {Transition::to(1)};
        CHECK_NOTHROW(mdp.finalize());
    }
}

TEST_CASE("serialization round trip is lossless") {
    Rng rng(9);
    const BlockInstance block = make_block_instance(4, 2, 0.1, rng);
    const std::string text = mdp_to_json(block.mdp);
    const TabularMdp back = mdp_from_json(text);
    CHECK(mdp_to_json(back) == text);
    CHECK(back.horizon == block.mdp.horizon);
    CHECK(back.levels == block.mdp.levels);

    const StochasticTestInstance stoch = make_stochastic_test_instance();
    const std::string stoch_text = mdp_to_json(stoch.mdp);
    const TabularMdp stoch_back = mdp_from_json(stoch_text);
    CHECK(mdp_to_json(stoch_back) == stoch_text);
    // Exact expectations survive the round trip.
    const TabularPolicy policy = TabularPolicy::constant(stoch.mdp, 0);
    CHECK(exact_policy_value(stoch_back, policy) == exact_policy_value(stoch.mdp, policy));
}
