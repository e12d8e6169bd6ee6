#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sparserl/features.hpp"
#include "sparserl/instances.hpp"

using namespace sparserl;

TEST_CASE("k=1 net is exactly the two signed points, so |P0| = 2d") {
    Rng rng(1);
    for (const double eps_net : {0.1, 0.5, 1.0, 2.0}) {
        const ParamNet net = build_net(4, 1, eps_net, rng);
        REQUIRE(net.sphere.size() == 2);
        CHECK(net.sphere[0][0] == 1.0);
        CHECK(net.sphere[1][0] == -1.0);
        CHECK(net.size() == 8);  // 2 * d with d = 4
    }
}

TEST_CASE("net construction validates parameters") {
    Rng rng(2);
    CHECK_THROWS_AS(build_net(3, 4, 0.5, rng), ParameterError);
    CHECK_THROWS_AS(build_net(3, 0, 0.5, rng), ParameterError);
    CHECK_THROWS_AS(build_net(3, 1, 0.0, rng), ParameterError);
    CHECK_THROWS_AS(build_net(3, 1, -1.0, rng), ParameterError);
}

TEST_CASE("sphere net is separated, bounded and covering") {
    Rng rng(3);
    const ParamNet net = build_net(5, 2, 0.5, rng);

    // Pairwise separation >= eps_net / 2.
    for (std::size_t i = 0; i < net.sphere.size(); ++i) {
        for (std::size_t j = i + 1; j < net.sphere.size(); ++j) {
            double d2 = 0.0;
            for (int c = 0; c < 2; ++c) {
                const double diff = net.sphere[i][c] - net.sphere[j][c];
                d2 += diff * diff;
            }
            CHECK(std::sqrt(d2) >= 0.25 - 1e-12);
        }
    }

    // Packing bound (1 + 4/eps_net)^k per support, and the full product bound.
    CHECK(net.sphere.size() <= 81);
    CHECK(static_cast<double>(net.size()) <= net.candidate_count_bound());
    CHECK(net.supports.size() == 10);  // C(5, 2)

    // Probabilistic maximality certificate.
    Rng probe_rng(4);
    const double covered = covering_fraction(net, 10000, probe_rng);
    INFO("covering fraction ", covered);
    CHECK(covered >= 0.99);
}

TEST_CASE("all k-subsets are enumerated lexicographically") {
    Rng rng(5);
    const ParamNet net = build_net(4, 2, 1.0, rng);
    REQUIRE(net.supports.size() == 6);
    CHECK(net.supports[0] == std::vector<int>{0, 1});
    CHECK(net.supports[1] == std::vector<int>{0, 2});
    CHECK(net.supports[5] == std::vector<int>{2, 3});
}

TEST_CASE("nearest candidate") {
    Rng rng(6);
    const ParamNet net = build_net(4, 1, 0.5, rng);

    SUBCASE("a candidate maps to itself") {
        for (const std::size_t idx : {std::size_t{0}, std::size_t{3}, std::size_t{7}}) {
            const SparseParam c = net.candidate(idx);
            CHECK(nearest_candidate(net, c) == idx);
            CHECK(param_distance(net.candidate(nearest_candidate(net, c)), c) == 0.0);
        }
    }
    SUBCASE("sign rounding on the 0-sphere") {
        // +e_3 rounds to the +1 candidate on support {3}.
        SparseParam theta{{3}, {1.0}};
        const std::size_t idx = nearest_candidate(net, theta);
        const SparseParam c = net.candidate(idx);
        CHECK(c.support == std::vector<int>{3});
        CHECK(c.values[0] == 1.0);
    }
    SUBCASE("random probes stay within the covering radius (k=2)") {
        Rng probe(7);
        const ParamNet net2 = build_net(5, 2, 0.5, probe);
        int within = 0;
        const int probes = 10000;
        for (int i = 0; i < probes; ++i) {
            SparseParam theta;
            const int a = probe.uniform_int(5);
            int b = probe.uniform_int(4);
            if (b >= a) ++b;
            theta.support = {std::min(a, b), std::max(a, b)};
            const double x = probe.gaussian(), y = probe.gaussian();
            const double n = std::hypot(x, y);
            if (n == 0.0) continue;
            theta.values = {x / n, y / n};
            const double dist =
                param_distance(net2.candidate(nearest_candidate(net2, theta)), theta);
            if (dist <= 0.25) ++within;
        }
        CHECK(within >= static_cast<int>(0.99 * probes));
    }
}

TEST_CASE("inner products") {
    const TreeInstance tree = make_tree_instance(3, 0.1, {0, 0, 0});

    SUBCASE("tree features evaluate to (H - h - 1) * eps under theta* = 1") {
        for (int h = 0; h < 3; ++h) {
            for (const StateId s : tree.mdp.levels[h]) {
                CHECK(inner_value(tree.features, tree.theta_star[h], s, 0) == (3 - h - 1) * 0.1);
            }
        }
    }
    SUBCASE("one-hot picks out a single coordinate") {
        FeatureMap fm;
        fm.dim = 4;
        fm.phi = {{{0.1, 0.2, 0.3, 0.4}}};
        SparseParam theta{{2}, {1.0}};
        CHECK(inner_value(fm, theta, 0, 0) == 0.3);
    }
    SUBCASE("zero features give zero") {
        FeatureMap fm;
        fm.dim = 2;
        fm.phi = {{{0.0, 0.0}}};
        SparseParam theta{{0, 1}, {0.6, 0.8}};
        CHECK(inner_value(fm, theta, 0, 0) == 0.0);
    }
    SUBCASE("sparse dot agrees with the dense dot product") {
        Rng rng(8);
        const int d = 7;
        for (int trial = 0; trial < 200; ++trial) {
            SparseParam theta;
            const int k = 1 + rng.uniform_int(d);
            std::vector<int> pool{0, 1, 2, 3, 4, 5, 6};
            for (int i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.uniform_int(d - i)]);
            theta.support.assign(pool.begin(), pool.begin() + k);
            std::sort(theta.support.begin(), theta.support.end());
            double n2 = 0.0;
            theta.values.resize(k);
            for (double& v : theta.values) {
                v = rng.gaussian();
                n2 += v * v;
            }
            for (double& v : theta.values) v /= std::sqrt(n2);

            std::vector<double> phi(d);
            for (double& x : phi) x = rng.uniform(-0.3, 0.3);
            const std::vector<double> dense = theta.dense(d);
            double expect = 0.0;
            for (int i = 0; i < d; ++i) expect += dense[i] * phi[i];
            CHECK(std::abs(theta.dot(phi) - expect) <= 1e-12);
        }
    }
}

TEST_CASE("greedy action and value") {
    SUBCASE("action-independent features tie-break to the first action") {
        const TreeInstance tree = make_tree_instance(3, 0.1, {1, 1, 1});
        for (const StateId s : tree.mdp.levels[1])
            CHECK(greedy_action(tree.mdp, tree.features, tree.theta_star[1], s) == 0);
    }
    SUBCASE("one-hot in-level pair indices select their tagged action") {
        const RankInstance inst = make_rank_instance(8, 0.01);
        const int h = 1;
        for (int offset = 0; offset < 2; ++offset) {
            const StateId s = inst.mdp.levels[h][offset];
            SparseParam even{{2 * offset}, {1.0}};
            SparseParam odd{{2 * offset + 1}, {1.0}};
            CHECK(greedy_action(inst.mdp, inst.features, even, s) == 0);
            CHECK(greedy_action(inst.mdp, inst.features, odd, s) == 1);
        }
    }
    SUBCASE("all-zero features value to 0") {
        FeatureMap fm;
        fm.dim = 2;
        fm.phi = {{{0.0, 0.0}, {0.0, 0.0}}};
        TabularMdp mdp;
        mdp.horizon = 1;
        mdp.levels = {{0}};
        mdp.action_names = {"a1", "a2"};
        mdp.transition.resize(1);
        mdp.reward.assign(1, std::vector<Reward>(2, Reward::fixed(0.0)));
        mdp.finalize();
        SparseParam theta{{0}, {1.0}};
        CHECK(v_theta(mdp, fm, theta, 0) == 0.0);
        CHECK(greedy_action(mdp, fm, theta, 0) == 0);
    }
    SUBCASE("argmax is invariant under positive rescaling") {
        Rng rng(10);
        const RankInstance inst = make_rank_instance(8, 0.01);
        for (int trial = 0; trial < 100; ++trial) {
            const int coord = rng.uniform_int(8);
            SparseParam theta{{coord}, {1.0}};
            SparseParam scaled{{coord}, {rng.uniform(0.1, 5.0)}};
            for (const StateId s : inst.mdp.levels[rng.uniform_int(3)]) {
                CHECK(greedy_action(inst.mdp, inst.features, theta, s) ==
                      greedy_action(inst.mdp, inst.features, scaled, s));
            }
        }
    }
}

TEST_CASE("assumption gap") {
    SUBCASE("tree instance attains exactly eps") {
        const TreeInstance tree = make_tree_instance(4, 0.1, {0, 1, 0, 1});
        CHECK(assumption_gap(tree.mdp, tree.features, tree.theta_star) ==
              doctest::Approx(0.1).epsilon(1e-12));
    }
    SUBCASE("realizable generated instance has gap zero") {
        Rng rng(11);
        const ParamNet net = build_net(5, 1, 0.5, rng);
        const RandomSparseInstance inst = make_random_sparse_instance(5, 1, 3, 0.0, 2, rng, &net);
        CHECK(inst.realized_gap == 0.0);
        CHECK(assumption_gap(inst.mdp, inst.features, inst.theta_star) == 0.0);
    }
    SUBCASE("bandit instance attains exactly eps for both hidden signs") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            Rng rng(seed);
            const BanditInstance inst = make_bandit_instance(6, 0.2, rng);
            CHECK(assumption_gap(inst.mdp, inst.features, inst.theta_star) == 0.2);
        }
    }
    SUBCASE("rejects a sequence of the wrong length") {
        const TreeInstance tree = make_tree_instance(3, 0.1, {0, 0, 0});
        std::vector<SparseParam> two(tree.theta_star.begin(), tree.theta_star.begin() + 2);
        CHECK_THROWS_AS(assumption_gap(tree.mdp, tree.features, two), ParameterError);
    }
}

TEST_CASE("feature map validation catches oversized norms") {
    FeatureMap fm;
    fm.dim = 2;
    fm.phi = {{{0.9, 0.9}}};
    TabularMdp mdp;
    mdp.horizon = 1;
    mdp.levels = {{0}};
    mdp.action_names = {"a1"};
    mdp.transition.resize(1);
    mdp.reward.assign(1, {Reward::fixed(0.0)});
    mdp.finalize();
    CHECK_THROWS_AS(fm.validate(mdp), StructuralError);
}

TEST_CASE("net export lists supports and sphere points") {
    Rng rng(12);
    const ParamNet net = build_net(3, 1, 0.5, rng);
    std::ostringstream out;
    write_net(net, out);
    const std::string text = out.str();
    CHECK(text.find("dim 3") != std::string::npos);
    CHECK(text.find("sphere 2") != std::string::npos);
    CHECK(text.find("supports 3") != std::string::npos);
}
