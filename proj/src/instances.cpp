#include "sparserl/instances.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <json.hpp>

namespace sparserl {

namespace {

constexpr int kMaxTreeHorizon = 20;  // 2^20 - 1 states is the desk-scale ceiling

// Shared binary-tree skeleton: states 0 .. 2^H - 2, level h holds
// [2^h - 1, 2^{h+1} - 2], children of s are 2s + 1 (a1) and 2s + 2 (a2).
TabularMdp binary_tree_skeleton(int H) {
    if (H < 1) throw ParameterError("horizon must be >= 1");
    if (H > kMaxTreeHorizon) throw ParameterError("tree horizon too large for desk scale");
    TabularMdp mdp;
    mdp.horizon = H;
    mdp.action_names = {"a1", "a2"};
    const int n = (1 << H) - 1;
    mdp.levels.resize(H);
    for (int h = 0; h < H; ++h) {
        for (StateId s = (1 << h) - 1; s <= (1 << (h + 1)) - 2; ++s) mdp.levels[h].push_back(s);
    }
    mdp.initial_state = 0;
    mdp.transition.resize(n);
    mdp.reward.assign(n, std::vector<Reward>(2, Reward::fixed(0.0)));
    for (int h = 0; h + 1 < H; ++h) {
        for (const StateId s : mdp.levels[h]) {
            mdp.transition[s] = {Transition::to(2 * s + 1), Transition::to(2 * s + 2)};
        }
    }
    return mdp;
}

std::vector<SparseParam> scalar_theta_star(int H, double sign = 1.0) {
    std::vector<SparseParam> theta(H);
    for (auto& t : theta) {
        t.support = {0};
        t.values = {sign};
    }
    return theta;
}

FeatureMap level_constant_features(const TabularMdp& mdp, const std::vector<double>& per_level) {
    FeatureMap fm;
    fm.dim = 1;
    fm.phi.resize(mdp.num_states());
    for (int h = 0; h < mdp.horizon; ++h) {
        for (const StateId s : mdp.levels[h]) {
            fm.phi[s].assign(mdp.num_actions(), {per_level[h]});
        }
    }
    return fm;
}

}  // namespace

double TreeInstance::closed_form_q(StateId s, ActionId a) const {
    const int h = mdp.level_of[s];
    const int H = mdp.horizon;
    return (a == optimal_actions[h]) ? (H - h) * epsilon : (H - h - 1) * epsilon;
}

TreeInstance make_tree_instance(int H, double eps, const std::vector<ActionId>& a_star) {
    if (eps < 0.0 || H * eps > 1.0 + 1e-12)
        throw ParameterError("need H * eps <= 1 to keep reward sums and feature norms bounded");
    if (static_cast<int>(a_star.size()) != H)
        throw ParameterError("optimal action sequence must have length H");

    TreeInstance inst;
    inst.mdp = binary_tree_skeleton(H);
    inst.epsilon = eps;
    inst.optimal_actions = a_star;
    for (int h = 0; h < H; ++h) {
        if (a_star[h] != 0 && a_star[h] != 1) throw ParameterError("actions are binary");
        for (const StateId s : inst.mdp.levels[h]) {
            inst.mdp.reward[s][a_star[h]] = Reward::fixed(eps);
        }
    }
    inst.mdp.finalize();

    std::vector<double> per_level(H);
    for (int h = 0; h < H; ++h) per_level[h] = (H - h - 1) * eps;
    inst.features = level_constant_features(inst.mdp, per_level);
    inst.features.validate(inst.mdp);
    inst.theta_star = scalar_theta_star(H);
    return inst;
}

TreeInstance make_tree_instance(int H, double eps, Rng& rng) {
    std::vector<ActionId> a_star(H);
    for (ActionId& a : a_star) a = rng.uniform_int(2);
    return make_tree_instance(H, eps, a_star);
}

double BlockInstance::closed_form_q(StateId s, ActionId a) const {
    const int h = mdp.level_of[s];
    const int blocks = mdp.horizon / block_len;
    const int q = h / block_len;
    if (on_spine[s] && a == optimal_actions[h]) return (blocks - q) * epsilon;
    return (blocks - q - 1) * epsilon;
}

std::vector<ActionId> block_bijection(int index, int T) {
    if (T < 1 || index < 0 || index >= (1 << T)) throw ParameterError("bijection index out of range");
    std::vector<ActionId> window(T);
    for (int t = 0; t < T; ++t) window[t] = (index >> (T - 1 - t)) & 1;
    return window;
}

int block_bijection_inverse(const std::vector<ActionId>& window) {
    int index = 0;
    for (const ActionId a : window) {
        if (a != 0 && a != 1) throw ParameterError("actions are binary");
        index = (index << 1) | a;
    }
    return index;
}

BlockInstance make_block_instance(int H, int T, double eps, const std::vector<int>& targets) {
    if (T < 1 || H % T != 0)
        throw ParameterError("block length must divide the horizon");
    const int blocks = H / T;
    if (eps < 0.0 || blocks * eps > 1.0 + 1e-12)
        throw ParameterError("need (H/T) * eps <= 1");
    if (static_cast<int>(targets.size()) != blocks)
        throw ParameterError("need one target index per block");

    BlockInstance inst;
    inst.mdp = binary_tree_skeleton(H);
    inst.block_len = T;
    inst.epsilon = eps;
    inst.target_indices = targets;
    for (int q = 0; q < blocks; ++q) {
        const std::vector<ActionId> window = block_bijection(targets[q], T);
        inst.optimal_actions.insert(inst.optimal_actions.end(), window.begin(), window.end());
    }

    // States of the form P*(s', t): every block-entry state starts a spine,
    // and a child stays on it iff its parent edge took the block's action.
    inst.on_spine.assign((1 << H) - 1, 0);
    for (int h = 0; h < H; ++h) {
        const int t = h % T;
        for (const StateId s : inst.mdp.levels[h]) {
            if (t == 0) {
                inst.on_spine[s] = 1;
            } else {
                const StateId parent = (s - 1) / 2;
                const ActionId edge = (s % 2 == 1) ? 0 : 1;
                inst.on_spine[s] = inst.on_spine[parent] && edge == inst.optimal_actions[h - 1];
            }
        }
    }
    for (int h = T - 1; h < H; h += T) {
        for (const StateId s : inst.mdp.levels[h]) {
            if (inst.on_spine[s]) inst.mdp.reward[s][inst.optimal_actions[h]] = Reward::fixed(eps);
        }
    }
    inst.mdp.finalize();

    std::vector<double> per_level(H);
    for (int h = 0; h < H; ++h) per_level[h] = (blocks - h / T) * eps;
    inst.features = level_constant_features(inst.mdp, per_level);
    inst.features.validate(inst.mdp);
    inst.theta_star = scalar_theta_star(H);
    return inst;
}

BlockInstance make_block_instance(int H, int T, double eps, Rng& rng) {
    if (T < 1 || H % T != 0) throw ParameterError("block length must divide the horizon");
    std::vector<int> targets(H / T);
    for (int& i : targets) i = rng.uniform_int(1 << T);
    return make_block_instance(H, T, eps, targets);
}

BanditInstance make_bandit_instance(int n, double eps, Rng& rng) {
    if (n < 1) throw ParameterError("need at least one arm");
    if (eps < 0.0 || 2.0 * eps > 1.0 + 1e-12) throw ParameterError("need 2 * eps <= 1");

    BanditInstance inst;
    inst.num_arms = n;
    inst.epsilon = eps;
    inst.theta_sign = rng.bernoulli(0.5) ? 1 : -1;
    inst.special_arm = rng.uniform_int(n);

    TabularMdp& mdp = inst.mdp;
    mdp.horizon = 1;
    mdp.levels = {{0}};
    mdp.initial_state = 0;
    for (int a = 0; a < n; ++a) mdp.action_names.push_back("a" + std::to_string(a + 1));
    mdp.transition.resize(1);
    mdp.reward.assign(1, std::vector<Reward>(n, Reward::fixed(0.0)));
    mdp.reward[0][inst.special_arm] = Reward::fixed(2.0 * inst.theta_sign * eps);

    // theta* = -1 places r(a*) = -2 eps below the usual reward range; that is
    // the point of the construction, so the range checks are waived then.
    ValidationOptions options;
    options.require_reward_range = options.require_path_sums = (inst.theta_sign > 0);
    mdp.finalize(options);

    inst.features.dim = 1;
    inst.features.phi = {std::vector<std::vector<double>>(n, {eps})};
    inst.features.validate(mdp);
    inst.theta_star = scalar_theta_star(1, static_cast<double>(inst.theta_sign));
    return inst;
}

double max_rank_epsilon(int d) {
    // Worst feature norm is at level 0: sqrt(sum_{j=2}^{d-1} j^2 + 1) * eps.
    double n2 = 1.0;
    for (int j = 2; j < d; ++j) n2 += static_cast<double>(j) * j;
    return 1.0 / std::sqrt(n2);
}

std::pair<StateId, ActionId> RankInstance::terminal_pair(int idx) const {
    const int H = horizon();
    return {(1 << (H - 1)) - 1 + (idx >> 1), idx & 1};
}

std::vector<int> RankInstance::steering_indices(int idx) const {
    const int H = horizon();
    std::vector<int> coords(H);
    for (int h = 0; h < H; ++h) coords[h] = idx >> (H - 1 - h);
    return coords;
}

std::vector<SparseParam> RankInstance::steering_sequence(int idx) const {
    std::vector<SparseParam> seq;
    for (const int coord : steering_indices(idx)) {
        SparseParam p;
        p.support = {coord};
        p.values = {1.0};
        seq.push_back(std::move(p));
    }
    return seq;
}

TabularPolicy RankInstance::steering_policy(int idx) const {
    const std::vector<SparseParam> seq = steering_sequence(idx);
    TabularPolicy policy;
    policy.action.assign(mdp.num_states(), -1);
    for (int h = 0; h < horizon(); ++h) {
        for (const StateId s : mdp.levels[h])
            policy.action[s] = greedy_action(mdp, features, seq[h], s);
    }
    return policy;
}

RankInstance make_rank_instance(int d, double eps) {
    if (d < 2 || (d & (d - 1)) != 0) throw ParameterError("dimension must be a power of two >= 2");
    if (!(eps > 0.0) || eps > max_rank_epsilon(d))
        throw ParameterError("eps too large for unit feature norms; see max_rank_epsilon");

    const int H = std::countr_zero(static_cast<unsigned>(d));
    RankInstance inst;
    inst.dim = d;
    inst.epsilon = eps;
    inst.mdp = binary_tree_skeleton(H);
    for (const StateId s : inst.mdp.levels[H - 1]) {
        inst.mdp.reward[s][0] = Reward::fixed(eps);
        inst.mdp.reward[s][1] = Reward::fixed(eps);
    }
    inst.mdp.finalize();

    FeatureMap& fm = inst.features;
    fm.dim = d;
    fm.phi.resize(inst.mdp.num_states());
    for (int h = 0; h < H; ++h) {
        for (const StateId s : inst.mdp.levels[h]) {
            fm.phi[s].assign(2, std::vector<double>(d, 0.0));
            // Coordinates above the level's pair range are action-independent.
            for (int j = 1 << (h + 1); j < d; ++j) {
                fm.phi[s][0][j] = j * eps;
                fm.phi[s][1][j] = j * eps;
            }
            // Each in-level pair index tags exactly one (state, action).
            const int offset = s - ((1 << h) - 1);
            fm.phi[s][0][2 * offset] = eps;
            fm.phi[s][1][2 * offset + 1] = eps;
        }
    }
    fm.validate(inst.mdp);

    inst.theta_star.assign(H, SparseParam{{0}, {1.0}});
    return inst;
}

RandomSparseInstance make_random_sparse_instance(int d, int k, int H, double eps, int branching,
                                                 Rng& rng, const ParamNet* net) {
    if (d < 1 || k < 1 || k > d) throw ParameterError("need 1 <= k <= d");
    if (H < 1) throw ParameterError("horizon must be >= 1");
    if (branching < 2) throw ParameterError("branching must be >= 2");
    if (eps < 0.0 || eps >= 1.0) throw ParameterError("need 0 <= eps < 1");
    if (net && (net->dim != d || net->sparsity != k))
        throw ParameterError("net shape does not match (d, k)");

    double total_states = 0.0;
    for (int h = 0; h < H; ++h) total_states += std::pow(branching, h);
    if (total_states > 2e5) throw ParameterError("instance too large for desk scale");

    RandomSparseInstance inst;
    TabularMdp& mdp = inst.mdp;
    mdp.horizon = H;
    for (int a = 0; a < branching; ++a) mdp.action_names.push_back("a" + std::to_string(a + 1));
    mdp.levels.resize(H);
    int next_id = 0;
    for (int h = 0; h < H; ++h) {
        int count = 1;
        for (int i = 0; i < h; ++i) count *= branching;
        for (int i = 0; i < count; ++i) mdp.levels[h].push_back(next_id++);
    }
    mdp.initial_state = 0;
    mdp.transition.resize(next_id);
    mdp.reward.assign(next_id, std::vector<Reward>(branching, Reward::fixed(0.0)));
    for (int h = 0; h + 1 < H; ++h) {
        for (std::size_t i = 0; i < mdp.levels[h].size(); ++i) {
            const StateId s = mdp.levels[h][i];
            for (int a = 0; a < branching; ++a) {
                const StateId child = mdp.levels[h + 1][i * branching + a];
                mdp.transition[s].push_back(Transition::to(child));
            }
        }
    }

    // Per-level parameters, either net candidates (making the net-rounded
    // parameter coincide with theta*) or fresh uniform sparse directions.
    std::vector<int> anchor(H);       // position within the support
    std::vector<double> anchor_value(H);
    double value_cap = 1.0 - eps;
    for (int h = 0; h < H; ++h) {
        SparseParam theta;
        if (net) {
            const std::size_t idx = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(net->size())));
            inst.theta_star_candidates.push_back(idx);
            theta = net->candidate(idx);
        } else {
            std::vector<int> pool(d);
            for (int i = 0; i < d; ++i) pool[i] = i;
            for (int i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.uniform_int(d - i)]);
            theta.support.assign(pool.begin(), pool.begin() + k);
            std::sort(theta.support.begin(), theta.support.end());
            double n2 = 0.0;
            theta.values.resize(k);
            do {
                n2 = 0.0;
                for (double& v : theta.values) {
                    v = rng.gaussian();
                    n2 += v * v;
                }
            } while (n2 == 0.0);
            const double inv = 1.0 / std::sqrt(n2);
            for (double& v : theta.values) v *= inv;
        }
        theta.validate(d);
        int best = 0;
        for (int i = 1; i < k; ++i)
            if (std::abs(theta.values[i]) > std::abs(theta.values[best])) best = i;
        anchor[h] = best;
        anchor_value[h] = theta.values[best];
        value_cap = std::min(value_cap, std::abs(anchor_value[h]));
        inst.theta_star.push_back(std::move(theta));
    }

    // Target values drawn top-down with each child value in [Q/2, Q), so the
    // reward Q - V_next is exact by the Sterbenz identity and all path sums
    // stay within the root value.
    std::vector<double> value(next_id, 0.0);
    std::vector<std::vector<double>> q(next_id, std::vector<double>(branching, 0.0));
    value[0] = value_cap * rng.uniform(0.6, 1.0);
    for (int h = 0; h < H; ++h) {
        for (std::size_t i = 0; i < mdp.levels[h].size(); ++i) {
            const StateId s = mdp.levels[h][i];
            const int best_a = rng.uniform_int(branching);
            for (int a = 0; a < branching; ++a)
                q[s][a] = (a == best_a) ? value[s] : value[s] * rng.uniform(0.5, 1.0);
            for (int a = 0; a < branching; ++a) {
                if (h + 1 < H) {
                    const StateId child = mdp.transition[s][a].target;
                    value[child] = q[s][a] * rng.uniform(0.5, 1.0);
                    mdp.reward[s][a] = Reward::fixed(q[s][a] - value[child]);
                } else {
                    mdp.reward[s][a] = Reward::fixed(q[s][a]);
                }
            }
        }
    }

    if (eps > 0.0) {
        for (const StateId s : mdp.levels[H - 1]) {
            for (int a = 0; a < branching; ++a) {
                const double noise = rng.uniform(-eps, eps);
                mdp.reward[s][a] = Reward::fixed(std::max(0.0, mdp.reward[s][a].value + noise));
            }
        }
    }
    mdp.finalize();

    FeatureMap& fm = inst.features;
    fm.dim = d;
    fm.phi.resize(next_id);
    for (int h = 0; h < H; ++h) {
        const int coord = inst.theta_star[h].support[anchor[h]];
        for (const StateId s : mdp.levels[h]) {
            fm.phi[s].assign(branching, std::vector<double>(d, 0.0));
            for (int a = 0; a < branching; ++a) fm.phi[s][a][coord] = q[s][a] / anchor_value[h];
        }
    }
    fm.validate(mdp);

    inst.realized_gap = assumption_gap(mdp, fm, inst.theta_star);
    return inst;
}

using nlohmann::json;

std::string features_to_json(const FeatureMap& fm) {
    json doc;
    doc["dimension"] = fm.dim;
    doc["features"] = fm.phi;
    return doc.dump(2);
}

FeatureMap features_from_json(const std::string& text) {
    json doc = json::parse(text);
    FeatureMap fm;
    fm.dim = doc.at("dimension").get<int>();
    fm.phi = doc.at("features").get<std::vector<std::vector<std::vector<double>>>>();
    return fm;
}

}  // namespace sparserl
