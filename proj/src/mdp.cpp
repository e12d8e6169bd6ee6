#include "sparserl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace sparserl {

namespace {
constexpr double kProbTol = 1e-12;
constexpr double kRangeTol = 1e-12;
}  // namespace

Transition Transition::mixed(std::vector<std::pair<StateId, double>> support) {
    Transition t;
    t.deterministic = false;
    t.support = std::move(support);
    return t;
}

StateId Transition::sample(Rng& rng) const {
    if (deterministic) {
        if (target < 0) throw StructuralError("transition entry has no target");
        return target;
    }
    if (support.empty()) throw StructuralError("stochastic transition has empty support");
    double u = rng.uniform01();
    for (const auto& [s, p] : support) {
        u -= p;
        if (u < 0.0) return s;
    }
    return support.back().first;  // guard against accumulated rounding
}

Reward Reward::mixed(std::vector<std::pair<double, double>> support) {
    Reward r;
    r.deterministic = false;
    r.support = std::move(support);
    return r;
}

double Reward::mean() const {
    if (deterministic) return value;
    double m = 0.0;
    for (const auto& [v, p] : support) m += v * p;
    return m;
}

double Reward::min_value() const {
    if (deterministic) return value;
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [v, p] : support) m = std::min(m, v);
    return m;
}

double Reward::max_value() const {
    if (deterministic) return value;
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [v, p] : support) m = std::max(m, v);
    return m;
}

double Reward::sample(Rng& rng) const {
    if (deterministic) return value;
    if (support.empty()) throw StructuralError("stochastic reward has empty support");
    double u = rng.uniform01();
    for (const auto& [v, p] : support) {
        u -= p;
        if (u < 0.0) return v;
    }
    return support.back().first;
}

bool TabularMdp::is_deterministic() const {
    for (const auto& row : transition)
        for (const auto& t : row)
            if (!t.deterministic) return false;
    for (const auto& row : reward)
        for (const auto& r : row)
            if (!r.deterministic) return false;
    return true;
}

void TabularMdp::finalize(const ValidationOptions& options) {
    if (horizon < 1) throw StructuralError("horizon must be >= 1");
    if (static_cast<int>(levels.size()) != horizon)
        throw StructuralError("levels list does not match horizon");
    if (action_names.empty()) throw StructuralError("empty action set");

    int n = 0;
    for (const auto& lv : levels) n += static_cast<int>(lv.size());
    level_of.assign(n, -1);
    index_in_level.assign(n, -1);
    for (int h = 0; h < horizon; ++h) {
        for (int i = 0; i < static_cast<int>(levels[h].size()); ++i) {
            const StateId s = levels[h][i];
            if (s < 0 || s >= n) throw StructuralError("state id out of dense range");
            if (level_of[s] != -1) throw StructuralError("state appears in two levels");
            level_of[s] = h;
            index_in_level[s] = i;
        }
    }
    if (levels[0].size() != 1 || levels[0][0] != initial_state)
        throw StructuralError("level 0 must contain exactly the initial state");

    const int A = num_actions();
    if (static_cast<int>(transition.size()) != n || static_cast<int>(reward.size()) != n)
        throw StructuralError("transition/reward tables do not cover the state set");

    for (StateId s = 0; s < n; ++s) {
        const int h = level_of[s];
        const bool last = (h == horizon - 1);
        if (last) {
            if (!transition[s].empty())
                throw StructuralError("last-level state has transition entries");
        } else if (static_cast<int>(transition[s].size()) != A) {
            throw StructuralError("transition row does not cover the action set");
        }
        if (static_cast<int>(reward[s].size()) != A)
            throw StructuralError("reward row does not cover the action set");

        for (ActionId a = 0; a < A && !last; ++a) {
            const Transition& t = transition[s][a];
            if (t.deterministic) {
                if (t.target < 0 || t.target >= n || level_of[t.target] != h + 1)
                    throw StructuralError("transition target not in the next level");
            } else {
                if (t.support.empty())
                    throw StructuralError("stochastic transition has empty support");
                double mass = 0.0;
                for (const auto& [tgt, p] : t.support) {
                    if (tgt < 0 || tgt >= n || level_of[tgt] != h + 1)
                        throw StructuralError("transition target not in the next level");
                    if (p < 0.0) throw StructuralError("negative transition probability");
                    mass += p;
                }
                if (std::abs(mass - 1.0) > kProbTol)
                    throw StructuralError("transition row does not sum to 1");
            }
        }
        for (ActionId a = 0; a < A; ++a) {
            const Reward& r = reward[s][a];
            if (!r.deterministic) {
                if (r.support.empty())
                    throw StructuralError("stochastic reward has empty support");
                double mass = 0.0;
                for (const auto& [v, p] : r.support) {
                    (void)v;
                    if (p < 0.0) throw StructuralError("negative reward probability");
                    mass += p;
                }
                if (std::abs(mass - 1.0) > kProbTol)
                    throw StructuralError("reward distribution does not sum to 1");
            }
            if (options.require_reward_range) {
                if (r.min_value() < -kRangeTol || r.max_value() > 1.0 + kRangeTol)
                    throw StructuralError("per-step reward outside [0, 1]");
            }
        }
    }

    if (options.require_path_sums) {
        // Worst/best realizable cumulative reward from each state. The level
        // structure makes this an exact DAG sweep, so the [0, 1] trajectory
        // bound is verified without enumeration.
        std::vector<double> hi(n, 0.0), lo(n, 0.0);
        for (int h = horizon - 1; h >= 0; --h) {
            for (const StateId s : levels[h]) {
                double best = -std::numeric_limits<double>::infinity();
                double worst = std::numeric_limits<double>::infinity();
                for (ActionId a = 0; a < A; ++a) {
                    double next_hi = 0.0, next_lo = 0.0;
                    if (h + 1 < horizon) {
                        const Transition& t = transition[s][a];
                        if (t.deterministic) {
                            next_hi = hi[t.target];
                            next_lo = lo[t.target];
                        } else {
                            next_hi = -std::numeric_limits<double>::infinity();
                            next_lo = std::numeric_limits<double>::infinity();
                            for (const auto& [tgt, p] : t.support) {
                                (void)p;
                                next_hi = std::max(next_hi, hi[tgt]);
                                next_lo = std::min(next_lo, lo[tgt]);
                            }
                        }
                    }
                    best = std::max(best, reward[s][a].max_value() + next_hi);
                    worst = std::min(worst, reward[s][a].min_value() + next_lo);
                }
                hi[s] = best;
                lo[s] = worst;
            }
        }
        if (lo[initial_state] < -kRangeTol || hi[initial_state] > 1.0 + kRangeTol)
            throw StructuralError("some trajectory's reward sum leaves [0, 1]");
    }
}

double Trajectory::total_reward() const {
    double s = 0.0;
    for (const Step& st : steps) s += st.reward;
    return s;
}

TabularPolicy TabularPolicy::constant(const TabularMdp& mdp, ActionId a) {
    TabularPolicy p;
    p.action.assign(mdp.num_states(), a);
    return p;
}

ActionId TabularPolicy::at(StateId s) const {
    if (s < 0 || s >= static_cast<int>(action.size()) || action[s] < 0)
        throw StructuralError("policy undefined at a reached state");
    return action[s];
}

Trajectory sample_trajectory(const TabularMdp& mdp, const TabularPolicy& policy, Rng& rng) {
    Trajectory traj;
    traj.steps.reserve(mdp.horizon);
    StateId s = mdp.initial_state;
    for (int h = 0; h < mdp.horizon; ++h) {
        const ActionId a = policy.at(s);
        if (a >= mdp.num_actions()) throw StructuralError("policy action out of range");
        const double r = mdp.reward[s][a].sample(rng);
        traj.steps.push_back({s, a, r});
        if (h + 1 < mdp.horizon) s = mdp.transition[s][a].sample(rng);
    }
    return traj;
}

std::vector<Trajectory> sample_dataset(const TabularMdp& mdp, const TabularPolicy& policy,
                                       long long m, std::uint64_t dataset_seed) {
    if (m < 1) throw ParameterError("dataset size must be >= 1");
    std::vector<Trajectory> out;
    out.reserve(static_cast<std::size_t>(m));
    for (long long i = 0; i < m; ++i) {
        Rng episode_rng(derive_seed(dataset_seed, static_cast<std::uint64_t>(i)));
        out.push_back(sample_trajectory(mdp, policy, episode_rng));
    }
    return out;
}

double OptimalSolution::value() const { return v[initial_state]; }

OptimalSolution exact_optimal(const TabularMdp& mdp) {
    const int n = mdp.num_states();
    const int A = mdp.num_actions();
    OptimalSolution sol;
    sol.initial_state = mdp.initial_state;
    sol.q.assign(n, std::vector<double>(A, 0.0));
    sol.v.assign(n, 0.0);
    sol.policy.action.assign(n, -1);

    for (int h = mdp.horizon - 1; h >= 0; --h) {
        for (const StateId s : mdp.levels[h]) {
            double best = -std::numeric_limits<double>::infinity();
            ActionId best_a = 0;
            for (ActionId a = 0; a < A; ++a) {
                double q = mdp.reward[s][a].mean();
                if (h + 1 < mdp.horizon) {
                    const Transition& t = mdp.transition[s][a];
                    if (t.deterministic) {
                        q += sol.v[t.target];
                    } else {
                        for (const auto& [tgt, p] : t.support) q += p * sol.v[tgt];
                    }
                }
                sol.q[s][a] = q;
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            sol.v[s] = best;
            sol.policy.action[s] = best_a;
        }
    }
    return sol;
}

std::vector<double> state_distribution(const TabularMdp& mdp, const TabularPolicy& policy,
                                       int level) {
    if (level < 0 || level >= mdp.horizon) throw ParameterError("level out of range");
    std::vector<double> cur(1, 1.0);  // aligned with mdp.levels[0]
    for (int h = 0; h < level; ++h) {
        std::vector<double> next(mdp.levels[h + 1].size(), 0.0);
        for (std::size_t i = 0; i < mdp.levels[h].size(); ++i) {
            const double mass = cur[i];
            if (mass == 0.0) continue;
            const StateId s = mdp.levels[h][i];
            const Transition& t = mdp.transition[s][policy.at(s)];
            if (t.deterministic) {
                next[mdp.index_in_level[t.target]] += mass;
            } else {
                for (const auto& [tgt, p] : t.support) next[mdp.index_in_level[tgt]] += mass * p;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

double exact_policy_value(const TabularMdp& mdp, const TabularPolicy& policy) {
    double value = 0.0;
    std::vector<double> cur(1, 1.0);
    for (int h = 0; h < mdp.horizon; ++h) {
        std::vector<double> next;
        if (h + 1 < mdp.horizon) next.assign(mdp.levels[h + 1].size(), 0.0);
        for (std::size_t i = 0; i < mdp.levels[h].size(); ++i) {
            const double mass = cur[i];
            if (mass == 0.0) continue;
            const StateId s = mdp.levels[h][i];
            const ActionId a = policy.at(s);
            value += mass * mdp.reward[s][a].mean();
            if (h + 1 < mdp.horizon) {
                const Transition& t = mdp.transition[s][a];
                if (t.deterministic) {
                    next[mdp.index_in_level[t.target]] += mass;
                } else {
                    for (const auto& [tgt, p] : t.support)
                        next[mdp.index_in_level[tgt]] += mass * p;
                }
            }
        }
        cur = std::move(next);
    }
    return value;
}

using nlohmann::json;

std::string mdp_to_json(const TabularMdp& mdp) {
    json doc;
    doc["horizon"] = mdp.horizon;
    doc["levels"] = mdp.levels;
    doc["actions"] = mdp.action_names;
    doc["initial_state"] = mdp.initial_state;

    json transitions = json::array();
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.transition[s].empty()) {
            transitions.push_back(nullptr);
            continue;
        }
        json row = json::array();
        for (const Transition& t : mdp.transition[s]) {
            if (t.deterministic) {
                row.push_back(t.target);
            } else {
                json sup = json::array();
                for (const auto& [tgt, p] : t.support) sup.push_back(json::array({tgt, p}));
                row.push_back(sup);
            }
        }
        transitions.push_back(row);
    }
    doc["transitions"] = transitions;

    json rewards = json::array();
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        json row = json::array();
        for (const Reward& r : mdp.reward[s]) {
            if (r.deterministic) {
                row.push_back(r.value);
            } else {
                json sup = json::array();
                for (const auto& [v, p] : r.support) sup.push_back(json::array({v, p}));
                row.push_back(sup);
            }
        }
        rewards.push_back(row);
    }
    doc["rewards"] = rewards;
    return doc.dump(2);
}

TabularMdp mdp_from_json(const std::string& text, const ValidationOptions& options) {
    json doc = json::parse(text);
    TabularMdp mdp;
    mdp.horizon = doc.at("horizon").get<int>();
    mdp.levels = doc.at("levels").get<std::vector<std::vector<StateId>>>();
    mdp.action_names = doc.at("actions").get<std::vector<std::string>>();
    mdp.initial_state = doc.at("initial_state").get<StateId>();

    const json& transitions = doc.at("transitions");
    mdp.transition.resize(transitions.size());
    for (std::size_t s = 0; s < transitions.size(); ++s) {
        if (transitions[s].is_null()) continue;
        for (const json& entry : transitions[s]) {
            if (entry.is_number_integer()) {
                mdp.transition[s].push_back(Transition::to(entry.get<StateId>()));
            } else {
                std::vector<std::pair<StateId, double>> support;
                for (const json& pair : entry)
                    support.emplace_back(pair.at(0).get<StateId>(), pair.at(1).get<double>());
                mdp.transition[s].push_back(Transition::mixed(std::move(support)));
            }
        }
    }

    const json& rewards = doc.at("rewards");
    mdp.reward.resize(rewards.size());
    for (std::size_t s = 0; s < rewards.size(); ++s) {
        for (const json& entry : rewards[s]) {
            if (entry.is_number()) {
                mdp.reward[s].push_back(Reward::fixed(entry.get<double>()));
            } else {
                std::vector<std::pair<double, double>> support;
                for (const json& pair : entry)
                    support.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
                mdp.reward[s].push_back(Reward::mixed(std::move(support)));
            }
        }
    }

    mdp.finalize(options);
    return mdp;
}

}  // namespace sparserl
