#pragma once

// Test-only brute-force oracles. Deliberately independent of the library's
// backward-induction / forward-propagation code paths: values here come from
// direct recursion and exhaustive enumeration.

#include <cmath>
#include <functional>
#include <vector>

#include "sparserl/mdp.hpp"

namespace testsupport {

using sparserl::ActionId;
using sparserl::StateId;
using sparserl::TabularMdp;
using sparserl::TabularPolicy;

// Expected return from state s under a fixed policy, by direct recursion.
inline double recursive_value(const TabularMdp& mdp, const TabularPolicy& policy, StateId s) {
    const int h = mdp.level_of[s];
    const ActionId a = policy.at(s);
    double v = mdp.reward[s][a].mean();
    if (h + 1 < mdp.horizon) {
        const sparserl::Transition& t = mdp.transition[s][a];
        if (t.deterministic) {
            v += recursive_value(mdp, policy, t.target);
        } else {
            for (const auto& [tgt, p] : t.support) v += p * recursive_value(mdp, policy, tgt);
        }
    }
    return v;
}

// Elementwise max over all A^n deterministic policies of Q^pi(s, a). Only
// usable on instances with a handful of states.
inline std::vector<std::vector<double>> brute_force_q(const TabularMdp& mdp) {
    const int n = mdp.num_states();
    const int A = mdp.num_actions();
    std::vector<std::vector<double>> best(n, std::vector<double>(A, -1e300));

    TabularPolicy policy;
    policy.action.assign(n, 0);
    const auto q_pi = [&](StateId s, ActionId a) {
        double q = mdp.reward[s][a].mean();
        const int h = mdp.level_of[s];
        if (h + 1 < mdp.horizon) {
            const sparserl::Transition& t = mdp.transition[s][a];
            if (t.deterministic) {
                q += recursive_value(mdp, policy, t.target);
            } else {
                for (const auto& [tgt, p] : t.support) q += p * recursive_value(mdp, policy, tgt);
            }
        }
        return q;
    };

    std::function<void(int)> enumerate = [&](int s) {
        if (s == n) {
            for (StateId st = 0; st < n; ++st)
                for (ActionId a = 0; a < A; ++a)
                    best[st][a] = std::max(best[st][a], q_pi(st, a));
            return;
        }
        for (ActionId a = 0; a < A; ++a) {
            policy.action[s] = a;
            enumerate(s + 1);
        }
    };
    enumerate(0);
    return best;
}

// Realized reward sums of every action sequence on a deterministic-transition
// instance (and every reward realization when rewards are stochastic).
inline void enumerate_path_sums(const TabularMdp& mdp, StateId s, double acc,
                                std::vector<double>& out) {
    const int h = mdp.level_of[s];
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        const sparserl::Reward& r = mdp.reward[s][a];
        std::vector<double> realizations;
        if (r.deterministic) {
            realizations.push_back(r.value);
        } else {
            for (const auto& [v, p] : r.support) realizations.push_back(v);
        }
        for (const double rv : realizations) {
            if (h + 1 == mdp.horizon) {
                out.push_back(acc + rv);
            } else {
                const sparserl::Transition& t = mdp.transition[s][a];
                if (t.deterministic) {
                    enumerate_path_sums(mdp, t.target, acc + rv, out);
                } else {
                    for (const auto& [tgt, p] : t.support)
                        enumerate_path_sums(mdp, tgt, acc + rv, out);
                }
            }
        }
    }
}

inline std::vector<double> all_path_sums(const TabularMdp& mdp) {
    std::vector<double> out;
    enumerate_path_sums(mdp, mdp.initial_state, 0.0, out);
    return out;
}

}  // namespace testsupport
