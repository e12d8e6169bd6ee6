#include "sparserl/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace sparserl {

double exact_avg_bellman_error(const TabularMdp& mdp, const FeatureMap& fm,
                               std::span<const SparseParam> theta, int h,
                               const TabularPolicy& rollin) {
    const int H = mdp.horizon;
    if (h < 0 || h >= H) throw ParameterError("level out of range");
    const std::vector<double> dist = state_distribution(mdp, rollin, h);
    double total = 0.0;
    for (std::size_t i = 0; i < mdp.levels[h].size(); ++i) {
        const double mass = dist[i];
        if (mass == 0.0) continue;
        const StateId s = mdp.levels[h][i];
        const ActionId a = rollin.at(s);
        double term = inner_value(fm, theta[h], s, a) - mdp.reward[s][a].mean();
        if (h + 1 < H) {
            const Transition& t = mdp.transition[s][a];
            if (t.deterministic) {
                term -= v_theta(mdp, fm, theta[h + 1], t.target);
            } else {
                for (const auto& [tgt, p] : t.support)
                    term -= p * v_theta(mdp, fm, theta[h + 1], tgt);
            }
        }
        total += mass * term;
    }
    return total;
}

BellmanErrorMatrix bellman_error_matrix(const RankInstance& inst, int level) {
    const int H = inst.horizon();
    if (level < 0 || level >= H) throw ParameterError("level out of range");
    const int d = inst.dim;

    BellmanErrorMatrix w;
    w.level = level;
    w.entries.assign(d, std::vector<double>(d, 0.0));

    std::vector<std::vector<SparseParam>> sequences;
    std::vector<TabularPolicy> rollins;
    sequences.reserve(d);
    rollins.reserve(d);
    for (int i = 0; i < d; ++i) {
        sequences.push_back(inst.steering_sequence(i));
        rollins.push_back(inst.steering_policy(i));
    }

    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            w.entries[i][j] =
                exact_avg_bellman_error(inst.mdp, inst.features, sequences[i], level, rollins[j]);
        }
    }

    if (level == H - 1) {
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                const double expected = (i == j) ? 0.0 : -inst.epsilon;
                if (std::abs(w.entries[i][j] - expected) > 1e-12) {
                    std::ostringstream msg;
                    msg << "Bellman error matrix deviates from eps*(I-J) at (" << i << ", " << j
                        << "): " << w.entries[i][j];
                    throw StructuralError(msg.str());
                }
            }
        }
    }
    return w;
}

int matrix_rank(std::vector<std::vector<double>> m, double tolerance) {
    if (m.empty()) return 0;
    const std::size_t rows = m.size();
    const std::size_t cols = m[0].size();
    double max_entry = 0.0;
    for (const auto& row : m)
        for (const double x : row) max_entry = std::max(max_entry, std::abs(x));
    if (max_entry == 0.0) return 0;
    const double threshold = tolerance * max_entry;

    int rank = 0;
    std::size_t pivot_row = 0;
    for (std::size_t col = 0; col < cols && pivot_row < rows; ++col) {
        std::size_t best = pivot_row;
        for (std::size_t r = pivot_row + 1; r < rows; ++r)
            if (std::abs(m[r][col]) > std::abs(m[best][col])) best = r;
        if (std::abs(m[best][col]) <= threshold) continue;
        std::swap(m[pivot_row], m[best]);
        const double pivot = m[pivot_row][col];
        for (std::size_t r = pivot_row + 1; r < rows; ++r) {
            const double factor = m[r][col] / pivot;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < cols; ++c) m[r][c] -= factor * m[pivot_row][c];
        }
        ++pivot_row;
        ++rank;
    }
    return rank;
}

IndqGame IndqGame::with_targets(int n, std::vector<int> targets) {
    if (n < 1 || targets.empty()) throw ParameterError("need n >= 1 and at least one slot");
    for (const int t : targets)
        if (t < 0 || t >= n) throw ParameterError("target out of range");
    IndqGame game;
    game.num_values = n;
    game.num_slots = static_cast<int>(targets.size());
    game.targets = std::move(targets);
    return game;
}

IndqGame IndqGame::random(int n, int m, Rng& rng) {
    if (n < 1 || m < 1) throw ParameterError("need n >= 1 and m >= 1");
    std::vector<int> targets(m);
    for (int& t : targets) t = rng.uniform_int(n);
    return with_targets(n, std::move(targets));
}

IndqOutcome indq_play(const IndqGame& game, const IndqStrategy& strategy, long long budget) {
    if (budget < 0) throw ParameterError("budget must be >= 0");
    IndqOutcome outcome;
    for (long long round = 0; round < budget; ++round) {
        const auto [slot, guess] = strategy(round, outcome.log);
        if (slot < 0 || slot >= game.num_slots || guess < 0 || guess >= game.num_values)
            throw StrategyError("query out of range");
        const bool correct = (game.targets[slot] == guess);
        outcome.log.push_back({slot, guess, correct});
        ++outcome.queries_used;
        if (correct) {
            outcome.success = true;
            outcome.slot = slot;
            outcome.guess = guess;
            break;
        }
    }
    return outcome;
}

IndqStrategy scan_strategy(int n, int m) {
    return [n, m](long long round, const std::vector<IndqQuery>&) {
        const long long slot = round / n;
        return std::make_pair(static_cast<int>(std::min<long long>(slot, m - 1)),
                              static_cast<int>(round % n));
    };
}

IndqProbability indq_success_probability(int n, int m,
                                         std::span<const std::pair<int, int>> queries) {
    if (n < 1 || m < 1) throw ParameterError("need n >= 1 and m >= 1");
    std::vector<std::set<int>> distinct(m);
    for (const auto& [slot, guess] : queries) {
        if (slot < 0 || slot >= m || guess < 0 || guess >= n)
            throw StrategyError("query out of range");
        distinct[slot].insert(guess);
    }

    IndqProbability p;
    // n^m and the miss count fit 64 bits at desk scale; beyond that fall back
    // to a log-space float with the exact flag cleared.
    const double bits = m * std::log2(static_cast<double>(n));
    if (bits < 62.0) {
        unsigned long long miss = 1, total = 1;
        for (int j = 0; j < m; ++j) {
            miss *= static_cast<unsigned long long>(n - static_cast<int>(distinct[j].size()));
            total *= static_cast<unsigned long long>(n);
        }
        p.exact = true;
        p.numerator = total - miss;
        p.denominator = total;
        p.value = static_cast<double>(p.numerator) / static_cast<double>(p.denominator);
    } else {
        double log_miss = 0.0;
        bool some_zero = false;
        for (int j = 0; j < m; ++j) {
            const int left = n - static_cast<int>(distinct[j].size());
            if (left == 0) {
                some_zero = true;
                break;
            }
            log_miss += std::log(static_cast<double>(left) / n);
        }
        p.exact = false;
        p.value = some_zero ? 1.0 : -std::expm1(log_miss);
    }
    return p;
}

std::vector<ReductionEntry> rl_to_indq_reduction(const BlockInstance& inst,
                                                 std::span<const Trajectory> trace) {
    const int H = inst.mdp.horizon;
    const int T = inst.block_len;
    const int blocks = H / T;
    std::vector<ReductionEntry> log;
    log.reserve(trace.size() * blocks);

    for (std::size_t idx = 0; idx < trace.size(); ++idx) {
        const Trajectory& traj = trace[idx];
        if (static_cast<int>(traj.steps.size()) != H)
            throw InstanceIntegrityError("trajectory length does not match the horizon");
        for (int q = 0; q < blocks; ++q) {
            std::vector<ActionId> window(T);
            for (int t = 0; t < T; ++t) window[t] = traj.steps[q * T + t].action;
            ReductionEntry entry;
            entry.trajectory = static_cast<int>(idx);
            entry.block = q;
            entry.guess = block_bijection_inverse(window);
            entry.correct = (entry.guess == inst.target_indices[q]);
            entry.block_reward = traj.steps[(q + 1) * T - 1].reward;

            const double expected = entry.correct ? inst.epsilon : 0.0;
            if (entry.block_reward != expected) {
                std::ostringstream msg;
                msg << "trajectory " << idx << " block " << q
                    << ": reward " << entry.block_reward << " inconsistent with guess "
                    << (entry.correct ? "hit" : "miss");
                throw InstanceIntegrityError(msg.str());
            }
            log.push_back(entry);
        }
    }
    return log;
}

}  // namespace sparserl
