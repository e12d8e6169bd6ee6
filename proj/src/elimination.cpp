#include "sparserl/elimination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace sparserl {

void EliminationConfig::validate() const {
    if (epsilon < 0.0) throw ParameterError("epsilon must be >= 0");
    if (!(eps_net > 0.0) || eps_net > 2.0) throw ParameterError("need 0 < eps_net <= 2");
    if (!(eps_stat > 0.0)) throw ParameterError("eps_stat must be > 0");
    if (!(delta > 0.0) || delta >= 1.0) throw ParameterError("need 0 < delta < 1");
    if (m_override && *m_override < 1) throw ParameterError("m override must be >= 1");
}

long long compute_m(const EliminationConfig& config, int d, int k, int H) {
    config.validate();
    const double raw = (16.0 * k * std::log((1.0 + 4.0 / config.eps_net) * d) +
                        16.0 * std::log(H / config.delta)) /
                       (config.eps_stat * config.eps_stat);
    return static_cast<long long>(std::ceil(raw));
}

long long iteration_cap(int d, int k, int H, double eps_net) {
    if (!(eps_net > 0.0)) throw ParameterError("eps_net must be > 0");
    double binom = 1.0;
    for (int i = 0; i < k; ++i)
        binom = binom * static_cast<double>(d - i) / static_cast<double>(i + 1);
    const double cap = std::ceil(std::pow(1.0 + 4.0 / eps_net, k)) * binom * H;
    if (!(cap < 9e18)) throw ParameterError("iteration cap overflows at these parameters");
    return static_cast<long long>(cap);
}

std::size_t select_level_param(const ParamNet& net, const std::vector<std::size_t>& active,
                               const TabularMdp& mdp, const FeatureMap& fm,
                               std::span<const StateId> states, int level) {
    if (active.empty())
        throw EliminationExhausted(level, "candidate set at level " + std::to_string(level) +
                                              " ran empty");
    std::size_t best = active.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (const std::size_t idx : active) {
        const SparseParam theta = net.candidate(idx);
        double score = 0.0;
        for (const StateId s : states) score += v_theta(mdp, fm, theta, s);
        if (score > best_score) {
            best_score = score;
            best = idx;
        }
    }
    return best;
}

TabularPolicy rollin_policy(const TabularMdp& mdp, const FeatureMap& fm,
                            std::span<const SparseParam> prefix, int upto_level) {
    TabularPolicy policy;
    policy.action.assign(mdp.num_states(), 0);
    for (int h = 0; h < std::min<int>(upto_level, mdp.horizon); ++h) {
        for (const StateId s : mdp.levels[h])
            policy.action[s] = greedy_action(mdp, fm, prefix[h], s);
    }
    return policy;
}

double empirical_bellman_error(const TabularMdp& mdp, const FeatureMap& fm,
                               std::span<const Trajectory> dataset,
                               std::span<const SparseParam> theta, int h) {
    if (dataset.empty()) throw ParameterError("empty dataset");
    const int H = mdp.horizon;
    if (h < 0 || h >= H) throw ParameterError("level out of range");
    double sum = 0.0;
    for (const Trajectory& traj : dataset) {
        const Step& step = traj.steps[h];
        double term = inner_value(fm, theta[h], step.state, step.action) - step.reward;
        if (h + 1 < H) term -= v_theta(mdp, fm, theta[h + 1], traj.steps[h + 1].state);
        sum += term;
    }
    return sum / static_cast<double>(dataset.size());
}

RunReport run_elimination(const TabularMdp& mdp, const FeatureMap& fm, const ParamNet& net,
                          const EliminationConfig& config, Rng& rng,
                          const std::vector<std::size_t>* reference) {
    config.validate();
    fm.validate(mdp);
    if (fm.dim != net.dim) throw ParameterError("feature map and net dimensions differ");
    const int H = mdp.horizon;
    if (reference && static_cast<int>(reference->size()) != H)
        throw ParameterError("reference needs one candidate id per level");

    const long long m =
        config.m_override ? *config.m_override : compute_m(config, net.dim, net.sparsity, H);
    const long long cap = iteration_cap(net.dim, net.sparsity, H, config.eps_net);

    RunReport report;
    report.m = m;
    report.cap = cap;
    report.realized_cap = static_cast<long long>(net.size()) * H;

    std::vector<std::vector<std::size_t>> active(H);
    for (int h = 0; h < H; ++h) {
        active[h].resize(net.size());
        for (std::size_t i = 0; i < net.size(); ++i) active[h][i] = i;
    }

    const double mid_threshold = 2.0 * config.epsilon + 2.0 * config.eps_net + 3.0 * config.eps_stat;
    const double last_threshold = config.epsilon + config.eps_net + config.eps_stat;

    for (long long t = 0;; ++t) {
        if (t >= cap) {
            std::ostringstream msg;
            msg << "elimination did not terminate within the iteration cap (" << cap
                << "); the instance likely violates the approximation assumption";
            throw IterationCapExceeded(cap, msg.str());
        }

        IterationRecord rec;
        rec.iteration = static_cast<int>(t);
        rec.selected.resize(H);
        rec.mean_value.assign(H, 0.0);

        std::vector<SparseParam> params(H);

        // Level 0 uses the deterministic initial state directly; no roll-in
        // dataset exists for it.
        const StateId s0[1] = {mdp.initial_state};
        rec.selected[0] = select_level_param(net, active[0], mdp, fm, s0, 0);
        params[0] = net.candidate(rec.selected[0]);
        rec.mean_value[0] = v_theta(mdp, fm, params[0], mdp.initial_state);

        for (int h = 1; h < H; ++h) {
            const TabularPolicy rollin = rollin_policy(mdp, fm, params, h);
            const std::vector<Trajectory> dataset = sample_dataset(mdp, rollin, m, rng.next_u64());
            std::vector<StateId> states;
            states.reserve(dataset.size());
            for (const Trajectory& traj : dataset) states.push_back(traj.steps[h].state);
            rec.selected[h] = select_level_param(net, active[h], mdp, fm, states, h);
            params[h] = net.candidate(rec.selected[h]);
            double mean = 0.0;
            for (const StateId s : states) mean += v_theta(mdp, fm, params[h], s);
            rec.mean_value[h] = mean / static_cast<double>(states.size());
        }

        const TabularPolicy policy = rollin_policy(mdp, fm, params, H);
        const std::vector<Trajectory> eval = sample_dataset(mdp, policy, m, rng.next_u64());

        rec.bellman_error.resize(H);
        for (int h = 0; h < H; ++h)
            rec.bellman_error[h] = empirical_bellman_error(mdp, fm, eval, params, h);

        bool all_pass = true;
        for (int h = 0; h < H; ++h) {
            const double threshold = (h == H - 1) ? last_threshold : mid_threshold;
            if (rec.bellman_error[h] > threshold) all_pass = false;
        }
        rec.accepted = all_pass;

        report.trajectories += static_cast<long long>(H) * m;
        report.iterations = static_cast<int>(t) + 1;

        if (all_pass) {
            report.records.push_back(std::move(rec));
            report.terminated = true;
            report.returned = report.records.back().selected;
            report.returned_params = std::move(params);
            break;
        }

        // Eliminate exactly at the levels whose threshold failed.
        for (int h = 0; h < H; ++h) {
            const double threshold = (h == H - 1) ? last_threshold : mid_threshold;
            if (rec.bellman_error[h] <= threshold) continue;
            rec.eliminated_levels.push_back(h);
            auto& set = active[h];
            set.erase(std::remove(set.begin(), set.end(), rec.selected[h]), set.end());
            if (reference && (*reference)[h] == rec.selected[h]) {
                rec.reference_eliminated = true;
                report.reference_ever_eliminated = true;
            }
        }
        report.records.push_back(std::move(rec));
    }

    report.samples = report.trajectories * H;
    return report;
}

using nlohmann::json;

void RunReport::write_json(std::ostream& out) const {
    json doc;
    doc["terminated"] = terminated;
    doc["iterations"] = iterations;
    doc["m"] = m;
    doc["trajectories"] = trajectories;
    doc["samples"] = samples;
    doc["iteration_cap"] = cap;
    doc["realized_cap"] = realized_cap;
    doc["returned"] = returned;
    doc["reference_ever_eliminated"] = reference_ever_eliminated;
    json recs = json::array();
    for (const IterationRecord& rec : records) {
        json r;
        r["iteration"] = rec.iteration;
        r["selected"] = rec.selected;
        r["mean_value"] = rec.mean_value;
        r["bellman_error"] = rec.bellman_error;
        r["eliminated_levels"] = rec.eliminated_levels;
        r["accepted"] = rec.accepted;
        r["reference_eliminated"] = rec.reference_eliminated;
        recs.push_back(std::move(r));
    }
    doc["records"] = recs;
    out << doc.dump(2) << "\n";
}

void RunReport::write_csv(std::ostream& out) const {
    out << "iteration,level,candidate,bellman_error,eliminated\n";
    char buf[64];
    for (const IterationRecord& rec : records) {
        for (std::size_t h = 0; h < rec.selected.size(); ++h) {
            const bool eliminated =
                std::find(rec.eliminated_levels.begin(), rec.eliminated_levels.end(),
                          static_cast<int>(h)) != rec.eliminated_levels.end();
            std::snprintf(buf, sizeof buf, "%.17g", rec.bellman_error[h]);
            out << rec.iteration << ',' << h << ',' << rec.selected[h] << ',' << buf << ','
                << (eliminated ? 1 : 0) << "\n";
        }
    }
}

}  // namespace sparserl
