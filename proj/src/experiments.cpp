#include "sparserl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

namespace sparserl {

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Runs body(i) for i in [0, n); independent trials, stable row order.
template <typename F>
void run_trials(int n, int threads, F&& body) {
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> workers;
    const int count = std::min(threads, n);
    workers.reserve(count);
    for (int w = 0; w < count; ++w) {
        workers.push_back(std::async(std::launch::async, [&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        }));
    }
    for (auto& f : workers) f.get();
}

struct CheckList {
    std::ostringstream text;
    bool all_pass = true;

    void check(const std::string& name, bool ok, const std::string& detail) {
        text << name << ": " << detail << " ... " << (ok ? "PASS" : "FAIL") << "\n";
        all_pass &= ok;
    }
    void info(const std::string& line) { text << line << "\n"; }
};

bool is_violation(double value, double bound) {
    // NaN (failed trial) counts as a violation.
    return !(value <= bound);
}

}  // namespace

EliminationConfig ExperimentConfig::elimination() const {
    EliminationConfig e;
    e.epsilon = epsilon;
    e.eps_net = eps_net;
    e.eps_stat = eps_stat;
    e.delta = delta;
    e.m_override = m_override;
    return e;
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw ParameterError("need at least one trial");
    if (threads < 1) throw ParameterError("threads must be >= 1");
    if (command == "elimination") {
        elimination().validate();
        if (family == "random-sparse") {
            if (d < 1 || k < 1 || k > d) throw ParameterError("need 1 <= k <= d");
            if (horizon < 1) throw ParameterError("horizon must be >= 1");
            if (branching < 2) throw ParameterError("branching must be >= 2");
            if (epsilon < 0.0 || epsilon >= 1.0) throw ParameterError("need 0 <= eps < 1");
        } else if (family == "tree") {
            if (horizon * epsilon > 1.0 + 1e-12) throw ParameterError("need H * eps <= 1");
        } else if (family == "block") {
            if (block_len < 1 || horizon % block_len != 0)
                throw ParameterError("block length must divide the horizon");
            if ((horizon / block_len) * epsilon > 1.0 + 1e-12)
                throw ParameterError("need (H/T) * eps <= 1");
        } else if (family == "bandit") {
            if (n_arms < 1) throw ParameterError("need at least one arm");
            if (2.0 * epsilon > 1.0 + 1e-12) throw ParameterError("need 2 * eps <= 1");
        } else if (family == "rank") {
            if (d < 2 || (d & (d - 1)) != 0) throw ParameterError("d must be a power of two");
            if (!(epsilon > 0.0) || epsilon > max_rank_epsilon(d))
                throw ParameterError("eps too large for the rank instance");
        } else {
            throw ParameterError("unknown instance family: " + family);
        }
    } else if (command == "deviation") {
        elimination().validate();
    } else if (command == "lb-no-sample") {
        if (horizon < 1) throw ParameterError("horizon must be >= 1");
        if (epsilon < 0.0 || horizon * epsilon > 1.0 + 1e-12)
            throw ParameterError("need H * eps <= 1");
    } else if (command == "query-complexity") {
        if (block_len < 1 || block_len > 12) throw ParameterError("need 1 <= T <= 12 (desk scale)");
        if (horizon % block_len != 0) throw ParameterError("block length must divide the horizon");
        if (horizon > 20) throw ParameterError("horizon too large for desk scale");
        if (!(epsilon > 0.0) || (horizon / block_len) * epsilon > 1.0 + 1e-12)
            throw ParameterError("need 0 < eps and (H/T) * eps <= 1");
    } else if (command == "bellman-rank") {
        if (d < 2 || d > 64 || (d & (d - 1)) != 0)
            throw ParameterError("d must be a power of two in [2, 64]");
        if (!(epsilon > 0.0) || epsilon > max_rank_epsilon(d))
            throw ParameterError("eps too large for the rank instance");
    } else if (!command.empty() && command != "gen-instance") {
        throw ParameterError("unknown command: " + command);
    }
}

std::string ExperimentResult::rows_csv() const {
    std::ostringstream out;
    out << "trial,seed";
    for (const std::string& c : columns) out << ',' << c;
    out << "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << i << ',' << trial_seeds[i];
        for (const double v : rows[i]) out << ',' << fmt(v);
        out << "\n";
    }
    return out.str();
}

void ExperimentResult::write(const std::string& dir) const {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    std::ofstream rows_out(dir + "/rows.csv");
    rows_out << rows_csv();
    std::ofstream summary_out(dir + "/summary.txt");
    summary_out << summary;
    if (!wall_ms.empty()) {
        std::ofstream timing(dir + "/timing.csv");
        timing << "trial,wall_ms\n";
        for (std::size_t i = 0; i < wall_ms.size(); ++i)
            timing << i << ',' << fmt6(wall_ms[i]) << "\n";
    }
}

double suboptimality_bound(const ExperimentConfig& config, int H) {
    return (4.0 * config.eps_stat + 2.0 * config.eps_net + 2.0 * config.epsilon) * H;
}

std::uint64_t trial_seed(std::uint64_t master, int i) {
    return derive_seed(master, static_cast<std::uint64_t>(i));
}

double frequency_allowance(double p, int n) {
    return p + 3.0 * std::sqrt(p / static_cast<double>(n));
}

double tree_fixed_policy_suboptimality(double eps, const std::vector<ActionId>& a_star,
                                       const std::vector<ActionId>& policy_actions) {
    if (a_star.size() != policy_actions.size())
        throw ParameterError("action sequences must share a length");
    int mismatches = 0;
    for (std::size_t h = 0; h < a_star.size(); ++h)
        if (a_star[h] != policy_actions[h]) ++mismatches;
    return eps * mismatches;
}

StochasticTestInstance make_stochastic_test_instance() {
    StochasticTestInstance inst;
    TabularMdp& mdp = inst.mdp;
    mdp.horizon = 2;
    mdp.levels = {{0}, {1, 2}};
    mdp.action_names = {"a1", "a2"};
    mdp.initial_state = 0;
    mdp.transition.resize(3);
    mdp.transition[0] = {Transition::mixed({{1, 0.5}, {2, 0.5}}),
                         Transition::mixed({{1, 0.25}, {2, 0.75}})};
    mdp.reward.resize(3);
    mdp.reward[0] = {Reward::mixed({{0.0, 0.5}, {0.2, 0.5}}),
                     Reward::mixed({{0.1, 0.5}, {0.3, 0.5}})};
    mdp.reward[1] = {Reward::mixed({{0.0, 0.5}, {0.5, 0.5}}), Reward::fixed(0.2)};
    mdp.reward[2] = {Reward::mixed({{0.1, 0.75}, {0.5, 0.25}}), Reward::fixed(0.0)};
    mdp.finalize();

    inst.features.dim = 2;
    inst.features.phi.resize(3);
    inst.features.phi[0] = {{0.5, 0.1}, {0.4, 0.2}};
    inst.features.phi[1] = {{0.5, 0.0}, {0.3, 0.1}};
    inst.features.phi[2] = {{0.2, 0.3}, {0.1, 0.0}};
    inst.features.validate(mdp);

    inst.theta.resize(2);
    inst.theta[0] = SparseParam{{0}, {1.0}};
    inst.theta[1] = SparseParam{{0, 1}, {0.8, 0.6}};
    inst.rollin = rollin_policy(mdp, inst.features, inst.theta, mdp.horizon);
    return inst;
}

ExperimentResult cmd_elimination(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    config.command = "elimination";
    if (config.family == "bandit") config.horizon = 1;
    if (config.family == "rank")
        config.horizon = static_cast<int>(std::round(std::log2(config.d)));
    config.validate();

    const int N = config.trials;
    ExperimentResult result;
    result.columns = {"epsilon",      "gap",     "subopt",  "bound",     "violation",
                      "iterations",   "cap",     "realized_cap", "trajectories", "samples",
                      "ref_eliminated", "terminated", "failed", "m"};
    result.rows.assign(N, {});
    result.trial_seeds.assign(N, 0);
    result.wall_ms.assign(N, 0.0);

    const double nan = std::numeric_limits<double>::quiet_NaN();

    run_trials(N, config.threads, [&](int i) {
        const std::uint64_t seed = trial_seed(config.master_seed, i);
        result.trial_seeds[i] = seed;
        const double t0 = now_ms();

        std::vector<double> row(result.columns.size(), nan);
        row[0] = config.epsilon;
        try {
            Rng net_rng(derive_seed(seed, 0));
            Rng inst_rng(derive_seed(seed, 1));
            Rng run_rng(derive_seed(seed, 2));

            TabularMdp mdp;
            FeatureMap fm;
            std::vector<SparseParam> theta_star;
            std::vector<std::size_t> reference;
            ParamNet net;
            double gap = nan;

            if (config.family == "random-sparse") {
                net = build_net(config.d, config.k, config.eps_net, net_rng);
                RandomSparseInstance inst =
                    make_random_sparse_instance(config.d, config.k, config.horizon, config.epsilon,
                                                config.branching, inst_rng, &net);
                mdp = std::move(inst.mdp);
                fm = std::move(inst.features);
                theta_star = std::move(inst.theta_star);
                reference = std::move(inst.theta_star_candidates);
                gap = inst.realized_gap;
            } else {
                if (config.family == "tree") {
                    TreeInstance inst = make_tree_instance(config.horizon, config.epsilon, inst_rng);
                    mdp = std::move(inst.mdp);
                    fm = std::move(inst.features);
                    theta_star = std::move(inst.theta_star);
                } else if (config.family == "block") {
                    BlockInstance inst = make_block_instance(config.horizon, config.block_len,
                                                             config.epsilon, inst_rng);
                    mdp = std::move(inst.mdp);
                    fm = std::move(inst.features);
                    theta_star = std::move(inst.theta_star);
                } else if (config.family == "bandit") {
                    BanditInstance inst =
                        make_bandit_instance(config.n_arms, config.epsilon, inst_rng);
                    mdp = std::move(inst.mdp);
                    fm = std::move(inst.features);
                    theta_star = std::move(inst.theta_star);
                } else {  // rank
                    RankInstance inst = make_rank_instance(config.d, config.epsilon);
                    mdp = std::move(inst.mdp);
                    fm = std::move(inst.features);
                    theta_star = std::move(inst.theta_star);
                }
                net = build_net(fm.dim, static_cast<int>(theta_star[0].support.size()),
                                config.eps_net, net_rng);
                gap = assumption_gap(mdp, fm, theta_star);
                for (const SparseParam& t : theta_star)
                    reference.push_back(nearest_candidate(net, t));
            }

            const RunReport report =
                run_elimination(mdp, fm, net, config.elimination(), run_rng, &reference);

            const OptimalSolution sol = exact_optimal(mdp);
            const TabularPolicy out_policy =
                rollin_policy(mdp, fm, report.returned_params, mdp.horizon);
            const double subopt = sol.value() - exact_policy_value(mdp, out_policy);
            const double bound = suboptimality_bound(config, mdp.horizon);

            row[1] = gap;
            row[2] = subopt;
            row[3] = bound;
            row[4] = is_violation(subopt, bound) ? 1.0 : 0.0;
            row[5] = report.iterations;
            row[6] = static_cast<double>(report.cap);
            row[7] = static_cast<double>(report.realized_cap);
            row[8] = static_cast<double>(report.trajectories);
            row[9] = static_cast<double>(report.samples);
            row[10] = report.reference_ever_eliminated ? 1.0 : 0.0;
            row[11] = report.terminated ? 1.0 : 0.0;
            row[12] = 0.0;
            row[13] = static_cast<double>(report.m);
        } catch (const std::exception& e) {
            row[4] = 1.0;
            row[12] = 1.0;
        }
        result.rows[i] = std::move(row);
        result.wall_ms[i] = now_ms() - t0;
    });

    // Summary, derived from (config, rows) only.
    CheckList checks;
    checks.info("command: elimination");
    checks.info("family: " + config.family + "  d=" + std::to_string(config.d) +
                " k=" + std::to_string(config.k) + " H=" + std::to_string(config.horizon) +
                " eps=" + fmt6(config.epsilon) + " eps_net=" + fmt6(config.eps_net) +
                " eps_stat=" + fmt6(config.eps_stat) + " delta=" + fmt6(config.delta));
    checks.info("trials: " + std::to_string(N) +
                "  master_seed: " + std::to_string(config.master_seed));

    int violations = 0, retained_failures = 0, failed = 0, cap_breaches = 0,
        accounting_breaches = 0;
    double max_iterations = 0.0, total_samples = 0.0;
    for (const auto& row : result.rows) {
        if (row[4] == 1.0) ++violations;
        if (row[12] == 1.0) {
            ++failed;
            continue;
        }
        if (row[10] == 1.0) ++retained_failures;
        if (row[5] > row[6] || row[5] > row[7]) ++cap_breaches;
        max_iterations = std::max(max_iterations, row[5]);
        total_samples += row[9];
        const double expect_traj = row[5] * config.horizon * row[13];
        if (row[8] != expect_traj || row[9] != expect_traj * config.horizon)
            ++accounting_breaches;
    }
    const double allowance = frequency_allowance(config.delta, N);
    checks.check("suboptimality_bound",
                 violations <= allowance * N,
                 "violations " + std::to_string(violations) + "/" + std::to_string(N) +
                     " allowed " + fmt6(allowance * N));
    checks.check("iteration_cap", cap_breaches == 0 && failed == 0,
                 "breaches " + std::to_string(cap_breaches) + ", failed trials " +
                     std::to_string(failed));
    checks.check("reference_retention", retained_failures <= allowance * N,
                 "eliminations " + std::to_string(retained_failures) + "/" + std::to_string(N) +
                     " allowed " + fmt6(allowance * N));
    checks.check("sample_accounting", accounting_breaches == 0,
                 std::to_string(accounting_breaches) + " rows off");
    checks.info("max_iterations: " + fmt6(max_iterations));

    // Asymptotic sample-complexity expression of the elimination loop,
    // reported as a ratio only (its leading constant is unspecified).
    // Dimensions are the ones the family actually runs with.
    const bool scalar_family =
        config.family == "tree" || config.family == "block" || config.family == "bandit";
    const int eff_d = scalar_family ? 1 : config.d;
    const int eff_k = (scalar_family || config.family == "rank") ? 1 : config.k;
    const double asymptotic = eff_k * std::pow(eff_d, eff_k) *
                              std::pow(config.horizon, 3) *
                              std::log(eff_d * config.horizon /
                                       (config.eps_net * config.delta)) *
                              std::pow(config.eps_net, -eff_k) /
                              (config.eps_stat * config.eps_stat);
    if (N > failed && asymptotic > 0.0) {
        checks.info("asymptotic_sample_ratio: " +
                    fmt6(total_samples / (N - failed) / asymptotic) +
                    " (mean samples / asymptotic expression; informational)");
    }

    result.summary = checks.text.str();
    result.passed = checks.all_pass;
    result.write(config.output_dir);
    return result;
}

ExperimentResult cmd_deviation(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    config.command = "deviation";
    config.validate();

    const StochasticTestInstance inst = make_stochastic_test_instance();
    const int H = inst.mdp.horizon;
    const long long m = config.m_override
                            ? *config.m_override
                            : compute_m(config.elimination(), inst.features.dim,
                                        static_cast<int>(inst.theta[1].support.size()), H);
    const int N = config.trials;

    // Exact references.
    std::vector<double> exact_error(H);
    for (int h = 0; h < H; ++h)
        exact_error[h] = exact_avg_bellman_error(inst.mdp, inst.features, inst.theta, h, inst.rollin);
    const std::vector<double> occupancy = state_distribution(inst.mdp, inst.rollin, 1);
    double exact_value = 0.0;
    for (std::size_t i = 0; i < occupancy.size(); ++i)
        exact_value +=
            occupancy[i] * v_theta(inst.mdp, inst.features, inst.theta[1], inst.mdp.levels[1][i]);

    ExperimentResult result;
    result.columns = {"err0", "err1", "dev0", "dev1", "value_mean", "value_dev", "viol_error",
                      "viol_value"};
    result.rows.assign(N, {});
    result.trial_seeds.assign(N, 0);
    result.wall_ms.assign(N, 0.0);

    run_trials(N, config.threads, [&](int i) {
        const std::uint64_t seed = trial_seed(config.master_seed, i);
        result.trial_seeds[i] = seed;
        const double t0 = now_ms();

        const std::vector<Trajectory> dataset = sample_dataset(inst.mdp, inst.rollin, m, seed);
        std::vector<double> err(H), dev(H);
        for (int h = 0; h < H; ++h) {
            err[h] = empirical_bellman_error(inst.mdp, inst.features, dataset, inst.theta, h);
            dev[h] = std::abs(err[h] - exact_error[h]);
        }
        double value_mean = 0.0;
        for (const Trajectory& traj : dataset)
            value_mean += v_theta(inst.mdp, inst.features, inst.theta[1], traj.steps[1].state);
        value_mean /= static_cast<double>(m);
        const double value_dev = std::abs(value_mean - exact_value);

        const bool viol_error = std::max(dev[0], dev[1]) > config.eps_stat;
        const bool viol_value = value_dev > config.eps_stat;
        result.rows[i] = {err[0], err[1], dev[0], dev[1], value_mean, value_dev,
                          viol_error ? 1.0 : 0.0, viol_value ? 1.0 : 0.0};
        result.wall_ms[i] = now_ms() - t0;
    });

    // Invert the concentration bounds at this m: the Bellman-error estimate
    // deviates by at most 4 sqrt((ln 2 - ln d')/(2m)) with probability 1 - d',
    // the value estimate by sqrt((ln 2 - ln d')/(2m)).
    const double mf = static_cast<double>(m);
    const double delta_error = std::min(1.0, 2.0 * std::exp(-mf * config.eps_stat * config.eps_stat / 8.0));
    const double delta_value = std::min(1.0, 2.0 * std::exp(-2.0 * mf * config.eps_stat * config.eps_stat));

    int viol_error = 0, viol_value = 0;
    for (const auto& row : result.rows) {
        viol_error += row[6] == 1.0;
        viol_value += row[7] == 1.0;
    }

    CheckList checks;
    checks.info("command: deviation");
    checks.info("m: " + std::to_string(m) + "  trials: " + std::to_string(N) +
                "  eps_stat: " + fmt6(config.eps_stat) +
                "  master_seed: " + std::to_string(config.master_seed));
    checks.info("exact_error: " + fmt(exact_error[0]) + " " + fmt(exact_error[1]));
    checks.info("exact_value: " + fmt(exact_value));
    checks.check("bellman_error_deviation",
                 viol_error <= frequency_allowance(delta_error, N) * N,
                 std::to_string(viol_error) + "/" + std::to_string(N) + " above eps_stat, allowed " +
                     fmt6(frequency_allowance(delta_error, N) * N) + " (delta' " +
                     fmt6(delta_error) + ")");
    checks.check("value_deviation", viol_value <= frequency_allowance(delta_value, N) * N,
                 std::to_string(viol_value) + "/" + std::to_string(N) + " above eps_stat, allowed " +
                     fmt6(frequency_allowance(delta_value, N) * N) + " (delta' " +
                     fmt6(delta_value) + ")");

    result.summary = checks.text.str();
    result.passed = checks.all_pass;
    result.write(config.output_dir);
    return result;
}

ExperimentResult cmd_lower_bound_no_sample(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    config.command = "lb-no-sample";
    config.validate();

    const int H = config.horizon;
    const double eps = config.epsilon;
    const int N = config.trials;
    const std::vector<ActionId> fixed_policy(H, 0);

    ExperimentResult result;
    result.columns = {"subopt"};
    result.rows.assign(N, {});
    result.trial_seeds.assign(N, 0);

    for (int i = 0; i < N; ++i) {
        const std::uint64_t seed = trial_seed(config.master_seed, i);
        result.trial_seeds[i] = seed;
        Rng rng(seed);
        std::vector<ActionId> a_star(H);
        for (ActionId& a : a_star) a = rng.uniform_int(2);
        result.rows[i] = {tree_fixed_policy_suboptimality(eps, a_star, fixed_policy)};
    }

    double mean = 0.0;
    for (const auto& row : result.rows) mean += row[0];
    mean /= N;
    double var = 0.0;
    for (const auto& row : result.rows) var += (row[0] - mean) * (row[0] - mean);
    var /= (N - 1);

    const double expected_mean = H * eps / 2.0;
    const double expected_var = H * eps * eps / 4.0;
    const double mean_tol = 3.0 * (eps * std::sqrt(static_cast<double>(H)) / 2.0) / std::sqrt(N);
    const double chebyshev_cut = expected_mean - 5.0 * eps * std::sqrt(static_cast<double>(H));
    int below = 0;
    for (const auto& row : result.rows) below += row[0] < chebyshev_cut;

    CheckList checks;
    checks.info("command: lb-no-sample");
    checks.info("H: " + std::to_string(H) + "  eps: " + fmt6(eps) + "  trials: " +
                std::to_string(N) + "  master_seed: " + std::to_string(config.master_seed));
    checks.info("mean_subopt: " + fmt(mean) + "  expected " + fmt(expected_mean));
    checks.info("var_subopt: " + fmt(var) + "  expected " + fmt(expected_var));
    checks.check("mean_matches", std::abs(mean - expected_mean) <= mean_tol,
                 "|mean - H*eps/2| = " + fmt6(std::abs(mean - expected_mean)) + " tol " +
                     fmt6(mean_tol));
    checks.check("variance_matches", std::abs(var - expected_var) <= 0.1 * expected_var,
                 "|var - H*eps^2/4| = " + fmt6(std::abs(var - expected_var)) + " tol " +
                     fmt6(0.1 * expected_var));
    if (H >= 100) {
        const double allowed = frequency_allowance(0.01, N) * N;
        checks.check("chebyshev_quantile", below <= allowed,
                     std::to_string(below) + " draws under " + fmt6(chebyshev_cut) + ", allowed " +
                         fmt6(allowed));
    } else {
        checks.info("chebyshev_quantile: skipped (needs H >= 100); " + std::to_string(below) +
                    " draws under " + fmt6(chebyshev_cut));
    }

    result.summary = checks.text.str();
    result.passed = checks.all_pass;
    result.write(config.output_dir);
    return result;
}

ExperimentResult cmd_query_complexity(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    config.command = "query-complexity";
    config.validate();

    const int H = config.horizon;
    const int T = config.block_len;
    const int blocks = H / T;
    const int windows = 1 << T;
    const int N = config.trials;

    ExperimentResult result;
    result.columns = {"trajectories", "samples", "subopt", "floor", "sample_ratio"};
    result.rows.assign(N, {});
    result.trial_seeds.assign(N, 0);
    result.wall_ms.assign(N, 0.0);
    const double floor = 0.1 * T * windows;

    std::atomic<int> reduction_violations{0};
    std::atomic<int> unsolved{0};

    run_trials(N, config.threads, [&](int i) {
        const std::uint64_t seed = trial_seed(config.master_seed, i);
        result.trial_seeds[i] = seed;
        const double t0 = now_ms();
        Rng rng(seed);
        const BlockInstance inst = make_block_instance(H, T, config.epsilon, rng);

        // Brute-force search: per block, try action windows until the block
        // reward shows up. The feature map is constant per level, so nothing
        // smarter is information-theoretically available.
        std::vector<int> discovered(blocks, 0);
        std::vector<Trajectory> trace;
        long long trajectories = 0;
        for (int q = 0; q < blocks; ++q) {
            bool found = false;
            for (int w = 0; w < windows && !found; ++w) {
                std::vector<ActionId> per_level(H, 0);
                for (int b = 0; b < q; ++b) {
                    const std::vector<ActionId> win = block_bijection(discovered[b], T);
                    for (int t = 0; t < T; ++t) per_level[b * T + t] = win[t];
                }
                const std::vector<ActionId> win = block_bijection(w, T);
                for (int t = 0; t < T; ++t) per_level[q * T + t] = win[t];

                TabularPolicy policy;
                policy.action.assign(inst.mdp.num_states(), 0);
                for (int h = 0; h < H; ++h)
                    for (const StateId s : inst.mdp.levels[h]) policy.action[s] = per_level[h];

                Rng episode(derive_seed(seed, 1000 + trajectories));
                const Trajectory traj = sample_trajectory(inst.mdp, policy, episode);
                ++trajectories;
                trace.push_back(traj);
                if (traj.steps[(q + 1) * T - 1].reward == inst.epsilon) {
                    discovered[q] = w;
                    found = true;
                }
            }
            if (!found) ++unsolved;
        }

        try {
            rl_to_indq_reduction(inst, trace);
        } catch (const InstanceIntegrityError&) {
            ++reduction_violations;
        }

        TabularPolicy final_policy;
        final_policy.action.assign(inst.mdp.num_states(), 0);
        for (int q = 0; q < blocks; ++q) {
            const std::vector<ActionId> win = block_bijection(discovered[q], T);
            for (int t = 0; t < T; ++t)
                for (const StateId s : inst.mdp.levels[q * T + t]) final_policy.action[s] = win[t];
        }
        const OptimalSolution sol = exact_optimal(inst.mdp);
        const double subopt = sol.value() - exact_policy_value(inst.mdp, final_policy);
        const double samples = static_cast<double>(trajectories) * H;
        result.rows[i] = {static_cast<double>(trajectories), samples, subopt, floor,
                          samples / floor};
        result.wall_ms[i] = now_ms() - t0;
    });

    int solved_below_target = 0;
    double mean_samples = 0.0;
    for (const auto& row : result.rows) {
        if (row[2] < blocks * config.epsilon) ++solved_below_target;
        mean_samples += row[1];
    }
    mean_samples /= N;

    // Exact counting cross-check for the scan strategy on one block: any
    // fixed sequence of q < 0.9 * 2^T guesses fails with probability > 0.1.
    const int q_len = static_cast<int>(std::ceil(0.9 * windows)) - 1;
    std::vector<std::pair<int, int>> scan_queries;
    for (int q = 0; q < q_len; ++q) scan_queries.push_back({0, q});
    const IndqProbability scan_p = indq_success_probability(windows, 1, scan_queries);

    CheckList checks;
    checks.info("command: query-complexity");
    checks.info("H: " + std::to_string(H) + "  T: " + std::to_string(T) + "  eps: " +
                fmt6(config.epsilon) + "  trials: " + std::to_string(N) + "  master_seed: " +
                std::to_string(config.master_seed));
    checks.info("mean_samples: " + fmt6(mean_samples) + "  floor 0.1*T*2^T: " + fmt6(floor));
    checks.check("all_trials_reach_target_suboptimality", solved_below_target == N && unsolved == 0,
                 std::to_string(solved_below_target) + "/" + std::to_string(N));
    checks.check("reduction_consistency", reduction_violations == 0,
                 std::to_string(reduction_violations) + " violations");
    checks.check("scan_below_0.9n_fails_often",
                 scan_p.exact && scan_p.value < 0.9,
                 "success probability " + fmt(scan_p.value) + " for " + std::to_string(q_len) +
                     " of " + std::to_string(windows) + " guesses");

    result.summary = checks.text.str();
    result.passed = checks.all_pass;
    result.write(config.output_dir);
    return result;
}

ExperimentResult cmd_bellman_rank(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    config.command = "bellman-rank";
    config.validate();

    const RankInstance inst = make_rank_instance(config.d, config.epsilon);
    const int H = inst.horizon();
    const BellmanErrorMatrix w = bellman_error_matrix(inst, H - 1);

    ExperimentResult result;
    result.columns = {"row", "col", "entry", "expected"};
    double max_pattern_dev = 0.0;
    for (int i = 0; i < config.d; ++i) {
        for (int j = 0; j < config.d; ++j) {
            const double expected = (i == j) ? 0.0 : -config.epsilon;
            max_pattern_dev = std::max(max_pattern_dev, std::abs(w.entries[i][j] - expected));
            result.rows.push_back({static_cast<double>(i), static_cast<double>(j),
                                   w.entries[i][j], expected});
            result.trial_seeds.push_back(0);
        }
    }

    const int rank = matrix_rank(w.entries, 1e-9);

    CheckList checks;
    checks.info("command: bellman-rank");
    checks.info("d: " + std::to_string(config.d) + "  eps: " + fmt6(config.epsilon));
    checks.check("pattern_eps_I_minus_J", max_pattern_dev <= 1e-12,
                 "max deviation " + fmt(max_pattern_dev));
    checks.check("rank_equals_d", rank == config.d,
                 "rank " + std::to_string(rank) + " of " + std::to_string(config.d));
    for (int h = 0; h + 1 < H; ++h) {
        const BellmanErrorMatrix other = bellman_error_matrix(inst, h);
        checks.info("rank_level_" + std::to_string(h) + ": " +
                    std::to_string(matrix_rank(other.entries, 1e-9)) + " (reported only)");
    }

    result.summary = checks.text.str();
    result.passed = checks.all_pass;
    result.write(config.output_dir);
    return result;
}

}  // namespace sparserl
