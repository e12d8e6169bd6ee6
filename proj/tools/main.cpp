// Command-line driver: wires the instance generators, the elimination
// algorithm, and the exact oracles into reproducible batch experiments with
// CSV output. Exit code 0 iff every internal assertion passed.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparserl/experiments.hpp"

namespace {

using sparserl::ExperimentConfig;

void add_common_options(CLI::App* sub, ExperimentConfig& cfg, std::string& config_file) {
    sub->add_option("--config", config_file, "JSON file with the same keys as the flags");
    sub->add_option("--family", cfg.family, "instance family");
    sub->add_option("-d,--dim", cfg.d, "feature dimension");
    sub->add_option("-k,--sparsity", cfg.k, "parameter sparsity");
    sub->add_option("-H,--horizon", cfg.horizon, "planning horizon");
    sub->add_option("-T,--block-len", cfg.block_len, "block length");
    sub->add_option("--arms", cfg.n_arms, "bandit arm count");
    sub->add_option("--branching", cfg.branching, "actions per state (random-sparse)");
    sub->add_option("--eps", cfg.epsilon, "misspecification level");
    sub->add_option("--eps-net", cfg.eps_net, "net separation");
    sub->add_option("--eps-stat", cfg.eps_stat, "statistical error");
    sub->add_option("--delta", cfg.delta, "failure rate");
    sub->add_option("-m,--m-override", cfg.m_override, "override the per-dataset sample size");
    sub->add_option("-N,--trials", cfg.trials, "number of seeded trials");
    sub->add_option("--seed", cfg.master_seed, "master seed");
    sub->add_option("-o,--out", cfg.output_dir, "output directory for rows.csv / summary.txt");
    sub->add_option("--threads", cfg.threads, "worker threads for independent trials");
}

void apply_config_file(const CLI::App* sub, ExperimentConfig& cfg, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw sparserl::ParameterError("cannot open config file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);

    const auto unset = [&](const std::string& flag) { return sub->count(flag) == 0; };
    if (doc.contains("family") && unset("--family")) cfg.family = doc["family"];
    if (doc.contains("dim") && unset("--dim")) cfg.d = doc["dim"];
    if (doc.contains("sparsity") && unset("--sparsity")) cfg.k = doc["sparsity"];
    if (doc.contains("horizon") && unset("--horizon")) cfg.horizon = doc["horizon"];
    if (doc.contains("block_len") && unset("--block-len")) cfg.block_len = doc["block_len"];
    if (doc.contains("arms") && unset("--arms")) cfg.n_arms = doc["arms"];
    if (doc.contains("branching") && unset("--branching")) cfg.branching = doc["branching"];
    if (doc.contains("eps") && unset("--eps")) cfg.epsilon = doc["eps"];
    if (doc.contains("eps_net") && unset("--eps-net")) cfg.eps_net = doc["eps_net"];
    if (doc.contains("eps_stat") && unset("--eps-stat")) cfg.eps_stat = doc["eps_stat"];
    if (doc.contains("delta") && unset("--delta")) cfg.delta = doc["delta"];
    if (doc.contains("m_override") && unset("--m-override"))
        cfg.m_override = doc["m_override"].get<long long>();
    if (doc.contains("trials") && unset("--trials")) cfg.trials = doc["trials"];
    if (doc.contains("seed") && unset("--seed")) cfg.master_seed = doc["seed"];
    if (doc.contains("out") && unset("--out")) cfg.output_dir = doc["out"];
    if (doc.contains("threads") && unset("--threads")) cfg.threads = doc["threads"];
}

int finish(const sparserl::ExperimentResult& result) {
    std::cout << result.summary;
    return result.passed ? 0 : 1;
}

int run_gen_instance(ExperimentConfig& cfg) {
    if (cfg.output_dir.empty()) throw sparserl::ParameterError("gen-instance needs --out");
    std::filesystem::create_directories(cfg.output_dir);
    sparserl::Rng rng(cfg.master_seed);

    sparserl::TabularMdp mdp;
    sparserl::FeatureMap fm;
    if (cfg.family == "tree") {
        auto inst = sparserl::make_tree_instance(cfg.horizon, cfg.epsilon, rng);
        mdp = std::move(inst.mdp);
        fm = std::move(inst.features);
    } else if (cfg.family == "block") {
        auto inst = sparserl::make_block_instance(cfg.horizon, cfg.block_len, cfg.epsilon, rng);
        mdp = std::move(inst.mdp);
        fm = std::move(inst.features);
    } else if (cfg.family == "bandit") {
        auto inst = sparserl::make_bandit_instance(cfg.n_arms, cfg.epsilon, rng);
        mdp = std::move(inst.mdp);
        fm = std::move(inst.features);
    } else if (cfg.family == "rank") {
        auto inst = sparserl::make_rank_instance(cfg.d, cfg.epsilon);
        mdp = std::move(inst.mdp);
        fm = std::move(inst.features);
    } else if (cfg.family == "random-sparse") {
        sparserl::Rng net_rng(sparserl::derive_seed(cfg.master_seed, 0));
        const sparserl::ParamNet net =
            sparserl::build_net(cfg.d, cfg.k, cfg.eps_net, net_rng);
        auto inst = sparserl::make_random_sparse_instance(cfg.d, cfg.k, cfg.horizon, cfg.epsilon,
                                                          cfg.branching, rng, &net);
        mdp = std::move(inst.mdp);
        fm = std::move(inst.features);
        std::ofstream net_out(cfg.output_dir + "/net.txt");
        sparserl::write_net(net, net_out);
    } else {
        throw sparserl::ParameterError("unknown instance family: " + cfg.family);
    }

    std::ofstream(cfg.output_dir + "/mdp.json") << sparserl::mdp_to_json(mdp);
    std::ofstream(cfg.output_dir + "/features.json") << sparserl::features_to_json(fm);
    std::cout << "wrote " << cfg.output_dir << "/mdp.json and features.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-linear RL elimination experiments"};
    app.require_subcommand(1);

    struct SubState {
        ExperimentConfig cfg;
        std::string config_file;
        CLI::App* sub = nullptr;
    };
    std::vector<std::pair<std::string, SubState>> subs;
    for (const std::string name :
         {"elimination", "deviation", "lb-no-sample", "query-complexity", "bellman-rank",
          "gen-instance"}) {
        subs.emplace_back(name, SubState{});
    }
    for (auto& [name, state] : subs) {
        state.sub = app.add_subcommand(name);
        state.cfg.command = name;
        add_common_options(state.sub, state.cfg, state.config_file);
    }

    // Defaults that differ per subcommand.
    for (auto& [name, state] : subs) {
        if (name == "lb-no-sample") {
            state.cfg.horizon = 100;
            state.cfg.epsilon = 0.005;
            state.cfg.trials = 10000;
        } else if (name == "query-complexity") {
            state.cfg.horizon = 8;
            state.cfg.block_len = 4;
            state.cfg.epsilon = 0.1;
            state.cfg.trials = 20;
        } else if (name == "bellman-rank") {
            state.cfg.d = 8;
            state.cfg.epsilon = 1.0 / 64.0;
        } else if (name == "deviation") {
            state.cfg.trials = 500;
        }
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& [name, state] : subs) {
            if (!state.sub->parsed()) continue;
            apply_config_file(state.sub, state.cfg, state.config_file);
            if (name == "elimination") return finish(sparserl::cmd_elimination(state.cfg));
            if (name == "deviation") return finish(sparserl::cmd_deviation(state.cfg));
            if (name == "lb-no-sample")
                return finish(sparserl::cmd_lower_bound_no_sample(state.cfg));
            if (name == "query-complexity")
                return finish(sparserl::cmd_query_complexity(state.cfg));
            if (name == "bellman-rank") return finish(sparserl::cmd_bellman_rank(state.cfg));
            if (name == "gen-instance") return run_gen_instance(state.cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
