#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sparserl/experiments.hpp"

using namespace sparserl;

namespace {

ExperimentConfig elimination_config() {
    ExperimentConfig cfg;
    cfg.command = "elimination";
    cfg.family = "random-sparse";
    cfg.d = 4;
    cfg.k = 1;
    cfg.horizon = 2;
    cfg.epsilon = 0.02;
    cfg.trials = 8;
    cfg.master_seed = 42;
    return cfg;
}

std::vector<std::vector<double>> parse_rows(const std::string& csv) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) row.push_back(std::strtod(field.c_str(), nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TEST_CASE("reruns with the same master seed emit byte-identical rows") {
    const ExperimentConfig cfg = elimination_config();
    const ExperimentResult a = cmd_elimination(cfg);
    const ExperimentResult b = cmd_elimination(cfg);
    CHECK(a.rows_csv() == b.rows_csv());
    CHECK(a.summary == b.summary);
    CHECK(a.passed);

    // Thread count must not change the emitted rows.
    ExperimentConfig threaded = cfg;
    threaded.threads = 3;
    const ExperimentResult c = cmd_elimination(threaded);
    CHECK(c.rows_csv() == a.rows_csv());

    ExperimentConfig lb;
    lb.command = "lb-no-sample";
    lb.horizon = 50;
    lb.epsilon = 0.01;
    lb.trials = 500;
    lb.master_seed = 9;
    CHECK(cmd_lower_bound_no_sample(lb).rows_csv() == cmd_lower_bound_no_sample(lb).rows_csv());
}

TEST_CASE("per-trial seeds are pure functions of (master seed, index)") {
    CHECK(trial_seed(42, 0) == trial_seed(42, 0));
    CHECK(trial_seed(42, 0) != trial_seed(42, 1));
    CHECK(trial_seed(42, 1) != trial_seed(43, 1));
}

TEST_CASE("config validation rejects precondition violations before computing") {
    ExperimentConfig cfg;
    cfg.command = "elimination";

    SUBCASE("tree with H * eps > 1") {
        cfg.family = "tree";
        cfg.horizon = 12;
        cfg.epsilon = 0.1;
        CHECK_THROWS_AS(cfg.validate(), ParameterError);
    }
    SUBCASE("block with T not dividing H") {
        cfg.family = "block";
        cfg.horizon = 5;
        cfg.block_len = 2;
        cfg.epsilon = 0.1;
        CHECK_THROWS_AS(cfg.validate(), ParameterError);
    }
    SUBCASE("rank with oversized eps") {
        cfg.family = "rank";
        cfg.d = 16;
        cfg.epsilon = 0.5;
        CHECK_THROWS_AS(cfg.validate(), ParameterError);
    }
    SUBCASE("bandit with 2 eps > 1") {
        cfg.family = "bandit";
        cfg.epsilon = 0.6;
        CHECK_THROWS_AS(cfg.validate(), ParameterError);
    }
    SUBCASE("bad statistical parameters") {
        cfg.delta = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ParameterError);
    }
    SUBCASE("unknown family") {
        cfg.family = "mystery";
        CHECK_THROWS_AS(cfg.validate(), ParameterError);
    }
    SUBCASE("query-complexity desk-scale guard") {
        cfg.command = "query-complexity";
        cfg.block_len = 13;
        cfg.horizon = 13;
        cfg.epsilon = 0.01;
        CHECK_THROWS_AS(cfg.validate(), ParameterError);
    }
}

TEST_CASE("summary statistics are recomputable from the emitted rows") {
    ExperimentConfig cfg = elimination_config();
    cfg.trials = 6;
    const ExperimentResult result = cmd_elimination(cfg);
    const auto rows = parse_rows(result.rows_csv());
    REQUIRE(rows.size() == 6);

    // Columns: trial, seed, then the named payload. violation is payload
    // index 4, iterations 5, ref_eliminated 10 (offset by 2 in the CSV).
    int violations = 0, retained = 0;
    double max_iterations = 0.0;
    for (const auto& row : rows) {
        violations += row[2 + 4] == 1.0;
        retained += row[2 + 10] == 1.0;
        max_iterations = std::max(max_iterations, row[2 + 5]);
    }
    std::ostringstream expect_viol;
    expect_viol << "violations " << violations << "/6";
    CHECK(result.summary.find(expect_viol.str()) != std::string::npos);
    std::ostringstream expect_iter;
    expect_iter << "max_iterations: " << max_iterations;
    CHECK(result.summary.find("max_iterations: ") != std::string::npos);
    std::ostringstream expect_ret;
    expect_ret << "eliminations " << retained << "/6";
    CHECK(result.summary.find(expect_ret.str()) != std::string::npos);
}

TEST_CASE("output files land in the requested directory") {
    const std::string dir = std::filesystem::temp_directory_path() / "sparserl_test_out";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg = elimination_config();
    cfg.trials = 3;
    cfg.output_dir = dir;
    const ExperimentResult result = cmd_elimination(cfg);

    std::ifstream rows(dir + "/rows.csv");
    REQUIRE(rows.good());
    std::stringstream buf;
    buf << rows.rdbuf();
    CHECK(buf.str() == result.rows_csv());

    std::ifstream summary(dir + "/summary.txt");
    REQUIRE(summary.good());
    std::stringstream sbuf;
    sbuf << summary.rdbuf();
    CHECK(sbuf.str() == result.summary);

    CHECK(std::filesystem::exists(dir + "/timing.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("deviation command accepts the concentration-derived violation rates") {
    ExperimentConfig cfg;
    cfg.command = "deviation";
    cfg.trials = 60;
    cfg.m_override = 2000;
    cfg.master_seed = 5;
    const ExperimentResult result = cmd_deviation(cfg);
    CHECK(result.passed);
    CHECK(result.rows.size() == 60);
    // Doubling m shrinks the concentration bound by exactly sqrt(2).
    const double bound_m = 4.0 * std::sqrt((std::log(2.0) - std::log(0.01)) / (2.0 * 2000));
    const double bound_2m = 4.0 * std::sqrt((std::log(2.0) - std::log(0.01)) / (2.0 * 4000));
    CHECK(bound_m == doctest::Approx(std::sqrt(2.0) * bound_2m).epsilon(1e-12));
}

TEST_CASE("bandit elimination command reports the corollary bound per row") {
    ExperimentConfig cfg;
    cfg.command = "elimination";
    cfg.family = "bandit";
    cfg.n_arms = 20;
    cfg.epsilon = 0.1;
    cfg.trials = 10;
    cfg.master_seed = 31;
    const ExperimentResult result = cmd_elimination(cfg);
    CHECK(result.passed);
    const auto rows = parse_rows(result.rows_csv());
    for (const auto& row : rows) {
        CHECK(row[2 + 3] == 2 * 0.1 + 2 * 0.5 + 4 * 0.2);  // bound column at H = 1
        CHECK(row[2 + 2] <= row[2 + 3]);                   // gap within bound
    }
}

TEST_CASE("rank command asserts the pattern and rank") {
    ExperimentConfig cfg;
    cfg.command = "bellman-rank";
    cfg.d = 8;
    cfg.epsilon = 1.0 / 64.0;
    const ExperimentResult result = cmd_bellman_rank(cfg);
    CHECK(result.passed);
    CHECK(result.rows.size() == 64);
    CHECK(result.summary.find("rank 8 of 8") != std::string::npos);
}

TEST_CASE("query-complexity command solves every trial via the reduction") {
    ExperimentConfig cfg;
    cfg.command = "query-complexity";
    cfg.horizon = 8;
    cfg.block_len = 4;
    cfg.epsilon = 0.1;
    cfg.trials = 10;
    cfg.master_seed = 77;
    const ExperimentResult result = cmd_query_complexity(cfg);
    CHECK(result.passed);
    const auto rows = parse_rows(result.rows_csv());
    for (const auto& row : rows) {
        CHECK(row[2 + 2] == 0.0);                       // subopt of the found policy
        CHECK(row[2 + 0] <= 2.0 * 16);                  // trajectories within 2 * 2^T
    }
}
