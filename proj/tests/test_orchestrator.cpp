// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kdnas/orchestrator.hpp"
#include "kdnas/report.hpp"
#include "kdnas/rng.hpp"

using namespace kdnas;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "kdnas_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig tabular_config() {
    RunConfig cfg;
    cfg.run_seed = 7;
    cfg.generations = 5;
    cfg.batch_size = 6;
    cfg.space = space::SearchSpaceDef::default_space();
    cfg.reward.mode = cost::RewardMode::latency;
    cfg.reward.target = 7.001;
    cfg.controller.hidden_width = 16;
    cfg.controller.batch_size = cfg.batch_size;
    TabularEnvSpec env;
    env.teacher_seed = 3;
    env.noise_sigma = 0.01;
    cfg.env = env;
    return cfg;
}

RunConfig micro_config() {
    RunConfig cfg;
    cfg.run_seed = 11;
    cfg.generations = 2;
    cfg.batch_size = 3;
    cfg.space = space::SearchSpaceDef::default_space();
    cfg.reward.mode = cost::RewardMode::latency;
    cfg.reward.target = 7.001;
    cfg.controller.hidden_width = 16;
    MicroEnvSpec env;
    env.task.dataset = evaluator::DatasetKind::gaussian;
    env.task.classes = 2;
    env.task.input_width = 8;
    env.task.train_size = 160;
    env.task.epochs = 2;
    env.task.data_seed = 5;
    env.kd.objective = evaluator::KdObjective::soft_logit;
    env.kd.teacher.members = {evaluator::TeacherMemberSpec{3, {24, 24}, 10, 0.05}};
    cfg.env = env;
    cfg.latency.input_width = 8;
    return cfg;
}

}  // namespace

TEST_CASE("run config JSON round-trips") {
    const auto cfg = micro_config();
    const auto text = run_config_to_json(cfg);
    const auto back = run_config_from_json(text);
    CHECK(run_config_to_json(back) == text);
    CHECK(back.space.identity() == cfg.space.identity());
    CHECK(objective_tag(back) == "kd");
}

TEST_CASE("run config parsing rejects malformed input") {
    CHECK_THROWS_AS(run_config_from_json("not json at all"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"schema_version": 42})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"reward": {"mode": "energy"}})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"environment": {"kind": "quantum"}})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"generations": 0})"), ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(R"({"environment": {"kind": "micro_kd", "kd": {"temperature": 0}}})"),
        evaluator::NonPositiveTemperature);
}

TEST_CASE("minimal run: one generation, batch of four") {
    auto cfg = tabular_config();
    cfg.generations = 1;
    cfg.batch_size = 4;
    const auto dir = temp_dir("minimal");
    const auto out = orchestrator::run_search(cfg, dir.string());
    CHECK(out.generations_completed == 1);

    const auto st = store::TrajectoryStore::load(out.trajectory_path);
    REQUIRE(st.records.size() == 4);
    for (const auto& rec : st.records) {
        CHECK(rec.generation == 0);
        CHECK(rec.objective == "kd");
        CHECK(rec.teacher == "T_A");
        CHECK(rec.onehot.popcount() == 35);
        CHECK(rec.eval_seed == candidate_seed(cfg.run_seed, 0, rec.candidate_index));
    }
    // Header first, then exactly 4 lines.
    std::istringstream lines(read_file(out.trajectory_path));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 5);
}

TEST_CASE("replay determinism: identical configs produce byte-identical stores") {
    const auto cfg = tabular_config();
    const auto dir_a = temp_dir("replay_a");
    const auto dir_b = temp_dir("replay_b");
    const auto a = orchestrator::run_search(cfg, dir_a.string());
    const auto b = orchestrator::run_search(cfg, dir_b.string());
    CHECK(read_file(a.trajectory_path) == read_file(b.trajectory_path));
    CHECK(read_file(a.metrics_path) == read_file(b.metrics_path));
}

TEST_CASE("worker count does not change results") {
    const auto cfg = tabular_config();
    const auto dir_a = temp_dir("workers_1");
    const auto dir_b = temp_dir("workers_8");
    const auto a = orchestrator::run_search(cfg, dir_a.string(), /*workers_override=*/1);
    const auto b = orchestrator::run_search(cfg, dir_b.string(), /*workers_override=*/8);
    CHECK(read_file(a.trajectory_path) == read_file(b.trajectory_path));
}

TEST_CASE("interrupt and resume reproduces the uninterrupted store") {
    const auto cfg = tabular_config();
    const auto dir_full = temp_dir("resume_full");
    const auto dir_part = temp_dir("resume_part");
    const auto full = orchestrator::run_search(cfg, dir_full.string());

    const auto part = orchestrator::run_search(cfg, dir_part.string(), 0, false,
                                               /*max_generations=*/2);
    CHECK(part.generations_completed == 2);
    const auto resumed = orchestrator::run_search(cfg, dir_part.string(), 0, /*resume=*/true);
    CHECK(resumed.generations_completed == cfg.generations);
    CHECK(read_file(full.trajectory_path) == read_file(resumed.trajectory_path));
    CHECK(read_file(full.metrics_path) == read_file(resumed.metrics_path));
}

TEST_CASE("resume rejects a config that differs from the trajectory header") {
    const auto cfg = tabular_config();
    const auto dir = temp_dir("resume_guard");
    orchestrator::run_search(cfg, dir.string(), 0, false, /*max_generations=*/2);
    auto edited = cfg;
    edited.reward.target = 9.0;
    CHECK_THROWS_AS(orchestrator::run_search(edited, dir.string(), 0, /*resume=*/true), ConfigError);
    // The original config still resumes cleanly.
    CHECK_NOTHROW(orchestrator::run_search(cfg, dir.string(), 0, true));
}

TEST_CASE("resume also recovers from a partially appended generation") {
    const auto cfg = tabular_config();
    const auto dir_full = temp_dir("crash_full");
    const auto dir_part = temp_dir("crash_part");
    const auto full = orchestrator::run_search(cfg, dir_full.string());

    const auto part = orchestrator::run_search(cfg, dir_part.string(), 0, false, 3);
    // Simulate a crash mid-append: tack on a truncated record line past the
    // checkpointed generation.
    {
        std::ofstream out(part.trajectory_path, std::ios::app);
        out << "{\"type\":\"record\",\"generation\":3,\"candidate_in";
    }
    const auto resumed = orchestrator::run_search(cfg, dir_part.string(), 0, true);
    CHECK(read_file(full.trajectory_path) == read_file(resumed.trajectory_path));
}

TEST_CASE("store loader validates reward consistency") {
    const auto cfg = tabular_config();
    const auto dir = temp_dir("validate");
    const auto out = orchestrator::run_search(cfg, dir.string());
    auto text = read_file(out.trajectory_path);
    // Corrupt one reward digit-by-digit is brittle; instead append a record
    // with a wrong reward.
    auto st = store::TrajectoryStore::load(out.trajectory_path);
    auto bad = st.records.back();
    bad.generation = cfg.generations;  // keep generations non-decreasing
    bad.reward += 0.25;
    {
        std::ofstream app(out.trajectory_path, std::ios::app);
        app << store::record_line(bad) << '\n';
    }
    CHECK_THROWS_AS(store::TrajectoryStore::load(out.trajectory_path), StorageError);
    CHECK_NOTHROW(store::TrajectoryStore::load(out.trajectory_path, /*validate_rewards=*/false));
}

TEST_CASE("metrics CSV carries the documented columns") {
    const auto cfg = tabular_config();
    const auto dir = temp_dir("metrics");
    const auto out = orchestrator::run_search(cfg, dir.string());
    std::istringstream in(read_file(out.metrics_path));
    std::string header;
    std::getline(in, header);
    CHECK(header == "generation,mean_reward,entropy,clip_fraction,value_loss");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == cfg.generations);
}

TEST_CASE("select_for_finalize matches a brute-force sort oracle") {
    Rng rng(17);
    std::vector<analysis::CandidateRecord> records;
    for (int i = 0; i < 300; ++i) {
        analysis::CandidateRecord rec;
        rec.latency_ms = rng.next_uniform(5.0, 25.0);
        rec.reward = rng.next_double();
        rec.generation = i;
        records.push_back(rec);
    }
    const double lo = 8.0, hi = 18.0;
    const auto got = orchestrator::select_for_finalize(records, lo, hi, 10);
    REQUIRE(got.size() == 10);

    std::vector<analysis::CandidateRecord> oracle;
    for (const auto& r : records) {
        if (r.latency_ms >= lo && r.latency_ms <= hi) oracle.push_back(r);
    }
    std::sort(oracle.begin(), oracle.end(),
              [](const auto& a, const auto& b) { return a.reward > b.reward; });
    for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(got[i].reward == oracle[i].reward);
    // In-window guarantee.
    for (const auto& r : got) {
        REQUIRE(r.latency_ms >= lo);
        REQUIRE(r.latency_ms <= hi);
    }
}

TEST_CASE("finalize_top retrains the selected candidates under both objectives") {
    const auto cfg = micro_config();
    const auto dir = temp_dir("finalize");
    const auto out = orchestrator::run_search(cfg, dir.string());
    const auto st = store::TrajectoryStore::load(out.trajectory_path);

    SUBCASE("singleton selection produces two long-train results") {
        const auto result = orchestrator::finalize_top(st, 0.0, 1e9, 1, /*long_epochs=*/6,
                                                       (dir / "final").string());
        REQUIRE(result.rows.size() == 1);
        CHECK(result.rows[0].kd_accuracy > 0.0);
        CHECK(result.rows[0].hard_accuracy > 0.0);
        CHECK(fs::exists(result.csv_path));
        // Top-1 by reward.
        double best = 0.0;
        for (const auto& rec : st.records) best = std::max(best, rec.reward);
        CHECK(result.rows[0].candidate.reward == best);
    }
    SUBCASE("a window excluding everything raises InsufficientCandidates") {
        CHECK_THROWS_AS(orchestrator::finalize_top(st, 1e6, 2e6, 1, 6, (dir / "fx").string()),
                        orchestrator::InsufficientCandidates);
    }
    SUBCASE("tabular stores cannot be finalized") {
        const auto tdir = temp_dir("finalize_tab");
        const auto tout = orchestrator::run_search(tabular_config(), tdir.string());
        const auto tst = store::TrajectoryStore::load(tout.trajectory_path);
        CHECK_THROWS_AS(orchestrator::finalize_top(tst, 0.0, 1e9, 1, 6, (tdir / "f").string()),
                        ConfigError);
    }
}

TEST_CASE("analysis report bundle is written") {
    const auto cfg = tabular_config();
    const auto dir = temp_dir("report");
    const auto out = orchestrator::run_search(cfg, dir.string());
    const auto st = store::TrajectoryStore::load(out.trajectory_path);

    auto cfg_b = cfg;
    cfg_b.run_seed = 8;
    const auto dir_b = temp_dir("report_b");
    const auto out_b = orchestrator::run_search(cfg_b, dir_b.string());
    const auto st_b = store::TrajectoryStore::load(out_b.trajectory_path);

    report::AnalyzeOptions opts;
    opts.top_k = 10;
    opts.final_population = 12;
    opts.plots = true;
    const auto report_dir = dir / "bundle";
    report::write_report(st, &st_b, report_dir.string(), opts);

    for (const char* name : {"pareto.csv", "opprob.csv", "divergence.csv", "stats.csv",
                             "latency_accuracy.svg", "search_path.svg", "opprob_diff.svg"}) {
        CHECK(fs::exists(report_dir / name));
    }
}
