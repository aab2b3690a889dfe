// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "kdnas/config.hpp"
#include "kdnas/orchestrator.hpp"
#include "kdnas/report.hpp"
#include "kdnas/store.hpp"

namespace fs = std::filesystem;

namespace {

// Default output root: $KDNAS_OUT when set, else ./kdnas_out.
std::string output_root() {
    if (const char* env = std::getenv("KDNAS_OUT"); env && *env) return env;
    return "kdnas_out";
}

std::pair<double, double> parse_window(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw kdnas::ConfigError("window must be lo:hi, got '" + text + "'");
    }
    try {
        const double lo = std::stod(text.substr(0, colon));
        const double hi = std::stod(text.substr(colon + 1));
        return {lo, hi};
    } catch (const std::exception&) {
        throw kdnas::ConfigError("window must be lo:hi with numeric bounds, got '" + text + "'");
    }
}

int run_search_cmd(const std::string& config_path, std::string out_dir, int workers, bool resume) {
    const auto cfg = kdnas::run_config_from_file(config_path);
    if (out_dir.empty()) out_dir = (fs::path(output_root()) / "search").string();
    const auto result = kdnas::orchestrator::run_search(cfg, out_dir, workers, resume);
    std::printf("search complete: %d generations, final mean reward %.6f\n",
                result.generations_completed, result.final_mean_reward);
    std::printf("trajectory: %s\n", result.trajectory_path.c_str());
    std::printf("metrics:    %s\n", result.metrics_path.c_str());
    std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
    return 0;
}

int run_finalize_cmd(const std::string& trajectory, const std::string& window, int top_k,
                     int epochs, std::string out_dir) {
    const auto st = kdnas::store::TrajectoryStore::load(trajectory);
    double lo = st.config.finalize.window_lo;
    double hi = st.config.finalize.window_hi;
    if (!window.empty()) std::tie(lo, hi) = parse_window(window);
    if (top_k <= 0) top_k = st.config.finalize.top_k;
    if (epochs <= 0) epochs = st.config.finalize.long_epochs;
    if (out_dir.empty()) out_dir = (fs::path(output_root()) / "finalize").string();
    const auto result = kdnas::orchestrator::finalize_top(st, lo, hi, top_k, epochs, out_dir);
    std::printf("finalized %zu candidates (window %.3f:%.3f, %d epochs)\n", result.rows.size(), lo,
                hi, epochs);
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& row = result.rows[i];
        std::printf("  #%zu gen %d idx %d: latency %.3f ms, kd %.4f, hard %.4f\n", i,
                    row.candidate.generation, row.candidate.candidate_index,
                    row.candidate.latency_ms, row.kd_accuracy, row.hard_accuracy);
    }
    std::printf("results table: %s\n", result.csv_path.c_str());
    return 0;
}

int run_analyze_cmd(const std::string& trajectory, const std::string& compare,
                    std::string report_dir, int top_k, const std::string& window, int population,
                    bool plots) {
    const auto st = kdnas::store::TrajectoryStore::load(trajectory);
    kdnas::store::TrajectoryStore cmp;
    const kdnas::store::TrajectoryStore* cmp_ptr = nullptr;
    if (!compare.empty()) {
        cmp = kdnas::store::TrajectoryStore::load(compare);
        cmp_ptr = &cmp;
    }
    kdnas::report::AnalyzeOptions opts;
    opts.top_k = top_k;
    opts.final_population = population;
    opts.plots = plots;
    if (!window.empty()) std::tie(opts.window_lo, opts.window_hi) = parse_window(window);
    if (report_dir.empty()) report_dir = (fs::path(output_root()) / "report").string();
    kdnas::report::write_report(st, cmp_ptr, report_dir, opts);
    std::printf("%s bundle written to %s\n", plots ? "analysis + plot" : "analysis", report_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KD-guided neural architecture search engine"};
    app.require_subcommand(1);

    std::string config_path, out_dir, trajectory, compare, report_dir, window;
    int workers = 0;
    bool resume = false;
    int top_k = 0;
    int epochs = 0;
    int analyze_top_k = 100;
    int population = 500;

    auto* search = app.add_subcommand("search", "Run the architecture search loop");
    search->add_option("--config", config_path, "Run configuration JSON")->required();
    search->add_option("--out", out_dir, "Output directory (default $KDNAS_OUT/search)");
    search->add_option("--workers", workers, "Evaluation worker threads (0 = hardware)");
    search->add_flag("--resume", resume, "Continue from the last checkpointed generation");

    auto* finalize = app.add_subcommand("finalize", "Long-train the top in-window candidates");
    finalize->add_option("--trajectory", trajectory, "Trajectory JSONL from a search run")->required();
    finalize->add_option("--window", window, "Latency window lo:hi in ms (default: run config)");
    finalize->add_option("--top", top_k, "Candidate count (default: run config)");
    finalize->add_option("--epochs", epochs, "Long-train epochs (default: run config)");
    finalize->add_option("--out", out_dir, "Output directory (default $KDNAS_OUT/finalize)");

    auto* analyze = app.add_subcommand("analyze", "Write the CSV analysis bundle");
    analyze->add_option("--trajectory", trajectory, "Trajectory JSONL")->required();
    analyze->add_option("--compare", compare, "Second trajectory for family comparisons");
    analyze->add_option("--report", report_dir, "Report directory (default $KDNAS_OUT/report)");
    analyze->add_option("--top-k", analyze_top_k, "Population for operator statistics");
    analyze->add_option("--window", window, "Latency window lo:hi for the top-k selection");
    analyze->add_option("--population", population, "Final-population size for separation stats");

    auto* report = app.add_subcommand("report", "Write the CSV bundle plus SVG charts");
    report->add_option("--trajectory", trajectory, "Trajectory JSONL")->required();
    report->add_option("--compare", compare, "Second trajectory for family comparisons");
    report->add_option("--report", report_dir, "Report directory (default $KDNAS_OUT/report)");
    report->add_option("--top-k", analyze_top_k, "Population for operator statistics");
    report->add_option("--window", window, "Latency window lo:hi for the top-k selection");
    report->add_option("--population", population, "Final-population size for separation stats");

    try {
        app.parse(argc, argv);
        if (search->parsed()) return run_search_cmd(config_path, out_dir, workers, resume);
        if (finalize->parsed()) return run_finalize_cmd(trajectory, window, top_k, epochs, out_dir);
        if (analyze->parsed()) {
            return run_analyze_cmd(trajectory, compare, report_dir, analyze_top_k, window,
                                   population, false);
        }
        if (report->parsed()) {
            return run_analyze_cmd(trajectory, compare, report_dir, analyze_top_k, window,
                                   population, true);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const kdnas::StorageError& e) {
        std::fprintf(stderr, "storage error: %s\n", e.what());
        return 3;
    } catch (const kdnas::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
