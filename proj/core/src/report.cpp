// SPDX-License-Identifier: Apache-2.0
#include "kdnas/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include "kdnas/analysis.hpp"
#include "kdnas/svg.hpp"

namespace kdnas::report {

namespace fs = std::filesystem;

namespace {

struct BitInfo {
    int block = 0;
    std::string dim_name;
    std::string value;
};

std::vector<BitInfo> bit_table(const space::SearchSpaceDef& sp) {
    std::vector<BitInfo> table(static_cast<std::size_t>(sp.onehot_length()));
    for (int d = 0; d < sp.dim_count(); ++d) {
        const auto& dim = sp.dim(d);
        for (int v = 0; v < sp.cardinality(d); ++v) {
            auto& info = table[static_cast<std::size_t>(sp.segment_offset(d) + v)];
            info.block = sp.dim_block(d);
            info.dim_name = dim.name;
            info.value = space::value_to_string(dim.values[static_cast<std::size_t>(v)]);
        }
    }
    return table;
}

std::vector<space::OneHotVector> slice_onehots(const std::vector<analysis::CandidateRecord>& records,
                                               std::size_t from, std::size_t count) {
    std::vector<space::OneHotVector> out;
    for (std::size_t i = from; i < std::min(records.size(), from + count); ++i) {
        out.push_back(records[i].onehot);
    }
    return out;
}

std::ofstream open_csv(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StorageError("cannot open " + path.string());
    return out;
}

}  // namespace

void write_report(const store::TrajectoryStore& trajectory, const store::TrajectoryStore* compare,
                  const std::string& out_dir, const AnalyzeOptions& opts) {
    if (trajectory.records.empty()) {
        throw analysis::EmptyInput("trajectory has no records to analyze");
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const auto& sp = trajectory.config.space;
    const auto bits = bit_table(sp);

    // Pareto front.
    const auto front = analysis::pareto_front(trajectory.records);
    {
        auto csv = open_csv(fs::path(out_dir) / "pareto.csv");
        csv << "latency_ms,accuracy,mflops,reward,generation,candidate_index\n";
        for (const auto& r : front) {
            csv << r.latency_ms << ',' << r.accuracy << ',' << r.mflops << ',' << r.reward << ','
                << r.generation << ',' << r.candidate_index << '\n';
        }
    }

    // Operator probabilities over the top-k in-window records.
    auto top_a = analysis::select_top(trajectory.records, opts.top_k, opts.window_lo, opts.window_hi);
    if (top_a.empty()) top_a = trajectory.records;  // window missed: fall back to everything
    const auto prob_a = analysis::operator_probability(top_a, sp);
    {
        auto csv = open_csv(fs::path(out_dir) / "opprob.csv");
        csv << "bit,block,dimension,value,probability,stddev\n";
        for (std::size_t b = 0; b < prob_a.probability.size(); ++b) {
            csv << b << ',' << bits[b].block << ',' << bits[b].dim_name << ',' << bits[b].value << ','
                << prob_a.probability[b] << ',' << prob_a.stddev[b] << '\n';
        }
    }

    std::optional<analysis::SeparationStats> separation;
    if (compare) {
        if (compare->records.empty()) throw analysis::EmptyInput("comparison trajectory is empty");
        auto top_b = analysis::select_top(compare->records, opts.top_k, opts.window_lo, opts.window_hi);
        if (top_b.empty()) top_b = compare->records;
        const auto div = analysis::family_divergence(top_a, top_b, sp);
        const auto prob_b = analysis::operator_probability(top_b, sp);
        auto csv = open_csv(fs::path(out_dir) / "divergence.csv");
        csv << "rank,bit,block,dimension,value,prob_a,prob_b,diff\n";
        for (std::size_t rank = 0; rank < div.order.size(); ++rank) {
            const auto b = static_cast<std::size_t>(div.order[rank]);
            csv << rank << ',' << b << ',' << bits[b].block << ',' << bits[b].dim_name << ','
                << bits[b].value << ',' << prob_a.probability[b] << ',' << prob_b.probability[b]
                << ',' << div.diff[b] << '\n';
        }

        const std::size_t na = trajectory.records.size();
        const std::size_t nb = compare->records.size();
        const std::size_t pop = static_cast<std::size_t>(opts.final_population);
        const auto fam_a = slice_onehots(trajectory.records, na > pop ? na - pop : 0, pop);
        const auto fam_b = slice_onehots(compare->records, nb > pop ? nb - pop : 0, pop);
        if (fam_a.size() >= 2 && fam_b.size() >= 2) {
            separation = analysis::centroid_separation(fam_a, fam_b);
        }
    }

    // Run-level stats.
    {
        auto csv = open_csv(fs::path(out_dir) / "stats.csv");
        csv << "key,value\n";
        csv << "records," << trajectory.records.size() << '\n';
        const int last_gen = trajectory.records.back().generation;
        csv << "generations," << (last_gen + 1) << '\n';
        double best_reward = trajectory.records.front().reward;
        double best_accuracy = trajectory.records.front().accuracy;
        double final_gen_reward = 0.0;
        int final_gen_count = 0;
        for (const auto& r : trajectory.records) {
            best_reward = std::max(best_reward, r.reward);
            best_accuracy = std::max(best_accuracy, r.accuracy);
            if (r.generation == last_gen) {
                final_gen_reward += r.reward;
                ++final_gen_count;
            }
        }
        csv << "best_reward," << best_reward << '\n';
        csv << "best_accuracy," << best_accuracy << '\n';
        csv << "final_generation_mean_reward," << (final_gen_reward / std::max(1, final_gen_count))
            << '\n';
        csv << "pareto_size," << front.size() << '\n';
        if (separation) {
            csv << "separation_inter," << separation->inter << '\n';
            csv << "separation_intra_a," << separation->intra_a << '\n';
            csv << "separation_intra_b," << separation->intra_b << '\n';
            csv << "separation_ratio," << separation->ratio << '\n';
        }
    }

    if (!opts.plots) return;

    // Latency/accuracy cloud with the Pareto curve highlighted.
    {
        svg::Series cloud{"sampled", "#1f77b4", 2.0, {}, false};
        for (const auto& r : trajectory.records) cloud.points.push_back({r.latency_ms, r.accuracy});
        svg::Series curve{"pareto", "#d62728", 3.0, {}, true};
        for (const auto& r : front) curve.points.push_back({r.latency_ms, r.accuracy});
        svg::write_scatter((fs::path(out_dir) / "latency_accuracy.svg").string(),
                           "Sampled architectures", "latency (ms)", "accuracy", {cloud, curve});
    }

    // 2-D projection of populations (final vs initial, or run vs run).
    {
        const std::size_t pop = static_cast<std::size_t>(opts.final_population);
        std::vector<space::OneHotVector> fam_a, fam_b;
        std::string label_a, label_b;
        if (compare) {
            const std::size_t na = trajectory.records.size();
            const std::size_t nb = compare->records.size();
            fam_a = slice_onehots(trajectory.records, na > pop ? na - pop : 0, pop);
            fam_b = slice_onehots(compare->records, nb > pop ? nb - pop : 0, pop);
            label_a = "final (run A)";
            label_b = "final (run B)";
        } else {
            fam_a = slice_onehots(trajectory.records, 0, pop);
            const std::size_t n = trajectory.records.size();
            fam_b = slice_onehots(trajectory.records, n > pop ? n - pop : 0, pop);
            label_a = "initial";
            label_b = "final";
        }
        std::vector<space::OneHotVector> all = fam_a;
        all.insert(all.end(), fam_b.begin(), fam_b.end());
        bool distinct = false;
        for (std::size_t i = 1; i < all.size() && !distinct; ++i) distinct = !(all[i] == all[0]);
        if (all.size() >= 3 && distinct) {
            const auto proj = analysis::project_2d(all);
            svg::Series sa{label_a, "#ff7f0e", 3.0, {}, false};
            svg::Series sb{label_b, "#1f77b4", 3.0, {}, false};
            for (std::size_t i = 0; i < fam_a.size(); ++i) sa.points.push_back(proj.points[i]);
            for (std::size_t i = fam_a.size(); i < all.size(); ++i) sb.points.push_back(proj.points[i]);
            svg::write_scatter((fs::path(out_dir) / "search_path.svg").string(),
                               "Architecture populations (PCA)", "pc1", "pc2", {sa, sb});
        }
    }

    // Operator probability chart.
    {
        std::vector<svg::Bar> bars;
        if (compare) {
            auto top_b = analysis::select_top(compare->records, opts.top_k, opts.window_lo, opts.window_hi);
            if (top_b.empty()) top_b = compare->records;
            const auto div = analysis::family_divergence(top_a, top_b, sp);
            for (int b : div.order) bars.push_back({div.diff[static_cast<std::size_t>(b)], 0.0});
            svg::write_bars((fs::path(out_dir) / "opprob_diff.svg").string(),
                            "Operator probability difference (A - B), sorted", "probability diff",
                            bars, "#2ca02c");
        } else {
            for (std::size_t b = 0; b < prob_a.probability.size(); ++b) {
                bars.push_back({prob_a.probability[b], prob_a.stddev[b]});
            }
            svg::write_bars((fs::path(out_dir) / "opprob.svg").string(),
                            "Operator probability (top-k records)", "probability", bars);
        }
    }
}

}  // namespace kdnas::report
