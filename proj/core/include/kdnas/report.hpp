// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "kdnas/store.hpp"

namespace kdnas::report {

struct AnalyzeOptions {
    int top_k = 100;             // operator statistics population
    double window_lo = 0.0;      // latency window for the top-k selection
    double window_hi = 1e18;
    int final_population = 500;  // family size for separation / projection
    bool plots = false;          // also emit the SVG bundle
};

// Writes the CSV analysis bundle (pareto.csv, opprob.csv, stats.csv, plus
// divergence.csv when a comparison trajectory is given) and, with
// opts.plots, the SVG charts, into out_dir.
void write_report(const store::TrajectoryStore& trajectory,
                  const store::TrajectoryStore* compare, const std::string& out_dir,
                  const AnalyzeOptions& opts);

}  // namespace kdnas::report
