// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "kdnas/analysis.hpp"
#include "kdnas/config.hpp"

namespace kdnas::store {

// Append-only JSON-lines trajectory: a header line echoing the full run
// config, then one line per evaluated candidate with non-decreasing
// generation indices. No wall-clock fields, so identical runs produce
// byte-identical files.
struct TrajectoryStore {
    RunConfig config;
    std::vector<analysis::CandidateRecord> records;

    // Parses a trajectory file. A trailing partial line (crash during
    // append) is dropped. With validate_rewards, every persisted reward is
    // re-derived from its accuracy/cost and the header reward config and
    // must agree within 1e-9.
    static TrajectoryStore load(const std::string& path, bool validate_rewards = true);
};

std::string header_line(const RunConfig& cfg);
std::string record_line(const analysis::CandidateRecord& rec);
analysis::CandidateRecord parse_record_line(const std::string& line, int expected_onehot_length);

class TrajectoryWriter {
public:
    // truncate=false appends to an existing file (resume path).
    TrajectoryWriter(const std::string& path, const RunConfig& cfg, bool truncate);

    void append(const analysis::CandidateRecord& rec);
    void flush();
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

// Rewrites `path` with only the header and records up to and including
// `last_generation` (used to reconcile a store after an interrupted run).
void truncate_to_generation(const std::string& path, const RunConfig& cfg, int last_generation);

}  // namespace kdnas::store
