// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "kdnas/config.hpp"
#include "kdnas/store.hpp"

namespace kdnas::orchestrator {

class InsufficientCandidates : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct SearchOutput {
    std::string trajectory_path;
    std::string checkpoint_path;
    std::string metrics_path;
    int generations_completed = 0;
    double final_mean_reward = 0.0;
};

// Runs the search loop: per generation, freeze the policy, sample a batch,
// evaluate candidates on a worker pool (results are schedule-independent
// thanks to per-candidate seed derivation), compute rewards, append
// records, PPO-update, checkpoint. Files written under out_dir:
// trajectory.jsonl, metrics.csv, policy.ckpt.
//
// With resume=true the run continues from the last checkpointed
// generation; the reconciled store is byte-identical to an uninterrupted
// run. max_generations (test hook) stops early after that many total
// generations without touching the configured budget.
SearchOutput run_search(const RunConfig& cfg, const std::string& out_dir, int workers_override = 0,
                        bool resume = false, int max_generations = -1);

// Reward-ordered in-window selection (pure; oracle-testable).
std::vector<analysis::CandidateRecord> select_for_finalize(
    const std::vector<analysis::CandidateRecord>& records, double window_lo, double window_hi,
    int k);

struct FinalizeRow {
    analysis::CandidateRecord candidate;
    double kd_accuracy = 0.0;
    double hard_accuracy = 0.0;
};

struct FinalizeOutput {
    std::vector<FinalizeRow> rows;
    std::string csv_path;
};

// Picks the top-k in-window candidates and retrains each from scratch with
// the long budget under both the distillation objective and hard labels,
// emitting results.csv (arch, KD accuracy, hard-label accuracy, latency).
// Requires the run's environment to be micro_kd.
FinalizeOutput finalize_top(const store::TrajectoryStore& store, double window_lo, double window_hi,
                            int k, int long_epochs, const std::string& out_dir);

}  // namespace kdnas::orchestrator
