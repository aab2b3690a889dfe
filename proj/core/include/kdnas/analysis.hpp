// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kdnas/space.hpp"

namespace kdnas::analysis {

class EmptyInput : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DegenerateInput : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class TooFewMembers : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class NotNormalized : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// One evaluated candidate as persisted in the trajectory store.
struct CandidateRecord {
    std::vector<int> decisions;
    space::OneHotVector onehot;
    double accuracy = 0.0;
    double latency_ms = 0.0;
    double mflops = 0.0;
    double reward = 0.0;
    int generation = 0;
    int candidate_index = 0;
    std::uint64_t run_seed = 0;
    std::uint64_t eval_seed = 0;
    std::string objective;  // "kd" or "hard"
    std::string teacher;
    bool diverged = false;
};

// Exact non-dominated set under (maximize accuracy, minimize latency),
// ordered by latency ascending; exact ties on both axes keep the earliest
// generation.
std::vector<CandidateRecord> pareto_front(const std::vector<CandidateRecord>& records);

// Highest-reward records within a latency window (the "top-k optimal"
// selection used for operator statistics).
std::vector<CandidateRecord> select_top(const std::vector<CandidateRecord>& records, int k,
                                        double latency_lo, double latency_hi);

struct OperatorProbability {
    std::vector<double> probability;  // length E; sums to 1 per segment
    std::vector<double> stddev;       // sqrt(p(1-p))
};

OperatorProbability operator_probability(const std::vector<CandidateRecord>& records,
                                         const space::SearchSpaceDef& space);

struct FamilyDivergence {
    std::vector<double> diff;  // probability(a) - probability(b), bit order
    std::vector<int> order;    // bit indices sorted by |diff| descending
};

FamilyDivergence family_divergence(const std::vector<CandidateRecord>& family_a,
                                   const std::vector<CandidateRecord>& family_b,
                                   const space::SearchSpaceDef& space);

// (kd_akd - cls_akd) - (kd_nas - cls_nas).
double relative_gain(double kd_akd, double cls_akd, double kd_nas, double cls_nas);

struct WinStats {
    double ratio = 0.0;         // wins / valid, strict inequality
    double average_gain = 0.0;  // mean(akd_gain - nas_gain) over valid pairs
    int wins = 0;
    int valid = 0;
    int excluded = 0;  // non-finite pairs, reported rather than dropped silently
};

WinStats winning_ratio(const std::vector<std::pair<double, double>>& pair_gains);

struct Projection {
    std::vector<std::array<double, 2>> points;
    std::array<double, 2> explained_variance{0.0, 0.0};  // fraction of total
};

// Principal-component projection onto the top-2 eigenvectors of the
// centered covariance; sign convention: the largest-magnitude loading of
// each component is positive.
Projection project_2d(const std::vector<space::OneHotVector>& onehot_vectors);

struct SeparationStats {
    double inter = 0.0;    // distance between family centroids
    double intra_a = 0.0;  // mean member-to-centroid distance
    double intra_b = 0.0;
    double ratio = 0.0;    // inter / mean(intra); +inf when intra is 0 and inter > 0
};

SeparationStats centroid_separation(const std::vector<space::OneHotVector>& family_a,
                                    const std::vector<space::OneHotVector>& family_b);

// Pairwise KL(p_i || q_j) with the 0 log 0 convention and a 1e-12 floor on
// q entries; diagonal is exactly 0. Generally asymmetric.
std::vector<std::vector<double>> distribution_divergence(
    const std::vector<std::vector<double>>& dist_list);

}  // namespace kdnas::analysis
