// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "kdnas/space.hpp"

namespace kdnas::cost {

class NonPositiveCost : public ConfigError {
public:
    using ConfigError::ConfigError;
};

enum class RewardMode { latency, flops };

// Weighted-product soft constraint: reward = accuracy * (cost/target)^w.
// Neutral at cost == target; w <= 0 trades accuracy against cost overrun.
struct RewardConfig {
    double target = 15.0;           // ms in latency mode, mFLOPS in flops mode
    double weight_exponent = -0.07;
    RewardMode mode = RewardMode::latency;
};

// Parametric stand-in for on-device measurement, calibrated to the
// empirical linear band latency = intercept + mflops/c with c in
// [3.4, 10.47] for the default profile.
struct LatencyModel {
    double intercept_ms = 7.0;
    double mflops_per_ms = 6.9;
    double noise_sigma = 0.0;     // lognormal jitter; 0 disables
    std::uint64_t noise_seed = 0;
    int input_width = 16;         // width at which FLOPs are assessed
};

void validate(const RewardConfig& cfg);
void validate(const LatencyModel& model);

// Analytic FLOPs of the decoded micro-network body, in 1e6-FLOP units.
// Pure function of (arch, input_width).
double mflops(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& space,
              int input_width);

double latency_from_mflops(double mflops_value, const LatencyModel& model,
                           std::uint64_t arch_hash = 0);

// intercept + mflops/c, times the per-architecture noise factor when
// configured. Strictly increasing in FLOPs at fixed model.
double latency_ms(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& space,
                  const LatencyModel& model);

double compute_reward(double accuracy, double cost_value, const RewardConfig& cfg);

// Stable per-architecture hash used to seed latency jitter.
std::uint64_t arch_hash(const space::ArchitectureConfig& arch);

}  // namespace kdnas::cost
