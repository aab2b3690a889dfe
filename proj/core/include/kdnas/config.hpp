// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "kdnas/controller.hpp"
#include "kdnas/cost.hpp"
#include "kdnas/evaluator.hpp"
#include "kdnas/space.hpp"

namespace kdnas {

inline constexpr int kTrajectorySchemaVersion = 1;

// Fast verifiable surrogate environment.
struct TabularEnvSpec {
    std::string teacher_tag = "T_A";
    std::uint64_t teacher_seed = 1;
    double noise_sigma = 0.01;
    std::string objective_tag = "kd";  // recorded on every candidate
};

// Proxy-task distillation environment.
struct MicroEnvSpec {
    evaluator::ProxyTaskSpec task;
    evaluator::KDConfig kd;
};

using EnvSpec = std::variant<TabularEnvSpec, MicroEnvSpec>;

struct FinalizeSettings {
    int top_k = 5;
    double window_lo = 0.0;
    double window_hi = 1e9;
    int long_epochs = 80;
};

struct RunConfig {
    std::uint64_t run_seed = 42;
    int generations = 500;
    int batch_size = 20;
    int workers = 0;  // 0 = hardware parallelism
    space::SearchSpaceDef space = space::SearchSpaceDef::default_space();
    cost::RewardConfig reward;
    cost::LatencyModel latency;
    EnvSpec env = TabularEnvSpec{};
    controller::PpoParams controller;
    FinalizeSettings finalize;
};

void validate(const RunConfig& cfg);

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);
RunConfig run_config_from_file(const std::string& path);

// Objective tag recorded on candidates ("kd" or "hard").
std::string objective_tag(const RunConfig& cfg);

}  // namespace kdnas
