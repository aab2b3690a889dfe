// SPDX-License-Identifier: Apache-2.0
#include "kdnas/cost.hpp"

#include <cmath>

#include "kdnas/micro.hpp"
#include "kdnas/rng.hpp"

namespace kdnas::cost {

void validate(const RewardConfig& cfg) {
    if (!(cfg.target > 0.0)) throw ConfigError("reward target must be > 0");
    if (cfg.weight_exponent > 0.0) throw ConfigError("weight_exponent must be <= 0");
}

void validate(const LatencyModel& model) {
    if (model.intercept_ms < 0.0) throw ConfigError("latency intercept must be >= 0");
    if (!(model.mflops_per_ms > 0.0)) throw ConfigError("mflops_per_ms must be > 0");
    if (model.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (model.input_width < 1) throw ConfigError("latency model input_width must be >= 1");
}

double mflops(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& sp,
              int input_width) {
    return micro::plan_mflops(micro::decode_plan(arch, sp, input_width));
}

std::uint64_t arch_hash(const space::ArchitectureConfig& arch) {
    std::uint64_t h = arch.space_id;
    for (int d : arch.decisions) h = mix_seed(h, static_cast<std::uint64_t>(d) + 1);
    return h;
}

double latency_from_mflops(double mflops_value, const LatencyModel& model, std::uint64_t ahash) {
    double lat = model.intercept_ms + mflops_value / model.mflops_per_ms;
    if (model.noise_sigma > 0.0) {
        // Same architecture, same jitter: the factor is a function of the
        // architecture hash, so results stay schedule-independent.
        Rng rng(mix_seed(model.noise_seed, ahash));
        lat *= std::exp(model.noise_sigma * rng.next_gaussian());
    }
    return lat;
}

double latency_ms(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& sp,
                  const LatencyModel& model) {
    return latency_from_mflops(mflops(arch, sp, model.input_width), model, arch_hash(arch));
}

double compute_reward(double accuracy, double cost_value, const RewardConfig& cfg) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw ConfigError("accuracy must be in [0,1]");
    if (!(cost_value > 0.0)) throw NonPositiveCost("cost value must be > 0");
    return accuracy * std::pow(cost_value / cfg.target, cfg.weight_exponent);
}

}  // namespace kdnas::cost
