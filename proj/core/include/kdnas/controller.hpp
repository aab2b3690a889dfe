// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kdnas/space.hpp"

namespace kdnas::controller {

class NonFiniteReward : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DegenerateBatch : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct PpoParams {
    int hidden_width = 64;
    double learning_rate = 0.01;
    double clip_ratio = 0.2;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    bool advantage_norm = true;
    int batch_size = 20;
};

void validate(const PpoParams& p);

// One sampled candidate: an episode of D decision steps with the terminal
// reward broadcast as the return of every step.
struct Trajectory {
    std::vector<int> decisions;
    std::vector<double> step_log_probs;  // <= 0
    std::vector<double> step_values;
    double reward = 0.0;
    bool has_reward = false;
};

struct UpdateStats {
    double mean_reward = 0.0;
    double surrogate_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
};

// Recurrent actor-critic over a fixed search space: a gated recurrent cell
// consumes the one-hot of the previous decision and per-dimension linear
// heads emit the categorical logits, plus a scalar value head. Heads start
// at zero (uniform initial policy); recurrent weights are seeded uniform
// scaled by 1/sqrt(H).
//
// sample_batch is const and safe on a frozen snapshot; ppo_update mutates
// and must be serialized (one updater, many readers).
class PolicyState {
public:
    PolicyState(const space::SearchSpaceDef& space, PpoParams params, std::uint64_t init_seed);

    const PpoParams& params_config() const { return ppo_; }
    int hidden_width() const { return hidden_; }
    std::uint64_t space_id() const { return space_id_; }

    std::vector<Trajectory> sample_batch(int n, std::uint64_t rng_seed) const;

    UpdateStats ppo_update(const std::vector<Trajectory>& batch);

    // Monte-Carlo estimate of the mean per-step categorical entropy (nats).
    double policy_entropy(int n_probe, std::uint64_t rng_seed) const;

    // Flat parameter vector (cell, heads, value head); used by checkpoints
    // and gradient tests.
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    // Offsets into the flat vector for a dimension's head bias (length =
    // that dimension's cardinality) and the value head (H weights + bias).
    int head_bias_offset(int dim) const { return head_b_[static_cast<std::size_t>(dim)]; }
    int value_offset() const { return vw_; }

    // PPO loss for a fixed batch at the current parameters, with analytic
    // gradient; exposed for finite-difference verification.
    double ppo_loss(const std::vector<Trajectory>& batch, std::vector<double>* grad) const;

    // Versioned dump/restore of parameters plus optimizer state.
    std::string serialize() const;
    static PolicyState deserialize(const std::string& bytes, const space::SearchSpaceDef& space);

private:
    struct StepCache;
    struct Workspace;

    void forward_step(int dim, int prev_onehot_index, std::vector<double>& hidden,
                      StepCache* cache) const;
    void head_logits(int dim, const std::vector<double>& hidden, std::vector<double>& out) const;
    double value_estimate(const std::vector<double>& hidden) const;

    space::SearchSpaceDef space_copy_;  // owned immutable copy
    std::uint64_t space_id_ = 0;
    PpoParams ppo_;
    int hidden_ = 0;
    int input_ = 0;  // one-hot length E

    // Parameter layout offsets.
    int wz_ = 0, wr_ = 0, wn_ = 0;  // input weights  [H x E]
    int uz_ = 0, ur_ = 0, un_ = 0;  // recurrent      [H x H]
    int bz_ = 0, br_ = 0, bn_ = 0;  // biases         [H]
    std::vector<int> head_w_;       // per-dim        [k_d x H]
    std::vector<int> head_b_;       // per-dim        [k_d]
    int vw_ = 0, vb_ = 0;

    std::vector<double> params_;
    // Adam state.
    std::vector<double> adam_m_, adam_v_;
    long adam_t_ = 0;
};

}  // namespace kdnas::controller
