// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kdnas/space.hpp"

namespace kdnas::micro {

// Dense-network analogs of the mobile-conv search dimensions; the mapping
// is documented in docs/micro_decoding.md.
enum class Activation { relu, tanh, silu };
enum class SkipKind { none, add, proj, gate };

struct SqueezeSpec {
    bool enabled = false;
    int hidden = 0;
};

struct BlockPlan {
    int in_width = 0;
    int out_width = 0;
    int layer_count = 0;  // 0 = identity passthrough block
    Activation act = Activation::relu;
    SkipKind skip = SkipKind::none;
    bool align_proj = false;  // linear alignment on the skip path
    SqueezeSpec se;
};

struct NetworkPlan {
    int input_width = 0;
    int feature_width = 0;  // penultimate (pre-classifier) width
    std::vector<BlockPlan> blocks;
};

// Shape-only decoding of an architecture. Pure; requires the per-block
// dimensions skip_op / op_type / layer_count / width_mult / se_ratio and
// a positive base_width on every block.
NetworkPlan decode_plan(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& space,
                        int input_width);

// Plain layer-stack plan (used for teacher networks).
NetworkPlan plan_from_widths(int input_width, const std::vector<int>& hidden_widths,
                             Activation act = Activation::relu);

// Body multiply-accumulate count x2, in units of 1e6 FLOPs. Counts dense
// matmuls only (body layers, skip alignment projections, squeeze gates);
// elementwise ops and the task-specific classifier head are excluded.
double plan_mflops(const NetworkPlan& plan);

// Decoded student network with manual forward/backward in double
// precision. One instance per training run; forward caches are consumed
// by the following backward call, so instances are not shareable across
// threads (candidates own private nets).
class MicroNet {
public:
    MicroNet(const NetworkPlan& plan, int classes, std::uint64_t init_seed);

    const NetworkPlan& plan() const { return plan_; }
    int classes() const { return classes_; }
    int feature_width() const { return plan_.feature_width; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Runs the network; logits()/features() are valid until the next call.
    void forward(const std::vector<double>& input);
    const std::vector<double>& logits() const { return logits_; }
    const std::vector<double>& features() const { return features_; }

    // Accumulates parameter gradients into grad (same layout as params())
    // from output-side gradients of the most recent forward pass.
    // dfeatures may be empty when the loss touches only the logits.
    void backward(const std::vector<double>& dlogits, const std::vector<double>& dfeatures,
                  std::vector<double>& grad);

private:
    struct LayerSlot {
        int w = 0, b = 0, in = 0, out = 0;
    };
    struct BlockSlots {
        std::vector<LayerSlot> layers;
        int se_w1 = -1, se_b1 = -1, se_w2 = -1, se_b2 = -1;
        int align = -1;   // projection weights
        int gate = -1;    // scalar gate parameter
    };
    struct BlockCache {
        std::vector<double> input;
        std::vector<std::vector<double>> pre;   // per-layer pre-activations
        std::vector<std::vector<double>> post;  // per-layer activations
        std::vector<double> body;               // after SE gating
        std::vector<double> se_hidden_pre, se_hidden, se_gate_pre, se_gate;
        std::vector<double> aligned;            // skip path after alignment
        double gate_value = 0.0;
        std::vector<double> output;
    };

    int alloc(int n);

    int classes_ = 0;
    NetworkPlan plan_;
    std::vector<BlockSlots> slots_;
    LayerSlot head_;
    std::vector<double> params_;

    std::vector<BlockCache> cache_;
    std::vector<double> features_;
    std::vector<double> logits_;
};

}  // namespace kdnas::micro
