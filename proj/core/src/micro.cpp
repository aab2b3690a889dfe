// SPDX-License-Identifier: Apache-2.0
#include "kdnas/micro.hpp"

#include <cmath>
#include <cstddef>

#include "kdnas/rng.hpp"

namespace kdnas::micro {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double act_apply(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::silu: return x * sigmoid(x);
    }
    return x;
}

double act_derivative(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::silu: {
            const double s = sigmoid(x);
            return s * (1.0 + x * (1.0 - s));
        }
    }
    return 1.0;
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "silu") return Activation::silu;
    throw ConfigError("unknown op_type value '" + s + "'");
}

SkipKind parse_skip(const std::string& s) {
    if (s == "none") return SkipKind::none;
    if (s == "add") return SkipKind::add;
    if (s == "proj") return SkipKind::proj;
    if (s == "gate") return SkipKind::gate;
    throw ConfigError("unknown skip_op value '" + s + "'");
}

const space::CatalogValue& block_decision(const space::ArchitectureConfig& arch,
                                          const space::SearchSpaceDef& sp, int block,
                                          const std::string& dim_name, int* flat_dim_out) {
    int flat = 0;
    for (int b = 0; b < sp.block_count(); ++b) {
        const auto& dims = sp.blocks()[static_cast<std::size_t>(b)].dims;
        for (const auto& dim : dims) {
            if (b == block && dim.name == dim_name) {
                if (flat_dim_out) *flat_dim_out = flat;
                return dim.values[static_cast<std::size_t>(
                    arch.decisions[static_cast<std::size_t>(flat)])];
            }
            ++flat;
        }
    }
    throw ConfigError("block " + std::to_string(block) + " has no dimension '" + dim_name +
                      "'; space is not micro-decodable");
}

double numeric_value(const space::CatalogValue& v, const std::string& dim_name) {
    if (!std::holds_alternative<double>(v)) {
        throw ConfigError("dimension '" + dim_name + "' needs numeric catalog values");
    }
    return std::get<double>(v);
}

std::string string_value(const space::CatalogValue& v, const std::string& dim_name) {
    if (!std::holds_alternative<std::string>(v)) {
        throw ConfigError("dimension '" + dim_name + "' needs symbolic catalog values");
    }
    return std::get<std::string>(v);
}

// y = W x + b with row-major W[out x in].
void dense_forward(const double* w, const double* b, const double* x, double* y, int in, int out) {
    for (int o = 0; o < out; ++o) {
        double acc = b ? b[o] : 0.0;
        const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
        for (int i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

void dense_backward(const double* w, const double* x, const double* dy, double* dw, double* db,
                    double* dx, int in, int out) {
    for (int o = 0; o < out; ++o) {
        const double g = dy[o];
        const std::size_t base = static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
        if (db) db[o] += g;
        for (int i = 0; i < in; ++i) dw[base + static_cast<std::size_t>(i)] += g * x[i];
    }
    if (dx) {
        for (int i = 0; i < in; ++i) {
            double acc = 0.0;
            for (int o = 0; o < out; ++o) {
                acc += w[static_cast<std::size_t>(o) * static_cast<std::size_t>(in) +
                         static_cast<std::size_t>(i)] *
                       dy[o];
            }
            dx[i] += acc;
        }
    }
}

}  // namespace

NetworkPlan decode_plan(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& sp,
                        int input_width) {
    if (arch.space_id != sp.identity()) {
        throw space::SpaceMismatch("architecture was decoded against a different search space");
    }
    if (input_width < 1) throw ConfigError("input_width must be >= 1");
    NetworkPlan plan;
    plan.input_width = input_width;
    int width = input_width;
    for (int b = 0; b < sp.block_count(); ++b) {
        const int base = sp.blocks()[static_cast<std::size_t>(b)].base_width;
        BlockPlan block;
        block.in_width = width;
        block.layer_count = static_cast<int>(std::lround(
            numeric_value(block_decision(arch, sp, b, "layer_count", nullptr), "layer_count")));
        if (block.layer_count < 0) throw ConfigError("negative layer_count");
        if (block.layer_count == 0) {
            // Identity passthrough: no parameters, width unchanged.
            block.out_width = width;
            plan.blocks.push_back(block);
            continue;
        }
        if (base < 1) {
            throw ConfigError("block " + std::to_string(b) +
                              " has no base_width; space is not micro-decodable");
        }
        const double mult =
            numeric_value(block_decision(arch, sp, b, "width_mult", nullptr), "width_mult");
        block.out_width = std::max(1, static_cast<int>(std::lround(base * mult)));
        block.act = parse_activation(
            string_value(block_decision(arch, sp, b, "op_type", nullptr), "op_type"));
        block.skip =
            parse_skip(string_value(block_decision(arch, sp, b, "skip_op", nullptr), "skip_op"));
        block.align_proj = (block.skip == SkipKind::proj) ||
                           ((block.skip == SkipKind::add || block.skip == SkipKind::gate) &&
                            block.in_width != block.out_width);
        const double ratio =
            numeric_value(block_decision(arch, sp, b, "se_ratio", nullptr), "se_ratio");
        if (ratio > 0.0) {
            block.se.enabled = true;
            block.se.hidden = std::max(1, static_cast<int>(std::lround(ratio * block.out_width)));
        }
        width = block.out_width;
        plan.blocks.push_back(block);
    }
    plan.feature_width = width;
    return plan;
}

NetworkPlan plan_from_widths(int input_width, const std::vector<int>& hidden_widths,
                             Activation act) {
    if (input_width < 1) throw ConfigError("input_width must be >= 1");
    NetworkPlan plan;
    plan.input_width = input_width;
    int width = input_width;
    for (int h : hidden_widths) {
        if (h < 1) throw ConfigError("hidden width must be >= 1");
        BlockPlan block;
        block.in_width = width;
        block.out_width = h;
        block.layer_count = 1;
        block.act = act;
        plan.blocks.push_back(block);
        width = h;
    }
    plan.feature_width = width;
    return plan;
}

double plan_mflops(const NetworkPlan& plan) {
    double flops = 0.0;
    for (const auto& block : plan.blocks) {
        if (block.layer_count == 0) continue;
        flops += 2.0 * block.in_width * block.out_width;  // first layer
        for (int l = 1; l < block.layer_count; ++l) {
            flops += 2.0 * block.out_width * block.out_width;
        }
        if (block.se.enabled) flops += 4.0 * block.out_width * block.se.hidden;
        if (block.align_proj) flops += 2.0 * block.in_width * block.out_width;
    }
    return flops / 1e6;
}

int MicroNet::alloc(int n) {
    const int at = static_cast<int>(params_.size());
    params_.resize(params_.size() + static_cast<std::size_t>(n), 0.0);
    return at;
}

MicroNet::MicroNet(const NetworkPlan& plan, int classes, std::uint64_t init_seed)
    : classes_(classes), plan_(plan) {
    if (classes < 2) throw ConfigError("classifier needs at least 2 classes");
    slots_.resize(plan_.blocks.size());
    for (std::size_t b = 0; b < plan_.blocks.size(); ++b) {
        const auto& bp = plan_.blocks[b];
        auto& slot = slots_[b];
        if (bp.layer_count == 0) continue;
        for (int l = 0; l < bp.layer_count; ++l) {
            LayerSlot ls;
            ls.in = (l == 0) ? bp.in_width : bp.out_width;
            ls.out = bp.out_width;
            ls.w = alloc(ls.in * ls.out);
            ls.b = alloc(ls.out);
            slot.layers.push_back(ls);
        }
        if (bp.se.enabled) {
            slot.se_w1 = alloc(bp.out_width * bp.se.hidden);
            slot.se_b1 = alloc(bp.se.hidden);
            slot.se_w2 = alloc(bp.se.hidden * bp.out_width);
            slot.se_b2 = alloc(bp.out_width);
        }
        if (bp.align_proj) slot.align = alloc(bp.in_width * bp.out_width);
        if (bp.skip == SkipKind::gate) slot.gate = alloc(1);
    }
    head_.in = plan_.feature_width;
    head_.out = classes_;
    head_.w = alloc(head_.in * head_.out);
    head_.b = alloc(head_.out);

    // Glorot-uniform weights, zero biases, neutral gates; the fill order
    // matches the slot layout so initialization is seed-stable.
    Rng rng(init_seed);
    auto fill = [&](int at, int in, int out) {
        const double a = std::sqrt(6.0 / (in + out));
        for (int i = 0; i < in * out; ++i) {
            params_[static_cast<std::size_t>(at + i)] = rng.next_uniform(-a, a);
        }
    };
    for (std::size_t b = 0; b < plan_.blocks.size(); ++b) {
        const auto& bp = plan_.blocks[b];
        const auto& slot = slots_[b];
        for (const auto& ls : slot.layers) fill(ls.w, ls.in, ls.out);
        if (bp.se.enabled) {
            fill(slot.se_w1, bp.out_width, bp.se.hidden);
            fill(slot.se_w2, bp.se.hidden, bp.out_width);
        }
        if (slot.align >= 0) fill(slot.align, bp.in_width, bp.out_width);
    }
    fill(head_.w, head_.in, head_.out);

    cache_.resize(plan_.blocks.size());
}

void MicroNet::forward(const std::vector<double>& input) {
    if (input.size() != static_cast<std::size_t>(plan_.input_width)) {
        throw ConfigError("input width mismatch in MicroNet::forward");
    }
    std::vector<double> x = input;
    for (std::size_t b = 0; b < plan_.blocks.size(); ++b) {
        const auto& bp = plan_.blocks[b];
        const auto& slot = slots_[b];
        auto& c = cache_[b];
        c.input = x;
        if (bp.layer_count == 0) {
            c.output = x;
            continue;
        }
        c.pre.assign(static_cast<std::size_t>(bp.layer_count), {});
        c.post.assign(static_cast<std::size_t>(bp.layer_count), {});
        const double* cur = c.input.data();
        for (int l = 0; l < bp.layer_count; ++l) {
            const auto& ls = slot.layers[static_cast<std::size_t>(l)];
            auto& pre = c.pre[static_cast<std::size_t>(l)];
            auto& post = c.post[static_cast<std::size_t>(l)];
            pre.resize(static_cast<std::size_t>(ls.out));
            post.resize(static_cast<std::size_t>(ls.out));
            dense_forward(&params_[static_cast<std::size_t>(ls.w)],
                          &params_[static_cast<std::size_t>(ls.b)], cur, pre.data(), ls.in, ls.out);
            for (int o = 0; o < ls.out; ++o) post[static_cast<std::size_t>(o)] = act_apply(bp.act, pre[static_cast<std::size_t>(o)]);
            cur = post.data();
        }
        const auto& body_pre_se = c.post.back();
        if (bp.se.enabled) {
            c.se_hidden_pre.resize(static_cast<std::size_t>(bp.se.hidden));
            c.se_hidden.resize(static_cast<std::size_t>(bp.se.hidden));
            c.se_gate_pre.resize(static_cast<std::size_t>(bp.out_width));
            c.se_gate.resize(static_cast<std::size_t>(bp.out_width));
            dense_forward(&params_[static_cast<std::size_t>(slot.se_w1)],
                          &params_[static_cast<std::size_t>(slot.se_b1)], body_pre_se.data(),
                          c.se_hidden_pre.data(), bp.out_width, bp.se.hidden);
            for (int i = 0; i < bp.se.hidden; ++i) {
                c.se_hidden[static_cast<std::size_t>(i)] =
                    c.se_hidden_pre[static_cast<std::size_t>(i)] > 0.0
                        ? c.se_hidden_pre[static_cast<std::size_t>(i)]
                        : 0.0;
            }
            dense_forward(&params_[static_cast<std::size_t>(slot.se_w2)],
                          &params_[static_cast<std::size_t>(slot.se_b2)], c.se_hidden.data(),
                          c.se_gate_pre.data(), bp.se.hidden, bp.out_width);
            c.body.resize(static_cast<std::size_t>(bp.out_width));
            for (int o = 0; o < bp.out_width; ++o) {
                c.se_gate[static_cast<std::size_t>(o)] = sigmoid(c.se_gate_pre[static_cast<std::size_t>(o)]);
                c.body[static_cast<std::size_t>(o)] =
                    body_pre_se[static_cast<std::size_t>(o)] * c.se_gate[static_cast<std::size_t>(o)];
            }
        } else {
            c.body = body_pre_se;
        }
        // Skip path.
        if (bp.skip == SkipKind::none) {
            c.output = c.body;
        } else {
            if (slot.align >= 0) {
                c.aligned.resize(static_cast<std::size_t>(bp.out_width));
                dense_forward(&params_[static_cast<std::size_t>(slot.align)], nullptr,
                              c.input.data(), c.aligned.data(), bp.in_width, bp.out_width);
            } else {
                c.aligned = c.input;
            }
            c.output.resize(static_cast<std::size_t>(bp.out_width));
            if (bp.skip == SkipKind::gate) {
                c.gate_value = sigmoid(params_[static_cast<std::size_t>(slot.gate)]);
                for (int o = 0; o < bp.out_width; ++o) {
                    c.output[static_cast<std::size_t>(o)] =
                        c.gate_value * c.body[static_cast<std::size_t>(o)] +
                        (1.0 - c.gate_value) * c.aligned[static_cast<std::size_t>(o)];
                }
            } else {  // add or proj
                for (int o = 0; o < bp.out_width; ++o) {
                    c.output[static_cast<std::size_t>(o)] =
                        c.body[static_cast<std::size_t>(o)] + c.aligned[static_cast<std::size_t>(o)];
                }
            }
        }
        x = c.output;
    }
    features_ = plan_.blocks.empty() ? input : cache_.back().output;
    logits_.resize(static_cast<std::size_t>(classes_));
    dense_forward(&params_[static_cast<std::size_t>(head_.w)],
                  &params_[static_cast<std::size_t>(head_.b)], features_.data(), logits_.data(),
                  head_.in, head_.out);
}

void MicroNet::backward(const std::vector<double>& dlogits, const std::vector<double>& dfeatures,
                        std::vector<double>& grad) {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    std::vector<double> dfeat(static_cast<std::size_t>(plan_.feature_width), 0.0);
    dense_backward(&params_[static_cast<std::size_t>(head_.w)], features_.data(), dlogits.data(),
                   &grad[static_cast<std::size_t>(head_.w)], &grad[static_cast<std::size_t>(head_.b)],
                   dfeat.data(), head_.in, head_.out);
    if (!dfeatures.empty()) {
        for (std::size_t i = 0; i < dfeat.size(); ++i) dfeat[i] += dfeatures[i];
    }

    std::vector<double> dout = std::move(dfeat);
    for (std::size_t bi = plan_.blocks.size(); bi-- > 0;) {
        const auto& bp = plan_.blocks[bi];
        const auto& slot = slots_[bi];
        const auto& c = cache_[bi];
        if (bp.layer_count == 0) continue;  // identity block: dout passes through

        std::vector<double> dbody2(static_cast<std::size_t>(bp.out_width), 0.0);
        std::vector<double> dinput(static_cast<std::size_t>(bp.in_width), 0.0);
        if (bp.skip == SkipKind::none) {
            dbody2 = dout;
        } else {
            std::vector<double> daligned(static_cast<std::size_t>(bp.out_width), 0.0);
            if (bp.skip == SkipKind::gate) {
                const double g = c.gate_value;
                double dg = 0.0;
                for (int o = 0; o < bp.out_width; ++o) {
                    dbody2[static_cast<std::size_t>(o)] = g * dout[static_cast<std::size_t>(o)];
                    daligned[static_cast<std::size_t>(o)] = (1.0 - g) * dout[static_cast<std::size_t>(o)];
                    dg += dout[static_cast<std::size_t>(o)] *
                          (c.body[static_cast<std::size_t>(o)] - c.aligned[static_cast<std::size_t>(o)]);
                }
                grad[static_cast<std::size_t>(slot.gate)] += dg * g * (1.0 - g);
            } else {
                dbody2 = dout;
                daligned = dout;
            }
            if (slot.align >= 0) {
                dense_backward(&params_[static_cast<std::size_t>(slot.align)], c.input.data(),
                               daligned.data(), &grad[static_cast<std::size_t>(slot.align)], nullptr,
                               dinput.data(), bp.in_width, bp.out_width);
            } else {
                for (int i = 0; i < bp.in_width; ++i) dinput[static_cast<std::size_t>(i)] += daligned[static_cast<std::size_t>(i)];
            }
        }

        // SE gating.
        const auto& body_pre_se = c.post.back();
        std::vector<double> dbody(static_cast<std::size_t>(bp.out_width), 0.0);
        if (bp.se.enabled) {
            std::vector<double> dgate_pre(static_cast<std::size_t>(bp.out_width));
            for (int o = 0; o < bp.out_width; ++o) {
                const double g = c.se_gate[static_cast<std::size_t>(o)];
                dbody[static_cast<std::size_t>(o)] = dbody2[static_cast<std::size_t>(o)] * g;
                dgate_pre[static_cast<std::size_t>(o)] =
                    dbody2[static_cast<std::size_t>(o)] * body_pre_se[static_cast<std::size_t>(o)] * g * (1.0 - g);
            }
            std::vector<double> dse_hidden(static_cast<std::size_t>(bp.se.hidden), 0.0);
            dense_backward(&params_[static_cast<std::size_t>(slot.se_w2)], c.se_hidden.data(),
                           dgate_pre.data(), &grad[static_cast<std::size_t>(slot.se_w2)],
                           &grad[static_cast<std::size_t>(slot.se_b2)], dse_hidden.data(),
                           bp.se.hidden, bp.out_width);
            std::vector<double> dse_hidden_pre(static_cast<std::size_t>(bp.se.hidden));
            for (int i = 0; i < bp.se.hidden; ++i) {
                dse_hidden_pre[static_cast<std::size_t>(i)] =
                    c.se_hidden_pre[static_cast<std::size_t>(i)] > 0.0
                        ? dse_hidden[static_cast<std::size_t>(i)]
                        : 0.0;
            }
            dense_backward(&params_[static_cast<std::size_t>(slot.se_w1)], body_pre_se.data(),
                           dse_hidden_pre.data(), &grad[static_cast<std::size_t>(slot.se_w1)],
                           &grad[static_cast<std::size_t>(slot.se_b1)], dbody.data(), bp.out_width,
                           bp.se.hidden);
        } else {
            dbody = dbody2;
        }

        // Body layers, last to first.
        std::vector<double> dpost = std::move(dbody);
        for (int l = bp.layer_count - 1; l >= 0; --l) {
            const auto& ls = slot.layers[static_cast<std::size_t>(l)];
            const auto& pre = c.pre[static_cast<std::size_t>(l)];
            std::vector<double> dpre(static_cast<std::size_t>(ls.out));
            for (int o = 0; o < ls.out; ++o) {
                dpre[static_cast<std::size_t>(o)] =
                    dpost[static_cast<std::size_t>(o)] * act_derivative(bp.act, pre[static_cast<std::size_t>(o)]);
            }
            const double* layer_in =
                (l == 0) ? c.input.data() : c.post[static_cast<std::size_t>(l - 1)].data();
            std::vector<double> dprev(static_cast<std::size_t>(ls.in), 0.0);
            dense_backward(&params_[static_cast<std::size_t>(ls.w)], layer_in, dpre.data(),
                           &grad[static_cast<std::size_t>(ls.w)], &grad[static_cast<std::size_t>(ls.b)],
                           dprev.data(), ls.in, ls.out);
            if (l == 0) {
                for (int i = 0; i < ls.in; ++i) dinput[static_cast<std::size_t>(i)] += dprev[static_cast<std::size_t>(i)];
            } else {
                dpost = std::move(dprev);
            }
        }
        dout = std::move(dinput);
    }
}

}  // namespace kdnas::micro
