// SPDX-License-Identifier: Apache-2.0
#include "kdnas/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "kdnas/rng.hpp"

namespace kdnas::controller {

namespace {

constexpr char kCheckpointMagic[9] = "KDNASPL1";

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax_inplace(std::vector<double>& v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    double sum = 0.0;
    for (auto& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (auto& x : v) x /= sum;
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - mx);
    return mx + std::log(sum);
}

}  // namespace

void validate(const PpoParams& p) {
    if (p.hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
    if (!(p.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (p.clip_ratio < 0.0) throw ConfigError("clip_ratio must be >= 0");
    if (p.entropy_coef < 0.0) throw ConfigError("entropy_coef must be >= 0");
    if (p.value_coef < 0.0) throw ConfigError("value_coef must be >= 0");
    if (p.batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

struct PolicyState::StepCache {
    int x_index = -1;  // one-hot input column, -1 for the zero vector
    std::vector<double> h_prev, z, r, hr, n, h;
    std::vector<double> logits, probs;
    int action = -1;
    double value = 0.0;
};

PolicyState::PolicyState(const space::SearchSpaceDef& sp, PpoParams params, std::uint64_t init_seed)
    : space_copy_(sp), space_id_(sp.identity()), ppo_(params), hidden_(params.hidden_width),
      input_(sp.onehot_length()) {
    validate(ppo_);
    const int H = hidden_;
    const int E = input_;
    auto alloc = [&](int n) {
        const int at = static_cast<int>(params_.size());
        params_.resize(params_.size() + static_cast<std::size_t>(n), 0.0);
        return at;
    };
    wz_ = alloc(H * E);
    wr_ = alloc(H * E);
    wn_ = alloc(H * E);
    uz_ = alloc(H * H);
    ur_ = alloc(H * H);
    un_ = alloc(H * H);
    bz_ = alloc(H);
    br_ = alloc(H);
    bn_ = alloc(H);
    for (int d = 0; d < sp.dim_count(); ++d) {
        const int k = sp.cardinality(d);
        head_w_.push_back(alloc(k * H));
        head_b_.push_back(alloc(k));
    }
    vw_ = alloc(H);
    vb_ = alloc(1);

    // Heads and value stay zero (uniform initial policy); the recurrent
    // cell gets seeded symmetric-uniform weights scaled by 1/sqrt(H).
    Rng rng(mix_seed(init_seed, 0x9011c7));
    const double a = 1.0 / std::sqrt(static_cast<double>(H));
    for (int off : {wz_, wr_, wn_}) {
        for (int i = 0; i < H * E; ++i) params_[static_cast<std::size_t>(off + i)] = rng.next_uniform(-a, a);
    }
    for (int off : {uz_, ur_, un_}) {
        for (int i = 0; i < H * H; ++i) params_[static_cast<std::size_t>(off + i)] = rng.next_uniform(-a, a);
    }

    adam_m_.assign(params_.size(), 0.0);
    adam_v_.assign(params_.size(), 0.0);
}

void PolicyState::forward_step(int /*dim*/, int prev_onehot_index, std::vector<double>& hidden,
                               StepCache* cache) const {
    const int H = hidden_;
    const int E = input_;
    const int x = prev_onehot_index;
    std::vector<double> z(static_cast<std::size_t>(H)), r(static_cast<std::size_t>(H)),
        hr(static_cast<std::size_t>(H)), n(static_cast<std::size_t>(H)),
        h_new(static_cast<std::size_t>(H));

    auto gate_pre = [&](int w_off, int u_off, int b_off, int row) {
        double acc = params_[static_cast<std::size_t>(b_off + row)];
        if (x >= 0) acc += params_[static_cast<std::size_t>(w_off + row * E + x)];
        const std::size_t ubase = static_cast<std::size_t>(u_off + row * H);
        for (int j = 0; j < H; ++j) acc += params_[ubase + static_cast<std::size_t>(j)] * hidden[static_cast<std::size_t>(j)];
        return acc;
    };

    for (int i = 0; i < H; ++i) {
        z[static_cast<std::size_t>(i)] = sigmoid(gate_pre(wz_, uz_, bz_, i));
        r[static_cast<std::size_t>(i)] = sigmoid(gate_pre(wr_, ur_, br_, i));
        hr[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] * hidden[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < H; ++i) {
        double acc = params_[static_cast<std::size_t>(bn_ + i)];
        if (x >= 0) acc += params_[static_cast<std::size_t>(wn_ + i * E + x)];
        const std::size_t ubase = static_cast<std::size_t>(un_ + i * H);
        for (int j = 0; j < H; ++j) acc += params_[ubase + static_cast<std::size_t>(j)] * hr[static_cast<std::size_t>(j)];
        n[static_cast<std::size_t>(i)] = std::tanh(acc);
    }
    for (int i = 0; i < H; ++i) {
        h_new[static_cast<std::size_t>(i)] =
            (1.0 - z[static_cast<std::size_t>(i)]) * n[static_cast<std::size_t>(i)] +
            z[static_cast<std::size_t>(i)] * hidden[static_cast<std::size_t>(i)];
    }
    if (cache) {
        cache->x_index = x;
        cache->h_prev = hidden;
        cache->z = z;
        cache->r = r;
        cache->hr = hr;
        cache->n = n;
        cache->h = h_new;
    }
    hidden = std::move(h_new);
}

void PolicyState::head_logits(int dim, const std::vector<double>& hidden,
                              std::vector<double>& out) const {
    const int H = hidden_;
    const int k = space_copy_.cardinality(dim);
    out.resize(static_cast<std::size_t>(k));
    const int w = head_w_[static_cast<std::size_t>(dim)];
    const int b = head_b_[static_cast<std::size_t>(dim)];
    for (int c = 0; c < k; ++c) {
        double acc = params_[static_cast<std::size_t>(b + c)];
        const std::size_t base = static_cast<std::size_t>(w + c * H);
        for (int j = 0; j < H; ++j) acc += params_[base + static_cast<std::size_t>(j)] * hidden[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(c)] = acc;
    }
}

double PolicyState::value_estimate(const std::vector<double>& hidden) const {
    double acc = params_[static_cast<std::size_t>(vb_)];
    for (int j = 0; j < hidden_; ++j) acc += params_[static_cast<std::size_t>(vw_ + j)] * hidden[static_cast<std::size_t>(j)];
    return acc;
}

std::vector<Trajectory> PolicyState::sample_batch(int n, std::uint64_t rng_seed) const {
    if (n < 1) throw ConfigError("sample_batch needs n >= 1");
    const int D = space_copy_.dim_count();
    std::vector<Trajectory> batch(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
        Rng rng(mix_seed(rng_seed, static_cast<std::uint64_t>(c)));
        Trajectory& traj = batch[static_cast<std::size_t>(c)];
        traj.decisions.resize(static_cast<std::size_t>(D));
        traj.step_log_probs.resize(static_cast<std::size_t>(D));
        traj.step_values.resize(static_cast<std::size_t>(D));
        std::vector<double> hidden(static_cast<std::size_t>(hidden_), 0.0);
        int prev = -1;
        std::vector<double> logits;
        for (int d = 0; d < D; ++d) {
            forward_step(d, prev, hidden, nullptr);
            head_logits(d, hidden, logits);
            const double lse = log_sum_exp(logits);
            std::vector<double> probs = logits;
            softmax_inplace(probs);
            const double u = rng.next_double();
            double cum = 0.0;
            int action = static_cast<int>(probs.size()) - 1;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                cum += probs[i];
                if (u < cum) {
                    action = static_cast<int>(i);
                    break;
                }
            }
            traj.decisions[static_cast<std::size_t>(d)] = action;
            traj.step_log_probs[static_cast<std::size_t>(d)] =
                logits[static_cast<std::size_t>(action)] - lse;
            traj.step_values[static_cast<std::size_t>(d)] = value_estimate(hidden);
            prev = space_copy_.segment_offset(d) + action;
        }
    }
    return batch;
}

double PolicyState::policy_entropy(int n_probe, std::uint64_t rng_seed) const {
    if (n_probe < 1) throw ConfigError("policy_entropy needs n_probe >= 1");
    const int D = space_copy_.dim_count();
    double total = 0.0;
    for (int c = 0; c < n_probe; ++c) {
        Rng rng(mix_seed(rng_seed, static_cast<std::uint64_t>(c)));
        std::vector<double> hidden(static_cast<std::size_t>(hidden_), 0.0);
        int prev = -1;
        std::vector<double> logits;
        for (int d = 0; d < D; ++d) {
            forward_step(d, prev, hidden, nullptr);
            head_logits(d, hidden, logits);
            std::vector<double> probs = logits;
            softmax_inplace(probs);
            double h = 0.0;
            for (double p : probs) {
                if (p > 0.0) h -= p * std::log(p);
            }
            total += h;
            const double u = rng.next_double();
            double cum = 0.0;
            int action = static_cast<int>(probs.size()) - 1;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                cum += probs[i];
                if (u < cum) {
                    action = static_cast<int>(i);
                    break;
                }
            }
            prev = space_copy_.segment_offset(d) + action;
        }
    }
    return total / (static_cast<double>(n_probe) * static_cast<double>(D));
}

double PolicyState::ppo_loss(const std::vector<Trajectory>& batch, std::vector<double>* grad) const {
    const int D = space_copy_.dim_count();
    const int H = hidden_;
    const int E = input_;
    const std::size_t n_traj = batch.size();
    if (n_traj == 0) throw DegenerateBatch("empty batch");
    for (const auto& traj : batch) {
        if (!traj.has_reward || !std::isfinite(traj.reward)) {
            throw NonFiniteReward("every trajectory needs a finite reward");
        }
        if (traj.decisions.size() != static_cast<std::size_t>(D)) {
            throw space::LengthMismatch(traj.decisions.size(), static_cast<std::size_t>(D));
        }
    }

    // Advantages from sampling-time values; normalized as constants.
    std::vector<std::vector<double>> advantages(n_traj);
    {
        double mean = 0.0;
        for (std::size_t t = 0; t < n_traj; ++t) {
            advantages[t].resize(static_cast<std::size_t>(D));
            for (int d = 0; d < D; ++d) {
                advantages[t][static_cast<std::size_t>(d)] =
                    batch[t].reward - batch[t].step_values[static_cast<std::size_t>(d)];
                mean += advantages[t][static_cast<std::size_t>(d)];
            }
        }
        const double count = static_cast<double>(n_traj) * static_cast<double>(D);
        mean /= count;
        if (ppo_.advantage_norm) {
            double var = 0.0;
            for (const auto& tv : advantages) {
                for (double a : tv) var += (a - mean) * (a - mean);
            }
            const double stddev = std::max(std::sqrt(var / count), 1e-8);
            for (auto& tv : advantages) {
                for (auto& a : tv) a = (a - mean) / stddev;
            }
        }
    }

    const double inv_steps = 1.0 / (static_cast<double>(n_traj) * static_cast<double>(D));
    const double eps = ppo_.clip_ratio;
    double surrogate_sum = 0.0;
    double value_sum = 0.0;
    double entropy_sum = 0.0;

    if (grad) grad->assign(params_.size(), 0.0);

    std::vector<StepCache> caches(static_cast<std::size_t>(D));
    for (std::size_t t = 0; t < n_traj; ++t) {
        const Trajectory& traj = batch[t];
        std::vector<double> hidden(static_cast<std::size_t>(H), 0.0);
        int prev = -1;
        for (int d = 0; d < D; ++d) {
            StepCache& c = caches[static_cast<std::size_t>(d)];
            forward_step(d, prev, hidden, &c);
            head_logits(d, hidden, c.logits);
            c.probs = c.logits;
            softmax_inplace(c.probs);
            c.action = traj.decisions[static_cast<std::size_t>(d)];
            if (c.action < 0 || c.action >= space_copy_.cardinality(d)) {
                throw space::IndexOutOfCatalog(d, c.action, space_copy_.cardinality(d));
            }
            c.value = value_estimate(hidden);
            prev = space_copy_.segment_offset(d) + c.action;
        }

        // Output-side gradients per step, then one BPTT sweep.
        std::vector<double> dh(static_cast<std::size_t>(H), 0.0);
        std::vector<std::vector<double>> dlogits_steps(static_cast<std::size_t>(D));
        std::vector<double> dvalue_steps(static_cast<std::size_t>(D), 0.0);
        for (int d = 0; d < D; ++d) {
            const StepCache& c = caches[static_cast<std::size_t>(d)];
            const double lse = log_sum_exp(c.logits);
            const double lp_new = c.logits[static_cast<std::size_t>(c.action)] - lse;
            const double lp_old = traj.step_log_probs[static_cast<std::size_t>(d)];
            const double adv = advantages[t][static_cast<std::size_t>(d)];
            const double ratio = std::exp(lp_new - lp_old);
            const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
            const double s1 = ratio * adv;
            const double s2 = clipped * adv;
            const bool use_s1 = s1 <= s2;  // ties take the unclipped branch
            surrogate_sum += use_s1 ? s1 : s2;

            double entropy = 0.0;
            for (double p : c.probs) {
                if (p > 0.0) entropy -= p * std::log(p);
            }
            entropy_sum += entropy;

            const double verr = c.value - traj.reward;
            value_sum += verr * verr;

            if (grad) {
                const double dlp = use_s1 ? -inv_steps * ratio * adv : 0.0;
                auto& dl = dlogits_steps[static_cast<std::size_t>(d)];
                dl.assign(c.probs.size(), 0.0);
                for (std::size_t i = 0; i < c.probs.size(); ++i) {
                    const double indicator = (static_cast<int>(i) == c.action) ? 1.0 : 0.0;
                    dl[i] = dlp * (indicator - c.probs[i]);
                    // Entropy bonus: dH/du_j = -p_j (log p_j + H).
                    if (ppo_.entropy_coef > 0.0 && c.probs[i] > 0.0) {
                        dl[i] += ppo_.entropy_coef * inv_steps * c.probs[i] *
                                 (std::log(c.probs[i]) + entropy);
                    }
                }
                dvalue_steps[static_cast<std::size_t>(d)] = ppo_.value_coef * 2.0 * verr * inv_steps;
            }
        }

        if (!grad) continue;
        std::vector<double>& g = *grad;
        for (int d = D - 1; d >= 0; --d) {
            const StepCache& c = caches[static_cast<std::size_t>(d)];
            // Head and value gradient into dh.
            const auto& dl = dlogits_steps[static_cast<std::size_t>(d)];
            const int k = static_cast<int>(dl.size());
            const int hw = head_w_[static_cast<std::size_t>(d)];
            const int hb = head_b_[static_cast<std::size_t>(d)];
            for (int ci = 0; ci < k; ++ci) {
                const double gv = dl[static_cast<std::size_t>(ci)];
                if (gv == 0.0) continue;
                g[static_cast<std::size_t>(hb + ci)] += gv;
                const std::size_t base = static_cast<std::size_t>(hw + ci * H);
                for (int j = 0; j < H; ++j) {
                    g[base + static_cast<std::size_t>(j)] += gv * c.h[static_cast<std::size_t>(j)];
                    dh[static_cast<std::size_t>(j)] += gv * params_[base + static_cast<std::size_t>(j)];
                }
            }
            const double dv = dvalue_steps[static_cast<std::size_t>(d)];
            if (dv != 0.0) {
                g[static_cast<std::size_t>(vb_)] += dv;
                for (int j = 0; j < H; ++j) {
                    g[static_cast<std::size_t>(vw_ + j)] += dv * c.h[static_cast<std::size_t>(j)];
                    dh[static_cast<std::size_t>(j)] += dv * params_[static_cast<std::size_t>(vw_ + j)];
                }
            }

            // GRU step backward.
            std::vector<double> dh_prev(static_cast<std::size_t>(H), 0.0);
            std::vector<double> da_n(static_cast<std::size_t>(H)), dhr(static_cast<std::size_t>(H), 0.0);
            std::vector<double> da_r(static_cast<std::size_t>(H)), da_z(static_cast<std::size_t>(H));
            for (int i = 0; i < H; ++i) {
                const double gi = dh[static_cast<std::size_t>(i)];
                const double zi = c.z[static_cast<std::size_t>(i)];
                const double ni = c.n[static_cast<std::size_t>(i)];
                const double dn = gi * (1.0 - zi);
                const double dz = gi * (c.h_prev[static_cast<std::size_t>(i)] - ni);
                dh_prev[static_cast<std::size_t>(i)] += gi * zi;
                da_n[static_cast<std::size_t>(i)] = dn * (1.0 - ni * ni);
                da_z[static_cast<std::size_t>(i)] = dz * zi * (1.0 - zi);
            }
            for (int i = 0; i < H; ++i) {
                const double a = da_n[static_cast<std::size_t>(i)];
                g[static_cast<std::size_t>(bn_ + i)] += a;
                if (c.x_index >= 0) g[static_cast<std::size_t>(wn_ + i * E + c.x_index)] += a;
                const std::size_t ubase = static_cast<std::size_t>(un_ + i * H);
                for (int j = 0; j < H; ++j) {
                    g[ubase + static_cast<std::size_t>(j)] += a * c.hr[static_cast<std::size_t>(j)];
                    dhr[static_cast<std::size_t>(j)] += a * params_[ubase + static_cast<std::size_t>(j)];
                }
            }
            for (int i = 0; i < H; ++i) {
                const double ri = c.r[static_cast<std::size_t>(i)];
                const double dr = dhr[static_cast<std::size_t>(i)] * c.h_prev[static_cast<std::size_t>(i)];
                dh_prev[static_cast<std::size_t>(i)] += dhr[static_cast<std::size_t>(i)] * ri;
                da_r[static_cast<std::size_t>(i)] = dr * ri * (1.0 - ri);
            }
            for (int i = 0; i < H; ++i) {
                const double az = da_z[static_cast<std::size_t>(i)];
                const double ar = da_r[static_cast<std::size_t>(i)];
                g[static_cast<std::size_t>(bz_ + i)] += az;
                g[static_cast<std::size_t>(br_ + i)] += ar;
                if (c.x_index >= 0) {
                    g[static_cast<std::size_t>(wz_ + i * E + c.x_index)] += az;
                    g[static_cast<std::size_t>(wr_ + i * E + c.x_index)] += ar;
                }
                const std::size_t zbase = static_cast<std::size_t>(uz_ + i * H);
                const std::size_t rbase = static_cast<std::size_t>(ur_ + i * H);
                for (int j = 0; j < H; ++j) {
                    g[zbase + static_cast<std::size_t>(j)] += az * c.h_prev[static_cast<std::size_t>(j)];
                    g[rbase + static_cast<std::size_t>(j)] += ar * c.h_prev[static_cast<std::size_t>(j)];
                    dh_prev[static_cast<std::size_t>(j)] +=
                        az * params_[zbase + static_cast<std::size_t>(j)] +
                        ar * params_[rbase + static_cast<std::size_t>(j)];
                }
            }
            dh = std::move(dh_prev);
        }
    }

    const double count = static_cast<double>(n_traj) * static_cast<double>(D);
    const double policy_loss = -surrogate_sum / count;
    const double value_loss = value_sum / count;
    const double entropy = entropy_sum / count;
    return policy_loss + ppo_.value_coef * value_loss - ppo_.entropy_coef * entropy;
}

UpdateStats PolicyState::ppo_update(const std::vector<Trajectory>& batch) {
    if (batch.empty()) throw DegenerateBatch("ppo_update needs a non-empty batch");
    const int D = space_copy_.dim_count();

    std::vector<double> grad;
    ppo_loss(batch, &grad);

    // Stats are computed against the pre-update (old) policy snapshot.
    UpdateStats stats;
    double surrogate_sum = 0.0, value_sum = 0.0, entropy_sum = 0.0, clip_count = 0.0;
    for (const auto& traj : batch) stats.mean_reward += traj.reward;
    stats.mean_reward /= static_cast<double>(batch.size());

    // Recompute the decomposed terms (single forward, no grad) for stats.
    {
        const std::size_t n_traj = batch.size();
        std::vector<std::vector<double>> advantages(n_traj);
        double mean = 0.0;
        for (std::size_t t = 0; t < n_traj; ++t) {
            advantages[t].resize(static_cast<std::size_t>(D));
            for (int d = 0; d < D; ++d) {
                advantages[t][static_cast<std::size_t>(d)] =
                    batch[t].reward - batch[t].step_values[static_cast<std::size_t>(d)];
                mean += advantages[t][static_cast<std::size_t>(d)];
            }
        }
        const double count = static_cast<double>(n_traj) * static_cast<double>(D);
        mean /= count;
        if (ppo_.advantage_norm) {
            double var = 0.0;
            for (const auto& tv : advantages) {
                for (double a : tv) var += (a - mean) * (a - mean);
            }
            const double stddev = std::max(std::sqrt(var / count), 1e-8);
            for (auto& tv : advantages) {
                for (auto& a : tv) a = (a - mean) / stddev;
            }
        }
        for (std::size_t t = 0; t < n_traj; ++t) {
            const auto& traj = batch[t];
            std::vector<double> hidden(static_cast<std::size_t>(hidden_), 0.0);
            int prev = -1;
            std::vector<double> logits;
            for (int d = 0; d < D; ++d) {
                forward_step(d, prev, hidden, nullptr);
                head_logits(d, hidden, logits);
                const double lse = log_sum_exp(logits);
                const int action = traj.decisions[static_cast<std::size_t>(d)];
                const double lp_new = logits[static_cast<std::size_t>(action)] - lse;
                const double ratio = std::exp(lp_new - traj.step_log_probs[static_cast<std::size_t>(d)]);
                const double adv = advantages[t][static_cast<std::size_t>(d)];
                const double clipped = std::clamp(ratio, 1.0 - ppo_.clip_ratio, 1.0 + ppo_.clip_ratio);
                surrogate_sum += std::min(ratio * adv, clipped * adv);
                if (std::abs(ratio - 1.0) > ppo_.clip_ratio) clip_count += 1.0;
                std::vector<double> probs = logits;
                softmax_inplace(probs);
                for (double p : probs) {
                    if (p > 0.0) entropy_sum -= p * std::log(p);
                }
                const double verr = value_estimate(hidden) - traj.reward;
                value_sum += verr * verr;
                prev = space_copy_.segment_offset(d) + action;
            }
        }
        stats.surrogate_loss = -surrogate_sum / count;
        stats.value_loss = value_sum / count;
        stats.entropy = entropy_sum / count;
        stats.clip_fraction = clip_count / count;
    }

    // Adam step.
    ++adam_t_;
    const double b1 = 0.9, b2 = 0.999, aeps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        adam_m_[i] = b1 * adam_m_[i] + (1.0 - b1) * grad[i];
        adam_v_[i] = b2 * adam_v_[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = adam_m_[i] / bc1;
        const double vhat = adam_v_[i] / bc2;
        params_[i] -= ppo_.learning_rate * mhat / (std::sqrt(vhat) + aeps);
    }
    for (double p : params_) {
        if (!std::isfinite(p)) throw Error("policy parameters became non-finite");
    }
    return stats;
}

// --- Checkpointing -----------------------------------------------------------

namespace {

template <typename T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& at) {
    if (at + sizeof(T) > in.size()) throw StorageError("truncated policy checkpoint");
    T v;
    std::memcpy(&v, in.data() + at, sizeof(T));
    at += sizeof(T);
    return v;
}

}  // namespace

std::string PolicyState::serialize() const {
    std::string out;
    out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
    put(out, space_id_);
    put(out, static_cast<std::uint32_t>(hidden_));
    put(out, ppo_.learning_rate);
    put(out, ppo_.clip_ratio);
    put(out, ppo_.entropy_coef);
    put(out, ppo_.value_coef);
    put(out, static_cast<std::uint8_t>(ppo_.advantage_norm ? 1 : 0));
    put(out, static_cast<std::uint32_t>(ppo_.batch_size));
    put(out, static_cast<std::uint64_t>(params_.size()));
    for (double p : params_) put(out, p);
    for (double m : adam_m_) put(out, m);
    for (double v : adam_v_) put(out, v);
    put(out, static_cast<std::int64_t>(adam_t_));
    return out;
}

PolicyState PolicyState::deserialize(const std::string& bytes, const space::SearchSpaceDef& sp) {
    std::size_t at = 0;
    if (bytes.size() < sizeof(kCheckpointMagic) ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
        throw StorageError("bad policy checkpoint magic");
    }
    at = sizeof(kCheckpointMagic);
    const auto space_id = take<std::uint64_t>(bytes, at);
    if (space_id != sp.identity()) {
        throw space::SpaceMismatch("checkpoint was written for a different search space");
    }
    PpoParams p;
    p.hidden_width = static_cast<int>(take<std::uint32_t>(bytes, at));
    p.learning_rate = take<double>(bytes, at);
    p.clip_ratio = take<double>(bytes, at);
    p.entropy_coef = take<double>(bytes, at);
    p.value_coef = take<double>(bytes, at);
    p.advantage_norm = take<std::uint8_t>(bytes, at) != 0;
    p.batch_size = static_cast<int>(take<std::uint32_t>(bytes, at));

    PolicyState policy(sp, p, /*init_seed=*/0);
    const auto count = take<std::uint64_t>(bytes, at);
    if (count != policy.params_.size()) throw StorageError("checkpoint parameter count mismatch");
    for (auto& v : policy.params_) v = take<double>(bytes, at);
    for (auto& v : policy.adam_m_) v = take<double>(bytes, at);
    for (auto& v : policy.adam_v_) v = take<double>(bytes, at);
    policy.adam_t_ = static_cast<long>(take<std::int64_t>(bytes, at));
    return policy;
}

}  // namespace kdnas::controller
