// SPDX-License-Identifier: Apache-2.0
#include "kdnas/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "kdnas/rng.hpp"

namespace kdnas::evaluator {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void validate(const KDConfig& kd) {
    if (!(kd.temperature > 0.0)) throw NonPositiveTemperature("temperature must be > 0");
    if (kd.alpha < 0.0 || kd.alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
    if (!kd.teacher.logits_csv.empty()) {
        if (kd.objective == KdObjective::feature_mse) {
            throw ConfigError("imported teacher logits carry no features; use soft_logit");
        }
        return;  // members are ignored for imported logits
    }
    if (kd.teacher.members.empty()) throw EmptyEnsemble("teacher ensemble must be non-empty");
    if (kd.objective == KdObjective::feature_mse && kd.teacher.members.size() > 1) {
        throw ConfigError("feature_mse distillation supports a single teacher");
    }
}

void validate(const ProxyTaskSpec& task) {
    if (task.classes < 2) throw ConfigError("task needs at least 2 classes");
    if (task.train_size < 4) throw ConfigError("train_size too small");
    if (!(task.holdout_fraction > 0.0 && task.holdout_fraction < 1.0)) {
        throw ConfigError("holdout_fraction must be in (0,1)");
    }
    if (task.dataset == DatasetKind::spirals && task.input_width != 2) {
        throw ConfigError("spirals task requires input_width == 2");
    }
    if (task.input_width < 1) throw ConfigError("input_width must be >= 1");
    if (task.label_noise < 0.0 || task.label_noise >= 1.0) {
        throw ConfigError("label_noise must be in [0,1)");
    }
    if (task.epochs < 1 || task.warmup_epochs < 0) throw ConfigError("bad epoch counts");
    if (task.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(task.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
    if (!(temperature > 0.0)) throw NonPositiveTemperature("temperature must be > 0");
    std::vector<double> out(logits.size());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - mx) / temperature);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

LossValue cross_entropy_loss(const std::vector<double>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw ConfigError("label out of range");
    }
    LossValue lv;
    lv.grad = softmax(logits);
    // -log p[label], computed from the stable log-sum-exp.
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    lv.loss = std::log(sum) + mx - logits[static_cast<std::size_t>(label)];
    lv.grad[static_cast<std::size_t>(label)] -= 1.0;
    return lv;
}

LossValue kd_loss_from_targets(const std::vector<double>& student_logits,
                               const std::vector<double>& teacher_probs, int label,
                               double temperature, double alpha) {
    if (student_logits.size() != teacher_probs.size()) {
        throw LengthMismatch("student and teacher vectors differ in length");
    }
    if (student_logits.size() < 2) throw LengthMismatch("need at least 2 classes");
    if (!(temperature > 0.0)) throw NonPositiveTemperature("temperature must be > 0");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");

    const std::size_t n = student_logits.size();
    const std::vector<double> q = softmax(student_logits, temperature);

    // KL(p || q) with the 0*log(0) = 0 convention.
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = teacher_probs[i];
        if (p > 0.0) kl += p * (std::log(p) - std::log(q[i]));
    }

    LossValue hard = cross_entropy_loss(student_logits, label);

    LossValue lv;
    lv.loss = alpha * temperature * temperature * std::max(kl, 0.0) + (1.0 - alpha) * hard.loss;
    lv.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        lv.grad[i] = alpha * temperature * (q[i] - teacher_probs[i]) + (1.0 - alpha) * hard.grad[i];
    }
    return lv;
}

LossValue kd_loss(const std::vector<double>& student_logits,
                  const std::vector<double>& teacher_logits, int label, double temperature,
                  double alpha) {
    if (student_logits.size() != teacher_logits.size()) {
        throw LengthMismatch("student and teacher logits differ in length");
    }
    return kd_loss_from_targets(student_logits, softmax(teacher_logits, temperature), label,
                                temperature, alpha);
}

LossValue feature_mse_loss(const std::vector<double>& student_feat,
                           const std::vector<double>& teacher_feat) {
    if (student_feat.size() != teacher_feat.size()) {
        throw LengthMismatch("feature vectors differ in length");
    }
    if (student_feat.empty()) throw LengthMismatch("empty feature vectors");
    LossValue lv;
    lv.grad.resize(student_feat.size());
    const double n = static_cast<double>(student_feat.size());
    for (std::size_t i = 0; i < student_feat.size(); ++i) {
        const double d = student_feat[i] - teacher_feat[i];
        lv.loss += d * d / n;
        lv.grad[i] = 2.0 * d / n;
    }
    return lv;
}

std::vector<double> ensemble_soft_targets(const std::vector<std::vector<double>>& teacher_logit_list,
                                          double temperature) {
    if (teacher_logit_list.empty()) throw EmptyEnsemble("empty teacher ensemble");
    const std::size_t n = teacher_logit_list.front().size();
    std::vector<double> mean(n, 0.0);
    for (const auto& logits : teacher_logit_list) {
        if (logits.size() != n) throw LengthMismatch("ensemble members differ in output length");
        const auto p = softmax(logits, temperature);
        for (std::size_t i = 0; i < n; ++i) mean[i] += p[i];
    }
    const double k = static_cast<double>(teacher_logit_list.size());
    for (auto& v : mean) v /= k;
    return mean;
}

// --- Dataset generation --------------------------------------------------

Dataset make_dataset(const ProxyTaskSpec& task) {
    validate(task);
    Dataset data;
    data.input_width = task.input_width;
    data.classes = task.classes;

    Rng rng(mix_seed(task.data_seed, 0xda7a));
    const int total = task.train_size;
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(total));
    std::vector<int> ys(static_cast<std::size_t>(total));

    if (task.dataset == DatasetKind::gaussian) {
        std::vector<std::vector<double>> means(static_cast<std::size_t>(task.classes));
        for (auto& m : means) {
            m.resize(static_cast<std::size_t>(task.input_width));
            for (auto& v : m) v = 2.0 * rng.next_gaussian();
        }
        for (int i = 0; i < total; ++i) {
            const int y = static_cast<int>(rng.next_index(static_cast<std::uint64_t>(task.classes)));
            std::vector<double> x(static_cast<std::size_t>(task.input_width));
            for (int j = 0; j < task.input_width; ++j) {
                x[static_cast<std::size_t>(j)] =
                    means[static_cast<std::size_t>(y)][static_cast<std::size_t>(j)] + rng.next_gaussian();
            }
            xs[static_cast<std::size_t>(i)] = std::move(x);
            ys[static_cast<std::size_t>(i)] = y;
        }
    } else {
        // Interleaved spirals, 3/4 turn, mild radial jitter; gentle enough
        // for the short proxy budget while staying non-linear.
        for (int i = 0; i < total; ++i) {
            const int y = static_cast<int>(rng.next_index(static_cast<std::uint64_t>(task.classes)));
            const double t = 0.2 + 0.8 * rng.next_double();
            const double angle = kTwoPi * (0.75 * t + static_cast<double>(y) / task.classes);
            const double r = t;
            xs[static_cast<std::size_t>(i)] = {r * std::cos(angle) + 0.06 * rng.next_gaussian(),
                                               r * std::sin(angle) + 0.06 * rng.next_gaussian()};
            ys[static_cast<std::size_t>(i)] = y;
        }
    }

    const int holdout = std::max(1, static_cast<int>(std::lround(total * task.holdout_fraction)));
    const int train = total - holdout;
    if (train < 1) throw ConfigError("holdout fraction leaves no training data");
    for (int i = 0; i < train; ++i) {
        data.train_x.push_back(std::move(xs[static_cast<std::size_t>(i)]));
        data.train_y_clean.push_back(ys[static_cast<std::size_t>(i)]);
    }
    for (int i = train; i < total; ++i) {
        data.holdout_x.push_back(std::move(xs[static_cast<std::size_t>(i)]));
        data.holdout_y.push_back(ys[static_cast<std::size_t>(i)]);
    }

    data.train_y = data.train_y_clean;
    if (task.label_noise > 0.0) {
        Rng noise_rng(mix_seed(task.data_seed, 0xf11b));
        for (auto& y : data.train_y) {
            if (noise_rng.next_double() < task.label_noise) {
                const int shift =
                    1 + static_cast<int>(noise_rng.next_index(static_cast<std::uint64_t>(task.classes - 1)));
                y = (y + shift) % task.classes;
            }
        }
    }
    return data;
}

// --- Shared SGD loop -----------------------------------------------------

namespace {

// Momentum SGD with a linear warm-up across the first `warmup_steps`
// minibatches, then a constant rate.
struct SgdTrainer {
    double peak_lr;
    double momentum;
    long warmup_steps;
    long global_step = 0;
    std::vector<double> velocity{};

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        if (velocity.size() != params.size()) velocity.assign(params.size(), 0.0);
        double lr = peak_lr;
        if (global_step < warmup_steps) {
            lr = peak_lr * static_cast<double>(global_step + 1) / static_cast<double>(warmup_steps);
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            velocity[i] = momentum * velocity[i] - lr * grad[i];
            params[i] += velocity[i];
        }
        ++global_step;
    }
};

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_index(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

double micronet_holdout_accuracy(micro::MicroNet& net, const Dataset& data) {
    int correct = 0;
    for (std::size_t i = 0; i < data.holdout_x.size(); ++i) {
        net.forward(data.holdout_x[i]);
        const auto& lg = net.logits();
        const auto best = std::max_element(lg.begin(), lg.end()) - lg.begin();
        if (static_cast<int>(best) == data.holdout_y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.holdout_x.size());
}

// Trains `net` with per-sample loss supplied by `loss_fn(sample, net)`
// returning dlogits/dfeatures. Returns false when training diverged.
template <typename LossFn>
bool run_sgd(micro::MicroNet& net, const Dataset& data, int epochs, int warmup_epochs,
             double peak_lr, double momentum, int batch_size, Rng& rng, LossFn&& loss_fn,
             double* last_epoch_loss) {
    const std::size_t n = data.train_x.size();
    const long steps_per_epoch = static_cast<long>((n + static_cast<std::size_t>(batch_size) - 1) /
                                                   static_cast<std::size_t>(batch_size));
    SgdTrainer sgd{peak_lr, momentum, std::max<long>(1, warmup_epochs * steps_per_epoch)};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::vector<double> grad(net.params().size(), 0.0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(batch_size)) {
            const std::size_t end = std::min(n, at + static_cast<std::size_t>(batch_size));
            const double inv = 1.0 / static_cast<double>(end - at);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = at; k < end; ++k) {
                const std::size_t i = order[k];
                net.forward(data.train_x[i]);
                auto [loss, dlogits, dfeatures] = loss_fn(i, net);
                if (!std::isfinite(loss)) return false;
                epoch_loss += loss * inv;
                for (auto& g : dlogits) g *= inv;
                for (auto& g : dfeatures) g *= inv;
                net.backward(dlogits, dfeatures, grad);
            }
            sgd.step(net.params(), grad);
        }
        if (last_epoch_loss) *last_epoch_loss = epoch_loss / static_cast<double>(steps_per_epoch);
    }
    for (double p : net.params()) {
        if (!std::isfinite(p)) return false;
    }
    return true;
}

struct SampleGrad {
    double loss;
    std::vector<double> dlogits;
    std::vector<double> dfeatures;
};

}  // namespace

// --- Teacher bundle -------------------------------------------------------

namespace {

// CSV of raw logits: one row per train sample, one column per class.
std::vector<std::vector<double>> load_logits_csv(const std::string& path, std::size_t rows,
                                                 int classes) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open teacher logits CSV: " + path);
    std::vector<std::vector<double>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t at = 0;
        while (at <= line.size()) {
            const std::size_t comma = line.find(',', at);
            const std::string cell =
                line.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("bad value '" + cell + "' in teacher logits CSV row " +
                                  std::to_string(out.size()));
            }
            if (comma == std::string::npos) break;
            at = comma + 1;
        }
        if (row.size() != static_cast<std::size_t>(classes)) {
            throw LengthMismatch("teacher logits CSV row " + std::to_string(out.size()) + " has " +
                                 std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(classes));
        }
        out.push_back(std::move(row));
    }
    if (out.size() != rows) {
        throw LengthMismatch("teacher logits CSV has " + std::to_string(out.size()) +
                             " rows, expected " + std::to_string(rows) + " train samples");
    }
    return out;
}

}  // namespace

TeacherBundle::TeacherBundle(const ProxyTaskSpec&, const Dataset& data, const KDConfig& kd) {
    validate(kd);
    tag_ = kd.teacher.tag;

    if (!kd.teacher.logits_csv.empty()) {
        const auto logits = load_logits_csv(kd.teacher.logits_csv, data.train_x.size(), data.classes);
        soft_targets_.resize(data.train_x.size());
        for (std::size_t i = 0; i < logits.size(); ++i) {
            soft_targets_[i] = softmax(logits[i], kd.temperature);
        }
        // No network behind imported logits: no features, no holdout score.
        return;
    }

    std::vector<std::vector<std::vector<double>>> all_logits;  // member -> sample -> logits
    std::vector<double> member_holdout;

    for (std::size_t m = 0; m < kd.teacher.members.size(); ++m) {
        const auto& member = kd.teacher.members[m];
        micro::MicroNet net(micro::plan_from_widths(data.input_width, member.hidden),
                            data.classes, mix_seed(member.seed, 0x7eac4e5));
        Rng rng(mix_seed(member.seed, 0x7ea17a1));
        // Teachers learn the clean labels; label noise is a student-side
        // corruption.
        Dataset clean = data;
        clean.train_y = data.train_y_clean;
        const bool ok = run_sgd(
            net, clean, member.epochs, /*warmup_epochs=*/1, member.learning_rate,
            /*momentum=*/0.9, /*batch_size=*/32, rng,
            [&](std::size_t i, micro::MicroNet& n) {
                auto ce = cross_entropy_loss(n.logits(), clean.train_y[i]);
                return SampleGrad{ce.loss, std::move(ce.grad), {}};
            },
            nullptr);
        if (!ok) throw Error("teacher training diverged; adjust teacher hyperparameters");

        std::vector<std::vector<double>> logits(data.train_x.size());
        for (std::size_t i = 0; i < data.train_x.size(); ++i) {
            net.forward(data.train_x[i]);
            logits[i] = net.logits();
            if (m == 0 && kd.objective == KdObjective::feature_mse) {
                features_.push_back(net.features());
            }
        }
        if (m == 0) feature_width_ = net.feature_width();
        member_holdout.push_back(micronet_holdout_accuracy(net, data));
        all_logits.push_back(std::move(logits));
    }

    soft_targets_.resize(data.train_x.size());
    for (std::size_t i = 0; i < data.train_x.size(); ++i) {
        std::vector<std::vector<double>> per_member;
        per_member.reserve(all_logits.size());
        for (const auto& member : all_logits) per_member.push_back(member[i]);
        soft_targets_[i] = ensemble_soft_targets(per_member, kd.temperature);
    }
    holdout_accuracy_ = *std::max_element(member_holdout.begin(), member_holdout.end());
}

// --- Student training ------------------------------------------------------

ProxyResult train_student(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& sp,
                          const ProxyTaskSpec& task, const KDConfig& kd, const Dataset& data,
                          const TeacherBundle* teacher, std::uint64_t rng_seed) {
    validate(task);
    validate(kd);
    if (kd.objective != KdObjective::hard_label && teacher == nullptr) {
        throw UnknownTeacher("distillation objective requires a teacher bundle");
    }

    const auto plan = micro::decode_plan(arch, sp, data.input_width);
    micro::MicroNet net(plan, data.classes, mix_seed(rng_seed, 0x57d));
    Rng rng(mix_seed(rng_seed, 0x54a));

    // Feature adapter (student width -> teacher width), trained jointly.
    std::vector<double> adapter;
    std::vector<double> adapter_grad;
    SgdTrainer adapter_sgd{task.learning_rate, task.momentum, 1};
    const bool needs_adapter = kd.objective == KdObjective::feature_mse &&
                               teacher->feature_width() != net.feature_width();
    const int t_feat = kd.objective == KdObjective::feature_mse ? teacher->feature_width() : 0;
    const int s_feat = net.feature_width();
    if (needs_adapter) {
        Rng arng(mix_seed(rng_seed, 0xada));
        const double a = std::sqrt(6.0 / (s_feat + t_feat));
        adapter.resize(static_cast<std::size_t>(s_feat * t_feat));
        for (auto& w : adapter) w = arng.next_uniform(-a, a);
        adapter_grad.resize(adapter.size());
        const long steps_per_epoch =
            static_cast<long>((data.train_x.size() + static_cast<std::size_t>(task.batch_size) - 1) /
                              static_cast<std::size_t>(task.batch_size));
        adapter_sgd.warmup_steps = std::max<long>(1, task.warmup_epochs * steps_per_epoch);
    }

    auto loss_fn = [&](std::size_t i, micro::MicroNet& n) -> SampleGrad {
        switch (kd.objective) {
            case KdObjective::hard_label: {
                auto ce = cross_entropy_loss(n.logits(), data.train_y[i]);
                return {ce.loss, std::move(ce.grad), {}};
            }
            case KdObjective::soft_logit: {
                auto lv = kd_loss_from_targets(n.logits(), teacher->soft_targets(i),
                                               data.train_y[i], kd.temperature, kd.alpha);
                return {lv.loss, std::move(lv.grad), {}};
            }
            case KdObjective::feature_mse: {
                const auto& sfeat = n.features();
                const auto& tfeat = teacher->features(i);
                std::vector<double> mapped;
                if (needs_adapter) {
                    mapped.resize(static_cast<std::size_t>(t_feat), 0.0);
                    for (int o = 0; o < t_feat; ++o) {
                        double acc = 0.0;
                        for (int j = 0; j < s_feat; ++j) {
                            acc += adapter[static_cast<std::size_t>(o * s_feat + j)] *
                                   sfeat[static_cast<std::size_t>(j)];
                        }
                        mapped[static_cast<std::size_t>(o)] = acc;
                    }
                }
                const auto& cmp = needs_adapter ? mapped : sfeat;
                auto mse = feature_mse_loss(cmp, tfeat);
                auto ce = cross_entropy_loss(n.logits(), data.train_y[i]);
                std::vector<double> dlogits = std::move(ce.grad);
                for (auto& g : dlogits) g *= (1.0 - kd.alpha);
                std::vector<double> dfeat(static_cast<std::size_t>(s_feat), 0.0);
                if (needs_adapter) {
                    // Gradients flow through the adapter to both sides.
                    for (int o = 0; o < t_feat; ++o) {
                        const double g = kd.alpha * mse.grad[static_cast<std::size_t>(o)];
                        for (int j = 0; j < s_feat; ++j) {
                            adapter_grad[static_cast<std::size_t>(o * s_feat + j)] +=
                                g * sfeat[static_cast<std::size_t>(j)];
                            dfeat[static_cast<std::size_t>(j)] +=
                                g * adapter[static_cast<std::size_t>(o * s_feat + j)];
                        }
                    }
                } else {
                    for (int j = 0; j < s_feat; ++j) {
                        dfeat[static_cast<std::size_t>(j)] = kd.alpha * mse.grad[static_cast<std::size_t>(j)];
                    }
                }
                return {kd.alpha * mse.loss + (1.0 - kd.alpha) * ce.loss, std::move(dlogits),
                        std::move(dfeat)};
            }
        }
        throw ConfigError("unknown objective");
    };

    ProxyResult result;
    double last_loss = 0.0;
    bool ok;
    if (needs_adapter) {
        // Same loop as run_sgd, with an adapter step next to each student
        // step (adapter gradients accumulate over the same minibatch).
        const std::size_t n = data.train_x.size();
        const std::size_t bs = static_cast<std::size_t>(task.batch_size);
        const long steps_per_epoch = static_cast<long>((n + bs - 1) / bs);
        SgdTrainer sgd{task.learning_rate, task.momentum,
                       std::max<long>(1, task.warmup_epochs * steps_per_epoch)};
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::vector<double> grad(net.params().size(), 0.0);
        ok = true;
        for (int epoch = 0; epoch < task.epochs && ok; ++epoch) {
            shuffle_indices(order, rng);
            double epoch_loss = 0.0;
            for (std::size_t at = 0; at < n && ok; at += bs) {
                const std::size_t end = std::min(n, at + bs);
                const double inv = 1.0 / static_cast<double>(end - at);
                std::fill(grad.begin(), grad.end(), 0.0);
                std::fill(adapter_grad.begin(), adapter_grad.end(), 0.0);
                for (std::size_t k = at; k < end; ++k) {
                    const std::size_t i = order[k];
                    net.forward(data.train_x[i]);
                    auto gv = loss_fn(i, net);
                    if (!std::isfinite(gv.loss)) {
                        ok = false;
                        break;
                    }
                    epoch_loss += gv.loss * inv;
                    for (auto& g : gv.dlogits) g *= inv;
                    for (auto& g : gv.dfeatures) g *= inv;
                    net.backward(gv.dlogits, gv.dfeatures, grad);
                }
                if (!ok) break;
                for (auto& g : adapter_grad) g *= inv;
                sgd.step(net.params(), grad);
                adapter_sgd.step(adapter, adapter_grad);
            }
            last_loss = epoch_loss / static_cast<double>(steps_per_epoch);
        }
        if (ok) {
            for (double p : net.params()) {
                if (!std::isfinite(p)) ok = false;
            }
        }
    } else {
        ok = run_sgd(net, data, task.epochs, task.warmup_epochs, task.learning_rate, task.momentum,
                     task.batch_size, rng, loss_fn, &last_loss);
    }

    if (!ok) {
        result.holdout_accuracy = 0.0;
        result.final_train_loss = std::numeric_limits<double>::quiet_NaN();
        result.diverged = true;
        return result;
    }
    result.holdout_accuracy = micronet_holdout_accuracy(net, data);
    result.final_train_loss = last_loss;
    return result;
}

ProxyResult train_student(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& sp,
                          const ProxyTaskSpec& task, const KDConfig& kd, std::uint64_t rng_seed) {
    const Dataset data = make_dataset(task);
    if (kd.objective == KdObjective::hard_label) {
        return train_student(arch, sp, task, kd, data, nullptr, rng_seed);
    }
    const TeacherBundle teacher(task, data, kd);
    return train_student(arch, sp, task, kd, data, &teacher, rng_seed);
}

// --- Tabular environment ----------------------------------------------------

TabularEnv::TabularEnv(const space::SearchSpaceDef& sp, double noise_sigma)
    : space_(&sp), noise_sigma_(noise_sigma) {
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
}

void TabularEnv::register_teacher(const std::string& tag, std::uint64_t theta_seed) {
    // Hidden preference: each dimension ranks its catalog values on equally
    // spaced levels in [-1, 1], permuted by the seed. Every dimension gets
    // the same decisive contrast and a unique preferred value, so teacher
    // identity (not run-to-run sampling noise) determines the optimum.
    Rng rng(mix_seed(theta_seed, 0x7e7a));
    std::vector<double> theta(static_cast<std::size_t>(space_->onehot_length()));
    for (int d = 0; d < space_->dim_count(); ++d) {
        const int k = space_->cardinality(d);
        std::vector<double> levels(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            levels[static_cast<std::size_t>(i)] =
                k == 1 ? 0.0 : -1.0 + 2.0 * i / static_cast<double>(k - 1);
        }
        for (std::size_t i = levels.size(); i > 1; --i) {
            std::swap(levels[i - 1], levels[static_cast<std::size_t>(rng.next_index(i))]);
        }
        for (int v = 0; v < k; ++v) {
            theta[static_cast<std::size_t>(space_->segment_offset(d) + v)] =
                levels[static_cast<std::size_t>(v)];
        }
    }
    register_teacher_theta(tag, std::move(theta));
}

void TabularEnv::register_teacher_theta(const std::string& tag, std::vector<double> theta) {
    if (theta.size() != static_cast<std::size_t>(space_->onehot_length())) {
        throw LengthMismatch("theta length must equal the one-hot length");
    }
    for (auto& entry : teachers_) {
        if (entry.first == tag) {
            entry.second = std::move(theta);
            return;
        }
    }
    teachers_.emplace_back(tag, std::move(theta));
}

bool TabularEnv::has_teacher(const std::string& tag) const {
    for (const auto& entry : teachers_) {
        if (entry.first == tag) return true;
    }
    return false;
}

const std::vector<double>& TabularEnv::theta(const std::string& tag) const {
    for (const auto& entry : teachers_) {
        if (entry.first == tag) return entry.second;
    }
    throw UnknownTeacher("teacher '" + tag + "' is not registered");
}

double TabularEnv::evaluate(const space::ArchitectureConfig& arch, const std::string& teacher_tag,
                            std::uint64_t noise_seed) const {
    if (arch.space_id != space_->identity()) {
        throw space::SpaceMismatch("architecture was decoded against a different search space");
    }
    const auto& th = theta(teacher_tag);
    double score = 0.0;
    for (int d = 0; d < space_->dim_count(); ++d) {
        score += th[static_cast<std::size_t>(space_->segment_offset(d) +
                                             arch.decisions[static_cast<std::size_t>(d)])];
    }
    score /= std::sqrt(static_cast<double>(space_->onehot_length()));
    double acc = 1.0 / (1.0 + std::exp(-score));
    if (noise_sigma_ > 0.0) {
        std::uint64_t h = noise_seed;
        for (int d : arch.decisions) h = mix_seed(h, static_cast<std::uint64_t>(d) + 1);
        Rng rng(h);
        acc += noise_sigma_ * rng.next_gaussian();
    }
    return std::clamp(acc, 1e-12, 1.0 - 1e-12);
}

}  // namespace kdnas::evaluator
