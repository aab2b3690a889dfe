// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kdnas/micro.hpp"
#include "kdnas/space.hpp"

namespace kdnas::evaluator {

class NonPositiveTemperature : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class LengthMismatch : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class EmptyEnsemble : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class UnknownTeacher : public ConfigError {
public:
    using ConfigError::ConfigError;
};

enum class KdObjective { soft_logit, feature_mse, hard_label };

// One frozen teacher: a trained layer stack fully specified by seed and
// hyperparameters (no external weight files).
struct TeacherMemberSpec {
    std::uint64_t seed = 1;
    std::vector<int> hidden = {64, 64};
    int epochs = 30;
    double learning_rate = 0.05;
};

struct TeacherSpec {
    std::vector<TeacherMemberSpec> members = {TeacherMemberSpec{}};  // >1 = ensemble
    std::string tag = "teacher";
    // When set, per-sample teacher logits come from this CSV (one row per
    // train sample, one column per class) instead of training members.
    // Only the soft-logit objective is supported for imported logits.
    std::string logits_csv;
};

struct KDConfig {
    double temperature = 1.0;
    double alpha = 0.9;
    KdObjective objective = KdObjective::soft_logit;
    TeacherSpec teacher;
};

void validate(const KDConfig& kd);

enum class DatasetKind { gaussian, spirals };

// Seeded synthetic classification task. Holdout labels are always clean;
// label_noise flips a fraction of the train labels only.
struct ProxyTaskSpec {
    DatasetKind dataset = DatasetKind::gaussian;
    int classes = 2;
    int input_width = 16;  // spirals force 2
    int train_size = 768;
    double holdout_fraction = 0.25;
    double label_noise = 0.0;
    std::uint64_t data_seed = 1;
    int epochs = 5;
    int warmup_epochs = 1;
    double learning_rate = 0.1;
    double momentum = 0.9;
    int batch_size = 32;
};

void validate(const ProxyTaskSpec& task);

struct Dataset {
    int input_width = 0;
    int classes = 0;
    std::vector<std::vector<double>> train_x;
    std::vector<int> train_y;        // possibly noise-flipped
    std::vector<int> train_y_clean;  // pre-flip labels
    std::vector<std::vector<double>> holdout_x;
    std::vector<int> holdout_y;
};

Dataset make_dataset(const ProxyTaskSpec& task);

// --- Loss kernels -----------------------------------------------------

struct LossValue {
    double loss = 0.0;
    std::vector<double> grad;  // w.r.t. student logits / features
};

// alpha * tau^2 * KL(softmax(t/tau) || softmax(s/tau))
//   + (1-alpha) * CE(softmax(s), onehot(label)).
// The tau^2 factor keeps the soft-term gradient scale tau-invariant at
// matched logits.
LossValue kd_loss(const std::vector<double>& student_logits,
                  const std::vector<double>& teacher_logits, int label, double temperature,
                  double alpha);

// Same objective with precomputed (possibly ensemble-averaged) tempered
// teacher probabilities.
LossValue kd_loss_from_targets(const std::vector<double>& student_logits,
                               const std::vector<double>& teacher_probs, int label,
                               double temperature, double alpha);

// Mean squared error over dimensions; gradient w.r.t. the student vector.
LossValue feature_mse_loss(const std::vector<double>& student_feat,
                           const std::vector<double>& teacher_feat);

// Mean of the per-teacher tempered softmax distributions; sums to 1.
std::vector<double> ensemble_soft_targets(const std::vector<std::vector<double>>& teacher_logit_list,
                                          double temperature);

std::vector<double> softmax(const std::vector<double>& logits, double temperature = 1.0);

// Plain cross-entropy against a hard label (loss and dlogits).
LossValue cross_entropy_loss(const std::vector<double>& logits, int label);

// --- Micro KD environment ----------------------------------------------

struct ProxyResult {
    double holdout_accuracy = 0.0;
    double final_train_loss = 0.0;
    bool diverged = false;
};

// Frozen teacher bundle for a task: trained members plus cached train-set
// targets. Immutable after construction; shared across worker threads.
class TeacherBundle {
public:
    TeacherBundle(const ProxyTaskSpec& task, const Dataset& data, const KDConfig& kd);

    const std::string& tag() const { return tag_; }
    int feature_width() const { return feature_width_; }
    // Tempered target distribution for train sample i (soft-logit mode).
    const std::vector<double>& soft_targets(std::size_t i) const { return soft_targets_[i]; }
    // Penultimate-layer features for train sample i (feature-MSE mode).
    const std::vector<double>& features(std::size_t i) const { return features_[i]; }
    double holdout_accuracy() const { return holdout_accuracy_; }

private:
    std::string tag_;
    int feature_width_ = 0;
    std::vector<std::vector<double>> soft_targets_;
    std::vector<std::vector<double>> features_;
    double holdout_accuracy_ = 0.0;
};

// Trains a fresh student (no weight sharing) on the proxy task with the
// configured objective and returns its holdout accuracy. Deterministic in
// (arch, task, kd, seed); training divergence maps to accuracy 0 with the
// diverged flag set.
ProxyResult train_student(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& space,
                          const ProxyTaskSpec& task, const KDConfig& kd, std::uint64_t rng_seed);

// Variant reusing a prepared dataset + teacher bundle (the search loop
// builds them once and shares them across candidates).
ProxyResult train_student(const space::ArchitectureConfig& arch, const space::SearchSpaceDef& space,
                          const ProxyTaskSpec& task, const KDConfig& kd, const Dataset& data,
                          const TeacherBundle* teacher, std::uint64_t rng_seed);

// --- Tabular environment -----------------------------------------------

// Deterministic teacher-preference surrogate: accuracy =
// sigmoid(theta . onehot / sqrt(E)) + seeded noise, clamped to (0,1).
// Different teacher seeds induce different optimal architectures.
class TabularEnv {
public:
    explicit TabularEnv(const space::SearchSpaceDef& space, double noise_sigma = 0.01);

    void register_teacher(const std::string& tag, std::uint64_t theta_seed);
    void register_teacher_theta(const std::string& tag, std::vector<double> theta);
    bool has_teacher(const std::string& tag) const;
    const std::vector<double>& theta(const std::string& tag) const;

    double evaluate(const space::ArchitectureConfig& arch, const std::string& teacher_tag,
                    std::uint64_t noise_seed) const;

    double noise_sigma() const { return noise_sigma_; }

private:
    const space::SearchSpaceDef* space_;
    double noise_sigma_;
    std::vector<std::pair<std::string, std::vector<double>>> teachers_;
};

}  // namespace kdnas::evaluator
