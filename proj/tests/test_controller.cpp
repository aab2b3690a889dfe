// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "kdnas/controller.hpp"
#include "kdnas/evaluator.hpp"
#include "kdnas/rng.hpp"
#include "kdnas/space.hpp"

using namespace kdnas;
using namespace kdnas::controller;
using kdnas::space::CatalogValue;
using kdnas::space::DimensionDef;
using kdnas::space::SearchSpaceDef;

namespace {

SearchSpaceDef bandit_space() {
    return SearchSpaceDef("bandit",
                          {space::BlockDef{0, {DimensionDef{"arm", {CatalogValue{0.0}, CatalogValue{1.0}}}}}});
}

SearchSpaceDef probe_space() {
    return SearchSpaceDef(
        "probe", {space::BlockDef{0,
                                  {DimensionDef{"a", {CatalogValue{0.0}, CatalogValue{1.0}, CatalogValue{2.0},
                                                      CatalogValue{3.0}}},
                                   DimensionDef{"b", {CatalogValue{0.0}, CatalogValue{1.0}, CatalogValue{2.0}}},
                                   DimensionDef{"c", {CatalogValue{0.0}, CatalogValue{1.0}}}}}});
}

// Exact P(arm 0) for the 2-arm bandit: a single sampled step gives the
// chosen arm's log-probability.
double arm0_probability(const PolicyState& policy) {
    const auto batch = policy.sample_batch(1, 424242);
    const double p_sampled = std::exp(batch[0].step_log_probs[0]);
    return batch[0].decisions[0] == 0 ? p_sampled : 1.0 - p_sampled;
}

std::vector<Trajectory> bandit_batch(const PolicyState& policy, int n, std::uint64_t seed) {
    auto batch = policy.sample_batch(n, seed);
    for (auto& traj : batch) {
        traj.reward = traj.decisions[0] == 0 ? 1.0 : 0.0;
        traj.has_reward = true;
    }
    return batch;
}

}  // namespace

TEST_CASE("fresh policy samples uniformly (3 sigma over 10k samples)") {
    const auto sp = probe_space();
    PpoParams params;
    params.hidden_width = 16;
    PolicyState policy(sp, params, 9);
    const int n = 10000;
    const auto batch = policy.sample_batch(n, 31337);
    for (int d = 0; d < sp.dim_count(); ++d) {
        std::vector<int> counts(static_cast<std::size_t>(sp.cardinality(d)), 0);
        for (const auto& traj : batch) ++counts[static_cast<std::size_t>(traj.decisions[static_cast<std::size_t>(d)])];
        const double k = sp.cardinality(d);
        const double expected = n / k;
        const double sigma = std::sqrt(n * (1.0 / k) * (1.0 - 1.0 / k));
        for (int c : counts) CHECK(std::abs(c - expected) <= 3.0 * sigma);
    }
}

TEST_CASE("sampling is deterministic in (policy, seed)") {
    const auto sp = probe_space();
    PpoParams params;
    params.hidden_width = 16;
    PolicyState policy(sp, params, 3);
    const auto a = policy.sample_batch(16, 777);
    const auto b = policy.sample_batch(16, 777);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].decisions == b[i].decisions);
        CHECK(a[i].step_log_probs == b[i].step_log_probs);
        CHECK(a[i].step_values == b[i].step_values);
    }
    const auto c = policy.sample_batch(16, 778);
    bool any_differ = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_differ |= !(a[i].decisions == c[i].decisions);
    CHECK(any_differ);
}

TEST_CASE("trajectory invariants: log-probs non-positive, lengths equal D") {
    const auto sp = probe_space();
    PpoParams params;
    params.hidden_width = 8;
    PolicyState policy(sp, params, 4);
    for (const auto& traj : policy.sample_batch(64, 5)) {
        REQUIRE(traj.decisions.size() == 3);
        REQUIRE(traj.step_log_probs.size() == 3);
        REQUIRE(traj.step_values.size() == 3);
        for (double lp : traj.step_log_probs) REQUIRE(lp <= 0.0);
    }
}

TEST_CASE("saturated heads sample index 0 everywhere") {
    const auto sp = probe_space();
    PpoParams params;
    params.hidden_width = 8;
    PolicyState policy(sp, params, 1);
    auto& p = policy.parameters();
    for (int d = 0; d < sp.dim_count(); ++d) {
        const int off = policy.head_bias_offset(d);
        p[static_cast<std::size_t>(off)] = 10.0;
        for (int v = 1; v < sp.cardinality(d); ++v) p[static_cast<std::size_t>(off + v)] = -10.0;
    }
    for (const auto& traj : policy.sample_batch(1000, 2)) {
        for (int d : traj.decisions) REQUIRE(d == 0);
    }
    CHECK(policy.policy_entropy(200, 3) < 1e-3);
}

TEST_CASE("policy entropy of the uniform policy is mean ln k") {
    const auto sp = probe_space();
    PpoParams params;
    params.hidden_width = 8;
    PolicyState policy(sp, params, 1);
    const double expected = (std::log(4.0) + std::log(3.0) + std::log(2.0)) / 3.0;
    CHECK(policy.policy_entropy(50, 1) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(policy.policy_entropy(50, 1) >= 0.0);
}

TEST_CASE("zero-advantage batch leaves the policy unchanged when entropy is off") {
    const auto sp = probe_space();
    PpoParams params;
    params.hidden_width = 8;
    params.entropy_coef = 0.0;
    PolicyState policy(sp, params, 12);
    auto batch = policy.sample_batch(8, 9);
    for (auto& traj : batch) {
        // Fresh value head predicts 0; reward 0 means zero advantage and a
        // perfectly regressed value head.
        traj.reward = 0.0;
        traj.has_reward = true;
    }
    const auto before = policy.parameters();
    const auto stats = policy.ppo_update(batch);
    CHECK(policy.parameters() == before);
    CHECK(stats.mean_reward == 0.0);

    // With an entropy bonus the same batch does move the heads.
    params.entropy_coef = 0.01;
    PolicyState policy2(sp, params, 12);
    auto batch2 = policy2.sample_batch(8, 9);
    for (auto& traj : batch2) {
        traj.reward = 0.0;
        traj.has_reward = true;
    }
    const auto before2 = policy2.parameters();
    policy2.ppo_update(batch2);
    CHECK(policy2.parameters() != before2);
}

TEST_CASE("ppo_update rejects degenerate input") {
    const auto sp = bandit_space();
    PpoParams params;
    params.hidden_width = 8;
    PolicyState policy(sp, params, 1);
    CHECK_THROWS_AS(policy.ppo_update({}), DegenerateBatch);
    auto batch = policy.sample_batch(2, 1);
    batch[0].reward = std::numeric_limits<double>::quiet_NaN();
    batch[0].has_reward = true;
    batch[1].reward = 1.0;
    batch[1].has_reward = true;
    CHECK_THROWS_AS(policy.ppo_update(batch), NonFiniteReward);
}

TEST_CASE("one update on the 2-arm bandit strictly increases P(arm 0)") {
    const auto sp = bandit_space();
    PpoParams params;
    params.hidden_width = 8;
    params.learning_rate = 0.02;
    PolicyState policy(sp, params, 21);
    const double before = arm0_probability(policy);
    CHECK(before == doctest::Approx(0.5).epsilon(1e-12));
    policy.ppo_update(bandit_batch(policy, 64, 5));
    CHECK(arm0_probability(policy) > before);
}

TEST_CASE("with eps = 0 the update reduces to vanilla policy gradient (hand-computed)") {
    const auto sp = bandit_space();
    PpoParams params;
    params.hidden_width = 8;
    params.clip_ratio = 0.0;
    params.entropy_coef = 0.0;
    params.value_coef = 0.0;
    params.advantage_norm = false;
    PolicyState policy(sp, params, 33);

    const auto batch = bandit_batch(policy, 32, 17);
    std::vector<double> grad;
    policy.ppo_loss(batch, &grad);

    // Fresh policy: probabilities are exactly (1/2, 1/2), values are 0, so
    // dL/dbias_j = -(1/N) sum_i R_i (1{a_i = j} - 1/2).
    const double n = static_cast<double>(batch.size());
    double hand0 = 0.0, hand1 = 0.0;
    for (const auto& traj : batch) {
        const double r = traj.reward;
        hand0 -= r * ((traj.decisions[0] == 0 ? 1.0 : 0.0) - 0.5) / n;
        hand1 -= r * ((traj.decisions[0] == 1 ? 1.0 : 0.0) - 0.5) / n;
    }
    const int off = policy.head_bias_offset(0);
    CHECK(grad[static_cast<std::size_t>(off)] == doctest::Approx(hand0).epsilon(1e-6));
    CHECK(grad[static_cast<std::size_t>(off + 1)] == doctest::Approx(hand1).epsilon(1e-6));

    // At ratio == 1 a nonzero clip range gives the identical gradient.
    PpoParams clipped = params;
    clipped.clip_ratio = 0.2;
    PolicyState policy2(sp, clipped, 33);
    std::vector<double> grad2;
    policy2.ppo_loss(batch, &grad2);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        REQUIRE(grad[i] == doctest::Approx(grad2[i]).epsilon(1e-12));
    }
}

TEST_CASE("200 generations on the 2-arm bandit reach P(arm 0) > 0.95 on 10 seeds") {
    const auto sp = bandit_space();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PpoParams params;
        params.hidden_width = 8;
        params.learning_rate = 0.02;
        params.entropy_coef = 0.001;
        params.batch_size = 32;
        PolicyState policy(sp, params, seed);
        for (int gen = 0; gen < 200; ++gen) {
            policy.ppo_update(
                bandit_batch(policy, params.batch_size, mix_seed(seed, static_cast<std::uint64_t>(gen))));
        }
        REQUIRE(arm0_probability(policy) > 0.95);
    }
}

TEST_CASE("ppo loss gradient matches central finite differences (H=4, D=2)") {
    const auto sp = SearchSpaceDef(
        "mini", {space::BlockDef{0,
                                 {DimensionDef{"a", {CatalogValue{0.0}, CatalogValue{1.0}, CatalogValue{2.0}}},
                                  DimensionDef{"b", {CatalogValue{0.0}, CatalogValue{1.0}}}}}});
    PpoParams params;
    params.hidden_width = 4;
    params.clip_ratio = 0.2;
    params.entropy_coef = 0.05;
    params.value_coef = 0.5;
    params.advantage_norm = true;
    PolicyState policy(sp, params, 8);

    auto batch = policy.sample_batch(6, 123);
    Rng rng(55);
    for (auto& traj : batch) {
        traj.reward = rng.next_uniform(0.0, 1.0);
        traj.has_reward = true;
    }
    // Perturb the parameters after sampling so the importance ratios move
    // off 1 and the clipped branches get exercised.
    for (auto& p : policy.parameters()) p += 0.05 * rng.next_gaussian();

    std::vector<double> grad;
    const double loss0 = policy.ppo_loss(batch, &grad);
    CHECK(std::isfinite(loss0));

    const double h = 1e-6;
    auto& parameters = policy.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        const double keep = parameters[i];
        parameters[i] = keep + h;
        const double up = policy.ppo_loss(batch, nullptr);
        parameters[i] = keep - h;
        const double down = policy.ppo_loss(batch, nullptr);
        parameters[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max(std::abs(grad[i]) + std::abs(numeric), 1e-6);
        worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("policy checkpoints round-trip") {
    const auto sp = probe_space();
    PpoParams params;
    params.hidden_width = 8;
    PolicyState policy(sp, params, 77);
    auto warmup = policy.sample_batch(8, 3);
    for (auto& traj : warmup) {
        traj.reward = traj.decisions[0] == 0 ? 1.0 : 0.2;
        traj.has_reward = true;
    }
    policy.ppo_update(warmup);

    const auto bytes = policy.serialize();
    auto restored = PolicyState::deserialize(bytes, sp);
    CHECK(restored.parameters() == policy.parameters());

    const auto a = policy.sample_batch(8, 5);
    const auto b = restored.sample_batch(8, 5);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].decisions == b[i].decisions);

    // Optimizer state must survive too: one more identical update keeps
    // both policies in lockstep.
    auto batch = policy.sample_batch(8, 9);
    for (auto& traj : batch) {
        traj.reward = 0.5;
        traj.has_reward = true;
    }
    policy.ppo_update(batch);
    restored.ppo_update(batch);
    CHECK(restored.parameters() == policy.parameters());

    CHECK_THROWS_AS(PolicyState::deserialize(bytes, bandit_space()), space::SpaceMismatch);
}

TEST_CASE("mean reward improves monotonically on the tabular environment (window 50)") {
    // Toy space, deterministic tabular rewards; smoothed per-generation
    // mean rewards should be non-decreasing in >= 90% of windows pooled
    // over 5 seeds.
    const auto sp = SearchSpaceDef(
        "toy4", {space::BlockDef{0,
                                 {DimensionDef{"a", {CatalogValue{0.0}, CatalogValue{1.0}, CatalogValue{2.0}}},
                                  DimensionDef{"b", {CatalogValue{0.0}, CatalogValue{1.0}, CatalogValue{2.0}}},
                                  DimensionDef{"c", {CatalogValue{0.0}, CatalogValue{1.0}, CatalogValue{2.0}}},
                                  DimensionDef{"d", {CatalogValue{0.0}, CatalogValue{1.0}, CatalogValue{2.0}}}}}});
    evaluator::TabularEnv env(sp, /*noise_sigma=*/0.0);
    env.register_teacher("T", 5);

    int up = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PpoParams params;
        params.hidden_width = 32;
        params.learning_rate = 0.02;
        params.entropy_coef = 0.002;
        params.batch_size = 16;
        PolicyState policy(sp, params, seed);
        std::vector<double> gen_means;
        for (int gen = 0; gen < 300; ++gen) {
            auto batch = policy.sample_batch(params.batch_size,
                                             mix_seed(seed, static_cast<std::uint64_t>(gen), 1));
            double mean = 0.0;
            for (auto& traj : batch) {
                const auto arch = space::decode(traj.decisions, sp);
                traj.reward = env.evaluate(arch, "T", 0);
                traj.has_reward = true;
                mean += traj.reward;
            }
            gen_means.push_back(mean / batch.size());
            policy.ppo_update(batch);
        }
        const std::size_t w = 50;
        std::vector<double> smoothed;
        for (std::size_t i = 0; i + w <= gen_means.size(); ++i) {
            smoothed.push_back(std::accumulate(gen_means.begin() + static_cast<long>(i),
                                               gen_means.begin() + static_cast<long>(i + w), 0.0) /
                               static_cast<double>(w));
        }
        for (std::size_t i = 0; i + 1 < smoothed.size(); ++i) {
            ++total;
            if (smoothed[i + 1] >= smoothed[i] - 1e-12) ++up;
        }
    }
    CHECK(static_cast<double>(up) / total >= 0.9);
}
