// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "kdnas/analysis.hpp"
#include "kdnas/controller.hpp"
#include "kdnas/cost.hpp"
#include "kdnas/evaluator.hpp"
#include "kdnas/rng.hpp"
#include "kdnas/space.hpp"

using namespace kdnas;

namespace {

const space::SearchSpaceDef& default_space() {
    static const auto sp = space::SearchSpaceDef::default_space();
    return sp;
}

void BM_RandomSampleEncode(benchmark::State& state) {
    const auto& sp = default_space();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        const auto arch = space::random_sample(sp, seed++);
        benchmark::DoNotOptimize(space::encode_onehot(arch, sp));
    }
}
BENCHMARK(BM_RandomSampleEncode);

void BM_Mflops(benchmark::State& state) {
    const auto& sp = default_space();
    const auto arch = space::random_sample(sp, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cost::mflops(arch, sp, 16));
    }
}
BENCHMARK(BM_Mflops);

void BM_TabularEvaluate(benchmark::State& state) {
    const auto& sp = default_space();
    evaluator::TabularEnv env(sp, 0.01);
    env.register_teacher("T", 5);
    const auto arch = space::random_sample(sp, 4);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(env.evaluate(arch, "T", seed++));
    }
}
BENCHMARK(BM_TabularEvaluate);

void BM_SampleBatch(benchmark::State& state) {
    const auto& sp = default_space();
    controller::PpoParams params;
    params.batch_size = static_cast<int>(state.range(0));
    controller::PolicyState policy(sp, params, 1);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(policy.sample_batch(params.batch_size, seed++));
    }
}
BENCHMARK(BM_SampleBatch)->Arg(16)->Arg(64);

void BM_PpoUpdate(benchmark::State& state) {
    const auto& sp = default_space();
    controller::PpoParams params;
    params.batch_size = static_cast<int>(state.range(0));
    controller::PolicyState policy(sp, params, 1);
    evaluator::TabularEnv env(sp, 0.0);
    env.register_teacher("T", 5);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto batch = policy.sample_batch(params.batch_size, seed++);
        for (auto& traj : batch) {
            traj.reward = env.evaluate(space::decode(traj.decisions, sp), "T", 0);
            traj.has_reward = true;
        }
        benchmark::DoNotOptimize(policy.ppo_update(batch));
    }
}
BENCHMARK(BM_PpoUpdate)->Arg(16);

void BM_TrainStudentProxy(benchmark::State& state) {
    const auto& sp = default_space();
    evaluator::ProxyTaskSpec task;
    task.classes = 2;
    task.input_width = 8;
    task.train_size = 160;
    task.epochs = 2;
    const auto data = evaluator::make_dataset(task);
    evaluator::KDConfig hard;
    hard.objective = evaluator::KdObjective::hard_label;
    const auto arch = space::random_sample(sp, 5);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            evaluator::train_student(arch, sp, task, hard, data, nullptr, seed++));
    }
}
BENCHMARK(BM_TrainStudentProxy);

void BM_ParetoFront(benchmark::State& state) {
    Rng rng(9);
    std::vector<analysis::CandidateRecord> records;
    for (int i = 0; i < state.range(0); ++i) {
        analysis::CandidateRecord rec;
        rec.accuracy = rng.next_double();
        rec.latency_ms = rng.next_uniform(5.0, 30.0);
        rec.generation = i;
        records.push_back(std::move(rec));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::pareto_front(records));
    }
}
BENCHMARK(BM_ParetoFront)->Arg(1000)->Arg(10000);

void BM_Project2d(benchmark::State& state) {
    const auto& sp = default_space();
    std::vector<space::OneHotVector> onehots;
    for (int i = 0; i < 500; ++i) {
        onehots.push_back(space::encode_onehot(space::random_sample(sp, static_cast<std::uint64_t>(i)), sp));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::project_2d(onehots));
    }
}
BENCHMARK(BM_Project2d);

}  // namespace

BENCHMARK_MAIN();
