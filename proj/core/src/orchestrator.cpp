// SPDX-License-Identifier: Apache-2.0
#include "kdnas/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "kdnas/rng.hpp"

namespace kdnas::orchestrator {

namespace fs = std::filesystem;

namespace {

constexpr char kRunCheckpointMagic[9] = "KDNASRUN";

struct EvalResult {
    double accuracy = 0.0;
    bool diverged = false;
};

// Run-scoped evaluation environment; immutable after construction and
// shared read-only across workers.
class Environment {
public:
    virtual ~Environment() = default;
    virtual EvalResult evaluate(const space::ArchitectureConfig& arch, std::uint64_t seed) const = 0;
    virtual std::string teacher_tag() const = 0;
};

class TabularEnvironment final : public Environment {
public:
    TabularEnvironment(const RunConfig& cfg, const TabularEnvSpec& spec)
        : env_(cfg.space, spec.noise_sigma), tag_(spec.teacher_tag) {
        env_.register_teacher(spec.teacher_tag, spec.teacher_seed);
    }

    EvalResult evaluate(const space::ArchitectureConfig& arch, std::uint64_t seed) const override {
        return {env_.evaluate(arch, tag_, seed), false};
    }

    std::string teacher_tag() const override { return tag_; }

private:
    evaluator::TabularEnv env_;
    std::string tag_;
};

class MicroEnvironment final : public Environment {
public:
    MicroEnvironment(const RunConfig& cfg, const MicroEnvSpec& spec)
        : space_(&cfg.space), spec_(spec), data_(evaluator::make_dataset(spec.task)) {
        if (spec.kd.objective != evaluator::KdObjective::hard_label) {
            teacher_ = std::make_unique<evaluator::TeacherBundle>(spec.task, data_, spec.kd);
        }
    }

    EvalResult evaluate(const space::ArchitectureConfig& arch, std::uint64_t seed) const override {
        const auto result =
            evaluator::train_student(arch, *space_, spec_.task, spec_.kd, data_, teacher_.get(), seed);
        return {result.holdout_accuracy, result.diverged};
    }

    std::string teacher_tag() const override {
        return teacher_ ? spec_.kd.teacher.tag : "none";
    }

private:
    const space::SearchSpaceDef* space_;
    MicroEnvSpec spec_;
    evaluator::Dataset data_;
    std::unique_ptr<evaluator::TeacherBundle> teacher_;
};

std::unique_ptr<Environment> make_environment(const RunConfig& cfg) {
    if (const auto* tab = std::get_if<TabularEnvSpec>(&cfg.env)) {
        return std::make_unique<TabularEnvironment>(cfg, *tab);
    }
    return std::make_unique<MicroEnvironment>(cfg, std::get<MicroEnvSpec>(cfg.env));
}

void write_run_checkpoint(const std::string& path, int generation,
                          const controller::PolicyState& policy) {
    const std::string bytes = policy.serialize();
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot open checkpoint " + tmp);
        out.write(kRunCheckpointMagic, sizeof(kRunCheckpointMagic));
        const std::int32_t gen = generation;
        out.write(reinterpret_cast<const char*>(&gen), sizeof(gen));
        const std::uint64_t len = bytes.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw StorageError("failed writing checkpoint " + tmp);
    }
    fs::rename(tmp, path);
}

std::pair<int, controller::PolicyState> load_run_checkpoint(const std::string& path,
                                                            const space::SearchSpaceDef& sp) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open checkpoint " + path);
    char magic[sizeof(kRunCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kRunCheckpointMagic, sizeof(magic)) != 0) {
        throw StorageError("bad run checkpoint magic");
    }
    std::int32_t gen = 0;
    in.read(reinterpret_cast<char*>(&gen), sizeof(gen));
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string bytes(len, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(len));
    if (!in) throw StorageError("truncated run checkpoint");
    return {static_cast<int>(gen), controller::PolicyState::deserialize(bytes, sp)};
}

void rewrite_metrics_upto(const std::string& path, int last_generation) {
    std::ifstream in(path);
    if (!in) return;
    std::vector<std::string> keep;
    std::string line;
    if (std::getline(in, line)) keep.push_back(line);  // header row
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const int gen = std::atoi(line.c_str());
        if (gen <= last_generation) keep.push_back(line);
    }
    in.close();
    std::ofstream out(path, std::ios::trunc);
    for (const auto& l : keep) out << l << '\n';
}

double cost_value_for(const RunConfig& cfg, double latency_ms, double mflops) {
    return cfg.reward.mode == cost::RewardMode::latency ? latency_ms : mflops;
}

}  // namespace

SearchOutput run_search(const RunConfig& cfg, const std::string& out_dir, int workers_override,
                        bool resume, int max_generations) {
    validate(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const std::string trajectory_path = (fs::path(out_dir) / "trajectory.jsonl").string();
    const std::string checkpoint_path = (fs::path(out_dir) / "policy.ckpt").string();
    const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();

    int start_generation = 0;
    std::unique_ptr<controller::PolicyState> policy;
    std::unique_ptr<store::TrajectoryWriter> writer;
    std::ofstream metrics;

    if (resume) {
        if (!fs::exists(checkpoint_path) || !fs::exists(trajectory_path)) {
            throw StorageError("nothing to resume in " + out_dir);
        }
        // The store's header is authoritative; resuming under an edited
        // config would mix records from two different runs.
        {
            const auto existing = store::TrajectoryStore::load(trajectory_path,
                                                               /*validate_rewards=*/false);
            if (run_config_to_json(existing.config) != run_config_to_json(cfg)) {
                throw ConfigError("resume config does not match the trajectory header in " + out_dir);
            }
        }
        auto [done_gen, restored] = load_run_checkpoint(checkpoint_path, cfg.space);
        policy = std::make_unique<controller::PolicyState>(std::move(restored));
        // Drop any records past the checkpointed generation (a crash can
        // leave a partially appended generation behind).
        store::truncate_to_generation(trajectory_path, cfg, done_gen);
        rewrite_metrics_upto(metrics_path, done_gen);
        start_generation = done_gen + 1;
        writer = std::make_unique<store::TrajectoryWriter>(trajectory_path, cfg, /*truncate=*/false);
        metrics.open(metrics_path, std::ios::app);
    } else {
        policy = std::make_unique<controller::PolicyState>(
            cfg.space, cfg.controller, mix_seed(cfg.run_seed, 0x90110c));
        writer = std::make_unique<store::TrajectoryWriter>(trajectory_path, cfg, /*truncate=*/true);
        metrics.open(metrics_path, std::ios::trunc);
        metrics << "generation,mean_reward,entropy,clip_fraction,value_loss\n";
    }
    if (!metrics) throw StorageError("cannot open metrics file " + metrics_path);

    const auto env = make_environment(cfg);
    const std::string teacher_tag = env->teacher_tag();
    const std::string objective = objective_tag(cfg);

    int workers = workers_override > 0 ? workers_override
                                       : (cfg.workers > 0 ? cfg.workers
                                                          : static_cast<int>(std::max(
                                                                1u, std::thread::hardware_concurrency())));
    workers = std::min(workers, cfg.batch_size);

    SearchOutput out;
    out.trajectory_path = trajectory_path;
    out.checkpoint_path = checkpoint_path;
    out.metrics_path = metrics_path;
    out.generations_completed = start_generation;

    const int stop_after = max_generations >= 0 ? std::min(max_generations, cfg.generations)
                                                : cfg.generations;

    for (int gen = start_generation; gen < stop_after; ++gen) {
        auto batch = policy->sample_batch(cfg.batch_size, mix_seed(cfg.run_seed, 0x5a3c, static_cast<std::uint64_t>(gen)));

        std::vector<analysis::CandidateRecord> records(batch.size());
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto work = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= batch.size()) return;
                try {
                    const auto arch = space::decode(batch[i].decisions, cfg.space);
                    const std::uint64_t seed =
                        candidate_seed(cfg.run_seed, gen, static_cast<int>(i));
                    const EvalResult ev = env->evaluate(arch, seed);
                    analysis::CandidateRecord rec;
                    rec.decisions = arch.decisions;
                    rec.onehot = space::encode_onehot(arch, cfg.space);
                    rec.accuracy = ev.diverged ? 0.0 : ev.accuracy;
                    rec.diverged = ev.diverged;
                    rec.mflops = cost::mflops(arch, cfg.space, cfg.latency.input_width);
                    rec.latency_ms =
                        cost::latency_from_mflops(rec.mflops, cfg.latency, cost::arch_hash(arch));
                    const double cv = cost_value_for(cfg, rec.latency_ms, rec.mflops);
                    if (!(cv > 0.0)) {
                        throw ConfigError(
                            "candidate with non-positive cost; flops-mode rewards need a space "
                            "without zero-cost architectures");
                    }
                    rec.reward = cost::compute_reward(rec.accuracy, cv, cfg.reward);
                    rec.generation = gen;
                    rec.candidate_index = static_cast<int>(i);
                    rec.run_seed = cfg.run_seed;
                    rec.eval_seed = seed;
                    rec.objective = objective;
                    rec.teacher = teacher_tag;
                    records[i] = std::move(rec);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    next.store(batch.size());
                    return;
                }
            }
        };
        if (workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(workers));
            for (int w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        if (first_error) std::rethrow_exception(first_error);

        // Appends stay in candidate order regardless of worker count.
        for (std::size_t i = 0; i < records.size(); ++i) {
            batch[i].reward = records[i].reward;
            batch[i].has_reward = true;
            writer->append(records[i]);
        }
        writer->flush();

        const auto stats = policy->ppo_update(batch);
        metrics << gen << ',' << stats.mean_reward << ',' << stats.entropy << ','
                << stats.clip_fraction << ',' << stats.value_loss << '\n';
        metrics.flush();
        if (!metrics) throw StorageError("failed writing metrics " + metrics_path);

        write_run_checkpoint(checkpoint_path, gen, *policy);
        out.generations_completed = gen + 1;
        out.final_mean_reward = stats.mean_reward;
    }
    return out;
}

std::vector<analysis::CandidateRecord> select_for_finalize(
    const std::vector<analysis::CandidateRecord>& records, double window_lo, double window_hi,
    int k) {
    if (k < 1) throw ConfigError("finalize needs k >= 1");
    std::vector<analysis::CandidateRecord> in_window;
    for (const auto& rec : records) {
        if (rec.latency_ms >= window_lo && rec.latency_ms <= window_hi) in_window.push_back(rec);
    }
    if (in_window.size() < static_cast<std::size_t>(k)) {
        throw InsufficientCandidates("only " + std::to_string(in_window.size()) +
                                     " records inside the latency window, need " + std::to_string(k));
    }
    std::sort(in_window.begin(), in_window.end(),
              [](const analysis::CandidateRecord& a, const analysis::CandidateRecord& b) {
                  if (a.reward != b.reward) return a.reward > b.reward;
                  if (a.generation != b.generation) return a.generation < b.generation;
                  return a.candidate_index < b.candidate_index;
              });
    in_window.resize(static_cast<std::size_t>(k));
    return in_window;
}

FinalizeOutput finalize_top(const store::TrajectoryStore& st, double window_lo, double window_hi,
                            int k, int long_epochs, const std::string& out_dir) {
    const auto* micro = std::get_if<MicroEnvSpec>(&st.config.env);
    if (!micro) {
        throw ConfigError("finalize_top requires a micro_kd run (tabular runs have no trainer)");
    }
    if (long_epochs < 1) throw ConfigError("long_epochs must be >= 1");

    const auto selected = select_for_finalize(st.records, window_lo, window_hi, k);

    evaluator::ProxyTaskSpec long_task = micro->task;
    long_task.epochs = long_epochs;

    evaluator::KDConfig kd_cfg = micro->kd;
    if (kd_cfg.objective == evaluator::KdObjective::hard_label) {
        kd_cfg.objective = evaluator::KdObjective::soft_logit;
    }
    evaluator::KDConfig hard_cfg = micro->kd;
    hard_cfg.objective = evaluator::KdObjective::hard_label;

    const auto data = evaluator::make_dataset(long_task);
    const evaluator::TeacherBundle teacher(long_task, data, kd_cfg);

    FinalizeOutput out;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto arch = space::decode(selected[i].decisions, st.config.space);
        const std::uint64_t seed = mix_seed(st.config.run_seed, 0xf17a1, static_cast<std::uint64_t>(i));
        FinalizeRow row;
        row.candidate = selected[i];
        row.kd_accuracy =
            evaluator::train_student(arch, st.config.space, long_task, kd_cfg, data, &teacher, seed)
                .holdout_accuracy;
        row.hard_accuracy =
            evaluator::train_student(arch, st.config.space, long_task, hard_cfg, data, nullptr, seed)
                .holdout_accuracy;
        out.rows.push_back(std::move(row));
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    out.csv_path = (fs::path(out_dir) / "finalize.csv").string();
    std::ofstream csv(out.csv_path, std::ios::trunc);
    if (!csv) throw StorageError("cannot open " + out.csv_path);
    csv << "rank,generation,candidate_index,latency_ms,mflops,reward,kd_accuracy,hard_accuracy,decisions\n";
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const auto& row = out.rows[i];
        std::ostringstream dec;
        for (std::size_t d = 0; d < row.candidate.decisions.size(); ++d) {
            if (d) dec << ' ';
            dec << row.candidate.decisions[d];
        }
        csv << i << ',' << row.candidate.generation << ',' << row.candidate.candidate_index << ','
            << row.candidate.latency_ms << ',' << row.candidate.mflops << ',' << row.candidate.reward
            << ',' << row.kd_accuracy << ',' << row.hard_accuracy << ',' << dec.str() << '\n';
    }
    csv.flush();
    if (!csv) throw StorageError("failed writing " + out.csv_path);
    return out;
}

}  // namespace kdnas::orchestrator
