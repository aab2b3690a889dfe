// SPDX-License-Identifier: Apache-2.0
#include "kdnas/store.hpp"

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

namespace kdnas::store {

using nlohmann::json;

namespace {

std::string onehot_to_bitstring(const space::OneHotVector& v) {
    std::string s(v.bits.size(), '0');
    for (std::size_t i = 0; i < v.bits.size(); ++i) {
        if (v.bits[i]) s[i] = '1';
    }
    return s;
}

space::OneHotVector bitstring_to_onehot(const std::string& s) {
    space::OneHotVector v;
    v.bits.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') throw StorageError("bad one-hot bitstring");
        v.bits[i] = s[i] == '1' ? 1 : 0;
    }
    return v;
}

}  // namespace

std::string header_line(const RunConfig& cfg) {
    json j;
    j["type"] = "header";
    j["schema_version"] = kTrajectorySchemaVersion;
    j["config"] = json::parse(run_config_to_json(cfg));
    return j.dump();
}

std::string record_line(const analysis::CandidateRecord& rec) {
    json j;
    j["type"] = "record";
    j["generation"] = rec.generation;
    j["candidate_index"] = rec.candidate_index;
    j["decisions"] = rec.decisions;
    j["onehot"] = onehot_to_bitstring(rec.onehot);
    j["accuracy"] = rec.accuracy;
    j["latency_ms"] = rec.latency_ms;
    j["mflops"] = rec.mflops;
    j["reward"] = rec.reward;
    j["run_seed"] = rec.run_seed;
    j["eval_seed"] = rec.eval_seed;
    j["objective"] = rec.objective;
    j["teacher"] = rec.teacher;
    if (rec.diverged) j["diverged"] = true;
    return j.dump();
}

analysis::CandidateRecord parse_record_line(const std::string& line, int expected_onehot_length) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw StorageError(std::string("bad record line: ") + e.what());
    }
    if (j.value("type", "") != "record") throw StorageError("expected a record line");
    analysis::CandidateRecord rec;
    rec.generation = j.at("generation").get<int>();
    rec.candidate_index = j.at("candidate_index").get<int>();
    rec.decisions = j.at("decisions").get<std::vector<int>>();
    rec.onehot = bitstring_to_onehot(j.at("onehot").get<std::string>());
    if (expected_onehot_length >= 0 &&
        rec.onehot.bits.size() != static_cast<std::size_t>(expected_onehot_length)) {
        throw StorageError("record one-hot length does not match the run's search space");
    }
    rec.accuracy = j.at("accuracy").get<double>();
    rec.latency_ms = j.at("latency_ms").get<double>();
    rec.mflops = j.at("mflops").get<double>();
    rec.reward = j.at("reward").get<double>();
    rec.run_seed = j.at("run_seed").get<std::uint64_t>();
    rec.eval_seed = j.at("eval_seed").get<std::uint64_t>();
    rec.objective = j.at("objective").get<std::string>();
    rec.teacher = j.at("teacher").get<std::string>();
    rec.diverged = j.value("diverged", false);
    return rec;
}

TrajectoryStore TrajectoryStore::load(const std::string& path, bool validate_rewards) {
    std::ifstream in(path);
    if (!in) throw StorageError("cannot open trajectory file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw StorageError("trajectory file is empty: " + path);
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw StorageError(std::string("bad trajectory header: ") + e.what());
    }
    if (header.value("type", "") != "header") throw StorageError("first line must be the header");
    if (header.value("schema_version", -1) != kTrajectorySchemaVersion) {
        throw StorageError("unsupported trajectory schema_version");
    }
    TrajectoryStore store;
    store.config = run_config_from_json(header.at("config").dump());

    int last_generation = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        analysis::CandidateRecord rec;
        try {
            rec = parse_record_line(line, store.config.space.onehot_length());
        } catch (const StorageError&) {
            if (in.eof()) break;  // trailing partial line from an interrupted append
            throw;
        }
        if (rec.generation < last_generation) {
            throw StorageError("generation indices must be non-decreasing");
        }
        last_generation = rec.generation;
        if (validate_rewards && !rec.diverged) {
            const double cost_value =
                store.config.reward.mode == cost::RewardMode::latency ? rec.latency_ms : rec.mflops;
            const double expected = cost::compute_reward(rec.accuracy, cost_value, store.config.reward);
            if (std::abs(expected - rec.reward) > 1e-9) {
                throw StorageError("record reward is inconsistent with the run's reward config");
            }
        }
        store.records.push_back(std::move(rec));
    }
    return store;
}

TrajectoryWriter::TrajectoryWriter(const std::string& path, const RunConfig& cfg, bool truncate)
    : path_(path) {
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    if (truncate) {
        out_.open(path, std::ios::out | std::ios::trunc);
        if (!out_) throw StorageError("cannot open trajectory for writing: " + path);
        out_ << header_line(cfg) << '\n';
        flush();
    } else {
        out_.open(path, std::ios::out | std::ios::app);
        if (!out_) throw StorageError("cannot open trajectory for appending: " + path);
    }
}

void TrajectoryWriter::append(const analysis::CandidateRecord& rec) {
    out_ << record_line(rec) << '\n';
    if (!out_) throw StorageError("failed to append record to " + path_);
}

void TrajectoryWriter::flush() {
    out_.flush();
    if (!out_) throw StorageError("failed to flush trajectory " + path_);
}

void truncate_to_generation(const std::string& path, const RunConfig& cfg, int last_generation) {
    TrajectoryStore store = TrajectoryStore::load(path, /*validate_rewards=*/false);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::out | std::ios::trunc);
        if (!out) throw StorageError("cannot open " + tmp);
        out << header_line(cfg) << '\n';
        for (const auto& rec : store.records) {
            if (rec.generation <= last_generation) out << record_line(rec) << '\n';
        }
        out.flush();
        if (!out) throw StorageError("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace kdnas::store
