// SPDX-License-Identifier: Apache-2.0
#include "kdnas/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kdnas {

using nlohmann::json;

void validate(const RunConfig& cfg) {
    if (cfg.generations < 1) throw ConfigError("generations must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
    cost::validate(cfg.reward);
    cost::validate(cfg.latency);
    controller::validate(cfg.controller);
    if (cfg.finalize.top_k < 1) throw ConfigError("finalize.top_k must be >= 1");
    if (cfg.finalize.window_lo > cfg.finalize.window_hi) {
        throw ConfigError("finalize window is inverted");
    }
    if (cfg.finalize.long_epochs < 1) throw ConfigError("finalize.long_epochs must be >= 1");
    if (const auto* micro = std::get_if<MicroEnvSpec>(&cfg.env)) {
        evaluator::validate(micro->task);
        evaluator::validate(micro->kd);
    } else {
        const auto& tab = std::get<TabularEnvSpec>(cfg.env);
        if (tab.noise_sigma < 0.0) throw ConfigError("tabular noise_sigma must be >= 0");
        if (tab.teacher_tag.empty()) throw ConfigError("tabular teacher_tag must be non-empty");
    }
}

std::string objective_tag(const RunConfig& cfg) {
    if (const auto* micro = std::get_if<MicroEnvSpec>(&cfg.env)) {
        return micro->kd.objective == evaluator::KdObjective::hard_label ? "hard" : "kd";
    }
    return std::get<TabularEnvSpec>(cfg.env).objective_tag;
}

namespace {

json reward_to_json(const cost::RewardConfig& r) {
    return json{{"mode", r.mode == cost::RewardMode::latency ? "latency" : "flops"},
                {"target", r.target},
                {"weight_exponent", r.weight_exponent}};
}

cost::RewardConfig reward_from_json(const json& j) {
    cost::RewardConfig r;
    const std::string mode = j.value("mode", "latency");
    if (mode == "latency") {
        r.mode = cost::RewardMode::latency;
    } else if (mode == "flops") {
        r.mode = cost::RewardMode::flops;
    } else {
        throw ConfigError("reward.mode must be 'latency' or 'flops'");
    }
    r.target = j.value("target", r.target);
    r.weight_exponent = j.value("weight_exponent", r.weight_exponent);
    return r;
}

json latency_to_json(const cost::LatencyModel& m) {
    return json{{"intercept_ms", m.intercept_ms}, {"mflops_per_ms", m.mflops_per_ms},
                {"noise_sigma", m.noise_sigma},   {"noise_seed", m.noise_seed},
                {"input_width", m.input_width}};
}

cost::LatencyModel latency_from_json(const json& j) {
    cost::LatencyModel m;
    m.intercept_ms = j.value("intercept_ms", m.intercept_ms);
    m.mflops_per_ms = j.value("mflops_per_ms", m.mflops_per_ms);
    m.noise_sigma = j.value("noise_sigma", m.noise_sigma);
    m.noise_seed = j.value("noise_seed", m.noise_seed);
    m.input_width = j.value("input_width", m.input_width);
    return m;
}

json controller_to_json(const controller::PpoParams& p) {
    return json{{"hidden_width", p.hidden_width}, {"learning_rate", p.learning_rate},
                {"clip_ratio", p.clip_ratio},     {"entropy_coef", p.entropy_coef},
                {"value_coef", p.value_coef},     {"advantage_norm", p.advantage_norm},
                {"batch_size", p.batch_size}};
}

controller::PpoParams controller_from_json(const json& j) {
    controller::PpoParams p;
    p.hidden_width = j.value("hidden_width", p.hidden_width);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.clip_ratio = j.value("clip_ratio", p.clip_ratio);
    p.entropy_coef = j.value("entropy_coef", p.entropy_coef);
    p.value_coef = j.value("value_coef", p.value_coef);
    p.advantage_norm = j.value("advantage_norm", p.advantage_norm);
    p.batch_size = j.value("batch_size", p.batch_size);
    return p;
}

json task_to_json(const evaluator::ProxyTaskSpec& t) {
    return json{{"dataset", t.dataset == evaluator::DatasetKind::gaussian ? "gaussian" : "spirals"},
                {"classes", t.classes},
                {"input_width", t.input_width},
                {"train_size", t.train_size},
                {"holdout_fraction", t.holdout_fraction},
                {"label_noise", t.label_noise},
                {"data_seed", t.data_seed},
                {"epochs", t.epochs},
                {"warmup_epochs", t.warmup_epochs},
                {"learning_rate", t.learning_rate},
                {"momentum", t.momentum},
                {"batch_size", t.batch_size}};
}

evaluator::ProxyTaskSpec task_from_json(const json& j) {
    evaluator::ProxyTaskSpec t;
    const std::string kind = j.value("dataset", "gaussian");
    if (kind == "gaussian") {
        t.dataset = evaluator::DatasetKind::gaussian;
    } else if (kind == "spirals") {
        t.dataset = evaluator::DatasetKind::spirals;
    } else {
        throw ConfigError("task.dataset must be 'gaussian' or 'spirals'");
    }
    t.classes = j.value("classes", t.classes);
    t.input_width = j.value("input_width", t.input_width);
    t.train_size = j.value("train_size", t.train_size);
    t.holdout_fraction = j.value("holdout_fraction", t.holdout_fraction);
    t.label_noise = j.value("label_noise", t.label_noise);
    t.data_seed = j.value("data_seed", t.data_seed);
    t.epochs = j.value("epochs", t.epochs);
    t.warmup_epochs = j.value("warmup_epochs", t.warmup_epochs);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.momentum = j.value("momentum", t.momentum);
    t.batch_size = j.value("batch_size", t.batch_size);
    return t;
}

json kd_to_json(const evaluator::KDConfig& kd) {
    json members = json::array();
    for (const auto& m : kd.teacher.members) {
        members.push_back(json{{"seed", m.seed},
                               {"hidden", m.hidden},
                               {"epochs", m.epochs},
                               {"learning_rate", m.learning_rate}});
    }
    std::string obj = "soft_logit";
    if (kd.objective == evaluator::KdObjective::feature_mse) obj = "feature_mse";
    if (kd.objective == evaluator::KdObjective::hard_label) obj = "hard_label";
    json teacher{{"tag", kd.teacher.tag}, {"members", members}};
    if (!kd.teacher.logits_csv.empty()) teacher["logits_csv"] = kd.teacher.logits_csv;
    return json{{"temperature", kd.temperature},
                {"alpha", kd.alpha},
                {"objective", obj},
                {"teacher", std::move(teacher)}};
}

evaluator::KDConfig kd_from_json(const json& j) {
    evaluator::KDConfig kd;
    kd.temperature = j.value("temperature", kd.temperature);
    kd.alpha = j.value("alpha", kd.alpha);
    const std::string obj = j.value("objective", "soft_logit");
    if (obj == "soft_logit") {
        kd.objective = evaluator::KdObjective::soft_logit;
    } else if (obj == "feature_mse") {
        kd.objective = evaluator::KdObjective::feature_mse;
    } else if (obj == "hard_label") {
        kd.objective = evaluator::KdObjective::hard_label;
    } else {
        throw ConfigError("kd.objective must be soft_logit, feature_mse, or hard_label");
    }
    if (j.contains("teacher")) {
        const auto& jt = j["teacher"];
        kd.teacher.tag = jt.value("tag", kd.teacher.tag);
        if (jt.contains("members")) {
            kd.teacher.members.clear();
            for (const auto& jm : jt["members"]) {
                evaluator::TeacherMemberSpec m;
                m.seed = jm.value("seed", m.seed);
                if (jm.contains("hidden")) m.hidden = jm["hidden"].get<std::vector<int>>();
                m.epochs = jm.value("epochs", m.epochs);
                m.learning_rate = jm.value("learning_rate", m.learning_rate);
                kd.teacher.members.push_back(std::move(m));
            }
        }
    }
    return kd;
}

json env_to_json(const EnvSpec& env) {
    if (const auto* tab = std::get_if<TabularEnvSpec>(&env)) {
        return json{{"kind", "tabular"},
                    {"teacher_tag", tab->teacher_tag},
                    {"teacher_seed", tab->teacher_seed},
                    {"noise_sigma", tab->noise_sigma},
                    {"objective", tab->objective_tag}};
    }
    const auto& micro = std::get<MicroEnvSpec>(env);
    return json{{"kind", "micro_kd"}, {"task", task_to_json(micro.task)}, {"kd", kd_to_json(micro.kd)}};
}

EnvSpec env_from_json(const json& j) {
    const std::string kind = j.value("kind", "tabular");
    if (kind == "tabular") {
        TabularEnvSpec tab;
        tab.teacher_tag = j.value("teacher_tag", tab.teacher_tag);
        tab.teacher_seed = j.value("teacher_seed", tab.teacher_seed);
        tab.noise_sigma = j.value("noise_sigma", tab.noise_sigma);
        tab.objective_tag = j.value("objective", tab.objective_tag);
        return tab;
    }
    if (kind == "micro_kd") {
        MicroEnvSpec micro;
        if (j.contains("task")) micro.task = task_from_json(j["task"]);
        if (j.contains("kd")) micro.kd = kd_from_json(j["kd"]);
        return micro;
    }
    throw ConfigError("environment.kind must be 'tabular' or 'micro_kd'");
}

json finalize_to_json(const FinalizeSettings& f) {
    return json{{"top_k", f.top_k},
                {"window_lo", f.window_lo},
                {"window_hi", f.window_hi},
                {"long_epochs", f.long_epochs}};
}

FinalizeSettings finalize_from_json(const json& j) {
    FinalizeSettings f;
    f.top_k = j.value("top_k", f.top_k);
    f.window_lo = j.value("window_lo", f.window_lo);
    f.window_hi = j.value("window_hi", f.window_hi);
    f.long_epochs = j.value("long_epochs", f.long_epochs);
    return f;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = kTrajectorySchemaVersion;
    j["run_seed"] = cfg.run_seed;
    j["generations"] = cfg.generations;
    j["batch_size"] = cfg.batch_size;
    j["workers"] = cfg.workers;
    j["space"] = json::parse(cfg.space.to_json_text());
    j["reward"] = reward_to_json(cfg.reward);
    j["latency_model"] = latency_to_json(cfg.latency);
    j["environment"] = env_to_json(cfg.env);
    j["controller"] = controller_to_json(cfg.controller);
    j["finalize"] = finalize_to_json(cfg.finalize);
    return j.dump();
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    if (j.value("schema_version", kTrajectorySchemaVersion) != kTrajectorySchemaVersion) {
        throw ConfigError("unsupported run config schema_version");
    }
    RunConfig cfg;
    cfg.run_seed = j.value("run_seed", cfg.run_seed);
    cfg.generations = j.value("generations", cfg.generations);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.workers = j.value("workers", cfg.workers);
    if (j.contains("space_file")) {
        cfg.space = space::SearchSpaceDef::from_file(j["space_file"].get<std::string>());
    } else if (j.contains("space")) {
        cfg.space = space::SearchSpaceDef::from_json_text(j["space"].dump());
    }
    if (j.contains("reward")) cfg.reward = reward_from_json(j["reward"]);
    if (j.contains("latency_model")) cfg.latency = latency_from_json(j["latency_model"]);
    if (j.contains("environment")) cfg.env = env_from_json(j["environment"]);
    if (j.contains("controller")) cfg.controller = controller_from_json(j["controller"]);
    if (j.contains("finalize")) cfg.finalize = finalize_from_json(j["finalize"]);
    validate(cfg);
    return cfg;
}

RunConfig run_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return run_config_from_json(buf.str());
}

}  // namespace kdnas
