// SPDX-License-Identifier: Apache-2.0

#include <skit/run_config.hpp>

#include <fstream>
#include <set>

namespace skit {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void take_path(const json& j, const char* key, std::filesystem::path& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
}

json parse_override_value(const std::string& raw) {
    json v = json::parse(raw, nullptr, false);
    if (v.is_discarded()) return json(raw);  // plain string
    return v;
}

void apply_override(json& root, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must look like key.path=value: " + spec);
    const std::string path = spec.substr(0, eq);
    const json value = parse_override_value(spec.substr(eq + 1));
    json* at = &root;
    std::size_t begin = 0;
    while (true) {
        const auto dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
        if (key.empty()) throw std::invalid_argument("override has an empty key segment: " + spec);
        if (dot == std::string::npos) {
            (*at)[key] = value;
            break;
        }
        at = &(*at)[key];
        begin = dot + 1;
    }
}

BenchConfig parse_bench(const json& j) {
    BenchConfig c;
    reject_unknown(j, {"size", "cond_min", "cond_max", "trials", "budgets", "p_values", "methods",
                       "tol", "timing_reps", "timing_warmups"},
                   "bench");
    take(j, "size", c.size);
    take(j, "cond_min", c.cond_min);
    take(j, "cond_max", c.cond_max);
    take(j, "trials", c.trials);
    take(j, "budgets", c.budgets);
    take(j, "p_values", c.p_values);
    take(j, "methods", c.methods);
    take(j, "tol", c.tol);
    take(j, "timing_reps", c.timing_reps);
    take(j, "timing_warmups", c.timing_warmups);
    if (c.trials < 1) throw std::invalid_argument("bench.trials must be >= 1");
    if (!(c.cond_min >= 1.0) || !(c.cond_max >= c.cond_min))
        throw std::invalid_argument("bench condition range invalid");
    for (const auto& m : c.methods)
        if (m != "svd" && m != "taylor" && m != "remez")
            throw std::invalid_argument("bench.methods: unknown method " + m);
    return c;
}

AblationConfig parse_ablation(const json& j) {
    AblationConfig c;
    reject_unknown(j, {"beta_p", "intervals", "enabled"}, "train.ablation");
    take(j, "beta_p", c.beta_p);
    take(j, "intervals", c.intervals);
    take(j, "enabled", c.enabled);
    return c;
}

TrainConfig parse_train(const json& j) {
    TrainConfig c;
    reject_unknown(j, {"variant", "task", "steps", "batch", "hidden", "input_dim", "classes",
                       "samples", "separation", "seeds", "lr_muon", "lr_adam", "beta1", "beta2",
                       "weight_decay", "fixed_p", "interval", "beta_p", "p_min", "p_max",
                       "loss_window", "save_snapshots", "ablation"},
                   "train");
    take(j, "variant", c.variant);
    take(j, "task", c.task);
    take(j, "steps", c.steps);
    take(j, "batch", c.batch);
    take(j, "hidden", c.hidden);
    take(j, "input_dim", c.input_dim);
    take(j, "classes", c.classes);
    take(j, "samples", c.samples);
    take(j, "separation", c.separation);
    take(j, "seeds", c.seeds);
    take(j, "lr_muon", c.lr_muon);
    take(j, "lr_adam", c.lr_adam);
    take(j, "beta1", c.beta1);
    take(j, "beta2", c.beta2);
    take(j, "weight_decay", c.weight_decay);
    take(j, "fixed_p", c.fixed_p);
    take(j, "interval", c.interval);
    take(j, "beta_p", c.beta_p);
    take(j, "p_min", c.p_min);
    take(j, "p_max", c.p_max);
    take(j, "loss_window", c.loss_window);
    take(j, "save_snapshots", c.save_snapshots);
    if (j.contains("ablation")) c.ablation = parse_ablation(j.at("ablation"));
    if (c.task != "mixture" && c.task != "teacher")
        throw std::invalid_argument("train.task must be mixture or teacher");
    if (c.steps < 1 || c.seeds.empty()) throw std::invalid_argument("train: steps/seeds invalid");
    return c;
}

TraceConfig parse_trace(const json& j) {
    TraceConfig c;
    reject_unknown(j, {"run_dir", "synthetic", "synthetic_steps", "beta_p_values", "rand_rank"},
                   "trace");
    take(j, "run_dir", c.run_dir);
    take(j, "synthetic", c.synthetic);
    take(j, "synthetic_steps", c.synthetic_steps);
    take(j, "beta_p_values", c.beta_p_values);
    take(j, "rand_rank", c.rand_rank);
    return c;
}

VerifyConfig parse_verify(const json& j) {
    VerifyConfig c;
    reject_unknown(j, {"alpha_exp_mutation", "only"}, "verify");
    if (j.contains("alpha_exp_mutation") && !j.at("alpha_exp_mutation").is_null())
        c.alpha_exp_mutation = j.at("alpha_exp_mutation").get<double>();
    take(j, "only", c.only);
    return c;
}

}  // namespace

RunConfig RunConfig::from_json(nlohmann::json j) {
    RunConfig c;
    reject_unknown(j, {"seed", "out_dir", "threads", "bench", "train", "trace", "verify"}, "root");
    take(j, "seed", c.seed);
    take_path(j, "out_dir", c.out_dir);
    take(j, "threads", c.threads);
    if (j.contains("bench")) c.bench = parse_bench(j.at("bench"));
    if (j.contains("train")) c.train = parse_train(j.at("train"));
    if (j.contains("trace")) c.trace = parse_trace(j.at("trace"));
    if (j.contains("verify")) c.verify = parse_verify(j.at("verify"));
    return c;
}

RunConfig RunConfig::load(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides) {
    nlohmann::json j = nlohmann::json::object();
    if (file) {
        std::ifstream in(*file);
        if (!in) throw std::invalid_argument("cannot open config: " + file->string());
        in >> j;
    }
    for (const auto& o : overrides) apply_override(j, o);
    return from_json(std::move(j));
}

}  // namespace skit
