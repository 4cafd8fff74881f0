// SPDX-License-Identifier: Apache-2.0
//
// Strict JSON run configuration: unknown keys are rejected, flag overrides
// are applied before validation, defaults mirror the desk-scale setup.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace skit {

struct BenchConfig {
    std::size_t size = 256;
    double cond_min = 10.0;
    double cond_max = 1000.0;
    int trials = 25;
    std::vector<int> budgets = {1, 2, 3, 4, 5, 6};
    std::vector<double> p_values = {2.0, 4.0};
    std::vector<std::string> methods = {"svd", "taylor", "remez"};
    double tol = 1e-3;
    int timing_reps = 5;
    int timing_warmups = 2;
};

struct AblationConfig {
    std::vector<double> beta_p = {0.0, 0.5, 0.9};
    std::vector<int> intervals = {50, 150, 300, 600};
    bool enabled = false;
};

struct TrainConfig {
    std::string variant = "smuon-adam";
    std::string task = "mixture";  // mixture | teacher
    int steps = 200;
    std::size_t batch = 512;
    std::size_t hidden = 256;
    std::size_t input_dim = 32;
    std::size_t classes = 10;
    std::size_t samples = 8192;
    double separation = 0.5;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    double lr_muon = 0.05;
    double lr_adam = 0.01;
    double beta1 = 0.95;
    double beta2 = 0.95;
    double weight_decay = 0.0;
    double fixed_p = 2.0;
    int interval = 50;
    double beta_p = 0.9;
    double p_min = 1.02;
    double p_max = 50.0;
    int loss_window = 20;
    bool save_snapshots = false;
    AblationConfig ablation;
};

struct TraceConfig {
    std::string run_dir;       // snapshots from a completed train run
    bool synthetic = false;    // use the synthetic stats generator instead
    int synthetic_steps = 12;
    std::vector<double> beta_p_values = {0.0, 0.5, 0.9};
    int rand_rank = 8;
};

struct VerifyConfig {
    double alpha_exp_mutation = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> only;     // run a subset of criteria when non-empty
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";
    int threads = 0;  // 0 = auto
    BenchConfig bench;
    TrainConfig train;
    TraceConfig trace;
    VerifyConfig verify;

    // parse from a JSON file (optional) plus key=value overrides; throws
    // std::invalid_argument on unknown keys or malformed values
    static RunConfig load(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides);
    static RunConfig from_json(nlohmann::json j);
};

}  // namespace skit
