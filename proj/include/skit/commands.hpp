// SPDX-License-Identifier: Apache-2.0
//
// CLI command implementations. Each returns a process exit code; the
// library-level entry points used by tests are exposed alongside.

#pragma once

#include <filesystem>

#include <skit/mlp.hpp>
#include <skit/optimizer.hpp>
#include <skit/run_config.hpp>

namespace skit {

int cmd_bench_fractional(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_pstar_trace(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);

// one training run; out_dir empty => no files written
struct TrainRunResult {
    std::vector<double> losses;
    double final_smoothed_loss = 0.0;
    double wall_seconds = 0.0;
    std::vector<std::pair<std::string, double>> final_pstar;  // per matrix parameter
    long selector_calls = 0;
};

struct TrainRunOptions {
    std::filesystem::path out_dir;  // empty: in-memory only
    bool save_snapshots = false;
    int interval_override = 0;      // > 0 replaces cfg.interval
    double beta_p_override = -1.0;  // >= 0 replaces cfg.beta_p
    std::string variant_override;   // non-empty replaces cfg.variant
};

TrainRunResult train_single(const TrainConfig& cfg, std::uint64_t seed,
                            const TrainRunOptions& opts = {});

// snapshot record for selector replay
struct Snapshot {
    long step = 0;
    std::string param;
    DenseMatrix m, g, a;
};

std::vector<Snapshot> load_snapshots(const std::filesystem::path& run_dir);

}  // namespace skit
