// SPDX-License-Identifier: Apache-2.0
//
// skit: Schatten-p optimizer toolkit CLI.
//   skit bench-fractional | train | pstar-trace | verify
//        --config <path> [--seed N] [--out DIR] [--override key=value]

#include <skit/commands.hpp>
#include <skit/kernels.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Schatten-p constrained descent toolkit"};
    app.require_subcommand(1);

    std::optional<std::filesystem::path> config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--override", overrides, "key.path=value config overrides")
            ->take_all();
    };

    CLI::App* bench = app.add_subcommand("bench-fractional",
                                         "error-vs-runtime sweep of the fractional map routes");
    CLI::App* train = app.add_subcommand("train", "tiny-MLP training with a chosen optimizer");
    CLI::App* trace = app.add_subcommand("pstar-trace", "replay selector trajectories");
    CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
    for (CLI::App* sub : {bench, train, trace, verify}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        skit::RunConfig cfg = skit::RunConfig::load(config_path, overrides);
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.out_dir = *out_dir;
        if (cfg.threads > 0) skit::set_worker_threads(cfg.threads);

        if (bench->parsed()) return skit::cmd_bench_fractional(cfg);
        if (train->parsed()) return skit::cmd_train(cfg);
        if (trace->parsed()) return skit::cmd_pstar_trace(cfg);
        if (verify->parsed()) return skit::cmd_verify(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
