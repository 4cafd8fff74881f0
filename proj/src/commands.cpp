// SPDX-License-Identifier: Apache-2.0

#include <skit/commands.hpp>

#include <skit/acceptance.hpp>
#include <skit/fractional.hpp>
#include <skit/io.hpp>
#include <skit/kernels.hpp>
#include <skit/rfr.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

namespace skit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double smoothed_tail(const std::vector<double>& xs, int window) {
    if (xs.empty()) return 0.0;
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(window, 1)), xs.size());
    double s = 0.0;
    for (std::size_t i = xs.size() - w; i < xs.size(); ++i) s += xs[i];
    return s / static_cast<double>(w);
}

struct TimedRun {
    double median_seconds = 0.0;
};

template <typename F>
TimedRun time_kernel(F&& f, int warmups, int reps) {
    for (int i = 0; i < warmups; ++i) f();
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        auto t0 = Clock::now();
        f();
        times.push_back(seconds_since(t0));
    }
    std::sort(times.begin(), times.end());
    return {times[times.size() / 2]};
}

}  // namespace

int cmd_bench_fractional(const RunConfig& cfg) {
    const BenchConfig& b = cfg.bench;
    std::filesystem::create_directories(cfg.out_dir);
    CsvWriter csv(cfg.out_dir / "bench_fractional.csv",
                  {"method", "p", "budget", "trial", "rel_err", "seconds"});
    JsonlWriter meta(cfg.out_dir / "bench_fractional.meta.jsonl");
    meta.record({{"event", "start"}, {"size", b.size}, {"trials", b.trials}, {"seed", cfg.seed}});

    // timing is single-threaded for noise robustness
    const int saved_threads = worker_threads();
    set_worker_threads(1);

    for (int trial = 0; trial < b.trials; ++trial) {
        const double t01 = (b.trials == 1) ? 0.0
                                           : static_cast<double>(trial) / (b.trials - 1);
        const double cond = b.cond_min * std::pow(b.cond_max / b.cond_min, t01);
        RngState rng(cfg.seed + 7919u * static_cast<std::uint64_t>(trial));
        std::vector<double> sigma = heavy_tailed_spectrum(std::min(b.size, b.size), cond, rng);
        const double scl = std::exp(rng.next_normal() * 0.3);
        for (double& s : sigma) s *= scl;
        DenseMatrix g = matrix_with_spectrum(b.size, b.size, sigma, rng);

        for (double p : b.p_values) {
            FractionalMapPlan exact_plan;
            exact_plan.method = FractionalMethod::svd;
            exact_plan.p = p;
            DenseMatrix exact = fractional_map(g, exact_plan);
            const double exact_norm = frobenius_norm(exact);

            for (const std::string& method : b.methods) {
                const std::vector<int>& budgets =
                    (method == "svd") ? std::vector<int>{0} : b.budgets;
                for (int budget : budgets) {
                    FractionalMapPlan plan;
                    plan.p = p;
                    plan.tol = b.tol;
                    if (method == "svd") {
                        plan.method = FractionalMethod::svd;
                    } else if (method == "taylor") {
                        plan.method = FractionalMethod::taylor;
                        plan.ns_budget = budget;
                    } else {
                        plan.method = FractionalMethod::remez;
                        plan.ns_budget = budget;
                    }
                    DenseMatrix out = fractional_map(g, plan);  // warm caches before timing
                    const double rel = frobenius_norm(sub(out, exact)) / exact_norm;
                    TimedRun t = time_kernel([&] { fractional_map(g, plan); },
                                             b.timing_warmups, b.timing_reps);
                    csv.row({method, format_double(p), std::to_string(budget),
                             std::to_string(trial), format_double(rel),
                             format_double(t.median_seconds)});
                }
            }
        }
    }
    set_worker_threads(saved_threads);
    meta.record({{"event", "done"}});
    std::cout << "bench-fractional: wrote " << (cfg.out_dir / "bench_fractional.csv").string()
              << "\n";
    return 0;
}

TrainRunResult train_single(const TrainConfig& cfg, std::uint64_t seed,
                            const TrainRunOptions& opts) {
    const auto t0 = Clock::now();
    const std::string variant_name = opts.variant_override.empty() ? cfg.variant
                                                                   : opts.variant_override;
    OptimizerConfig ocfg;
    ocfg.variant = variant_from_string(variant_name);
    ocfg.beta1 = cfg.beta1;
    ocfg.beta2 = cfg.beta2;
    ocfg.lr_muon = cfg.lr_muon;
    ocfg.lr_adam = cfg.lr_adam;
    ocfg.weight_decay = cfg.weight_decay;
    ocfg.fixed_p_value = cfg.fixed_p;
    ocfg.pstar.p_min = cfg.p_min;
    ocfg.pstar.p_max = cfg.p_max;
    ocfg.pstar.update_interval = (opts.interval_override > 0) ? opts.interval_override : cfg.interval;
    ocfg.pstar.beta_p = (opts.beta_p_override >= 0.0) ? opts.beta_p_override : cfg.beta_p;
    ocfg.plan.method = FractionalMethod::taylor;

    RngState data_rng(seed);
    RngState init_rng = data_rng.fork(2);
    RngState batch_rng = data_rng.fork(3);

    const bool classify = cfg.task == "mixture";
    MixtureTask mix;
    TeacherTask teach;
    std::size_t out_dim;
    if (classify) {
        mix = make_mixture_task(cfg.input_dim, cfg.classes, cfg.samples, cfg.separation, data_rng);
        out_dim = cfg.classes;
    } else {
        teach = make_teacher_task(cfg.input_dim, cfg.hidden, cfg.classes, cfg.samples, 0.05,
                                  data_rng);
        out_dim = cfg.classes;
    }

    TinyMlp net = TinyMlp::init(cfg.input_dim, cfg.hidden, out_dim, init_rng);
    OptimizerState st1 = OptimizerState::init(net.w1.rows(), net.w1.cols(), ocfg);
    OptimizerState st2 = OptimizerState::init(net.w2.rows(), net.w2.cols(), ocfg);
    VectorAdamState bst1, bst2;

    const bool writing = !opts.out_dir.empty();
    std::unique_ptr<JsonlWriter> steps_log, pstar_log, meta_log;
    std::unique_ptr<std::ofstream> snap_data;
    std::unique_ptr<JsonlWriter> snap_index;
    if (writing) {
        std::filesystem::create_directories(opts.out_dir);
        steps_log = std::make_unique<JsonlWriter>(opts.out_dir / "steps.jsonl");
        pstar_log = std::make_unique<JsonlWriter>(opts.out_dir / "pstar.jsonl");
        meta_log = std::make_unique<JsonlWriter>(opts.out_dir / "meta.jsonl");
        meta_log->record({{"event", "start"},
                          {"seed", seed},
                          {"variant", variant_name},
                          {"steps", cfg.steps},
                          {"interval", ocfg.pstar.update_interval},
                          {"beta_p", ocfg.pstar.beta_p}});
        if (opts.save_snapshots || cfg.save_snapshots) {
            snap_data = std::make_unique<std::ofstream>(opts.out_dir / "snapshots.bin",
                                                        std::ios::binary);
            snap_index = std::make_unique<JsonlWriter>(opts.out_dir / "snapshots.jsonl");
        }
    }

    TrainRunResult result;
    long selector_calls = 0;

    for (int step = 0; step < cfg.steps; ++step) {
        DenseMatrix xb(cfg.input_dim, cfg.batch);
        std::vector<int> labels(cfg.batch);
        DenseMatrix targets;
        if (classify) {
            for (std::size_t j = 0; j < cfg.batch; ++j) {
                const std::size_t idx = batch_rng.next_index(cfg.samples);
                labels[j] = mix.labels[idx];
                for (std::size_t i = 0; i < cfg.input_dim; ++i) xb(i, j) = mix.x(i, idx);
            }
        } else {
            targets = DenseMatrix(out_dim, cfg.batch);
            for (std::size_t j = 0; j < cfg.batch; ++j) {
                const std::size_t idx = batch_rng.next_index(cfg.samples);
                for (std::size_t i = 0; i < cfg.input_dim; ++i) xb(i, j) = teach.x(i, idx);
                for (std::size_t i = 0; i < out_dim; ++i) targets(i, j) = teach.y(i, idx);
            }
        }

        MlpGrads grads = classify ? mlp_backward_ce(net, xb, labels)
                                  : mlp_backward_mse(net, xb, targets);
        if (!std::isfinite(grads.loss)) {
            if (writing && meta_log)
                meta_log->record({{"event", "nan_abort"},
                                  {"step", step},
                                  {"w1_norm", frobenius_norm(net.w1)},
                                  {"w2_norm", frobenius_norm(net.w2)}});
            throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
        }
        result.losses.push_back(grads.loss);

        // layer inputs: x for w1, the relu output for w2
        MlpForward fwd = mlp_forward(net, xb);  // activation snapshot of this batch
        std::vector<ParamSlot> slots(2);
        slots[0] = {&net.w1, &grads.g1, &xb, &st1, "w1"};
        slots[1] = {&net.w2, &grads.g2, &fwd.h, &st2, "w2"};

        SelectorLogFn log_fn = nullptr;
        if (pstar_log) {
            log_fn = [&](long s, const std::string& param, const SelectResult& sel) {
                nlohmann::json j{{"step", s},
                                 {"param", param},
                                 {"pstar", sel.pstar},
                                 {"objective_at_pstar", sel.objective_value},
                                 {"fallback", sel.fallback}};
                if (!sel.fallback) j["eta_star"] = sel.eta;
                else j["eta_star"] = nullptr;
                pstar_log->record(j);
                ++selector_calls;
            };
        } else {
            log_fn = [&](long, const std::string&, const SelectResult&) { ++selector_calls; };
        }

        const bool refresh_now =
            ocfg.uses_selector() && ((step + 1) % ocfg.pstar.update_interval == 0);
        if (refresh_now && snap_data) {
            for (auto& slot : slots) {
                // momentum snapshot is taken after the update inside optimizer_step;
                // store the pre-step buffers plus this batch gradient and activation
                snap_index->record({{"step", step + 1}, {"param", slot.name}});
                DenseMatrix m_after = slot.state->momentum;
                scale_in_place(m_after, ocfg.beta1);
                add_in_place(m_after, *slot.g, 1.0 - ocfg.beta1);
                write_matrix(*snap_data, m_after);
                write_matrix(*snap_data, *slot.g);
                write_matrix(*snap_data, *slot.activation);
            }
        }

        std::vector<StepReport> reps = optimizer_step(slots, ocfg, step, log_fn);
        vector_adam_step(net.b1, grads.gb1, bst1, cfg.lr_adam, cfg.beta1, cfg.beta2, 1e-8);
        vector_adam_step(net.b2, grads.gb2, bst2, cfg.lr_adam, cfg.beta1, cfg.beta2, 1e-8);

        if (steps_log) {
            steps_log->record({{"step", step + 1},
                               {"loss", grads.loss},
                               {"pstar_w1", st1.pstar},
                               {"pstar_w2", st2.pstar},
                               {"lr_w1", reps[0].lr},
                               {"lr_w2", reps[1].lr}});
        }
    }

    result.final_smoothed_loss = smoothed_tail(result.losses, cfg.loss_window);
    result.final_pstar = {{"w1", st1.pstar}, {"w2", st2.pstar}};
    result.selector_calls = selector_calls;
    result.wall_seconds = seconds_since(t0);
    if (writing && meta_log)
        meta_log->record({{"event", "done"},
                          {"final_smoothed_loss", result.final_smoothed_loss},
                          {"selector_calls", selector_calls}});
    return result;
}

int cmd_train(const RunConfig& cfg) {
    const TrainConfig& t = cfg.train;
    std::filesystem::create_directories(cfg.out_dir);

    if (t.ablation.enabled) {
        CsvWriter csv(cfg.out_dir / "ablation.csv", [&] {
            std::vector<std::string> head{"interval"};
            for (double b : t.ablation.beta_p) head.push_back("beta_p_" + format_double(b));
            return head;
        }());
        for (int interval : t.ablation.intervals) {
            std::vector<std::string> cells{std::to_string(interval)};
            for (double bp : t.ablation.beta_p) {
                double acc = 0.0;
                for (std::uint64_t seed : t.seeds) {
                    TrainRunOptions o;
                    o.interval_override = interval;
                    o.beta_p_override = bp;
                    acc += train_single(t, cfg.seed + seed, o).final_smoothed_loss;
                }
                cells.push_back(format_double(acc / static_cast<double>(t.seeds.size())));
            }
            csv.row(cells);
        }
        std::cout << "train: wrote " << (cfg.out_dir / "ablation.csv").string() << "\n";
        return 0;
    }

    CsvWriter summary(cfg.out_dir / "train_summary.csv",
                      {"variant", "seed", "final_smoothed_loss", "wall_seconds"});
    std::vector<double> finals;
    for (std::uint64_t seed : t.seeds) {
        TrainRunOptions o;
        o.out_dir = cfg.out_dir / ("seed_" + std::to_string(seed));
        o.save_snapshots = t.save_snapshots;
        TrainRunResult r = train_single(t, cfg.seed + seed, o);
        finals.push_back(r.final_smoothed_loss);
        summary.row({t.variant, std::to_string(seed), format_double(r.final_smoothed_loss),
                     format_double(r.wall_seconds)});
    }
    const double mean = std::accumulate(finals.begin(), finals.end(), 0.0) /
                        static_cast<double>(finals.size());
    double var = 0.0;
    for (double f : finals) var += (f - mean) * (f - mean);
    var /= static_cast<double>(finals.size());
    summary.row({t.variant, "mean±std", format_double(mean), format_double(std::sqrt(var))});
    std::cout << "train: " << t.variant << " final loss " << mean << " ± " << std::sqrt(var)
              << "\n";
    return 0;
}

std::vector<Snapshot> load_snapshots(const std::filesystem::path& run_dir) {
    std::ifstream index(run_dir / "snapshots.jsonl");
    std::ifstream data(run_dir / "snapshots.bin", std::ios::binary);
    if (!index || !data) throw std::runtime_error("missing snapshots in " + run_dir.string());
    std::vector<Snapshot> out;
    std::string line;
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Snapshot s;
        s.step = j.at("step").get<long>();
        s.param = j.at("param").get<std::string>();
        s.m = read_matrix(data);
        s.g = read_matrix(data);
        s.a = read_matrix(data);
        out.push_back(std::move(s));
    }
    return out;
}

int cmd_pstar_trace(const RunConfig& cfg) {
    const TraceConfig& t = cfg.trace;
    std::filesystem::create_directories(cfg.out_dir);

    std::vector<Snapshot> snaps;
    if (t.synthetic) {
        // run a short snapshot-producing training loop in a temp directory
        TrainConfig tc = cfg.train;
        tc.variant = "smuon";
        tc.save_snapshots = true;
        tc.steps = std::max(t.synthetic_steps, 1) * tc.interval;
        TrainRunOptions o;
        o.out_dir = cfg.out_dir / "synthetic_run";
        o.save_snapshots = true;
        train_single(tc, cfg.seed, o);
        snaps = load_snapshots(o.out_dir);
    } else {
        if (t.run_dir.empty()) {
            std::cerr << "pstar-trace: need trace.run_dir or trace.synthetic\n";
            return 2;
        }
        try {
            snaps = load_snapshots(t.run_dir);
        } catch (const std::exception& e) {
            std::cerr << "pstar-trace: " << e.what() << "\n";
            return 2;
        }
    }

    JsonlWriter out(cfg.out_dir / "pstar_trace.jsonl");
    PStarConfig pcfg;
    pcfg.search_tol = 1e-3;

    // one EMA chain per (param, beta_p)
    std::map<std::pair<std::string, double>, EmaStats> chains;
    std::map<std::pair<std::string, double>, double> prev;

    for (double bp : t.beta_p_values)
        out.record({{"step", 0}, {"beta_p", bp}, {"pstar", pcfg.p_max}, {"init", true}});

    for (const Snapshot& s : snaps) {
        SpectralStats fresh = compute_stats(s.m, s.g, s.a);
        for (double bp : t.beta_p_values) {
            auto key = std::make_pair(s.param, bp);
            auto it = chains.find(key);
            if (it == chains.end()) {
                EmaStats e;
                e.beta_p = bp;
                it = chains.emplace(key, std::move(e)).first;
                prev[key] = pcfg.p_max;
            }
            it->second = ema_update(std::move(it->second), fresh);
            SelectResult sel = select_pstar(it->second.smoothed, pcfg, prev[key]);
            prev[key] = sel.pstar;

            RngState rng(cfg.seed ^ std::hash<std::string>{}(s.param) ^
                         static_cast<std::uint64_t>(s.step));
            PStarConfig rcfg = pcfg;
            rcfg.mode = PStarMode::randomized;
            rcfg.rand_rank = t.rand_rank;
            double p_rand = std::numeric_limits<double>::quiet_NaN();
            try {
                p_rand = randomized_pstar(s.a, s.g, rcfg, rng);
            } catch (const std::exception&) {
                // rank too large for this shape: fall through with NaN
            }
            nlohmann::json j{{"step", s.step},
                             {"param", s.param},
                             {"beta_p", bp},
                             {"pstar", sel.pstar},
                             {"fallback", sel.fallback}};
            if (std::isfinite(p_rand)) j["randomized_pstar"] = p_rand;
            out.record(j);
        }
    }
    std::cout << "pstar-trace: wrote " << (cfg.out_dir / "pstar_trace.jsonl").string() << " ("
              << snaps.size() << " snapshots)\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    AcceptanceOptions opts;
    opts.alpha_exp_mutation = cfg.verify.alpha_exp_mutation;
    opts.only = cfg.verify.only;
    opts.out_dir = cfg.out_dir;
    opts.seed = cfg.seed;
    const auto outcomes = run_acceptance(opts);

    std::filesystem::create_directories(cfg.out_dir);
    JsonlWriter report(cfg.out_dir / "verify_report.jsonl");
    bool all_pass = true;
    for (const auto& o : outcomes) {
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << o.id << ": " << o.name
                  << "  [" << o.detail << "]  (" << o.seconds << " s)\n";
        report.record({{"id", o.id},
                       {"name", o.name},
                       {"pass", o.pass},
                       {"detail", o.detail},
                       {"seconds", o.seconds}});
        all_pass = all_pass && o.pass;
    }
    std::cout << (all_pass ? "verify: all criteria passed" : "verify: FAILURES present") << "\n";
    return all_pass ? 0 : 1;
}

}  // namespace skit
