// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <skit/kernels.hpp>
#include <skit/optimizer.hpp>
#include <skit/rfr.hpp>

using namespace skit;

namespace {

OptimizerConfig config_for(Variant v) {
    OptimizerConfig cfg;
    cfg.variant = v;
    cfg.pstar.update_interval = 1000000;
    return cfg;
}

double cosine(const DenseMatrix& a, const DenseMatrix& b) {
    return frobenius_inner(a, b) / (frobenius_norm(a) * frobenius_norm(b));
}

}  // namespace

TEST_CASE("momentum_update: endpoint algebra") {
    OptimizerConfig cfg = config_for(Variant::smuon);
    OptimizerState st = OptimizerState::init(2, 2, cfg);
    DenseMatrix g(2, 2, 1.0);

    momentum_update(st, g, 0.0);
    CHECK(st.momentum(0, 0) == 1.0);  // beta 0: M = G

    st = OptimizerState::init(2, 2, cfg);
    momentum_update(st, g, 0.95);
    CHECK(st.momentum(0, 0) == doctest::Approx(0.05));

    st = OptimizerState::init(2, 2, cfg);
    momentum_update(st, g, 0.9);
    momentum_update(st, g, 0.9);
    CHECK(st.momentum(0, 0) == doctest::Approx(1.0 - 0.9 * 0.9));  // geometric sum

    CHECK_THROWS_AS(momentum_update(st, DenseMatrix(3, 3), 0.9), std::invalid_argument);
}

TEST_CASE("second_moment_update: bias correction identities") {
    OptimizerConfig cfg = config_for(Variant::smuon_adam);
    OptimizerState st = OptimizerState::init(2, 2, cfg);
    DenseMatrix g(2, 2, 2.0);

    second_moment_update(st, g, 0.0);
    CHECK(st.second_moment(0, 0) == 4.0);

    st = OptimizerState::init(2, 2, cfg);
    for (int t = 1; t <= 7; ++t) {
        second_moment_update(st, g, 0.9);
        const double dhat = st.second_moment(0, 0) / (1.0 - std::pow(0.9, t));
        CHECK(dhat == doctest::Approx(4.0).epsilon(1e-12));  // constant G: exact after correction
    }

    DenseMatrix d0 = st.second_moment;
    second_moment_update(st, DenseMatrix(2, 2), 0.9);  // zero gradient decays by beta2
    CHECK(st.second_moment(0, 0) == doctest::Approx(0.9 * d0(0, 0)));
}

TEST_CASE("lr_for_p: logarithmic interpolation endpoints") {
    OptimizerConfig cfg = config_for(Variant::smuon);
    cfg.lr_adam = 0.01;
    cfg.lr_muon = 0.05;
    CHECK(lr_for_p(cfg, 1.0) == doctest::Approx(0.01));
    CHECK(lr_for_p(cfg, cfg.pstar.p_max) == doctest::Approx(0.05));
    CHECK(lr_for_p(cfg, std::sqrt(cfg.pstar.p_max)) ==
          doctest::Approx(std::sqrt(0.01 * 0.05)).epsilon(1e-12));
}

TEST_CASE("assemble_update: smuon at p = 1 is the scaled momentum") {
    OptimizerConfig cfg = config_for(Variant::smuon);
    OptimizerState st = OptimizerState::init(4, 3, cfg);
    st.pstar = 1.0;
    RngState rng(1);
    momentum_update(st, gaussian_matrix(4, 3, rng), 0.5);
    st.step = 1;
    DenseMatrix dw = assemble_update(st, cfg);
    DenseMatrix want = scale(st.momentum, -lr_for_p(cfg, 1.0));
    CHECK(frobenius_norm(sub(dw, want)) <= 1e-15);
}

TEST_CASE("assemble_update: smuon-adam at p = 1 matches the Adam preconditioned direction") {
    OptimizerConfig cfg = config_for(Variant::smuon_adam);
    OptimizerState st = OptimizerState::init(5, 4, cfg);
    st.pstar = 1.0;
    RngState rng(2);
    for (int t = 1; t <= 6; ++t) {
        DenseMatrix g = gaussian_matrix(5, 4, rng);
        momentum_update(st, g, cfg.beta1);
        second_moment_update(st, g, cfg.beta2);
        st.step = t;
    }
    DenseMatrix dw = assemble_update(st, cfg);
    // reference: D^{-1/2} o M, exponent composition 1/4 twice
    DenseMatrix dhat = st.second_moment;
    scale_in_place(dhat, 1.0 / (1.0 - std::pow(cfg.beta2, 6)));
    DenseMatrix ref(5, 4);
    for (std::size_t i = 0; i < ref.size(); ++i)
        ref.storage()[i] = -st.momentum.storage()[i] /
                           std::sqrt(dhat.storage()[i] + cfg.eps);
    CHECK(cosine(dw, ref) >= 1.0 - 1e-12);
}

TEST_CASE("assemble_update: smuon-adam at p_max approaches the Muon update") {
    OptimizerConfig cfg = config_for(Variant::smuon_adam);
    OptimizerState st = OptimizerState::init(6, 5, cfg);
    st.pstar = cfg.pstar.p_max;
    RngState rng(3);
    // second moments with entries in [0.1, 10]
    for (int t = 1; t <= 12; ++t) {
        DenseMatrix g = gaussian_matrix(6, 5, rng);
        for (double& v : g.storage()) v *= 1.5;
        momentum_update(st, g, cfg.beta1);
        second_moment_update(st, g, cfg.beta2);
        st.step = t;
    }
    StepReport rep;
    DenseMatrix dw = assemble_update(st, cfg, &rep);

    OptimizerConfig muon_cfg = config_for(Variant::muon);
    muon_cfg.lr_muon = rep.lr;  // compare directions at matched scale
    OptimizerState muon_st = st;
    muon_st.has_second_moment = false;
    DenseMatrix muon_dw = assemble_update(muon_st, muon_cfg);
    CHECK(frobenius_norm(sub(dw, muon_dw)) / frobenius_norm(muon_dw) <= 0.05);

    // the preconditioner exponent has decayed to 1/(2*51): S sits next to 1
    DenseMatrix dhat = st.second_moment;
    scale_in_place(dhat, 1.0 / (1.0 - std::pow(cfg.beta2, 12)));
    DenseMatrix s = elementwise_pow(dhat, -1.0 / 102.0, cfg.eps);
    for (double v : s.storage()) CHECK(std::abs(v - 1.0) <= 0.05);
}

TEST_CASE("assemble_update: zero momentum is skipped") {
    OptimizerConfig cfg = config_for(Variant::smuon);
    OptimizerState st = OptimizerState::init(3, 3, cfg);
    st.step = 1;
    StepReport rep;
    DenseMatrix dw = assemble_update(st, cfg, &rep);
    CHECK(rep.skipped);
    CHECK(frobenius_norm(dw) == 0.0);
}

TEST_CASE("optimizer_step: trajectory equivalences over 50 steps") {
    // fixed-p at p_max vs muon; identical to 1e-9
    RngState rng(4);
    RfrProblem prob = make_rfr_instance(8, 6, 12, 0.8, 0.05, rng);

    auto run = [&](Variant v, double fixed_p) {
        OptimizerConfig cfg = config_for(v);
        cfg.fixed_p_value = fixed_p;
        RfrProblem p = prob;
        OptimizerState st = OptimizerState::init(8, 6, cfg);
        for (int step = 0; step < 50; ++step) {
            DenseMatrix g = rfr_gradient(p);
            std::vector<ParamSlot> slots{{&p.w, &g, &p.a, &st, "w"}};
            optimizer_step(slots, cfg, step);
        }
        return p.w;
    };

    DenseMatrix w_fixed = run(Variant::fixed_p, 50.0);
    DenseMatrix w_muon = run(Variant::muon, 2.0);
    CHECK(frobenius_norm(sub(w_fixed, w_muon)) <= 1e-9 * frobenius_norm(w_muon));

    // sgd-momentum vs a hand-written loop; identical to 1e-12
    DenseMatrix w_sgd = run(Variant::sgd_momentum, 2.0);
    {
        RfrProblem p = prob;
        DenseMatrix mom(8, 6);
        OptimizerConfig cfg = config_for(Variant::sgd_momentum);
        for (int step = 0; step < 50; ++step) {
            DenseMatrix g = rfr_gradient(p);
            scale_in_place(mom, cfg.beta1);
            add_in_place(mom, g, 1.0 - cfg.beta1);
            add_in_place(p.w, mom, -cfg.lr_adam);
        }
        CHECK(frobenius_norm(sub(w_sgd, p.w)) <= 1e-12 * std::max(frobenius_norm(p.w), 1.0));
    }
}

TEST_CASE("optimizer_step: missing activation defers the refresh with a warning") {
    OptimizerConfig cfg = config_for(Variant::smuon);
    cfg.pstar.update_interval = 2;
    RngState rng(5);
    RfrProblem prob = make_rfr_instance(6, 5, 9, 0.8, 0.05, rng);
    OptimizerState st = OptimizerState::init(6, 5, cfg);
    int selector_calls = 0;
    SelectorLogFn log = [&](long, const std::string&, const SelectResult&) { ++selector_calls; };

    for (int step = 0; step < 2; ++step) {
        DenseMatrix g = rfr_gradient(prob);
        std::vector<ParamSlot> slots{{&prob.w, &g, nullptr, &st, "w"}};
        optimizer_step(slots, cfg, step, log);
    }
    CHECK(selector_calls == 0);
    CHECK(st.refresh_pending);

    DenseMatrix g = rfr_gradient(prob);
    std::vector<ParamSlot> slots{{&prob.w, &g, &prob.a, &st, "w"}};
    optimizer_step(slots, cfg, 2, log);  // deferred refresh fires now
    CHECK(selector_calls == 1);
    CHECK(!st.refresh_pending);
}

TEST_CASE("exponent uniqueness witness: perturbed exponents break rescaling invariance") {
    auto direction = [&](double lambda, double alpha_override) {
        OptimizerConfig cfg = config_for(Variant::smuon_adam);
        cfg.alpha_exp_override = alpha_override;
        RngState rng(6);
        RfrProblem p = make_rfr_instance(8, 6, 12, 0.8, 0.05, rng);
        OptimizerState st = OptimizerState::init(8, 6, cfg);
        st.pstar = 3.0;
        for (int step = 0; step < 2; ++step) {
            DenseMatrix g = rfr_gradient(p);
            scale_in_place(g, lambda);
            std::vector<ParamSlot> slots{{&p.w, &g, &p.a, &st, "w"}};
            optimizer_step(slots, cfg, step);
        }
        DenseMatrix g = rfr_gradient(p);
        scale_in_place(g, lambda);
        momentum_update(st, g, cfg.beta1);
        second_moment_update(st, g, cfg.beta2);
        st.step += 1;
        return assemble_update(st, cfg);
    };

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double exact = cosine(direction(1.0, nan), direction(10.0, nan));
    CHECK(exact >= 1.0 - 1e-6);
    const double alpha3 = 1.0 / 8.0;
    for (double bad : {alpha3 + 0.05, alpha3 - 0.05}) {
        const double c = cosine(direction(1.0, bad), direction(10.0, bad));
        CHECK(c < 1.0 - 1e-3);
    }
}

TEST_CASE("LMO direction attains the Hoelder optimum among random candidates") {
    RngState rng(7);
    DenseMatrix g = gaussian_matrix(5, 4, rng);
    auto sv = svd(g);
    for (double p : {1.0, 2.0, 5.0, 50.0}) {
        double np = 0.0;
        for (double s : sv.sigma) np += std::pow(s, (p + 1.0) / p);
        const double bound = -std::pow(np, p / (p + 1.0));
        DenseMatrix dir = schatten_lmo_direction(g, p);
        const double attained = frobenius_inner(g, dir);
        CHECK(attained == doctest::Approx(bound).epsilon(1e-9));
        for (int c = 0; c < 2000; ++c) {
            DenseMatrix cand = gaussian_matrix(5, 4, rng);
            scale_in_place(cand, -1.0 / schatten_norm(cand, p + 1.0));
            CHECK(frobenius_inner(g, cand) >= attained - 1e-9);
        }
    }
}

TEST_CASE("variant name round trip") {
    for (Variant v : {Variant::smuon, Variant::smuon_adam, Variant::fixed_p, Variant::muon,
                      Variant::sgd_momentum, Variant::adam, Variant::muadam})
        CHECK(variant_from_string(variant_to_string(v)) == v);
    CHECK_THROWS_AS(variant_from_string("sgd"), std::invalid_argument);
}
