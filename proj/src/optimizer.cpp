// SPDX-License-Identifier: Apache-2.0

#include <skit/optimizer.hpp>

#include <skit/kernels.hpp>

#include <cmath>

namespace skit {

Variant variant_from_string(const std::string& s) {
    if (s == "smuon") return Variant::smuon;
    if (s == "smuon-adam") return Variant::smuon_adam;
    if (s == "fixed-p") return Variant::fixed_p;
    if (s == "muon") return Variant::muon;
    if (s == "sgd-momentum") return Variant::sgd_momentum;
    if (s == "adam") return Variant::adam;
    if (s == "muadam") return Variant::muadam;
    throw std::invalid_argument("unknown optimizer variant: " + s);
}

std::string variant_to_string(Variant v) {
    switch (v) {
        case Variant::smuon: return "smuon";
        case Variant::smuon_adam: return "smuon-adam";
        case Variant::fixed_p: return "fixed-p";
        case Variant::muon: return "muon";
        case Variant::sgd_momentum: return "sgd-momentum";
        case Variant::adam: return "adam";
        case Variant::muadam: return "muadam";
    }
    return "?";
}

void OptimizerConfig::validate() const {
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("optimizer: beta outside [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("optimizer: eps <= 0");
    if (!(lr_muon > 0.0) || !(lr_adam > 0.0)) throw std::invalid_argument("optimizer: lr <= 0");
    pstar.validate();
    plan.validate();
}

OptimizerState OptimizerState::init(std::size_t rows, std::size_t cols, const OptimizerConfig& cfg) {
    OptimizerState st;
    st.momentum = DenseMatrix(rows, cols);
    if (cfg.uses_second_moment()) {
        st.second_moment = DenseMatrix(rows, cols);
        st.has_second_moment = true;
    }
    st.pstar = cfg.pstar.p_max;  // start at the Muon end until the first refresh
    st.ema.beta_p = cfg.pstar.beta_p;
    return st;
}

void momentum_update(OptimizerState& state, const DenseMatrix& g, double beta1) {
    if (!state.momentum.same_shape(g)) throw std::invalid_argument("momentum_update: shape mismatch");
    scale_in_place(state.momentum, beta1);
    add_in_place(state.momentum, g, 1.0 - beta1);
}

void second_moment_update(OptimizerState& state, const DenseMatrix& g, double beta2) {
    if (!state.has_second_moment) throw std::logic_error("second_moment_update: variant has no D");
    if (!state.second_moment.same_shape(g))
        throw std::invalid_argument("second_moment_update: shape mismatch");
    scale_in_place(state.second_moment, beta2);
    for (std::size_t i = 0; i < g.size(); ++i)
        state.second_moment.storage()[i] += (1.0 - beta2) * g.storage()[i] * g.storage()[i];
}

double lr_for_p(const OptimizerConfig& cfg, double p) {
    double w = std::log(std::max(p, 1.0)) / std::log(cfg.pstar.p_max);
    w = std::clamp(w, 0.0, 1.0);
    return std::pow(cfg.lr_adam, 1.0 - w) * std::pow(cfg.lr_muon, w);
}

double effective_p(const OptimizerState& state, const OptimizerConfig& cfg) {
    switch (cfg.variant) {
        case Variant::muon:
        case Variant::muadam: return cfg.pstar.p_max;
        case Variant::sgd_momentum: return 1.0;
        case Variant::fixed_p: return cfg.fixed_p_value;
        case Variant::adam: return 1.0;  // unused: adam bypasses the LMO
        default: return state.pstar;
    }
}

namespace {

DenseMatrix bias_corrected(const DenseMatrix& acc, double beta, long step) {
    DenseMatrix out = acc;
    const double denom = 1.0 - std::pow(beta, static_cast<double>(step));
    if (denom > 0.0) scale_in_place(out, 1.0 / denom);
    return out;
}

}  // namespace

DenseMatrix assemble_update(const OptimizerState& state, const OptimizerConfig& cfg,
                            StepReport* report) {
    cfg.validate();
    const double p = effective_p(state, cfg);
    if (report) report->pstar = p;

    if (frobenius_norm(state.momentum) == 0.0) {
        if (report) {
            report->skipped = true;
            report->lr = 0.0;
        }
        return DenseMatrix(state.momentum.rows(), state.momentum.cols());
    }

    if (cfg.variant == Variant::adam) {
        DenseMatrix mhat = bias_corrected(state.momentum, cfg.beta1, state.step);
        DenseMatrix dhat = bias_corrected(state.second_moment, cfg.beta2, state.step);
        DenseMatrix out(mhat.rows(), mhat.cols());
        for (std::size_t i = 0; i < out.size(); ++i)
            out.storage()[i] =
                -cfg.lr_adam * mhat.storage()[i] / (std::sqrt(dhat.storage()[i]) + cfg.eps);
        if (report) {
            report->lr = cfg.lr_adam;
            report->update_norm = frobenius_norm(out);
        }
        return out;
    }

    double lr;
    switch (cfg.variant) {
        case Variant::muon:
        case Variant::muadam: lr = cfg.lr_muon; break;
        case Variant::sgd_momentum: lr = cfg.lr_adam; break;
        default: lr = lr_for_p(cfg, p); break;
    }

    DenseMatrix update;
    if (cfg.uses_second_moment()) {
        double alpha_exp;
        if (std::isfinite(cfg.alpha_exp_override)) {
            alpha_exp = cfg.alpha_exp_override;
        } else if (cfg.variant == Variant::muadam || cfg.alpha_mode == AlphaMode::fixed_quarter) {
            alpha_exp = 0.25;
        } else {
            alpha_exp = 1.0 / (2.0 * (p + 1.0));
        }
        DenseMatrix dhat = bias_corrected(state.second_moment, cfg.beta2, state.step);
        DenseMatrix s = elementwise_pow(dhat, -alpha_exp, cfg.eps);
        FractionalMapPlan plan = cfg.plan;
        plan.p = p;
        DenseMatrix y = fractional_map(hadamard(s, state.momentum), plan);
        update = hadamard(s, y);
    } else {
        FractionalMapPlan plan = cfg.plan;
        plan.p = p;
        update = fractional_map(state.momentum, plan);
    }
    scale_in_place(update, -lr);
    if (report) {
        report->lr = lr;
        report->update_norm = frobenius_norm(update);
    }
    return update;
}

std::vector<StepReport> optimizer_step(std::vector<ParamSlot>& params, const OptimizerConfig& cfg,
                                       long step_index, const SelectorLogFn& log) {
    cfg.validate();
    std::vector<StepReport> reports(params.size());
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ParamSlot& slot = params[pi];
        OptimizerState& st = *slot.state;
        StepReport& rep = reports[pi];

        momentum_update(st, *slot.g, cfg.beta1);
        if (st.has_second_moment) second_moment_update(st, *slot.g, cfg.beta2);
        st.step = step_index + 1;

        if (cfg.uses_selector()) {
            const bool due = (st.step % cfg.pstar.update_interval == 0) || st.refresh_pending;
            if (due && st.step >= cfg.pstar.update_interval) {
                if (slot.activation == nullptr) {
                    st.refresh_pending = true;  // defer to the next step that has a snapshot
                } else {
                    st.refresh_pending = false;
                    SpectralStats fresh = compute_stats(st.momentum, *slot.g, *slot.activation);
                    st.ema = ema_update(std::move(st.ema), fresh);
                    SelectResult sel = select_pstar(st.ema.smoothed, cfg.pstar, st.pstar);
                    st.pstar = sel.pstar;
                    rep.refreshed = true;
                    rep.fallback = sel.fallback;
                    rep.objective_value = sel.objective_value;
                    if (!sel.fallback) {
                        rep.eta_star = sel.eta;
                        rep.has_eta = true;
                    }
                    if (log) log(st.step, slot.name, sel);
                }
            }
        }

        DenseMatrix dw = assemble_update(st, cfg, &rep);
        if (!rep.skipped) {
            if (cfg.weight_decay != 0.0)
                scale_in_place(*slot.w, 1.0 - rep.lr * cfg.weight_decay);
            add_in_place(*slot.w, dw);
        }
    }
    return reports;
}

void vector_adam_step(std::vector<double>& w, const std::vector<double>& g, VectorAdamState& st,
                      double lr, double beta1, double beta2, double eps) {
    if (st.m.size() != w.size()) {
        st.m.assign(w.size(), 0.0);
        st.v.assign(w.size(), 0.0);
        st.step = 0;
    }
    ++st.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < w.size(); ++i) {
        st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g[i];
        st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mh = st.m[i] / bc1;
        const double vh = st.v[i] / bc2;
        w[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

}  // namespace skit
