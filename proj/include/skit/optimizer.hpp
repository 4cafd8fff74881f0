// SPDX-License-Identifier: Apache-2.0
//
// The SMuon optimizer family: momentum and second-moment accumulation,
// Schatten-(p+1) LMO update assembly with the p-dependent preconditioner
// exponent, scheduled p* refresh, and logarithmic learning-rate
// interpolation between the Adam and Muon endpoints.

#pragma once

#include <functional>
#include <string>

#include <skit/dense.hpp>
#include <skit/fractional.hpp>
#include <skit/pstar.hpp>

namespace skit {

enum class Variant { smuon, smuon_adam, fixed_p, muon, sgd_momentum, adam, muadam };

enum class AlphaMode { p_dependent, fixed_quarter, fixed_half };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct OptimizerConfig {
    Variant variant = Variant::smuon_adam;
    double beta1 = 0.95;
    double beta2 = 0.95;
    double eps = 1e-8;
    double lr_muon = 0.05;
    double lr_adam = 0.01;
    double weight_decay = 0.0;
    double fixed_p_value = 2.0;
    PStarConfig pstar;
    FractionalMapPlan plan;
    AlphaMode alpha_mode = AlphaMode::p_dependent;
    // test hook: overrides the preconditioner exponent when finite
    double alpha_exp_override = std::numeric_limits<double>::quiet_NaN();

    bool uses_second_moment() const {
        return variant == Variant::smuon_adam || variant == Variant::adam ||
               variant == Variant::muadam;
    }
    bool uses_selector() const {
        return variant == Variant::smuon || variant == Variant::smuon_adam;
    }
    void validate() const;
};

struct OptimizerState {
    DenseMatrix momentum;
    DenseMatrix second_moment;
    bool has_second_moment = false;
    double pstar = 50.0;
    long step = 0;
    EmaStats ema;
    bool refresh_pending = false;

    static OptimizerState init(std::size_t rows, std::size_t cols, const OptimizerConfig& cfg);
};

struct StepReport {
    double update_norm = 0.0;
    double pstar = 0.0;
    double lr = 0.0;
    double eta_star = 0.0;
    bool has_eta = false;
    bool fallback = false;
    bool skipped = false;      // zero momentum, no update applied
    bool refreshed = false;
    double objective_value = 0.0;
};

void momentum_update(OptimizerState& state, const DenseMatrix& g, double beta1);
void second_moment_update(OptimizerState& state, const DenseMatrix& g, double beta2);

// effective Schatten exponent the variant uses at this state
double effective_p(const OptimizerState& state, const OptimizerConfig& cfg);

DenseMatrix assemble_update(const OptimizerState& state, const OptimizerConfig& cfg,
                            StepReport* report = nullptr);

double lr_for_p(const OptimizerConfig& cfg, double p);

struct ParamSlot {
    DenseMatrix* w = nullptr;
    const DenseMatrix* g = nullptr;
    const DenseMatrix* activation = nullptr;  // may be null except on refresh steps
    OptimizerState* state = nullptr;
    std::string name;
};

// called once per selector refresh with the emitted record
using SelectorLogFn =
    std::function<void(long step, const std::string& param, const SelectResult&)>;

std::vector<StepReport> optimizer_step(std::vector<ParamSlot>& params, const OptimizerConfig& cfg,
                                       long step_index, const SelectorLogFn& log = nullptr);

// plain adam on a flat vector (bias parameters in the harness)
struct VectorAdamState {
    std::vector<double> m, v;
    long step = 0;
};
void vector_adam_step(std::vector<double>& w, const std::vector<double>& g, VectorAdamState& st,
                      double lr, double beta1, double beta2, double eps);

}  // namespace skit
