// SPDX-License-Identifier: Apache-2.0
//
// Two-layer relu MLP with hand-coded gradients plus seeded synthetic tasks
// (Gaussian-mixture classification and teacher-student regression).
// Columns are samples throughout.

#pragma once

#include <skit/dense.hpp>

namespace skit {

struct TinyMlp {
    DenseMatrix w1;            // hidden x in
    DenseMatrix w2;            // out x hidden
    std::vector<double> b1, b2;

    static TinyMlp init(std::size_t in, std::size_t hidden, std::size_t out, RngState& rng);
};

struct MlpForward {
    DenseMatrix z1;      // hidden x batch, pre-activation
    DenseMatrix h;       // hidden x batch, relu output (input multiplied by w2)
    DenseMatrix logits;  // out x batch
};

MlpForward mlp_forward(const TinyMlp& net, const DenseMatrix& x);

struct MlpGrads {
    double loss = 0.0;
    DenseMatrix g1, g2;
    std::vector<double> gb1, gb2;
};

// softmax cross-entropy over classes
MlpGrads mlp_backward_ce(const TinyMlp& net, const DenseMatrix& x, const std::vector<int>& labels);

// mean squared error against targets (out x batch)
MlpGrads mlp_backward_mse(const TinyMlp& net, const DenseMatrix& x, const DenseMatrix& targets);

struct MixtureTask {
    DenseMatrix x;            // in x samples
    std::vector<int> labels;
    DenseMatrix means;        // classes x in
};

// Gaussian mixture with a separability knob (mean spread over unit noise)
MixtureTask make_mixture_task(std::size_t in, std::size_t classes, std::size_t samples,
                              double separation, RngState& rng);

struct TeacherTask {
    DenseMatrix x;  // in x samples
    DenseMatrix y;  // out x samples
};

TeacherTask make_teacher_task(std::size_t in, std::size_t hidden, std::size_t out,
                              std::size_t samples, double noise, RngState& rng);

}  // namespace skit
