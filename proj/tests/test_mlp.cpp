// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <skit/kernels.hpp>
#include <skit/mlp.hpp>

using namespace skit;

namespace {

// flatten all parameters, apply a direction, and return the loss
double loss_at(TinyMlp net, const DenseMatrix& x, const std::vector<int>& labels,
               const std::vector<double>& direction, double h) {
    std::size_t at = 0;
    for (double& v : net.w1.storage()) v += h * direction[at++];
    for (double& v : net.w2.storage()) v += h * direction[at++];
    for (double& v : net.b1) v += h * direction[at++];
    for (double& v : net.b2) v += h * direction[at++];
    return mlp_backward_ce(net, x, labels).loss;
}

}  // namespace

TEST_CASE("gradient check: analytic vs central differences on 50 directions") {
    RngState rng(100);
    TinyMlp net = TinyMlp::init(6, 8, 4, rng);
    MixtureTask task = make_mixture_task(6, 4, 64, 1.0, rng);
    MlpGrads g = mlp_backward_ce(net, task.x, task.labels);

    const std::size_t total = net.w1.size() + net.w2.size() + net.b1.size() + net.b2.size();
    for (int dir = 0; dir < 50; ++dir) {
        std::vector<double> d(total);
        double norm = 0.0;
        for (double& v : d) {
            v = rng.next_normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : d) v /= norm;

        double analytic = 0.0;
        std::size_t at = 0;
        for (double v : g.g1.storage()) analytic += v * d[at++];
        for (double v : g.g2.storage()) analytic += v * d[at++];
        for (double v : g.gb1) analytic += v * d[at++];
        for (double v : g.gb2) analytic += v * d[at++];

        const double h = 1e-6;
        const double fd =
            (loss_at(net, task.x, task.labels, d, h) - loss_at(net, task.x, task.labels, d, -h)) /
            (2.0 * h);
        CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    }
}

TEST_CASE("mse gradients: teacher task sanity") {
    RngState rng(101);
    TinyMlp net = TinyMlp::init(5, 7, 3, rng);
    TeacherTask task = make_teacher_task(5, 7, 3, 32, 0.0, rng);
    MlpGrads g = mlp_backward_mse(net, task.x, task.y);
    CHECK(g.loss > 0.0);
    CHECK(g.g1.same_shape(net.w1));
    CHECK(g.g2.same_shape(net.w2));

    // descending along the gradient reduces the loss
    TinyMlp moved = net;
    add_in_place(moved.w1, g.g1, -0.1);
    add_in_place(moved.w2, g.g2, -0.1);
    CHECK(mlp_backward_mse(moved, task.x, task.y).loss < g.loss);
}

TEST_CASE("activation capture: the stats input equals the forward-pass input") {
    RngState rng(102);
    TinyMlp net = TinyMlp::init(4, 6, 3, rng);
    MixtureTask task = make_mixture_task(4, 3, 16, 1.0, rng);
    MlpForward f = mlp_forward(net, task.x);
    // the layer-2 curvature input is the relu output actually multiplied by w2
    DenseMatrix relu = matmul(net.w1, task.x);
    for (std::size_t i = 0; i < relu.rows(); ++i)
        for (std::size_t j = 0; j < relu.cols(); ++j)
            relu(i, j) = std::max(relu(i, j) + net.b1[i], 0.0);
    CHECK(f.h.storage() == relu.storage());
    // and layer 1 consumes the raw batch
    DenseMatrix z = matmul(net.w2, f.h);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += net.b2[i];
    CHECK(f.logits.storage() == z.storage());
}

TEST_CASE("mixture task: separation knob moves class means apart") {
    RngState rng(103);
    MixtureTask near = make_mixture_task(8, 4, 32, 0.1, rng);
    RngState rng2(103);
    MixtureTask far = make_mixture_task(8, 4, 32, 3.0, rng2);
    CHECK(frobenius_norm(far.means) > frobenius_norm(near.means) * 10.0);
    CHECK(near.labels.size() == 32);
}
