// SPDX-License-Identifier: Apache-2.0

#include <skit/mlp.hpp>

#include <skit/kernels.hpp>

#include <algorithm>
#include <cmath>

namespace skit {

TinyMlp TinyMlp::init(std::size_t in, std::size_t hidden, std::size_t out, RngState& rng) {
    TinyMlp net;
    net.w1 = gaussian_matrix(hidden, in, rng);
    scale_in_place(net.w1, 1.0 / std::sqrt(static_cast<double>(in)));
    net.w2 = gaussian_matrix(out, hidden, rng);
    scale_in_place(net.w2, 1.0 / std::sqrt(static_cast<double>(hidden)));
    net.b1.assign(hidden, 0.0);
    net.b2.assign(out, 0.0);
    return net;
}

MlpForward mlp_forward(const TinyMlp& net, const DenseMatrix& x) {
    MlpForward f;
    f.z1 = matmul(net.w1, x);
    for (std::size_t i = 0; i < f.z1.rows(); ++i)
        for (std::size_t j = 0; j < f.z1.cols(); ++j) f.z1(i, j) += net.b1[i];
    f.h = f.z1;
    for (double& v : f.h.storage()) v = std::max(v, 0.0);
    f.logits = matmul(net.w2, f.h);
    for (std::size_t i = 0; i < f.logits.rows(); ++i)
        for (std::size_t j = 0; j < f.logits.cols(); ++j) f.logits(i, j) += net.b2[i];
    return f;
}

namespace {

MlpGrads backprop(const TinyMlp& net, const DenseMatrix& x, const MlpForward& f,
                  const DenseMatrix& dlogits, double loss) {
    MlpGrads g;
    g.loss = loss;
    g.g2 = matmul_nt(dlogits, f.h);
    g.gb2.assign(net.b2.size(), 0.0);
    for (std::size_t i = 0; i < dlogits.rows(); ++i)
        for (std::size_t j = 0; j < dlogits.cols(); ++j) g.gb2[i] += dlogits(i, j);

    DenseMatrix dh = matmul_tn(net.w2, dlogits);
    for (std::size_t i = 0; i < dh.rows(); ++i)
        for (std::size_t j = 0; j < dh.cols(); ++j)
            if (f.z1(i, j) <= 0.0) dh(i, j) = 0.0;
    g.g1 = matmul_nt(dh, x);
    g.gb1.assign(net.b1.size(), 0.0);
    for (std::size_t i = 0; i < dh.rows(); ++i)
        for (std::size_t j = 0; j < dh.cols(); ++j) g.gb1[i] += dh(i, j);
    return g;
}

}  // namespace

MlpGrads mlp_backward_ce(const TinyMlp& net, const DenseMatrix& x, const std::vector<int>& labels) {
    if (labels.size() != x.cols()) throw std::invalid_argument("mlp: label count mismatch");
    MlpForward f = mlp_forward(net, x);
    const std::size_t classes = f.logits.rows(), batch = f.logits.cols();

    DenseMatrix probs = f.logits;
    double loss = 0.0;
    for (std::size_t j = 0; j < batch; ++j) {
        double mx = -1e300;
        for (std::size_t i = 0; i < classes; ++i) mx = std::max(mx, probs(i, j));
        double z = 0.0;
        for (std::size_t i = 0; i < classes; ++i) {
            probs(i, j) = std::exp(probs(i, j) - mx);
            z += probs(i, j);
        }
        for (std::size_t i = 0; i < classes; ++i) probs(i, j) /= z;
        loss -= std::log(std::max(probs(static_cast<std::size_t>(labels[j]), j), 1e-300));
    }
    loss /= static_cast<double>(batch);

    DenseMatrix dlogits = probs;
    for (std::size_t j = 0; j < batch; ++j)
        dlogits(static_cast<std::size_t>(labels[j]), j) -= 1.0;
    scale_in_place(dlogits, 1.0 / static_cast<double>(batch));
    return backprop(net, x, f, dlogits, loss);
}

MlpGrads mlp_backward_mse(const TinyMlp& net, const DenseMatrix& x, const DenseMatrix& targets) {
    MlpForward f = mlp_forward(net, x);
    if (!targets.same_shape(f.logits)) throw std::invalid_argument("mlp: target shape mismatch");
    const double k = static_cast<double>(x.cols());
    DenseMatrix resid = sub(f.logits, targets);
    const double fn = frobenius_norm(resid);
    DenseMatrix dlogits = resid;
    scale_in_place(dlogits, 1.0 / k);
    return backprop(net, x, f, dlogits, 0.5 * fn * fn / k);
}

MixtureTask make_mixture_task(std::size_t in, std::size_t classes, std::size_t samples,
                              double separation, RngState& rng) {
    MixtureTask t;
    t.means = gaussian_matrix(classes, in, rng);
    scale_in_place(t.means, separation);
    t.x = DenseMatrix(in, samples);
    t.labels.resize(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        const int c = static_cast<int>(rng.next_index(classes));
        t.labels[j] = c;
        for (std::size_t i = 0; i < in; ++i)
            t.x(i, j) = t.means(static_cast<std::size_t>(c), i) + rng.next_normal();
    }
    return t;
}

TeacherTask make_teacher_task(std::size_t in, std::size_t hidden, std::size_t out,
                              std::size_t samples, double noise, RngState& rng) {
    RngState teacher_rng = rng.fork(17);
    TinyMlp teacher = TinyMlp::init(in, hidden, out, teacher_rng);
    TeacherTask t;
    t.x = gaussian_matrix(in, samples, rng);
    t.y = mlp_forward(teacher, t.x).logits;
    if (noise > 0.0) {
        DenseMatrix e = gaussian_matrix(out, samples, rng);
        add_in_place(t.y, e, noise);
    }
    return t;
}

}  // namespace skit
