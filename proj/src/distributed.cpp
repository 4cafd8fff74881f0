// SPDX-License-Identifier: Apache-2.0

#include <skit/distributed.hpp>

#include <skit/kernels.hpp>

namespace skit {

void ShardedActivations::validate() const {
    if (shards.empty()) throw std::invalid_argument("sharded activations: empty shard list");
    for (const auto& s : shards)
        if (s.rows() != shards.front().rows())
            throw std::invalid_argument("sharded activations: shard row mismatch");
}

std::vector<double> local_curvature(const DenseMatrix& shard, const DenseMatrix& vm) {
    if (shard.rows() != vm.rows()) throw std::invalid_argument("local_curvature: shape mismatch");
    DenseMatrix atv = matmul_tn(shard, vm);  // k_r x kmin
    std::vector<double> out(vm.cols(), 0.0);
    for (std::size_t i = 0; i < atv.rows(); ++i)
        for (std::size_t j = 0; j < atv.cols(); ++j) out[j] += atv(i, j) * atv(i, j);
    return out;
}

std::vector<double> all_reduce_sum(const std::vector<std::vector<double>>& contributions,
                                   CommLedger* ledger) {
    if (contributions.empty()) throw std::invalid_argument("all_reduce_sum: no contributions");
    const std::size_t len = contributions.front().size();
    for (const auto& c : contributions)
        if (c.size() != len) throw std::invalid_argument("all_reduce_sum: length mismatch");
    std::vector<double> out(len, 0.0);
    // deterministic fold in rank order
    for (const auto& c : contributions)
        for (std::size_t i = 0; i < len; ++i) out[i] += c[i];
    if (ledger) ledger->record("all_reduce_sum", len, contributions.size());
    return out;
}

SpectralStats sharded_stats(const ShardedActivations& sharded, const DenseMatrix& m,
                            const DenseMatrix& g, CommLedger* ledger) {
    sharded.validate();
    if (!m.same_shape(g)) throw std::invalid_argument("sharded_stats: M and G shape mismatch");
    if (sharded.shards.front().rows() != m.cols())
        throw std::invalid_argument("sharded_stats: shard rows must equal parameter cols");
    if (frobenius_norm(m) == 0.0) throw std::invalid_argument("sharded_stats: zero momentum");

    // momentum SVD computed once (replicated per rank in a real deployment)
    auto r = svd(m);
    DenseMatrix v = r.v();
    DenseMatrix gv = matmul(g, v);

    SpectralStats s;
    s.sigma = r.sigma;
    s.c_diag.resize(r.sigma.size());
    for (std::size_t j = 0; j < r.sigma.size(); ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < r.u.rows(); ++i) c += r.u(i, j) * gv(i, j);
        s.c_diag[j] = c;
    }

    std::vector<std::vector<double>> locals;
    locals.reserve(sharded.ranks());
    std::size_t total_cols = 0;
    for (const auto& shard : sharded.shards) {
        locals.push_back(local_curvature(shard, v));
        total_cols += shard.cols();
    }
    s.b_diag = all_reduce_sum(locals, ledger);
    s.k_samples = total_cols;
    return s;
}

DenseMatrix sharded_gram(const ShardedActivations& sharded, const DenseMatrix& vm,
                         CommLedger* ledger) {
    sharded.validate();
    const std::size_t k = vm.cols();
    DenseMatrix total(k, k);
    for (const auto& shard : sharded.shards) {
        DenseMatrix atv = matmul_tn(shard, vm);       // k_r x k
        DenseMatrix gram = matmul_tn(atv, atv);       // k x k
        add_in_place(total, gram);
    }
    if (ledger) ledger->record("all_reduce_gram", k * k, sharded.ranks());
    return total;
}

ShardedActivations split_columns(const DenseMatrix& a, const std::vector<std::size_t>& sizes) {
    std::size_t total = 0;
    for (std::size_t s : sizes) total += s;
    if (total != a.cols()) throw std::invalid_argument("split_columns: sizes must sum to cols");
    ShardedActivations out;
    std::size_t at = 0;
    for (std::size_t s : sizes) {
        DenseMatrix shard(a.rows(), s);
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < s; ++j) shard(i, j) = a(i, at + j);
        out.shards.push_back(std::move(shard));
        at += s;
    }
    return out;
}

}  // namespace skit
