// SPDX-License-Identifier: Apache-2.0
//
// Simulated sharded computation of the curvature statistics: per-rank local
// Gram contributions combined by a single deterministic reduction, with a
// communication ledger. No real networking, the mathematical identity is
// the testable content.

#pragma once

#include <skit/pstar.hpp>

namespace skit {

struct ShardedActivations {
    std::vector<DenseMatrix> shards;  // each n x k_r, columns partitioned by rank
    std::size_t ranks() const { return shards.size(); }
    void validate() const;
};

struct CommRecord {
    std::string op;
    std::size_t length = 0;  // message length per rank
    std::size_t ranks = 0;
};

struct CommLedger {
    std::vector<CommRecord> records;
    void record(const std::string& op, std::size_t length, std::size_t ranks) {
        records.push_back({op, length, ranks});
    }
};

// per-index local contribution ||shard^T V_M e_i||^2 (vm is n x kmin)
std::vector<double> local_curvature(const DenseMatrix& shard, const DenseMatrix& vm);

// elementwise sum in rank order; one reduction recorded per call
std::vector<double> all_reduce_sum(const std::vector<std::vector<double>>& contributions,
                                   CommLedger* ledger = nullptr);

// SVD of M once, C local, B via local_curvature + all_reduce_sum
SpectralStats sharded_stats(const ShardedActivations& sharded, const DenseMatrix& m,
                            const DenseMatrix& g, CommLedger* ledger = nullptr);

// full kmin x kmin Gram reduction (diagnostic for the preconditioned objective)
DenseMatrix sharded_gram(const ShardedActivations& sharded, const DenseMatrix& vm,
                         CommLedger* ledger = nullptr);

// column partition helper
ShardedActivations split_columns(const DenseMatrix& a, const std::vector<std::size_t>& sizes);

}  // namespace skit
