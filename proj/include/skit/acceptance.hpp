// SPDX-License-Identifier: Apache-2.0
//
// The acceptance suite: one entry per criterion, each pinned to its stated
// tolerance. Used by the `skit verify` subcommand and the ctest binary.

#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace skit {

struct CriterionOutcome {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    double alpha_exp_mutation = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> only;  // when non-empty, run only these criterion ids
    std::filesystem::path out_dir;
    std::uint64_t seed = 20240809;
};

std::vector<CriterionOutcome> run_acceptance(const AcceptanceOptions& opts);

}  // namespace skit
