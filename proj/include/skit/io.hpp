// SPDX-License-Identifier: Apache-2.0
//
// Deterministic CSV/JSONL writers (floats at 17 significant digits) and a
// small binary matrix container for snapshot replay.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <skit/dense.hpp>

#include <json.hpp>

namespace skit {

std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void row_values(const std::vector<double>& values);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t width_;
};

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);
    void record(const nlohmann::json& j);

private:
    std::ofstream out_;
};

void write_matrix(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_matrix(const std::filesystem::path& path);

}  // namespace skit
