#pragma once

#include <Eigen/Dense>
#include <filesystem>

#include "mixmemb/model.hpp"

namespace mixmemb {

/// Reads a whitespace-separated edge list ("i j" per line, '#' comments).
/// Duplicate pairs are collapsed, self-loops dropped with a warning on
/// stderr. When zero_indexed is false, ids are treated as 1-based.
AdjacencyMatrix load_edge_list(const std::filesystem::path& path,
                               bool zero_indexed = true);

/// Writes "i j" lines, pairs sorted, one per undirected edge. Self-loops
/// are written as "i i".
void write_edge_list(const AdjacencyMatrix& a,
                     const std::filesystem::path& path);

/// Comma-separated numeric matrix, no header.
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const Eigen::MatrixXd& m,
                      const std::filesystem::path& path);

/// Loads a membership matrix of nonnegative counts or weights and
/// l1-normalizes each row. Ragged rows, negatives, and all-zero rows are
/// rejected with the offending row number.
Eigen::MatrixXd load_ground_truth(const std::filesystem::path& path);

}  // namespace mixmemb
