#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

namespace mixmemb {

/// Compressed-row sparse matrix holding a graph adjacency, a probability
/// matrix, or one of their bipartition blocks. Values may be non-binary.
/// Square instances built from symmetric sources stay structurally
/// symmetric; rectangular blocks are plain CSR.
class SparseMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  SparseMatrix() = default;

  // Triplets must not contain duplicate coordinates.
  SparseMatrix(int rows, int cols,
               const std::vector<Eigen::Triplet<double>>& triplets);

  static SparseMatrix from_dense(const Eigen::MatrixXd& m,
                                 double drop_below = 0.0);

  int rows() const { return static_cast<int>(m_.rows()); }
  int cols() const { return static_cast<int>(m_.cols()); }
  std::int64_t nonzeros() const { return m_.nonZeros(); }

  double sum() const;
  bool is_symmetric(double tol = 0.0) const;

  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const { return m_ * x; }
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& x) const { return m_ * x; }

  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(m_); }
  SparseMatrix scaled(double factor) const;

  // Extracts m(row_ids, col_ids). Index lists must be duplicate-free.
  SparseMatrix submatrix(const std::vector<int>& row_ids,
                         const std::vector<int>& col_ids) const;

  const Storage& storage() const { return m_; }

 private:
  Storage m_;
};

}  // namespace mixmemb
