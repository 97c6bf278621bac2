#include "mixmemb/sparse.hpp"

#include <cmath>
#include <stdexcept>

namespace mixmemb {

SparseMatrix::SparseMatrix(
    int rows, int cols, const std::vector<Eigen::Triplet<double>>& triplets) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("SparseMatrix: negative dimension");
  }
  m_.resize(rows, cols);
  m_.setFromTriplets(triplets.begin(), triplets.end());
  m_.makeCompressed();
}

SparseMatrix SparseMatrix::from_dense(const Eigen::MatrixXd& m,
                                      double drop_below) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m.size()) / 4 + 16);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (std::abs(v) > drop_below) {
        trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
      }
    }
  }
  return SparseMatrix(static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                      trips);
}

double SparseMatrix::sum() const {
  double s = 0.0;
  for (int i = 0; i < rows(); ++i) {
    for (Storage::InnerIterator it(m_, i); it; ++it) s += it.value();
  }
  return s;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows() != cols()) return false;
  Storage t = Storage(m_.transpose());
  Storage diff = m_ - t;
  for (int i = 0; i < rows(); ++i) {
    for (Storage::InnerIterator it(diff, i); it; ++it) {
      if (std::abs(it.value()) > tol) return false;
    }
  }
  return true;
}

Eigen::VectorXd SparseMatrix::row_sums() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(rows());
  for (int i = 0; i < rows(); ++i) {
    double acc = 0.0;
    for (Storage::InnerIterator it(m_, i); it; ++it) acc += it.value();
    s(i) = acc;
  }
  return s;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  SparseMatrix out;
  out.m_ = m_ * factor;
  return out;
}

SparseMatrix SparseMatrix::submatrix(const std::vector<int>& row_ids,
                                     const std::vector<int>& col_ids) const {
  std::vector<int> col_pos(cols(), -1);
  for (std::size_t j = 0; j < col_ids.size(); ++j) {
    const int c = col_ids[j];
    if (c < 0 || c >= cols()) {
      throw std::invalid_argument("submatrix: column id out of range");
    }
    col_pos[c] = static_cast<int>(j);
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    const int r = row_ids[i];
    if (r < 0 || r >= rows()) {
      throw std::invalid_argument("submatrix: row id out of range");
    }
    for (Storage::InnerIterator it(m_, r); it; ++it) {
      const int jp = col_pos[it.col()];
      if (jp >= 0) trips.emplace_back(static_cast<int>(i), jp, it.value());
    }
  }
  return SparseMatrix(static_cast<int>(row_ids.size()),
                      static_cast<int>(col_ids.size()), trips);
}

}  // namespace mixmemb
