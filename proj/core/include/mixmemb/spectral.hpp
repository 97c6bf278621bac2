#pragma once

#include <Eigen/Dense>

#include "mixmemb/model.hpp"
#include "mixmemb/sparse.hpp"

namespace mixmemb {

/// Top-K eigenpairs of a symmetric matrix: algebraically largest values in
/// descending order, orthonormal eigenvector columns, and the achieved
/// backward error max_i ||M v_i - lambda_i v_i||.
struct EigenPair {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  double residual = 0.0;
};

/// Row sums of a (square or rectangular) block.
struct DegreeDiagonal {
  Eigen::VectorXd d;

  int size() const { return static_cast<int>(d.size()); }
};

struct EigOptions {
  double tol = 1e-10;        // residual tolerance, relative to max(|l1|, 1)
  int dense_threshold = 2048;  // full dense decomposition at or below this n
  int max_iterations = 0;    // 0 -> 50*k + 200 matrix-vector products
  int max_basis = 0;         // 0 -> automatic restart dimension
};

/// Computes the K algebraically largest eigenvalues and eigenvectors.
/// Dense symmetric decomposition up to opts.dense_threshold, Lanczos with
/// full reorthogonalization and thick restarts above it.
EigenPair top_k_eigs(const SparseMatrix& m, int k, const EigOptions& opts = {});

DegreeDiagonal row_degrees(const SparseMatrix& m);

/// Universal-singular-value-thresholding estimate of the community count:
/// the number of eigenvalues of A with |lambda| >= (2 + eta) sqrt(n phat),
/// phat = sum_ij A_ij / n^2. Returns 0 for an empty graph.
int estimate_k_usvt(const AdjacencyMatrix& a, double eta = 0.01,
                    const EigOptions& opts = {});

}  // namespace mixmemb
