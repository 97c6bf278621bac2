#include "mixmemb/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mixmemb/errors.hpp"

namespace mixmemb {

namespace {

// Fixed stream for Lanczos start vectors; the solver itself takes no seed so
// identical inputs always produce identical output.
constexpr std::uint64_t kLanczosSeed = 0x6d69786d656d6221ULL;

double explicit_residual(const SparseMatrix& m, const Eigen::VectorXd& values,
                         const Eigen::MatrixXd& vectors) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const Eigen::VectorXd r =
        m.multiply(Eigen::VectorXd(vectors.col(i))) - values(i) * vectors.col(i);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

// Full symmetric decomposition via LAPACK's divide-and-conquer driver.
// Returns eigenvalues ascending, vectors in the columns of `dense`.
void dense_eigh(Eigen::MatrixXd& dense, Eigen::VectorXd& values) {
  const auto n = static_cast<lapack_int>(dense.rows());
  values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         dense.data(), n, values.data());
  if (info != 0) {
    throw ConvergenceFailure(
        "dense eigendecomposition failed (dsyevd info=" + std::to_string(info) +
            ")",
        std::numeric_limits<double>::infinity());
  }
}

Eigen::VectorXd dense_eigenvalues_only(const SparseMatrix& m) {
  Eigen::MatrixXd dense = m.to_dense();
  const auto n = static_cast<lapack_int>(dense.rows());
  Eigen::VectorXd values(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                         dense.data(), n, values.data());
  if (info != 0) {
    throw ConvergenceFailure(
        "dense eigenvalue computation failed (dsyevd info=" +
            std::to_string(info) + ")",
        std::numeric_limits<double>::infinity());
  }
  return values;
}

EigenPair dense_top_k(const SparseMatrix& m, int k) {
  Eigen::MatrixXd dense = m.to_dense();
  Eigen::VectorXd all_values;
  dense_eigh(dense, all_values);
  const int n = m.rows();
  EigenPair out;
  out.values.resize(k);
  out.vectors.resize(n, k);
  for (int i = 0; i < k; ++i) {
    out.values(i) = all_values(n - 1 - i);
    out.vectors.col(i) = dense.col(n - 1 - i);
  }
  out.residual = explicit_residual(m, out.values, out.vectors);
  return out;
}

// Deterministic pseudo-random unit vector orthogonal to the given basis
// columns. Used for the start vector and to continue after a breakdown.
Eigen::VectorXd fresh_direction(int n, Rng& rng, const Eigen::MatrixXd& basis,
                                int basis_cols) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int attempt = 0; attempt < 16; ++attempt) {
    for (int i = 0; i < n; ++i) v(i) = unif(rng);
    if (basis_cols > 0) {
      const auto b = basis.leftCols(basis_cols);
      v -= b * (b.transpose() * v);
      v -= b * (b.transpose() * v);
    }
    const double nrm = v.norm();
    if (nrm > 1e-8 * std::sqrt(static_cast<double>(n))) return v / nrm;
  }
  throw ConvergenceFailure("lanczos: could not generate a new direction",
                           std::numeric_limits<double>::infinity());
}

// Lanczos with full reorthogonalization and thick restarts. H is maintained
// as the exact Rayleigh quotient V^T M V, so restarts only need the kept
// Ritz values on its diagonal; the coupling column is re-established by the
// explicit orthogonalization of the next Krylov vector.
EigenPair lanczos_top_k(const SparseMatrix& m, int k, const EigOptions& opts) {
  const int n = m.rows();
  const int max_iter =
      opts.max_iterations > 0 ? opts.max_iterations : 50 * k + 200;
  const int m_basis =
      opts.max_basis > 0
          ? std::min(opts.max_basis, n)
          : std::min(n, std::max(2 * k + 16, 40));
  const int keep = std::min(k + 8, m_basis - 2 > k ? m_basis - 2 : k);

  Rng rng(kLanczosSeed);
  Eigen::MatrixXd basis(n, m_basis);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m_basis, m_basis);
  basis.col(0) = fresh_direction(n, rng, basis, 0);

  int j = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd ritz_values;
  Eigen::MatrixXd ritz_vectors;

  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd w = m.multiply(Eigen::VectorXd(basis.col(j)));
    const auto v = basis.leftCols(j + 1);
    Eigen::VectorXd proj = v.transpose() * w;
    w -= v * proj;
    // second pass ("twice is enough")
    Eigen::VectorXd corr = v.transpose() * w;
    w -= v * corr;
    proj += corr;
    h.col(j).head(j + 1) = proj;
    h.row(j).head(j + 1) = proj.transpose();
    double beta = w.norm();

    bool have_ritz = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small;
    if (j + 1 >= k) {
      small.compute(h.topLeftCorner(j + 1, j + 1));
      have_ritz = true;
      // residual estimate of ritz pair i: beta * |last basis coefficient|
      double worst = 0.0;
      double scale = std::max(std::abs(small.eigenvalues()(j)), 1.0);
      for (int i = 0; i < k; ++i) {
        const double c = std::abs(small.eigenvectors()(j, j - i));
        worst = std::max(worst, beta * c);
      }
      best_residual = std::min(best_residual, worst);
      if (worst <= opts.tol * scale) {
        ritz_values.resize(k);
        ritz_vectors.resize(n, k);
        for (int i = 0; i < k; ++i) {
          ritz_values(i) = small.eigenvalues()(j - i);
          ritz_vectors.col(i) =
              basis.leftCols(j + 1) * small.eigenvectors().col(j - i);
          ritz_vectors.col(i).normalize();
        }
        EigenPair out{ritz_values, ritz_vectors, 0.0};
        out.residual = explicit_residual(m, out.values, out.vectors);
        return out;
      }
    }

    if (j + 1 == n) {
      // Krylov space exhausted: the Rayleigh quotient is exact.
      if (!have_ritz) small.compute(h.topLeftCorner(j + 1, j + 1));
      ritz_values.resize(k);
      ritz_vectors.resize(n, k);
      for (int i = 0; i < k; ++i) {
        ritz_values(i) = small.eigenvalues()(j - i);
        ritz_vectors.col(i) =
            basis.leftCols(j + 1) * small.eigenvectors().col(j - i);
        ritz_vectors.col(i).normalize();
      }
      EigenPair out{ritz_values, ritz_vectors, 0.0};
      out.residual = explicit_residual(m, out.values, out.vectors);
      return out;
    }

    if (j + 1 == m_basis) {
      // Thick restart: keep the leading Ritz vectors plus the residual
      // direction.
      Eigen::MatrixXd kept(n, keep);
      Eigen::VectorXd kept_values(keep);
      for (int i = 0; i < keep; ++i) {
        kept_values(i) = small.eigenvalues()(j - i);
        kept.col(i) = basis.leftCols(j + 1) * small.eigenvectors().col(j - i);
      }
      basis.leftCols(keep) = kept;
      h.setZero();
      h.topLeftCorner(keep, keep) = kept_values.asDiagonal();
      if (beta <= 1e-13 * std::max(kept_values.cwiseAbs().maxCoeff(), 1.0)) {
        basis.col(keep) = fresh_direction(n, rng, basis, keep);
      } else {
        basis.col(keep) = w / beta;
      }
      j = keep;
      continue;
    }

    if (beta <= 1e-13 * std::max(std::abs(h(0, 0)), 1.0)) {
      // Invariant subspace found before the basis filled; continue in a
      // fresh direction.
      basis.col(j + 1) = fresh_direction(n, rng, basis, j + 1);
    } else {
      basis.col(j + 1) = w / beta;
    }
    ++j;
  }

  throw ConvergenceFailure(
      "lanczos: no convergence after " + std::to_string(max_iter) +
          " iterations (best residual " + std::to_string(best_residual) + ")",
      best_residual);
}

}  // namespace

EigenPair top_k_eigs(const SparseMatrix& m, int k, const EigOptions& opts) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("top_k_eigs: matrix must be square");
  }
  if (k < 1) throw std::invalid_argument("top_k_eigs: k must be >= 1");
  if (k > m.rows()) {
    throw std::invalid_argument("top_k_eigs: k exceeds the matrix dimension");
  }
  if (m.rows() <= opts.dense_threshold) return dense_top_k(m, k);
  return lanczos_top_k(m, k, opts);
}

DegreeDiagonal row_degrees(const SparseMatrix& m) {
  return DegreeDiagonal{m.row_sums()};
}

int estimate_k_usvt(const AdjacencyMatrix& a, double eta,
                    const EigOptions& opts) {
  if (a.n == 0) return 0;
  if (a.edges.empty() && a.self_loops.empty()) return 0;
  const SparseMatrix m = a.to_sparse();
  const int n = a.n;
  const double phat = m.sum() / (static_cast<double>(n) * n);
  const double threshold = (2.0 + eta) * std::sqrt(n * phat);

  if (n <= opts.dense_threshold) {
    const Eigen::VectorXd values = dense_eigenvalues_only(m);
    int count = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      if (std::abs(values(i)) >= threshold) ++count;
    }
    return count;
  }

  // Iterative path: count both spectrum ends, growing k until the last
  // included eigenvalue falls below the threshold.
  int count = 0;
  for (const double sign : {1.0, -1.0}) {
    const SparseMatrix ms = sign > 0 ? m : m.scaled(-1.0);
    int k_try = std::min(8, n);
    for (;;) {
      EigOptions eopts = opts;
      eopts.max_iterations = std::max(opts.max_iterations, 50 * k_try + 200);
      const EigenPair pairs = top_k_eigs(ms, k_try, eopts);
      int above = 0;
      for (Eigen::Index i = 0; i < pairs.values.size(); ++i) {
        if (pairs.values(i) >= threshold) ++above;
      }
      if (above < k_try || k_try == n) {
        count += above;
        break;
      }
      k_try = std::min(2 * k_try, n);
    }
  }
  return count;
}

}  // namespace mixmemb
