#include "mixmemb/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mixmemb {

namespace {

constexpr int kMaxDenseNodes = 20000;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

void MMSBParams::validate() const {
  require(k >= 1, "MMSBParams: k must be >= 1");
  require(theta.cols() == k, "MMSBParams: theta must have k columns");
  require(theta.rows() >= 1, "MMSBParams: theta must be non-empty");
  require(b.rows() == k && b.cols() == k, "MMSBParams: b must be k x k");
  require(std::isfinite(alpha0) && alpha0 > 0,
          "MMSBParams: alpha0 must be positive and finite");
  require(rho > 0 && rho <= 1.0, "MMSBParams: rho must lie in (0, 1]");
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    require(theta.row(i).minCoeff() >= 0.0,
            "MMSBParams: theta has a negative entry");
    require(std::abs(theta.row(i).sum() - 1.0) < 1e-12,
            "MMSBParams: theta row " + std::to_string(i) +
                " does not sum to 1");
  }
  require(b.minCoeff() >= 0.0, "MMSBParams: b has a negative entry");
  require(std::abs(b.maxCoeff() - 1.0) < 1e-12,
          "MMSBParams: largest entry of b must be 1");
  require((b - b.transpose()).cwiseAbs().maxCoeff() == 0.0,
          "MMSBParams: b must be symmetric");
}

SparseMatrix AdjacencyMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * edges.size() + self_loops.size());
  for (const auto& [i, j] : edges) {
    trips.emplace_back(i, j, 1.0);
    trips.emplace_back(j, i, 1.0);
  }
  for (int i : self_loops) trips.emplace_back(i, i, 1.0);
  return SparseMatrix(n, n, trips);
}

Eigen::MatrixXd sample_theta(int n, int k, double alpha0, Rng& rng) {
  require(n >= 1 && k >= 1, "sample_theta: n and k must be >= 1");
  require(std::isfinite(alpha0) && alpha0 > 0,
          "sample_theta: alpha0 must be positive and finite");
  const double alpha = alpha0 / k;
  Eigen::MatrixXd theta(n, k);
  if (alpha >= 0.1) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int a = 0; a < k; ++a) {
        const double g = gamma(rng);
        theta(i, a) = g;
        sum += g;
      }
      theta.row(i) /= sum;
    }
  } else {
    // Small concentrations: Gamma(alpha) = Gamma(alpha + 1) * U^{1/alpha}
    // underflows, so keep the draws in log space and exponentiate after
    // subtracting the row maximum.
    std::gamma_distribution<double> gamma(alpha + 1.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd logs(k);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < k; ++a) {
        const double g = std::max(gamma(rng), 1e-300);
        const double u = std::max(unif(rng), 1e-300);
        logs(a) = std::log(g) + std::log(u) / alpha;
      }
      const double m = logs.maxCoeff();
      double sum = 0.0;
      for (int a = 0; a < k; ++a) {
        theta(i, a) = std::exp(logs(a) - m);
        sum += theta(i, a);
      }
      theta.row(i) /= sum;
    }
  }
  return theta;
}

Eigen::MatrixXd plant_pure_nodes(Eigen::MatrixXd theta, int per_community) {
  const int n = static_cast<int>(theta.rows());
  const int k = static_cast<int>(theta.cols());
  require(per_community >= 0, "plant_pure_nodes: per_community must be >= 0");
  require(per_community * k <= n,
          "plant_pure_nodes: per_community * k exceeds n");
  for (int r = 0; r < per_community * k; ++r) {
    theta.row(r).setZero();
    theta(r, r % k) = 1.0;
  }
  return theta;
}

CommunityMatrix build_b(const Eigen::VectorXd& beta, double offdiag_eps) {
  const int k = static_cast<int>(beta.size());
  require(k >= 1, "build_b: beta must be non-empty");
  for (int a = 0; a < k; ++a) {
    require(beta(a) > 0 && beta(a) <= 1.0,
            "build_b: beta entries must lie in (0, 1]");
  }
  require(offdiag_eps >= 0, "build_b: offdiag_eps must be >= 0");
  require(offdiag_eps <= beta.minCoeff(),
          "build_b: offdiag_eps must not exceed min(beta)");
  Eigen::MatrixXd b =
      Eigen::MatrixXd::Constant(k, k, offdiag_eps);
  for (int a = 0; a < k; ++a) b(a, a) = beta(a);
  const double scale = b.maxCoeff();
  b /= scale;
  return {b, scale};
}

ProbabilityMatrix build_probability_matrix(const MMSBParams& params) {
  params.validate();
  require(params.n() <= kMaxDenseNodes,
          "build_probability_matrix: n exceeds the dense cap of " +
              std::to_string(kMaxDenseNodes));
  ProbabilityMatrix pm;
  pm.p = params.rho * params.theta * params.b * params.theta.transpose();
  // theta b theta^T <= max(b) = 1 entrywise; clamp rounding dust only.
  pm.p = pm.p.cwiseMax(0.0).cwiseMin(params.rho);
  return pm;
}

AdjacencyMatrix sample_adjacency(const ProbabilityMatrix& p, Rng& rng,
                                 bool include_diagonal) {
  const int n = static_cast<int>(p.p.rows());
  require(p.p.cols() == n, "sample_adjacency: p must be square");
  AdjacencyMatrix a;
  a.n = n;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // The diagonal is always drawn so the off-diagonal stream does not depend
  // on include_diagonal.
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double u = unif(rng);
      if (u < p.p(i, j)) {
        if (i == j) {
          if (include_diagonal) a.self_loops.push_back(i);
        } else {
          a.edges.emplace_back(i, j);
        }
      }
    }
  }
  return a;
}

}  // namespace mixmemb
