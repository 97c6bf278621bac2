#include "mixmemb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace mixmemb {

AssignmentResult munkres(const Eigen::MatrixXd& cost) {
  const int k = static_cast<int>(cost.rows());
  if (cost.cols() != k || k < 1) {
    throw std::invalid_argument("munkres: cost matrix must be square");
  }
  if (!cost.allFinite()) {
    throw std::invalid_argument("munkres: cost matrix has non-finite entries");
  }

  // Shortest augmenting path formulation with row/column potentials,
  // O(K^3). Arrays are 1-based; index 0 is the virtual root.
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<int> match(k + 1, 0);  // column -> matched row
  std::vector<int> way(k + 1, 0);
  for (int i = 1; i <= k; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(k + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(k + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = -1;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  AssignmentResult out;
  out.permutation.assign(k, -1);
  for (int j = 1; j <= k; ++j) out.permutation[match[j] - 1] = j - 1;
  for (int i = 0; i < k; ++i) out.cost += cost(i, out.permutation[i]);
  return out;
}

AssignmentResult theta_alignment(const Eigen::MatrixXd& theta_hat,
                                 const Eigen::MatrixXd& theta) {
  if (theta_hat.rows() != theta.rows() || theta_hat.cols() != theta.cols()) {
    throw std::invalid_argument("theta_alignment: shape mismatch");
  }
  // ||Th - T Pi||_F^2 = ||Th||^2 + ||T||^2 - 2 sum_a <Th(:,a), T(:,pi(a))>,
  // so the Frobenius minimizer is the assignment maximizing the inner
  // products.
  const Eigen::MatrixXd inner = theta_hat.transpose() * theta;
  return munkres(-inner);
}

double relative_error(const Eigen::MatrixXd& theta_hat,
                      const Eigen::MatrixXd& theta) {
  const double denom = theta.norm();
  if (!(denom > 0)) {
    throw std::invalid_argument("relative_error: ground truth has zero norm");
  }
  const AssignmentResult align = theta_alignment(theta_hat, theta);
  Eigen::MatrixXd permuted(theta.rows(), theta.cols());
  for (int a = 0; a < static_cast<int>(theta.cols()); ++a) {
    permuted.col(a) = theta.col(align.permutation[a]);
  }
  return (theta_hat - permuted).norm() / denom;
}

namespace {

// Average ranks, ties sharing the mean of their positions.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return x(a) < x(b); });
  Eigen::VectorXd ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && x(order[j + 1]) == x(order[i])) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (int t = i; t <= j; ++t) ranks(order[t]) = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

SpearmanResult spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  if (x.size() < 2) {
    throw std::invalid_argument("spearman: need at least two observations");
  }
  const Eigen::VectorXd rx = average_ranks(x);
  const Eigen::VectorXd ry = average_ranks(y);
  const Eigen::VectorXd cx = rx.array() - rx.mean();
  const Eigen::VectorXd cy = ry.array() - ry.mean();
  const double vx = cx.squaredNorm();
  const double vy = cy.squaredNorm();
  if (vx == 0.0 || vy == 0.0) return {0.0, true};
  const double value = cx.dot(cy) / std::sqrt(vx * vy);
  return {std::clamp(value, -1.0, 1.0), false};
}

double rc_avg(const Eigen::MatrixXd& theta_hat, const Eigen::MatrixXd& theta) {
  if (theta_hat.rows() != theta.rows() || theta_hat.cols() != theta.cols()) {
    throw std::invalid_argument("rc_avg: shape mismatch");
  }
  const int k = static_cast<int>(theta.cols());
  Eigen::MatrixXd rc(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      rc(i, j) = spearman(theta_hat.col(i), theta.col(j)).value;
    }
  }
  const AssignmentResult best = munkres(-rc);
  double total = 0.0;
  for (int i = 0; i < k; ++i) total += rc(i, best.permutation[i]);
  return total / k;
}

}  // namespace mixmemb
