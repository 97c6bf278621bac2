#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mixmemb {

/// Optimal assignment: row a of the cost matrix is matched to column
/// permutation[a], minimizing the summed cost.
struct AssignmentResult {
  std::vector<int> permutation;
  double cost = 0.0;
};

/// Munkres / Hungarian algorithm, O(K^3). Entries must be finite.
AssignmentResult munkres(const Eigen::MatrixXd& cost);

/// Permutation minimizing ||theta_hat - theta * Pi||_F, found by assignment
/// on the negated column inner products.
AssignmentResult theta_alignment(const Eigen::MatrixXd& theta_hat,
                                 const Eigen::MatrixXd& theta);

/// min_Pi ||theta_hat - theta Pi||_F / ||theta||_F.
double relative_error(const Eigen::MatrixXd& theta_hat,
                      const Eigen::MatrixXd& theta);

struct SpearmanResult {
  double value = 0.0;
  bool constant_input = false;  // a constant vector has no rank variance
};

/// Spearman rank correlation with average ranks for ties. Constant input is
/// defined as 0 with the flag set.
SpearmanResult spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// (1/K) max_sigma sum_i RC(theta_hat(:,i), theta(:,sigma(i))).
double rc_avg(const Eigen::MatrixXd& theta_hat, const Eigen::MatrixXd& theta);

}  // namespace mixmemb
