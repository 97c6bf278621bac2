#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mixmemb/rng.hpp"
#include "mixmemb/sparse.hpp"

namespace mixmemb {

/// Ground-truth generative state of a mixed-membership blockmodel:
/// memberships theta (n x k, rows on the probability simplex), symmetric
/// community matrix b with largest entry 1, sparsity scale rho in (0,1],
/// and the Dirichlet concentration alpha0.
struct MMSBParams {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd b;
  double rho = 1.0;
  double alpha0 = 1.0;
  int k = 1;

  int n() const { return static_cast<int>(theta.rows()); }
  void validate() const;  // throws std::invalid_argument on violation
};

/// Dense symmetric matrix of edge probabilities, p = rho * theta * b * theta^T.
struct ProbabilityMatrix {
  Eigen::MatrixXd p;
};

/// Symmetric 0/1 graph. Each unordered pair is stored once (i < j);
/// self-loops are kept separately.
struct AdjacencyMatrix {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> self_loops;

  std::size_t edge_count() const { return edges.size(); }
  SparseMatrix to_sparse() const;
};

/// Samples an n x k membership matrix with independent Dirichlet(alpha0/k)
/// rows, realized as normalized Gamma(alpha0/k, 1) draws. Small
/// concentrations are handled in log space so rows stay normalized even
/// when the raw draws underflow.
Eigen::MatrixXd sample_theta(int n, int k, double alpha0, Rng& rng);

/// Overwrites the first per_community * k rows with one-hot rows, community
/// r mod k for row r, so any prefix of the planted block covers all
/// communities. Remaining rows are untouched.
Eigen::MatrixXd plant_pure_nodes(Eigen::MatrixXd theta, int per_community);

struct CommunityMatrix {
  Eigen::MatrixXd b;  // max entry 1
  double scale;       // divisor applied; multiply rho by this to compensate
};

/// Builds b = diag(beta - eps) + eps * 1 1^T and rescales it so the largest
/// entry is 1, reporting the factor so rho can absorb it.
CommunityMatrix build_b(const Eigen::VectorXd& beta, double offdiag_eps);

ProbabilityMatrix build_probability_matrix(const MMSBParams& params);

/// Samples each unordered pair {i,j} independently as Bernoulli(p_ij);
/// the diagonal is sampled as Bernoulli(p_ii) when include_diagonal is set
/// and forced to zero otherwise. Symmetric by construction.
AdjacencyMatrix sample_adjacency(const ProbabilityMatrix& p, Rng& rng,
                                 bool include_diagonal = true);

}  // namespace mixmemb
