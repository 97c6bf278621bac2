#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "mixmemb/model.hpp"
#include "mixmemb/rng.hpp"
#include "mixmemb/spectral.hpp"

namespace mixmemb {

/// Random equal-sized split of the node set. Both index lists are sorted;
/// sizes differ by at most one (s holds the extra node when n is odd).
struct Bipartition {
  std::vector<int> s;
  std::vector<int> s_bar;
};

/// Degree-normalized spectral embedding X = D^{-1/2} A21 V1 E1^{-1/2}.
/// Rows whose degree is zero are set to zero and listed in `isolated`.
struct SpectralEmbedding {
  Eigen::MatrixXd x;
  Eigen::VectorXd row_norms;
  std::vector<int> isolated;

  int rows() const { return static_cast<int>(x.rows()); }
  int k() const { return static_cast<int>(x.cols()); }
};

/// Outcome of the candidate-set / clustering stage for one half.
struct PureNodeSelection {
  std::vector<int> candidates;       // F: embedding row indices
  std::vector<int> representatives;  // S_p: one row per community
  std::vector<int> labels;           // cluster id of each candidate
  double tau = 0.0;
  double eps0 = 0.0;
  double condition_number = 0.0;
};

/// Parameter estimates recovered from one half of the bipartition.
/// theta is the raw (unnormalized) membership block for this half's rows.
struct HalfEstimate {
  Eigen::MatrixXd theta;
  Eigen::VectorXd b_diag;  // normalized so the largest entry is 1
  double rho = 0.0;
  PureNodeSelection selection;
};

struct FitOptions {
  bool split = true;        // theory mode; false runs on the full graph
  bool noiseless = false;   // input is a probability matrix, not a sample
  double fixed_eps0 = -1.0;  // >= 0 pins eps0 and disables the grid sweep
  double kappa_max = 1e8;    // hard conditioning limit for X_p
  double kappa_accept = -1.0;  // grid acceptance; < 0 -> 1.5 noiseless, 3.0 sampled
  std::optional<bool> deterministic_pick;  // default: noiseless mode only
  EigOptions eig;

  double effective_kappa_accept() const {
    return kappa_accept >= 0 ? kappa_accept : (noiseless ? 1.5 : 3.0);
  }
  bool effective_deterministic_pick() const {
    return deterministic_pick.value_or(noiseless);
  }
};

struct FitResult {
  Eigen::MatrixXd theta_hat;  // n x k, row-stochastic
  Eigen::MatrixXd raw_theta;  // pre-normalization estimate
  Eigen::VectorXd b_hat;      // k diagonal values, max entry 1
  double rho_hat = 0.0;
  std::vector<HalfEstimate> halves;        // one entry in no-split mode
  std::vector<int> alignment;              // second-half community j -> first-half alignment[j]
  Bipartition bipartition;                 // empty in no-split mode
  std::vector<std::uint8_t> uniform_rows;  // rows replaced by 1/k and flagged
};

Bipartition split_nodes(int n, Rng& rng);

/// X = D21^{-1/2} A21 V1 E1^{-1/2}. Requires all top-K eigenvalues above the
/// floor 1e-12 * lambda_1; throws RankDeficiency otherwise.
SpectralEmbedding compute_embedding(const SparseMatrix& a21,
                                    const DegreeDiagonal& d21,
                                    const EigenPair& eig1);

/// Full-graph variant used in no-split mode: X = D^{-1/2} V E^{1/2}.
SpectralEmbedding compute_embedding_nosplit(const EigenPair& eig,
                                            const DegreeDiagonal& d);

/// F = { i : ||x_i|| >= (1 - eps0) max_j ||x_j|| }.
std::vector<int> candidate_pure_set(const SpectralEmbedding& x, double eps0);

/// tau = sqrt( K/(4n) * min_{i in F} d2_i / max_{i in F} d2_i ), with n the
/// full graph size and d2 the same-side block degrees.
double pure_node_tau(int k, int n, const DegreeDiagonal& d2,
                     const std::vector<int>& f);

struct CoverResult {
  std::vector<int> selected;  // picked representatives, in pick order
  std::vector<int> labels;    // for each row, index into selected
};

/// Greedy radius-tau covering: repeatedly pick an uncovered row (uniformly
/// at random, or the largest-norm one when deterministic_pick is set) and
/// cover everything within tau of it.
CoverResult partition_pure_nodes(const Eigen::MatrixXd& rows, double tau,
                                 Rng& rng, bool deterministic_pick = false);

/// Sweeps eps0 over {0.01 * 2^j, j = 0..6} (capped at 0.5) until the
/// clustering returns exactly K representatives with an acceptable condition
/// number; otherwise returns the best-conditioned exact-K selection seen.
struct AdaptOptions {
  double kappa_accept = 3.0;
  bool deterministic_pick = false;
  double fixed_eps0 = -1.0;  // >= 0 replaces the grid by a single point
};
PureNodeSelection adapt_eps0(const SpectralEmbedding& x,
                             const DegreeDiagonal& d2, int k, int n_total,
                             Rng& rng, const AdaptOptions& opts = {});

/// Steps 7-12: beta_i = d_i ||x_i||^2 over the pure rows, rho = max beta,
/// b = beta / rho, and the half's theta block via a K x K linear solve
/// against X_p (never an explicit inverse).
HalfEstimate recover_parameters(const SpectralEmbedding& x,
                                const std::vector<int>& sp,
                                const DegreeDiagonal& d21,
                                double kappa_max = 1e8);

/// Aligns the second half's communities to the first half's, preferring
/// connected components of the subgraph induced by both pure-node sets and
/// falling back to assignment on cross-edge density. first_nodes /
/// second_nodes map embedding rows to global node ids.
std::vector<int> merge_bipartitions(const HalfEstimate& first,
                                    const std::vector<int>& first_nodes,
                                    const HalfEstimate& second,
                                    const std::vector<int>& second_nodes,
                                    const SparseMatrix& a);

struct NormalizedTheta {
  Eigen::MatrixXd theta;
  std::vector<std::uint8_t> uniform_rows;
};

/// Clips negatives to zero and l1-normalizes each row; all-zero rows become
/// uniform 1/k and are flagged.
NormalizedTheta normalize_theta(const Eigen::MatrixXd& raw);

/// End-to-end GeoNMF: split, per-half eigendecomposition, embedding, eps0
/// adaptation, parameter recovery, merge. The matrix must be symmetric with
/// at least 2K non-isolated nodes; it may hold a sampled adjacency or a
/// probability matrix (noiseless mode).
FitResult fit(const SparseMatrix& a, int k, const FitOptions& opts, Rng& rng);
FitResult fit(const AdjacencyMatrix& a, int k, const FitOptions& opts, Rng& rng);

}  // namespace mixmemb
