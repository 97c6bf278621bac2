#include "mixmemb/geonmf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "mixmemb/errors.hpp"
#include "mixmemb/eval.hpp"

namespace mixmemb {

namespace {

constexpr double kEigFloorFactor = 1e-12;

// Re-throws library errors with a pipeline stage prefix, preserving the
// concrete type so callers can still map failures to statuses.
template <class Fn>
auto with_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  const auto tag = [&stage](const std::exception& e) {
    return stage + ": " + e.what();
  };
  try {
    return fn();
  } catch (const ConvergenceFailure& e) {
    throw ConvergenceFailure(tag(e), e.best_residual);
  } catch (const RankDeficiency& e) {
    throw RankDeficiency(tag(e));
  } catch (const PureSetNotFound& e) {
    throw PureSetNotFound(tag(e));
  } catch (const IllConditionedPureSet& e) {
    throw IllConditionedPureSet(tag(e));
  } catch (const MergeFailure& e) {
    throw MergeFailure(tag(e));
  } catch (const DegenerateDegrees& e) {
    throw DegenerateDegrees(tag(e));
  } catch (const EmptyCandidateSet& e) {
    throw EmptyCandidateSet(tag(e));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(tag(e));
  }
}

Eigen::VectorXd inverse_sqrt_eigenvalues(const EigenPair& eig) {
  const int k = static_cast<int>(eig.values.size());
  const double floor = kEigFloorFactor * std::max(eig.values(0), 0.0);
  Eigen::VectorXd inv(k);
  for (int i = 0; i < k; ++i) {
    if (!(eig.values(i) > floor) || eig.values(i) <= 0.0) {
      throw RankDeficiency("top-" + std::to_string(k) +
                           " eigenvalue " + std::to_string(i) +
                           " is not positive (" +
                           std::to_string(eig.values(i)) + ")");
    }
    inv(i) = 1.0 / std::sqrt(eig.values(i));
  }
  return inv;
}

SpectralEmbedding finish_embedding(Eigen::MatrixXd x,
                                   const Eigen::VectorXd& degrees) {
  SpectralEmbedding emb;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double d = degrees(i);
    if (d > 0) {
      x.row(i) /= std::sqrt(d);
    } else {
      x.row(i).setZero();
      emb.isolated.push_back(static_cast<int>(i));
    }
  }
  emb.row_norms = x.rowwise().norm();
  emb.x = std::move(x);
  return emb;
}

double condition_number(const Eigen::MatrixXd& xp) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xp);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double smax = svd.singularValues()(0);
  if (!(smin > 0)) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

std::vector<double> eps0_grid(double fixed_eps0) {
  if (fixed_eps0 >= 0) return {fixed_eps0};
  std::vector<double> grid;
  for (int j = 0; j <= 6; ++j) grid.push_back(std::min(0.01 * (1 << j), 0.5));
  return grid;
}

struct ComponentAlignment {
  bool clean = false;
  std::vector<int> perm;
};

int uf_find(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

Bipartition split_nodes(int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("split_nodes: n must be >= 2");
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  const int half = (n + 1) / 2;
  Bipartition b;
  b.s.assign(ids.begin(), ids.begin() + half);
  b.s_bar.assign(ids.begin() + half, ids.end());
  std::sort(b.s.begin(), b.s.end());
  std::sort(b.s_bar.begin(), b.s_bar.end());
  return b;
}

SpectralEmbedding compute_embedding(const SparseMatrix& a21,
                                    const DegreeDiagonal& d21,
                                    const EigenPair& eig1) {
  if (d21.size() != a21.rows()) {
    throw std::invalid_argument(
        "compute_embedding: degree vector does not match the block rows");
  }
  if (eig1.vectors.rows() != a21.cols()) {
    throw std::invalid_argument(
        "compute_embedding: eigenvector rows do not match the block columns");
  }
  const Eigen::VectorXd inv_sqrt = inverse_sqrt_eigenvalues(eig1);
  Eigen::MatrixXd x =
      a21.multiply(Eigen::MatrixXd(eig1.vectors * inv_sqrt.asDiagonal()));
  return finish_embedding(std::move(x), d21.d);
}

SpectralEmbedding compute_embedding_nosplit(const EigenPair& eig,
                                            const DegreeDiagonal& d) {
  if (d.size() != eig.vectors.rows()) {
    throw std::invalid_argument(
        "compute_embedding_nosplit: degree vector does not match");
  }
  inverse_sqrt_eigenvalues(eig);  // positivity check
  Eigen::MatrixXd x =
      eig.vectors * eig.values.cwiseSqrt().asDiagonal();
  return finish_embedding(std::move(x), d.d);
}

std::vector<int> candidate_pure_set(const SpectralEmbedding& x, double eps0) {
  if (x.rows() == 0) {
    throw std::invalid_argument("candidate_pure_set: empty embedding");
  }
  if (!(eps0 >= 0.0 && eps0 < 1.0)) {
    throw std::invalid_argument("candidate_pure_set: eps0 must lie in [0, 1)");
  }
  const double max_norm = x.row_norms.maxCoeff();
  if (max_norm <= 0.0) {
    throw EmptyCandidateSet("candidate_pure_set: all embedding rows are zero");
  }
  const double threshold = (1.0 - eps0) * max_norm;
  std::vector<int> f;
  for (int i = 0; i < x.rows(); ++i) {
    if (x.row_norms(i) >= threshold) f.push_back(i);
  }
  return f;
}

double pure_node_tau(int k, int n, const DegreeDiagonal& d2,
                     const std::vector<int>& f) {
  if (f.empty()) throw std::invalid_argument("pure_node_tau: empty F");
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (int i : f) {
    if (i < 0 || i >= d2.size()) {
      throw std::invalid_argument("pure_node_tau: index out of range");
    }
    dmin = std::min(dmin, d2.d(i));
    dmax = std::max(dmax, d2.d(i));
  }
  if (!(dmax > 0.0) || !(dmin > 0.0)) {
    throw DegenerateDegrees(
        "pure_node_tau: candidate set contains zero degrees");
  }
  return std::sqrt(static_cast<double>(k) / (4.0 * n) * dmin / dmax);
}

CoverResult partition_pure_nodes(const Eigen::MatrixXd& rows, double tau,
                                 Rng& rng, bool deterministic_pick) {
  const int m = static_cast<int>(rows.rows());
  if (m == 0) {
    throw std::invalid_argument("partition_pure_nodes: no rows");
  }
  if (!(tau > 0.0)) {
    throw std::invalid_argument("partition_pure_nodes: tau must be positive");
  }
  const Eigen::VectorXd norms = rows.rowwise().norm();
  std::vector<char> covered(m, 0);
  std::vector<int> uncovered(m);
  std::iota(uncovered.begin(), uncovered.end(), 0);
  CoverResult result;
  result.labels.assign(m, -1);
  while (!uncovered.empty()) {
    std::size_t pick;
    if (deterministic_pick) {
      pick = 0;
      for (std::size_t i = 1; i < uncovered.size(); ++i) {
        if (norms(uncovered[i]) > norms(uncovered[pick])) pick = i;
      }
    } else {
      std::uniform_int_distribution<std::size_t> dist(0, uncovered.size() - 1);
      pick = dist(rng);
    }
    const int s = uncovered[pick];
    const int cluster = static_cast<int>(result.selected.size());
    result.selected.push_back(s);
    std::vector<int> still;
    still.reserve(uncovered.size());
    for (int i : uncovered) {
      if ((rows.row(i) - rows.row(s)).norm() <= tau) {
        covered[i] = 1;
        result.labels[i] = cluster;
      } else {
        still.push_back(i);
      }
    }
    uncovered = std::move(still);
  }
  return result;
}

PureNodeSelection adapt_eps0(const SpectralEmbedding& x,
                             const DegreeDiagonal& d2, int k, int n_total,
                             Rng& rng, const AdaptOptions& opts) {
  if (x.rows() == 0) throw std::invalid_argument("adapt_eps0: empty embedding");
  if (k < 1) throw std::invalid_argument("adapt_eps0: k must be >= 1");
  bool found_exact_k = false;
  PureNodeSelection best;
  best.condition_number = std::numeric_limits<double>::infinity();
  for (const double eps0 : eps0_grid(opts.fixed_eps0)) {
    std::vector<int> f = candidate_pure_set(x, eps0);
    // Rows isolated inside the same-side block carry no usable degree.
    std::erase_if(f, [&](int i) { return !(d2.d(i) > 0.0); });
    if (f.empty()) continue;
    double tau;
    try {
      tau = pure_node_tau(k, n_total, d2, f);
    } catch (const DegenerateDegrees&) {
      continue;
    }
    Eigen::MatrixXd rows(f.size(), x.k());
    for (std::size_t i = 0; i < f.size(); ++i) rows.row(i) = x.x.row(f[i]);
    const CoverResult cover =
        partition_pure_nodes(rows, tau, rng, opts.deterministic_pick);
    if (static_cast<int>(cover.selected.size()) != k) continue;
    Eigen::MatrixXd xp(k, x.k());
    PureNodeSelection sel;
    sel.candidates = f;
    sel.labels = cover.labels;
    sel.representatives.reserve(k);
    for (int i = 0; i < k; ++i) {
      sel.representatives.push_back(f[cover.selected[i]]);
      xp.row(i) = x.x.row(sel.representatives[i]);
    }
    sel.tau = tau;
    sel.eps0 = eps0;
    sel.condition_number = condition_number(xp);
    found_exact_k = true;
    if (sel.condition_number <= opts.kappa_accept) return sel;
    if (sel.condition_number < best.condition_number) best = std::move(sel);
  }
  if (!found_exact_k) {
    throw PureSetNotFound(
        "adapt_eps0: no eps0 on the grid produced exactly " +
        std::to_string(k) + " representatives");
  }
  return best;
}

HalfEstimate recover_parameters(const SpectralEmbedding& x,
                                const std::vector<int>& sp,
                                const DegreeDiagonal& d21, double kappa_max) {
  const int k = x.k();
  if (static_cast<int>(sp.size()) != k) {
    throw std::invalid_argument(
        "recover_parameters: need exactly K pure indices");
  }
  Eigen::MatrixXd xp(k, k);
  Eigen::VectorXd dp(k);
  for (int i = 0; i < k; ++i) {
    const int idx = sp[i];
    if (idx < 0 || idx >= x.rows()) {
      throw std::invalid_argument("recover_parameters: index out of range");
    }
    xp.row(i) = x.x.row(idx);
    dp(i) = d21.d(idx);
    if (!(dp(i) > 0)) {
      throw DegenerateDegrees("recover_parameters: pure node " +
                              std::to_string(idx) + " has zero degree");
    }
  }
  const double kappa = condition_number(xp);
  if (!(kappa <= kappa_max)) {
    throw IllConditionedPureSet(
        "recover_parameters: condition number " + std::to_string(kappa) +
        " exceeds the limit " + std::to_string(kappa_max));
  }

  HalfEstimate est;
  // beta_i = || e_i^T Dp^{1/2} Xp ||^2 = d_i ||x_i||^2
  Eigen::VectorXd beta_raw(k);
  for (int i = 0; i < k; ++i) beta_raw(i) = dp(i) * xp.row(i).squaredNorm();
  est.rho = beta_raw.maxCoeff();
  est.b_diag = beta_raw / est.rho;

  // theta = D^{1/2} X Xp^{-1} Dp^{-1/2}, with the inverse applied as a
  // K x K solve: Y^T = Xp^{-T} X^T.
  Eigen::MatrixXd y =
      xp.transpose().colPivHouseholderQr().solve(x.x.transpose()).transpose();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double d = d21.d(i);
    y.row(i) *= d > 0 ? std::sqrt(d) : 0.0;
  }
  for (int j = 0; j < k; ++j) y.col(j) /= std::sqrt(dp(j));
  est.theta = std::move(y);
  return est;
}

namespace {

// Community alignment via connected components of the subgraph induced by
// both halves' candidate pure nodes, labelled per half.
ComponentAlignment component_alignment(
    const std::vector<std::pair<int, int>>& first_labelled,
    const std::vector<std::pair<int, int>>& second_labelled, int k,
    const SparseMatrix& a) {
  std::vector<int> members;
  std::vector<int> half_of, label_of;
  for (const auto& [node, label] : first_labelled) {
    members.push_back(node);
    half_of.push_back(0);
    label_of.push_back(label);
  }
  for (const auto& [node, label] : second_labelled) {
    members.push_back(node);
    half_of.push_back(1);
    label_of.push_back(label);
  }
  const int m = static_cast<int>(members.size());
  std::vector<int> slot(a.rows(), -1);
  for (int i = 0; i < m; ++i) slot[members[i]] = i;
  std::vector<int> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < m; ++i) {
    for (SparseMatrix::Storage::InnerIterator it(a.storage(), members[i]); it;
         ++it) {
      const int j = slot[it.col()];
      if (j >= 0 && it.value() != 0.0) {
        parent[uf_find(parent, i)] = uf_find(parent, j);
      }
    }
  }
  // component -> set of labels seen per half
  std::vector<int> comp_ids;
  std::vector<std::array<std::vector<int>, 2>> comp_labels;
  for (int i = 0; i < m; ++i) {
    const int root = uf_find(parent, i);
    auto pos = std::find(comp_ids.begin(), comp_ids.end(), root);
    std::size_t c;
    if (pos == comp_ids.end()) {
      comp_ids.push_back(root);
      comp_labels.emplace_back();
      c = comp_ids.size() - 1;
    } else {
      c = static_cast<std::size_t>(pos - comp_ids.begin());
    }
    auto& seen = comp_labels[c][half_of[i]];
    if (std::find(seen.begin(), seen.end(), label_of[i]) == seen.end()) {
      seen.push_back(label_of[i]);
    }
  }
  ComponentAlignment out;
  if (static_cast<int>(comp_ids.size()) != k) return out;
  out.perm.assign(k, -1);
  for (const auto& labels : comp_labels) {
    if (labels[0].size() != 1 || labels[1].size() != 1) return out;
    const int l1 = labels[0][0];
    const int l2 = labels[1][0];
    if (out.perm[l2] != -1) return out;
    out.perm[l2] = l1;
  }
  for (int v : out.perm) {
    if (v < 0) return out;
  }
  out.clean = true;
  return out;
}

std::vector<std::pair<int, int>> labelled_candidates(
    const HalfEstimate& half, const std::vector<int>& nodes) {
  std::vector<std::pair<int, int>> out;
  out.reserve(half.selection.candidates.size());
  for (std::size_t i = 0; i < half.selection.candidates.size(); ++i) {
    out.emplace_back(nodes[half.selection.candidates[i]],
                     half.selection.labels[i]);
  }
  return out;
}

}  // namespace

std::vector<int> merge_bipartitions(const HalfEstimate& first,
                                    const std::vector<int>& first_nodes,
                                    const HalfEstimate& second,
                                    const std::vector<int>& second_nodes,
                                    const SparseMatrix& a) {
  const int k = static_cast<int>(first.b_diag.size());
  if (static_cast<int>(second.b_diag.size()) != k) {
    throw std::invalid_argument("merge_bipartitions: halves disagree on K");
  }
  if (k == 1) return {0};

  const auto first_labelled = labelled_candidates(first, first_nodes);
  const auto second_labelled = labelled_candidates(second, second_nodes);

  const ComponentAlignment comp =
      component_alignment(first_labelled, second_labelled, k, a);
  if (comp.clean) return comp.perm;

  // Fallback: assignment on cross-edge density between the two halves'
  // candidate clusters.
  std::vector<std::vector<int>> c1(k), c2(k);
  for (const auto& [node, label] : first_labelled) c1[label].push_back(node);
  for (const auto& [node, label] : second_labelled) c2[label].push_back(node);
  std::vector<int> label2_of(a.rows(), -1);
  for (const auto& [node, label] : second_labelled) label2_of[node] = label;
  Eigen::MatrixXd density = Eigen::MatrixXd::Zero(k, k);
  for (int l1 = 0; l1 < k; ++l1) {
    for (int u : c1[l1]) {
      for (SparseMatrix::Storage::InnerIterator it(a.storage(), u); it; ++it) {
        const int l2 = label2_of[it.col()];
        if (l2 >= 0 && it.value() != 0.0) density(l1, l2) += 1.0;
      }
    }
    for (int l2 = 0; l2 < k; ++l2) {
      if (c1[l1].empty() || c2[l2].empty()) continue;
      density(l1, l2) /=
          static_cast<double>(c1[l1].size()) * static_cast<double>(c2[l2].size());
    }
  }
  const AssignmentResult assignment = munkres(-density);
  std::vector<int> perm(k, -1);
  for (int l1 = 0; l1 < k; ++l1) {
    const int l2 = assignment.permutation[l1];
    if (density(l1, l2) <= 0.0) {
      throw MergeFailure(
          "merge_bipartitions: no cross edges between matched clusters " +
          std::to_string(l1) + " and " + std::to_string(l2));
    }
    perm[l2] = l1;
  }
  return perm;
}

NormalizedTheta normalize_theta(const Eigen::MatrixXd& raw) {
  const int k = static_cast<int>(raw.cols());
  if (k < 1) throw std::invalid_argument("normalize_theta: no columns");
  NormalizedTheta out;
  out.theta = raw.cwiseMax(0.0);
  out.uniform_rows.assign(raw.rows(), 0);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double s = out.theta.row(i).sum();
    if (s > 0) {
      out.theta.row(i) /= s;
    } else {
      out.theta.row(i).setConstant(1.0 / k);
      out.uniform_rows[i] = 1;
    }
  }
  return out;
}

namespace {

struct HalfPipeline {
  HalfEstimate estimate;
  std::vector<int> nodes;  // global node id per embedding row
};

HalfPipeline run_half(const std::string& name, const SparseMatrix& cross,
                      const SparseMatrix& same_side, const EigenPair& eig,
                      const std::vector<int>& nodes, int k, int n_total,
                      const FitOptions& opts, Rng& rng) {
  const DegreeDiagonal d_cross = row_degrees(cross);
  const DegreeDiagonal d_same = row_degrees(same_side);
  SpectralEmbedding emb = with_stage("embedding " + name, [&] {
    return compute_embedding(cross, d_cross, eig);
  });
  AdaptOptions aopts;
  aopts.kappa_accept = opts.effective_kappa_accept();
  aopts.deterministic_pick = opts.effective_deterministic_pick();
  aopts.fixed_eps0 = opts.fixed_eps0;
  PureNodeSelection sel = with_stage("pure-node selection " + name, [&] {
    return adapt_eps0(emb, d_same, k, n_total, rng, aopts);
  });
  HalfEstimate est = with_stage("parameter recovery " + name, [&] {
    return recover_parameters(emb, sel.representatives, d_cross,
                              opts.kappa_max);
  });
  est.selection = std::move(sel);
  return {std::move(est), nodes};
}

}  // namespace

FitResult fit(const SparseMatrix& a, int k, const FitOptions& opts, Rng& rng) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("fit: matrix must be square");
  if (k < 1) throw std::invalid_argument("fit: k must be >= 1");
  const Eigen::VectorXd degrees = a.row_sums();
  int active = 0;
  for (int i = 0; i < n; ++i) {
    if (degrees(i) > 0) ++active;
  }
  if (active < 2 * k) {
    throw std::invalid_argument(
        "fit: need at least 2K non-isolated nodes (have " +
        std::to_string(active) + ")");
  }

  FitResult result;
  Eigen::MatrixXd raw(n, k);

  if (!opts.split) {
    const EigenPair eig = with_stage("eigendecomposition", [&] {
      return top_k_eigs(a, k, opts.eig);
    });
    const DegreeDiagonal d{degrees};
    SpectralEmbedding emb = with_stage("embedding", [&] {
      return compute_embedding_nosplit(eig, d);
    });
    AdaptOptions aopts;
    aopts.kappa_accept = opts.effective_kappa_accept();
    aopts.deterministic_pick = opts.effective_deterministic_pick();
    aopts.fixed_eps0 = opts.fixed_eps0;
    PureNodeSelection sel = with_stage("pure-node selection", [&] {
      return adapt_eps0(emb, d, k, n, rng, aopts);
    });
    HalfEstimate est = with_stage("parameter recovery", [&] {
      return recover_parameters(emb, sel.representatives, d, opts.kappa_max);
    });
    est.selection = std::move(sel);
    raw = est.theta;
    result.b_hat = est.b_diag;
    result.rho_hat = est.rho;
    result.alignment.resize(k);
    std::iota(result.alignment.begin(), result.alignment.end(), 0);
    result.halves.push_back(std::move(est));
  } else {
    if (n < 2 * k) {
      throw std::invalid_argument("fit: split requires n >= 2K");
    }
    const Bipartition split = split_nodes(n, rng);
    const SparseMatrix a11 = a.submatrix(split.s, split.s);
    const SparseMatrix a22 = a.submatrix(split.s_bar, split.s_bar);
    const SparseMatrix a21 = a.submatrix(split.s_bar, split.s);
    const SparseMatrix a12 = a.submatrix(split.s, split.s_bar);
    const EigenPair eig1 = with_stage("eigendecomposition A(S,S)", [&] {
      return top_k_eigs(a11, k, opts.eig);
    });
    const EigenPair eig2 = with_stage("eigendecomposition A(S',S')", [&] {
      return top_k_eigs(a22, k, opts.eig);
    });

    HalfPipeline h1 =
        run_half("(S')", a21, a22, eig1, split.s_bar, k, n, opts, rng);
    HalfPipeline h2 =
        run_half("(S)", a12, a11, eig2, split.s, k, n, opts, rng);

    const std::vector<int> perm = with_stage("merge", [&] {
      return merge_bipartitions(h1.estimate, h1.nodes, h2.estimate, h2.nodes,
                                a);
    });

    for (std::size_t r = 0; r < h1.nodes.size(); ++r) {
      raw.row(h1.nodes[r]) = h1.estimate.theta.row(r);
    }
    for (std::size_t r = 0; r < h2.nodes.size(); ++r) {
      for (int j = 0; j < k; ++j) {
        raw(h2.nodes[r], perm[j]) = h2.estimate.theta(r, j);
      }
    }
    // Average the two halves' raw rho * beta products after alignment.
    Eigen::VectorXd raw1 = h1.estimate.rho * h1.estimate.b_diag;
    Eigen::VectorXd raw2 = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < k; ++j) {
      raw2(perm[j]) = h2.estimate.rho * h2.estimate.b_diag(j);
    }
    const Eigen::VectorXd avg = 0.5 * (raw1 + raw2);
    result.rho_hat = avg.maxCoeff();
    result.b_hat = avg / result.rho_hat;
    result.alignment = perm;
    result.bipartition = split;
    result.halves.push_back(std::move(h1.estimate));
    result.halves.push_back(std::move(h2.estimate));
  }

  result.raw_theta = raw;
  NormalizedTheta normalized = normalize_theta(raw);
  result.theta_hat = std::move(normalized.theta);
  result.uniform_rows = std::move(normalized.uniform_rows);
  return result;
}

FitResult fit(const AdjacencyMatrix& a, int k, const FitOptions& opts,
              Rng& rng) {
  return fit(a.to_sparse(), k, opts, rng);
}

}  // namespace mixmemb
