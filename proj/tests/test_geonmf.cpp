#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "mixmemb/errors.hpp"
#include "mixmemb/eval.hpp"
#include "mixmemb/geonmf.hpp"
#include "mixmemb/model.hpp"
#include "oracles.hpp"

using namespace mixmemb;

namespace {

MMSBParams diag_model(Eigen::MatrixXd theta, const Eigen::VectorXd& beta,
                      double rho, double alpha0 = 1.0) {
  MMSBParams p;
  p.k = static_cast<int>(beta.size());
  p.theta = std::move(theta);
  p.b = beta.asDiagonal();
  p.rho = rho;
  p.alpha0 = alpha0;
  return p;
}

// All-pure membership matrix with equal interleaved blocks, so every
// community column sum is exactly n/k and the population geometry is exact.
Eigen::MatrixXd balanced_pure_theta(int n, int k) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < n; ++i) theta(i, i % k) = 1.0;
  return theta;
}

SpectralEmbedding embedding_with_rows(const Eigen::MatrixXd& rows) {
  SpectralEmbedding e;
  e.x = rows;
  e.row_norms = rows.rowwise().norm();
  return e;
}

FitOptions noiseless_opts(bool split) {
  FitOptions o;
  o.split = split;
  o.noiseless = true;
  return o;
}

EigOptions iterative_eig() {
  EigOptions o;
  o.dense_threshold = 0;
  return o;
}

struct SplitPieces {
  Bipartition split;
  SparseMatrix a11, a22, a21, a12;
};

SplitPieces make_split_pieces(const SparseMatrix& a, Rng& rng) {
  SplitPieces sp;
  sp.split = split_nodes(a.rows(), rng);
  sp.a11 = a.submatrix(sp.split.s, sp.split.s);
  sp.a22 = a.submatrix(sp.split.s_bar, sp.split.s_bar);
  sp.a21 = a.submatrix(sp.split.s_bar, sp.split.s);
  sp.a12 = a.submatrix(sp.split.s, sp.split.s_bar);
  return sp;
}

}  // namespace

TEST_SUITE("geonmf") {

TEST_CASE("split_nodes") {
  SUBCASE("n=4 gives two disjoint pairs") {
    Rng rng(1);
    const Bipartition b = split_nodes(4, rng);
    CHECK(b.s.size() == 2);
    CHECK(b.s_bar.size() == 2);
    std::vector<int> all = b.s;
    all.insert(all.end(), b.s_bar.begin(), b.s_bar.end());
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("n=5 gives sizes 3 and 2") {
    Rng rng(2);
    const Bipartition b = split_nodes(5, rng);
    CHECK(b.s.size() == 3);
    CHECK(b.s_bar.size() == 2);
  }
  SUBCASE("same seed, same split") {
    Rng r1(3), r2(3);
    const Bipartition b1 = split_nodes(100, r1);
    const Bipartition b2 = split_nodes(100, r2);
    CHECK(b1.s == b2.s);
    CHECK(b1.s_bar == b2.s_bar);
  }
  SUBCASE("rejects n < 2") {
    Rng rng(4);
    CHECK_THROWS_AS(split_nodes(1, rng), std::invalid_argument);
  }
}

TEST_CASE("compute_embedding rank-one population block") {
  // K=1, P = rho * 1 1^T over halves of size n/2: every row norm must be
  // sqrt(2/n) exactly.
  const int n = 40, half = n / 2;
  const double rho = 0.37;
  const Eigen::MatrixXd block = Eigen::MatrixXd::Constant(half, half, rho);
  const SparseMatrix a11 = SparseMatrix::from_dense(block);
  const SparseMatrix a21 = SparseMatrix::from_dense(block);
  const EigenPair eig = top_k_eigs(a11, 1);
  const SpectralEmbedding emb = compute_embedding(a21, row_degrees(a21), eig);
  for (int i = 0; i < half; ++i) {
    CHECK(emb.row_norms(i) == doctest::Approx(std::sqrt(2.0 / n)).epsilon(1e-10));
  }
}

TEST_CASE("compute_embedding planted pure norms approach sqrt(2K/n)") {
  const int n = 400, k = 3;
  Rng rng(11);
  Eigen::MatrixXd theta = plant_pure_nodes(sample_theta(n, k, 1.0, rng), 4);
  const MMSBParams params =
      diag_model(std::move(theta), Eigen::Vector3d(0.6, 0.8, 1.0), 0.7);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const SparseMatrix pa = SparseMatrix::from_dense(p.p, 1e-15);
  Rng srng(12);
  const SplitPieces sp = make_split_pieces(pa, srng);
  const EigenPair eig = top_k_eigs(sp.a11, k);
  const SpectralEmbedding emb = compute_embedding(sp.a21, row_degrees(sp.a21), eig);
  const double target = 2.0 * k / n;
  int pure_seen = 0;
  for (std::size_t r = 0; r < sp.split.s_bar.size(); ++r) {
    const int node = sp.split.s_bar[r];
    if (node < 4 * k) {  // planted block
      ++pure_seen;
      CHECK(emb.row_norms(r) * emb.row_norms(r) ==
            doctest::Approx(target).epsilon(0.2));
      // exact population identity: d_i * ||x_i||^2 = rho * beta_a
      const int community = node % k;
      const double d = row_degrees(sp.a21).d(r);
      CHECK(d * emb.row_norms(r) * emb.row_norms(r) ==
            doctest::Approx(params.rho * params.b(community, community))
                .epsilon(1e-8));
    }
  }
  CHECK(pure_seen > 0);
}

TEST_CASE("compute_embedding pure rows of different communities are orthogonal") {
  // n=8 planted example: theta one-hot, b identity, rho 1, explicit blocks.
  const int n = 8, k = 2;
  const Eigen::MatrixXd theta = balanced_pure_theta(n, k);
  const MMSBParams params = diag_model(theta, Eigen::Vector2d(1.0, 1.0), 1.0);
  const ProbabilityMatrix p = build_probability_matrix(params);
  // split by hand: S = {0,1,2,3}, S' = {4,5,6,7}
  const std::vector<int> s{0, 1, 2, 3}, sbar{4, 5, 6, 7};
  const SparseMatrix pa = SparseMatrix::from_dense(p.p);
  const SparseMatrix a11 = pa.submatrix(s, s);
  const SparseMatrix a21 = pa.submatrix(sbar, s);
  const EigenPair eig = top_k_eigs(a11, k);
  const SpectralEmbedding emb = compute_embedding(a21, row_degrees(a21), eig);
  // independent oracle: dense decomposition computed from scratch
  Eigen::VectorXd ovals;
  Eigen::MatrixXd ovecs;
  oracles::jacobi_eigh(a11.to_dense(), ovals, ovecs);
  Eigen::MatrixXd xo(4, k);
  const Eigen::VectorXd d = row_degrees(a21).d;
  const Eigen::MatrixXd a21_dense = a21.to_dense();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < k; ++j) {
      xo(i, j) = (a21_dense.row(i) * ovecs.col(3 - j))(0) /
                 std::sqrt(ovals(3 - j)) / std::sqrt(d(i));
    }
  }
  // same Gram structure: rows from different communities orthogonal
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const bool same = (sbar[i] % 2) == (sbar[j] % 2);
      const double dot = emb.x.row(i).dot(emb.x.row(j));
      const double odot = xo.row(i).dot(xo.row(j));
      if (same) {
        CHECK(dot > 0.1);
      } else {
        CHECK(std::abs(dot) < 1e-10);
      }
      CHECK(dot == doctest::Approx(odot).epsilon(1e-8));
    }
  }
}

TEST_CASE("compute_embedding flags zero-degree rows and checks rank") {
  Eigen::MatrixXd block(3, 3);
  block << 1, 1, 0,
           0, 0, 0,
           1, 0, 1;
  Eigen::MatrixXd sym = Eigen::MatrixXd::Identity(3, 3);
  const EigenPair eig = top_k_eigs(SparseMatrix::from_dense(sym), 2);
  const SparseMatrix a21 = SparseMatrix::from_dense(block);
  const SpectralEmbedding emb = compute_embedding(a21, row_degrees(a21), eig);
  CHECK(emb.isolated == std::vector<int>{1});
  CHECK(emb.x.row(1).norm() == 0.0);

  EigenPair bad = eig;
  bad.values(1) = 0.0;
  CHECK_THROWS_AS(compute_embedding(a21, row_degrees(a21), bad),
                  RankDeficiency);
}

TEST_CASE("candidate_pure_set") {
  Eigen::MatrixXd rows(3, 2);
  rows << 1.0, 0.0,
          0.99, 0.0,
          0.5, 0.0;
  const SpectralEmbedding emb = embedding_with_rows(rows);
  SUBCASE("multiplicative threshold") {
    CHECK(candidate_pure_set(emb, 0.02) == std::vector<int>{0, 1});
  }
  SUBCASE("eps0 = 0 keeps only the argmax rows (ties included)") {
    CHECK(candidate_pure_set(emb, 0.0) == std::vector<int>{0});
    Eigen::MatrixXd tied(3, 2);
    tied << 1.0, 0.0, 0.0, 1.0, 0.5, 0.0;
    CHECK(candidate_pure_set(embedding_with_rows(tied), 0.0) ==
          std::vector<int>{0, 1});
  }
  SUBCASE("invalid eps0") {
    CHECK_THROWS_AS(candidate_pure_set(emb, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(candidate_pure_set(emb, -0.1), std::invalid_argument);
  }
  SUBCASE("all-zero embedding") {
    const SpectralEmbedding zero =
        embedding_with_rows(Eigen::MatrixXd::Zero(3, 2));
    CHECK_THROWS_AS(candidate_pure_set(zero, 0.1), EmptyCandidateSet);
  }
}

TEST_CASE("pure_node_tau worked examples") {
  SUBCASE("equal degrees, K=3, n=300") {
    DegreeDiagonal d{Eigen::VectorXd::Constant(10, 7.0)};
    const std::vector<int> f{0, 3, 9};
    CHECK(pure_node_tau(3, 300, d, f) == doctest::Approx(0.05).epsilon(1e-15));
  }
  SUBCASE("ratio 1/4, K=4, n=400") {
    Eigen::VectorXd deg(4);
    deg << 4.0, 16.0, 8.0, 10.0;
    DegreeDiagonal d{deg};
    const std::vector<int> f{0, 1, 2, 3};
    CHECK(pure_node_tau(4, 400, d, f) == doctest::Approx(0.025).epsilon(1e-15));
  }
  SUBCASE("K = n boundary") {
    DegreeDiagonal d{Eigen::VectorXd::Constant(5, 3.0)};
    const std::vector<int> f{0, 1};
    CHECK(pure_node_tau(128, 128, d, f) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("zero degrees are rejected") {
    DegreeDiagonal d{Eigen::VectorXd::Zero(3)};
    const std::vector<int> f{0, 1, 2};
    CHECK_THROWS_AS(pure_node_tau(2, 10, d, f), DegenerateDegrees);
  }
}

TEST_CASE("partition_pure_nodes") {
  SUBCASE("duplicates cluster together") {
    Eigen::MatrixXd rows(3, 2);
    rows << 1, 0,
            1, 0,
            0, 1;
    Rng rng(21);
    const CoverResult r = partition_pure_nodes(rows, 0.1, rng);
    REQUIRE(r.selected.size() == 2);
    CHECK(r.labels[0] == r.labels[1]);
    CHECK(r.labels[2] != r.labels[0]);
  }
  SUBCASE("tau above the diameter leaves one representative") {
    Rng rng(22);
    Eigen::MatrixXd rows = Eigen::MatrixXd::Random(6, 3);
    const CoverResult r = partition_pure_nodes(rows, 100.0, rng);
    CHECK(r.selected.size() == 1);
    for (int l : r.labels) CHECK(l == 0);
  }
  SUBCASE("noiseless planted run selects one per community") {
    const int n = 120, k = 3;
    const Eigen::MatrixXd theta = balanced_pure_theta(n, k);
    const MMSBParams params =
        diag_model(theta, Eigen::Vector3d(0.6, 0.8, 1.0), 1.0);
    const ProbabilityMatrix p = build_probability_matrix(params);
    const SparseMatrix pa = SparseMatrix::from_dense(p.p, 1e-15);
    Rng srng(23);
    const SplitPieces sp = make_split_pieces(pa, srng);
    const EigenPair eig = top_k_eigs(sp.a11, k);
    const DegreeDiagonal d21 = row_degrees(sp.a21);
    const SpectralEmbedding emb = compute_embedding(sp.a21, d21, eig);
    const DegreeDiagonal d2 = row_degrees(sp.a22);
    // every node is pure here, so a wide eps0 still admits only pure rows
    const std::vector<int> f = candidate_pure_set(emb, 0.3);
    const double tau = pure_node_tau(k, n, d2, f);
    Eigen::MatrixXd rows(f.size(), k);
    for (std::size_t i = 0; i < f.size(); ++i) rows.row(i) = emb.x.row(f[i]);
    Rng rng(24);
    const CoverResult r = partition_pure_nodes(rows, tau, rng);
    REQUIRE(r.selected.size() == 3);
    std::vector<int> communities;
    for (int sel : r.selected) {
      communities.push_back(sp.split.s_bar[f[sel]] % k);
    }
    std::sort(communities.begin(), communities.end());
    CHECK(communities == std::vector<int>{0, 1, 2});
  }
  SUBCASE("argument checks") {
    Rng rng(25);
    CHECK_THROWS_AS(partition_pure_nodes(Eigen::MatrixXd::Zero(2, 2), 0.0, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("recover_parameters is exact on noiseless planted input") {
  const int n = 240, k = 3;
  Rng rng(31);
  Eigen::MatrixXd theta = plant_pure_nodes(sample_theta(n, k, 1.0, rng), 6);
  const Eigen::Vector3d beta(0.6, 0.8, 1.0);
  const double rho = 0.7;
  const MMSBParams params = diag_model(theta, beta, rho);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const SparseMatrix pa = SparseMatrix::from_dense(p.p, 1e-15);
  Rng srng(32);
  const SplitPieces sp = make_split_pieces(pa, srng);
  const EigenPair eig = top_k_eigs(sp.a11, k);
  const DegreeDiagonal d21 = row_degrees(sp.a21);
  const SpectralEmbedding emb = compute_embedding(sp.a21, d21, eig);

  // exact pure rows: the first planted node of each community in S'
  std::vector<int> sp_rows;
  for (int a = 0; a < k && static_cast<int>(sp_rows.size()) < k; ++a) {
    for (std::size_t r = 0; r < sp.split.s_bar.size(); ++r) {
      const int node = sp.split.s_bar[r];
      if (node < 6 * k && node % k == a) {
        sp_rows.push_back(static_cast<int>(r));
        break;
      }
    }
  }
  REQUIRE(sp_rows.size() == 3);
  const HalfEstimate est = recover_parameters(emb, sp_rows, d21);

  // theta half equals theta(S',:) up to the community permutation
  Eigen::MatrixXd truth(sp.split.s_bar.size(), k);
  for (std::size_t r = 0; r < sp.split.s_bar.size(); ++r) {
    truth.row(r) = params.theta.row(sp.split.s_bar[r]);
  }
  CHECK(relative_error(est.theta, truth) < 1e-8);
  // the selection order here is community a for row a, so the permutation
  // is the identity: b and rho recover exactly
  CHECK(est.rho == doctest::Approx(rho).epsilon(1e-8));
  for (int a = 0; a < k; ++a) {
    CHECK(est.b_diag(a) == doctest::Approx(beta(a)).epsilon(1e-8));
  }
  // rows of the estimate at the selected pure indices are basis rows
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      CHECK(est.theta(sp_rows[a], b) ==
            doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("recover_parameters rejects an ill-conditioned pure set") {
  SpectralEmbedding emb;
  emb.x.resize(4, 2);
  emb.x << 1.0, 0.0,
           1.0, 1e-12,
           0.0, 1.0,
           0.5, 0.5;
  emb.row_norms = emb.x.rowwise().norm();
  DegreeDiagonal d{Eigen::VectorXd::Constant(4, 5.0)};
  CHECK_THROWS_AS(recover_parameters(emb, {0, 1}, d, 1e6),
                  IllConditionedPureSet);
}

TEST_CASE("adapt_eps0") {
  SUBCASE("noiseless balanced run accepts the smallest grid point") {
    const int n = 120, k = 3;
    const Eigen::MatrixXd theta = balanced_pure_theta(n, k);
    const MMSBParams params =
        diag_model(theta, Eigen::Vector3d(0.6, 0.8, 1.0), 1.0);
    const ProbabilityMatrix p = build_probability_matrix(params);
    const SparseMatrix pa = SparseMatrix::from_dense(p.p, 1e-15);
    const EigenPair eig = top_k_eigs(pa, k);
    const DegreeDiagonal d = row_degrees(pa);
    const SpectralEmbedding emb = compute_embedding_nosplit(eig, d);
    Rng rng(41);
    AdaptOptions opts;
    opts.kappa_accept = 1.5;
    opts.deterministic_pick = true;
    const PureNodeSelection sel = adapt_eps0(emb, d, k, n, rng, opts);
    CHECK(sel.eps0 == doctest::Approx(0.01));
    CHECK(sel.condition_number <= 1.0 + 1e-6);
    CHECK(sel.representatives.size() == 3);
  }
  SUBCASE("K=1 picks a single representative with kappa 1") {
    Eigen::MatrixXd rows(5, 1);
    rows << 1.0, 0.99, 0.98, 0.97, 0.96;
    SpectralEmbedding emb = embedding_with_rows(rows);
    DegreeDiagonal d{Eigen::VectorXd::Constant(5, 4.0)};
    Rng rng(42);
    const PureNodeSelection sel = adapt_eps0(emb, d, 1, 5, rng, {});
    CHECK(sel.representatives.size() == 1);
    CHECK(sel.condition_number == doctest::Approx(1.0));
  }
  SUBCASE("sampled default simulation returns exactly K on 10 seeds") {
    const int n = 2000, k = 3;
    for (int seed = 0; seed < 10; ++seed) {
      Rng rng(600 + seed);
      const MMSBParams params = diag_model(sample_theta(n, k, 1.0, rng),
                                           Eigen::Vector3d(0.6, 0.8, 1.0), 1.0);
      const ProbabilityMatrix p = build_probability_matrix(params);
      const AdjacencyMatrix adj = sample_adjacency(p, rng, true);
      const SparseMatrix a = adj.to_sparse();
      const EigenPair eig = top_k_eigs(a, k, iterative_eig());
      const DegreeDiagonal d = row_degrees(a);
      const SpectralEmbedding emb = compute_embedding_nosplit(eig, d);
      const PureNodeSelection sel = adapt_eps0(emb, d, k, n, rng, {});
      CHECK(sel.representatives.size() == 3);
    }
  }
}

TEST_CASE("merge_bipartitions identity for K=1") {
  HalfEstimate h1, h2;
  h1.b_diag = Eigen::VectorXd::Ones(1);
  h2.b_diag = Eigen::VectorXd::Ones(1);
  const SparseMatrix a = SparseMatrix::from_dense(Eigen::MatrixXd::Ones(2, 2));
  CHECK(merge_bipartitions(h1, {0}, h2, {1}, a) == std::vector<int>{0});
}

TEST_CASE("fit noiseless planted input recovers everything") {
  const int n = 300, k = 3;
  Rng rng(51);
  Eigen::MatrixXd theta = plant_pure_nodes(sample_theta(n, k, 1.0, rng), 2);
  const Eigen::Vector3d beta(0.6, 0.8, 1.0);
  const MMSBParams params = diag_model(theta, beta, 0.7);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const SparseMatrix pa = SparseMatrix::from_dense(p.p, 1e-15);
  Rng fit_rng(52);
  const FitResult fr = fit(pa, k, noiseless_opts(/*split=*/false), fit_rng);
  CHECK(relative_error(fr.theta_hat, params.theta) < 1e-6);
  CHECK(std::abs(fr.rho_hat - params.rho) / params.rho < 1e-6);
  const AssignmentResult align = theta_alignment(fr.theta_hat, params.theta);
  for (int a = 0; a < k; ++a) {
    CHECK(std::abs(fr.b_hat(a) - beta(align.permutation[a])) < 1e-6);
  }
  // pure-row argmax matches the planted community after alignment
  for (int r = 0; r < 2 * k; ++r) {
    int argmax = 0;
    fr.theta_hat.row(r).maxCoeff(&argmax);
    CHECK(align.permutation[argmax] == r % k);
  }
}

TEST_CASE("fit split mode is exact when every node is pure") {
  const int n = 200, k = 3;
  const Eigen::MatrixXd theta = balanced_pure_theta(n, k);
  const MMSBParams params =
      diag_model(theta, Eigen::Vector3d(0.6, 0.8, 1.0), 0.9);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const SparseMatrix pa = SparseMatrix::from_dense(p.p, 1e-15);
  Rng fit_rng(53);
  const FitResult fr = fit(pa, k, noiseless_opts(/*split=*/true), fit_rng);
  CHECK(fr.halves.size() == 2);
  CHECK(relative_error(fr.theta_hat, params.theta) < 1e-6);
  CHECK(std::abs(fr.rho_hat - params.rho) / params.rho < 1e-6);
}

TEST_CASE("fit K=1 returns the trivial community") {
  SUBCASE("complete graph with loops recovers the density exactly") {
    const int n = 40;
    const SparseMatrix a = SparseMatrix::from_dense(Eigen::MatrixXd::Ones(n, n));
    Rng fit_rng(54);
    FitOptions opts;
    opts.split = false;
    const FitResult fr = fit(a, 1, opts, fit_rng);
    CHECK(fr.theta_hat == Eigen::MatrixXd::Ones(n, 1));
    CHECK(fr.b_hat(0) == 1.0);
    CHECK(fr.rho_hat == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("dense sampled graph lands near the edge density") {
    // rho_hat carries the selected node's squared degree fluctuation, so a
    // dense graph keeps the comparison tight
    const int n = 400;
    Rng rng(55);
    MMSBParams params;
    params.k = 1;
    params.theta = Eigen::MatrixXd::Ones(n, 1);
    params.b = Eigen::MatrixXd::Ones(1, 1);
    params.rho = 0.9;
    const ProbabilityMatrix p = build_probability_matrix(params);
    const AdjacencyMatrix adj = sample_adjacency(p, rng, true);
    Rng fit_rng(56);
    FitOptions opts;
    opts.split = false;
    const FitResult fr = fit(adj, 1, opts, fit_rng);
    CHECK(fr.theta_hat == Eigen::MatrixXd::Ones(n, 1));
    CHECK(fr.b_hat(0) == 1.0);
    const double density = adj.to_sparse().sum() / (double(n) * n);
    CHECK(fr.rho_hat == doctest::Approx(density).epsilon(0.15));
  }
}

TEST_CASE("fit scale equivariance in noiseless mode") {
  const int n = 150, k = 3;
  Rng rng(56);
  Eigen::MatrixXd theta = plant_pure_nodes(sample_theta(n, k, 1.0, rng), 2);
  const Eigen::Vector3d beta(0.6, 0.8, 1.0);
  const MMSBParams base = diag_model(theta, beta, 0.4);
  MMSBParams scaled = base;
  const double c = 2.0;
  scaled.rho = base.rho * c;
  const SparseMatrix p1 =
      SparseMatrix::from_dense(build_probability_matrix(base).p, 1e-15);
  const SparseMatrix p2 =
      SparseMatrix::from_dense(build_probability_matrix(scaled).p, 1e-15);
  Rng r1(57), r2(57);
  const FitResult f1 = fit(p1, k, noiseless_opts(false), r1);
  const FitResult f2 = fit(p2, k, noiseless_opts(false), r2);
  CHECK((f1.theta_hat - f2.theta_hat).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(f2.rho_hat == doctest::Approx(c * f1.rho_hat).epsilon(1e-8));
}

TEST_CASE("fit is deterministic for a fixed seed") {
  const int n = 400, k = 3;
  Rng rng(58);
  const MMSBParams params = diag_model(sample_theta(n, k, 1.0, rng),
                                       Eigen::Vector3d(0.6, 0.8, 1.0), 1.0);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const AdjacencyMatrix adj = sample_adjacency(p, rng, true);
  const SparseMatrix a = adj.to_sparse();
  FitOptions opts;  // split mode, randomized picks
  Rng r1(59), r2(59);
  const FitResult f1 = fit(a, k, opts, r1);
  const FitResult f2 = fit(a, k, opts, r2);
  CHECK(f1.theta_hat == f2.theta_hat);
  CHECK(f1.b_hat == f2.b_hat);
  CHECK(f1.rho_hat == f2.rho_hat);
  CHECK(f1.alignment == f2.alignment);
}

TEST_CASE("fit argument validation") {
  Rng rng(60);
  const SparseMatrix empty = SparseMatrix::from_dense(Eigen::MatrixXd::Zero(8, 8));
  CHECK_THROWS_AS(fit(empty, 2, FitOptions{}, rng), std::invalid_argument);
  const SparseMatrix rect = SparseMatrix::from_dense(Eigen::MatrixXd::Ones(3, 4));
  CHECK_THROWS_AS(fit(rect, 1, FitOptions{}, rng), std::invalid_argument);
}

TEST_CASE("fit reports rank deficiency on a rank-one graph") {
  // all-ones adjacency (complete graph with loops) has rank 1
  const SparseMatrix ones = SparseMatrix::from_dense(Eigen::MatrixXd::Ones(12, 12));
  Rng rng(61);
  FitOptions opts;
  opts.split = false;
  CHECK_THROWS_AS(fit(ones, 2, opts, rng), RankDeficiency);
}

TEST_CASE("norm ordering: pure rows dominate mixed rows in balanced runs") {
  // equal column sums by construction: k pure rows per block plus uniform
  // mixed rows contribute identically to every community
  const int k = 3;
  const int pure_per = 20, mixed = 30;
  const int n = pure_per * k + mixed;
  Eigen::MatrixXd theta(n, k);
  for (int i = 0; i < pure_per * k; ++i) {
    theta.row(i).setZero();
    theta(i, i % k) = 1.0;
  }
  for (int i = pure_per * k; i < n; ++i) {
    theta.row(i).setConstant(1.0 / k);
  }
  const MMSBParams params =
      diag_model(theta, Eigen::Vector3d(0.6, 0.8, 1.0), 0.8);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const SparseMatrix pa = SparseMatrix::from_dense(p.p, 1e-15);
  const EigenPair eig = top_k_eigs(pa, k);
  const DegreeDiagonal d = row_degrees(pa);
  const SpectralEmbedding emb = compute_embedding_nosplit(eig, d);
  double min_pure = std::numeric_limits<double>::infinity();
  double max_mixed = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i < pure_per * k) {
      min_pure = std::min(min_pure, emb.row_norms(i));
    } else {
      max_mixed = std::max(max_mixed, emb.row_norms(i));
    }
  }
  CHECK(min_pure > max_mixed + 1e-12);
}

TEST_CASE("merged theta beats misaligned alternatives on sampled graphs" *
          doctest::timeout(600)) {
  const int n = 2000, k = 3;
  Rng rng(62);
  const MMSBParams params = diag_model(sample_theta(n, k, 1.0, rng),
                                       Eigen::Vector3d(0.6, 0.8, 1.0), 1.0);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const AdjacencyMatrix adj = sample_adjacency(p, rng, true);
  const SparseMatrix a = adj.to_sparse();
  FitOptions opts;
  opts.eig = iterative_eig();
  Rng fit_rng(63);
  const FitResult fr = fit(a, k, opts, fit_rng);
  REQUIRE(fr.halves.size() == 2);

  // reassemble theta under every possible alignment of the second half
  std::vector<int> perm{0, 1, 2};
  const double chosen = relative_error(fr.theta_hat, params.theta);
  double worst = chosen;
  do {
    Eigen::MatrixXd raw(n, k);
    for (std::size_t r = 0; r < fr.bipartition.s_bar.size(); ++r) {
      raw.row(fr.bipartition.s_bar[r]) = fr.halves[0].theta.row(r);
    }
    for (std::size_t r = 0; r < fr.bipartition.s.size(); ++r) {
      for (int j = 0; j < k; ++j) {
        raw(fr.bipartition.s[r], perm[j]) = fr.halves[1].theta(r, j);
      }
    }
    const double err =
        relative_error(normalize_theta(raw).theta, params.theta);
    worst = std::max(worst, err);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(chosen < worst);
}

TEST_CASE("row-wise embedding concentration improves with n" *
          doctest::timeout(900)) {
  // median over rows of ||Xhat_i - (X O)_i|| / ||X_i|| with the Procrustes
  // rotation against the population embedding, at n=1000 and n=4000
  const int k = 3;
  const Eigen::Vector3d beta(0.6, 0.8, 1.0);
  const Eigen::MatrixXd bsqrt =
      beta.cwiseSqrt().asDiagonal().toDenseMatrix();
  std::vector<double> medians;
  for (const int n : {1000, 4000}) {
    std::vector<double> seed_medians;
    for (int seed = 0; seed < 10; ++seed) {
      Rng rng(700 + seed);
      const MMSBParams params =
          diag_model(sample_theta(n, k, 1.0, rng), beta, 1.0);
      const ProbabilityMatrix p = build_probability_matrix(params);
      const AdjacencyMatrix adj = sample_adjacency(p, rng, true);
      const SparseMatrix a = adj.to_sparse();
      Rng srng(800 + seed);
      const SplitPieces sp = make_split_pieces(a, srng);
      EigOptions eo = iterative_eig();
      const EigenPair eig = top_k_eigs(sp.a11, k, eo);
      const DegreeDiagonal d21 = row_degrees(sp.a21);
      const SpectralEmbedding emb = compute_embedding(sp.a21, d21, eig);

      // population: X_i = sqrt(rho) e_i D21pop^{-1/2} Theta2 B^{1/2}
      const std::size_t m = sp.split.s_bar.size();
      Eigen::MatrixXd pop(m, k);
      for (std::size_t r = 0; r < m; ++r) {
        double dpop = 0.0;
        const int node = sp.split.s_bar[r];
        for (int j : sp.split.s) dpop += p.p(node, j);
        pop.row(r) = std::sqrt(params.rho) *
                     (params.theta.row(node) * bsqrt) / std::sqrt(dpop);
      }
      const Eigen::MatrixXd rot = oracles::procrustes_rotation(emb.x, pop);
      const Eigen::MatrixXd aligned = pop * rot;
      std::vector<double> rel;
      for (std::size_t r = 0; r < m; ++r) {
        const double denom = pop.row(r).norm();
        if (denom > 0) {
          rel.push_back((emb.x.row(r) - aligned.row(r)).norm() / denom);
        }
      }
      std::nth_element(rel.begin(), rel.begin() + rel.size() / 2, rel.end());
      seed_medians.push_back(rel[rel.size() / 2]);
    }
    std::nth_element(seed_medians.begin(), seed_medians.begin() + 5,
                     seed_medians.end());
    medians.push_back(seed_medians[5]);
  }
  CHECK(medians[1] <= 0.5);
  CHECK(medians[1] < medians[0]);
}

TEST_CASE("normalize_theta") {
  SUBCASE("stochastic rows pass through") {
    Eigen::MatrixXd raw(1, 2);
    raw << 0.5, 0.5;
    const NormalizedTheta r = normalize_theta(raw);
    CHECK(r.theta == raw);
    CHECK(r.uniform_rows[0] == 0);
  }
  SUBCASE("clips negatives then normalizes") {
    Eigen::MatrixXd raw(1, 2);
    raw << -0.1, 1.1;
    const NormalizedTheta r = normalize_theta(raw);
    CHECK(r.theta(0, 0) == 0.0);
    CHECK(r.theta(0, 1) == 1.0);
  }
  SUBCASE("zero rows become uniform and flagged") {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(2, 4);
    raw(0, 1) = 2.0;
    const NormalizedTheta r = normalize_theta(raw);
    CHECK(r.theta(0, 1) == 1.0);
    CHECK(r.uniform_rows[0] == 0);
    CHECK(r.theta.row(1) == Eigen::RowVectorXd::Constant(4, 0.25));
    CHECK(r.uniform_rows[1] == 1);
  }
}

TEST_CASE("isolated nodes get uniform membership and a flag") {
  const int n = 60, k = 2;
  Eigen::MatrixXd theta = balanced_pure_theta(n, k);
  const MMSBParams params = diag_model(theta, Eigen::Vector2d(0.8, 1.0), 0.9);
  ProbabilityMatrix p = build_probability_matrix(params);
  // disconnect the last node entirely
  p.p.row(n - 1).setZero();
  p.p.col(n - 1).setZero();
  Rng rng(64);
  const AdjacencyMatrix adj = sample_adjacency(p, rng, true);
  Rng fit_rng(65);
  FitOptions opts;
  opts.split = false;
  const FitResult fr = fit(adj, k, opts, fit_rng);
  CHECK(fr.uniform_rows[n - 1] == 1);
  CHECK(fr.theta_hat.row(n - 1) == Eigen::RowVectorXd::Constant(k, 0.5));
}

}  // TEST_SUITE
