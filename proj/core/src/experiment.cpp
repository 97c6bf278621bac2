#include "mixmemb/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/eval.hpp"

namespace mixmemb {

namespace {

using nlohmann::json;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

struct DerivedModel {
  MMSBParams params;
  double rho_requested;  // effective rho after any rescaling of B
};

// Maps (kind, grid value) to one concrete generative model. Random pieces
// (the r_K diagonals of the K and timing panels) come from the replicate's
// own stream, drawn before theta so the draw order is stable.
DerivedModel derive_model(const ExperimentConfig& cfg, double value,
                          double smallest_timing_n, Rng& rng) {
  int n = cfg.n;
  int k = cfg.k;
  double alpha0 = cfg.alpha0;
  double rho = cfg.rho;
  Eigen::VectorXd beta = cfg.effective_beta();
  double offdiag = 0.0;

  switch (cfg.kind) {
    case ExperimentKind::BetaSkew:
      require(value >= 0.0 && value < 0.5,
              "beta_skew grid values must lie in [0, 0.5)");
      beta.resize(3);
      beta << 0.5 - value, 0.5, 0.5 + value;
      beta /= beta.maxCoeff();  // panel uses diag(beta / max beta), rho fixed
      break;
    case ExperimentKind::OffDiagonal:
      offdiag = value;
      break;
    case ExperimentKind::Alpha0:
      require(value > 0, "alpha0 grid values must be positive");
      alpha0 = value;
      break;
    case ExperimentKind::Rho:
      require(value > 0 && value <= 1.0, "rho grid values must lie in (0, 1]");
      rho = value;
      break;
    case ExperimentKind::CommunityCount: {
      k = static_cast<int>(std::lround(value));
      require(k >= 1, "k grid values must be >= 1");
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      beta.resize(k);
      for (int a = 0; a < k; ++a) beta(a) = 0.35 + 0.65 * unif(rng);
      break;
    }
    case ExperimentKind::Timing: {
      n = static_cast<int>(std::lround(value));
      require(n >= 2 * k, "timing grid values must be >= 2k");
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      beta.resize(k);
      for (int a = 0; a < k; ++a) beta(a) = 0.5 + 0.5 * unif(rng);
      // Keep the expected degree of the smallest grid size.
      rho = rho * smallest_timing_n / n;
      break;
    }
    case ExperimentKind::SingleFit:
      break;
  }

  const CommunityMatrix cm = build_b(beta, offdiag);
  const double rho_eff = rho * cm.scale;
  require(rho_eff > 0 && rho_eff <= 1.0,
          "effective rho fell outside (0, 1] after rescaling b");

  DerivedModel model;
  model.params.k = k;
  model.params.alpha0 = alpha0;
  model.params.rho = rho_eff;
  model.params.b = cm.b;
  model.params.theta = sample_theta(n, k, alpha0, rng);
  model.rho_requested = rho_eff;
  return model;
}

std::string status_for(const Error& e) {
  if (dynamic_cast<const PureSetNotFound*>(&e) ||
      dynamic_cast<const EmptyCandidateSet*>(&e) ||
      dynamic_cast<const IllConditionedPureSet*>(&e)) {
    return "pure-set-not-found";
  }
  if (dynamic_cast<const MergeFailure*>(&e)) return "merge-failure";
  return "rank-deficiency";
}

ResultRow run_one(const ExperimentConfig& cfg, int point_index, double value,
                  int replicate, double smallest_timing_n) {
  ResultRow row;
  row.experiment = to_string(cfg.kind);
  row.value = value;
  row.replicate = replicate;
  row.seed = child_seed(cfg.seed, static_cast<std::uint64_t>(point_index),
                        static_cast<std::uint64_t>(replicate));
  Rng rng = make_rng(row.seed);
  try {
    DerivedModel model = derive_model(cfg, value, smallest_timing_n, rng);
    const ProbabilityMatrix p = build_probability_matrix(model.params);
    const AdjacencyMatrix a = sample_adjacency(p, rng, cfg.self_loops);
    const SparseMatrix sa = a.to_sparse();

    FitOptions fopts = cfg.fit;
    fopts.split = cfg.split;
    fopts.noiseless = false;

    const auto t0 = std::chrono::steady_clock::now();
    const FitResult fit_result = fit(sa, model.params.k, fopts, rng);
    const auto t1 = std::chrono::steady_clock::now();
    if (cfg.runtime_recorded()) {
      row.runtime_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
    }

    row.rel_err_theta = relative_error(fit_result.theta_hat, model.params.theta);
    const AssignmentResult align =
        theta_alignment(fit_result.theta_hat, model.params.theta);
    const Eigen::VectorXd b_true = model.params.b.diagonal();
    Eigen::VectorXd b_aligned(model.params.k);
    for (int a2 = 0; a2 < model.params.k; ++a2) {
      b_aligned(a2) = b_true(align.permutation[a2]);
    }
    row.rel_err_b = (fit_result.b_hat - b_aligned).norm() / b_true.norm();
    row.rho_err = std::abs(fit_result.rho_hat - model.rho_requested);
    for (const HalfEstimate& h : fit_result.halves) {
      row.eps0 = std::max(row.eps0, h.selection.eps0);
      row.kappa = std::max(row.kappa, h.selection.condition_number);
    }
    row.status = "ok";
  } catch (const Error& e) {
    row.status = status_for(e);
  }
  return row;
}

}  // namespace

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "beta_skew") return ExperimentKind::BetaSkew;
  if (s == "offdiag") return ExperimentKind::OffDiagonal;
  if (s == "alpha0") return ExperimentKind::Alpha0;
  if (s == "rho") return ExperimentKind::Rho;
  if (s == "k") return ExperimentKind::CommunityCount;
  if (s == "n_timing") return ExperimentKind::Timing;
  if (s == "single_fit") return ExperimentKind::SingleFit;
  throw std::invalid_argument("unknown experiment kind: '" + s + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::BetaSkew: return "beta_skew";
    case ExperimentKind::OffDiagonal: return "offdiag";
    case ExperimentKind::Alpha0: return "alpha0";
    case ExperimentKind::Rho: return "rho";
    case ExperimentKind::CommunityCount: return "k";
    case ExperimentKind::Timing: return "n_timing";
    case ExperimentKind::SingleFit: return "single_fit";
  }
  return "unknown";
}

Eigen::VectorXd ExperimentConfig::effective_beta() const {
  if (beta.size() > 0) return beta;
  Eigen::VectorXd def(3);
  switch (kind) {
    case ExperimentKind::Alpha0:
      def << 0.4, 0.7, 1.0;
      return def;
    case ExperimentKind::Rho:
      return Eigen::VectorXd::Ones(k);
    default:
      def << 0.6, 0.8, 1.0;
      return def;
  }
}

std::vector<double> ExperimentConfig::effective_grid() const {
  if (!grid.empty()) return grid;
  switch (kind) {
    case ExperimentKind::BetaSkew: return {0.0, 0.1, 0.2, 0.3, 0.4};
    case ExperimentKind::OffDiagonal: return {0.0, 0.02, 0.05, 0.1, 0.2};
    case ExperimentKind::Alpha0: return {0.2, 0.5, 1.0, 2.0, 5.0};
    case ExperimentKind::Rho: return {0.05, 0.1, 0.25, 0.5, 1.0};
    case ExperimentKind::CommunityCount: return {2, 3, 4, 5, 6};
    case ExperimentKind::Timing: return {500, 1000, 2000, 4000};
    case ExperimentKind::SingleFit: return {0.0};
  }
  return {0.0};
}

void ExperimentConfig::validate() const {
  require(n >= 1, "config: n must be >= 1");
  require(k >= 1, "config: k must be >= 1");
  require(std::isfinite(alpha0) && alpha0 > 0, "config: alpha0 must be > 0");
  require(rho > 0 && rho <= 1.0, "config: rho must lie in (0, 1]");
  require(replicates >= 1, "config: replicates must be >= 1");
  require(!effective_grid().empty(), "config: grid must be non-empty");
  if (kind == ExperimentKind::BetaSkew) {
    require(k == 3, "config: the beta_skew experiment is defined for k = 3");
  }
  if (beta.size() > 0) {
    require(kind != ExperimentKind::CommunityCount &&
                kind != ExperimentKind::Timing &&
                kind != ExperimentKind::BetaSkew,
            "config: beta is derived per point for this experiment kind");
    require(beta.size() == k, "config: beta must have k entries");
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      require(beta(i) > 0 && beta(i) <= 1.0,
              "config: beta entries must lie in (0, 1]");
    }
  }
  for (double v : effective_grid()) {
    require(std::isfinite(v), "config: grid values must be finite");
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  ExperimentConfig cfg;
  for (const auto& [key, val] : j.items()) {
    if (key == "experiment") {
      cfg.kind = experiment_kind_from_string(val.get<std::string>());
    } else if (key == "n") {
      cfg.n = val.get<int>();
    } else if (key == "k") {
      cfg.k = val.get<int>();
    } else if (key == "alpha0") {
      cfg.alpha0 = val.get<double>();
    } else if (key == "rho") {
      cfg.rho = val.get<double>();
    } else if (key == "beta") {
      const auto v = val.get<std::vector<double>>();
      cfg.beta = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    } else if (key == "grid") {
      cfg.grid = val.get<std::vector<double>>();
    } else if (key == "replicates") {
      cfg.replicates = val.get<int>();
    } else if (key == "seed") {
      cfg.seed = val.get<std::uint64_t>();
    } else if (key == "split") {
      cfg.split = val.get<bool>();
    } else if (key == "self_loops") {
      cfg.self_loops = val.get<bool>();
    } else if (key == "record_runtime") {
      cfg.record_runtime = val.get<bool>();
    } else if (key == "out") {
      cfg.out = val.get<std::string>();
    } else if (key == "eps0") {
      cfg.fit.fixed_eps0 = val.get<double>();
    } else if (key == "kappa_max") {
      cfg.fit.kappa_max = val.get<double>();
    } else if (key == "kappa_accept") {
      cfg.fit.kappa_accept = val.get<double>();
    } else if (key == "deterministic_pick") {
      cfg.fit.deterministic_pick = val.get<bool>();
    } else if (key == "dense_threshold") {
      cfg.fit.eig.dense_threshold = val.get<int>();
    } else if (key == "eig_tol") {
      cfg.fit.eig.tol = val.get<double>();
    } else {
      throw std::invalid_argument(path.string() + ": unknown config key '" +
                                  key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

int max_threads() {
  if (const char* env = std::getenv("MIXMEMB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> grid = cfg.effective_grid();
  double smallest_timing_n = grid.front();
  for (double v : grid) smallest_timing_n = std::min(smallest_timing_n, v);

  struct Task {
    int point_index;
    double value;
    int replicate;
  };
  std::vector<Task> tasks;
  tasks.reserve(grid.size() * cfg.replicates);
  for (int p = 0; p < static_cast<int>(grid.size()); ++p) {
    for (int r = 0; r < cfg.replicates; ++r) tasks.push_back({p, grid[p], r});
  }
  std::vector<ResultRow> rows(tasks.size());

  const int threads =
      std::min<int>(max_threads(), static_cast<int>(tasks.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      rows[i] = run_one(cfg, tasks[i].point_index, tasks[i].value,
                        tasks[i].replicate, smallest_timing_n);
    }
  } else {
    // Tasks land in preassigned slots, so row order (and the output file)
    // does not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) break;
          rows[i] = run_one(cfg, tasks[i].point_index, tasks[i].value,
                            tasks[i].replicate, smallest_timing_n);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return rows;
}

void write_results(const std::vector<ResultRow>& rows,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "experiment,value,replicate,seed,rel_err_theta,rel_err_b,rho_err,"
         "runtime_ms,eps0,kappa,status\n";
  char buf[512];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%s,%.9g,%d,%llu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n",
                  r.experiment.c_str(), r.value, r.replicate,
                  static_cast<unsigned long long>(r.seed), r.rel_err_theta,
                  r.rel_err_b, r.rho_err, r.runtime_ms, r.eps0, r.kappa,
                  r.status.c_str());
    out << buf;
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<PointSummary> summarize(const std::vector<ResultRow>& rows) {
  std::vector<PointSummary> out;
  for (const ResultRow& r : rows) {
    PointSummary* s = nullptr;
    for (auto& cand : out) {
      if (cand.value == r.value) {
        s = &cand;
        break;
      }
    }
    if (!s) {
      out.push_back({});
      s = &out.back();
      s->value = r.value;
    }
    ++s->total;
    if (r.status == "ok") {
      ++s->ok;
      s->mean_rel_err_theta += r.rel_err_theta;
      s->mean_runtime_ms += r.runtime_ms;
    }
  }
  for (auto& s : out) {
    if (s.ok > 0) {
      s.mean_rel_err_theta /= s.ok;
      s.mean_runtime_ms /= s.ok;
    }
  }
  for (auto& s : out) {
    if (s.ok < 2) continue;
    double ss = 0.0;
    for (const ResultRow& r : rows) {
      if (r.value == s.value && r.status == "ok") {
        const double d = r.rel_err_theta - s.mean_rel_err_theta;
        ss += d * d;
      }
    }
    s.std_rel_err_theta = std::sqrt(ss / (s.ok - 1));
  }
  return out;
}

}  // namespace mixmemb
