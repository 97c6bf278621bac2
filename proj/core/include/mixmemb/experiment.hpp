#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "mixmemb/geonmf.hpp"

namespace mixmemb {

/// Which model parameter the sweep grid drives.
enum class ExperimentKind {
  BetaSkew,        // beta = (0.5 - v, 0.5, 0.5 + v), rho = 1
  OffDiagonal,     // b = diag(beta - v) + v * 1 1^T
  Alpha0,          // alpha0 = v
  Rho,             // rho = v
  CommunityCount,  // k = v, b = diag(0.35 + 0.65 * rand(k))
  Timing,          // n = v at fixed expected degree, b = diag(0.5 + 0.5 * rand(k))
  SingleFit,       // grid ignored, base parameters only
};

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SingleFit;
  int n = 1000;
  int k = 3;
  double alpha0 = 1.0;
  double rho = 1.0;
  Eigen::VectorXd beta;        // empty -> kind-specific default
  std::vector<double> grid;    // empty -> kind-specific default
  int replicates = 10;
  std::uint64_t seed = 0;
  bool split = false;          // simulations default to no-split mode
  bool self_loops = true;      // sample the diagonal of A
  bool record_runtime = false;  // forced on for Timing so results stay
                                // byte-reproducible by default
  std::string out = "results.csv";
  FitOptions fit;

  void validate() const;
  Eigen::VectorXd effective_beta() const;
  std::vector<double> effective_grid() const;
  bool runtime_recorded() const {
    return record_runtime || kind == ExperimentKind::Timing;
  }
};

/// Parses a JSON config file; unknown keys are rejected.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ResultRow {
  std::string experiment;
  double value = 0.0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double rel_err_theta = std::numeric_limits<double>::quiet_NaN();
  double rel_err_b = std::numeric_limits<double>::quiet_NaN();
  double rho_err = std::numeric_limits<double>::quiet_NaN();
  double runtime_ms = 0.0;
  double eps0 = 0.0;
  double kappa = 0.0;
  std::string status = "ok";
};

/// Runs the sweep: one row per grid point x replicate, each on an
/// independent child-seeded stream. Rows come back in canonical
/// (point, replicate) order regardless of how many worker threads ran.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Fixed-header CSV with 9-significant-digit floats and a trailing newline.
void write_results(const std::vector<ResultRow>& rows,
                   const std::filesystem::path& path);

struct PointSummary {
  double value = 0.0;
  int ok = 0;
  int total = 0;
  double mean_rel_err_theta = 0.0;
  double std_rel_err_theta = 0.0;
  double mean_runtime_ms = 0.0;
};

/// Per-grid-point mean and sample standard deviation over the ok rows.
std::vector<PointSummary> summarize(const std::vector<ResultRow>& rows);

/// Worker-thread cap: MIXMEMB_THREADS when set, hardware concurrency
/// otherwise, at least 1.
int max_threads();

}  // namespace mixmemb
