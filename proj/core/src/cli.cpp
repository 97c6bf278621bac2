#include "mixmemb/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/eval.hpp"
#include "mixmemb/experiment.hpp"
#include "mixmemb/geonmf.hpp"
#include "mixmemb/io.hpp"

namespace mixmemb {

namespace {

std::string g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

struct GenerateArgs {
  int n = 1000;
  int k = 3;
  double alpha0 = 1.0;
  double rho = 1.0;
  std::vector<double> beta;
  double offdiag_eps = 0.0;
  int pure_per_community = 0;
  std::uint64_t seed = 0;
  bool self_loops = false;  // edge-list files cannot round-trip loops
  std::string out = "graph";
};

int run_generate(const GenerateArgs& args) {
  Rng rng = make_rng(args.seed);
  Eigen::VectorXd beta = args.beta.empty()
                             ? Eigen::VectorXd::Ones(args.k)
                             : to_vector(args.beta);
  if (beta.size() != args.k) {
    throw std::invalid_argument("generate: beta must have k entries");
  }
  const CommunityMatrix cm = build_b(beta, args.offdiag_eps);
  MMSBParams params;
  params.k = args.k;
  params.alpha0 = args.alpha0;
  params.rho = args.rho * cm.scale;
  params.b = cm.b;
  params.theta = plant_pure_nodes(
      sample_theta(args.n, args.k, args.alpha0, rng), args.pure_per_community);
  const ProbabilityMatrix p = build_probability_matrix(params);
  const AdjacencyMatrix a = sample_adjacency(p, rng, args.self_loops);

  const std::string edges_path = args.out + ".edges.txt";
  const std::string theta_path = args.out + ".theta.csv";
  write_edge_list(a, edges_path);
  write_matrix_csv(params.theta, theta_path);
  std::cout << "wrote " << edges_path << " (" << a.edge_count() << " edges, "
            << args.n << " nodes) and " << theta_path << "\n";
  return 0;
}

struct FitArgs {
  std::string graph;
  int k = 0;
  bool estimate_k = false;
  double usvt_eta = 0.01;
  std::string truth;
  bool prune = false;
  bool no_split = false;
  double eps0 = -1.0;
  double kappa_max = 1e8;
  std::uint64_t seed = 0;
  bool one_indexed = false;
  std::string out;
};

int run_fit(const FitArgs& args) {
  const AdjacencyMatrix full = load_edge_list(args.graph, !args.one_indexed);

  // Isolated-node pruning keeps output row indices aligned with the input
  // by re-expanding afterwards with uniform rows.
  std::vector<int> keep(full.n);
  std::iota(keep.begin(), keep.end(), 0);
  SparseMatrix matrix = full.to_sparse();
  if (args.prune) {
    for (;;) {
      const Eigen::VectorXd deg = matrix.row_sums();
      std::vector<int> next;
      for (int i = 0; i < matrix.rows(); ++i) {
        if (deg(i) > 0) next.push_back(i);
      }
      if (static_cast<int>(next.size()) == matrix.rows()) break;
      std::vector<int> remapped;
      remapped.reserve(next.size());
      for (int local : next) remapped.push_back(keep[local]);
      matrix = matrix.submatrix(next, next);
      keep = std::move(remapped);
    }
  }

  int k = args.k;
  if (args.estimate_k) {
    k = estimate_k_usvt(full, args.usvt_eta);
    std::cout << "estimated k = " << k << "\n";
    if (k < 1) {
      std::cerr << "error: USVT estimated k = " << k
                << "; pass --k explicitly\n";
      return 2;
    }
  }
  if (k < 1) {
    throw std::invalid_argument("fit: provide --k or --estimate-k");
  }

  FitOptions opts;
  opts.split = !args.no_split;
  opts.fixed_eps0 = args.eps0;
  opts.kappa_max = args.kappa_max;
  Rng rng = make_rng(args.seed);
  const FitResult result = fit(matrix, k, opts, rng);

  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(full.n, k, 1.0 / k);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    theta.row(keep[r]) = result.theta_hat.row(r);
  }

  std::string prefix = args.out;
  if (prefix.empty()) {
    std::filesystem::path p(args.graph);
    p.replace_extension();
    prefix = p.string();
  }
  const std::string theta_path = prefix + ".theta.csv";
  const std::string model_path = prefix + ".model.json";
  write_matrix_csv(theta, theta_path);

  nlohmann::json model;
  model["n"] = full.n;
  model["k"] = k;
  model["rho_hat"] = result.rho_hat;
  model["b_hat"] = std::vector<double>(result.b_hat.data(),
                                       result.b_hat.data() + result.b_hat.size());
  model["split"] = opts.split;
  model["pruned_nodes"] = full.n - static_cast<int>(keep.size());
  model["uniform_rows"] = static_cast<int>(
      std::count(result.uniform_rows.begin(), result.uniform_rows.end(), 1));
  for (const HalfEstimate& h : result.halves) {
    model["halves"].push_back({{"eps0", h.selection.eps0},
                               {"kappa", h.selection.condition_number},
                               {"tau", h.selection.tau},
                               {"pure_nodes", h.selection.representatives}});
  }
  model["alignment"] = result.alignment;
  std::ofstream mout(model_path, std::ios::binary);
  mout << model.dump(2) << "\n";
  if (!mout) throw Error("write failed: " + model_path);
  std::cout << "wrote " << theta_path << " and " << model_path << "\n";

  if (!args.truth.empty()) {
    const Eigen::MatrixXd truth = load_ground_truth(args.truth);
    if (truth.rows() != theta.rows() || truth.cols() != theta.cols()) {
      throw std::invalid_argument("fit: ground truth shape mismatch");
    }
    std::cout << "rel_err_theta " << g9(relative_error(theta, truth)) << "\n";
    std::cout << "rc_avg " << g9(rc_avg(theta, truth)) << "\n";
  }
  return 0;
}

struct SweepArgs {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
};

int run_sweep(const SweepArgs& args) {
  ExperimentConfig cfg = load_experiment_config(args.config);
  if (!args.out.empty()) cfg.out = args.out;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  const std::vector<ResultRow> rows = run_experiment(cfg);
  write_results(rows, cfg.out);
  std::cout << "wrote " << cfg.out << " (" << rows.size() << " rows)\n";
  std::cout << "value,ok/total,mean_rel_err_theta,std_rel_err_theta,"
               "mean_runtime_ms\n";
  for (const PointSummary& s : summarize(rows)) {
    std::cout << g9(s.value) << "," << s.ok << "/" << s.total << ","
              << g9(s.mean_rel_err_theta) << "," << g9(s.std_rel_err_theta)
              << "," << g9(s.mean_runtime_ms) << "\n";
  }
  return 0;
}

int run_eval(const std::string& theta_hat_path, const std::string& theta_path) {
  const Eigen::MatrixXd theta_hat = load_ground_truth(theta_hat_path);
  const Eigen::MatrixXd theta = load_ground_truth(theta_path);
  if (theta_hat.rows() != theta.rows() || theta_hat.cols() != theta.cols()) {
    throw std::invalid_argument("eval: matrices must have identical shapes");
  }
  std::cout << "rel_err_theta " << g9(relative_error(theta_hat, theta)) << "\n";
  std::cout << "rc_avg " << g9(rc_avg(theta_hat, theta)) << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "mixmemb");
  argv.reserve(storage.size());
  for (auto& s : storage) argv.push_back(s.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

int cli_main(int argc, char** argv) {
  CLI::App app{"GeoNMF: mixed-membership blockmodel inference toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* generate = app.add_subcommand(
      "generate", "Sample a blockmodel graph and its ground-truth memberships");
  generate->add_option("--n", gen.n, "number of nodes");
  generate->add_option("--k", gen.k, "number of communities");
  generate->add_option("--alpha0", gen.alpha0, "Dirichlet concentration");
  generate->add_option("--rho", gen.rho, "sparsity scale in (0,1]");
  generate->add_option("--beta", gen.beta, "diagonal of b, comma separated")
      ->delimiter(',');
  generate->add_option("--offdiag-eps", gen.offdiag_eps,
                       "off-diagonal entries of b");
  generate->add_option("--pure-per-community", gen.pure_per_community,
                       "planted pure nodes per community");
  generate->add_option("--seed", gen.seed, "master seed");
  generate->add_flag("--self-loops", gen.self_loops,
                     "sample the diagonal as well");
  generate->add_option("--out", gen.out, "output path prefix");

  FitArgs fit_args;
  CLI::App* fitcmd =
      app.add_subcommand("fit", "Run GeoNMF on an edge-list graph");
  fitcmd->add_option("graph", fit_args.graph, "edge list file")->required();
  fitcmd->add_option("--k", fit_args.k, "number of communities");
  fitcmd->add_flag("--estimate-k", fit_args.estimate_k,
                   "estimate k with the USVT rule");
  fitcmd->add_option("--usvt-eta", fit_args.usvt_eta, "USVT threshold margin");
  fitcmd->add_option("--truth", fit_args.truth,
                     "ground-truth membership CSV for metrics");
  fitcmd->add_flag("--prune", fit_args.prune,
                   "recursively remove isolated nodes before fitting");
  fitcmd->add_flag("--no-split", fit_args.no_split,
                   "run on the full graph without the bipartition");
  fitcmd->add_option("--eps0", fit_args.eps0,
                     "fix eps0 instead of adapting it");
  fitcmd->add_option("--kappa-max", fit_args.kappa_max,
                     "condition-number limit for the pure set");
  fitcmd->add_option("--seed", fit_args.seed, "master seed");
  fitcmd->add_flag("--one-indexed", fit_args.one_indexed,
                   "node ids in the file start at 1");
  fitcmd->add_option("--out", fit_args.out, "output path prefix");

  SweepArgs sweep_args;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Run an experiment sweep from a JSON config");
  sweep->add_option("config", sweep_args.config, "config file")->required();
  sweep->add_option("--out", sweep_args.out, "override the results path");
  sweep->add_option("--seed", sweep_args.seed, "override the master seed");

  std::string eval_theta_hat, eval_theta;
  CLI::App* evalcmd = app.add_subcommand(
      "eval", "Compare an estimated membership matrix against ground truth");
  evalcmd->add_option("theta_hat", eval_theta_hat, "estimated matrix CSV")
      ->required();
  evalcmd->add_option("theta", eval_theta, "ground-truth matrix CSV")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(generate)) return run_generate(gen);
    if (app.got_subcommand(fitcmd)) return run_fit(fit_args);
    if (app.got_subcommand(sweep)) return run_sweep(sweep_args);
    if (app.got_subcommand(evalcmd)) return run_eval(eval_theta_hat, eval_theta);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace mixmemb
