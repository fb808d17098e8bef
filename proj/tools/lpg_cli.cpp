// Command-line front end for the latent-position-graph pipeline:
//   simulate      sample a graph + labels from a configured model
//   embed         adjacency spectral embedding of an edge-list file
//   classify      train/evaluate the norm-constrained linear classifier
//   verify-bounds empirical checks of the concentration bounds
//   experiment    convergence sweep over n with CSV/JSON output
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>

#include "lpg/lpg.hpp"

namespace {

lpg::ExperimentConfig load_config(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw lpg::ConfigError("cannot open config file: " + path);
  auto kv = lpg::parse_config_text(f);
  for (const auto& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw lpg::ConfigError("--set expects key=value, got: " + ov);
    kv[ov.substr(0, eq)] = ov.substr(eq + 1);
  }
  return lpg::build_config(kv);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw lpg::ConfigError("cannot open output file: " + path);
  return f;
}

struct DimFlag {
  bool eq69 = true;
  double epsilon = 0.1;
  int fixed_d = 1;
};

// `eq69:<eps>` or `fixed:<d>`.
DimFlag parse_dim_flag(const std::string& s) {
  DimFlag f;
  auto colon = s.find(':');
  if (colon == std::string::npos)
    throw lpg::ConfigError("--dim expects eq69:<eps> or fixed:<d>");
  std::string rule = s.substr(0, colon), arg = s.substr(colon + 1);
  try {
    if (rule == "eq69") {
      f.eq69 = true;
      f.epsilon = std::stod(arg);
    } else if (rule == "fixed") {
      f.eq69 = false;
      f.fixed_d = std::stoi(arg);
      if (f.fixed_d < 1) throw std::invalid_argument("d");
    } else {
      throw std::invalid_argument(rule);
    }
  } catch (const std::exception&) {
    throw lpg::ConfigError("--dim expects eq69:<eps> or fixed:<d>, got: " + s);
  }
  return f;
}

int cmd_simulate(const std::string& config,
                 const std::vector<std::string>& overrides, long n_override,
                 long seed_override, const std::string& out_graph,
                 const std::string& out_labels) {
  lpg::ExperimentConfig cfg = load_config(config, overrides);
  std::size_t n = n_override > 0 ? static_cast<std::size_t>(n_override)
                                 : cfg.n_grid.back();
  std::uint64_t seed =
      seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : cfg.seed;
  lpg::LatentSample s = lpg::sample_latents(*cfg.dist, n, seed);
  lpg::Matrix K = lpg::kernel_matrix(*cfg.kernel, s.points);
  lpg::AdjacencyMatrix A = lpg::sample_adjacency(K, cfg.rho_for(n), seed);
  auto fg = open_out(out_graph);
  lpg::write_edge_list(fg, A);
  auto fl = open_out(out_labels);
  lpg::write_labels(fl, s.labels);
  std::cout << "simulated n=" << n << " edges=" << A.edge_count()
            << " rho=" << A.rho() << " seed=" << seed << "\n";
  return 0;
}

int cmd_embed(const std::string& graph_path, const std::string& dim_flag,
              const std::string& loss_name, double dim_constant,
              int scan_max, const std::string& out_csv) {
  std::ifstream fg(graph_path);
  if (!fg) throw lpg::ConfigError("cannot open graph file: " + graph_path);
  lpg::AdjacencyMatrix A = lpg::read_edge_list(fg);
  DimFlag dim = parse_dim_flag(dim_flag);
  lpg::SurrogateLoss loss = lpg::SurrogateLoss::parse(loss_name);
  int k = dim.eq69 ? std::min<int>(scan_max + 1, static_cast<int>(A.n()))
                   : std::min<int>(dim.fixed_d + 1, static_cast<int>(A.n()));
  lpg::SpectralDecomposition dec = lpg::eigendecompose(A, k);
  int d = dim.fixed_d;
  if (dim.eq69) {
    lpg::DimensionSelection sel =
        lpg::select_dimension(dec, loss, dim.epsilon, dim_constant);
    d = sel.d;
    if (sel.fallback)
      std::cerr << "warning: no dimension satisfied the gap rule; "
                   "falling back to d=1\n";
  }
  lpg::Embedding emb = lpg::spectral_embed(dec, d, A.rho());
  auto f = open_out(out_csv);
  lpg::write_embedding_csv(f, emb);
  std::cout << "embedded n=" << A.n() << " d=" << d << " scale=" << emb.scale
            << "\n";
  return 0;
}

int cmd_classify(const std::string& embedding_path,
                 const std::string& labels_path, const std::string& loss_name,
                 double radius, double train_fraction, long seed,
                 const std::string& out_classifier,
                 const std::string& out_risk) {
  std::ifstream fe(embedding_path);
  if (!fe)
    throw lpg::ConfigError("cannot open embedding file: " + embedding_path);
  lpg::Matrix Z = lpg::read_embedding_csv(fe);
  std::ifstream fl(labels_path);
  if (!fl) throw lpg::ConfigError("cannot open label file: " + labels_path);
  std::vector<int> labels = lpg::read_labels(fl);
  if (static_cast<Eigen::Index>(labels.size()) != Z.rows())
    throw lpg::ConfigError("label count does not match embedding rows");
  if (!(train_fraction > 0 && train_fraction < 1))
    throw lpg::ConfigError("--train-fraction must be in (0,1)");

  lpg::SurrogateLoss loss = lpg::SurrogateLoss::parse(loss_name);
  Eigen::VectorXi Y(Z.rows());
  for (Eigen::Index i = 0; i < Z.rows(); ++i) Y[i] = labels[i];
  Eigen::Index n_train = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(train_fraction * static_cast<double>(Z.rows())));
  if (n_train >= Z.rows()) n_train = Z.rows() - 1;
  Eigen::Index n_test = Z.rows() - n_train;

  double r = radius > 0 ? radius : static_cast<double>(Z.cols());
  lpg::LinearClassifier clf = lpg::minimize_phi_risk(
      Z.topRows(n_train), Y.head(n_train), loss, r,
      static_cast<std::uint64_t>(seed >= 0 ? seed : 0));
  lpg::RiskReport train =
      lpg::evaluate_risks(clf, Z.topRows(n_train), Y.head(n_train), loss);
  lpg::RiskReport test =
      lpg::evaluate_risks(clf, Z.bottomRows(n_test), Y.tail(n_test), loss);

  auto fc = open_out(out_classifier);
  lpg::write_classifier_json(fc, clf);
  auto fr = open_out(out_risk);
  fr << std::setprecision(17)
     << "split,n_eval,phi_risk,zero_one_error\n"
     << "train," << train.n_eval << "," << train.phi_risk << ","
     << train.zero_one_error << "\n"
     << "test," << test.n_eval << "," << test.phi_risk << ","
     << test.zero_one_error << "\n";
  std::cout << "trained d=" << clf.d << " train_error=" << train.zero_one_error
            << " test_error=" << test.zero_one_error << "\n";
  return 0;
}

int cmd_verify_bounds(const std::string& config,
                      const std::vector<std::string>& overrides,
                      const std::vector<std::string>& which_names,
                      const std::string& out_json) {
  lpg::ExperimentConfig cfg = load_config(config, overrides);
  static const std::map<std::string, lpg::BoundCheck::Name> by_name = {
      {"opnorm_prop3", lpg::BoundCheck::Name::OpNorm_Prop3},
      {"projection_prop4", lpg::BoundCheck::Name::Projection_Prop4},
      {"embedding_thm1", lpg::BoundCheck::Name::Embedding_Thm1},
      {"spectra_thm5_eq30", lpg::BoundCheck::Name::Spectra_Thm5_Eq30},
      {"projector_thm5_eq32", lpg::BoundCheck::Name::Projector_Thm5_Eq32},
      {"sparse_thm9", lpg::BoundCheck::Name::Sparse_Thm9},
      {"procrustes_lemma3", lpg::BoundCheck::Name::Procrustes_Lemma3}};
  std::set<lpg::BoundCheck::Name> which;
  if (which_names.empty()) {
    for (const auto& [k, v] : by_name) which.insert(v);
  } else {
    for (const auto& name : which_names) {
      auto it = by_name.find(name);
      if (it == by_name.end())
        throw lpg::ConfigError("unknown bound name: " + name);
      which.insert(it->second);
    }
  }
  lpg::BoundVerification v = lpg::verify_bounds(cfg, which);
  if (!out_json.empty()) {
    auto f = open_out(out_json);
    lpg::write_bound_verification_json(f, v);
  }
  std::cout << "bound                 trials  holds  hyp_not_met  pass_rate  "
               "mean_slack\n";
  for (const auto& s : v.summaries) {
    std::ostringstream row;
    row << std::left << std::setw(22)
        << lpg::BoundCheck::name_string(s.name) << std::setw(8) << s.trials
        << std::setw(7) << s.holds << std::setw(13) << s.hypothesis_not_met
        << std::setw(11) << std::setprecision(4) << s.pass_rate()
        << std::setprecision(4) << s.mean_slack;
    std::cout << row.str() << "\n";
  }
  return 0;
}

int cmd_experiment(const std::string& config,
                   const std::vector<std::string>& overrides,
                   const std::string& out_csv,
                   const std::string& out_trials_csv,
                   const std::string& out_json) {
  lpg::ExperimentConfig cfg = load_config(config, overrides);
  lpg::ExperimentResult res = lpg::run_experiment(cfg);
  {
    auto f = open_out(out_csv);
    lpg::write_experiment_csv(f, res);
  }
  if (!out_trials_csv.empty()) {
    auto f = open_out(out_trials_csv);
    lpg::write_trials_csv(f, res);
  }
  if (!out_json.empty()) {
    auto f = open_out(out_json);
    lpg::write_experiment_summary_json(f, res);
  }
  lpg::write_experiment_csv(std::cout, res);
  if (res.bayes_available)
    std::cout << "bayes l_star=" << res.bayes.l_star
              << " r_phi_star=" << res.bayes.r_phi_star << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-position-graph vertex classification pipeline"};
  app.require_subcommand(1);

  std::string config, out_graph = "graph.txt", out_labels = "labels.txt";
  std::vector<std::string> overrides;
  long n_override = 0, seed_override = -1;

  auto* sim = app.add_subcommand("simulate", "sample a graph and labels");
  sim->add_option("--config", config, "config file")->required();
  sim->add_option("--set", overrides, "override config key=value");
  sim->add_option("--n", n_override, "vertex count (default: last of n_grid)");
  sim->add_option("--seed", seed_override, "seed override");
  sim->add_option("--out-graph", out_graph, "edge-list output path");
  sim->add_option("--out-labels", out_labels, "label output path");

  std::string graph_path, dim_flag = "eq69:0.1", loss_name = "squared";
  std::string out_csv = "embedding.csv";
  double dim_constant = 32.0;
  int scan_max = 8;
  auto* emb = app.add_subcommand("embed", "adjacency spectral embedding");
  emb->add_option("--graph", graph_path, "edge-list input")->required();
  emb->add_option("--dim", dim_flag, "eq69:<eps> or fixed:<d>");
  emb->add_option("--loss", loss_name, "loss for the gap rule C_d");
  emb->add_option("--constant", dim_constant, "gap-rule leading constant");
  emb->add_option("--scan-max", scan_max, "deepest d the gap rule scans");
  emb->add_option("--out", out_csv, "embedding CSV output");

  std::string embedding_path, labels_path;
  std::string out_classifier = "classifier.json", out_risk = "risk.csv";
  double radius = -1.0, train_fraction = 0.8;
  long clf_seed = 0;
  auto* clf = app.add_subcommand("classify", "train the linear classifier");
  clf->add_option("--embedding", embedding_path, "embedding CSV")->required();
  clf->add_option("--labels", labels_path, "label file")->required();
  clf->add_option("--loss", loss_name, "surrogate loss family");
  clf->add_option("--radius", radius, "norm budget (default: d)");
  clf->add_option("--train-fraction", train_fraction, "training split");
  clf->add_option("--seed", clf_seed, "optimizer restart seed");
  clf->add_option("--out-classifier", out_classifier, "classifier JSON");
  clf->add_option("--out-risk", out_risk, "risk CSV");

  std::vector<std::string> which_names;
  std::string out_json;
  auto* vb = app.add_subcommand("verify-bounds", "check concentration bounds");
  vb->add_option("--config", config, "config file")->required();
  vb->add_option("--set", overrides, "override config key=value");
  vb->add_option("--which", which_names,
                 "comma-separated bound names (default: all); e.g. "
                 "opnorm_prop3,procrustes_lemma3")
      ->delimiter(',');
  vb->add_option("--out", out_json, "pass-rate JSON output");

  std::string exp_csv = "experiment.csv", exp_trials, exp_json;
  auto* exp = app.add_subcommand("experiment", "convergence sweep over n");
  exp->add_option("--config", config, "config file")->required();
  exp->add_option("--set", overrides, "override config key=value");
  exp->add_option("--out-csv", exp_csv, "aggregated CSV output");
  exp->add_option("--out-trials-csv", exp_trials, "per-trial CSV output");
  exp->add_option("--out-json", exp_json, "summary JSON output");

  try {
    app.parse(argc, argv);
    if (sim->parsed())
      return cmd_simulate(config, overrides, n_override, seed_override,
                          out_graph, out_labels);
    if (emb->parsed())
      return cmd_embed(graph_path, dim_flag, loss_name, dim_constant,
                       scan_max, out_csv);
    if (clf->parsed())
      return cmd_classify(embedding_path, labels_path, loss_name, radius,
                          train_fraction, clf_seed, out_classifier, out_risk);
    if (vb->parsed())
      return cmd_verify_bounds(config, overrides, which_names, out_json);
    if (exp->parsed())
      return cmd_experiment(config, overrides, exp_csv, exp_trials, exp_json);
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const lpg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lpg::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lpg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
