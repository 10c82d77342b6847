#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stabilab/bounds.hpp"
#include "stabilab/dataset.hpp"
#include "stabilab/learners.hpp"
#include "stabilab/linalg.hpp"
#include "stabilab/losses.hpp"
#include "stabilab/stability.hpp"
#include "stabilab/text.hpp"

namespace stabilab::cli {

namespace {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ------------------------------------------------------------- generate

struct GenerateArgs {
  Eigen::Index m = 20;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  const Dataset d = generate_hastie(a.m, a.seed);
  try {
    save_csv(d, a.out);
  } catch (const std::exception& e) {
    std::cerr << "stabilab generate: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << a.out << " (m=" << d.size() << ", d=" << d.dim()
            << ")\n";
  return 0;
}

// -------------------------------------------------------------- measure

struct MeasureArgs {
  std::string data;
  std::string learner;
  int v = 8;
  int iterations = 100;
  double eta = 0.1;
  double lambda = -1.0;  // required for l2lr
  int k = 1;
  int stub_label = 1;
  bool no_bias = false;
  std::string stat = "both";
  std::string strategy = "all";
  double oos_fraction = 0.3;
  std::string loss = "classification";
  double gamma = 1.0;
  std::string aggregate = "max";
  StabilityConfig cfg;
  std::string out;
};

LearnerConfig build_learner(const MeasureArgs& a) {
  if (a.learner == "tree") return DecisionTreeConfig{a.v};
  if (a.learner == "lr") {
    return LogisticRegressionConfig{a.iterations, a.eta, 0.0, !a.no_bias};
  }
  if (a.learner == "l2lr") {
    if (!(a.lambda > 0.0)) {
      throw CLI::ValidationError(
          "--lambda", "l2lr needs a positive --lambda (use lr for lambda=0)");
    }
    return LogisticRegressionConfig{a.iterations, a.eta, a.lambda, !a.no_bias};
  }
  if (a.learner == "knn") return KnnConfig{a.k};
  return StubConfig{a.stub_label};
}

StabilityConfig build_stability_config(const MeasureArgs& a) {
  StabilityConfig cfg = a.cfg;
  if (a.strategy == "all") {
    cfg.strategy.kind = EvalKind::All;
  } else if (a.strategy == "oob") {
    cfg.strategy.kind = EvalKind::Oob;
  } else {
    cfg.strategy.kind = EvalKind::Oos;
  }
  cfg.strategy.oos_fraction = a.oos_fraction;
  if (a.loss == "classification") {
    cfg.loss = LossKind::classification();
  } else if (a.loss == "gamma") {
    cfg.loss = LossKind::gamma_margin(a.gamma);
  } else {
    cfg.loss = LossKind::cross_entropy();
  }
  cfg.aggregate_over_i = a.aggregate == "mean" ? Aggregate::Mean : Aggregate::Max;
  return cfg;
}

std::string summary_path_for(const std::string& out) {
  fs::path p(out);
  fs::path csv = p;
  csv.replace_extension(".csv");
  if (csv == p) csv = p.string() + ".summary.csv";
  return csv.string();
}

int run_measure(const MeasureArgs& a) {
  const Dataset d = load_csv(a.data);
  const LearnerConfig learner = build_learner(a);
  const StabilityConfig cfg = build_stability_config(a);

  const StabilityReport report = measure_stability(d, learner, cfg);
  const bool include_h = a.stat != "ph";
  const bool include_ph = a.stat != "h";
  write_json_file(a.out, stability_report_to_json(report, include_h, include_ph));
  write_text_file(summary_path_for(a.out), stability_summary_csv(report));

  std::cout << learner_name(learner) << ": beta_h_hat="
            << format_g17(report.beta_h_hat)
            << " beta_ph_hat=" << format_g17(report.beta_ph_hat)
            << " (skipped " << report.skipped_samples << " samples)\n"
            << "wrote " << a.out << " and " << summary_path_for(a.out) << "\n";
  return 0;
}

// --------------------------------------------------------------- bounds

struct BoundsArgs {
  std::string algo;
  std::string data;
  int v = 0;
  int k = 0;
  int m = 0;
  double remp = -1.0;
  double lambda = 0.0;
  int iterations = 500;
  double eta = 0.1;
  double delta = kDefaultDelta;
  double tau = 1.0;
  std::uint64_t seed = kDefaultSeed;
  std::string out = "bound_report.json";
};

int run_bounds(const BoundsArgs& a) {
  BoundReport report;
  report.algorithm = a.algo;
  report.delta = a.delta;
  report.tau = a.tau;
  nlohmann::json extra;

  if (a.algo == "tree") {
    if (a.v < 1) throw CLI::ValidationError("--v", "tree bounds need --v >= 1");
    int v = a.v;
    int m = a.m;
    double remp = a.remp;
    if (!a.data.empty()) {
      const Dataset d = load_csv(a.data);
      const TrainedModel model =
          train(d, DecisionTreeConfig{a.v}, a.seed);
      const TreeStats stats = tree_stats(model);
      v = stats.leaf_count;  // effective leaves, cap may not be reachable
      m = static_cast<int>(d.size());
      remp = empirical_error(model, d, LossKind::classification());
      extra["model"] = model_to_json(model);
      extra["requested_v"] = a.v;
    } else if (m < 1 || remp < 0.0) {
      throw CLI::ValidationError(
          "--remp", "tree bounds need --data, or both --m and --remp");
    }
    report.v = v;
    report.m = m;
    report.r_emp = remp;
    report.stability_bound = dt_stability_bound(v);
    report.generalization_bound = gen_bound_dt(remp, v, m, a.tau, a.delta);
  } else if (a.algo == "knn") {
    if (a.k < 1) throw CLI::ValidationError("--k", "knn bounds need --k >= 1");
    int m = a.m;
    if (!a.data.empty()) m = static_cast<int>(load_csv(a.data).size());
    if (m < 1) {
      throw CLI::ValidationError("--m", "knn bounds need --m or --data");
    }
    report.k = a.k;
    report.m = m;
    report.stability_bound = knn_stability_bound(a.k, m);
  } else {  // lr / l2lr
    if (a.data.empty()) {
      throw CLI::ValidationError("--data", a.algo + " bounds need --data");
    }
    const bool regularized = a.algo == "l2lr";
    if (regularized && !(a.lambda > 0.0)) {
      throw CLI::ValidationError("--lambda", "l2lr bounds need --lambda > 0");
    }
    const Dataset d = load_csv(a.data);
    const double lambda = regularized ? a.lambda : 0.0;
    const LogisticRegressionConfig lr_cfg{a.iterations, a.eta, lambda, true};
    const TrainedModel model = train(d, lr_cfg, a.seed);
    const auto& lr = std::get<LrModel>(model);
    const DataConstants dc = data_constants(d, lr_cfg.fit_bias);
    const int m = static_cast<int>(d.size());
    const double remp = empirical_error(model, d, LossKind::classification());

    report.m = m;
    report.r_emp = remp;
    report.rho = dc.rho;
    report.q = dc.q;
    extra["model"] = model_to_json(model);
    extra["iterations"] = a.iterations;
    extra["learning_rate"] = a.eta;

    if (regularized) {
      report.lambda = a.lambda;
      report.stability_bound =
          l2lr_stability_bound(dc.rho, a.tau, a.lambda, m, dc.q);
      report.generalization_bound =
          gen_bound_l2lr(remp, dc.rho, a.tau, a.lambda, m, a.delta);
    } else {
      const SymmetricMatrix h = cross_entropy_hessian(d, lr.theta, 0.0);
      const double lambda_min = smallest_eigenvalue(h);
      report.lambda_min = lambda_min;
      const double pd_tol = 1e-10 * std::max(1.0, h.frobenius_norm());
      if (lambda_min <= pd_tol) {
        throw std::runtime_error(
            "Hessian not positive definite at the fitted parameters "
            "(lambda_min=" + format_g17(lambda_min) + ")");
      }
      report.stability_bound =
          lr_stability_bound(dc.rho, a.tau, m, lambda_min, dc.q);
      report.generalization_bound =
          gen_bound_lr(remp, dc.rho, a.tau, lambda_min, m, a.delta);
      if (report.stability_bound >= 1.0) {
        report.warning =
            "smallest Hessian eigenvalue is near zero; the stability bound "
            "exceeds the loss range and is vacuous";
      }
    }
  }

  nlohmann::json j = bound_report_to_json(report);
  for (auto& [key, value] : extra.items()) j[key] = value;
  write_json_file(a.out, j);

  std::cout << a.algo << ": stability_bound="
            << format_g17(report.stability_bound);
  if (report.generalization_bound) {
    std::cout << " generalization_bound="
              << format_g17(*report.generalization_bound);
  }
  std::cout << "\n";
  if (report.warning) std::cout << "warning: " << *report.warning << "\n";
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- table1

struct TableArgs {
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir = "table1";
  Eigen::Index m = 20;
  int B = 30;
  int trials = 10;
};

struct Cell {
  std::string algo;
  std::string param_name;
  double param_value = 0.0;
  LearnerConfig learner;
};

std::vector<Cell> default_grid() {
  std::vector<Cell> cells;
  for (const int v : {8, 16, 64, 128, 256}) {
    cells.push_back({"tree", "v", static_cast<double>(v),
                     DecisionTreeConfig{v}});
  }
  for (const double lambda : {0.01, 1.0, 2.0, 5.0, 10.0}) {
    cells.push_back({"l2lr", "lambda", lambda,
                     LogisticRegressionConfig{500, 0.1, lambda, true}});
  }
  for (const int iters : {2, 10, 50, 200, 500}) {
    cells.push_back({"lr", "T", static_cast<double>(iters),
                     LogisticRegressionConfig{iters, 0.1, 0.0, true}});
  }
  return cells;
}

std::string format_cell_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string markdown_table(const std::vector<Cell>& cells,
                           const std::vector<StabilityReport>& reports) {
  auto fmt4 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  std::ostringstream md;
  md << "| Decision tree | | | L2-regularized LR | | | Logistic regression "
        "| | |\n";
  md << "| --- | --- | --- | --- | --- | --- | --- | --- | --- |\n";
  md << "| v | beta_h | beta_ph | lambda | beta_h | beta_ph | T | beta_h | "
        "beta_ph |\n";
  for (std::size_t row = 0; row < 5; ++row) {
    md << "|";
    for (std::size_t block = 0; block < 3; ++block) {
      const std::size_t idx = block * 5 + row;
      md << " " << format_cell_value(cells[idx].param_value) << " | "
         << fmt4(reports[idx].beta_h_hat) << " | "
         << fmt4(reports[idx].beta_ph_hat) << " |";
    }
    md << "\n";
  }
  return md.str();
}

int run_table1(const TableArgs& a) {
  fs::create_directories(a.out_dir);
  const Dataset d = generate_hastie(a.m, a.seed);
  save_csv(d, (fs::path(a.out_dir) / "dataset.csv").string());

  const std::vector<Cell> cells = default_grid();
  std::vector<StabilityReport> reports(cells.size());
  std::vector<std::string> failed;

  std::ostringstream csv;
  csv << "algorithm,parameter_name,parameter_value,effective_value,"
         "beta_h_hat,beta_ph_hat\n";

  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    const Cell& cell = cells[idx];
    const std::string cell_name =
        cell.algo + "_" + cell.param_name + format_cell_value(cell.param_value);
    StabilityConfig cfg;
    cfg.B = a.B;
    cfg.trials = a.trials;
    // every cell sees the same bootstrap grid (common random numbers), so
    // differences between rows come from the learner parameter alone
    cfg.seed = a.seed;
    try {
      reports[idx] = measure_stability(d, cell.learner, cfg);
    } catch (const std::exception& e) {
      failed.push_back(cell_name + ": " + e.what());
      std::cerr << "cell " << cell_name << " failed: " << e.what() << "\n";
      continue;
    }
    const StabilityReport& r = reports[idx];
    double effective = 0.0;
    if (r.effective.mean_leaf_count) {
      effective = *r.effective.mean_leaf_count;
    } else if (r.effective.mean_lambda_min) {
      effective = *r.effective.mean_lambda_min;
    }
    csv << cell.algo << ',' << cell.param_name << ','
        << format_g17(cell.param_value) << ',' << format_g17(effective) << ','
        << format_g17(r.beta_h_hat) << ',' << format_g17(r.beta_ph_hat)
        << '\n';
    write_json_file((fs::path(a.out_dir) / ("cell_" + cell_name + ".json")).string(),
                    stability_report_to_json(r));
    std::cout << "cell " << cell.algo << " " << cell.param_name << "="
              << format_cell_value(cell.param_value)
              << ": beta_h_hat=" << format_g17(r.beta_h_hat)
              << " beta_ph_hat=" << format_g17(r.beta_ph_hat) << "\n";
  }

  write_text_file((fs::path(a.out_dir) / "table1.csv").string(), csv.str());
  if (failed.empty()) {
    write_text_file((fs::path(a.out_dir) / "table1.md").string(),
                    markdown_table(cells, reports));
  }
  std::cout << "wrote " << (fs::path(a.out_dir) / "table1.csv").string()
            << "\n";

  if (!failed.empty()) {
    std::cerr << "failed cells:\n";
    for (const auto& f : failed) std::cerr << "  " << f << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{
      "stabilab: train small classifiers, measure their bootstrap "
      "stability, and evaluate closed-form stability and generalization "
      "bounds"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cmd_gen = app.add_subcommand(
      "generate", "Write a synthetic chi-squared-threshold dataset as CSV");
  cmd_gen->add_option("--m", gen.m, "number of examples")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--seed", gen.seed, "RNG seed");
  cmd_gen->add_option("--out", gen.out, "output CSV path")->required();

  MeasureArgs meas;
  auto* cmd_meas = app.add_subcommand(
      "measure", "Estimate hypothesis / pointwise hypothesis stability");
  cmd_meas->add_option("--data", meas.data, "training CSV")->required();
  cmd_meas->add_option("--learner", meas.learner, "learning algorithm")
      ->required()
      ->check(CLI::IsMember({"tree", "lr", "l2lr", "knn", "stub"}));
  cmd_meas->add_option("--v", meas.v, "tree: max leaves")
      ->check(CLI::PositiveNumber);
  cmd_meas->add_option("--T", meas.iterations, "lr/l2lr: gradient steps")
      ->check(CLI::NonNegativeNumber);
  cmd_meas->add_option("--eta", meas.eta, "lr/l2lr: learning rate");
  cmd_meas->add_option("--lambda", meas.lambda, "l2lr: L2 penalty");
  cmd_meas->add_option("--k", meas.k, "knn: neighbor count (odd)")
      ->check(CLI::PositiveNumber);
  cmd_meas->add_option("--label", meas.stub_label, "stub: constant label")
      ->check(CLI::Range(0, 1));
  cmd_meas->add_flag("--no-bias", meas.no_bias, "lr/l2lr: drop the bias term");
  cmd_meas->add_option("--stat", meas.stat, "which estimate to report")
      ->check(CLI::IsMember({"h", "ph", "both"}));
  cmd_meas->add_option("--B", meas.cfg.B, "bootstrap replicates")
      ->check(CLI::PositiveNumber);
  cmd_meas->add_option("--trials", meas.cfg.trials, "measurement repetitions")
      ->check(CLI::PositiveNumber);
  cmd_meas->add_option("--strategy", meas.strategy, "evaluation set strategy")
      ->check(CLI::IsMember({"all", "oob", "oos"}));
  cmd_meas->add_option("--oos-fraction", meas.oos_fraction,
                       "held-out fraction for oos");
  cmd_meas->add_option("--loss", meas.loss, "evaluation loss")
      ->check(CLI::IsMember({"classification", "gamma", "cross-entropy"}));
  cmd_meas->add_option("--gamma", meas.gamma, "margin width for gamma loss");
  cmd_meas->add_option("--aggregate", meas.aggregate,
                       "aggregation over removal indices")
      ->check(CLI::IsMember({"max", "mean"}));
  cmd_meas->add_option("--seed", meas.cfg.seed, "master RNG seed");
  cmd_meas->add_option("--out", meas.out, "output JSON path")->required();

  BoundsArgs bnd;
  auto* cmd_bnd = app.add_subcommand(
      "bounds", "Evaluate closed-form stability and generalization bounds");
  cmd_bnd->add_option("--algo", bnd.algo, "algorithm")
      ->required()
      ->check(CLI::IsMember({"tree", "lr", "l2lr", "knn"}));
  cmd_bnd->add_option("--data", bnd.data, "training CSV (trains the model)");
  cmd_bnd->add_option("--v", bnd.v, "tree: leaf count");
  cmd_bnd->add_option("--k", bnd.k, "knn: neighbor count");
  cmd_bnd->add_option("--m", bnd.m, "training-set size when --data is absent");
  cmd_bnd->add_option("--remp", bnd.remp,
                      "empirical error when --data is absent");
  cmd_bnd->add_option("--lambda", bnd.lambda, "l2lr: L2 penalty");
  cmd_bnd->add_option("--T", bnd.iterations, "lr/l2lr: gradient steps");
  cmd_bnd->add_option("--eta", bnd.eta, "lr/l2lr: learning rate");
  cmd_bnd->add_option("--delta", bnd.delta, "confidence level")
      ->check(CLI::Range(0.0, 1.0));
  cmd_bnd->add_option("--tau", bnd.tau, "loss Lipschitz constant");
  cmd_bnd->add_option("--seed", bnd.seed, "training seed");
  cmd_bnd->add_option("--out", bnd.out, "output JSON path");

  TableArgs tab;
  auto* cmd_tab = app.add_subcommand(
      "table1", "Run the full reference experiment grid (15 cells)");
  cmd_tab->add_option("--seed", tab.seed, "master seed");
  cmd_tab->add_option("--out-dir", tab.out_dir, "output directory");
  cmd_tab->add_option("--m", tab.m, "training-set size")
      ->check(CLI::PositiveNumber);
  cmd_tab->add_option("--B", tab.B, "bootstrap replicates")
      ->check(CLI::PositiveNumber);
  cmd_tab->add_option("--trials", tab.trials, "measurement repetitions")
      ->check(CLI::PositiveNumber);

  std::vector<char*> argv;
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("stabilab");
  for (const auto& a : args) storage.push_back(a);
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_meas->parsed()) return run_measure(meas);
    if (cmd_bnd->parsed()) return run_bounds(bnd);
    return run_table1(tab);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "stabilab: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stabilab: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace stabilab::cli
