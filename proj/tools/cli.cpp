#include "cli.hpp"

#include "grscde/harness.hpp"
#include "model_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace grscde::cli {

namespace {

const std::vector<std::string> kSubcommands{"bench", "fit", "eval"};

struct GridArgs {
  HyperGrid hyper;

  void attach(CLI::App* app) {
    app->add_option("--p-x", hyper.p_x, "ratio of the h_X grid")->capture_default_str();
    app->add_option("--p-y", hyper.p_y, "ratio of the h_Y grid")->capture_default_str();
    app->add_option("--p-lambda", hyper.p_lambda, "ratio of the lambda grid")->capture_default_str();
    app->add_option("--l-x", hyper.l_x, "half-width of the h_X grid")->capture_default_str();
    app->add_option("--l-y", hyper.l_y, "half-width of the h_Y grid")->capture_default_str();
    app->add_option("--l-lambda", hyper.l_lambda, "length of the lambda grid")->capture_default_str();
    app->add_option("--t1", hyper.t1, "iterations with step 1/kappa^2")->capture_default_str();
    app->add_option("--t2", hyper.t2, "iterations with the line-search step")->capture_default_str();
  }
};

struct BenchArgs {
  std::string model = "mixture";
  int d = 2;
  int components = 50;
  int burn_in = 100;
  Index n_train = 100, n_val = 100, n_test = 100, n_u = 50;
  int n_mc = 100;
  std::uint64_t seed = 1;
  std::string estimators = "grs-els,grs-fixed,nw,kmd";
  bool normalize = false;
  std::string out;
  int threads = 0;
  std::string csv_path, x_cols, y_col;
  std::optional<int> report_scale;
  bool no_timings = false;
  bool shared_validation_u = false;
  GridArgs grid;
};

struct FitArgs {
  std::string data, x_cols, y_col, estimator = "grs-els", out;
  double val_fraction = 0.5;
  Index n_u = 50;
  std::uint64_t seed = 1;
  bool normalize = false;
  GridArgs grid;
};

struct EvalArgs {
  std::string model_file, x, y, queries;
  int grid = 0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Vector parse_numbers(const std::string& s, const char* what) {
  const auto items = split_list(s);
  Vector v(static_cast<Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      std::size_t used = 0;
      v(static_cast<Index>(i)) = std::stod(items[i], &used);
      if (used != items[i].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": '" + items[i] + "' is not a number");
    }
  }
  return v;
}

ModelSpec make_model(const BenchArgs& a) {
  if (a.model == "mixture") return MixtureSpec{a.d, a.components};
  if (a.model == "cir") return CirSpec{};
  if (a.model == "ar") {
    ArSpec s = ArSpec::equal_weights(a.d);
    s.burn_in = a.burn_in;
    return s;
  }
  if (a.model == "beta") return BetaSpec{a.d};
  if (a.model == "csv") {
    if (a.csv_path.empty() || a.x_cols.empty() || a.y_col.empty()) {
      throw std::invalid_argument("--model csv needs --csv-path, --x-cols and --y-col");
    }
    return CsvSpec{a.csv_path, split_list(a.x_cols), a.y_col};
  }
  throw std::invalid_argument("unknown model '" + a.model + "' (expected mixture, cir, ar, beta or csv)");
}

int run_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  cfg.model = make_model(a);
  cfg.n_train = a.n_train;
  cfg.n_val = a.n_val;
  cfg.n_test = a.n_test;
  cfg.n_u = a.n_u;
  cfg.n_mc = a.n_mc;
  cfg.hyper = a.grid.hyper;
  cfg.estimators.clear();
  for (const auto& name : split_list(a.estimators)) cfg.estimators.push_back(parse_method(name));
  cfg.seed = a.seed;
  cfg.normalize = a.normalize;
  cfg.report_scale = a.report_scale;
  cfg.output = a.out;
  cfg.threads = a.threads;
  cfg.timings = !a.no_timings;
  cfg.fresh_validation_u = !a.shared_validation_u;
  const MCSummary summary = run_experiment(cfg, &err);
  print_table(summary, out);
  if (summary.effective() == 0) {
    err << "error: every replication failed\n";
    return 1;
  }
  return 0;
}

int run_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.val_fraction > 0.0 && a.val_fraction < 1.0)) throw std::invalid_argument("--val-fraction must be in (0, 1)");
  const Method method = parse_method(a.estimator);
  const std::vector<std::string> x_cols = split_list(a.x_cols);
  const CsvData csv = load_csv(a.data, x_cols, a.y_col, &err);
  const Index n = csv.data.size();
  const auto n_val = static_cast<Index>(std::llround(a.val_fraction * static_cast<double>(n)));
  if (n - n_val < 2 || n_val < 1) throw std::invalid_argument("too few rows for a training/validation split");

  Rng rng = make_rng(a.seed, 0);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
  const std::span<const Index> o(order);
  const PairedDataset train = csv.data.subset(o.subspan(0, static_cast<std::size_t>(n - n_val)));
  const PairedDataset val = csv.data.subset(o.subspan(static_cast<std::size_t>(n - n_val)));
  const AuxiliaryGrid aux = sample_aux(csv.data.y.minCoeff(), csv.data.y.maxCoeff(), a.n_u, rng);
  const AuxiliaryGrid val_aux = sample_aux(aux.lo, aux.hi, a.n_u, rng);

  const SearchGrids grids = build_grids(train, a.grid.hyper);
  const SelectionResult sel = select(method, train, val, aux, grids, a.grid.hyper, {a.normalize, 512, &val_aux});

  SavedModel m{method, x_cols, a.y_col, train, aux, sel.fit};
  save_model(m, a.out);
  const Hyperparameters& p = sel.params;
  out << to_string(method) << ": validation D-hat " << fmt(sel.best_entry().loss) << ", h_X factor "
      << fmt(p.hx_factor) << ", h_Y " << fmt(p.kernel.hy);
  if (p.iterations > 0) out << ", t " << p.iterations;
  if (!std::isnan(p.lambda)) out << ", lambda " << fmt(p.lambda);
  if (!std::isnan(p.lambda2)) out << ", lambda2 " << fmt(p.lambda2);
  out << "\nwrote " << a.out << '\n';
  return 0;
}

int run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const SavedModel m = load_model(a.model_file);
  const Index d = m.fit.params.kernel.dim();
  if (!a.queries.empty()) {
    const CsvData q = load_csv(a.queries, m.x_names, m.y_name, &err);
    const Vector f = m.fit.at_pairs(q.data.x, q.data.y);
    for (const auto& name : m.x_names) out << name << ',';
    out << m.y_name << ",density\n";
    for (Index i = 0; i < f.size(); ++i) {
      for (Index l = 0; l < d; ++l) out << fmt(q.data.x(i, l)) << ',';
      out << fmt(q.data.y(i)) << ',' << fmt(f(i)) << '\n';
    }
    return 0;
  }
  if (a.x.empty()) throw std::invalid_argument("eval needs --queries or --x");
  const Vector x = parse_numbers(a.x, "--x");
  if (x.size() != d) {
    throw std::invalid_argument("--x has " + std::to_string(x.size()) + " values, the model expects " +
                                std::to_string(d));
  }
  Vector ys;
  if (a.grid > 0) {
    if (a.grid < 2) throw std::invalid_argument("--grid needs at least 2 points");
    ys = Vector::LinSpaced(a.grid, m.aux.lo, m.aux.hi);
  } else if (!a.y.empty()) {
    ys = parse_numbers(a.y, "--y");
  } else {
    throw std::invalid_argument("eval needs --y or --grid with --x");
  }
  const Vector f = m.fit.on_grid(x.transpose(), ys).row(0).transpose();
  out << "y,density\n";
  for (Index j = 0; j < ys.size(); ++j) out << fmt(ys(j)) << ',' << fmt(f(j)) << '\n';
  return 0;
}

/// Moves `--config FILE` out of the arguments and splices the file's
/// settings in right after the subcommand, ahead of explicit flags.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file name");
      from_file = config_tokens(args[++i]);
    } else if (a.rfind("--config=", 0) == 0) {
      from_file = config_tokens(a.substr(9));
    } else {
      rest.push_back(a);
    }
  }
  if (from_file.empty()) return rest;
  auto sub = std::find_if(rest.begin(), rest.end(), [](const std::string& s) {
    return std::find(kSubcommands.begin(), kSubcommands.end(), s) != kSubcommands.end();
  });
  if (sub == rest.end()) throw CLI::ArgumentMismatch("--config must follow a subcommand");
  rest.insert(sub + 1, from_file.begin(), from_file.end());
  return rest;
}

}  // namespace

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::vector<std::string> tokens;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional density estimation with the general regularisation scheme", "grscde"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_doc;

  BenchArgs b;
  CLI::App* bench = app.add_subcommand("bench", "Monte Carlo comparison of estimators on a model");
  bench->add_option("--model", b.model, "mixture, cir, ar, beta or csv")->capture_default_str();
  bench->add_option("--d", b.d, "covariate dimension (mixture, ar, beta)")->capture_default_str();
  bench->add_option("--components", b.components, "mixture components")->capture_default_str();
  bench->add_option("--burn-in", b.burn_in, "AR burn-in length")->capture_default_str();
  bench->add_option("--n-train", b.n_train)->capture_default_str();
  bench->add_option("--n-val", b.n_val)->capture_default_str();
  bench->add_option("--n-test", b.n_test)->capture_default_str();
  bench->add_option("--n-u", b.n_u, "auxiliary sample size")->capture_default_str();
  bench->add_option("--n-mc", b.n_mc, "replications")->capture_default_str();
  bench->add_option("--seed", b.seed)->capture_default_str();
  bench->add_option("--estimators", b.estimators, "comma list of grs-els, grs-fixed, grs-tikhonov, nw, kmd, cdo")
      ->capture_default_str();
  bench->add_flag("--normalize", b.normalize, "score ReLU-normalised estimates");
  bench->add_option("--out", b.out, "directory for replications.csv and summary.csv");
  bench->add_option("--threads", b.threads, "worker threads, default GRSCDE_THREADS or all cores");
  bench->add_option("--csv-path", b.csv_path, "data file for --model csv");
  bench->add_option("--x-cols", b.x_cols, "comma list of covariate columns");
  bench->add_option("--y-col", b.y_col, "response column");
  bench->add_option("--report-scale", b.report_scale, "print values times 10^k");
  bench->add_flag("--no-timings", b.no_timings, "write zero seconds so outputs are byte-reproducible");
  bench->add_flag("--shared-validation-u", b.shared_validation_u,
                  "score validation D-hat on the fitting auxiliary sample instead of a second one");
  bench->add_option("--config", config_doc, "key = value file mirroring these flags");
  b.grid.attach(bench);

  FitArgs f;
  CLI::App* fit = app.add_subcommand("fit", "Select and fit one estimator on a CSV file");
  fit->add_option("--data", f.data, "CSV file with a header row")->required();
  fit->add_option("--x-cols", f.x_cols, "comma list of covariate columns")->required();
  fit->add_option("--y-col", f.y_col, "response column")->required();
  fit->add_option("--estimator", f.estimator)->capture_default_str();
  fit->add_option("--val-fraction", f.val_fraction)->capture_default_str();
  fit->add_option("--n-u", f.n_u)->capture_default_str();
  fit->add_option("--seed", f.seed)->capture_default_str();
  fit->add_flag("--normalize", f.normalize);
  fit->add_option("--out", f.out, "model file to write")->required();
  fit->add_option("--config", config_doc, "key = value file mirroring these flags");
  f.grid.attach(fit);

  EvalArgs e;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a saved model");
  eval->add_option("--model-file", e.model_file)->required();
  eval->add_option("--x", e.x, "comma list of covariate values");
  eval->add_option("--y", e.y, "comma list of responses");
  eval->add_option("--grid", e.grid, "number of equally spaced responses over the support");
  eval->add_option("--queries", e.queries, "CSV file with the model's covariate and response columns");
  eval->add_option("--config", config_doc, "key = value file mirroring these flags");

  try {
    std::vector<std::string> tokens = expand_config(args);
    std::reverse(tokens.begin(), tokens.end());
    app.parse(tokens);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err);
  }

  try {
    if (bench->parsed()) return run_bench(b, out, err);
    if (fit->parsed()) return run_fit(f, out, err);
    return run_eval(e, out, err);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 2;
  }
}

}  // namespace grscde::cli
