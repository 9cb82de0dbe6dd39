#include "grscde/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace grscde {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kCirLo = 0.0;
constexpr double kCirHi = 0.3;

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_sig(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<Index> iota_index(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

void shuffle_rows(std::vector<Index>& idx, Rng& rng) {
  // Explicit Fisher-Yates so the permutation depends only on the generator.
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

struct Splits {
  PairedDataset train, val, test;
};

Splits split(const PairedDataset& all, const std::vector<Index>& order, Index n_train, Index n_val, Index n_test) {
  const std::span<const Index> o(order);
  return {all.subset(o.subspan(0, static_cast<std::size_t>(n_train))),
          all.subset(o.subspan(static_cast<std::size_t>(n_train), static_cast<std::size_t>(n_val))),
          all.subset(o.subspan(static_cast<std::size_t>(n_train + n_val), static_cast<std::size_t>(n_test)))};
}

double selected_regulariser(const MethodResult& r) {
  switch (r.method) {
    case Method::grs_els:
    case Method::grs_fixed:
      return r.selection.params.iterations;
    case Method::grs_tikhonov:
    case Method::kmd:
    case Method::cdo:
      return r.selection.params.lambda;
    case Method::nw:
      break;
  }
  return std::nan("");
}

}  // namespace

std::vector<Method> default_methods() { return {Method::grs_els, Method::grs_fixed, Method::nw, Method::kmd}; }

void ExperimentConfig::validate() const {
  grscde::validate(model);
  hyper.validate();
  if (n_train < 2 || n_val < 1 || n_test < 1) {
    throw std::invalid_argument("need n_train >= 2, n_val >= 1 and n_test >= 1");
  }
  if (n_u < 1) throw std::invalid_argument("n_u must be >= 1");
  if (n_mc < 1) throw std::invalid_argument("n_mc must be >= 1");
  if (threads < 0) throw std::invalid_argument("thread count must be >= 0");
  if (estimators.empty()) throw std::invalid_argument("at least one estimator is required");
  std::set<Method> seen(estimators.begin(), estimators.end());
  if (seen.size() != estimators.size()) throw std::invalid_argument("estimator list has duplicates");
}

int default_report_scale(const ModelSpec& model) {
  return std::visit(overloaded{
                        [](const MixtureSpec&) { return 3; },
                        [](const CirSpec&) { return 0; },
                        [](const ArSpec&) { return 3; },
                        [](const BetaSpec&) { return 2; },
                        [](const CsvSpec&) { return 9; },
                    },
                    model);
}

int ExperimentConfig::scale() const { return report_scale.value_or(default_report_scale(model)); }

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GRSCDE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double mse_score(const Matrix& estimate, const PairedDataset& test, const AuxiliaryGrid& aux,
                 const GroundTruth& truth) {
  if (!truth) throw std::invalid_argument("MSE needs a ground truth");
  if (estimate.rows() != test.size() || estimate.cols() != aux.size()) {
    throw std::invalid_argument("MSE: estimate shape does not match the test grid");
  }
  double s = 0.0;
  for (Index i = 0; i < test.size(); ++i) {
    const Vector x = test.x.row(i).transpose();
    for (Index j = 0; j < aux.size(); ++j) {
      const double e = estimate(i, j) - truth(x, aux.u(j));
      s += e * e;
    }
  }
  return s / static_cast<double>(test.size() * aux.size());
}

double mse_score(const FittedCDE& fit, const PairedDataset& test, const AuxiliaryGrid& aux, const GroundTruth& truth) {
  return mse_score(fit.on_grid(test.x, aux.u), test, aux, truth);
}

ReplicationData make_replication_data(const ExperimentConfig& config, int index, const CsvData* csv) {
  Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(index));
  const Index total = config.n_train + config.n_val + config.n_test;
  ReplicationData out;
  PairedDataset all;
  double lo = 0.0;
  double hi = 1.0;
  bool from_train = false;
  bool shuffle = false;
  std::visit(overloaded{
                 [&](const MixtureSpec& s) {
                   auto g = gen_mixture(s, total, rng);
                   all = std::move(g.data);
                   out.truth = std::move(g.truth);
                   from_train = true;
                 },
                 [&](const CirSpec& s) {
                   auto g = gen_cir(s, total + 1, rng);
                   all = std::move(g.pairs);
                   out.truth = std::move(g.truth);
                   lo = kCirLo;
                   hi = kCirHi;
                   shuffle = true;
                 },
                 [&](const ArSpec& s) {
                   auto g = gen_ar(s, total + s.d, rng);
                   all = std::move(g.pairs);
                   out.truth = std::move(g.truth);
                   from_train = true;
                   shuffle = true;
                 },
                 [&](const BetaSpec& s) {
                   auto g = gen_beta(s, total, rng);
                   all = std::move(g.data);
                   out.truth = std::move(g.truth);
                 },
                 [&](const CsvSpec&) {
                   if (csv == nullptr) throw std::invalid_argument("CSV model needs loaded data");
                   if (csv->data.size() < total) {
                     throw std::invalid_argument("CSV file has " + std::to_string(csv->data.size()) +
                                                 " complete rows, fewer than n_train + n_val + n_test = " +
                                                 std::to_string(total));
                   }
                   all = csv->data;
                   lo = all.y.minCoeff();
                   hi = all.y.maxCoeff();
                   shuffle = true;
                 },
             },
             config.model);

  std::vector<Index> order = iota_index(all.size());
  if (shuffle) shuffle_rows(order, rng);
  Splits s = split(all, order, config.n_train, config.n_val, config.n_test);
  out.train = std::move(s.train);
  out.val = std::move(s.val);
  out.test = std::move(s.test);
  if (from_train) {
    lo = out.train.y.minCoeff();
    hi = out.train.y.maxCoeff();
  }
  out.aux = sample_aux(lo, hi, config.n_u, rng);
  if (config.fresh_validation_u) out.validation_aux = sample_aux(lo, hi, config.n_u, rng);
  return out;
}

ReplicationResult run_replication(const ExperimentConfig& config, int index, const CsvData* csv) {
  ReplicationResult result;
  result.index = index;
  try {
    const ReplicationData data = make_replication_data(config, index, csv);
    const SearchGrids grids = build_grids(data.train, config.hyper);
    const SelectOptions options{config.normalize, 512, data.validation_aux ? &*data.validation_aux : nullptr};
    for (Method m : config.estimators) {
      const auto start = std::chrono::steady_clock::now();
      MethodResult r;
      r.method = m;
      r.selection = select(m, data.train, data.val, data.aux, grids, config.hyper, options);
      if (data.truth) {
        r.score = mse_score(r.selection.fit, data.test, data.aux, data.truth);
      } else {
        r.score = validation_dhat(r.selection.fit, data.test, data.aux);
      }
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.methods.push_back(std::move(r));
    }
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    result.methods.clear();
  }
  return result;
}

MCSummary summarize(const ExperimentConfig& config, std::vector<ReplicationResult> replications) {
  MCSummary s;
  s.model = model_name(config.model);
  s.n_mc = static_cast<int>(replications.size());
  s.scale = config.scale();
  for (std::size_t k = 0; k < config.estimators.size(); ++k) {
    MethodSummary ms;
    ms.method = config.estimators[k];
    double seconds = 0.0;
    for (const auto& r : replications) {
      if (!r.ok) continue;
      ms.scores.push_back(r.methods[k].score);
      seconds += r.methods[k].seconds;
    }
    const auto n = static_cast<double>(ms.scores.size());
    if (!ms.scores.empty()) {
      ms.mean = std::accumulate(ms.scores.begin(), ms.scores.end(), 0.0) / n;
      ms.mean_seconds = seconds / n;
    } else {
      ms.mean = std::nan("");
    }
    if (ms.scores.size() >= 2) {
      double ss = 0.0;
      for (double v : ms.scores) ss += (v - ms.mean) * (v - ms.mean);
      ms.sd = std::sqrt(ss / (n - 1.0));
    } else {
      ms.sd = std::nan("");
    }
    s.methods.push_back(std::move(ms));
  }
  s.failures = static_cast<int>(std::count_if(replications.begin(), replications.end(),
                                              [](const ReplicationResult& r) { return !r.ok; }));
  s.replications = std::move(replications);
  return s;
}

MCSummary run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  std::optional<CsvData> csv;
  if (const auto* spec = std::get_if<CsvSpec>(&config.model)) {
    csv = load_csv(spec->path, spec->x_cols, spec->y_col, log);
  }
  std::filesystem::path out_dir;
  if (!config.output.empty()) {
    out_dir = config.output;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + config.output + "': " + ec.message());
  }

  std::vector<ReplicationResult> slots(static_cast<std::size_t>(config.n_mc));
  std::atomic<int> next{0};
  const CsvData* csv_ptr = csv ? &*csv : nullptr;
  auto worker = [&] {
    for (int i = next++; i < config.n_mc; i = next++) {
      slots[static_cast<std::size_t>(i)] = run_replication(config, i, csv_ptr);
    }
  };
  const int threads = std::min(resolve_threads(config.threads), config.n_mc);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  MCSummary summary = summarize(config, std::move(slots));
  if (log != nullptr) {
    for (const auto& r : summary.replications) {
      if (!r.ok) *log << "replication " << r.index << " failed: " << r.error << '\n';
    }
  }
  if (!out_dir.empty()) {
    auto open = [](const std::filesystem::path& p) {
      std::ofstream f(p, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
      return f;
    };
    std::ofstream reps = open(out_dir / "replications.csv");
    write_replications_csv(summary, reps, config.timings);
    std::ofstream sum = open(out_dir / "summary.csv");
    write_summary_csv(summary, sum, config.timings);
    if (!reps || !sum) throw std::runtime_error("error writing results to '" + config.output + "'");
  }
  return summary;
}

void write_replications_csv(const MCSummary& summary, std::ostream& out, bool timings) {
  out << "replication,estimator,mse_or_dhat,selected_hx_factor,selected_hy,selected_t_or_lambda,seconds\n";
  for (const auto& r : summary.replications) {
    if (!r.ok) continue;
    for (const auto& m : r.methods) {
      out << r.index << ',' << to_string(m.method) << ',' << fmt_double(m.score) << ','
          << fmt_double(m.selection.params.hx_factor) << ',' << fmt_double(m.selection.params.kernel.hy) << ','
          << fmt_double(selected_regulariser(m)) << ',' << fmt_double(timings ? m.seconds : 0.0) << '\n';
    }
  }
}

void write_summary_csv(const MCSummary& summary, std::ostream& out, bool timings) {
  out << "estimator,n_effective,failures,mean,sd,mean_seconds\n";
  for (const auto& m : summary.methods) {
    out << to_string(m.method) << ',' << m.scores.size() << ',' << summary.failures << ',' << fmt_double(m.mean)
        << ',' << fmt_double(m.sd) << ',' << fmt_double(timings ? m.mean_seconds : 0.0) << '\n';
  }
}

void print_table(const MCSummary& summary, std::ostream& out) {
  const double factor = std::pow(10.0, summary.scale);
  out << summary.model << ": n_mc=" << summary.n_mc << " effective=" << summary.effective()
      << " failures=" << summary.failures << ", values x 10^" << summary.scale << '\n';
  constexpr int kWidth = 14;
  out << std::left << std::setw(6) << "";
  for (const auto& m : summary.methods) out << std::right << std::setw(kWidth) << to_string(m.method);
  out << '\n' << std::left << std::setw(6) << "mean";
  for (const auto& m : summary.methods) out << std::right << std::setw(kWidth) << fmt_sig(m.mean * factor, 4);
  out << '\n' << std::left << std::setw(6) << "sd";
  for (const auto& m : summary.methods) out << std::right << std::setw(kWidth) << fmt_sig(m.sd * factor, 4);
  out << '\n';
}

}  // namespace grscde
