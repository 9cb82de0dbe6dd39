#pragma once

#include "grscde/datagen.hpp"
#include "grscde/selection.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace grscde {

/// grs-els, grs-fixed, nw and kmd.
std::vector<Method> default_methods();

struct ExperimentConfig {
  ModelSpec model = MixtureSpec{};
  Index n_train = 100;
  Index n_val = 100;
  Index n_test = 100;
  Index n_u = 50;
  int n_mc = 100;
  HyperGrid hyper;
  std::vector<Method> estimators = default_methods();
  std::uint64_t seed = 1;
  bool normalize = false;
  std::optional<int> report_scale;  // power of ten; model default when unset
  std::string output;               // directory for the CSV files, none when empty
  int threads = 0;                  // 0 picks GRSCDE_THREADS or the hardware count
  bool timings = true;              // write wall-clock seconds; zeros when false
  /// Score validation D-hat on a second auxiliary sample. With the fitting
  /// sample the loss is unbounded below in the bandwidth and lambda
  /// directions that put mass between the u-nodes.
  bool fresh_validation_u = true;

  /// Throws std::invalid_argument on non-positive sizes, an empty or
  /// duplicated estimator list, or an invalid model or grid.
  void validate() const;
  int scale() const;
};

/// Default table scaling: 3 for mixture and AR,
/// 0 for CIR, 2 for Beta, 9 for CSV data.
int default_report_scale(const ModelSpec& model);

/// Resolves a thread count: a positive request wins, then GRSCDE_THREADS,
/// then std::thread::hardware_concurrency.
int resolve_threads(int requested);

/// (1/(m n_u)) sum_ij (f(x_i, u_j) - q(u_j | x_i))^2 over the test
/// covariates and the auxiliary sample.
double mse_score(const FittedCDE& fit, const PairedDataset& test, const AuxiliaryGrid& aux, const GroundTruth& truth);
/// Same from precomputed estimate values (m x n_u).
double mse_score(const Matrix& estimate, const PairedDataset& test, const AuxiliaryGrid& aux,
                 const GroundTruth& truth);

/// Train/validation/test splits and the auxiliary sample of one replication.
struct ReplicationData {
  PairedDataset train;
  PairedDataset val;
  PairedDataset test;
  AuxiliaryGrid aux;
  std::optional<AuxiliaryGrid> validation_aux;  // set when config.fresh_validation_u
  GroundTruth truth;                            // empty for CSV data
};

/// Draws (or, for CSV data, resamples) the splits of replication `index`
/// from the generator derived from (config.seed, index).
ReplicationData make_replication_data(const ExperimentConfig& config, int index, const CsvData* csv = nullptr);

struct MethodResult {
  Method method = Method::nw;
  double score = 0.0;  // MSE, or test D-hat for CSV data
  SelectionResult selection;
  double seconds = 0.0;
};

struct ReplicationResult {
  int index = 0;
  bool ok = false;
  std::string error;
  std::vector<MethodResult> methods;  // config.estimators order
};

/// One replication of the select-then-score protocol. Errors are caught and
/// reported in the result.
ReplicationResult run_replication(const ExperimentConfig& config, int index, const CsvData* csv = nullptr);

struct MethodSummary {
  Method method = Method::nw;
  std::vector<double> scores;  // successful replications, by index
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; NaN below 2 values
  double mean_seconds = 0.0;
};

struct MCSummary {
  std::string model;
  int n_mc = 0;
  int failures = 0;
  int scale = 0;
  std::vector<MethodSummary> methods;
  std::vector<ReplicationResult> replications;  // slot i holds replication i

  int effective() const { return n_mc - failures; }
};

MCSummary summarize(const ExperimentConfig& config, std::vector<ReplicationResult> replications);

/// Runs every replication across threads, writes replications.csv and
/// summary.csv when `config.output` is set, and logs failures to `log`.
MCSummary run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Columns: replication, estimator, mse_or_dhat, selected_hx_factor,
/// selected_hy, selected_t_or_lambda, seconds.
void write_replications_csv(const MCSummary& summary, std::ostream& out, bool timings);
void write_summary_csv(const MCSummary& summary, std::ostream& out, bool timings);
/// Aligned mean and standard deviation rows, multiplied by 10^scale.
void print_table(const MCSummary& summary, std::ostream& out);

}  // namespace grscde
