#pragma once

#include "grscde/estimators.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grscde {

/// Grid ratios, half-widths and iteration budgets of the validation search.
struct HyperGrid {
  double p_x = 2.0;
  double p_y = 1.6;
  double p_lambda = 3.0;
  int l_x = 3;
  int l_y = 3;
  int l_lambda = 6;
  int t1 = 40;  // fixed-step Landweber iterations
  int t2 = 10;  // line-search Landweber iterations

  void validate() const;
};

/// {p^{-l} : l = 0..L}, strictly decreasing from 1.
std::vector<double> lambda_grid(double p_lambda, int l_lambda);

struct SearchGrids {
  BandwidthGrid hx;  // median vector scaled by common factors
  BandwidthGrid hy;
  std::vector<double> lambda;
};

/// Median heuristic on the training sample, expanded geometrically.
SearchGrids build_grids(const PairedDataset& train, const HyperGrid& hyper);

/// The estimators compared by the benchmark. The two Landweber variants
/// differ only in the step policy.
enum class Method { grs_els, grs_fixed, grs_tikhonov, nw, kmd, cdo };

std::string_view to_string(Method method);
/// Accepts the names printed by to_string; throws std::invalid_argument otherwise.
Method parse_method(std::string_view name);
EstimatorKind kind_of(Method method);

/// One validation loss. `ir` is the lambda index, t - 1 for Landweber,
/// i1 * |lambda grid| + i2 for CDO, and 0 for NW.
struct LossEntry {
  int ix = 0;
  int iy = 0;
  int ir = 0;
  double loss = 0.0;
  std::string reason;  // why the loss is +inf, empty otherwise
};

struct SelectionResult {
  Method method = Method::nw;
  std::vector<LossEntry> table;  // lexicographic (ix, iy, ir) order
  std::size_t best = 0;          // index into table
  std::size_t ties = 0;          // other entries sharing the minimum loss
  Hyperparameters params;
  FittedCDE fit;

  const LossEntry& best_entry() const { return table.at(best); }
};

/// Index of the first minimum of `table`, which is the lexicographically
/// smallest grid point among equal losses. Sets `ties` when non-null.
/// Throws std::runtime_error when no loss is finite.
std::size_t argmin_lexicographic(const std::vector<LossEntry>& table, std::size_t* ties = nullptr);

/// Evaluates `loss(ix, iy, ir)` over the full grid of the given sizes. A
/// thrown exception or a non-finite loss is recorded as +inf with a reason.
std::vector<LossEntry> loss_table(int nx, int ny, int nr, const std::function<double(int, int, int)>& loss);

/// Validation D-hat of a fitted estimator; nodes are the validation
/// covariates crossed with the shared auxiliary sample.
double validation_dhat(const FittedCDE& fit, const PairedDataset& val, const AuxiliaryGrid& aux);

struct SelectOptions {
  bool normalize = false;
  int quadrature_points = 512;
  /// Auxiliary sample for the validation nodes; the fitting sample when null.
  const AuxiliaryGrid* validation_aux = nullptr;
};

/// Fits every grid point on `train`, scores it by validation D-hat and
/// returns the minimiser together with its fitted estimator.
SelectionResult select(Method method, const PairedDataset& train, const PairedDataset& val, const AuxiliaryGrid& aux,
                       const SearchGrids& grids, const HyperGrid& hyper, const SelectOptions& options = {});

}  // namespace grscde
