#include "grscde/selection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace grscde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PointScore {
  double loss = kInf;
  std::string reason;
};

std::size_t flat(int ix, int iy, int ir, int ny, int nr) {
  return (static_cast<std::size_t>(ix) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(iy)) *
             static_cast<std::size_t>(nr) +
         static_cast<std::size_t>(ir);
}

std::vector<LossEntry> empty_table(int nx, int ny, int nr) {
  std::vector<LossEntry> table;
  table.reserve(static_cast<std::size_t>(nx) * ny * nr);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int ir = 0; ir < nr; ++ir) table.push_back({ix, iy, ir, kInf, "not evaluated"});
    }
  }
  return table;
}

void record(LossEntry& e, double loss) {
  if (std::isfinite(loss)) {
    e.loss = loss;
    e.reason.clear();
  } else {
    e.loss = kInf;
    e.reason = "non-finite validation loss";
  }
}

KernelConfig config_at(const SearchGrids& grids, int ix, int iy) {
  return KernelConfig::make(grids.hx.values[static_cast<std::size_t>(ix)],
                            grids.hy.values[static_cast<std::size_t>(iy)](0));
}

Hyperparameters params_at(const SearchGrids& grids, int ix, int iy) {
  Hyperparameters p;
  p.kernel = config_at(grids, ix, iy);
  p.hx_factor = grids.hx.factors[static_cast<std::size_t>(ix)];
  return p;
}

// Validation D-hat for GRS coefficients at one bandwidth pair.
class GrsScorer {
 public:
  GrsScorer(const std::shared_ptr<const FitData>& data, const PairedDataset& val, const AuxiliaryGrid& vaux,
            const SelectOptions& opt)
      : ev_(data, val.x, vaux.u, val.y), normalize_(opt.normalize), quad_(Quadrature::over(data->aux, opt.quadrature_points)),
        pair_ys_(val.y), grid_ys_(vaux.u) {
    if (normalize_) nodes_.emplace(data, val.x, quad_.nodes());
  }

  double operator()(const CoefficientRep& rep) const {
    Matrix grid;
    Vector pairs;
    ev_.evaluate(rep, &grid, &pairs);
    if (normalize_) {
      const Vector c = normalizing_constants(nodes_->grid(rep), quad_);
      for (Index i = 0; i < grid.rows(); ++i) {
        for (Index j = 0; j < grid.cols(); ++j) grid(i, j) = normalized_value(grid(i, j), c(i), grid_ys_(j), quad_);
        pairs(i) = normalized_value(pairs(i), c(i), pair_ys_(i), quad_);
      }
    }
    return dhat_from_values(grid, pairs, ev_.pair_q());
  }

 private:
  RepEvaluator ev_;
  bool normalize_;
  Quadrature quad_;
  Vector pair_ys_;
  Vector grid_ys_;
  std::optional<RepEvaluator> nodes_;
};

StepPolicy policy_for(Method m) {
  return m == Method::grs_els ? StepPolicy::line_search() : StepPolicy::fixed_inverse_kappa();
}

std::vector<LossEntry> landweber_table(Method m, const PairedDataset& train, const PairedDataset& val,
                                       const AuxiliaryGrid& aux, const SearchGrids& grids, int steps,
                                       const SelectOptions& opt) {
  const int nx = static_cast<int>(grids.hx.size());
  const int ny = static_cast<int>(grids.hy.size());
  std::vector<LossEntry> table = empty_table(nx, ny, steps);
  const AuxiliaryGrid& vaux = opt.validation_aux ? *opt.validation_aux : aux;
  const StepPolicy policy = policy_for(m);
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      try {
        const NodeProblem problem = NodeProblem::build(train, aux, config_at(grids, ix, iy));
        const GrsScorer score(problem.data, val, vaux, opt);
        const int taken = landweber_visit(InitialFunction::uniform(), problem, policy, steps,
                                          [&](const LandweberState& s) {
                                            record(table[flat(ix, iy, s.t - 1, ny, steps)],
                                                   score(s.rep));
                                          });
        for (int t = taken; t < steps; ++t) {
          table[flat(ix, iy, t, ny, steps)].reason = "path stopped after " + std::to_string(taken) + " steps";
        }
      } catch (const std::exception& e) {
        for (int t = 0; t < steps; ++t) table[flat(ix, iy, t, ny, steps)].reason = e.what();
      }
    }
  }
  return table;
}

std::vector<LossEntry> tikhonov_table(const PairedDataset& train, const PairedDataset& val, const AuxiliaryGrid& aux,
                                      const SearchGrids& grids, const SelectOptions& opt) {
  const int nx = static_cast<int>(grids.hx.size());
  const int ny = static_cast<int>(grids.hy.size());
  const int nr = static_cast<int>(grids.lambda.size());
  std::vector<LossEntry> table = empty_table(nx, ny, nr);
  const AuxiliaryGrid& vaux = opt.validation_aux ? *opt.validation_aux : aux;
  std::vector<std::optional<SymmetricEigen>> eig_u(static_cast<std::size_t>(ny));
  for (int ix = 0; ix < nx; ++ix) {
    std::optional<SymmetricEigen> eig_x;
    for (int iy = 0; iy < ny; ++iy) {
      try {
        const NodeProblem problem = NodeProblem::build(train, aux, config_at(grids, ix, iy));
        if (!eig_x) eig_x = SymmetricEigen::of(problem.gram.kx);
        auto& eu = eig_u[static_cast<std::size_t>(iy)];
        if (!eu) eu = SymmetricEigen::of(problem.gram.ku);
        const GrsScorer score(problem.data, val, vaux, opt);
        for (int ir = 0; ir < nr; ++ir) {
          LossEntry& e = table[flat(ix, iy, ir, ny, nr)];
          try {
            const CoefficientRep rep = tikhonov_fit(problem, *eig_x, *eu, grids.lambda[static_cast<std::size_t>(ir)]);
            record(e, score(rep));
          } catch (const std::exception& ex) {
            e.reason = ex.what();
          }
        }
      } catch (const std::exception& ex) {
        for (int ir = 0; ir < nr; ++ir) table[flat(ix, iy, ir, ny, nr)].reason = ex.what();
      }
    }
  }
  return table;
}

int regularisation_size(Method m, const SearchGrids& grids, const HyperGrid& hyper) {
  const int nl = static_cast<int>(grids.lambda.size());
  switch (m) {
    case Method::grs_els:
      return hyper.t2;
    case Method::grs_fixed:
      return hyper.t1;
    case Method::grs_tikhonov:
    case Method::kmd:
      return nl;
    case Method::cdo:
      return nl * nl;
    case Method::nw:
      return 1;
  }
  return 1;
}

FittedCDE baseline_fit(Method m, const PairedDataset& train, const AuxiliaryGrid& aux, const SearchGrids& grids,
                       int ix, int iy, int ir) {
  const KernelConfig cfg = config_at(grids, ix, iy);
  const auto nl = static_cast<int>(grids.lambda.size());
  switch (m) {
    case Method::nw:
      return nw_fit(train, aux, cfg);
    case Method::kmd:
      return kmd_fit(train, aux, cfg, grids.lambda.at(static_cast<std::size_t>(ir)));
    case Method::cdo:
      return cdo_fit(train, aux, cfg, grids.lambda.at(static_cast<std::size_t>(ir / nl)),
                     grids.lambda.at(static_cast<std::size_t>(ir % nl)));
    default:
      throw std::logic_error("baseline_fit: not a baseline method");
  }
}

FittedCDE refit(Method m, const PairedDataset& train, const AuxiliaryGrid& aux, const SearchGrids& grids,
                const LossEntry& best, Hyperparameters& params) {
  params = params_at(grids, best.ix, best.iy);
  switch (m) {
    case Method::grs_els:
    case Method::grs_fixed: {
      const NodeProblem problem = NodeProblem::build(train, aux, params.kernel);
      const StepPolicy policy = policy_for(m);
      CoefficientRep rep;
      landweber_visit(InitialFunction::uniform(), problem, policy, best.ir + 1,
                      [&](const LandweberState& s) { rep = s.rep; });
      params.iterations = best.ir + 1;
      params.step = policy.kind;
      return grs_fitted(EstimatorKind::grs_landweber, problem.data, std::move(rep), params);
    }
    case Method::grs_tikhonov: {
      const NodeProblem problem = NodeProblem::build(train, aux, params.kernel);
      params.lambda = grids.lambda.at(static_cast<std::size_t>(best.ir));
      return grs_fitted(EstimatorKind::grs_tikhonov, problem.data, tikhonov_fit(problem, params.lambda), params);
    }
    case Method::kmd:
      params.lambda = grids.lambda.at(static_cast<std::size_t>(best.ir));
      break;
    case Method::cdo: {
      const auto nl = static_cast<int>(grids.lambda.size());
      params.lambda = grids.lambda.at(static_cast<std::size_t>(best.ir / nl));
      params.lambda2 = grids.lambda.at(static_cast<std::size_t>(best.ir % nl));
      break;
    }
    case Method::nw:
      break;
  }
  FittedCDE fit = baseline_fit(m, train, aux, grids, best.ix, best.iy, best.ir);
  fit.params = params;
  return fit;
}

}  // namespace

void HyperGrid::validate() const {
  if (!(p_x > 1.0) || !(p_y > 1.0) || !(p_lambda > 1.0)) throw std::invalid_argument("grid ratios must exceed 1");
  if (l_x < 0 || l_y < 0 || l_lambda < 0) throw std::invalid_argument("grid half-widths must be >= 0");
  if (t1 < 1 || t2 < 1) throw std::invalid_argument("Landweber iteration budgets must be >= 1");
}

std::vector<double> lambda_grid(double p_lambda, int l_lambda) {
  if (!(p_lambda > 1.0)) throw std::invalid_argument("lambda grid ratio must exceed 1");
  if (l_lambda < 0) throw std::invalid_argument("lambda grid length must be >= 0");
  std::vector<double> out;
  for (int l = 0; l <= l_lambda; ++l) out.push_back(std::pow(p_lambda, -l));
  return out;
}

SearchGrids build_grids(const PairedDataset& train, const HyperGrid& hyper) {
  hyper.validate();
  train.validate();
  if (train.size() < 2) throw std::invalid_argument("bandwidth grids need at least 2 training rows");
  SearchGrids g;
  g.hx = BandwidthGrid::make(median_heuristic(train.x), hyper.p_x, hyper.l_x);
  g.hy = BandwidthGrid::make(Vector::Constant(1, median_heuristic(train.y)), hyper.p_y, hyper.l_y);
  g.lambda = lambda_grid(hyper.p_lambda, hyper.l_lambda);
  return g;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::grs_els:
      return "grs-els";
    case Method::grs_fixed:
      return "grs-fixed";
    case Method::grs_tikhonov:
      return "grs-tikhonov";
    case Method::nw:
      return "nw";
    case Method::kmd:
      return "kmd";
    case Method::cdo:
      return "cdo";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::grs_els, Method::grs_fixed, Method::grs_tikhonov, Method::nw, Method::kmd, Method::cdo}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(name) +
                              "' (expected grs-els, grs-fixed, grs-tikhonov, nw, kmd or cdo)");
}

EstimatorKind kind_of(Method method) {
  switch (method) {
    case Method::grs_els:
    case Method::grs_fixed:
      return EstimatorKind::grs_landweber;
    case Method::grs_tikhonov:
      return EstimatorKind::grs_tikhonov;
    case Method::nw:
      return EstimatorKind::nw;
    case Method::kmd:
      return EstimatorKind::kmd;
    case Method::cdo:
      return EstimatorKind::cdo;
  }
  return EstimatorKind::nw;
}

std::size_t argmin_lexicographic(const std::vector<LossEntry>& table, std::size_t* ties) {
  std::size_t best = table.size();
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!std::isfinite(table[i].loss)) continue;
    if (best == table.size() || table[i].loss < table[best].loss) best = i;
  }
  if (best == table.size()) throw std::runtime_error("no grid point produced a finite validation loss");
  if (ties != nullptr) {
    *ties = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (i != best && table[i].loss == table[best].loss) ++*ties;
    }
  }
  return best;
}

std::vector<LossEntry> loss_table(int nx, int ny, int nr, const std::function<double(int, int, int)>& loss) {
  if (nx < 1 || ny < 1 || nr < 1) throw std::invalid_argument("loss table dimensions must be >= 1");
  std::vector<LossEntry> table = empty_table(nx, ny, nr);
  for (LossEntry& e : table) {
    try {
      record(e, loss(e.ix, e.iy, e.ir));
    } catch (const std::exception& ex) {
      e.loss = kInf;
      e.reason = ex.what();
    }
  }
  return table;
}

double validation_dhat(const FittedCDE& fit, const PairedDataset& val, const AuxiliaryGrid& aux) {
  const Matrix nodes = fit.on_grid(val.x, aux.u);
  const Vector pairs = fit.at_pairs(val.x, val.y);
  return dhat_from_values(nodes, pairs, aux.density(val.y));
}

SelectionResult select(Method method, const PairedDataset& train, const PairedDataset& val, const AuxiliaryGrid& aux,
                       const SearchGrids& grids, const HyperGrid& hyper, const SelectOptions& options) {
  train.validate();
  val.validate();
  if (train.empty() || val.empty()) throw std::invalid_argument("selection needs nonempty training and validation sets");
  if (train.dim() != val.dim()) throw std::invalid_argument("training and validation covariate dimensions differ");

  SelectionResult result;
  result.method = method;
  const int nx = static_cast<int>(grids.hx.size());
  const int ny = static_cast<int>(grids.hy.size());
  const int nr = regularisation_size(method, grids, hyper);
  switch (method) {
    case Method::grs_els:
    case Method::grs_fixed:
      result.table = landweber_table(method, train, val, aux, grids, nr, options);
      break;
    case Method::grs_tikhonov:
      result.table = tikhonov_table(train, val, aux, grids, options);
      break;
    default:
      result.table = loss_table(nx, ny, nr, [&](int ix, int iy, int ir) {
        FittedCDE fit = baseline_fit(method, train, aux, grids, ix, iy, ir);
        fit.normalize = options.normalize;
        fit.quadrature_points = options.quadrature_points;
        return validation_dhat(fit, val, options.validation_aux ? *options.validation_aux : aux);
      });
      break;
  }
  result.best = argmin_lexicographic(result.table, &result.ties);
  result.fit = refit(method, train, aux, grids, result.best_entry(), result.params);
  result.fit.normalize = options.normalize;
  result.fit.quadrature_points = options.quadrature_points;
  return result;
}

}  // namespace grscde
