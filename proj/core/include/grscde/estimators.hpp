#pragma once

#include "grscde/operators.hpp"
#include "grscde/regularizers.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string_view>

namespace grscde {

enum class EstimatorKind { grs_tikhonov, grs_landweber, nw, kmd, cdo };

std::string_view to_string(EstimatorKind kind);

/// Selected hyperparameters of a fitted estimator. Fields that do not
/// apply to the estimator kind stay at their defaults.
struct Hyperparameters {
  KernelConfig kernel;
  double hx_factor = 1.0;  // common multiplier applied to the median-heuristic vector
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::optional<StepPolicy::Kind> step;
};

/// A conditional density estimate y -> f(x, y) for every covariate x.
class ConditionalDensity {
 public:
  virtual ~ConditionalDensity() = default;

  /// m x S matrix of f(xq_i, ys_j).
  virtual Matrix on_grid(const Matrix& xq, const Vector& ys) const = 0;
  /// f(xq_l, yq_l).
  virtual Vector at_pairs(const Matrix& xq, const Vector& yq) const = 0;

  double operator()(const Eigen::Ref<const Vector>& x, double y) const;
};

/// Composite trapezoid rule on `points` equally spaced nodes over [lo, hi].
struct Quadrature {
  double lo = 0.0;
  double hi = 1.0;
  int points = 512;

  static Quadrature over(const AuxiliaryGrid& aux, int points = 512) { return {aux.lo, aux.hi, points}; }
  Vector nodes() const;
  double integrate(const Eigen::Ref<const Vector>& values) const;
};

struct FittedCDE {
  EstimatorKind kind = EstimatorKind::nw;
  Hyperparameters params;
  std::shared_ptr<const ConditionalDensity> model;
  AuxiliaryGrid support;
  bool normalize = false;
  int quadrature_points = 512;

  /// Raw or normalised (per `normalize`) value at (x, y).
  double operator()(const Eigen::Ref<const Vector>& x, double y) const;
  Matrix on_grid(const Matrix& xq, const Vector& ys) const;
  Vector at_pairs(const Matrix& xq, const Vector& yq) const;
  Quadrature quadrature() const { return Quadrature::over(support, quadrature_points); }
};

// GRS

class GrsDensity final : public ConditionalDensity {
 public:
  GrsDensity(std::shared_ptr<const FitData> data, CoefficientRep rep);
  Matrix on_grid(const Matrix& xq, const Vector& ys) const override;
  Vector at_pairs(const Matrix& xq, const Vector& yq) const override;
  double eval(const Eigen::Ref<const Vector>& x, double y) const { return eval_rep(rep_, *data_, x, y); }
  const CoefficientRep& rep() const { return rep_; }
  const FitData& data() const { return *data_; }

 private:
  std::shared_ptr<const FitData> data_;
  CoefficientRep rep_;
};

FittedCDE grs_fitted(EstimatorKind kind, std::shared_ptr<const FitData> data, CoefficientRep rep,
                     Hyperparameters params);
/// Delegates to eval_rep; throws std::invalid_argument for non-GRS fits.
double grs_eval(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, double y);

// Nadaraya-Watson

class NwDensity final : public ConditionalDensity {
 public:
  NwDensity(const PairedDataset& train, const KernelConfig& cfg);
  Matrix on_grid(const Matrix& xq, const Vector& ys) const override;
  Vector at_pairs(const Matrix& xq, const Vector& yq) const override;
  /// n x m normalised weights; falls back to 1/n for a query whose kernel
  /// sum underflows below 1e-300.
  Matrix weights(const Matrix& xq) const;

 private:
  PairedDataset train_;
  KernelConfig cfg_;
};

FittedCDE nw_fit(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg);
double nw_fit_eval(const PairedDataset& train, const KernelConfig& cfg, const Eigen::Ref<const Vector>& x, double y);

// Kernel mean density: f(x,y) = sum_i w_i(x) k_Y(y, y_i), w(x) = (K_X + n lambda I)^{-1} K_{x,X}.

class KmdDensity : public ConditionalDensity {
 public:
  KmdDensity(const PairedDataset& train, const KernelConfig& cfg, double lambda);
  Matrix on_grid(const Matrix& xq, const Vector& ys) const override;
  Vector at_pairs(const Matrix& xq, const Vector& yq) const override;
  Matrix weights(const Matrix& xq) const;  // n x m

 protected:
  PairedDataset train_;
  KernelConfig cfg_;
  double lambda_;
  Eigen::LLT<Matrix> regularised_;
};

FittedCDE kmd_fit(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg, double lambda1);
double kmd_eval(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, double y);

// Conditional density operator: f(x,y) = sum_j w~_j(x) k_Y(y, u_j),
// w~(x) = (1/n_u^2) (K_U + lambda2 I)^{-2} K_{U,Y} w(x).

class CdoDensity final : public KmdDensity {
 public:
  CdoDensity(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg, double lambda1,
             double lambda2);
  Matrix on_grid(const Matrix& xq, const Vector& ys) const override;
  Vector at_pairs(const Matrix& xq, const Vector& yq) const override;
  Matrix cdo_weights(const Matrix& xq) const;  // n_u x m

 private:
  Vector u_;
  Matrix mix_;  // n_u x n
};

FittedCDE cdo_fit(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg, double lambda1,
                  double lambda2);
double cdo_eval(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, double y);

/// y -> max(f(x,y),0) / integral over the quadrature interval, or the
/// uniform density on that interval when the integral is <= 1e-12.
class NormalizedSlice {
 public:
  NormalizedSlice(std::shared_ptr<const ConditionalDensity> model, Vector x, const Quadrature& quad);
  double operator()(double y) const;
  Vector operator()(const Vector& ys) const;
  bool uniform_fallback() const { return fallback_; }
  double raw_integral() const { return integral_; }

 private:
  std::shared_ptr<const ConditionalDensity> model_;
  Vector x_;
  Quadrature quad_;
  double integral_ = 0.0;
  bool fallback_ = false;
};

NormalizedSlice normalize_slice(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, const Quadrature& quad);

/// Per-row normalising constants from raw values on the quadrature nodes:
/// the trapezoid integral of max(f, 0), or 0 where that is <= 1e-12 and the
/// row falls back to the uniform density.
Vector normalizing_constants(const Matrix& on_nodes, const Quadrature& quad);
/// The normalised value at response y given its raw value and row constant.
double normalized_value(double raw, double constant, double y, const Quadrature& quad);
/// Normalised values for every query row on the grid `ys`.
Matrix normalized_grid(const ConditionalDensity& model, const Matrix& xq, const Vector& ys, const Quadrature& quad);

}  // namespace grscde
