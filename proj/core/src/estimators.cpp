#include "grscde/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grscde {

namespace {

constexpr double kNwUnderflow = 1e-300;
constexpr double kNormalizerFloor = 1e-12;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

Matrix single_row(const Eigen::Ref<const Vector>& x) { return x.transpose(); }

template <typename Density>
const Density& model_as(const FittedCDE& fit, EstimatorKind kind, const char* what) {
  if (fit.kind != kind || !fit.model) throw std::invalid_argument(std::string(what) + ": estimator kind mismatch");
  return static_cast<const Density&>(*fit.model);
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::grs_tikhonov:
      return "grs-tikhonov";
    case EstimatorKind::grs_landweber:
      return "grs-landweber";
    case EstimatorKind::nw:
      return "nw";
    case EstimatorKind::kmd:
      return "kmd";
    case EstimatorKind::cdo:
      return "cdo";
  }
  return "unknown";
}

double ConditionalDensity::operator()(const Eigen::Ref<const Vector>& x, double y) const {
  Vector yq(1);
  yq(0) = y;
  return at_pairs(single_row(x), yq)(0);
}

Vector Quadrature::nodes() const {
  if (points < 2) throw std::invalid_argument("quadrature needs at least 2 points");
  if (!(lo < hi)) throw std::invalid_argument("quadrature interval must satisfy lo < hi");
  return Vector::LinSpaced(points, lo, hi);
}

double Quadrature::integrate(const Eigen::Ref<const Vector>& values) const {
  if (values.size() != points) throw std::invalid_argument("quadrature: value count mismatch");
  const double h = (hi - lo) / static_cast<double>(points - 1);
  return h * (values.sum() - 0.5 * (values(0) + values(points - 1)));
}

double FittedCDE::operator()(const Eigen::Ref<const Vector>& x, double y) const {
  if (!model) throw std::logic_error("fitted estimator has no model");
  if (!normalize) return (*model)(x, y);
  return NormalizedSlice(model, x, quadrature())(y);
}

Matrix FittedCDE::on_grid(const Matrix& xq, const Vector& ys) const {
  if (!model) throw std::logic_error("fitted estimator has no model");
  if (!normalize) return model->on_grid(xq, ys);
  return normalized_grid(*model, xq, ys, quadrature());
}

Vector FittedCDE::at_pairs(const Matrix& xq, const Vector& yq) const {
  if (!model) throw std::logic_error("fitted estimator has no model");
  if (!normalize) return model->at_pairs(xq, yq);
  const Quadrature quad = quadrature();
  const Vector c = normalizing_constants(model->on_grid(xq, quad.nodes()), quad);
  Vector out = model->at_pairs(xq, yq);
  for (Index i = 0; i < out.size(); ++i) out(i) = normalized_value(out(i), c(i), yq(i), quad);
  return out;
}

// GRS

GrsDensity::GrsDensity(std::shared_ptr<const FitData> data, CoefficientRep rep)
    : data_(std::move(data)), rep_(std::move(rep)) {
  if (!data_) throw std::invalid_argument("GRS density: missing fit data");
  if (rep_.a.rows() != data_->n() || rep_.a.cols() != data_->n_u()) {
    throw std::invalid_argument("GRS density: coefficient matrix does not match the fit data");
  }
}

Matrix GrsDensity::on_grid(const Matrix& xq, const Vector& ys) const {
  return RepEvaluator(data_, xq, ys).grid(rep_);
}

Vector GrsDensity::at_pairs(const Matrix& xq, const Vector& yq) const {
  Vector out(yq.size());
  for (Index i = 0; i < yq.size(); ++i) out(i) = eval_rep(rep_, *data_, xq.row(i).transpose(), yq(i));
  return out;
}

FittedCDE grs_fitted(EstimatorKind kind, std::shared_ptr<const FitData> data, CoefficientRep rep,
                     Hyperparameters params) {
  if (kind != EstimatorKind::grs_landweber && kind != EstimatorKind::grs_tikhonov) {
    throw std::invalid_argument("grs_fitted: not a GRS kind");
  }
  FittedCDE fit;
  fit.kind = kind;
  fit.params = std::move(params);
  fit.support = data->aux;
  fit.model = std::make_shared<const GrsDensity>(std::move(data), std::move(rep));
  return fit;
}

double grs_eval(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, double y) {
  if (fit.kind != EstimatorKind::grs_landweber && fit.kind != EstimatorKind::grs_tikhonov) {
    throw std::invalid_argument("grs_eval: estimator kind mismatch");
  }
  return static_cast<const GrsDensity&>(*fit.model).eval(x, y);
}

// Nadaraya-Watson

NwDensity::NwDensity(const PairedDataset& train, const KernelConfig& cfg) : train_(train), cfg_(cfg) {
  train_.validate();
  cfg_.validate();
  if (train_.empty()) throw std::invalid_argument("NW: empty training sample");
  if (train_.dim() != cfg_.dim()) throw std::invalid_argument("NW: h_x dimension does not match covariates");
}

Matrix NwDensity::weights(const Matrix& xq) const {
  Matrix w = kx_cross(train_.x, xq, cfg_.hx);  // n x m
  const double n = static_cast<double>(train_.size());
  for (Index j = 0; j < w.cols(); ++j) {
    const double s = w.col(j).sum();
    if (s < kNwUnderflow) {
      w.col(j).setConstant(1.0 / n);
    } else {
      w.col(j) /= s;
    }
  }
  return w;
}

Matrix NwDensity::on_grid(const Matrix& xq, const Vector& ys) const {
  return weights(xq).transpose() * ky_cross(train_.y, ys, cfg_.hy);
}

Vector NwDensity::at_pairs(const Matrix& xq, const Vector& yq) const {
  if (xq.rows() != yq.size()) throw std::invalid_argument("NW: pair count mismatch");
  const Matrix w = weights(xq);
  return w.cwiseProduct(ky_cross(train_.y, yq, cfg_.hy)).colwise().sum().transpose();
}

FittedCDE nw_fit(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg) {
  FittedCDE fit;
  fit.kind = EstimatorKind::nw;
  fit.params.kernel = cfg;
  fit.support = aux;
  fit.model = std::make_shared<const NwDensity>(train, cfg);
  return fit;
}

double nw_fit_eval(const PairedDataset& train, const KernelConfig& cfg, const Eigen::Ref<const Vector>& x, double y) {
  return NwDensity(train, cfg)(x, y);
}

// KMD

KmdDensity::KmdDensity(const PairedDataset& train, const KernelConfig& cfg, double lambda)
    : train_(train), cfg_(cfg), lambda_(lambda) {
  require_positive(lambda, "KMD lambda");
  train_.validate();
  cfg_.validate();
  if (train_.empty()) throw std::invalid_argument("KMD: empty training sample");
  const double n = static_cast<double>(train_.size());
  Matrix reg = kx_gram(train_.x, cfg_.hx);
  reg.diagonal().array() += n * lambda;
  regularised_.compute(reg);
  if (regularised_.info() != Eigen::Success) throw std::runtime_error("KMD: Cholesky factorisation failed");
}

Matrix KmdDensity::weights(const Matrix& xq) const {
  return regularised_.solve(kx_cross(train_.x, xq, cfg_.hx));
}

Matrix KmdDensity::on_grid(const Matrix& xq, const Vector& ys) const {
  return weights(xq).transpose() * ky_cross(train_.y, ys, cfg_.hy);
}

Vector KmdDensity::at_pairs(const Matrix& xq, const Vector& yq) const {
  if (xq.rows() != yq.size()) throw std::invalid_argument("KMD: pair count mismatch");
  return weights(xq).cwiseProduct(ky_cross(train_.y, yq, cfg_.hy)).colwise().sum().transpose();
}

FittedCDE kmd_fit(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg, double lambda1) {
  FittedCDE fit;
  fit.kind = EstimatorKind::kmd;
  fit.params.kernel = cfg;
  fit.params.lambda = lambda1;
  fit.support = aux;
  fit.model = std::make_shared<const KmdDensity>(train, cfg, lambda1);
  return fit;
}

double kmd_eval(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, double y) {
  return model_as<KmdDensity>(fit, EstimatorKind::kmd, "kmd_eval")(x, y);
}

// CDO

CdoDensity::CdoDensity(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg,
                       double lambda1, double lambda2)
    : KmdDensity(train, cfg, lambda1), u_(aux.u) {
  require_positive(lambda2, "CDO lambda2");
  if (aux.size() == 0) throw std::invalid_argument("CDO: empty auxiliary sample");
  const double nu = static_cast<double>(aux.size());
  Matrix reg = ky_cross(u_, u_, cfg.hy);
  reg.diagonal().array() += lambda2;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) throw std::runtime_error("CDO: Cholesky factorisation failed");
  const Matrix once = llt.solve(ky_cross(u_, train.y, cfg.hy));
  mix_ = llt.solve(once) / (nu * nu);
}

Matrix CdoDensity::cdo_weights(const Matrix& xq) const { return mix_ * weights(xq); }

Matrix CdoDensity::on_grid(const Matrix& xq, const Vector& ys) const {
  return cdo_weights(xq).transpose() * ky_cross(u_, ys, cfg_.hy);
}

Vector CdoDensity::at_pairs(const Matrix& xq, const Vector& yq) const {
  if (xq.rows() != yq.size()) throw std::invalid_argument("CDO: pair count mismatch");
  return cdo_weights(xq).cwiseProduct(ky_cross(u_, yq, cfg_.hy)).colwise().sum().transpose();
}

FittedCDE cdo_fit(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg, double lambda1,
                  double lambda2) {
  FittedCDE fit;
  fit.kind = EstimatorKind::cdo;
  fit.params.kernel = cfg;
  fit.params.lambda = lambda1;
  fit.params.lambda2 = lambda2;
  fit.support = aux;
  fit.model = std::make_shared<const CdoDensity>(train, aux, cfg, lambda1, lambda2);
  return fit;
}

double cdo_eval(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, double y) {
  return model_as<CdoDensity>(fit, EstimatorKind::cdo, "cdo_eval")(x, y);
}

// Normalisation

NormalizedSlice::NormalizedSlice(std::shared_ptr<const ConditionalDensity> model, Vector x, const Quadrature& quad)
    : model_(std::move(model)), x_(std::move(x)), quad_(quad) {
  if (!model_) throw std::invalid_argument("normalize_slice: missing model");
  const Vector nodes = quad_.nodes();
  const Vector raw = model_->on_grid(single_row(x_), nodes).row(0).transpose();
  integral_ = quad_.integrate(raw.cwiseMax(0.0));
  fallback_ = !(integral_ > kNormalizerFloor);
}

double NormalizedSlice::operator()(double y) const {
  const double raw = fallback_ ? 0.0 : (*model_)(x_, y);
  return normalized_value(raw, fallback_ ? 0.0 : integral_, y, quad_);
}

Vector NormalizedSlice::operator()(const Vector& ys) const {
  const Vector raw = fallback_ ? Vector::Zero(ys.size()) : Vector(model_->on_grid(single_row(x_), ys).row(0).transpose());
  Vector out(ys.size());
  for (Index j = 0; j < ys.size(); ++j) out(j) = normalized_value(raw(j), fallback_ ? 0.0 : integral_, ys(j), quad_);
  return out;
}

NormalizedSlice normalize_slice(const FittedCDE& fit, const Eigen::Ref<const Vector>& x, const Quadrature& quad) {
  return NormalizedSlice(fit.model, x, quad);
}

Vector normalizing_constants(const Matrix& on_nodes, const Quadrature& quad) {
  Vector c(on_nodes.rows());
  for (Index i = 0; i < on_nodes.rows(); ++i) {
    const double integral = quad.integrate(on_nodes.row(i).transpose().cwiseMax(0.0));
    c(i) = integral > kNormalizerFloor ? integral : 0.0;
  }
  return c;
}

double normalized_value(double raw, double constant, double y, const Quadrature& quad) {
  if (y < quad.lo || y > quad.hi) return 0.0;
  if (constant == 0.0) return 1.0 / (quad.hi - quad.lo);
  return std::max(raw, 0.0) / constant;
}

Matrix normalized_grid(const ConditionalDensity& model, const Matrix& xq, const Vector& ys, const Quadrature& quad) {
  const Vector c = normalizing_constants(model.on_grid(xq, quad.nodes()), quad);
  Matrix out = model.on_grid(xq, ys);
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = normalized_value(out(i, j), c(i), ys(j), quad);
  }
  return out;
}

}  // namespace grscde
