#include "grscde/operators.hpp"

#include <stdexcept>
#include <string>

namespace grscde {

namespace {

void require_coefficients(const CoefficientRep& rep, Index n, Index n_u) {
  if (rep.a.rows() != n || rep.a.cols() != n_u) {
    throw std::invalid_argument("coefficient matrix is " + std::to_string(rep.a.rows()) + "x" +
                                std::to_string(rep.a.cols()) + ", expected " + std::to_string(n) + "x" +
                                std::to_string(n_u));
  }
}

}  // namespace

InitialFunction InitialFunction::custom(Rule rule) {
  if (!rule) throw std::invalid_argument("custom initial function needs an evaluation rule");
  return InitialFunction(Kind::custom, std::move(rule));
}

double InitialFunction::operator()(const Eigen::Ref<const Vector>& x, double y, const AuxiliaryGrid& aux) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::uniform:
      return aux.density(y);
    case Kind::custom:
      return rule_(x, y);
  }
  return 0.0;
}

Matrix InitialFunction::on_grid(const Matrix& xs, const Vector& ys, const AuxiliaryGrid& aux) const {
  Matrix out(xs.rows(), ys.size());
  switch (kind_) {
    case Kind::zero:
      out.setZero();
      break;
    case Kind::uniform:
      out.rowwise() = aux.density(ys).transpose();
      break;
    case Kind::custom:
      for (Index i = 0; i < xs.rows(); ++i) {
        const Vector xi = xs.row(i).transpose();
        for (Index j = 0; j < ys.size(); ++j) out(i, j) = rule_(xi, ys(j));
      }
      break;
  }
  return out;
}

Vector InitialFunction::at_pairs(const Matrix& xs, const Vector& ys, const AuxiliaryGrid& aux) const {
  if (xs.rows() != ys.size()) throw std::invalid_argument("initial function: pair count mismatch");
  Vector out(ys.size());
  for (Index i = 0; i < ys.size(); ++i) {
    const Vector xi = xs.row(i).transpose();
    out(i) = (*this)(xi, ys(i), aux);
  }
  return out;
}

FitData FitData::make(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg) {
  train.validate();
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("fit data: empty training sample");
  if (aux.size() == 0) throw std::invalid_argument("fit data: empty auxiliary sample");
  if (train.dim() != cfg.dim()) throw std::invalid_argument("fit data: h_x dimension does not match covariates");
  FitData d;
  d.xs = train.x;
  d.ys = train.y;
  d.aux = aux;
  d.cfg = cfg;
  d.qy = aux.density(train.y);
  return d;
}

NodeProblem NodeProblem::build(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg) {
  auto data = std::make_shared<const FitData>(FitData::make(train, aux, cfg));
  GramFactors gram = build_gram(train, aux, cfg);
  return from_gram(std::move(data), std::move(gram));
}

NodeProblem NodeProblem::from_gram(std::shared_ptr<const FitData> data, GramFactors gram) {
  if (!data) throw std::invalid_argument("node problem: missing fit data");
  if (gram.n() != data->n() || gram.n_u() != data->n_u() || gram.kuy.rows() != data->n_u() ||
      gram.kuy.cols() != data->n()) {
    throw std::invalid_argument("node problem: Gram blocks do not match the fit data");
  }
  NodeProblem p;
  p.bhat = bhat_matrix(gram, data->aux, data->ys);
  p.f0_uniform = InitialFunction::uniform().on_grid(data->xs, data->aux.u, data->aux);
  p.gram = std::move(gram);
  p.data = std::move(data);
  return p;
}

Matrix NodeProblem::initial_nodes(const InitialFunction& f0) const {
  switch (f0.kind()) {
    case InitialFunction::Kind::zero:
      return Matrix::Zero(n(), n_u());
    case InitialFunction::Kind::uniform:
      return f0_uniform;
    case InitialFunction::Kind::custom:
      break;
  }
  return f0.on_grid(data->xs, data->aux.u, data->aux);
}

Matrix bhat_matrix(const GramFactors& gram, const AuxiliaryGrid& aux, const Vector& ys) {
  const Index n = gram.n();
  if (ys.size() != n || gram.kuy.cols() != n || gram.kuy.rows() != gram.n_u()) {
    throw std::invalid_argument("bhat_matrix: dimension mismatch");
  }
  const Vector q = aux.density(ys);
  return (gram.kx * q.asDiagonal()) * gram.kuy.transpose() / static_cast<double>(n);
}

double eval_rep(const CoefficientRep& rep, const FitData& data, const Eigen::Ref<const Vector>& x, double y) {
  require_coefficients(rep, data.n(), data.n_u());
  if (x.size() != data.xs.cols()) throw std::invalid_argument("eval_rep: query dimension mismatch");
  double value = rep.f0(x, y, data.aux);
  const Vector& hx = data.cfg.hx;
  const double hy = data.cfg.hy;
  for (Index p = 0; p < data.n(); ++p) {
    const double kxp = gaussian_kx(x, data.xs.row(p).transpose(), hx);
    double inner = 0.0;
    for (Index q = 0; q < data.n_u(); ++q) inner += rep.a(p, q) * gaussian_ky(y, data.aux.u(q), hy);
    value += kxp * inner;
    if (rep.beta != 0.0) value += rep.beta * kxp * gaussian_ky(y, data.ys(p), hy) * data.qy(p);
  }
  return value;
}

Matrix eval_at_nodes(const CoefficientRep& rep, const NodeProblem& problem) {
  require_coefficients(rep, problem.n(), problem.n_u());
  Matrix f = problem.initial_nodes(rep.f0);
  f.noalias() += problem.gram.kx * rep.a * problem.gram.ku;
  if (rep.beta != 0.0) f += (rep.beta * static_cast<double>(problem.n())) * problem.bhat;
  return f;
}

Matrix apply_lhat(const Matrix& f, const GramFactors& gram) {
  if (f.rows() != gram.n() || f.cols() != gram.n_u()) throw std::invalid_argument("apply_lhat: dimension mismatch");
  const double nz = static_cast<double>(f.size());
  Matrix out = gram.kx * f * gram.ku;
  out /= nz;
  return out;
}

double znorm_sq(const Matrix& f) {
  if (f.size() == 0) throw std::invalid_argument("znorm_sq: empty node matrix");
  return f.squaredNorm() / static_cast<double>(f.size());
}

double inner_emp(const Matrix& f, const Matrix& g) {
  if (f.rows() != g.rows() || f.cols() != g.cols() || f.size() == 0) {
    throw std::invalid_argument("inner_emp: dimension mismatch");
  }
  return f.cwiseProduct(g).sum() / static_cast<double>(f.size());
}

double dhat_from_values(const Matrix& node_values, const Vector& pair_values, const Vector& pair_q) {
  if (pair_values.size() == 0 || node_values.size() == 0) throw std::invalid_argument("D-hat: empty evaluation set");
  if (pair_values.size() != pair_q.size()) throw std::invalid_argument("D-hat: pair count mismatch");
  const double first = node_values.squaredNorm() / static_cast<double>(node_values.size());
  const double second = 2.0 * pair_values.dot(pair_q) / static_cast<double>(pair_values.size());
  return first - second;
}

double dhat(const CoefficientRep& rep, const FitData& data, const PairedDataset& eval) {
  eval.validate();
  if (eval.empty()) throw std::invalid_argument("D-hat: empty evaluation set");
  RepEvaluator ev(std::make_shared<const FitData>(data), eval.x, data.aux.u, eval.y);
  Matrix nodes;
  Vector pairs;
  ev.evaluate(rep, &nodes, &pairs);
  return dhat_from_values(nodes, pairs, ev.pair_q());
}

double hnorm_sq(const Matrix& c, const Vector& d, const GramFactors& gram) {
  if (c.rows() != gram.n() || c.cols() != gram.n_u() || d.size() != gram.n()) {
    throw std::invalid_argument("hnorm_sq: dimension mismatch");
  }
  const double node_part = c.cwiseProduct(gram.kx * c * gram.ku).sum();
  const Matrix ckuy = c * gram.kuy;  // n x n
  const double cross = (gram.kx.cwiseProduct(ckuy)).colwise().sum().dot(d);
  const double data_part = d.dot(gram.kx.cwiseProduct(gram.kyy) * d);
  return node_part + 2.0 * cross + data_part;
}

double residual_hnorm_sq(const Matrix& f, const GramFactors& gram, const AuxiliaryGrid& aux, const Vector& ys) {
  if (f.rows() != gram.n() || f.cols() != gram.n_u() || ys.size() != gram.n()) {
    throw std::invalid_argument("residual_hnorm_sq: dimension mismatch");
  }
  const Matrix c = f / static_cast<double>(f.size());
  const Vector d = -aux.density(ys) / static_cast<double>(gram.n());
  return hnorm_sq(c, d, gram);
}

RepEvaluator::RepEvaluator(std::shared_ptr<const FitData> data, const Matrix& xq, const Vector& grid_ys,
                           const Vector& pair_ys)
    : data_(std::move(data)), xq_(xq), grid_ys_(grid_ys), pair_ys_(pair_ys) {
  if (!data_) throw std::invalid_argument("RepEvaluator: missing fit data");
  const FitData& d = *data_;
  kxq_ = kx_cross(xq, d.xs, d.cfg.hx);
  k_u_grid_ = ky_cross(d.aux.u, grid_ys, d.cfg.hy);
  data_grid_ = (kxq_ * d.qy.asDiagonal()) * ky_cross(d.ys, grid_ys, d.cfg.hy);
  f0_uniform_grid_ = InitialFunction::uniform().on_grid(xq, grid_ys, d.aux);
  has_pairs_ = pair_ys.size() > 0;
  if (has_pairs_) {
    if (pair_ys.size() != xq.rows()) throw std::invalid_argument("RepEvaluator: pair count mismatch");
    k_pair_u_ = ky_cross(pair_ys, d.aux.u, d.cfg.hy);
    data_pair_ = kxq_.cwiseProduct(ky_cross(pair_ys, d.ys, d.cfg.hy)) * d.qy;
    pair_q_ = d.aux.density(pair_ys);
    f0_uniform_pairs_ = pair_q_;
  }
}

void RepEvaluator::evaluate(const CoefficientRep& rep, Matrix* grid_out, Vector* pairs_out) const {
  require_coefficients(rep, data_->n(), data_->n_u());
  const Matrix ka = kxq_ * rep.a;  // m x n_u
  if (grid_out != nullptr) {
    Matrix& g = *grid_out;
    switch (rep.f0.kind()) {
      case InitialFunction::Kind::zero:
        g.setZero(kxq_.rows(), grid_ys_.size());
        break;
      case InitialFunction::Kind::uniform:
        g = f0_uniform_grid_;
        break;
      case InitialFunction::Kind::custom:
        g = rep.f0.on_grid(xq_, grid_ys_, data_->aux);
        break;
    }
    g.noalias() += ka * k_u_grid_;
    if (rep.beta != 0.0) g += rep.beta * data_grid_;
  }
  if (pairs_out != nullptr) {
    if (!has_pairs_) throw std::logic_error("RepEvaluator: no paired responses were supplied");
    Vector& v = *pairs_out;
    switch (rep.f0.kind()) {
      case InitialFunction::Kind::zero:
        v.setZero(kxq_.rows());
        break;
      case InitialFunction::Kind::uniform:
        v = f0_uniform_pairs_;
        break;
      case InitialFunction::Kind::custom:
        v = rep.f0.at_pairs(xq_, pair_ys_, data_->aux);
        break;
    }
    v += ka.cwiseProduct(k_pair_u_).rowwise().sum();
    if (rep.beta != 0.0) v += rep.beta * data_pair_;
  }
}

Matrix RepEvaluator::grid(const CoefficientRep& rep) const {
  Matrix g;
  evaluate(rep, &g, nullptr);
  return g;
}

Vector RepEvaluator::pairs(const CoefficientRep& rep) const {
  Vector v;
  evaluate(rep, nullptr, &v);
  return v;
}

}  // namespace grscde
