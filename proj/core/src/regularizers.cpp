#include "grscde/regularizers.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace grscde {

namespace {

// Line-search denominators below this fraction of ||R||_Z^2 stop the path.
constexpr double kConvergedRatio = 1e-14;

Matrix residual_nodes(const LandweberState& state, const NodeProblem& problem) {
  return apply_lhat(state.f, problem.gram) - problem.bhat;
}

std::optional<double> delta2_from_residual(const Matrix& r, const NodeProblem& problem) {
  const double num = znorm_sq(r);
  const double den = 2.0 * inner_emp(apply_lhat(r, problem.gram), r);
  if (!(num > 0.0) || !(den > kConvergedRatio * num)) return std::nullopt;
  return num / den;
}

LandweberState advance_with_residual(LandweberState state, const NodeProblem& problem, double step,
                                     const Matrix& r, bool record) {
  if (!(step >= 0.0) || !std::isfinite(step)) {
    throw std::invalid_argument("Landweber step must be finite and nonnegative");
  }
  const double n = static_cast<double>(problem.n());
  const double nz = static_cast<double>(problem.n_z());
  state.rep.a -= (2.0 * step / nz) * state.f;
  state.rep.beta += 2.0 * step / n;
  state.f -= (2.0 * step) * r;
  state.steps.push_back(step);
  ++state.t;
  if (record) {
    StepDiagnostics diag;
    diag.step = step;
    diag.residual_hnorm_sq =
        residual_hnorm_sq(state.f, problem.gram, problem.data->aux, problem.data->ys);
    diag.dhat = training_dhat(state.rep, state.f, problem);
    state.diagnostics.push_back(diag);
  }
  return state;
}

}  // namespace

SymmetricEigen SymmetricEigen::of(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigendecomposition needs a square matrix");
  if (!m.allFinite()) throw std::runtime_error("eigendecomposition of a matrix with non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

CoefficientRep tikhonov_fit(const NodeProblem& problem, const SymmetricEigen& eig_x, const SymmetricEigen& eig_u,
                            double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("Tikhonov lambda must be positive");
  if (eig_x.values.size() != problem.n() || eig_u.values.size() != problem.n_u()) {
    throw std::invalid_argument("tikhonov_fit: eigendecompositions do not match the problem");
  }
  const double nz = static_cast<double>(problem.n_z());
  Matrix bt = eig_x.vectors.transpose() * problem.bhat * eig_u.vectors;
  for (Index q = 0; q < bt.cols(); ++q) {
    for (Index p = 0; p < bt.rows(); ++p) {
      bt(p, q) /= -lambda * (eig_x.values(p) * eig_u.values(q) + nz * lambda);
    }
  }
  CoefficientRep rep;
  rep.f0 = InitialFunction::zero();
  rep.a = eig_x.vectors * bt * eig_u.vectors.transpose();
  rep.beta = 1.0 / (static_cast<double>(problem.n()) * lambda);
  return rep;
}

CoefficientRep tikhonov_fit(const NodeProblem& problem, double lambda) {
  return tikhonov_fit(problem, SymmetricEigen::of(problem.gram.kx), SymmetricEigen::of(problem.gram.ku), lambda);
}

LandweberState landweber_init(const InitialFunction& f0, const NodeProblem& problem) {
  LandweberState s;
  s.rep.f0 = f0;
  s.rep.a = Matrix::Zero(problem.n(), problem.n_u());
  s.rep.beta = 0.0;
  s.t = 0;
  s.f = problem.initial_nodes(f0);
  return s;
}

LandweberState landweber_advance(LandweberState state, const NodeProblem& problem, double step,
                                 bool record_diagnostics) {
  const Matrix r = residual_nodes(state, problem);
  return advance_with_residual(std::move(state), problem, step, r, record_diagnostics);
}

std::optional<LandweberState> landweber_step(LandweberState state, const NodeProblem& problem,
                                             const StepPolicy& policy) {
  if (!state.f.allFinite()) throw std::invalid_argument("Landweber state has non-finite node values");
  const Matrix r = residual_nodes(state, problem);
  double step = 0.0;
  if (policy.kind == StepPolicy::Kind::fixed) {
    step = 1.0 / kappa_sq(problem.data->cfg);
  } else {
    const auto d2 = delta2_from_residual(r, problem);
    if (!d2) return std::nullopt;
    step = *d2;
  }
  if (policy.cap) step = std::min(step, *policy.cap);
  return advance_with_residual(std::move(state), problem, step, r, policy.record_diagnostics);
}

std::optional<double> step_delta2(const LandweberState& state, const NodeProblem& problem) {
  return delta2_from_residual(residual_nodes(state, problem), problem);
}

std::optional<double> step_delta1(const LandweberState& state, const NodeProblem& problem) {
  const Matrix r = residual_nodes(state, problem);
  const double den = 2.0 * znorm_sq(r);
  if (!(den > 0.0)) return std::nullopt;
  return residual_hnorm_sq(state.f, problem.gram, problem.data->aux, problem.data->ys) / den;
}

int landweber_visit(const InitialFunction& f0, const NodeProblem& problem, const StepPolicy& policy, int max_steps,
                    const std::function<void(const LandweberState&)>& visit) {
  if (max_steps < 1) throw std::invalid_argument("Landweber path needs at least one iteration");
  LandweberState state = landweber_init(f0, problem);
  for (int t = 0; t < max_steps; ++t) {
    auto next = landweber_step(std::move(state), problem, policy);
    if (!next) break;
    state = std::move(*next);
    visit(state);
  }
  return state.t;
}

std::vector<CoefficientRep> landweber_path(const InitialFunction& f0, const NodeProblem& problem,
                                           const StepPolicy& policy, int max_steps) {
  std::vector<CoefficientRep> path;
  landweber_visit(f0, problem, policy, max_steps, [&](const LandweberState& s) { path.push_back(s.rep); });
  return path;
}

Vector training_pair_values(const CoefficientRep& rep, const NodeProblem& problem) {
  const FitData& d = *problem.data;
  Vector v = rep.f0.at_pairs(d.xs, d.ys, d.aux);
  v += (problem.gram.kx * rep.a).cwiseProduct(problem.gram.kuy.transpose()).rowwise().sum();
  if (rep.beta != 0.0) v += rep.beta * (problem.gram.kx.cwiseProduct(problem.gram.kyy) * d.qy);
  return v;
}

double training_dhat(const CoefficientRep& rep, const Matrix& node_values, const NodeProblem& problem) {
  return dhat_from_values(node_values, training_pair_values(rep, problem), problem.data->qy);
}

}  // namespace grscde
