#pragma once

#include "grscde/operators.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace grscde {

/// Eigendecomposition Q diag(values) Q^T of a symmetric matrix.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;

  /// Throws std::runtime_error on non-finite input or solver failure.
  static SymmetricEigen of(const Matrix& m);
};

/// Tikhonov fit f = (L-hat + lambda)^{-1} b-hat, the minimiser of
/// D-hat(f) + lambda ||f||_H^2, solved on the Kronecker structure
/// K = K_X (x) K_U through the eigendecompositions of the two factors:
///   A = -(1/lambda) Q_X [ (Q_X^T B Q_U)(p,q) / (l_X(p) l_U(q) + n_z lambda) ] Q_U^T,
///   beta = 1 / (n lambda), f_0 = 0.
CoefficientRep tikhonov_fit(const NodeProblem& problem, const SymmetricEigen& eig_x, const SymmetricEigen& eig_u,
                            double lambda);
CoefficientRep tikhonov_fit(const NodeProblem& problem, double lambda);

struct StepPolicy {
  enum class Kind { fixed, line_search };

  Kind kind = Kind::fixed;
  std::optional<double> cap;        // upper bound on any step, unset by default
  bool record_diagnostics = false;  // residual H-norm and training D-hat after each step

  /// delta_t = 1 / kappa^2.
  static StepPolicy fixed_inverse_kappa() { return {Kind::fixed, std::nullopt, false}; }
  /// delta_t = empirical exact line search step delta^(2).
  static StepPolicy line_search() { return {Kind::line_search, std::nullopt, false}; }
};

struct StepDiagnostics {
  double step = 0.0;
  double residual_hnorm_sq = 0.0;  // of the iterate after the step
  double dhat = 0.0;               // training D-hat after the step
};

/// Gradient descent on the training D-hat, f <- f - delta (2 L-hat f - 2 b-hat).
struct LandweberState {
  CoefficientRep rep;
  int t = 0;
  std::vector<double> steps;
  Matrix f;  // node values of the current iterate
  std::vector<StepDiagnostics> diagnostics;
};

LandweberState landweber_init(const InitialFunction& f0, const NodeProblem& problem);

/// One descent step with an explicit step size (>= 0, finite).
LandweberState landweber_advance(LandweberState state, const NodeProblem& problem, double step,
                                 bool record_diagnostics = false);

/// One descent step with the policy's step size. Returns nullopt when the
/// line-search denominator vanishes, i.e. the residual is numerically in the
/// null space of the node operator.
std::optional<LandweberState> landweber_step(LandweberState state, const NodeProblem& problem,
                                             const StepPolicy& policy);

/// delta^(2) = ||R||_Z^2 / (2 <L-hat R, R>_Z) with R = L-hat f - b-hat at the nodes.
std::optional<double> step_delta2(const LandweberState& state, const NodeProblem& problem);

/// delta^(1) = ||L-hat f - b-hat||_H^2 / (2 ||R||_Z^2). Diagnostic only.
std::optional<double> step_delta1(const LandweberState& state, const NodeProblem& problem);

/// Snapshots of the representation after each of at most T steps.
std::vector<CoefficientRep> landweber_path(const InitialFunction& f0, const NodeProblem& problem,
                                           const StepPolicy& policy, int max_steps);

/// Streams the path instead of storing it; `visit(state)` runs after each
/// step. Returns the number of steps taken.
int landweber_visit(const InitialFunction& f0, const NodeProblem& problem, const StepPolicy& policy, int max_steps,
                    const std::function<void(const LandweberState&)>& visit);

/// f(x_l, y_l) at the training pairs for a representation fitted on `problem`.
Vector training_pair_values(const CoefficientRep& rep, const NodeProblem& problem);

/// D-hat on the training sample given the node values of the same function.
double training_dhat(const CoefficientRep& rep, const Matrix& node_values, const NodeProblem& problem);

}  // namespace grscde
