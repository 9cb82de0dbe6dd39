#pragma once

// Empirical operator algebra on the node grid z_i = (x_p, u_q), with the
// flattened index i = p * n_u + q (zero-based). Node-valued functions are
// stored as n x n_u matrices F(p, q) = f(x_p, u_q).

#include "grscde/kernels.hpp"
#include "grscde/types.hpp"

#include <functional>
#include <memory>

namespace grscde {

constexpr Index node_index(Index p, Index q, Index n_u) { return p * n_u + q; }

struct NodePosition {
  Index p;
  Index q;
};

constexpr NodePosition node_position(Index i, Index n_u) { return {i / n_u, i % n_u}; }

/// The starting function f_0 of a representer-form fit.
class InitialFunction {
 public:
  enum class Kind { zero, uniform, custom };
  using Rule = std::function<double(const Eigen::Ref<const Vector>& x, double y)>;

  static InitialFunction zero() { return InitialFunction(Kind::zero, {}); }
  /// f_0(x, y) = q_U(y).
  static InitialFunction uniform() { return InitialFunction(Kind::uniform, {}); }
  static InitialFunction custom(Rule rule);

  Kind kind() const { return kind_; }
  double operator()(const Eigen::Ref<const Vector>& x, double y, const AuxiliaryGrid& aux) const;
  /// Values at every (xs row, ys entry) pair.
  Matrix on_grid(const Matrix& xs, const Vector& ys, const AuxiliaryGrid& aux) const;
  /// Values at the pairs (xs row l, ys(l)).
  Vector at_pairs(const Matrix& xs, const Vector& ys, const AuxiliaryGrid& aux) const;

 private:
  InitialFunction(Kind kind, Rule rule) : kind_(kind), rule_(std::move(rule)) {}
  Kind kind_;
  Rule rule_;
};

/// f = f_0 + sum_{p,q} a(p,q) k(., (x_p, u_q)) + beta * sum_l q_U(y_l) k(., (x_l, y_l)).
/// The last sum equals n * b-hat.
struct CoefficientRep {
  InitialFunction f0 = InitialFunction::zero();
  Matrix a;
  double beta = 0.0;
};

/// Everything a representer-form function needs to be evaluated away from
/// the nodes.
struct FitData {
  Matrix xs;  // n x d
  Vector ys;  // n
  AuxiliaryGrid aux;
  KernelConfig cfg;
  Vector qy;  // q_U(y_l)

  static FitData make(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg);
  Index n() const { return ys.size(); }
  Index n_u() const { return aux.size(); }
};

/// The empirical inverse problem L-hat f = b-hat on the node grid.
struct NodeProblem {
  std::shared_ptr<const FitData> data;
  GramFactors gram;
  Matrix bhat;  // n x n_u
  Matrix f0_uniform;  // q_U at the nodes, used by uniform initialisation

  static NodeProblem build(const PairedDataset& train, const AuxiliaryGrid& aux, const KernelConfig& cfg);
  static NodeProblem from_gram(std::shared_ptr<const FitData> data, GramFactors gram);

  Index n() const { return gram.n(); }
  Index n_u() const { return gram.n_u(); }
  Index n_z() const { return n() * n_u(); }
  Matrix initial_nodes(const InitialFunction& f0) const;
};

/// b-hat(x_p, u_q) = (1/n) sum_l K_X(p,l) K_UY(q,l) q_U(y_l).
Matrix bhat_matrix(const GramFactors& gram, const AuxiliaryGrid& aux, const Vector& ys);

/// Pointwise representer evaluation by direct summation.
double eval_rep(const CoefficientRep& rep, const FitData& data, const Eigen::Ref<const Vector>& x, double y);

/// F = F_0 + K_X A K_U + beta n B-hat.
Matrix eval_at_nodes(const CoefficientRep& rep, const NodeProblem& problem);

/// Node values of L-hat f: (1/n_z) K_X F K_U.
Matrix apply_lhat(const Matrix& f, const GramFactors& gram);

/// Empirical squared Z-norm (1/n_z) sum F(p,q)^2.
double znorm_sq(const Matrix& f);
/// Empirical Z inner product (1/n_z) sum F(p,q) G(p,q).
double inner_emp(const Matrix& f, const Matrix& g);

/// D-hat from precomputed values: mean of node values squared minus
/// (2/m) sum_l f(v_l) q_U(y_l).
double dhat_from_values(const Matrix& node_values, const Vector& pair_values, const Vector& pair_q);

/// D-hat of a representer-form fit on an evaluation sample, with nodes
/// built from the evaluation covariates crossed with aux.u.
double dhat(const CoefficientRep& rep, const FitData& data, const PairedDataset& eval);

/// RKHS squared norm of sum_{p,q} c(p,q) k(., (x_p,u_q)) + sum_l d_l k(., (x_l,y_l)).
double hnorm_sq(const Matrix& c, const Vector& d, const GramFactors& gram);

/// ||L-hat f - b-hat||_H^2 given the node values F of f.
double residual_hnorm_sq(const Matrix& f, const GramFactors& gram, const AuxiliaryGrid& aux, const Vector& ys);

/// Batched evaluation of representer-form functions on a fixed set of
/// query covariates. `grid_ys` gives the y-values of the grid output and
/// `pair_ys` (optional, same length as the query rows) the paired responses.
class RepEvaluator {
 public:
  RepEvaluator(std::shared_ptr<const FitData> data, const Matrix& xq, const Vector& grid_ys,
               const Vector& pair_ys = Vector());

  Index queries() const { return kxq_.rows(); }
  bool has_pairs() const { return has_pairs_; }

  /// m x |grid_ys| matrix of f(xq_i, grid_ys_j).
  Matrix grid(const CoefficientRep& rep) const;
  /// f(xq_l, pair_ys_l).
  Vector pairs(const CoefficientRep& rep) const;
  /// Both in one pass over K_X,q A.
  void evaluate(const CoefficientRep& rep, Matrix* grid_out, Vector* pairs_out) const;

  const Vector& pair_q() const { return pair_q_; }

 private:
  std::shared_ptr<const FitData> data_;
  Matrix xq_;
  Vector grid_ys_;
  Vector pair_ys_;
  bool has_pairs_ = false;
  Matrix kxq_;         // m x n
  Matrix k_u_grid_;    // n_u x S
  Matrix data_grid_;   // m x S, n b-hat at the grid
  Matrix k_pair_u_;    // m x n_u
  Vector data_pair_;   // m, n b-hat at the pairs
  Vector pair_q_;      // q_U(pair_ys)
  Matrix f0_uniform_grid_;
  Vector f0_uniform_pairs_;
};

}  // namespace grscde
