#pragma once

#include <Eigen/Dense>

#include <span>

namespace grscde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// An i.i.d. sample of (X, Y) pairs. Row i of `x` is the covariate paired
/// with response `y(i)`.
struct PairedDataset {
  Matrix x;  // n x d
  Vector y;  // n

  Index size() const { return y.size(); }
  Index dim() const { return x.cols(); }
  bool empty() const { return y.size() == 0; }

  /// Rows in the given order. Throws std::out_of_range on a bad index.
  PairedDataset subset(std::span<const Index> rows) const;

  /// Throws std::invalid_argument if x and y disagree on the sample size.
  void validate() const;
};

/// The auxiliary sample u_1..u_{n_u}, drawn uniformly on the support
/// [lo, hi], together with the uniform density q_U.
struct AuxiliaryGrid {
  Vector u;
  double lo = 0.0;
  double hi = 1.0;

  /// Validates lo < hi and lo <= u_j <= hi.
  static AuxiliaryGrid make(Vector u, double lo, double hi);

  Index size() const { return u.size(); }
  double q_u() const { return 1.0 / (hi - lo); }
  bool contains(double y) const { return y >= lo && y <= hi; }

  /// q_U(y): the uniform density, zero outside the support.
  double density(double y) const { return contains(y) ? q_u() : 0.0; }
  Vector density(const Vector& ys) const;
};

}  // namespace grscde
