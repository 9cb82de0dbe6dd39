#pragma once

#include "grscde/types.hpp"

#include <vector>

namespace grscde {

/// Bandwidths of the Gaussian product kernel k((x,y),(x',y')) = k_X(x,x') k_Y(y,y').
struct KernelConfig {
  Vector hx;        // one bandwidth per covariate
  double hy = 1.0;  // response bandwidth

  /// Throws std::invalid_argument unless every bandwidth is strictly positive
  /// and finite.
  static KernelConfig make(Vector hx, double hy);
  void validate() const;
  Index dim() const { return hx.size(); }
};

/// The separable Gram blocks shared by every estimator.
///   kx(i,l)  = k_X(x_i, x_l)   n x n
///   ku(j,l)  = k_Y(u_j, u_l)   n_u x n_u
///   kuy(j,i) = k_Y(u_j, y_i)   n_u x n
///   kyy(i,l) = k_Y(y_i, y_l)   n x n
struct GramFactors {
  Matrix kx;
  Matrix ku;
  Matrix kuy;
  Matrix kyy;

  Index n() const { return kx.rows(); }
  Index n_u() const { return ku.rows(); }
};

/// Geometric bandwidth grid {base * ratio^l : l = -L..L}.
struct BandwidthGrid {
  Vector base;
  double ratio = 2.0;
  int half_width = 0;
  std::vector<double> factors;  // ratio^l, strictly increasing
  std::vector<Vector> values;   // base * factor

  static BandwidthGrid make(Vector base, double ratio, int half_width);
  std::size_t size() const { return values.size(); }
};

/// exp(-1/2 sum_l (x_l - x'_l)^2 / h_l^2), in (0, 1].
double gaussian_kx(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp,
                   const Eigen::Ref<const Vector>& hx);

/// Gaussian density in y' centred at y with standard deviation hy.
double gaussian_ky(double y, double yp, double hy);

/// k_X between the rows of `a` (m x d) and the rows of `b` (n x d); m x n.
Matrix kx_cross(const Matrix& a, const Matrix& b, const Vector& hx);

/// Symmetric n x n Gram of k_X over the rows of `x`.
Matrix kx_gram(const Matrix& x, const Vector& hx);

/// k_Y between the entries of `a` and `b`; a.size() x b.size().
Matrix ky_cross(const Vector& a, const Vector& b, double hy);

GramFactors build_gram(const PairedDataset& data, const AuxiliaryGrid& aux, const KernelConfig& cfg);

/// Per-column sqrt(median{(s_il - s_jl)^2 : i < j} / 2) over the rows of
/// `samples`. When a column's median is zero the smallest strictly positive
/// squared difference is used instead; a constant column throws.
Vector median_heuristic(const Matrix& samples);
double median_heuristic(const Vector& samples);

/// sup_z k(z, z) = 1 / (hy sqrt(2 pi)).
double kappa_sq(const KernelConfig& cfg);

}  // namespace grscde
