#include "grscde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace grscde {

namespace {

constexpr double kInvSqrt2Pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;

void require_bandwidth(double h, const char* what) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

double median_of(std::vector<double>& v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  const double upper = v[m];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (lower + upper);
}

}  // namespace

KernelConfig KernelConfig::make(Vector hx, double hy) {
  KernelConfig cfg{std::move(hx), hy};
  cfg.validate();
  return cfg;
}

void KernelConfig::validate() const {
  if (hx.size() == 0) throw std::invalid_argument("h_x must have at least one component");
  for (Index l = 0; l < hx.size(); ++l) require_bandwidth(hx(l), "every component of h_x");
  require_bandwidth(hy, "h_y");
}

BandwidthGrid BandwidthGrid::make(Vector base, double ratio, int half_width) {
  if (!(ratio > 1.0)) throw std::invalid_argument("bandwidth grid ratio must exceed 1");
  if (half_width < 0) throw std::invalid_argument("bandwidth grid half-width must be >= 0");
  for (Index l = 0; l < base.size(); ++l) require_bandwidth(base(l), "bandwidth grid base");
  BandwidthGrid g;
  g.base = std::move(base);
  g.ratio = ratio;
  g.half_width = half_width;
  for (int l = -half_width; l <= half_width; ++l) {
    const double f = std::pow(ratio, l);
    g.factors.push_back(f);
    g.values.push_back(g.base * f);
  }
  return g;
}

double gaussian_kx(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp,
                   const Eigen::Ref<const Vector>& hx) {
  if (x.size() != xp.size() || x.size() != hx.size()) {
    throw std::invalid_argument("gaussian_kx: dimension mismatch");
  }
  double s = 0.0;
  for (Index l = 0; l < x.size(); ++l) {
    require_bandwidth(hx(l), "every component of h_x");
    const double z = (x(l) - xp(l)) / hx(l);
    s += z * z;
  }
  return std::exp(-0.5 * s);
}

double gaussian_ky(double y, double yp, double hy) {
  require_bandwidth(hy, "h_y");
  const double z = (y - yp) / hy;
  return kInvSqrt2Pi / hy * std::exp(-0.5 * z * z);
}

Matrix kx_cross(const Matrix& a, const Matrix& b, const Vector& hx) {
  if (a.cols() != hx.size() || b.cols() != hx.size()) {
    throw std::invalid_argument("kx_cross: covariate dimension does not match h_x");
  }
  for (Index l = 0; l < hx.size(); ++l) require_bandwidth(hx(l), "every component of h_x");
  Matrix k(a.rows(), b.rows());
  const Index d = hx.size();
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (Index l = 0; l < d; ++l) {
        const double z = (a(i, l) - b(j, l)) / hx(l);
        s += z * z;
      }
      k(i, j) = std::exp(-0.5 * s);
    }
  }
  return k;
}

Matrix kx_gram(const Matrix& x, const Vector& hx) {
  if (x.cols() != hx.size()) throw std::invalid_argument("kx_gram: covariate dimension does not match h_x");
  for (Index l = 0; l < hx.size(); ++l) require_bandwidth(hx(l), "every component of h_x");
  const Index n = x.rows();
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    k(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (Index l = 0; l < hx.size(); ++l) {
        const double z = (x(i, l) - x(j, l)) / hx(l);
        s += z * z;
      }
      k(i, j) = k(j, i) = std::exp(-0.5 * s);
    }
  }
  return k;
}

Matrix ky_cross(const Vector& a, const Vector& b, double hy) {
  require_bandwidth(hy, "h_y");
  const double c = kInvSqrt2Pi / hy;
  Matrix k(a.size(), b.size());
  for (Index j = 0; j < b.size(); ++j) {
    for (Index i = 0; i < a.size(); ++i) {
      const double z = (a(i) - b(j)) / hy;
      k(i, j) = c * std::exp(-0.5 * z * z);
    }
  }
  return k;
}

GramFactors build_gram(const PairedDataset& data, const AuxiliaryGrid& aux, const KernelConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.empty()) throw std::invalid_argument("build_gram: empty dataset");
  if (aux.size() == 0) throw std::invalid_argument("build_gram: empty auxiliary sample");
  GramFactors g;
  g.kx = kx_gram(data.x, cfg.hx);
  g.ku = ky_cross(aux.u, aux.u, cfg.hy);
  g.kuy = ky_cross(aux.u, data.y, cfg.hy);
  g.kyy = ky_cross(data.y, data.y, cfg.hy);
  return g;
}

Vector median_heuristic(const Matrix& samples) {
  const Index n = samples.rows();
  if (n < 2) throw std::invalid_argument("median heuristic needs at least 2 samples");
  Vector m(samples.cols());
  std::vector<double> sq;
  sq.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index l = 0; l < samples.cols(); ++l) {
    sq.clear();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double diff = samples(i, l) - samples(j, l);
        sq.push_back(diff * diff);
      }
    }
    double med = median_of(sq);
    if (med <= 0.0) {
      double smallest = 0.0;
      for (double v : sq) {
        if (v > 0.0 && (smallest == 0.0 || v < smallest)) smallest = v;
      }
      if (smallest == 0.0) {
        throw std::invalid_argument("median heuristic: column " + std::to_string(l) +
                                    " is constant, no positive pairwise distance");
      }
      med = smallest;
    }
    m(l) = std::sqrt(med / 2.0);
  }
  return m;
}

double median_heuristic(const Vector& samples) {
  return median_heuristic(Matrix(samples))(0);
}

double kappa_sq(const KernelConfig& cfg) {
  cfg.validate();
  return kInvSqrt2Pi / cfg.hy;
}

}  // namespace grscde
