#pragma once
// Shared fixtures for the unit tests. The kernel and Gram helpers here are
// written out from the definitions and do not call the library.

#include "grscde/kernels.hpp"
#include "grscde/types.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace grscde::test {

using Gen = std::mt19937_64;

inline PairedDataset random_data(Index n, Index d, Gen& gen) {
  std::normal_distribution<double> normal;
  PairedDataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) data.x(i, j) = normal(gen);
    data.y(i) = normal(gen);
  }
  return data;
}

inline AuxiliaryGrid random_aux(Index n_u, Gen& gen, double lo = -2.5, double hi = 2.5) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector u(n_u);
  for (Index j = 0; j < n_u; ++j) u(j) = unif(gen);
  return AuxiliaryGrid::make(u, lo, hi);
}

inline KernelConfig random_cfg(Index d, Gen& gen) {
  std::uniform_real_distribution<double> hx(0.5, 1.5);
  std::uniform_real_distribution<double> hy(0.4, 1.2);
  Vector h(d);
  for (Index j = 0; j < d; ++j) h(j) = hx(gen);
  return KernelConfig::make(h, hy(gen));
}

struct Atom {
  Vector x;
  double y = 0.0;
};

inline double kernel(const Atom& a, const Atom& b, const KernelConfig& cfg) {
  double s = 0.0;
  for (Index j = 0; j < a.x.size(); ++j) {
    const double r = (a.x(j) - b.x(j)) / cfg.hx(j);
    s += r * r;
  }
  const double ry = (a.y - b.y) / cfg.hy;
  return std::exp(-0.5 * s) * std::exp(-0.5 * ry * ry) / (cfg.hy * std::sqrt(2.0 * std::numbers::pi));
}

/// z_i = (x_p, u_q), i = p * n_u + q.
inline std::vector<Atom> node_atoms(const PairedDataset& data, const AuxiliaryGrid& aux) {
  std::vector<Atom> atoms;
  for (Index p = 0; p < data.size(); ++p) {
    for (Index q = 0; q < aux.size(); ++q) atoms.push_back({data.x.row(p).transpose(), aux.u(q)});
  }
  return atoms;
}

inline std::vector<Atom> pair_atoms(const PairedDataset& data) {
  std::vector<Atom> atoms;
  for (Index l = 0; l < data.size(); ++l) atoms.push_back({data.x.row(l).transpose(), data.y(l)});
  return atoms;
}

inline Matrix gram(const std::vector<Atom>& a, const std::vector<Atom>& b, const KernelConfig& cfg) {
  Matrix g(static_cast<Index>(a.size()), static_cast<Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) g(static_cast<Index>(i), static_cast<Index>(j)) = kernel(a[i], b[j], cfg);
  }
  return g;
}

inline Vector flatten(const Matrix& f) {
  Vector v(f.size());
  for (Index p = 0; p < f.rows(); ++p) {
    for (Index q = 0; q < f.cols(); ++q) v(p * f.cols() + q) = f(p, q);
  }
  return v;
}

inline Matrix unflatten(const Vector& v, Index n, Index n_u) {
  Matrix f(n, n_u);
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n_u; ++q) f(p, q) = v(p * n_u + q);
  }
  return f;
}

/// b-hat at the nodes as a flat vector, summed atom by atom.
inline Vector bhat_oracle(const PairedDataset& data, const AuxiliaryGrid& aux, const KernelConfig& cfg) {
  const auto nodes = node_atoms(data, aux);
  const auto pairs = pair_atoms(data);
  Vector b = Vector::Zero(static_cast<Index>(nodes.size()));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t l = 0; l < pairs.size(); ++l) {
      b(static_cast<Index>(i)) += kernel(nodes[i], pairs[l], cfg) * aux.density(pairs[l].y);
    }
  }
  return b / static_cast<double>(data.size());
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

}  // namespace grscde::test
