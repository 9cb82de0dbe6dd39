#include "grscde/kernels.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace grscde;
using grscde::test::Gen;

TEST(Kernels, GaussianKxHandValues) {
  Vector h = Vector::Ones(2);
  Vector a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 0.0;
  EXPECT_NEAR(gaussian_kx(a, b, h), std::exp(-0.5), 1e-15);
  b << 1.0, 2.0;
  EXPECT_NEAR(gaussian_kx(a, b, h), std::exp(-2.5), 1e-15);
  EXPECT_DOUBLE_EQ(gaussian_kx(a, a, h), 1.0);
}

TEST(Kernels, GaussianKyHandValues) {
  EXPECT_NEAR(gaussian_ky(0.0, 0.0, 1.0), 0.3989422804014327, 1e-15);
  EXPECT_NEAR(gaussian_ky(0.0, 1.0, 1.0), 0.24197072451914337, 1e-15);
}

TEST(Kernels, KappaSquared) {
  Vector h = Vector::Ones(1);
  EXPECT_NEAR(kappa_sq(KernelConfig::make(h, 1.0)), 0.3989422804014327, 1e-15);
  EXPECT_NEAR(kappa_sq(KernelConfig::make(h, 1.0 / std::sqrt(2.0 * std::numbers::pi))), 1.0, 1e-14);
  EXPECT_NEAR(1.0 / kappa_sq(KernelConfig::make(h, 1.0)), 2.5066282746310002, 1e-14);
}

TEST(Kernels, ConfigRejectsBadBandwidths) {
  Vector h(2);
  h << 1.0, 0.0;
  EXPECT_THROW(KernelConfig::make(h, 1.0), std::invalid_argument);
  EXPECT_THROW(KernelConfig::make(Vector::Ones(2), -1.0), std::invalid_argument);
  EXPECT_THROW(KernelConfig::make(Vector::Ones(2), std::nan("")), std::invalid_argument);
  EXPECT_THROW(KernelConfig::make(Vector(), 1.0), std::invalid_argument);
}

TEST(Kernels, SingletonGram) {
  PairedDataset d{Matrix::Constant(1, 1, 0.3), Vector::Constant(1, 0.2)};
  auto aux = AuxiliaryGrid::make(Vector::Constant(1, 0.5), 0.0, 1.0);
  auto g = build_gram(d, aux, KernelConfig::make(Vector::Ones(1), 0.7));
  EXPECT_DOUBLE_EQ(g.kx(0, 0), 1.0);
  EXPECT_NEAR(g.ku(0, 0), 1.0 / (0.7 * std::sqrt(2.0 * std::numbers::pi)), 1e-15);
}

TEST(Kernels, IdenticalCovariatesGiveOnes) {
  Matrix x(2, 3);
  x.row(0) << 1.0, -2.0, 0.5;
  x.row(1) = x.row(0);
  EXPECT_EQ(kx_gram(x, Vector::Ones(3)), Matrix::Ones(2, 2));
}

TEST(Kernels, EmptyInputsThrow) {
  Gen gen(1);
  auto d = test::random_data(3, 1, gen);
  auto cfg = KernelConfig::make(Vector::Ones(1), 1.0);
  EXPECT_THROW(build_gram(PairedDataset{Matrix(0, 1), Vector(0)}, test::random_aux(2, gen), cfg),
               std::invalid_argument);
  AuxiliaryGrid empty;
  EXPECT_THROW(build_gram(d, empty, cfg), std::invalid_argument);
}

TEST(Kernels, BlocksMatchPointwiseDefinitions) {
  Gen gen(7);
  auto d = test::random_data(6, 2, gen);
  auto aux = test::random_aux(4, gen);
  auto cfg = test::random_cfg(2, gen);
  auto g = build_gram(d, aux, cfg);
  for (Index i = 0; i < 6; ++i) {
    for (Index l = 0; l < 6; ++l) {
      EXPECT_NEAR(g.kx(i, l), gaussian_kx(d.x.row(i).transpose(), d.x.row(l).transpose(), cfg.hx), 1e-15);
      EXPECT_NEAR(g.kyy(i, l), gaussian_ky(d.y(i), d.y(l), cfg.hy), 1e-15);
    }
    for (Index j = 0; j < 4; ++j) EXPECT_NEAR(g.kuy(j, i), gaussian_ky(aux.u(j), d.y(i), cfg.hy), 1e-15);
  }
  for (Index j = 0; j < 4; ++j) {
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(g.ku(j, k), gaussian_ky(aux.u(j), aux.u(k), cfg.hy), 1e-15);
  }
}

TEST(Kernels, EntriesWithinKernelRange) {
  Gen gen(8);
  auto d = test::random_data(20, 3, gen);
  auto aux = test::random_aux(10, gen);
  auto cfg = test::random_cfg(3, gen);
  auto g = build_gram(d, aux, cfg);
  const double k2 = kappa_sq(cfg);
  EXPECT_GT(g.kx.minCoeff(), 0.0);
  EXPECT_LE(g.kx.maxCoeff(), 1.0);
  for (const Matrix* m : {&g.ku, &g.kuy, &g.kyy}) {
    EXPECT_GT(m->minCoeff(), 0.0);
    EXPECT_LE(m->maxCoeff(), k2);
  }
}

TEST(Kernels, KroneckerMatchesFullGram) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Gen gen(100 + seed);
    const Index n = 2 + static_cast<Index>(seed % 5);
    const Index n_u = 1 + static_cast<Index>(seed % 6);
    auto d = test::random_data(n, 2, gen);
    auto aux = test::random_aux(n_u, gen);
    auto cfg = test::random_cfg(2, gen);
    auto g = build_gram(d, aux, cfg);
    const auto nodes = test::node_atoms(d, aux);
    const Matrix full = test::gram(nodes, nodes, cfg);
    const Matrix f = Matrix::Random(n, n_u);
    const Vector lhs = test::flatten(g.kx * f * g.ku);
    const Vector rhs = full * test::flatten(f);
    EXPECT_LE(test::rel_err(lhs, rhs), 1e-10) << "seed " << seed;
  }
}

TEST(Kernels, SymmetricAndPositiveSemidefinite) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Gen gen(200 + seed);
    auto d = test::random_data(30, 2, gen);
    auto aux = test::random_aux(25, gen);
    auto g = build_gram(d, aux, test::random_cfg(2, gen));
    for (const Matrix* m : {&g.kx, &g.ku}) {
      EXPECT_TRUE(*m == m->transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> es(*m);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().maxCoeff());
    }
  }
}

TEST(Kernels, BandwidthCovariateScaling) {
  Gen gen(9);
  auto d = test::random_data(12, 3, gen);
  Vector h(3);
  h << 0.5, 1.0, 2.0;
  EXPECT_TRUE(kx_gram(d.x, h) == kx_gram(2.0 * d.x, 2.0 * h));
}

TEST(Kernels, KyIntegratesToOne) {
  for (double hy : {0.05, 0.3, 1.0, 4.0}) {
    const double y = 0.7;
    const int m = 2048;
    const double lo = y - 10 * hy, hi = y + 10 * hy, step = (hi - lo) / (m - 1);
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
      const double w = (i == 0 || i == m - 1) ? 0.5 : 1.0;
      s += w * gaussian_ky(y, lo + i * step, hy);
    }
    EXPECT_NEAR(s * step, 1.0, 1e-6) << "hy " << hy;
  }
}

TEST(Kernels, MedianHeuristicHandValues) {
  Vector ys(3);
  ys << 0.0, 1.0, 3.0;
  EXPECT_NEAR(median_heuristic(ys), std::sqrt(2.0), 1e-15);
  Matrix xs(3, 2);
  xs << 0, 0, 2, 0, 0, 2;
  Vector m = median_heuristic(xs);
  EXPECT_NEAR(m(0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(m(1), std::sqrt(2.0), 1e-15);
}

TEST(Kernels, MedianHeuristicEvenCount) {
  Vector ys(4);
  ys << 0.0, 1.0, 2.0, 4.0;
  // squared diffs {1, 4, 16, 1, 9, 4}; median of 6 = (4 + 4) / 2
  EXPECT_NEAR(median_heuristic(ys), std::sqrt(2.0), 1e-15);
}

TEST(Kernels, MedianHeuristicDegenerate) {
  Vector ys(5);
  ys << 1.0, 1.0, 1.0, 1.0, 3.0;
  // median squared diff is 0; smallest positive one is 4
  EXPECT_NEAR(median_heuristic(ys), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(median_heuristic(Vector(Vector::Constant(2, 4.2))), std::invalid_argument);
  EXPECT_THROW(median_heuristic(Vector(Vector::Constant(1, 0.0))), std::invalid_argument);
}

TEST(Kernels, BandwidthGridIsGeometric) {
  auto g = BandwidthGrid::make(Vector::Constant(2, 1.5), 2.0, 3);
  ASSERT_EQ(g.size(), 7u);
  EXPECT_DOUBLE_EQ(g.factors.front(), 0.125);
  EXPECT_DOUBLE_EQ(g.factors[3], 1.0);
  EXPECT_DOUBLE_EQ(g.factors.back(), 8.0);
  EXPECT_DOUBLE_EQ(g.values.back()(1), 12.0);
  EXPECT_EQ(BandwidthGrid::make(Vector::Ones(1), 1.6, 0).size(), 1u);
  EXPECT_THROW(BandwidthGrid::make(Vector::Ones(1), 1.0, 2), std::invalid_argument);
}
