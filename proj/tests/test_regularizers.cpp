#include "grscde/regularizers.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace grscde;
using grscde::test::Gen;

namespace {

struct Instance {
  PairedDataset data;
  AuxiliaryGrid aux;
  KernelConfig cfg;
  NodeProblem problem;
};

Instance make_instance(Index n, Index n_u, std::uint64_t seed, Index d = 2) {
  Gen gen(seed);
  auto data = test::random_data(n, d, gen);
  auto aux = test::random_aux(n_u, gen);
  auto cfg = test::random_cfg(d, gen);
  return {data, aux, cfg, NodeProblem::build(data, aux, cfg)};
}

double max_node_eigenvalue(const NodeProblem& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> ex(p.gram.kx), eu(p.gram.ku);
  return ex.eigenvalues().maxCoeff() * eu.eigenvalues().maxCoeff();
}

}  // namespace

TEST(Tikhonov, ScalarSystem) {
  // k = 1 requires h_y = 1/sqrt(2 pi) with y_1 = u_1; then b = q_u k / n.
  const double hy = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  PairedDataset d{Matrix::Zero(1, 1), Vector::Constant(1, 0.5)};
  auto aux = AuxiliaryGrid::make(Vector::Constant(1, 0.5), 0.0, 1.0);
  auto p = NodeProblem::build(d, aux, KernelConfig::make(Vector::Ones(1), hy));
  ASSERT_NEAR(p.gram.ku(0, 0), 1.0, 1e-14);
  ASSERT_NEAR(p.bhat(0, 0), 1.0, 1e-14);
  auto rep = tikhonov_fit(p, 2.0);
  EXPECT_NEAR(rep.a(0, 0), -1.0 / 6.0, 1e-14);
  EXPECT_DOUBLE_EQ(rep.beta, 0.5);
  EXPECT_EQ(rep.f0.kind(), InitialFunction::Kind::zero);
}

TEST(Tikhonov, ZeroEmbedding) {
  auto in = make_instance(4, 3, 1);
  in.problem.bhat.setZero();
  auto rep = tikhonov_fit(in.problem, 0.1);
  EXPECT_TRUE(rep.a.isZero(0.0));
}

TEST(Tikhonov, RejectsBadLambda) {
  auto in = make_instance(3, 2, 2);
  EXPECT_THROW(tikhonov_fit(in.problem, 0.0), std::invalid_argument);
  EXPECT_THROW(tikhonov_fit(in.problem, -1.0), std::invalid_argument);
  EXPECT_THROW(tikhonov_fit(in.problem, std::nan("")), std::invalid_argument);
}

TEST(Tikhonov, EigenFailureOnNonFiniteGram) {
  auto in = make_instance(3, 2, 3);
  in.problem.gram.kx(0, 1) = std::nan("");
  EXPECT_THROW(tikhonov_fit(in.problem, 0.1), std::runtime_error);
}

TEST(Tikhonov, MatchesDenseQuadraticOracle) {
  Gen gen(4);
  std::uniform_real_distribution<double> log_lambda(-4.0, 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 4), n_u = 1 + static_cast<Index>(seed % 3);
    auto in = make_instance(n, n_u, 100 + seed);
    const double lambda = std::pow(10.0, log_lambda(gen));
    const auto span = test::JointSpan::build(in.data, in.aux, in.cfg);
    const Vector c_lib = span.coefficients(tikhonov_fit(in.problem, lambda));
    const Vector c_qp = span.qp_minimiser(lambda);
    const double got = span.objective(c_lib, lambda), best = span.objective(c_qp, lambda);
    EXPECT_LE(std::abs(got - best), 1e-8 * std::abs(best)) << "seed " << seed;
    for (int k = 0; k < 20; ++k) {
      test::Atom z{Vector::Random(2), 2.0 * Eigen::internal::random<double>()};
      const double a = span.evaluate(c_lib, z, in.cfg), b = span.evaluate(c_qp, z, in.cfg);
      EXPECT_LE(std::abs(a - b), 1e-6 * std::max(std::abs(b), 1e-3)) << "seed " << seed;
    }
  }
}

// Halving the support width doubles q_U and with it b-hat.
static std::pair<NodeProblem, NodeProblem> support_pair(std::uint64_t seed) {
  Gen gen(seed);
  auto data = test::random_data(5, 2, gen);
  data.y = data.y.cwiseMax(-4.0).cwiseMin(4.0);
  const Vector u = test::random_aux(4, gen).u;
  const auto cfg = test::random_cfg(2, gen);
  return {NodeProblem::build(data, AuxiliaryGrid::make(u, -10.0, 10.0), cfg),
          NodeProblem::build(data, AuxiliaryGrid::make(u, -5.0, 5.0), cfg)};
}

TEST(Tikhonov, LinearInEmbedding) {
  auto [p1, p2] = support_pair(5);
  ASSERT_LE(test::rel_err(p2.bhat, 2.0 * p1.bhat), 1e-15);
  const auto r1 = tikhonov_fit(p1, 0.05), r2 = tikhonov_fit(p2, 0.05);
  EXPECT_DOUBLE_EQ(r2.beta, r1.beta);
  for (int k = 0; k < 10; ++k) {
    Vector x = Vector::Random(2);
    const double y = Eigen::internal::random<double>();
    const double f1 = eval_rep(r1, *p1.data, x, y), f2 = eval_rep(r2, *p2.data, x, y);
    EXPECT_LE(std::abs(f2 - 2.0 * f1), 1e-10 * std::abs(2.0 * f1));
  }
}

TEST(Tikhonov, CachedEigendecompositionsAgree) {
  auto in = make_instance(5, 4, 6);
  auto ex = SymmetricEigen::of(in.problem.gram.kx), eu = SymmetricEigen::of(in.problem.gram.ku);
  for (double lambda : {1.0, 0.1, 0.01}) {
    auto a = tikhonov_fit(in.problem, ex, eu, lambda), b = tikhonov_fit(in.problem, lambda);
    EXPECT_TRUE(a.a == b.a);
    EXPECT_EQ(a.beta, b.beta);
  }
}

TEST(Landweber, InitialStates) {
  auto in = make_instance(3, 4, 7);
  auto z = landweber_init(InitialFunction::zero(), in.problem);
  EXPECT_TRUE(z.f.isZero(0.0));
  EXPECT_EQ(z.t, 0);
  EXPECT_TRUE(z.diagnostics.empty());
  auto u = landweber_init(InitialFunction::uniform(), in.problem);
  EXPECT_TRUE(u.f.isConstant(in.aux.q_u(), 0.0));
  EXPECT_TRUE(u.rep.a.isZero(0.0));
  EXPECT_EQ(u.rep.beta, 0.0);
}

TEST(Landweber, FirstStepFromZero) {
  auto in = make_instance(4, 3, 8);
  const double delta = 0.3;
  auto s = landweber_advance(landweber_init(InitialFunction::zero(), in.problem), in.problem, delta);
  EXPECT_TRUE(s.rep.a.isZero(0.0));
  EXPECT_DOUBLE_EQ(s.rep.beta, 2.0 * delta / 4.0);
  EXPECT_LE(test::rel_err(s.f, 2.0 * delta * in.problem.bhat), 1e-14);
  auto path = landweber_path(InitialFunction::zero(), in.problem, StepPolicy::fixed_inverse_kappa(), 1);
  ASSERT_EQ(path.size(), 1u);
  EXPECT_DOUBLE_EQ(path[0].beta, 2.0 / kappa_sq(in.cfg) / 4.0);
}

TEST(Landweber, ZeroStepOnlyAdvancesCounter) {
  auto in = make_instance(4, 3, 9);
  auto s0 = landweber_init(InitialFunction::uniform(), in.problem);
  s0 = landweber_advance(s0, in.problem, 0.2);
  auto s1 = landweber_advance(s0, in.problem, 0.0);
  EXPECT_TRUE(s1.f == s0.f);
  EXPECT_TRUE(s1.rep.a == s0.rep.a);
  EXPECT_EQ(s1.rep.beta, s0.rep.beta);
  EXPECT_EQ(s1.t, s0.t + 1);
}

TEST(Landweber, RejectsBadSteps) {
  auto in = make_instance(3, 2, 10);
  auto s = landweber_init(InitialFunction::zero(), in.problem);
  EXPECT_THROW(landweber_advance(s, in.problem, -0.1), std::invalid_argument);
  EXPECT_THROW(landweber_advance(s, in.problem, INFINITY), std::invalid_argument);
  EXPECT_THROW(landweber_path(InitialFunction::zero(), in.problem, StepPolicy::line_search(), 0),
               std::invalid_argument);
}

TEST(Landweber, StateInvariants) {
  auto in = make_instance(5, 4, 11);
  auto s = landweber_init(InitialFunction::uniform(), in.problem);
  for (int k = 0; k < 8; ++k) s = *landweber_step(std::move(s), in.problem, StepPolicy::line_search());
  double sum = 0.0;
  for (double d : s.steps) sum += d;
  EXPECT_EQ(s.t, static_cast<int>(s.steps.size()));
  EXPECT_NEAR(s.rep.beta, 2.0 * sum / 5.0, 1e-14 * s.rep.beta);
  EXPECT_LE(test::rel_err(s.f, eval_at_nodes(s.rep, in.problem)), 1e-12);
}

TEST(Landweber, MatchesFunctionalGradientDescent) {
  auto in = make_instance(4, 3, 12);
  const auto span = test::JointSpan::build(in.data, in.aux, in.cfg);
  const Matrix k = span.node_gram();
  const Vector b = span.bhat();
  const double nz = 12.0;
  auto s = landweber_init(InitialFunction::uniform(), in.problem);
  Vector f = Vector::Constant(12, in.aux.q_u());
  for (int t = 0; t < 6; ++t) {
    const double delta = 0.1 + 0.05 * t;
    s = landweber_advance(std::move(s), in.problem, delta);
    f = f - delta * (2.0 * k * f / nz - 2.0 * b);
    EXPECT_LE(test::rel_err(test::flatten(s.f), f), 1e-12);
  }
}

TEST(Landweber, SpectralFilterEquivalence) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 5), n_u = 1 + static_cast<Index>(seed % 4);
    auto in = make_instance(n, n_u, 200 + seed);
    const auto span = test::JointSpan::build(in.data, in.aux, in.cfg);
    const double k2 = kappa_sq(in.cfg);
    // relaxation 1/kappa^2: library step half of that
    auto s = landweber_init(InitialFunction::zero(), in.problem);
    for (int t = 1; t <= 20; ++t) {
      s = landweber_advance(std::move(s), in.problem, 0.5 / k2);
      const Vector oracle = test::spectral_filter(span.node_gram(), span.bhat(), 1.0 / k2, t);
      EXPECT_LE(test::rel_err(test::flatten(s.f), oracle), 1e-8) << "seed " << seed << " t " << t;
    }
    // the default fixed policy takes delta = 1/kappa^2, i.e. relaxation 2/kappa^2
    auto path = landweber_path(InitialFunction::zero(), in.problem, StepPolicy::fixed_inverse_kappa(), 20);
    // with n = n_u = 1 the single eigenvalue is kappa^2 and the iterate returns to 0 at even t
    const Vector oracle = test::spectral_filter(span.node_gram(), span.bhat(), 2.0 / k2, 20);
    const Vector got = test::flatten(eval_at_nodes(path.back(), in.problem));
    const double scale = std::max(oracle.norm(), 2.0 / k2 * span.bhat().norm());
    EXPECT_LE((got - oracle).norm(), 1e-8 * scale);
  }
}

TEST(LineSearch, ScalarInstance) {
  PairedDataset d{Matrix::Zero(1, 1), Vector::Constant(1, 0.3)};
  auto aux = AuxiliaryGrid::make(Vector::Constant(1, 0.6), 0.0, 1.0);
  auto p = NodeProblem::build(d, aux, KernelConfig::make(Vector::Ones(1), 0.5));
  const double k = p.gram.ku(0, 0);
  auto s = landweber_init(InitialFunction::zero(), p);
  EXPECT_NEAR(*step_delta2(s, p), 1.0 / (2.0 * k), 1e-14);
  s.f(0, 0) = 3.0;
  EXPECT_NEAR(*step_delta2(s, p), 1.0 / (2.0 * k), 1e-14);
}

TEST(LineSearch, SingleAtomDeltasCoincide) {
  // y_1 = u_1 makes the residual a multiple of one kernel atom.
  PairedDataset d{Matrix::Zero(1, 1), Vector::Constant(1, 0.6)};
  auto aux = AuxiliaryGrid::make(Vector::Constant(1, 0.6), 0.0, 1.0);
  auto p = NodeProblem::build(d, aux, KernelConfig::make(Vector::Ones(1), 0.5));
  const double k = p.gram.ku(0, 0);
  auto s = landweber_init(InitialFunction::zero(), p);
  EXPECT_NEAR(*step_delta1(s, p), 1.0 / (2.0 * k), 1e-13);
  EXPECT_NEAR(*step_delta2(s, p), 1.0 / (2.0 * k), 1e-13);
}

TEST(LineSearch, EigenvectorResidual) {
  auto in = make_instance(4, 3, 13);
  Eigen::SelfAdjointEigenSolver<Matrix> ex(in.problem.gram.kx), eu(in.problem.gram.ku);
  const Index px = 3, pu = 2;
  const double sigma = ex.eigenvalues()(px) * eu.eigenvalues()(pu) / 12.0;
  const Matrix v = ex.eigenvectors().col(px) * eu.eigenvectors().col(pu).transpose();
  // choose F so that L-hat F - B-hat = v: F solves L-hat F = B-hat + v
  NodeProblem p = in.problem;
  p.bhat.setZero();
  auto s = landweber_init(InitialFunction::zero(), p);
  s.f = v / sigma;
  EXPECT_NEAR(*step_delta2(s, p), 1.0 / (2.0 * sigma), 1e-9 / sigma);
}

TEST(LineSearch, ConvergedResidualStops) {
  auto in = make_instance(3, 2, 14);
  NodeProblem p = in.problem;
  p.bhat.setZero();
  auto s = landweber_init(InitialFunction::zero(), p);
  EXPECT_FALSE(step_delta2(s, p).has_value());
  EXPECT_FALSE(step_delta1(s, p).has_value());
  EXPECT_FALSE(landweber_step(s, p, StepPolicy::line_search()).has_value());
  EXPECT_TRUE(landweber_path(InitialFunction::zero(), p, StepPolicy::line_search(), 5).empty());
}

TEST(LineSearch, StepChain) {
  Gen gen(15);
  std::normal_distribution<double> normal;
  int checked = 0;
  for (std::uint64_t inst = 0; inst < 10; ++inst) {
    auto in = make_instance(2 + static_cast<Index>(inst % 4), 2 + static_cast<Index>(inst % 3), 300 + inst);
    const double lower = static_cast<double>(in.problem.n_z()) / (2.0 * max_node_eigenvalue(in.problem));
    for (int k = 0; k < 20; ++k) {
      auto s = landweber_init(InitialFunction::zero(), in.problem);
      s.f = Matrix::NullaryExpr(in.problem.n(), in.problem.n_u(), [&] { return normal(gen); });
      const auto d1 = step_delta1(s, in.problem), d2 = step_delta2(s, in.problem);
      ASSERT_TRUE(d1 && d2);
      EXPECT_GE(*d1, *d2 - 1e-12 * (1.0 + *d2));
      EXPECT_GE(*d2, lower - 1e-12 * (1.0 + lower));
      ++checked;
    }
  }
  EXPECT_EQ(checked, 200);
}

TEST(LineSearch, Delta1ScaleInvariant) {
  auto [p1, p2] = support_pair(16);
  auto s1 = landweber_init(InitialFunction::zero(), p1);
  s1.f = Matrix::Random(5, 4);
  auto s2 = s1;
  s2.f *= 2.0;
  const double d = *step_delta1(s1, p1);
  EXPECT_NEAR(*step_delta1(s2, p2), d, 1e-12 * d);
}

TEST(LineSearch, HResidualMonotone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto in = make_instance(3 + static_cast<Index>(seed % 4), 2 + static_cast<Index>(seed % 3), 400 + seed);
    StepPolicy pol = StepPolicy::line_search();
    pol.record_diagnostics = true;
    auto s = landweber_init(InitialFunction::uniform(), in.problem);
    double prev = residual_hnorm_sq(s.f, in.problem.gram, in.aux, in.data.y);
    for (int t = 0; t < 10; ++t) {
      auto next = landweber_step(std::move(s), in.problem, pol);
      ASSERT_TRUE(next.has_value());
      s = std::move(*next);
      const double cur = s.diagnostics.back().residual_hnorm_sq;
      EXPECT_LE(std::sqrt(cur), std::sqrt(prev) + 1e-10) << "seed " << seed << " t " << t;
      prev = cur;
    }
  }
}

TEST(LineSearch, Delta2MinimisesNextResidual) {
  auto in = make_instance(4, 3, 17);
  auto s = landweber_init(InitialFunction::uniform(), in.problem);
  const double d = *step_delta2(s, in.problem);
  auto res = [&](double step) {
    auto n = landweber_advance(s, in.problem, step);
    return residual_hnorm_sq(n.f, in.problem.gram, in.aux, in.data.y);
  };
  EXPECT_LE(res(d), res(0.9 * d));
  EXPECT_LE(res(d), res(1.1 * d));
}

TEST(Landweber, FixedStepDhatMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto in = make_instance(4 + static_cast<Index>(seed % 3), 3, 500 + seed);
    StepPolicy pol = StepPolicy::fixed_inverse_kappa();
    pol.record_diagnostics = true;
    auto s = landweber_init(InitialFunction::uniform(), in.problem);
    double prev = training_dhat(s.rep, s.f, in.problem);
    for (int t = 0; t < 40; ++t) {
      s = *landweber_step(std::move(s), in.problem, pol);
      const double cur = s.diagnostics.back().dhat;
      EXPECT_LE(cur, prev + 1e-12 * std::abs(prev)) << "seed " << seed << " t " << t;
      prev = cur;
    }
  }
}

TEST(Landweber, PathRespectsBudgetAndCap) {
  auto in = make_instance(5, 4, 18);
  auto path = landweber_path(InitialFunction::uniform(), in.problem, StepPolicy::line_search(), 7);
  EXPECT_LE(path.size(), 7u);
  StepPolicy capped = StepPolicy::line_search();
  capped.cap = 1e-3;
  auto s = landweber_init(InitialFunction::uniform(), in.problem);
  s = *landweber_step(std::move(s), in.problem, capped);
  EXPECT_LE(s.steps.back(), 1e-3);
}
