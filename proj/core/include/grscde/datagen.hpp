#pragma once

#include "grscde/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace grscde {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser of (master, stream); used to derive independent
/// per-replication generators that do not depend on execution order.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);
Rng make_rng(std::uint64_t master, std::uint64_t stream);

/// Gaussian mixture with n_p means on a circle; X is the first d coordinates.
struct MixtureSpec {
  int d = 2;
  int components = 50;
};

/// Cox-Ingersoll-Ross short rate sampled with its exact transition law.
struct CirSpec {
  double mu = 0.21459;
  double theta = 0.08571;
  double sigma = 0.0783;
  double dt = 1.0 / 12.0;

  double degrees_of_freedom() const;   // 4 mu theta / sigma^2
  double transition_constant() const;  // c = 2 mu / (sigma^2 (1 - exp(-mu dt)))
};

/// AR(d) with standard Gaussian innovations.
struct ArSpec {
  int d = 2;
  std::vector<double> phi;  // phi_1..phi_d
  int burn_in = 100;

  /// phi_i = 1 / (2d).
  static ArSpec equal_weights(int d);
};

/// Y | X ~ Beta(1 + mean(X_i^2), 1), X ~ Unif[0,1]^d.
struct BetaSpec {
  int d = 2;
};

struct CsvSpec {
  std::string path;
  std::vector<std::string> x_cols;
  std::string y_col;
};

using ModelSpec = std::variant<MixtureSpec, CirSpec, ArSpec, BetaSpec, CsvSpec>;

/// Throws std::invalid_argument on parameters outside the model's domain.
void validate(const ModelSpec& spec);
std::string model_name(const ModelSpec& spec);

/// Exact conditional density q_{Y|X=x}(y).
using GroundTruth = std::function<double(const Eigen::Ref<const Vector>& x, double y)>;

struct SyntheticSample {
  PairedDataset data;
  GroundTruth truth;
};

/// A simulated path and the consecutive (lags, next value) pairs built from it.
struct PathSample {
  Vector path;
  PairedDataset pairs;
  GroundTruth truth;
};

SyntheticSample gen_mixture(const MixtureSpec& spec, Index n, Rng& rng);
GroundTruth mixture_truth(const MixtureSpec& spec);

/// m observations starting from the stationary Gamma law; m - 1 pairs.
PathSample gen_cir(const CirSpec& spec, Index m, Rng& rng);
GroundTruth cir_truth(const CirSpec& spec);

/// m observations kept after the burn-in; m - d pairs ((x_{t-1},...,x_{t-d}), x_t).
PathSample gen_ar(const ArSpec& spec, Index m, Rng& rng);
GroundTruth ar_truth(const ArSpec& spec);

SyntheticSample gen_beta(const BetaSpec& spec, Index n, Rng& rng);
GroundTruth beta_truth(const BetaSpec& spec);

/// Ground truth for any synthetic model; throws for CSV data.
GroundTruth truth_for(const ModelSpec& spec);

/// Density of the noncentral chi-squared law, summed as a Poisson mixture of
/// central chi-squared densities until the terms fall below 1e-14 of the sum.
double noncentral_chi2_pdf(double x, double df, double noncentrality);
double sample_noncentral_chi2(double df, double noncentrality, Rng& rng);

/// n_u i.i.d. uniform draws on [lo, hi].
AuxiliaryGrid sample_aux(double lo, double hi, Index n_u, Rng& rng);

struct CsvData {
  PairedDataset data;
  std::vector<std::string> x_names;
  std::size_t dropped_rows = 0;
};

/// Comma-separated file with a header row. Columns whose non-missing values
/// are all non-numeric are encoded 0, 1, ... in order of first appearance.
/// Rows with an empty or "NA" field in a selected column are dropped and
/// counted; a warning line goes to `warnings` when non-null.
CsvData load_csv(const std::string& path, const std::vector<std::string>& x_cols, const std::string& y_col,
                 std::ostream* warnings = nullptr);

}  // namespace grscde
