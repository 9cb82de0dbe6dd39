#include "grscde/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace grscde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSeriesTolerance = 1e-14;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(kTwoPi); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double log_chi2_pdf(double x, double nu) {
  return (0.5 * nu - 1.0) * std::log(x) - 0.5 * x - 0.5 * nu * std::numbers::ln2 - std::lgamma(0.5 * nu);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan"; }

}  // namespace

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng make_rng(std::uint64_t master, std::uint64_t stream) { return Rng(mix_seed(master, stream)); }

double CirSpec::degrees_of_freedom() const { return 4.0 * mu * theta / (sigma * sigma); }

double CirSpec::transition_constant() const {
  return 2.0 * mu / (sigma * sigma * (1.0 - std::exp(-mu * dt)));
}

ArSpec ArSpec::equal_weights(int d) {
  if (d < 1) throw std::invalid_argument("AR order must be >= 1");
  ArSpec s;
  s.d = d;
  s.phi.assign(static_cast<std::size_t>(d), 1.0 / (2.0 * d));
  return s;
}

void validate(const ModelSpec& spec) {
  std::visit(overloaded{
                 [](const MixtureSpec& s) {
                   if (s.d < 1 || s.components < 1) throw std::invalid_argument("mixture needs d >= 1 and n_p >= 1");
                 },
                 [](const CirSpec& s) {
                   if (!(s.mu > 0 && s.theta > 0 && s.sigma > 0 && s.dt > 0)) {
                     throw std::invalid_argument("CIR parameters mu, theta, sigma, dt must be positive");
                   }
                 },
                 [](const ArSpec& s) {
                   if (s.d < 1 || static_cast<int>(s.phi.size()) != s.d) {
                     throw std::invalid_argument("AR needs d >= 1 and exactly d coefficients");
                   }
                   if (s.burn_in < 0) throw std::invalid_argument("AR burn-in must be >= 0");
                 },
                 [](const BetaSpec& s) {
                   if (s.d < 1) throw std::invalid_argument("Beta model needs d >= 1");
                 },
                 [](const CsvSpec& s) {
                   if (s.path.empty() || s.x_cols.empty() || s.y_col.empty()) {
                     throw std::invalid_argument("CSV model needs a path, x columns and a y column");
                   }
                 },
             },
             spec);
}

std::string model_name(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const MixtureSpec& s) { return "mixture(d=" + std::to_string(s.d) + ")"; },
                        [](const CirSpec&) { return std::string("cir"); },
                        [](const ArSpec& s) { return "ar(d=" + std::to_string(s.d) + ")"; },
                        [](const BetaSpec& s) { return "beta(d=" + std::to_string(s.d) + ")"; },
                        [](const CsvSpec& s) { return "csv(" + s.path + ")"; },
                    },
                    spec);
}

// Mixture

GroundTruth mixture_truth(const MixtureSpec& spec) {
  validate(spec);
  const int np = spec.components;
  const int d = spec.d;
  return [np, d](const Eigen::Ref<const Vector>& x, double y) {
    if (x.size() != d) throw std::invalid_argument("mixture truth: covariate dimension mismatch");
    // theta_i differs from x only in the last coordinate; the shared factor cancels.
    std::vector<double> logw(static_cast<std::size_t>(np));
    double top = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= np; ++i) {
      const double z = x(d - 1) - std::cos(kTwoPi * i / np);
      logw[static_cast<std::size_t>(i - 1)] = -0.5 * z * z;
      top = std::max(top, logw[static_cast<std::size_t>(i - 1)]);
    }
    double num = 0.0;
    double den = 0.0;
    for (int i = 1; i <= np; ++i) {
      const double w = std::exp(logw[static_cast<std::size_t>(i - 1)] - top);
      den += w;
      num += w * normal_pdf(y - std::sin(kTwoPi * i / np));
    }
    return num / den;
  };
}

SyntheticSample gen_mixture(const MixtureSpec& spec, Index n, Rng& rng) {
  validate(spec);
  if (n < 1) throw std::invalid_argument("mixture sample size must be >= 1");
  std::uniform_int_distribution<int> component(1, spec.components);
  std::normal_distribution<double> noise(0.0, 1.0);
  SyntheticSample s;
  s.data.x.resize(n, spec.d);
  s.data.y.resize(n);
  for (Index r = 0; r < n; ++r) {
    const int i = component(rng);
    const double angle = kTwoPi * i / spec.components;
    for (int l = 0; l < spec.d - 1; ++l) s.data.x(r, l) = noise(rng);
    s.data.x(r, spec.d - 1) = std::cos(angle) + noise(rng);
    s.data.y(r) = std::sin(angle) + noise(rng);
  }
  s.truth = mixture_truth(spec);
  return s;
}

// Noncentral chi-squared

double noncentral_chi2_pdf(double x, double df, double noncentrality) {
  if (!(df > 0.0) || !(noncentrality >= 0.0)) throw std::invalid_argument("noncentral chi2: invalid parameters");
  if (!(x > 0.0)) return 0.0;
  const double half = 0.5 * noncentrality;
  if (half == 0.0) return std::exp(log_chi2_pdf(x, df));
  const double log_half = std::log(half);
  auto log_term = [&](long j) {
    const double jd = static_cast<double>(j);
    return -half + jd * log_half - std::lgamma(jd + 1.0) + log_chi2_pdf(x, df + 2.0 * jd);
  };
  // The log-term is concave in j: climb to its peak, then sum outwards.
  long peak = static_cast<long>(std::floor(half));
  double top = log_term(peak);
  for (int dir : {1, -1}) {
    while (peak + dir >= 0) {
      const double next = log_term(peak + dir);
      if (!(next > top)) break;
      peak += dir;
      top = next;
    }
  }
  double sum = 1.0;
  for (long j = peak + 1;; ++j) {
    const double t = std::exp(log_term(j) - top);
    sum += t;
    if (t < kSeriesTolerance * sum) break;
  }
  for (long j = peak - 1; j >= 0; --j) {
    const double t = std::exp(log_term(j) - top);
    sum += t;
    if (t < kSeriesTolerance * sum) break;
  }
  return std::exp(top) * sum;
}

double sample_noncentral_chi2(double df, double noncentrality, Rng& rng) {
  if (!(df > 0.0) || !(noncentrality >= 0.0)) throw std::invalid_argument("noncentral chi2: invalid parameters");
  long j = 0;
  if (noncentrality > 0.0) {
    std::poisson_distribution<long> poisson(0.5 * noncentrality);
    j = poisson(rng);
  }
  std::gamma_distribution<double> gamma(0.5 * df + static_cast<double>(j), 2.0);
  return gamma(rng);
}

// CIR

GroundTruth cir_truth(const CirSpec& spec) {
  validate(spec);
  const double df = spec.degrees_of_freedom();
  const double two_c = 2.0 * spec.transition_constant();
  const double decay = std::exp(-spec.mu * spec.dt);
  return [df, two_c, decay](const Eigen::Ref<const Vector>& x, double y) {
    if (x.size() != 1) throw std::invalid_argument("CIR truth: covariate must be scalar");
    if (!(y > 0.0)) return 0.0;
    return two_c * noncentral_chi2_pdf(two_c * y, df, two_c * x(0) * decay);
  };
}

PathSample gen_cir(const CirSpec& spec, Index m, Rng& rng) {
  validate(spec);
  if (m < 2) throw std::invalid_argument("CIR path needs at least 2 observations");
  const double df = spec.degrees_of_freedom();
  const double two_c = 2.0 * spec.transition_constant();
  const double decay = std::exp(-spec.mu * spec.dt);
  std::gamma_distribution<double> stationary(2.0 * spec.mu * spec.theta / (spec.sigma * spec.sigma),
                                             spec.sigma * spec.sigma / (2.0 * spec.mu));
  PathSample s;
  s.path.resize(m);
  s.path(0) = stationary(rng);
  for (Index t = 1; t < m; ++t) {
    s.path(t) = sample_noncentral_chi2(df, two_c * s.path(t - 1) * decay, rng) / two_c;
  }
  s.pairs.x = s.path.head(m - 1);
  s.pairs.y = s.path.tail(m - 1);
  s.truth = cir_truth(spec);
  return s;
}

// AR

GroundTruth ar_truth(const ArSpec& spec) {
  validate(spec);
  const Vector phi = Eigen::Map<const Vector>(spec.phi.data(), spec.d);
  return [phi](const Eigen::Ref<const Vector>& x, double y) {
    if (x.size() != phi.size()) throw std::invalid_argument("AR truth: covariate dimension mismatch");
    return normal_pdf(y - phi.dot(x));
  };
}

PathSample gen_ar(const ArSpec& spec, Index m, Rng& rng) {
  validate(spec);
  const Index d = spec.d;
  if (m < d + 1) throw std::invalid_argument("AR path needs at least d + 1 observations");
  std::normal_distribution<double> initial(0.0, std::sqrt(4.0 / 3.0));
  std::normal_distribution<double> noise(0.0, 1.0);
  const Index total = d + spec.burn_in + m;
  Vector full(total);
  for (Index t = 0; t < d; ++t) full(t) = initial(rng);
  for (Index t = d; t < total; ++t) {
    double mean = 0.0;
    for (Index i = 1; i <= d; ++i) mean += spec.phi[static_cast<std::size_t>(i - 1)] * full(t - i);
    full(t) = mean + noise(rng);
  }
  PathSample s;
  s.path = full.tail(m);
  const Index pairs = m - d;
  s.pairs.x.resize(pairs, d);
  s.pairs.y.resize(pairs);
  for (Index k = 0; k < pairs; ++k) {
    const Index t = d + k;
    for (Index i = 1; i <= d; ++i) s.pairs.x(k, i - 1) = s.path(t - i);
    s.pairs.y(k) = s.path(t);
  }
  s.truth = ar_truth(spec);
  return s;
}

// Beta

GroundTruth beta_truth(const BetaSpec& spec) {
  validate(spec);
  const int d = spec.d;
  return [d](const Eigen::Ref<const Vector>& x, double y) {
    if (x.size() != d) throw std::invalid_argument("Beta truth: covariate dimension mismatch");
    if (y < 0.0 || y > 1.0) return 0.0;
    const double alpha = 1.0 + x.squaredNorm() / d;
    if (y == 0.0) return alpha == 1.0 ? 1.0 : 0.0;
    return alpha * std::pow(y, alpha - 1.0);
  };
}

SyntheticSample gen_beta(const BetaSpec& spec, Index n, Rng& rng) {
  validate(spec);
  if (n < 1) throw std::invalid_argument("Beta sample size must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SyntheticSample s;
  s.data.x.resize(n, spec.d);
  s.data.y.resize(n);
  for (Index r = 0; r < n; ++r) {
    for (int l = 0; l < spec.d; ++l) s.data.x(r, l) = unif(rng);
    const double alpha = 1.0 + s.data.x.row(r).squaredNorm() / spec.d;
    // Beta(alpha, 1) has CDF y^alpha.
    s.data.y(r) = std::pow(unif(rng), 1.0 / alpha);
  }
  s.truth = beta_truth(spec);
  return s;
}

GroundTruth truth_for(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const MixtureSpec& s) { return mixture_truth(s); },
                        [](const CirSpec& s) { return cir_truth(s); },
                        [](const ArSpec& s) { return ar_truth(s); },
                        [](const BetaSpec& s) { return beta_truth(s); },
                        [](const CsvSpec&) -> GroundTruth {
                          throw std::invalid_argument("no ground truth is available for CSV data");
                        },
                    },
                    spec);
}

AuxiliaryGrid sample_aux(double lo, double hi, Index n_u, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("auxiliary support must satisfy lo < hi");
  if (n_u < 1) throw std::invalid_argument("auxiliary sample size must be >= 1");
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector u(n_u);
  for (Index j = 0; j < n_u; ++j) u(j) = unif(rng);
  return AuxiliaryGrid::make(std::move(u), lo, hi);
}

// CSV

CsvData load_csv(const std::string& path, const std::vector<std::string>& x_cols, const std::string& y_col,
                 std::ostream* warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("CSV file '" + path + "' is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const std::vector<std::string> header = split_csv_line(line);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("CSV file '" + path + "' has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> cols;
  for (const auto& name : x_cols) cols.push_back(column_of(name));
  cols.push_back(column_of(y_col));

  std::vector<std::vector<std::string>> rows;
  std::size_t dropped = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(header.size()));
    }
    std::vector<std::string> picked;
    bool missing = false;
    for (std::size_t c : cols) {
      missing = missing || is_missing(fields[c]);
      picked.push_back(fields[c]);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(picked));
  }
  if (rows.empty()) throw std::runtime_error("CSV file '" + path + "' has no complete rows");

  const std::size_t k = cols.size();
  std::vector<bool> categorical(k, false);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t numeric = 0;
    for (const auto& r : rows) numeric += parse_number(r[c]).has_value() ? 1 : 0;
    if (numeric == 0) {
      categorical[c] = true;
    } else if (numeric != rows.size()) {
      const std::string& name = c + 1 == k ? y_col : x_cols[c];
      throw std::invalid_argument("CSV column '" + name + "' mixes numeric and non-numeric values");
    }
  }

  CsvData out;
  out.x_names = x_cols;
  out.dropped_rows = dropped;
  const auto n = static_cast<Index>(rows.size());
  out.data.x.resize(n, static_cast<Index>(x_cols.size()));
  out.data.y.resize(n);
  std::vector<std::map<std::string, double>> codes(k);
  for (Index r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      const std::string& field = rows[static_cast<std::size_t>(r)][c];
      double v = 0.0;
      if (categorical[c]) {
        auto [it, inserted] = codes[c].try_emplace(field, static_cast<double>(codes[c].size()));
        v = it->second;
      } else {
        v = *parse_number(field);
      }
      if (c + 1 == k) {
        out.data.y(r) = v;
      } else {
        out.data.x(r, static_cast<Index>(c)) = v;
      }
    }
  }
  if (dropped > 0 && warnings != nullptr) {
    *warnings << "warning: dropped " << dropped << " row(s) with missing values from '" << path << "'\n";
  }
  return out;
}

}  // namespace grscde
