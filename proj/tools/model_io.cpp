#include "model_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace grscde::cli {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix matrix_from(const json& j, Index cols) {
  Matrix m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const Vector row = vector_from(j.at(static_cast<std::size_t>(i)));
    if (row.size() != cols) throw std::runtime_error("model file: ragged matrix");
    m.row(i) = row.transpose();
  }
  return m;
}

json optional_number(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double number_or_nan(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

}  // namespace

void save_model(const SavedModel& model, const std::string& path) {
  const FittedCDE& fit = model.fit;
  const Hyperparameters& p = fit.params;
  json j;
  j["format"] = "grscde-model";
  j["version"] = kFormatVersion;
  j["method"] = std::string(to_string(model.method));
  j["normalize"] = fit.normalize;
  j["quadrature_points"] = fit.quadrature_points;
  j["x_names"] = model.x_names;
  j["y_name"] = model.y_name;
  j["kernel"] = {{"hx", to_json(p.kernel.hx)}, {"hy", p.kernel.hy}};
  j["hx_factor"] = p.hx_factor;
  j["lambda"] = optional_number(p.lambda);
  j["lambda2"] = optional_number(p.lambda2);
  j["iterations"] = p.iterations;
  j["aux"] = {{"lo", model.aux.lo}, {"hi", model.aux.hi}, {"u", to_json(model.aux.u)}};
  j["train"] = {{"x", to_json(model.train.x)}, {"y", to_json(model.train.y)}};
  if (fit.kind == EstimatorKind::grs_landweber || fit.kind == EstimatorKind::grs_tikhonov) {
    const auto& grs = static_cast<const GrsDensity&>(*fit.model);
    const CoefficientRep& rep = grs.rep();
    std::string f0;
    switch (rep.f0.kind()) {
      case InitialFunction::Kind::zero:
        f0 = "zero";
        break;
      case InitialFunction::Kind::uniform:
        f0 = "uniform";
        break;
      case InitialFunction::Kind::custom:
        throw std::invalid_argument("a custom initial function cannot be saved");
    }
    j["rep"] = {{"f0", f0}, {"a", to_json(rep.a)}, {"beta", rep.beta}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("error writing model file '" + path + "'");
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  SavedModel m;
  try {
    const json j = json::parse(in);
    if (j.at("format") != "grscde-model" || j.at("version") != kFormatVersion) {
      throw std::runtime_error("not a grscde model file");
    }
    m.method = parse_method(j.at("method").get<std::string>());
    m.x_names = j.at("x_names").get<std::vector<std::string>>();
    m.y_name = j.at("y_name").get<std::string>();

    Hyperparameters p;
    p.kernel = KernelConfig::make(vector_from(j.at("kernel").at("hx")), j.at("kernel").at("hy").get<double>());
    p.hx_factor = j.at("hx_factor").get<double>();
    p.lambda = number_or_nan(j.at("lambda"));
    p.lambda2 = number_or_nan(j.at("lambda2"));
    p.iterations = j.at("iterations").get<int>();
    if (m.method == Method::grs_els) p.step = StepPolicy::Kind::line_search;
    if (m.method == Method::grs_fixed) p.step = StepPolicy::Kind::fixed;

    const Index d = p.kernel.dim();
    m.aux = AuxiliaryGrid::make(vector_from(j.at("aux").at("u")), j.at("aux").at("lo").get<double>(),
                                j.at("aux").at("hi").get<double>());
    m.train.x = matrix_from(j.at("train").at("x"), d);
    m.train.y = vector_from(j.at("train").at("y"));
    m.train.validate();

    const EstimatorKind kind = kind_of(m.method);
    switch (kind) {
      case EstimatorKind::grs_landweber:
      case EstimatorKind::grs_tikhonov: {
        const json& r = j.at("rep");
        CoefficientRep rep;
        const std::string f0 = r.at("f0").get<std::string>();
        if (f0 == "uniform") {
          rep.f0 = InitialFunction::uniform();
        } else if (f0 != "zero") {
          throw std::runtime_error("unknown initial function '" + f0 + "'");
        }
        rep.a = matrix_from(r.at("a"), m.aux.size());
        rep.beta = r.at("beta").get<double>();
        auto data = std::make_shared<const FitData>(FitData::make(m.train, m.aux, p.kernel));
        m.fit = grs_fitted(kind, std::move(data), std::move(rep), p);
        break;
      }
      case EstimatorKind::nw:
        m.fit = nw_fit(m.train, m.aux, p.kernel);
        break;
      case EstimatorKind::kmd:
        m.fit = kmd_fit(m.train, m.aux, p.kernel, p.lambda);
        break;
      case EstimatorKind::cdo:
        m.fit = cdo_fit(m.train, m.aux, p.kernel, p.lambda, p.lambda2);
        break;
    }
    m.fit.params = p;
    m.fit.normalize = j.at("normalize").get<bool>();
    m.fit.quadrature_points = j.at("quadrature_points").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file '" + path + "': " + e.what());
  }
  return m;
}

}  // namespace grscde::cli
