#pragma once

#include "grscde/estimators.hpp"
#include "grscde/selection.hpp"

#include <string>
#include <vector>

namespace grscde::cli {

/// A fitted estimator together with what is needed to rebuild it.
struct SavedModel {
  Method method = Method::grs_els;
  std::vector<std::string> x_names;
  std::string y_name;
  PairedDataset train;
  AuxiliaryGrid aux;
  FittedCDE fit;
};

void save_model(const SavedModel& model, const std::string& path);
/// Throws std::runtime_error on unreadable or malformed files.
SavedModel load_model(const std::string& path);

}  // namespace grscde::cli
