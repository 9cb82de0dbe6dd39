#include "grscde/types.hpp"

#include <stdexcept>
#include <string>

namespace grscde {

PairedDataset PairedDataset::subset(std::span<const Index> rows) const {
  PairedDataset out;
  out.x.resize(static_cast<Index>(rows.size()), x.cols());
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r < 0 || r >= size()) {
      throw std::out_of_range("row index " + std::to_string(r) + " outside dataset of size " +
                              std::to_string(size()));
    }
    out.x.row(static_cast<Index>(k)) = x.row(r);
    out.y(static_cast<Index>(k)) = y(r);
  }
  return out;
}

void PairedDataset::validate() const {
  if (x.rows() != y.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(x.rows()) + " covariate rows but " +
                                std::to_string(y.size()) + " responses");
  }
}

AuxiliaryGrid AuxiliaryGrid::make(Vector u, double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("auxiliary support must satisfy lo < hi");
  }
  for (Index j = 0; j < u.size(); ++j) {
    if (!(u(j) >= lo && u(j) <= hi)) {
      throw std::invalid_argument("auxiliary point outside its support");
    }
  }
  AuxiliaryGrid g;
  g.u = std::move(u);
  g.lo = lo;
  g.hi = hi;
  return g;
}

Vector AuxiliaryGrid::density(const Vector& ys) const {
  Vector out(ys.size());
  for (Index i = 0; i < ys.size(); ++i) out(i) = density(ys(i));
  return out;
}

}  // namespace grscde
