#include "avkit/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avkit {

double SparseVector::dot(std::span<const double> dense) const {
  double s = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * dense[indices[k]];
  return s;
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

double SparseVector::value_at(std::uint32_t column) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), column);
  if (it == indices.end() || *it != column) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

void SparseVector::validate() const {
  if (indices.size() != values.size()) throw std::logic_error("sparse vector: index/value size mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= dimension) throw std::logic_error("sparse vector: index out of range");
    if (k > 0 && indices[k] <= indices[k - 1]) throw std::logic_error("sparse vector: indices not increasing");
    if (!std::isfinite(values[k])) throw std::logic_error("sparse vector: non-finite value");
    if (values[k] == 0.0) throw std::logic_error("sparse vector: explicit zero");
  }
}

double dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] == b.indices[j]) {
      s += a.values[i++] * b.values[j++];
    } else if (a.indices[i] < b.indices[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  const double na = a.squared_norm();
  const double nb = b.squared_norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / std::sqrt(na * nb);
}

SparseVector concat(const SparseVector& a, const SparseVector& b) {
  SparseVector out;
  out.instance_id = a.instance_id;
  out.dimension = a.dimension + b.dimension;
  out.indices.reserve(a.nnz() + b.nnz());
  out.values.reserve(a.nnz() + b.nnz());
  out.indices = a.indices;
  out.values = a.values;
  const auto shift = static_cast<std::uint32_t>(a.dimension);
  for (std::size_t k = 0; k < b.indices.size(); ++k) {
    out.indices.push_back(b.indices[k] + shift);
    out.values.push_back(b.values[k]);
  }
  return out;
}

} // namespace avkit
