#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace avkit {

// Sparse real vector with strictly increasing column indices and no stored zeros.
struct SparseVector {
  std::string instance_id;
  std::size_t dimension = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }

  double dot(std::span<const double> dense) const;
  double squared_norm() const;
  double value_at(std::uint32_t column) const;

  // Checks the representation invariants; throws std::logic_error on violation.
  void validate() const;

  bool operator==(const SparseVector&) const = default;
};

double dot(const SparseVector& a, const SparseVector& b);
double cosine(const SparseVector& a, const SparseVector& b);

// Concatenates b after a; b's columns are shifted by a.dimension.
SparseVector concat(const SparseVector& a, const SparseVector& b);

} // namespace avkit
