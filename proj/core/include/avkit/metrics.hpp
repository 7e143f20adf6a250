#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace avkit {

struct ContingencyTable {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ContingencyTable&) const = default;
};

struct SoftContingencyTable {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  double tn = 0.0;
};

// One binary decision: the true label and the posterior of the positive class.
struct BinaryOutcome {
  bool positive = false;
  double posterior = 0.0;
};

// 2TP / (2TP + FP + FN); 1.0 when the denominator is zero.
double f1(const ContingencyTable& table);
double f1(const SoftContingencyTable& table);

// Posterior > 0.5 counts as a positive prediction.
ContingencyTable hard_table(std::span<const BinaryOutcome> outcomes);
// Throws std::invalid_argument for posteriors outside [0, 1].
SoftContingencyTable soft_table(std::span<const BinaryOutcome> outcomes);
double soft_f1(std::span<const BinaryOutcome> outcomes);

// Throws std::invalid_argument on an empty table.
double vanilla_accuracy(const ContingencyTable& table);

// Unweighted mean of per-class F1; throws std::invalid_argument with no classes.
double macro_f1(std::span<const ContingencyTable> per_class);

std::vector<ContingencyTable> one_vs_rest(std::span<const std::size_t> truth,
                                          std::span<const std::size_t> predicted,
                                          std::size_t num_classes);

// Rows: true class; columns: predicted class.
std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const std::size_t> truth,
                                                       std::span<const std::size_t> predicted,
                                                       std::size_t num_classes);

double median(std::vector<double> values);

} // namespace avkit
