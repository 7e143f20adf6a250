#include "avkit/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace avkit {

double f1(const ContingencyTable& t) {
  const std::size_t denom = 2 * t.tp + t.fp + t.fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(t.tp) / static_cast<double>(denom);
}

double f1(const SoftContingencyTable& t) {
  const double denom = 2.0 * t.tp + t.fp + t.fn;
  if (denom == 0.0) return 1.0;
  return 2.0 * t.tp / denom;
}

ContingencyTable hard_table(std::span<const BinaryOutcome> outcomes) {
  ContingencyTable t;
  for (const auto& o : outcomes) {
    const bool pred = o.posterior > 0.5;
    if (o.positive) {
      pred ? ++t.tp : ++t.fn;
    } else {
      pred ? ++t.fp : ++t.tn;
    }
  }
  return t;
}

SoftContingencyTable soft_table(std::span<const BinaryOutcome> outcomes) {
  SoftContingencyTable t;
  for (const auto& o : outcomes) {
    if (!(o.posterior >= 0.0 && o.posterior <= 1.0)) {
      throw std::invalid_argument("soft_f1: posterior outside [0, 1]");
    }
    if (o.positive) {
      t.tp += o.posterior;
      t.fn += 1.0 - o.posterior;
    } else {
      t.fp += o.posterior;
      t.tn += 1.0 - o.posterior;
    }
  }
  return t;
}

double soft_f1(std::span<const BinaryOutcome> outcomes) { return f1(soft_table(outcomes)); }

double vanilla_accuracy(const ContingencyTable& t) {
  if (t.total() == 0) throw std::invalid_argument("vanilla_accuracy: empty table");
  return static_cast<double>(t.tp + t.tn) / static_cast<double>(t.total());
}

double macro_f1(std::span<const ContingencyTable> per_class) {
  if (per_class.empty()) throw std::invalid_argument("macro_f1: no classes");
  double sum = 0.0;
  for (const auto& t : per_class) sum += f1(t);
  return sum / static_cast<double>(per_class.size());
}

std::vector<ContingencyTable> one_vs_rest(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                          std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("one_vs_rest: size mismatch");
  std::vector<ContingencyTable> out(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t k = 0; k < num_classes; ++k) {
      const bool t = truth[i] == k;
      const bool p = predicted[i] == k;
      if (t && p) ++out[k].tp;
      else if (!t && p) ++out[k].fp;
      else if (t && !p) ++out[k].fn;
      else ++out[k].tn;
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const std::size_t> truth,
                                                       std::span<const std::size_t> predicted,
                                                       std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> m(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++m.at(truth[i]).at(predicted[i]);
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace avkit
