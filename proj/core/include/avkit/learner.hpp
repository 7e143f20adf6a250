#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "avkit/sparse.hpp"

namespace avkit {

struct TrainConfig {
  double C = 1.0;
  std::vector<double> C_grid = {0.001, 0.01, 0.1, 1, 10, 100, 1000};
  std::size_t inner_folds = 5;
  double tolerance = 1e-4;
  std::size_t max_iterations = 1000;

  void validate() const;
};

// 0.5 * ||w||^2 + C * sum_i log(1 + exp(-s_i (w.x_i + b))), s_i = +-1.
// Parameters are laid out as [w_0 .. w_{D-1}, b].
class BinaryLogisticObjective {
public:
  BinaryLogisticObjective(std::span<const SparseVector> rows, std::span<const std::size_t> labels,
                          std::size_t dimension, double C);

  std::size_t parameter_count() const noexcept { return dimension_ + 1; }
  double operator()(std::span<const double> params, std::span<double> grad) const;

private:
  std::span<const SparseVector> rows_;
  std::span<const std::size_t> labels_;
  std::size_t dimension_;
  double C_;
};

// 0.5 * ||W||_F^2 + C * sum_i -log softmax(W x_i + b)[y_i].
// Parameters: K rows of D weights, then K biases.
class SoftmaxObjective {
public:
  SoftmaxObjective(std::span<const SparseVector> rows, std::span<const std::size_t> labels,
                   std::size_t num_classes, std::size_t dimension, double C);

  std::size_t parameter_count() const noexcept { return classes_ * (dimension_ + 1); }
  double operator()(std::span<const double> params, std::span<double> grad) const;

private:
  std::span<const SparseVector> rows_;
  std::span<const std::size_t> labels_;
  std::size_t classes_;
  std::size_t dimension_;
  double C_;
};

struct TrainedModel {
  // Binary: {negative, positive} with a single weight row scoring the positive class.
  std::vector<std::string> classes;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
  double C = 1.0;
  std::size_t dimension = 0;
  std::uint64_t fingerprint = 0;
  std::size_t iterations = 0;
  bool converged = false;

  bool is_binary() const noexcept { return weights.size() == 1; }
  double score(const SparseVector& x, std::size_t row = 0) const;

  std::string to_text() const;
  static TrainedModel from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  // Throws Error if the stored fingerprint differs from expected_fingerprint.
  static TrainedModel load(const std::filesystem::path& path, std::uint64_t expected_fingerprint);
};

struct Prediction {
  std::string instance_id;
  std::vector<double> posteriors; // aligned with model.classes
  std::size_t predicted = 0;
};

// Labels are 0 (negative) / 1 (positive).
TrainedModel train_binary(std::span<const SparseVector> X, std::span<const std::size_t> y,
                          const TrainConfig& config,
                          std::vector<std::string> classes = {"negative", "positive"},
                          std::uint64_t fingerprint = 0);

// Labels index into classes.
TrainedModel train_multiclass(std::span<const SparseVector> X, std::span<const std::size_t> y,
                              std::vector<std::string> classes, const TrainConfig& config,
                              std::uint64_t fingerprint = 0);

Prediction predict_proba(const TrainedModel& model, const SparseVector& x);

struct TuneResult {
  double C = 1.0;
  std::size_t folds = 0;
  bool skipped = false;
  std::vector<double> scores; // aligned with the grid
  std::string note;
};

// Grid search over config.C_grid with stratified group folds: instances sharing
// a group id always land in the same fold. Binary problems (2 classes) are
// scored by F1 of class 1, others by macro-F1, pooled over folds. Ties go to
// the smaller C.
TuneResult tune_C(std::span<const SparseVector> X, std::span<const std::size_t> y,
                  std::size_t num_classes, std::span<const std::string> groups,
                  const TrainConfig& config, std::uint64_t seed, unsigned threads = 1);

// Fold index per instance; folds are balanced per class over groups.
std::vector<std::size_t> stratified_group_folds(std::span<const std::size_t> y,
                                                std::span<const std::string> groups,
                                                std::size_t folds, std::uint64_t seed);

// Per-feature weight x value terms of the decision score, largest magnitude first;
// top_k = 0 keeps them all.
struct Contribution {
  std::uint32_t column = 0;
  std::string name;
  double contribution = 0.0;
};

std::vector<Contribution> explain(const TrainedModel& model, const SparseVector& x, std::size_t top_k,
                                  const std::function<std::string(std::uint32_t)>& name_of = {});

} // namespace avkit
