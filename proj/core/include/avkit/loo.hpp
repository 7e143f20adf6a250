#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avkit/corpus.hpp"
#include "avkit/dro.hpp"
#include "avkit/features.hpp"
#include "avkit/learner.hpp"
#include "avkit/metrics.hpp"

namespace avkit {

struct PipelineConfig {
  FeatureConfig features;
  std::size_t min_tokens = 400;
  bool include_full_texts = true;
  bool dro_enabled = true;
  DroConfig dro;
  TrainConfig learner;
  // Class 1 of the verifier; every other labelled author is class 0.
  std::string positive_author;

  void validate() const;
};

// Feature counts of every labelled text and of its segments, extracted once
// and shared by all folds (extraction never looks at other instances).
class InstanceBank {
public:
  InstanceBank(const Corpus& corpus, const FeatureConfig& features, std::size_t min_tokens,
               unsigned threads = 1);

  const Corpus& corpus() const noexcept { return *corpus_; }
  const ExtractedInstance& full(std::size_t doc) const { return full_.at(doc); }
  const std::vector<ExtractedInstance>& segments(std::size_t doc) const { return segments_.at(doc); }
  std::size_t document_count() const noexcept { return full_.size(); }

private:
  const Corpus* corpus_;
  std::vector<ExtractedInstance> full_;
  std::vector<std::vector<ExtractedInstance>> segments_;
};

struct LabelledInstance {
  const ExtractedInstance* features = nullptr;
  std::size_t label = 0;
};

// Training instances (full texts and/or segments) of the given documents.
std::vector<LabelledInstance> training_instances(const InstanceBank& bank,
                                                 const std::vector<std::size_t>& docs,
                                                 const std::vector<std::size_t>& labels,
                                                 bool include_full_texts);

// A trained pipeline: fitted space, optional DRO profiles, and the model.
struct FittedPipeline {
  FeatureSpace space;
  std::optional<DistributionalProfiles> profiles;
  TrainedModel model;
  TuneResult tuning;
  std::vector<std::string> training_ids;
  std::size_t training_examples = 0; // after oversampling
  std::size_t synthetic_examples = 0;
};

// Fits feature space, DRO (binary only, when enabled), tunes C and trains.
FittedPipeline fit_pipeline(std::span<const LabelledInstance> training,
                            std::vector<std::string> classes, const PipelineConfig& config,
                            std::uint64_t seed, unsigned threads = 1);

// Vectorizes a held-out instance; with DRO, extends it using replica's seed.
SparseVector represent(const FittedPipeline& fitted, const ExtractedInstance& inst,
                       const PipelineConfig& config, std::uint64_t seed, std::size_t replica = 0);

enum class LooTask { Verification, Attribution };

// What a fold saw; lets callers audit leakage.
struct FoldAudit {
  std::string held_out_id;
  std::vector<std::string> training_ids;
  const FeatureSpace* space = nullptr;
  std::size_t profile_instances = 0; // latent dimension when DRO ran
};

struct LooOptions {
  LooTask task = LooTask::Verification;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // Attribution: authors forming the class set (empty = all labelled authors).
  std::vector<std::string> candidate_authors;
  // Evaluate only these held-out ids (training still uses every other text).
  std::optional<std::set<std::string>> held_out;
  std::function<void(const FoldAudit&)> observer;
};

struct LooRecord {
  std::string id;
  std::string author;
  std::string true_class;
  std::string predicted_class;
  double positive_posterior = 0.0; // verification only
  double true_class_posterior = 0.0;
  double fitted_C = 0.0;
  std::size_t tune_folds = 0;
  double seconds = 0.0;
};

struct LooReport {
  LooTask task = LooTask::Verification;
  std::vector<std::string> classes;
  std::vector<LooRecord> records;
  std::vector<std::string> warnings;
  ContingencyTable table; // verification
  double f1 = 0.0;
  double soft_f1 = 0.0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ContingencyTable> per_class; // attribution
  std::vector<std::vector<std::size_t>> confusion;

  // Record indices ordered by ascending confidence in the correct class.
  std::vector<std::size_t> hardest() const;
  // Recomputes the aggregate metrics from records.
  void aggregate();
};

LooReport loo_run(const Corpus& corpus, const PipelineConfig& config, const LooOptions& options);
LooReport loo_run(const InstanceBank& bank, const PipelineConfig& config, const LooOptions& options);

} // namespace avkit
