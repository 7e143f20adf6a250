#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "avkit/corpus.hpp"
#include "avkit/features.hpp"
#include "avkit/loo.hpp"

namespace avkit {

// ---- greedy iterative ablation ----

enum class AblationMode { ExactLoo, Hardest10 };

// Compared lexicographically: exact mode uses (F1, soft F1), hardest-10 mode
// uses (accuracy on the guide texts, mean confidence in the correct class).
struct AblationScore {
  double primary = 0.0;
  double secondary = 0.0;

  auto operator<=>(const AblationScore&) const = default;
};

struct AblationIteration {
  std::vector<FeatureBlock> pool;
  AblationScore pool_score;
  std::vector<std::pair<FeatureBlock, AblationScore>> candidates; // score without that block
  FeatureBlock best_removal{};
  AblationScore best_score;
  bool removed = false;
};

struct AblationReport {
  AblationMode mode = AblationMode::ExactLoo;
  std::vector<AblationIteration> iterations;
  std::vector<FeatureBlock> final_pool;
  std::vector<std::string> guide_texts; // hardest-10 mode
};

AblationReport ablate(const Corpus& corpus, const PipelineConfig& config,
                      const std::set<FeatureBlock>& initial_pool, AblationMode mode,
                      std::uint64_t seed, unsigned threads = 1);

// ---- disputed-text verification ----

struct Verdict {
  std::string disputed_id;
  std::vector<double> replica_posteriors;
  double median_posterior = 0.0;
  std::string predicted_class;
  double fitted_C = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t corpus_fingerprint = 0;
  std::size_t training_examples = 0;
};

Verdict verify_disputed(const Corpus& corpus, const std::string& disputed_id,
                        const PipelineConfig& config, std::size_t replicas, std::uint64_t seed,
                        unsigned threads = 1);

// ---- authorship attribution ----

// Authors with at least min_texts labelled texts, sorted.
std::vector<std::string> candidate_authors(const Corpus& corpus, std::size_t min_texts);

struct AttributionResult {
  std::string disputed_id;
  std::size_t min_texts = 1;
  std::vector<std::string> candidates;
  std::vector<std::pair<std::string, double>> ranking; // descending posterior
  double fitted_C = 0.0;
};

// Multiclass model without DRO over the candidate authors' texts and segments.
AttributionResult attribute_disputed(const Corpus& corpus, const std::string& disputed_id,
                                     std::size_t min_texts, const PipelineConfig& config,
                                     std::uint64_t seed, unsigned threads = 1);

struct AttributionContingency {
  std::vector<std::string> authors;
  std::vector<std::vector<std::size_t>> matrix; // rows true, columns predicted
  LooReport loo;
};

AttributionContingency attribution_contingency(const Corpus& corpus, std::size_t min_texts,
                                               const PipelineConfig& config, std::uint64_t seed,
                                               unsigned threads = 1);

// ---- similarity ranking ----

struct SimilarText {
  std::string id;
  std::string author;
  std::string title;
  double cosine = 0.0;
};

// Cosine between natural full-text vectors, space fitted on all labelled full texts.
std::vector<SimilarText> rank_similar(const Corpus& corpus, const std::string& disputed_id,
                                      const FeatureConfig& features, std::size_t top_k);

} // namespace avkit
