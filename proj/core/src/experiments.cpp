#include "avkit/experiments.hpp"

#include <algorithm>
#include <map>

#include "avkit/error.hpp"
#include "avkit/metrics.hpp"
#include "avkit/parallel.hpp"

namespace avkit {

namespace {

std::size_t require_disputed(const Corpus& corpus, const std::string& id) {
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    if (corpus.documents[d].id != id) continue;
    if (!corpus.documents[d].is_disputed()) {
      throw ExperimentError("text '" + id + "' is a labelled training text, not a disputed one (author must be " +
                            std::string(kUnknownAuthor) + ")");
    }
    return d;
  }
  throw ExperimentError("no text with id '" + id + "' in the corpus");
}

AblationScore score_report(const LooReport& report, AblationMode mode) {
  if (mode == AblationMode::ExactLoo) return {report.f1, report.soft_f1};
  if (report.records.empty()) return {};
  double correct = 0.0;
  double confidence = 0.0;
  for (const auto& r : report.records) {
    correct += r.true_class == r.predicted_class;
    confidence += r.true_class_posterior;
  }
  const double n = static_cast<double>(report.records.size());
  return {correct / n, confidence / n};
}

} // namespace

AblationReport ablate(const Corpus& corpus, const PipelineConfig& config, const std::set<FeatureBlock>& initial_pool,
                      AblationMode mode, std::uint64_t seed, unsigned threads) {
  if (initial_pool.empty()) throw ConfigError("ablation pool is empty");
  const PipelineConfig base = [&] {
    PipelineConfig c = config;
    c.features = config.features.with_blocks(initial_pool);
    return c;
  }();
  base.validate();
  const InstanceBank bank(corpus, base.features, base.min_tokens, threads);

  AblationReport report;
  report.mode = mode;
  LooOptions options;
  options.seed = seed;
  options.threads = threads;

  auto run = [&](const std::set<FeatureBlock>& pool) {
    PipelineConfig c = base;
    c.features = base.features.with_blocks(pool);
    return loo_run(bank, c, options);
  };

  std::set<FeatureBlock> pool = initial_pool;
  AblationScore pool_score;
  {
    const LooReport full = run(pool);
    if (mode == AblationMode::Hardest10) {
      const auto order = full.hardest();
      std::set<std::string> guide;
      for (std::size_t k = 0; k < order.size() && k < 10; ++k) {
        report.guide_texts.push_back(full.records[order[k]].id);
        guide.insert(full.records[order[k]].id);
      }
      // per-fold seeds depend only on the held-out id, so the full run's
      // predictions on the guide texts are what a restricted run would produce
      LooReport restricted = full;
      std::erase_if(restricted.records, [&](const LooRecord& r) { return !guide.contains(r.id); });
      restricted.aggregate();
      pool_score = score_report(restricted, mode);
      options.held_out = guide;
    } else {
      pool_score = score_report(full, mode);
    }
  }

  while (pool.size() > 1) {
    AblationIteration it;
    it.pool.assign(pool.begin(), pool.end());
    it.pool_score = pool_score;
    for (FeatureBlock b : it.pool) {
      auto reduced = pool;
      reduced.erase(b);
      it.candidates.emplace_back(b, score_report(run(reduced), mode));
    }
    auto best = it.candidates.begin();
    for (auto c = it.candidates.begin(); c != it.candidates.end(); ++c) {
      if (c->second > best->second) best = c;
    }
    it.best_removal = best->first;
    it.best_score = best->second;
    it.removed = it.best_score >= pool_score;
    report.iterations.push_back(it);
    if (!it.removed) break;
    pool.erase(it.best_removal);
    pool_score = it.best_score;
  }
  report.final_pool.assign(pool.begin(), pool.end());
  return report;
}

Verdict verify_disputed(const Corpus& corpus, const std::string& disputed_id, const PipelineConfig& config,
                        std::size_t replicas, std::uint64_t seed, unsigned threads) {
  config.validate();
  if (config.positive_author.empty()) throw ConfigError("verification requires a positive author");
  if (replicas == 0) throw ConfigError("replica count must be positive");
  const std::size_t target = require_disputed(corpus, disputed_id);

  const InstanceBank bank(corpus, config.features, config.min_tokens, threads);
  std::vector<std::size_t> docs, labels;
  std::size_t positives = 0;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const auto& doc = corpus.documents[d];
    if (doc.is_disputed()) continue;
    docs.push_back(d);
    labels.push_back(doc.author == config.positive_author ? 1 : 0);
    positives += labels.back();
  }
  if (positives == 0) throw ExperimentError("no labelled text by '" + config.positive_author + "'");
  if (positives == docs.size()) throw ExperimentError("no negative (other-author) labelled texts");

  const auto training = training_instances(bank, docs, labels, config.include_full_texts);
  const std::vector<std::string> classes = {"not" + config.positive_author, config.positive_author};
  const FittedPipeline fitted = fit_pipeline(training, classes, config, seed, threads);

  Verdict v;
  v.disputed_id = disputed_id;
  v.seed = seed;
  v.corpus_fingerprint = corpus.fingerprint();
  v.fitted_C = fitted.tuning.C;
  v.training_examples = fitted.training_examples;
  const std::size_t n = config.dro_enabled ? replicas : 1;
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = represent(fitted, bank.full(target), config, seed, r);
    v.replica_posteriors.push_back(predict_proba(fitted.model, x).posteriors[1]);
  }
  v.median_posterior = median(v.replica_posteriors);
  v.predicted_class = v.median_posterior > 0.5 ? classes[1] : classes[0];
  return v;
}

std::vector<std::string> candidate_authors(const Corpus& corpus, std::size_t min_texts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : corpus.documents) {
    if (!doc.is_disputed()) ++counts[doc.author];
  }
  std::vector<std::string> out;
  for (const auto& [author, n] : counts) {
    if (n >= min_texts) out.push_back(author);
  }
  return out;
}

AttributionResult attribute_disputed(const Corpus& corpus, const std::string& disputed_id, std::size_t min_texts,
                                     const PipelineConfig& config, std::uint64_t seed, unsigned threads) {
  PipelineConfig c = config;
  c.dro_enabled = false;
  c.validate();
  const std::size_t target = require_disputed(corpus, disputed_id);
  AttributionResult result;
  result.disputed_id = disputed_id;
  result.min_texts = min_texts;
  result.candidates = candidate_authors(corpus, min_texts);
  if (result.candidates.size() < 2) {
    throw ExperimentError("attribution needs at least 2 candidate authors with >= " + std::to_string(min_texts) +
                          " texts");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < result.candidates.size(); ++k) index[result.candidates[k]] = k;

  const InstanceBank bank(corpus, c.features, c.min_tokens, threads);
  std::vector<std::size_t> docs, labels;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const auto& doc = corpus.documents[d];
    if (doc.is_disputed() || !index.contains(doc.author)) continue;
    docs.push_back(d);
    labels.push_back(index[doc.author]);
  }
  const auto training = training_instances(bank, docs, labels, c.include_full_texts);
  const FittedPipeline fitted = fit_pipeline(training, result.candidates, c, seed, threads);
  result.fitted_C = fitted.tuning.C;
  const auto p = predict_proba(fitted.model, represent(fitted, bank.full(target), c, seed));
  for (std::size_t k = 0; k < result.candidates.size(); ++k) {
    result.ranking.emplace_back(result.candidates[k], p.posteriors[k]);
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return result;
}

AttributionContingency attribution_contingency(const Corpus& corpus, std::size_t min_texts,
                                               const PipelineConfig& config, std::uint64_t seed, unsigned threads) {
  PipelineConfig c = config;
  c.dro_enabled = false;
  AttributionContingency out;
  out.authors = candidate_authors(corpus, min_texts);
  if (out.authors.size() < 2) {
    throw ExperimentError("attribution needs at least 2 candidate authors with >= " + std::to_string(min_texts) +
                          " texts");
  }
  LooOptions options;
  options.task = LooTask::Attribution;
  options.seed = seed;
  options.threads = threads;
  options.candidate_authors = out.authors;
  out.loo = loo_run(corpus, c, options);
  out.matrix = out.loo.confusion;
  return out;
}

std::vector<SimilarText> rank_similar(const Corpus& corpus, const std::string& disputed_id,
                                      const FeatureConfig& features, std::size_t top_k) {
  features.validate();
  const std::size_t target = require_disputed(corpus, disputed_id);
  std::vector<const Document*> labelled;
  std::vector<ExtractedInstance> extracted;
  for (const auto& doc : corpus.documents) {
    if (doc.is_disputed()) continue;
    labelled.push_back(&doc);
    extracted.push_back(extract(Instance::whole(doc), features));
  }
  if (labelled.empty()) throw ExperimentError("no labelled texts to rank");
  const FeatureSpace space = FeatureSpace::fit(extracted, features);
  const SparseVector query = space.vectorize(extract(Instance::whole(corpus.documents[target]), features));
  if (query.empty()) throw ExperimentError("disputed text '" + disputed_id + "' has a zero feature vector");

  std::vector<SimilarText> out;
  for (std::size_t i = 0; i < labelled.size(); ++i) {
    out.push_back({labelled[i]->id, labelled[i]->author, labelled[i]->title,
                   cosine(query, space.vectorize(extracted[i]))});
  }
  std::stable_sort(out.begin(), out.end(), [](const SimilarText& a, const SimilarText& b) {
    return a.cosine > b.cosine;
  });
  if (top_k > 0 && out.size() > top_k) out.resize(top_k);
  return out;
}

} // namespace avkit
