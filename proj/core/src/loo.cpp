#include "avkit/loo.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>

#include "avkit/error.hpp"
#include "avkit/parallel.hpp"
#include "avkit/random.hpp"

namespace avkit {

void PipelineConfig::validate() const {
  features.validate();
  if (min_tokens == 0) throw ConfigError("segmentation min_tokens must be positive");
  if (dro_enabled) dro.validate();
  learner.validate();
}

InstanceBank::InstanceBank(const Corpus& corpus, const FeatureConfig& features, std::size_t min_tokens,
                           unsigned threads)
    : corpus_(&corpus), full_(corpus.documents.size()), segments_(corpus.documents.size()) {
  parallel_for(corpus.documents.size(), threads, [&](std::size_t d) {
    const Document& doc = corpus.documents[d];
    full_[d] = extract(Instance::whole(doc), features);
    if (doc.tokens.empty()) return;
    for (const auto& seg : segment(doc, min_tokens)) {
      segments_[d].push_back(extract(Instance::of_segment(doc, seg), features));
    }
  });
}

std::vector<LabelledInstance> training_instances(const InstanceBank& bank, const std::vector<std::size_t>& docs,
                                                 const std::vector<std::size_t>& labels, bool include_full_texts) {
  std::vector<LabelledInstance> out;
  for (std::size_t k = 0; k < docs.size(); ++k) {
    if (include_full_texts) out.push_back({&bank.full(docs[k]), labels[k]});
    for (const auto& seg : bank.segments(docs[k])) out.push_back({&seg, labels[k]});
  }
  return out;
}

FittedPipeline fit_pipeline(std::span<const LabelledInstance> training, std::vector<std::string> classes,
                            const PipelineConfig& config, std::uint64_t seed, unsigned threads) {
  if (training.empty()) throw ExperimentError("empty training set");
  FittedPipeline fitted;
  std::vector<const ExtractedInstance*> feats;
  feats.reserve(training.size());
  for (const auto& t : training) {
    feats.push_back(t.features);
    fitted.training_ids.push_back(t.features->id);
  }
  fitted.space = FeatureSpace::fit(feats, config.features);

  std::vector<SparseVector> X;
  std::vector<std::size_t> y;
  std::vector<std::string> groups;
  X.reserve(training.size());
  for (const auto& t : training) X.push_back(fitted.space.vectorize(*t.features));

  const bool binary = classes.size() == 2;
  std::uint64_t fingerprint = fitted.space.fingerprint();
  if (binary && config.dro_enabled) {
    fitted.profiles = DistributionalProfiles::fit(X, config.dro.latent_dimension);
    std::vector<DroInput> inputs;
    inputs.reserve(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
      inputs.push_back({X[i], training[i].label == 1, training[i].features->occurrences(fitted.space.blocks())});
    }
    DroConfig dro = config.dro;
    dro.seed = derive_seed(seed, "dro-train");
    auto examples = oversample(inputs, *fitted.profiles, dro, threads);
    X.clear();
    for (auto& ex : examples) {
      X.push_back(ex.vector.combined());
      y.push_back(ex.positive ? 1 : 0);
      groups.push_back(training[ex.source].features->group);
      fitted.synthetic_examples += ex.synthetic;
    }
    fingerprint = splitmix64(fingerprint ^ fitted.profiles->latent_dimension());
  } else {
    for (const auto& t : training) {
      y.push_back(t.label);
      groups.push_back(t.features->group);
    }
  }
  fitted.training_examples = X.size();

  fitted.tuning = tune_C(X, y, classes.size(), groups, config.learner, derive_seed(seed, "tune"), threads);
  TrainConfig train = config.learner;
  train.C = fitted.tuning.C;
  fitted.model = binary ? train_binary(X, y, train, std::move(classes), fingerprint)
                        : train_multiclass(X, y, std::move(classes), train, fingerprint);
  return fitted;
}

SparseVector represent(const FittedPipeline& fitted, const ExtractedInstance& inst, const PipelineConfig& config,
                       std::uint64_t seed, std::size_t replica) {
  SparseVector v = fitted.space.vectorize(inst);
  if (!fitted.profiles) return v;
  Rng rng(derive_seed(derive_seed(seed, "dro-test"), inst.id, replica));
  const auto m = config.dro.samples_for(inst.occurrences(fitted.space.blocks()));
  return extend(v, *fitted.profiles, m, rng).combined();
}

std::vector<std::size_t> LooReport::hardest() const {
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return records[a].true_class_posterior < records[b].true_class_posterior;
  });
  return idx;
}

void LooReport::aggregate() {
  table = {};
  f1 = soft_f1 = accuracy = macro_f1 = 0.0;
  per_class.clear();
  confusion.clear();
  if (records.empty()) return;
  if (task == LooTask::Verification) {
    std::vector<BinaryOutcome> outcomes;
    for (const auto& r : records) outcomes.push_back({r.true_class == classes[1], r.positive_posterior});
    table = hard_table(outcomes);
    f1 = avkit::f1(table);
    soft_f1 = avkit::soft_f1(outcomes);
    accuracy = vanilla_accuracy(table);
    return;
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < classes.size(); ++k) index[classes[k]] = k;
  std::vector<std::size_t> truth, predicted;
  for (const auto& r : records) {
    truth.push_back(index.at(r.true_class));
    predicted.push_back(index.at(r.predicted_class));
  }
  per_class = one_vs_rest(truth, predicted, classes.size());
  macro_f1 = avkit::macro_f1(per_class);
  confusion = confusion_matrix(truth, predicted, classes.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
  accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
}

LooReport loo_run(const Corpus& corpus, const PipelineConfig& config, const LooOptions& options) {
  config.validate();
  const InstanceBank bank(corpus, config.features, config.min_tokens, options.threads);
  return loo_run(bank, config, options);
}

LooReport loo_run(const InstanceBank& bank, const PipelineConfig& config, const LooOptions& options) {
  config.validate();
  const Corpus& corpus = bank.corpus();
  LooReport report;
  report.task = options.task;

  std::vector<std::size_t> docs;
  std::vector<std::size_t> labels;
  if (options.task == LooTask::Verification) {
    if (config.positive_author.empty()) throw ConfigError("verification requires a positive author");
    report.classes = {"not" + config.positive_author, config.positive_author};
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
      const auto& doc = corpus.documents[d];
      if (doc.is_disputed()) continue;
      docs.push_back(d);
      labels.push_back(doc.author == config.positive_author ? 1 : 0);
    }
  } else {
    std::set<std::string> authors(options.candidate_authors.begin(), options.candidate_authors.end());
    if (authors.empty()) {
      for (const auto& doc : corpus.documents) {
        if (!doc.is_disputed()) authors.insert(doc.author);
      }
    }
    report.classes.assign(authors.begin(), authors.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < report.classes.size(); ++k) index[report.classes[k]] = k;
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
      const auto& doc = corpus.documents[d];
      if (doc.is_disputed() || !index.contains(doc.author)) continue;
      docs.push_back(d);
      labels.push_back(index[doc.author]);
    }
  }
  if (report.classes.size() < 2) throw ExperimentError("leave-one-out needs at least two classes");

  std::vector<std::size_t> folds; // positions in docs to hold out
  for (std::size_t k = 0; k < docs.size(); ++k) {
    if (!options.held_out || options.held_out->contains(corpus.documents[docs[k]].id)) folds.push_back(k);
  }

  const unsigned inner_threads = folds.size() > 1 ? 1 : options.threads;
  std::vector<std::optional<LooRecord>> slots(folds.size());
  std::vector<std::string> fold_warnings(folds.size());
  parallel_for(folds.size(), options.threads, [&](std::size_t f) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t held = folds[f];
    const Document& doc = corpus.documents[docs[held]];

    std::vector<std::size_t> train_docs, train_labels;
    std::vector<std::size_t> per_class(report.classes.size(), 0);
    for (std::size_t k = 0; k < docs.size(); ++k) {
      if (k == held) continue;
      train_docs.push_back(docs[k]);
      train_labels.push_back(labels[k]);
      ++per_class[labels[k]];
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
      if (per_class[c] == 0) {
        fold_warnings[f] = "fold '" + doc.id + "' skipped: class '" + report.classes[c] +
                           "' absent from its training set";
        return;
      }
    }
    const auto training = training_instances(bank, train_docs, train_labels, config.include_full_texts);
    const std::uint64_t fold_seed = derive_seed(options.seed, doc.id);
    const FittedPipeline fitted = fit_pipeline(training, report.classes, config, fold_seed, inner_threads);

    if (options.observer) {
      FoldAudit audit;
      audit.held_out_id = doc.id;
      audit.training_ids = fitted.training_ids;
      audit.space = &fitted.space;
      audit.profile_instances = fitted.profiles ? fitted.profiles->latent_dimension() : 0;
      options.observer(audit);
    }

    const SparseVector x = represent(fitted, bank.full(docs[held]), config, fold_seed);
    const Prediction p = predict_proba(fitted.model, x);
    LooRecord r;
    r.id = doc.id;
    r.author = doc.author;
    r.true_class = report.classes[labels[held]];
    r.predicted_class = report.classes[p.predicted];
    r.positive_posterior = options.task == LooTask::Verification ? p.posteriors[1] : 0.0;
    r.true_class_posterior = p.posteriors[labels[held]];
    r.fitted_C = fitted.tuning.C;
    r.tune_folds = fitted.tuning.folds;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    slots[f] = std::move(r);
  });

  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (slots[f]) report.records.push_back(std::move(*slots[f]));
    if (!fold_warnings[f].empty()) report.warnings.push_back(fold_warnings[f]);
  }
  report.aggregate();
  return report;
}

} // namespace avkit
