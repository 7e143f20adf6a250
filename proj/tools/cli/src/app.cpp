#include "avkit/cli/app.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "avkit/cli/run_config.hpp"
#include "avkit/error.hpp"
#include "avkit/experiments.hpp"
#include "avkit/version.hpp"

namespace avkit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

class CsvWriter {
public:
  explicit CsvWriter(const fs::path& path) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
  }
  CsvWriter& row(std::initializer_list<std::string> fields) { return row(std::vector<std::string>(fields)); }
  CsvWriter& row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out_ << ',';
      out_ << csv_field(f);
      first = false;
    }
    out_ << '\n';
    return *this;
  }

private:
  std::ofstream out_;
};

struct Context {
  RunConfig config;
  std::string command;
  unsigned threads = 1;
  std::ostream* out = nullptr;
};

ordered_json header(const Context& ctx, std::uint64_t corpus_fingerprint) {
  ordered_json j;
  j["tool"] = "avkit";
  j["version"] = std::string(kVersion);
  j["command"] = ctx.command;
  j["seed"] = ctx.config.seed;
  j["corpus_fingerprint"] = hex(corpus_fingerprint);
  j["config"] = ctx.config.document;
  return j;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> block_names(const std::vector<FeatureBlock>& blocks) {
  std::vector<std::string> out;
  for (auto b : blocks) out.emplace_back(block_name(b));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string resolve_disputed(const Corpus& corpus, const RunConfig& rc) {
  if (rc.disputed_id) return *rc.disputed_id;
  std::vector<std::string> unknown;
  for (const auto& d : corpus.documents) {
    if (d.is_disputed()) unknown.push_back(d.id);
  }
  if (unknown.empty()) {
    throw ExperimentError("corpus has no disputed text (no document with author " + std::string(kUnknownAuthor) +
                          ")");
  }
  if (unknown.size() > 1) {
    throw ExperimentError("corpus has " + std::to_string(unknown.size()) +
                          " disputed texts; choose one with task.disputed_id");
  }
  return unknown.front();
}

ordered_json table_json(const ContingencyTable& t) {
  return {{"tp", t.tp}, {"fp", t.fp}, {"fn", t.fn}, {"tn", t.tn}};
}

ordered_json records_json(const LooReport& report) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : report.records) {
    ordered_json j;
    j["id"] = r.id;
    j["author"] = r.author;
    j["true_class"] = r.true_class;
    j["predicted_class"] = r.predicted_class;
    if (report.task == LooTask::Verification) j["positive_posterior"] = r.positive_posterior;
    j["true_class_posterior"] = r.true_class_posterior;
    j["fitted_C"] = r.fitted_C;
    arr.push_back(std::move(j));
  }
  return arr;
}

void write_loo_tables(const fs::path& dir, const LooReport& report) {
  {
    CsvWriter csv(dir / "loo_records.csv");
    csv.row({"id", "author", "true_class", "predicted_class", "positive_posterior", "true_class_posterior",
             "fitted_C"});
    for (const auto& r : report.records) {
      csv.row({r.id, r.author, r.true_class, r.predicted_class,
               report.task == LooTask::Verification ? num(r.positive_posterior) : "", num(r.true_class_posterior),
               num(r.fitted_C)});
    }
  }
  {
    CsvWriter csv(dir / "hardest_texts.csv");
    csv.row({"rank", "id", "author", "true_class", "true_class_posterior"});
    const auto order = report.hardest();
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& r = report.records[order[k]];
      csv.row({std::to_string(k + 1), r.id, r.author, r.true_class, num(r.true_class_posterior)});
    }
  }
  {
    // wall-clock data stays out of the deterministic report
    CsvWriter csv(dir / "loo_timings.csv");
    csv.row({"id", "seconds"});
    for (const auto& r : report.records) csv.row({r.id, num(r.seconds)});
  }
}

Corpus load(const Context& ctx) { return load_corpus(ctx.config.corpus); }

int cmd_ingest(const Context& ctx) {
  const Corpus corpus = load(ctx);
  const auto& rc = ctx.config;
  auto j = header(ctx, corpus.fingerprint());
  ordered_json docs = ordered_json::array();
  std::map<std::string, std::size_t> per_author;
  std::size_t tokens = 0, segments = 0;
  for (const auto& d : corpus.documents) {
    const auto segs = segment(d, rc.pipeline.min_tokens);
    docs.push_back({{"id", d.id},
                    {"author", d.author},
                    {"title", d.title},
                    {"tokens", d.tokens.size()},
                    {"words", d.word_count()},
                    {"sentences", d.sentences.size()},
                    {"segments", segs.size()},
                    {"annotated", d.annotations.has_value()}});
    ++per_author[d.author];
    tokens += d.tokens.size();
    segments += segs.size();
  }
  ordered_json authors = ordered_json::object();
  for (const auto& [a, n] : per_author) authors[a] = n;
  j["results"] = {{"documents", corpus.documents.size()},
                  {"tokens", tokens},
                  {"segments", segments},
                  {"min_tokens", rc.pipeline.min_tokens},
                  {"texts_per_author", authors},
                  {"document_summary", docs}};
  write_json(rc.output_dir / "ingest_report.json", j);
  write_corpus_cache(corpus, rc.output_dir / "corpus_cache.json");
  *ctx.out << "ingested " << corpus.documents.size() << " documents (" << tokens << " tokens, " << segments
           << " segments); cache written to " << (rc.output_dir / "corpus_cache.json").string() << '\n';
  return kExitOk;
}

int cmd_loo(const Context& ctx) {
  const Corpus corpus = load(ctx);
  const auto& rc = ctx.config;
  auto j = header(ctx, corpus.fingerprint());
  LooReport report;
  if (rc.loo_task == LooTask::Verification) {
    LooOptions options;
    options.seed = rc.seed;
    options.threads = ctx.threads;
    report = loo_run(corpus, rc.pipeline, options);
  } else {
    auto contingency = attribution_contingency(corpus, rc.min_texts, rc.pipeline, rc.seed, ctx.threads);
    report = std::move(contingency.loo);
  }

  ordered_json results;
  results["task"] = rc.loo_task == LooTask::Verification ? "verification" : "attribution";
  results["classes"] = report.classes;
  results["folds"] = report.records.size();
  results["accuracy"] = report.accuracy;
  if (report.task == LooTask::Verification) {
    results["f1"] = report.f1;
    results["soft_f1"] = report.soft_f1;
    results["table"] = table_json(report.table);
  } else {
    results["min_texts"] = rc.min_texts;
    results["macro_f1"] = report.macro_f1;
    results["confusion"] = report.confusion;
  }
  results["warnings"] = report.warnings;
  results["records"] = records_json(report);
  j["results"] = std::move(results);
  write_json(rc.output_dir / "loo_report.json", j);
  write_loo_tables(rc.output_dir, report);

  if (report.task == LooTask::Attribution) {
    CsvWriter csv(rc.output_dir / "attribution_contingency.csv");
    std::vector<std::string> head = {"true\\predicted"};
    head.insert(head.end(), report.classes.begin(), report.classes.end());
    csv.row(head);
    for (std::size_t r = 0; r < report.classes.size(); ++r) {
      std::vector<std::string> line = {report.classes[r]};
      for (auto c : report.confusion[r]) line.push_back(std::to_string(c));
      csv.row(line);
    }
  }
  for (const auto& w : report.warnings) *ctx.out << "warning: " << w << '\n';
  if (report.task == LooTask::Verification) {
    *ctx.out << "LOO over " << report.records.size() << " texts: F1=" << num(report.f1)
             << " soft-F1=" << num(report.soft_f1) << " accuracy=" << num(report.accuracy) << '\n';
  } else {
    *ctx.out << "attribution LOO over " << report.records.size() << " texts: macro-F1=" << num(report.macro_f1)
             << " accuracy=" << num(report.accuracy) << '\n';
  }
  return kExitOk;
}

ordered_json score_json(const AblationScore& s) { return {{"primary", s.primary}, {"secondary", s.secondary}}; }

int cmd_ablate(const Context& ctx) {
  const Corpus corpus = load(ctx);
  const auto& rc = ctx.config;
  const auto pool = rc.ablation_pool.empty() ? rc.pipeline.features.enabled_blocks : rc.ablation_pool;
  const AblationReport report = ablate(corpus, rc.pipeline, pool, rc.ablation_mode, rc.seed, ctx.threads);

  auto j = header(ctx, corpus.fingerprint());
  ordered_json results;
  results["mode"] = rc.ablation_mode == AblationMode::ExactLoo ? "exact" : "hardest10";
  results["score"] = rc.ablation_mode == AblationMode::ExactLoo
                         ? "primary=F1, secondary=soft F1"
                         : "primary=accuracy on guide texts, secondary=mean confidence in the true class";
  if (!report.guide_texts.empty()) results["guide_texts"] = report.guide_texts;
  ordered_json iterations = ordered_json::array();
  for (const auto& it : report.iterations) {
    ordered_json candidates = ordered_json::array();
    for (const auto& [b, s] : it.candidates) {
      auto c = score_json(s);
      c["without"] = std::string(block_name(b));
      candidates.push_back(std::move(c));
    }
    iterations.push_back({{"pool", block_names(it.pool)},
                          {"pool_score", score_json(it.pool_score)},
                          {"candidates", std::move(candidates)},
                          {"best_removal", std::string(block_name(it.best_removal))},
                          {"best_score", score_json(it.best_score)},
                          {"removed", it.removed}});
  }
  results["iterations"] = std::move(iterations);
  results["final_pool"] = block_names(report.final_pool);
  j["results"] = std::move(results);
  write_json(rc.output_dir / "ablation_report.json", j);

  CsvWriter csv(rc.output_dir / "ablation.csv");
  csv.row({"iteration", "pool", "without", "score_primary", "score_secondary", "pool_primary", "pool_secondary",
           "chosen", "removed"});
  for (std::size_t k = 0; k < report.iterations.size(); ++k) {
    const auto& it = report.iterations[k];
    for (const auto& [b, s] : it.candidates) {
      csv.row({std::to_string(k + 1), join(block_names(it.pool), "+"), std::string(block_name(b)), num(s.primary),
               num(s.secondary), num(it.pool_score.primary), num(it.pool_score.secondary),
               b == it.best_removal ? "yes" : "no", b == it.best_removal && it.removed ? "yes" : "no"});
    }
  }
  *ctx.out << "ablation finished after " << report.iterations.size()
           << " iteration(s); surviving pool: " << join(block_names(report.final_pool), ", ") << '\n';
  return kExitOk;
}

int cmd_verify(const Context& ctx) {
  const Corpus corpus = load(ctx);
  const auto& rc = ctx.config;
  const std::string id = resolve_disputed(corpus, rc);
  const Verdict v = verify_disputed(corpus, id, rc.pipeline, rc.replicas, rc.seed, ctx.threads);

  auto j = header(ctx, corpus.fingerprint());
  j["results"] = {{"disputed_id", v.disputed_id},
                  {"positive_author", rc.pipeline.positive_author},
                  {"dro_enabled", rc.pipeline.dro_enabled},
                  {"replicas", v.replica_posteriors.size()},
                  {"replica_posteriors", v.replica_posteriors},
                  {"median_posterior", v.median_posterior},
                  {"predicted_class", v.predicted_class},
                  {"fitted_C", v.fitted_C},
                  {"training_examples", v.training_examples}};
  write_json(rc.output_dir / "verdict.json", j);
  CsvWriter csv(rc.output_dir / "verify_replicas.csv");
  csv.row({"replica", "positive_posterior"});
  for (std::size_t r = 0; r < v.replica_posteriors.size(); ++r) {
    csv.row({std::to_string(r), num(v.replica_posteriors[r])});
  }
  *ctx.out << v.disputed_id << ": " << v.predicted_class << " (median Pr(" << rc.pipeline.positive_author
           << ")=" << num(v.median_posterior) << " over " << v.replica_posteriors.size() << " replicas)\n";
  return kExitOk;
}

int cmd_attribute(const Context& ctx) {
  const Corpus corpus = load(ctx);
  const auto& rc = ctx.config;
  const std::string id = resolve_disputed(corpus, rc);
  const AttributionResult a = attribute_disputed(corpus, id, rc.min_texts, rc.pipeline, rc.seed, ctx.threads);

  auto j = header(ctx, corpus.fingerprint());
  ordered_json ranking = ordered_json::array();
  for (const auto& [author, p] : a.ranking) ranking.push_back({{"author", author}, {"posterior", p}});
  j["results"] = {{"disputed_id", a.disputed_id},
                  {"min_texts", a.min_texts},
                  {"candidates", a.candidates},
                  {"fitted_C", a.fitted_C},
                  {"ranking", std::move(ranking)}};
  write_json(rc.output_dir / "attribution.json", j);
  CsvWriter csv(rc.output_dir / "attribution_ranking.csv");
  csv.row({"rank", "author", "posterior"});
  for (std::size_t k = 0; k < a.ranking.size(); ++k) {
    csv.row({std::to_string(k + 1), a.ranking[k].first, num(a.ranking[k].second)});
  }
  *ctx.out << a.disputed_id << ": most probable author " << a.ranking.front().first << " ("
           << num(a.ranking.front().second) << ") among " << a.candidates.size() << " candidates\n";
  return kExitOk;
}

int cmd_similar(const Context& ctx) {
  const Corpus corpus = load(ctx);
  const auto& rc = ctx.config;
  const std::string id = resolve_disputed(corpus, rc);
  const auto ranked = rank_similar(corpus, id, rc.pipeline.features, rc.top_k);

  auto j = header(ctx, corpus.fingerprint());
  ordered_json rows = ordered_json::array();
  for (const auto& s : ranked) {
    rows.push_back({{"id", s.id}, {"author", s.author}, {"title", s.title}, {"cosine", s.cosine}});
  }
  j["results"] = {{"disputed_id", id}, {"top_k", rc.top_k}, {"ranking", std::move(rows)}};
  write_json(rc.output_dir / "similarity.json", j);
  CsvWriter csv(rc.output_dir / "similarity.csv");
  csv.row({"rank", "id", "author", "title", "cosine"});
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    csv.row({std::to_string(k + 1), ranked[k].id, ranked[k].author, ranked[k].title, num(ranked[k].cosine)});
  }
  *ctx.out << id << ": " << ranked.size() << " most similar texts written\n";
  return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"avkit: authorship verification and attribution experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> output_dir;
  std::optional<std::string> mode;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> min_texts;

  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--seed", seed, "master seed (overrides config)");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--output-dir", output_dir, "report directory (overrides config)");
  app.add_option("--mode", mode, "ablation mode: exact|hardest10")->check(CLI::IsMember({"exact", "hardest10"}));
  app.add_option("--replicas", replicas, "DRO replicas of the disputed text (verify)");
  app.add_option("--min-texts", min_texts, "minimum texts per candidate author (attribute)")
      ->check(CLI::IsMember({1, 2}));

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"ingest", "validate the corpus and write a tokenization cache"},
      {"loo", "leave-one-out evaluation"},
      {"ablate", "greedy iterative feature-block ablation"},
      {"verify", "verify the disputed text against the positive author"},
      {"attribute", "rank candidate authors of the disputed text"},
      {"similar", "rank labelled texts by cosine similarity to the disputed text"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.out = &out;
    ctx.config = load_run_config(config_path);
    auto& rc = ctx.config;
    if (seed) rc.seed = *seed;
    if (threads) rc.threads = *threads;
    if (output_dir) rc.output_dir = *output_dir;
    if (mode) rc.ablation_mode = parse_ablation_mode(*mode);
    if (replicas) {
      if (*replicas == 0) throw ConfigError("--replicas must be positive");
      rc.replicas = *replicas;
    }
    if (min_texts) rc.min_texts = *min_texts;
    ctx.threads = rc.threads > 0 ? rc.threads : std::max(1u, std::thread::hardware_concurrency());
    fs::create_directories(rc.output_dir);

    if (ctx.command == "ingest") return cmd_ingest(ctx);
    if (ctx.command == "loo") return cmd_loo(ctx);
    if (ctx.command == "ablate") return cmd_ablate(ctx);
    if (ctx.command == "verify") return cmd_verify(ctx);
    if (ctx.command == "attribute") return cmd_attribute(ctx);
    return cmd_similar(ctx);
  } catch (const ConfigError& e) {
    err << "avkit: invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CorpusError& e) {
    err << "avkit: corpus error: " << e.what() << '\n';
    return kExitCorpus;
  } catch (const ExperimentError& e) {
    err << "avkit: experiment error: " << e.what() << '\n';
    return kExitExperiment;
  } catch (const std::exception& e) {
    err << "avkit: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

} // namespace avkit::cli
