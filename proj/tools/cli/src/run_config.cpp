#include "avkit/cli/run_config.hpp"

#include <fstream>
#include <sstream>

#include "avkit/error.hpp"

namespace avkit::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void check_keys(const ordered_json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get(const ordered_json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

template <typename T>
void read_opt(const ordered_json& obj, const char* key, std::string_view where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

std::size_t read_count(const ordered_json& obj, const char* key, std::string_view where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string(where) + "." + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::set<FeatureBlock> read_blocks(const ordered_json& arr, std::string_view where) {
  if (!arr.is_array()) throw ConfigError(std::string(where) + " must be an array of block names");
  std::set<FeatureBlock> out;
  for (const auto& b : arr) {
    if (!b.is_string()) throw ConfigError(std::string(where) + " must be an array of block names");
    out.insert(parse_block(b.get<std::string>()));
  }
  return out;
}

std::vector<std::string> read_list(const fs::path& base, const ordered_json& v, std::string_view where) {
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& w : v) {
      if (!w.is_string()) throw ConfigError(std::string(where) + " entries must be strings");
      out.push_back(normalize(w.get<std::string>()));
    }
    return out;
  }
  if (!v.is_string()) throw ConfigError(std::string(where) + " must be a file path or an array of strings");
  const fs::path p = base / v.get<std::string>();
  if (!fs::exists(p)) throw ConfigError(std::string(where) + " file not found: " + p.string());
  return load_word_list(p);
}

void parse_features(const ordered_json& j, const fs::path& base, FeatureConfig& f) {
  check_keys(j, "features", {"blocks", "ngram_orders", "function_words", "verbal_endings"});
  if (!j.contains("blocks")) throw ConfigError("features.blocks is required");
  f.enabled_blocks = read_blocks(j.at("blocks"), "features.blocks");
  if (j.contains("ngram_orders")) {
    const auto& orders = j.at("ngram_orders");
    if (!orders.is_object()) throw ConfigError("features.ngram_orders must be an object");
    for (const auto& [name, list] : orders.items()) {
      const FeatureBlock b = parse_block(name);
      if (!list.is_array()) throw ConfigError("features.ngram_orders." + name + " must be an array");
      std::set<int> ns;
      for (const auto& n : list) {
        if (!n.is_number_integer()) throw ConfigError("features.ngram_orders." + name + " must hold integers");
        ns.insert(n.get<int>());
      }
      f.ngram_orders[b] = ns;
    }
  }
  if (j.contains("function_words")) f.function_words = read_list(base, j.at("function_words"), "features.function_words");
  if (j.contains("verbal_endings")) f.verbal_endings = read_list(base, j.at("verbal_endings"), "features.verbal_endings");
}

void parse_dro(const ordered_json& j, PipelineConfig& p) {
  check_keys(j, "dro", {"enabled", "target_positive_ratio", "latent_dimension", "fixed_samples", "max_samples"});
  read_opt(j, "enabled", "dro", p.dro_enabled);
  read_opt(j, "target_positive_ratio", "dro", p.dro.target_positive_ratio);
  p.dro.latent_dimension = read_count(j, "latent_dimension", "dro", p.dro.latent_dimension);
  p.dro.fixed_samples = read_count(j, "fixed_samples", "dro", p.dro.fixed_samples);
  p.dro.max_samples = read_count(j, "max_samples", "dro", p.dro.max_samples);
}

void parse_learner(const ordered_json& j, TrainConfig& t) {
  check_keys(j, "learner", {"C", "C_grid", "inner_folds", "tolerance", "max_iterations"});
  read_opt(j, "C", "learner", t.C);
  read_opt(j, "C_grid", "learner", t.C_grid);
  t.inner_folds = read_count(j, "inner_folds", "learner", t.inner_folds);
  read_opt(j, "tolerance", "learner", t.tolerance);
  t.max_iterations = read_count(j, "max_iterations", "learner", t.max_iterations);
}

void parse_task(const ordered_json& j, RunConfig& rc) {
  check_keys(j, "task", {"positive_author", "disputed_id", "loo", "ablation_pool", "ablation_mode", "replicas",
                         "min_texts", "top_k"});
  read_opt(j, "positive_author", "task", rc.pipeline.positive_author);
  if (j.contains("disputed_id")) rc.disputed_id = get<std::string>(j, "disputed_id", "task");
  if (j.contains("loo")) {
    const auto t = get<std::string>(j, "loo", "task");
    if (t == "verification") rc.loo_task = LooTask::Verification;
    else if (t == "attribution") rc.loo_task = LooTask::Attribution;
    else throw ConfigError("task.loo must be 'verification' or 'attribution', got '" + t + "'");
  }
  if (j.contains("ablation_pool")) rc.ablation_pool = read_blocks(j.at("ablation_pool"), "task.ablation_pool");
  if (j.contains("ablation_mode")) rc.ablation_mode = parse_ablation_mode(get<std::string>(j, "ablation_mode", "task"));
  rc.replicas = read_count(j, "replicas", "task", rc.replicas);
  rc.min_texts = read_count(j, "min_texts", "task", rc.min_texts);
  rc.top_k = read_count(j, "top_k", "task", rc.top_k);
}

} // namespace

AblationMode parse_ablation_mode(std::string_view name) {
  if (name == "exact") return AblationMode::ExactLoo;
  if (name == "hardest10") return AblationMode::Hardest10;
  throw ConfigError("ablation mode must be 'exact' or 'hardest10', got '" + std::string(name) + "'");
}

RunConfig parse_run_config(const ordered_json& document, const fs::path& base_dir) {
  RunConfig rc;
  rc.document = document;
  rc.base_dir = base_dir;
  check_keys(document, "config",
             {"corpus", "features", "segmentation", "dro", "learner", "task", "seed", "output_dir", "threads"});
  if (!document.contains("corpus")) throw ConfigError("config.corpus (manifest or cache path) is required");
  rc.corpus = base_dir / get<std::string>(document, "corpus", "config");
  if (!document.contains("features")) throw ConfigError("config.features is required");
  parse_features(document.at("features"), base_dir, rc.pipeline.features);
  if (document.contains("segmentation")) {
    const auto& s = document.at("segmentation");
    check_keys(s, "segmentation", {"min_tokens", "include_full_texts"});
    rc.pipeline.min_tokens = read_count(s, "min_tokens", "segmentation", rc.pipeline.min_tokens);
    read_opt(s, "include_full_texts", "segmentation", rc.pipeline.include_full_texts);
  }
  if (document.contains("dro")) parse_dro(document.at("dro"), rc.pipeline);
  if (document.contains("learner")) parse_learner(document.at("learner"), rc.pipeline.learner);
  if (document.contains("task")) parse_task(document.at("task"), rc);
  if (document.contains("seed")) {
    const auto& s = document.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("config.seed must be a non-negative integer");
    rc.seed = s.get<std::uint64_t>();
  }
  if (document.contains("output_dir")) rc.output_dir = base_dir / get<std::string>(document, "output_dir", "config");
  rc.threads = static_cast<unsigned>(read_count(document, "threads", "config", rc.threads));

  rc.pipeline.validate();
  if (rc.replicas == 0) throw ConfigError("task.replicas must be positive");
  if (rc.min_texts != 1 && rc.min_texts != 2) throw ConfigError("task.min_texts must be 1 or 2");
  for (FeatureBlock b : rc.ablation_pool) {
    if (!rc.pipeline.features.enabled(b)) {
      // the pool may name blocks beyond features.blocks; their lists must then be present
      rc.pipeline.features.with_blocks(rc.ablation_pool).validate();
      break;
    }
  }
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ordered_json doc;
  try {
    doc = ordered_json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

} // namespace avkit::cli
