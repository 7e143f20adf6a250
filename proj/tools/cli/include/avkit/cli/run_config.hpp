#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "avkit/experiments.hpp"
#include "avkit/loo.hpp"

namespace avkit::cli {

// A parsed run configuration. Relative paths resolve against the config file's directory.
struct RunConfig {
  nlohmann::ordered_json document; // as read, embedded verbatim in reports
  std::filesystem::path base_dir;

  std::filesystem::path corpus;
  PipelineConfig pipeline;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "avkit-out";
  unsigned threads = 0; // 0: hardware concurrency

  LooTask loo_task = LooTask::Verification;
  std::optional<std::string> disputed_id;
  std::set<FeatureBlock> ablation_pool; // empty: the enabled blocks
  AblationMode ablation_mode = AblationMode::ExactLoo;
  std::size_t replicas = 10;
  std::size_t min_texts = 1;
  std::size_t top_k = 10;
};

// Throws ConfigError on malformed JSON, unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const nlohmann::ordered_json& document, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

AblationMode parse_ablation_mode(std::string_view name);

} // namespace avkit::cli
