#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "avkit/corpus.hpp"
#include "avkit/sparse.hpp"

namespace avkit {

enum class FeatureBlock : std::uint8_t {
  TokenLengths,
  FunctionWords,
  SentenceLengths,
  PosNgrams,
  CharNgrams,
  DepNgrams,
  VerbalEndings,
  MaskedDVMA,
  MaskedDVEX,
};

inline constexpr std::size_t kBlockCount = 9;

inline constexpr std::array<FeatureBlock, kBlockCount> kAllBlocks = {
    FeatureBlock::TokenLengths, FeatureBlock::FunctionWords, FeatureBlock::SentenceLengths,
    FeatureBlock::PosNgrams,    FeatureBlock::CharNgrams,    FeatureBlock::DepNgrams,
    FeatureBlock::VerbalEndings, FeatureBlock::MaskedDVMA,   FeatureBlock::MaskedDVEX,
};

std::string_view block_name(FeatureBlock block);
// Throws ConfigError on an unknown name.
FeatureBlock parse_block(std::string_view name);
bool is_ngram_block(FeatureBlock block);
bool is_fixed_list_block(FeatureBlock block);

constexpr std::size_t block_slot(FeatureBlock block) { return static_cast<std::size_t>(block); }

using FeatureCounts = std::map<std::string, double>;

struct FeatureConfig {
  std::set<FeatureBlock> enabled_blocks;
  // Orders for the n-gram blocks (POS, char, dep, masked); missing entries mean {1,2,3}.
  std::map<FeatureBlock, std::set<int>> ngram_orders;
  std::vector<std::string> function_words;
  std::vector<std::string> verbal_endings;

  std::set<int> orders(FeatureBlock block) const;
  bool enabled(FeatureBlock block) const { return enabled_blocks.contains(block); }
  FeatureConfig with_blocks(std::set<FeatureBlock> blocks) const;
  // Throws ConfigError.
  void validate() const;
};

// A full document or one of its segments.
struct Instance {
  std::string id;
  const Document* doc = nullptr;
  TokenRange range;

  static Instance whole(const Document& doc);
  static Instance of_segment(const Document& doc, const Segment& seg);

  std::span<const Token> tokens() const;
  // Sentences lying inside the range.
  std::vector<TokenRange> sentences() const;
  // Tokens joined by single spaces.
  std::string text() const;
};

FeatureCounts extract_token_lengths(const Instance& inst);
FeatureCounts extract_function_words(const Instance& inst, std::span<const std::string> list);
FeatureCounts extract_sentence_lengths(const Instance& inst);
FeatureCounts extract_char_ngrams(const Instance& inst, const std::set<int>& orders);
FeatureCounts extract_pos_ngrams(const Instance& inst, const std::set<int>& orders);
FeatureCounts extract_dep_ngrams(const Instance& inst, const std::set<int>& orders);
FeatureCounts extract_verbal_endings(const Instance& inst, std::span<const std::string> list);

enum class MaskVariant { DVMA, DVEX };
MaskVariant parse_mask_variant(std::string_view name);

// Masks every word token not in the function-word list and joins tokens with spaces.
std::string masked_text(const Instance& inst, MaskVariant variant,
                        std::span<const std::string> function_words);
FeatureCounts extract_masked_ngrams(const Instance& inst, MaskVariant variant,
                                    std::span<const std::string> function_words,
                                    const std::set<int>& orders);

// Code-point n-grams of a UTF-8 string.
FeatureCounts char_ngrams(std::string_view text, const std::set<int>& orders);

// Raw per-block counts of one instance, independent of any training set.
struct ExtractedInstance {
  std::string id;
  std::string group; // parent document id
  std::array<FeatureCounts, kBlockCount> blocks;

  const FeatureCounts& block(FeatureBlock b) const { return blocks[block_slot(b)]; }
  // Total feature occurrences over the given blocks.
  double occurrences(const std::set<FeatureBlock>& enabled) const;
};

ExtractedInstance extract(const Instance& inst, const FeatureConfig& config);

class FeatureSpace {
public:
  struct Column {
    FeatureBlock block;
    std::string name;
    std::size_t df = 0;
    double idf = 1.0;
  };

  FeatureSpace() = default;

  // Vocabulary, document frequencies and smoothed IDF from the training instances only.
  static FeatureSpace fit(std::span<const ExtractedInstance> training, const FeatureConfig& config);
  static FeatureSpace fit(std::span<const ExtractedInstance* const> training, const FeatureConfig& config);

  std::size_t dimension() const noexcept { return columns_.size(); }
  std::size_t training_size() const noexcept { return training_size_; }
  const std::set<FeatureBlock>& blocks() const noexcept { return blocks_; }
  const Column& column(std::uint32_t index) const { return columns_.at(index); }
  std::optional<std::uint32_t> find(FeatureBlock block, const std::string& name) const;
  // [first, last) columns of a block; empty when the block is disabled.
  std::pair<std::uint32_t, std::uint32_t> block_range(FeatureBlock block) const;
  std::size_t block_size(FeatureBlock block) const;
  std::string feature_name(std::uint32_t index) const;

  // Per-block relative frequency times IDF, then per-block L2 normalization.
  SparseVector vectorize(const ExtractedInstance& inst) const;

  std::uint64_t fingerprint() const;
  std::string to_text() const;
  static FeatureSpace from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static FeatureSpace load(const std::filesystem::path& path);

private:
  void rebuild_index();

  std::vector<Column> columns_;
  std::set<FeatureBlock> blocks_;
  std::array<std::pair<std::uint32_t, std::uint32_t>, kBlockCount> ranges_{};
  std::array<std::unordered_map<std::string, std::uint32_t>, kBlockCount> lookup_;
  std::size_t training_size_ = 0;
};

inline FeatureSpace fit_feature_space(std::span<const ExtractedInstance> training,
                                      const FeatureConfig& config) {
  return FeatureSpace::fit(training, config);
}

inline SparseVector vectorize(const ExtractedInstance& inst, const FeatureSpace& space) {
  return space.vectorize(inst);
}

} // namespace avkit
