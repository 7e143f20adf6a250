#include "avkit/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "avkit/error.hpp"
#include "avkit/random.hpp"
#include "utf8.hpp"

namespace avkit {

namespace {

constexpr std::array<std::string_view, kBlockCount> kBlockNames = {
    "TokenLengths", "FunctionWords", "SentenceLengths", "PosNgrams",  "CharNgrams",
    "DepNgrams",    "VerbalEndings", "MaskedDVMA",      "MaskedDVEX",
};

constexpr std::string_view kTagJoin = "\xC2\xB7"; // middle dot

FeatureCounts tag_ngrams(const Instance& inst, const std::vector<std::string>& tags,
                         const std::set<int>& orders) {
  FeatureCounts out;
  const auto& doc = *inst.doc;
  std::vector<const std::string*> sentence_tags;
  for (const auto& s : inst.sentences()) {
    sentence_tags.clear();
    for (std::size_t t = s.begin; t < s.end; ++t) {
      const auto w = doc.word_index[t];
      if (w != Document::npos) sentence_tags.push_back(&tags[w]);
    }
    for (int n : orders) {
      const auto order = static_cast<std::size_t>(n);
      if (sentence_tags.size() < order) continue;
      for (std::size_t i = 0; i + order <= sentence_tags.size(); ++i) {
        std::string key = *sentence_tags[i];
        for (std::size_t k = 1; k < order; ++k) {
          key += kTagJoin;
          key += *sentence_tags[i + k];
        }
        out[key] += 1.0;
      }
    }
  }
  return out;
}

const AnnotationLayer& require_layer(const Instance& inst, std::string_view what) {
  if (!inst.doc->annotations) {
    throw ConfigError(std::string(what) + " enabled but document '" + inst.doc->id +
                      "' has no annotation layer");
  }
  return *inst.doc->annotations;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

} // namespace

std::string_view block_name(FeatureBlock block) { return kBlockNames[block_slot(block)]; }

FeatureBlock parse_block(std::string_view name) {
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    if (kBlockNames[i] == name) return kAllBlocks[i];
  }
  throw ConfigError("unknown feature block '" + std::string(name) + "'");
}

bool is_ngram_block(FeatureBlock b) {
  return b == FeatureBlock::PosNgrams || b == FeatureBlock::CharNgrams || b == FeatureBlock::DepNgrams ||
         b == FeatureBlock::MaskedDVMA || b == FeatureBlock::MaskedDVEX;
}

bool is_fixed_list_block(FeatureBlock b) {
  return b == FeatureBlock::FunctionWords || b == FeatureBlock::VerbalEndings;
}

std::set<int> FeatureConfig::orders(FeatureBlock block) const {
  auto it = ngram_orders.find(block);
  return it == ngram_orders.end() ? std::set<int>{1, 2, 3} : it->second;
}

FeatureConfig FeatureConfig::with_blocks(std::set<FeatureBlock> blocks) const {
  FeatureConfig copy = *this;
  copy.enabled_blocks = std::move(blocks);
  return copy;
}

void FeatureConfig::validate() const {
  if (enabled_blocks.empty()) throw ConfigError("no feature block enabled");
  for (auto [block, ords] : ngram_orders) {
    if (!is_ngram_block(block)) {
      throw ConfigError("n-gram orders given for non-n-gram block " + std::string(block_name(block)));
    }
  }
  for (FeatureBlock b : enabled_blocks) {
    if (is_ngram_block(b)) {
      const auto ords = orders(b);
      if (ords.empty()) throw ConfigError(std::string(block_name(b)) + ": empty n-gram order set");
      for (int n : ords) {
        if (n < 1 || n > 3) {
          throw ConfigError(std::string(block_name(b)) + ": n-gram order " + std::to_string(n) +
                            " outside {1,2,3}");
        }
      }
    }
  }
  const bool needs_fw = enabled(FeatureBlock::FunctionWords) || enabled(FeatureBlock::MaskedDVMA) ||
                        enabled(FeatureBlock::MaskedDVEX);
  if (needs_fw && function_words.empty()) throw ConfigError("function word list is empty");
  if (enabled(FeatureBlock::VerbalEndings) && verbal_endings.empty())
    throw ConfigError("verbal ending list is empty");
}

Instance Instance::whole(const Document& doc) { return {doc.id, &doc, {0, doc.tokens.size()}}; }

Instance Instance::of_segment(const Document& doc, const Segment& seg) {
  return {seg.id(), &doc, seg.token_range};
}

std::span<const Token> Instance::tokens() const {
  return std::span<const Token>(doc->tokens).subspan(range.begin, range.size());
}

std::vector<TokenRange> Instance::sentences() const {
  std::vector<TokenRange> out;
  for (const auto& s : doc->sentences) {
    if (s.begin >= range.begin && s.end <= range.end) out.push_back(s);
  }
  return out;
}

std::string Instance::text() const {
  std::string out;
  for (const auto& t : tokens()) {
    if (!out.empty()) out.push_back(' ');
    out += t.surface;
  }
  return out;
}

FeatureCounts extract_token_lengths(const Instance& inst) {
  FeatureCounts out;
  for (const auto& t : inst.tokens()) {
    if (t.kind == TokenKind::Word) out[std::to_string(t.char_length)] += 1.0;
  }
  return out;
}

FeatureCounts extract_function_words(const Instance& inst, std::span<const std::string> list) {
  if (list.empty()) throw ConfigError("function word list is empty");
  const std::unordered_set<std::string> words(list.begin(), list.end());
  FeatureCounts out;
  for (const auto& t : inst.tokens()) {
    if (t.kind == TokenKind::Word && words.contains(t.surface)) out[t.surface] += 1.0;
  }
  return out;
}

FeatureCounts extract_sentence_lengths(const Instance& inst) {
  FeatureCounts out;
  const auto& tokens = inst.doc->tokens;
  for (const auto& s : inst.sentences()) {
    std::size_t chars = 0;
    for (std::size_t i = s.begin; i < s.end; ++i) chars += tokens[i].char_length;
    out[std::to_string(chars)] += 1.0;
  }
  return out;
}

FeatureCounts char_ngrams(std::string_view text, const std::set<int>& orders) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < text.size(); i += utf8::decode(text, i).length) starts.push_back(i);
  starts.push_back(text.size());
  const std::size_t chars = starts.size() - 1;
  FeatureCounts out;
  for (int n : orders) {
    const auto order = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + order <= chars; ++i) {
      out[std::string(text.substr(starts[i], starts[i + order] - starts[i]))] += 1.0;
    }
  }
  return out;
}

FeatureCounts extract_char_ngrams(const Instance& inst, const std::set<int>& orders) {
  return char_ngrams(inst.text(), orders);
}

FeatureCounts extract_pos_ngrams(const Instance& inst, const std::set<int>& orders) {
  return tag_ngrams(inst, require_layer(inst, "PosNgrams").pos_tags, orders);
}

FeatureCounts extract_dep_ngrams(const Instance& inst, const std::set<int>& orders) {
  return tag_ngrams(inst, require_layer(inst, "DepNgrams").dep_relations, orders);
}

FeatureCounts extract_verbal_endings(const Instance& inst, std::span<const std::string> list) {
  if (list.empty()) throw ConfigError("verbal ending list is empty");
  std::vector<std::string> endings(list.begin(), list.end());
  std::sort(endings.begin(), endings.end(),
            [](const auto& a, const auto& b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
  FeatureCounts out;
  for (const auto& t : inst.tokens()) {
    if (t.kind != TokenKind::Word) continue;
    for (const auto& e : endings) {
      if (t.surface.ends_with(e)) {
        out[e] += 1.0;
        break;
      }
    }
  }
  return out;
}

MaskVariant parse_mask_variant(std::string_view name) {
  if (name == "DVMA") return MaskVariant::DVMA;
  if (name == "DVEX") return MaskVariant::DVEX;
  throw ConfigError("unknown masking variant '" + std::string(name) + "'");
}

std::string masked_text(const Instance& inst, MaskVariant variant,
                        std::span<const std::string> function_words) {
  const std::unordered_set<std::string> keep(function_words.begin(), function_words.end());
  std::string out;
  for (const auto& t : inst.tokens()) {
    if (!out.empty()) out.push_back(' ');
    if (t.kind != TokenKind::Word || keep.contains(t.surface)) {
      out += t.surface;
      continue;
    }
    if (variant == MaskVariant::DVMA) {
      out.append(t.char_length, '*');
      continue;
    }
    const auto first = utf8::decode(t.surface, 0).length;
    if (t.char_length <= 2) {
      out += t.surface;
      continue;
    }
    std::size_t last = t.surface.size() - 1;
    while ((static_cast<unsigned char>(t.surface[last]) & 0xC0) == 0x80) --last;
    out += t.surface.substr(0, first);
    out.append(t.char_length - 2, '*');
    out += t.surface.substr(last);
  }
  return out;
}

FeatureCounts extract_masked_ngrams(const Instance& inst, MaskVariant variant,
                                    std::span<const std::string> function_words,
                                    const std::set<int>& orders) {
  if (function_words.empty()) throw ConfigError("function word list is empty");
  return char_ngrams(masked_text(inst, variant, function_words), orders);
}

double ExtractedInstance::occurrences(const std::set<FeatureBlock>& enabled) const {
  double total = 0.0;
  for (FeatureBlock b : enabled) {
    for (const auto& [name, count] : block(b)) total += count;
  }
  return total;
}

ExtractedInstance extract(const Instance& inst, const FeatureConfig& config) {
  ExtractedInstance out;
  out.id = inst.id;
  out.group = inst.doc->id;
  for (FeatureBlock b : config.enabled_blocks) {
    auto& slot = out.blocks[block_slot(b)];
    switch (b) {
    case FeatureBlock::TokenLengths: slot = extract_token_lengths(inst); break;
    case FeatureBlock::FunctionWords: slot = extract_function_words(inst, config.function_words); break;
    case FeatureBlock::SentenceLengths: slot = extract_sentence_lengths(inst); break;
    case FeatureBlock::PosNgrams: slot = extract_pos_ngrams(inst, config.orders(b)); break;
    case FeatureBlock::CharNgrams: slot = extract_char_ngrams(inst, config.orders(b)); break;
    case FeatureBlock::DepNgrams: slot = extract_dep_ngrams(inst, config.orders(b)); break;
    case FeatureBlock::VerbalEndings: slot = extract_verbal_endings(inst, config.verbal_endings); break;
    case FeatureBlock::MaskedDVMA:
      slot = extract_masked_ngrams(inst, MaskVariant::DVMA, config.function_words, config.orders(b));
      break;
    case FeatureBlock::MaskedDVEX:
      slot = extract_masked_ngrams(inst, MaskVariant::DVEX, config.function_words, config.orders(b));
      break;
    }
  }
  return out;
}

// ---- FeatureSpace ----

FeatureSpace FeatureSpace::fit(std::span<const ExtractedInstance> training, const FeatureConfig& config) {
  std::vector<const ExtractedInstance*> ptrs;
  ptrs.reserve(training.size());
  for (const auto& inst : training) ptrs.push_back(&inst);
  return fit(std::span<const ExtractedInstance* const>(ptrs), config);
}

FeatureSpace FeatureSpace::fit(std::span<const ExtractedInstance* const> training, const FeatureConfig& config) {
  if (training.empty()) throw Error("fit_feature_space: empty training set");
  FeatureSpace space;
  space.training_size_ = training.size();
  space.blocks_ = config.enabled_blocks;
  const double n = static_cast<double>(training.size());

  for (FeatureBlock b : kAllBlocks) {
    if (!config.enabled(b)) continue;
    std::map<std::string, std::size_t> df;
    for (const auto* inst : training) {
      for (const auto& [name, count] : inst->block(b)) {
        if (count > 0.0) ++df[name];
      }
    }
    std::vector<std::pair<std::string, std::size_t>> entries;
    if (is_fixed_list_block(b)) {
      // list order; a listed word absent from training keeps df = 0
      const auto& list = b == FeatureBlock::FunctionWords ? config.function_words : config.verbal_endings;
      std::unordered_set<std::string> seen;
      for (const auto& w : list) {
        if (seen.insert(w).second) entries.emplace_back(w, df[w]);
      }
    } else {
      entries.assign(df.begin(), df.end());
    }
    for (auto& [name, d] : entries) {
      const double idf = std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0;
      space.columns_.push_back({b, name, d, idf});
    }
  }
  space.rebuild_index();
  return space;
}

void FeatureSpace::rebuild_index() {
  ranges_.fill({0, 0});
  for (auto& m : lookup_) m.clear();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto slot = block_slot(columns_[i].block);
    const auto col = static_cast<std::uint32_t>(i);
    if (lookup_[slot].empty()) ranges_[slot] = {col, col};
    ranges_[slot].second = col + 1;
    lookup_[slot].emplace(columns_[i].name, col);
  }
}

std::optional<std::uint32_t> FeatureSpace::find(FeatureBlock block, const std::string& name) const {
  const auto& m = lookup_[block_slot(block)];
  auto it = m.find(name);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

std::pair<std::uint32_t, std::uint32_t> FeatureSpace::block_range(FeatureBlock block) const {
  return ranges_[block_slot(block)];
}

std::size_t FeatureSpace::block_size(FeatureBlock block) const {
  const auto [first, last] = block_range(block);
  return last - first;
}

std::string FeatureSpace::feature_name(std::uint32_t index) const {
  const auto& c = columns_.at(index);
  return std::string(block_name(c.block)) + ":" + c.name;
}

SparseVector FeatureSpace::vectorize(const ExtractedInstance& inst) const {
  SparseVector v;
  v.instance_id = inst.id;
  v.dimension = dimension();
  std::vector<std::pair<std::uint32_t, double>> block_entries;
  for (FeatureBlock b : kAllBlocks) {
    if (!blocks_.contains(b)) continue;
    const auto& counts = inst.block(b);
    double total = 0.0;
    for (const auto& [name, count] : counts) total += count;
    if (total <= 0.0) continue;
    block_entries.clear();
    double sq = 0.0;
    const auto& m = lookup_[block_slot(b)];
    for (const auto& [name, count] : counts) {
      if (count <= 0.0) continue;
      auto it = m.find(name);
      if (it == m.end()) continue;
      const double value = (count / total) * columns_[it->second].idf;
      block_entries.emplace_back(it->second, value);
      sq += value * value;
    }
    if (sq <= 0.0) continue;
    const double norm = std::sqrt(sq);
    std::sort(block_entries.begin(), block_entries.end());
    for (auto [col, value] : block_entries) {
      v.indices.push_back(col);
      v.values.push_back(value / norm);
    }
  }
  return v;
}

std::uint64_t FeatureSpace::fingerprint() const { return fnv1a(to_text()); }

std::string FeatureSpace::to_text() const {
  std::string out = "avkit-feature-space\t1\n";
  out += "training_size\t" + std::to_string(training_size_) + "\n";
  out += "blocks\t";
  bool first = true;
  for (FeatureBlock b : kAllBlocks) {
    if (!blocks_.contains(b)) continue;
    if (!first) out += ',';
    out += block_name(b);
    first = false;
  }
  out += "\ncolumns\t" + std::to_string(columns_.size()) + "\n";
  out += "block\tname\tdf\tidf\n";
  for (const auto& c : columns_) {
    out += block_name(c.block);
    out += '\t';
    out += c.name;
    out += '\t';
    out += std::to_string(c.df);
    out += '\t';
    out += format_double(c.idf);
    out += '\n';
  }
  return out;
}

FeatureSpace FeatureSpace::from_text(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  auto fail = [](const std::string& why) -> Error { return Error("feature space file: " + why); };
  if (lines.size() < 5 || lines[0] != "avkit-feature-space\t1") throw fail("bad header or version");
  auto value_of = [&](std::string_view line, std::string_view key) {
    if (!line.starts_with(key) || line.size() <= key.size() || line[key.size()] != '\t')
      throw fail("expected '" + std::string(key) + "'");
    return line.substr(key.size() + 1);
  };
  FeatureSpace space;
  space.training_size_ = std::stoul(std::string(value_of(lines[1], "training_size")));
  std::string_view blocks = value_of(lines[2], "blocks");
  while (!blocks.empty()) {
    auto comma = blocks.find(',');
    space.blocks_.insert(parse_block(blocks.substr(0, comma)));
    blocks = comma == std::string_view::npos ? std::string_view{} : blocks.substr(comma + 1);
  }
  const auto count = std::stoul(std::string(value_of(lines[3], "columns")));
  if (lines.size() != 5 + count) throw fail("column count mismatch");
  for (std::size_t i = 5; i < lines.size(); ++i) {
    const auto line = lines[i];
    const auto t1 = line.find('\t');
    const auto t3 = line.rfind('\t');
    const auto t2 = t3 == std::string_view::npos ? t3 : line.rfind('\t', t3 - 1);
    if (t1 == std::string_view::npos || t2 == std::string_view::npos || t2 < t1)
      throw fail("malformed row " + std::to_string(i + 1));
    Column c;
    c.block = parse_block(line.substr(0, t1));
    c.name = std::string(line.substr(t1 + 1, t2 - t1 - 1));
    c.df = std::stoul(std::string(line.substr(t2 + 1, t3 - t2 - 1)));
    const auto idf_text = line.substr(t3 + 1);
    std::from_chars(idf_text.data(), idf_text.data() + idf_text.size(), c.idf);
    space.columns_.push_back(std::move(c));
  }
  space.rebuild_index();
  return space;
}

void FeatureSpace::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature space: " + path.string());
  out << to_text();
}

FeatureSpace FeatureSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read feature space: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

} // namespace avkit
