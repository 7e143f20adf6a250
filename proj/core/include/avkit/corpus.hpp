#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace avkit {

// Author value reserved for texts of disputed authorship.
inline constexpr std::string_view kUnknownAuthor = "UNKNOWN";

enum class TokenKind { Word, Punctuation };

struct Token {
  std::string surface;
  TokenKind kind = TokenKind::Word;
  std::size_t char_length = 0; // code points

  bool operator==(const Token&) const = default;
};

// Half-open interval of token indices.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const TokenRange&) const = default;
};

struct Tagset {
  std::string name;
  std::set<std::string> pos_tags;
  std::set<std::string> dep_relations;
  // Accept "base:subtype" when "base" is declared (UD convention).
  bool allow_subtypes = false;

  bool has_pos(const std::string& tag) const;
  bool has_dep(const std::string& rel) const;
};

// POS and dependency labels, one per word token of a document.
struct AnnotationLayer {
  std::string document_id;
  std::string tagset_name;
  std::vector<std::string> pos_tags;
  std::vector<std::string> dep_relations;
};

struct Document {
  std::string id;
  std::string author;
  std::string title;
  std::optional<std::string> genre;
  std::string raw_text;
  std::string normalized_text;
  std::vector<Token> tokens;
  std::vector<TokenRange> sentences;
  // For each token, its ordinal among word tokens, or npos for punctuation.
  std::vector<std::size_t> word_index;
  std::optional<AnnotationLayer> annotations;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  bool is_disputed() const { return author == kUnknownAuthor; }
  std::size_t word_count() const;
};

struct Segment {
  std::string parent_id;
  std::size_t index = 0;
  TokenRange token_range;

  std::size_t token_count() const noexcept { return token_range.size(); }
  std::string id() const { return parent_id + "#" + std::to_string(index); }
};

struct Corpus {
  std::vector<Document> documents;

  const Document* find(std::string_view id) const;
  std::vector<const Document*> labelled() const;
  // 64-bit digest over (id, author, normalized text) in id order.
  std::uint64_t fingerprint() const;
};

// Lowercases, maps v->u and j->i, and deletes {q:...} quoted spans.
// Throws CorpusError(UnbalancedQuote) naming the byte offset.
std::string normalize(std::string_view raw_text);

std::vector<Token> tokenize(std::string_view normalized_text);

// Sentence ends after '.', '!' or '?'; a trailing unterminated run is a final sentence.
std::vector<TokenRange> split_sentences(std::span<const Token> tokens);

// Greedy sentence accumulation: a segment closes once it holds >= min_tokens tokens.
std::vector<Segment> segment(const Document& doc, std::size_t min_tokens = 400);

// Builds a fully processed document from raw text.
Document make_document(std::string id, std::string author, std::string title,
                       std::optional<std::string> genre, std::string raw_text);

// Reads a CSV or JSON manifest (or an ingest cache) and processes every document.
Corpus load_corpus(const std::filesystem::path& manifest_path);

AnnotationLayer load_annotations(const std::filesystem::path& path, const Document& doc);
AnnotationLayer parse_annotations(std::string_view content, const Document& doc);

// Plain list file: one entry per line; blank lines and '#' comments skipped;
// entries are normalized.
std::vector<std::string> load_word_list(const std::filesystem::path& path);

// Serializes a processed corpus so later runs can skip file loading and quote removal.
void write_corpus_cache(const Corpus& corpus, const std::filesystem::path& path);

} // namespace avkit
