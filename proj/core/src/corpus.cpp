#include "avkit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "avkit/error.hpp"
#include "avkit/random.hpp"
#include "utf8.hpp"

namespace avkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError(CorpusErrorKind::MissingFile, "cannot open file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_terminator(const Token& t) {
  return t.kind == TokenKind::Punctuation && (t.surface == "." || t.surface == "!" || t.surface == "?");
}

// "{q:" or "{Q:" at pos.
bool quote_open_at(std::string_view s, std::size_t pos) {
  return pos + 2 < s.size() && s[pos] == '{' && (s[pos + 1] == 'q' || s[pos + 1] == 'Q') &&
         s[pos + 2] == ':';
}

const std::set<std::string>& ud_pos_tags() {
  static const std::set<std::string> tags = {"ADJ",  "ADP",  "ADV",   "AUX",   "CCONJ", "DET",
                                             "INTJ", "NOUN", "NUM",   "PART",  "PRON",  "PROPN",
                                             "PUNCT", "SCONJ", "SYM", "VERB",  "X"};
  return tags;
}

const std::set<std::string>& ud_relations() {
  static const std::set<std::string> rels = {
      "acl",      "advcl", "advmod",    "amod",       "appos",  "aux",      "case",
      "cc",       "ccomp", "clf",       "compound",   "conj",   "cop",      "csubj",
      "dep",      "det",   "discourse", "dislocated", "expl",   "fixed",    "flat",
      "goeswith", "iobj",  "list",      "mark",       "nmod",   "nsubj",    "nummod",
      "obj",      "obl",   "orphan",    "parataxis",  "punct",  "reparandum", "root",
      "vocative", "xcomp"};
  return rels;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Tagset parse_tagset_header(std::string_view line) {
  if (!line.starts_with("#tagset")) {
    throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                      "annotation sidecar must start with a '#tagset' header line");
  }
  auto fields = split(line, '\t');
  if (fields.size() < 2 || trim(fields[1]).empty()) {
    throw CorpusError(CorpusErrorKind::AnnotationMismatch, "annotation header names no tagset");
  }
  Tagset ts;
  ts.name = std::string(trim(fields[1]));
  if (ts.name == "UD") {
    ts.pos_tags = ud_pos_tags();
    ts.dep_relations = ud_relations();
    ts.allow_subtypes = true;
    return ts;
  }
  for (std::size_t i = 2; i < fields.size(); ++i) {
    std::string_view f = trim(fields[i]);
    auto target = f.starts_with("pos=") ? &ts.pos_tags : f.starts_with("dep=") ? &ts.dep_relations : nullptr;
    if (!target) {
      throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                        "unrecognized annotation header field: " + std::string(f));
    }
    for (auto& tag : split(f.substr(4), ',')) {
      if (!tag.empty()) target->insert(tag);
    }
  }
  if (ts.pos_tags.empty() || ts.dep_relations.empty()) {
    throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                      "tagset '" + ts.name + "' is not built in and declares no pos=/dep= sets");
  }
  return ts;
}

// RFC 4180 style: quoted fields may contain commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw CorpusError(CorpusErrorKind::BadManifest, "unterminated quoted field in CSV manifest");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

void index_tokens(Document& doc) {
  doc.tokens = tokenize(doc.normalized_text);
  doc.sentences = split_sentences(doc.tokens);
  std::size_t w = 0;
  doc.word_index.reserve(doc.tokens.size());
  for (const auto& t : doc.tokens) doc.word_index.push_back(t.kind == TokenKind::Word ? w++ : Document::npos);
}

struct ManifestEntry {
  std::string id;
  std::optional<std::string> author;
  std::string title;
  std::optional<std::string> genre;
  std::string text_path;
  std::optional<std::string> annotations_path;
};

std::vector<ManifestEntry> read_csv_manifest(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw CorpusError(CorpusErrorKind::BadManifest, "empty manifest");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[std::string(trim(rows[0][i]))] = i;
  for (const char* required : {"id", "text_path"}) {
    if (!col.contains(required)) {
      throw CorpusError(CorpusErrorKind::BadManifest,
                        std::string("manifest header lacks required column '") + required + "'");
    }
  }
  auto get = [&](const std::vector<std::string>& row, const char* name) -> std::optional<std::string> {
    auto it = col.find(name);
    if (it == col.end() || it->second >= row.size()) return std::nullopt;
    return std::string(trim(row[it->second]));
  };
  std::vector<ManifestEntry> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ManifestEntry e;
    e.id = get(row, "id").value_or("");
    e.author = get(row, "author");
    e.title = get(row, "title").value_or("");
    e.genre = get(row, "genre");
    if (e.genre && e.genre->empty()) e.genre.reset();
    e.text_path = get(row, "text_path").value_or("");
    e.annotations_path = get(row, "annotations_path");
    if (e.annotations_path && e.annotations_path->empty()) e.annotations_path.reset();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> read_json_manifest(const json& j) {
  const json& docs = j.is_array() ? j : j.at("documents");
  std::vector<ManifestEntry> out;
  for (const auto& d : docs) {
    ManifestEntry e;
    e.id = d.value("id", "");
    if (d.contains("author") && d["author"].is_string()) e.author = d["author"].get<std::string>();
    e.title = d.value("title", "");
    if (d.contains("genre") && d["genre"].is_string()) e.genre = d["genre"].get<std::string>();
    e.text_path = d.value("text_path", "");
    if (d.contains("annotations_path") && d["annotations_path"].is_string())
      e.annotations_path = d["annotations_path"].get<std::string>();
    out.push_back(std::move(e));
  }
  return out;
}

Corpus read_cache(const json& j) {
  Corpus corpus;
  for (const auto& d : j.at("documents")) {
    std::optional<std::string> genre;
    if (d.contains("genre") && d["genre"].is_string()) genre = d["genre"].get<std::string>();
    Document doc;
    doc.id = d.at("id").get<std::string>();
    doc.author = d.at("author").get<std::string>();
    doc.title = d.value("title", "");
    doc.genre = genre;
    doc.raw_text = d.value("raw_text", "");
    doc.normalized_text = d.at("normalized_text").get<std::string>();
    index_tokens(doc);
    if (d.contains("annotations") && d["annotations"].is_object()) {
      AnnotationLayer layer;
      layer.document_id = doc.id;
      layer.tagset_name = d["annotations"].at("tagset").get<std::string>();
      layer.pos_tags = d["annotations"].at("pos").get<std::vector<std::string>>();
      layer.dep_relations = d["annotations"].at("dep").get<std::vector<std::string>>();
      if (layer.pos_tags.size() != doc.word_count() || layer.dep_relations.size() != doc.word_count()) {
        throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                          "cached annotations of '" + doc.id + "' do not match its word count");
      }
      doc.annotations = std::move(layer);
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

} // namespace

bool Tagset::has_pos(const std::string& tag) const { return pos_tags.contains(tag); }

bool Tagset::has_dep(const std::string& rel) const {
  if (dep_relations.contains(rel)) return true;
  if (!allow_subtypes) return false;
  const auto colon = rel.find(':');
  return colon != std::string::npos && dep_relations.contains(rel.substr(0, colon));
}

std::size_t Document::word_count() const {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(),
                                                [](const Token& t) { return t.kind == TokenKind::Word; }));
}

const Document* Corpus::find(std::string_view id) const {
  for (const auto& d : documents) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

std::vector<const Document*> Corpus::labelled() const {
  std::vector<const Document*> out;
  for (const auto& d : documents) {
    if (!d.is_disputed()) out.push_back(&d);
  }
  return out;
}

std::uint64_t Corpus::fingerprint() const {
  std::vector<const Document*> sorted;
  for (const auto& d : documents) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::uint64_t h = fnv1a("avkit-corpus");
  for (const auto* d : sorted) {
    h = fnv1a(d->id, h);
    h = fnv1a(std::string_view("\x1f", 1), h);
    h = fnv1a(d->author, h);
    h = fnv1a(std::string_view("\x1f", 1), h);
    h = fnv1a(d->normalized_text, h);
    h = fnv1a(std::string_view("\x1e", 1), h);
  }
  return h;
}

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::vector<std::size_t> open; // byte offsets of unclosed quote openers
  std::size_t i = 0;
  while (i < raw.size()) {
    if (quote_open_at(raw, i)) {
      open.push_back(i);
      i += 3;
      continue;
    }
    if (raw[i] == '}' && !open.empty()) {
      open.pop_back();
      ++i;
      continue;
    }
    if (raw[i] == '}') {
      throw CorpusError(CorpusErrorKind::UnbalancedQuote,
                        "unbalanced quotation delimiter '}' at byte offset " + std::to_string(i));
    }
    const auto d = utf8::decode(raw, i);
    if (!d.valid) {
      throw CorpusError(CorpusErrorKind::InvalidUtf8,
                        "invalid UTF-8 at byte offset " + std::to_string(i));
    }
    if (open.empty()) {
      char32_t cp = utf8::to_lower(d.cp);
      if (cp == 'v') cp = 'u';
      if (cp == 'j') cp = 'i';
      utf8::append(out, cp);
    }
    i += d.length;
  }
  if (!open.empty()) {
    throw CorpusError(CorpusErrorKind::UnbalancedQuote,
                      "unclosed quotation '{q:' at byte offset " + std::to_string(open.back()));
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  std::size_t word_start = std::string_view::npos;
  std::size_t word_chars = 0;
  auto flush_word = [&](std::size_t end) {
    if (word_start == std::string_view::npos) return;
    tokens.push_back({std::string(text.substr(word_start, end - word_start)), TokenKind::Word, word_chars});
    word_start = std::string_view::npos;
    word_chars = 0;
  };
  while (i < text.size()) {
    const auto d = utf8::decode(text, i);
    if (utf8::is_word_char(d.cp)) {
      if (word_start == std::string_view::npos) word_start = i;
      ++word_chars;
    } else {
      flush_word(i);
      if (!utf8::is_space(d.cp)) {
        tokens.push_back({std::string(text.substr(i, d.length)), TokenKind::Punctuation, 1});
      }
    }
    i += d.length;
  }
  flush_word(text.size());
  return tokens;
}

std::vector<TokenRange> split_sentences(std::span<const Token> tokens) {
  std::vector<TokenRange> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_terminator(tokens[i])) {
      out.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < tokens.size()) out.push_back({start, tokens.size()});
  return out;
}

std::vector<Segment> segment(const Document& doc, std::size_t min_tokens) {
  if (min_tokens == 0) throw ConfigError("segment: min_tokens must be positive");
  std::vector<Segment> out;
  std::size_t open_begin = 0;
  bool open = false;
  for (const auto& s : doc.sentences) {
    if (!open) {
      open_begin = s.begin;
      open = true;
    }
    if (s.end - open_begin >= min_tokens) {
      out.push_back({doc.id, out.size(), {open_begin, s.end}});
      open = false;
    }
  }
  if (open) out.push_back({doc.id, out.size(), {open_begin, doc.sentences.back().end}});
  return out;
}

Document make_document(std::string id, std::string author, std::string title,
                       std::optional<std::string> genre, std::string raw_text) {
  Document doc;
  doc.id = std::move(id);
  doc.author = std::move(author);
  doc.title = std::move(title);
  doc.genre = std::move(genre);
  doc.raw_text = std::move(raw_text);
  doc.normalized_text = normalize(doc.raw_text);
  index_tokens(doc);
  return doc;
}

AnnotationLayer parse_annotations(std::string_view content, const Document& doc) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    lines.push_back(content.substr(start, end - start));
    start = end + 1;
  }
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) {
    throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                      "annotation sidecar for '" + doc.id + "' has no '#tagset' header");
  }
  const Tagset tagset = parse_tagset_header(trim(lines[first]));

  std::vector<const Token*> words;
  for (const auto& t : doc.tokens) {
    if (t.kind == TokenKind::Word) words.push_back(&t);
  }
  AnnotationLayer layer;
  layer.document_id = doc.id;
  layer.tagset_name = tagset.name;
  std::size_t row = 0;
  for (std::size_t ln = first + 1; ln < lines.size(); ++ln) {
    std::string_view line = lines[ln];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                        "annotation line " + std::to_string(ln + 1) + " of '" + doc.id +
                            "' must have 3 tab-separated fields");
    }
    if (row >= words.size()) {
      throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                        "annotation of '" + doc.id + "' has more rows than the " +
                            std::to_string(words.size()) + " word tokens");
    }
    if (normalize(fields[0]) != words[row]->surface) {
      throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                        "annotation row " + std::to_string(row + 1) + " of '" + doc.id + "' is '" +
                            fields[0] + "' but word token is '" + words[row]->surface + "'");
    }
    if (!tagset.has_pos(fields[1])) {
      throw CorpusError(CorpusErrorKind::UnknownTag,
                        "POS tag '" + fields[1] + "' not in tagset " + tagset.name);
    }
    if (!tagset.has_dep(fields[2])) {
      throw CorpusError(CorpusErrorKind::UnknownTag,
                        "dependency relation '" + fields[2] + "' not in tagset " + tagset.name);
    }
    layer.pos_tags.push_back(fields[1]);
    layer.dep_relations.push_back(fields[2]);
    ++row;
  }
  if (row != words.size()) {
    throw CorpusError(CorpusErrorKind::AnnotationMismatch,
                      "annotation of '" + doc.id + "' has " + std::to_string(row) + " rows for " +
                          std::to_string(words.size()) + " word tokens");
  }
  return layer;
}

AnnotationLayer load_annotations(const fs::path& path, const Document& doc) {
  return parse_annotations(read_file(path), doc);
}

std::vector<std::string> load_word_list(const fs::path& path) {
  const std::string content = read_file(path);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& line : split(content, '\n')) {
    std::string_view entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    std::string norm = normalize(entry);
    if (seen.insert(norm).second) out.push_back(std::move(norm));
  }
  return out;
}

Corpus load_corpus(const fs::path& manifest_path) {
  const std::string content = read_file(manifest_path);
  const fs::path base = manifest_path.parent_path();

  std::vector<ManifestEntry> entries;
  const auto ext = manifest_path.extension().string();
  if (ext == ".json") {
    json j;
    try {
      j = json::parse(content);
    } catch (const json::exception& e) {
      throw CorpusError(CorpusErrorKind::BadManifest, "malformed JSON manifest: " + std::string(e.what()));
    }
    try {
      if (j.is_object() && j.value("format", "") == "avkit-corpus-cache") return read_cache(j);
      entries = read_json_manifest(j);
    } catch (const json::exception& e) {
      throw CorpusError(CorpusErrorKind::BadManifest, "malformed JSON manifest: " + std::string(e.what()));
    }
  } else {
    entries = read_csv_manifest(content);
  }

  Corpus corpus;
  std::unordered_set<std::string> ids;
  for (auto& e : entries) {
    if (e.id.empty()) throw CorpusError(CorpusErrorKind::BadManifest, "manifest record without id");
    if (!ids.insert(e.id).second) {
      throw CorpusError(CorpusErrorKind::DuplicateId, "duplicate document id '" + e.id + "'");
    }
    if (!e.author || e.author->empty()) {
      throw CorpusError(CorpusErrorKind::MissingAuthor, "document '" + e.id + "' declares no author");
    }
    if (e.text_path.empty()) {
      throw CorpusError(CorpusErrorKind::BadManifest, "document '" + e.id + "' has no text_path");
    }
    const fs::path text_path = base / e.text_path;
    if (!fs::exists(text_path)) {
      throw CorpusError(CorpusErrorKind::MissingFile,
                        "text file of '" + e.id + "' not found: " + text_path.string());
    }
    Document doc = make_document(e.id, *e.author, e.title, e.genre, read_file(text_path));
    if (doc.tokens.empty()) {
      throw CorpusError(CorpusErrorKind::EmptyText, "document '" + e.id + "' has no tokens");
    }
    if (e.annotations_path) {
      const fs::path ann = base / *e.annotations_path;
      if (!fs::exists(ann)) {
        throw CorpusError(CorpusErrorKind::MissingFile,
                          "annotation file of '" + e.id + "' not found: " + ann.string());
      }
      doc.annotations = load_annotations(ann, doc);
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

void write_corpus_cache(const Corpus& corpus, const fs::path& path) {
  json j;
  j["format"] = "avkit-corpus-cache";
  j["version"] = 1;
  j["documents"] = json::array();
  for (const auto& d : corpus.documents) {
    json jd;
    jd["id"] = d.id;
    jd["author"] = d.author;
    jd["title"] = d.title;
    jd["genre"] = d.genre ? json(*d.genre) : json(nullptr);
    jd["raw_text"] = d.raw_text;
    jd["normalized_text"] = d.normalized_text;
    if (d.annotations) {
      jd["annotations"] = {{"tagset", d.annotations->tagset_name},
                           {"pos", d.annotations->pos_tags},
                           {"dep", d.annotations->dep_relations}};
    }
    j["documents"].push_back(std::move(jd));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus cache: " + path.string());
  out << j.dump(1) << '\n';
}

} // namespace avkit
