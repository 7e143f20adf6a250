#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "avkit/corpus.hpp"
#include "avkit/error.hpp"
#include "support/synthetic_corpus.hpp"

namespace avkit {
namespace {

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

// Document made of sentences with the given token counts (last token of each is '.').
Document doc_with_sentences(const std::vector<std::size_t>& lengths) {
  std::string text;
  for (auto n : lengths) {
    for (std::size_t i = 0; i + 1 < n; ++i) text += "uerbum ";
    text += ". ";
  }
  return make_document("d", "A", "", std::nullopt, text);
}

CorpusErrorKind corpus_error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const CorpusError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no CorpusError thrown";
  return CorpusErrorKind::BadManifest;
}

TEST(Normalize, MapsLettersAndCase) {
  EXPECT_EQ(normalize("Vox Jovis"), "uox iouis");
  EXPECT_EQ(normalize(""), "");
  EXPECT_EQ(normalize("ÆTAS Ēius"), "ætas ēius");
}

TEST(Normalize, DeletesQuotedSpans) {
  EXPECT_EQ(normalize("terra {q:aqua est} manet"), "terra  manet");
  EXPECT_EQ(normalize("a {q:b {q:c} d} e"), "a  e");
  EXPECT_EQ(normalize("a {Q:b} c"), "a  c");
}

TEST(Normalize, UnbalancedQuoteNamesOffset) {
  try {
    normalize("ab {q:cd");
    FAIL();
  } catch (const CorpusError& e) {
    EXPECT_EQ(e.kind(), CorpusErrorKind::UnbalancedQuote);
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
  EXPECT_EQ(corpus_error_kind([] { normalize("ab } c"); }), CorpusErrorKind::UnbalancedQuote);
}

TEST(Normalize, RejectsInvalidUtf8) {
  EXPECT_EQ(corpus_error_kind([] { normalize("ab\xff"); }), CorpusErrorKind::InvalidUtf8);
}

TEST(Normalize, IsIdempotentOnRandomText) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"a", "V", "j", "J", " ", ".", ",", "{q:x}", "É", "ß", "\n", "7", "!"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const auto len = rng() % 30;
    for (std::size_t i = 0; i < len; ++i) s += pieces[rng() % pieces.size()];
    const auto once = normalize(s);
    EXPECT_EQ(normalize(once), once) << s;
  }
}

TEST(Tokenize, SplitsWordsAndPunctuation) {
  const auto t = tokenize("aqua et terra.");
  EXPECT_EQ(surfaces(t), (std::vector<std::string>{"aqua", "et", "terra", "."}));
  EXPECT_EQ(t[0].kind, TokenKind::Word);
  EXPECT_EQ(t[3].kind, TokenKind::Punctuation);
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(surfaces(tokenize("questio, inquam")), (std::vector<std::string>{"questio", ",", "inquam"}));
}

TEST(Tokenize, CountsCodePoints) {
  const auto t = tokenize("ēius");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].char_length, 4u);
}

TEST(Tokenize, PreservesLetterContent) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "abcdeu .,;:!?()'";
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    const auto len = rng() % 60;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    std::string letters_in, letters_out;
    for (char c : s) {
      if (std::isalpha(static_cast<unsigned char>(c))) letters_in += c;
    }
    for (const auto& tok : tokenize(s)) {
      if (tok.kind == TokenKind::Word) letters_out += tok.surface;
    }
    EXPECT_EQ(letters_in, letters_out) << s;
  }
}

TEST(SplitSentences, Examples) {
  const auto t = tokenize("a. b c.");
  EXPECT_EQ(split_sentences(t), (std::vector<TokenRange>{{0, 2}, {2, 5}}));
  const auto none = tokenize("a b c");
  EXPECT_EQ(split_sentences(none), (std::vector<TokenRange>{{0, 3}}));
  const auto dot = tokenize(".");
  EXPECT_EQ(split_sentences(dot), (std::vector<TokenRange>{{0, 1}}));
  EXPECT_TRUE(split_sentences(std::vector<Token>{}).empty());
}

TEST(Segment, GreedyAccumulation) {
  const auto doc = doc_with_sentences({200, 200, 200, 200, 200});
  const auto segs = segment(doc, 400);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].token_count(), 400u);
  EXPECT_EQ(segs[1].token_count(), 400u);
  EXPECT_EQ(segs[2].token_count(), 200u);
  EXPECT_EQ(segs[1].id(), "d#1");
}

TEST(Segment, NeverSplitsASentence) {
  const auto doc = doc_with_sentences({450});
  const auto segs = segment(doc, 400);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].token_count(), 450u);
}

TEST(Segment, RejectsZeroMinimum) {
  const auto doc = doc_with_sentences({5});
  EXPECT_THROW(segment(doc, 0), ConfigError);
}

TEST(Segment, PropertiesOnRandomDocuments) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> lengths(1 + rng() % 20);
    for (auto& n : lengths) n = 1 + rng() % 150;
    const auto doc = doc_with_sentences(lengths);
    const std::size_t min_tokens = 1 + rng() % 300;
    const auto segs = segment(doc, min_tokens);
    std::set<std::size_t> sentence_ends;
    for (const auto& s : doc.sentences) sentence_ends.insert(s.end);
    std::size_t total = 0, expected_begin = 0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      EXPECT_EQ(segs[k].token_range.begin, expected_begin);
      EXPECT_TRUE(sentence_ends.contains(segs[k].token_range.end));
      if (k + 1 < segs.size()) {
        EXPECT_GE(segs[k].token_count(), min_tokens);
      }
      expected_begin = segs[k].token_range.end;
      total += segs[k].token_count();
    }
    EXPECT_EQ(total, doc.tokens.size());
  }
}

class CorpusFiles : public ::testing::Test {
protected:
  void SetUp() override { dir = testing::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name()); }

  void write(const std::string& rel, const std::string& content) {
    std::filesystem::create_directories((dir / rel).parent_path());
    std::ofstream(dir / rel) << content;
  }

  std::filesystem::path dir;
};

TEST_F(CorpusFiles, LoadsCsvManifest) {
  write("a.txt", "Arma uirumque cano.");
  write("b.txt", "Gallia est omnis diuisa.");
  write("m.csv", "id,author,title,genre,text_path\na,Vergil,\"Aeneis, I\",poetry,a.txt\nb,Caesar,BG,,b.txt\n");
  const Corpus c = load_corpus(dir / "m.csv");
  ASSERT_EQ(c.documents.size(), 2u);
  EXPECT_EQ(c.documents[0].id, "a");
  EXPECT_EQ(c.documents[0].title, "Aeneis, I");
  EXPECT_EQ(c.documents[1].tokens.size(), 5u);
  EXPECT_FALSE(c.documents[1].genre.has_value());
}

TEST_F(CorpusFiles, LoadsJsonManifestAndCache) {
  write("a.txt", "Arma uirumque cano.");
  write("b.txt", "Troiae qui primus ab oris.");
  write("m.json", R"([{"id":"a","author":"V","text_path":"a.txt"},{"id":"b","author":"UNKNOWN","text_path":"b.txt"}])");
  const Corpus c = load_corpus(dir / "m.json");
  ASSERT_EQ(c.documents.size(), 2u);
  EXPECT_TRUE(c.documents[1].is_disputed());
  write_corpus_cache(c, dir / "cache.json");
  const Corpus cached = load_corpus(dir / "cache.json");
  EXPECT_EQ(cached.fingerprint(), c.fingerprint());
  EXPECT_EQ(cached.documents[1].tokens, c.documents[1].tokens);
}

TEST_F(CorpusFiles, ReportsManifestErrors) {
  write("a.txt", "Arma.");
  write("empty.txt", "{q:only a quotation}");
  write("missing.csv", "id,author,title,genre,text_path\na,V,,,nowhere.txt\n");
  write("dup.csv", "id,author,title,genre,text_path\na,V,,,a.txt\na,V,,,a.txt\n");
  write("noauthor.csv", "id,author,title,genre,text_path\na,,,,a.txt\n");
  write("empty.csv", "id,author,title,genre,text_path\ne,V,,,empty.txt\n");
  EXPECT_EQ(corpus_error_kind([&] { load_corpus(dir / "missing.csv"); }), CorpusErrorKind::MissingFile);
  EXPECT_EQ(corpus_error_kind([&] { load_corpus(dir / "dup.csv"); }), CorpusErrorKind::DuplicateId);
  EXPECT_EQ(corpus_error_kind([&] { load_corpus(dir / "noauthor.csv"); }), CorpusErrorKind::MissingAuthor);
  EXPECT_EQ(corpus_error_kind([&] { load_corpus(dir / "empty.csv"); }), CorpusErrorKind::EmptyText);
  EXPECT_EQ(corpus_error_kind([&] { load_corpus(dir / "absent.csv"); }), CorpusErrorKind::MissingFile);
}

TEST_F(CorpusFiles, LoadsAnnotationSidecar) {
  write("a.txt", "Deus est bonus.");
  write("a.ann", "#tagset\tUD\ndeus\tNOUN\tnsubj\nest\tAUX\tcop\nbonus\tADJ\troot\n");
  write("m.csv", "id,author,title,genre,text_path,annotations_path\na,X,,,a.txt,a.ann\n");
  const Corpus c = load_corpus(dir / "m.csv");
  ASSERT_TRUE(c.documents[0].annotations.has_value());
  EXPECT_EQ(c.documents[0].annotations->pos_tags, (std::vector<std::string>{"NOUN", "AUX", "ADJ"}));
  EXPECT_EQ(c.documents[0].annotations->dep_relations.back(), "root");
}

TEST(Annotations, AlignmentAndTagsetChecks) {
  const auto doc = make_document("a", "X", "", std::nullopt, "deus est bonus.");
  const auto layer = parse_annotations("#tagset\tUD\ndeus\tNOUN\tnsubj\nest\tAUX\tcop\nbonus\tADJ\tacl:relcl\n", doc);
  EXPECT_EQ(layer.pos_tags.size(), 3u);
  EXPECT_EQ(corpus_error_kind([&] { parse_annotations("#tagset\tUD\ndeus\tNOUN\tnsubj\nest\tAUX\tcop\n", doc); }),
            CorpusErrorKind::AnnotationMismatch);
  EXPECT_EQ(corpus_error_kind([&] {
              parse_annotations("#tagset\tUD\ndeus\tNOUN\tnsubj\nest\tVERBUM\tcop\nbonus\tADJ\troot\n", doc);
            }),
            CorpusErrorKind::UnknownTag);
  EXPECT_EQ(corpus_error_kind([&] {
              parse_annotations("#tagset\tUD\ndeus\tNOUN\tnsubj\nsunt\tAUX\tcop\nbonus\tADJ\troot\n", doc);
            }),
            CorpusErrorKind::AnnotationMismatch);
  const auto custom = parse_annotations("#tagset\tcustom\tpos=N,V\tdep=s,o\ndeus\tN\ts\nest\tV\to\nbonus\tN\to\n", doc);
  EXPECT_EQ(custom.tagset_name, "custom");

  const auto empty = make_document("e", "X", "", std::nullopt, "");
  EXPECT_TRUE(parse_annotations("#tagset\tUD\n", empty).pos_tags.empty());
}

TEST(CorpusFingerprint, SensitiveToTextAndAuthor) {
  Corpus a, b, c;
  a.documents.push_back(make_document("x", "A", "", std::nullopt, "aqua."));
  b.documents.push_back(make_document("x", "B", "", std::nullopt, "aqua."));
  c.documents.push_back(make_document("x", "A", "", std::nullopt, "terra."));
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  Corpus a2;
  a2.documents.push_back(make_document("x", "A", "other title", std::nullopt, "Aqua."));
  EXPECT_EQ(a.fingerprint(), a2.fingerprint());
}

} // namespace
} // namespace avkit
