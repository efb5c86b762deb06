#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "season/corpus.hpp"
#include "support/synthetic.hpp"
#include "support/tempfile.hpp"

using namespace season;
using namespace season::corpus;

namespace {

RawDocument doc(const std::string& article, const std::string& summary = "") {
  return RawDocument{"d0", article, summary};
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    path = testing::temp_path(".jsonl");
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("split_sentences basics") {
  CHECK(split_sentences("A cat sat.").sentences ==
        std::vector<std::string>{"A cat sat."});
  CHECK(split_sentences("Hi. Bye!").sentences ==
        std::vector<std::string>{"Hi.", "Bye!"});
  // Closing quote stays with the terminated sentence.
  CHECK(split_sentences("He said \"Go.\" Then left.").sentences ==
        std::vector<std::string>{"He said \"Go.\"", "Then left."});
}

TEST_CASE("split_sentences edge cases") {
  CHECK_THROWS_AS(split_sentences(""), EmptyDocument);
  CHECK_THROWS_AS(split_sentences("   \t\n"), EmptyDocument);
  // No terminator: whole text is one sentence.
  CHECK(split_sentences("no terminator here").sentences ==
        std::vector<std::string>{"no terminator here"});
  // Decimal points do not split.
  CHECK(split_sentences("Pi is 3.14 roughly. Yes.").sentences ==
        std::vector<std::string>{"Pi is 3.14 roughly.", "Yes."});
  // Runs of terminators stay together.
  CHECK(split_sentences("What?! Really.").sentences ==
        std::vector<std::string>{"What?!", "Really."});
}

TEST_CASE("split_sentences spans cover the sentences in order") {
  const std::string text = "  One two.  Three!  Four? ";
  const SentenceSplit split = split_sentences(text);
  REQUIRE(split.sentences.size() == 3);
  REQUIRE(split.char_spans.size() == 3);
  size_t prev_end = 0;
  for (size_t i = 0; i < split.sentences.size(); ++i) {
    const auto [b, e] = split.char_spans[i];
    CHECK(b >= prev_end);
    CHECK(e <= text.size());
    CHECK(text.substr(b, e - b) == split.sentences[i]);
    prev_end = e;
  }
}

TEST_CASE("vocabulary build: frequency order, ties, truncation") {
  const std::vector<RawDocument> docs = {doc("a a b", "")};
  Vocabulary v = Vocabulary::build(docs, 7);
  REQUIRE(v.size() == 7);
  CHECK(v.token_of(kNumSpecials) == "a");
  CHECK(v.token_of(kNumSpecials + 1) == "b");

  Vocabulary small = Vocabulary::build(docs, 6);
  CHECK(small.size() == 6);
  CHECK(small.id_of("b") == kUnk);

  // Tie: equal frequency breaks lexicographically.
  Vocabulary tie = Vocabulary::build({doc("y x y x", "")}, 7);
  CHECK(tie.token_of(kNumSpecials) == "x");
  CHECK(tie.token_of(kNumSpecials + 1) == "y");

  CHECK_THROWS_AS(Vocabulary::build({}, 10), InputError);
  CHECK_THROWS_AS(Vocabulary::build(docs, 5), InputError);
}

TEST_CASE("vocabulary file round trip") {
  const std::vector<RawDocument> docs = {doc("alpha beta gamma alpha", "")};
  Vocabulary v = Vocabulary::build(docs, 16);
  const std::string path = testing::temp_path(".vocab");
  v.save(path);
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.tokens() == v.tokens());
  std::remove(path.c_str());
}

TEST_CASE("encode_document marks sentences") {
  Vocabulary v = Vocabulary::build({doc("hi. bye.", "")}, 32);
  EncodedDocument enc = encode_document(doc("hi. bye."), v);
  const int hi = v.id_of("hi"), bye = v.id_of("bye"), dot = v.id_of(".");
  CHECK(enc.input_ids == std::vector<int>{kSent, hi, dot, kSent, bye, dot});
  CHECK(enc.sent_index == std::vector<int>{1, 1, 1, 2, 2, 2});
  CHECK(enc.marker_positions == std::vector<int>{0, 3});
  CHECK(enc.n_sentences == 2);
  CHECK(enc.target_ids == std::vector<int>{kBos, kEos});
}

TEST_CASE("encode_document truncation never leaves a bare marker") {
  Vocabulary v = Vocabulary::build({doc("hi. bye.", "")}, 32);
  EncodedDocument enc = encode_document(doc("hi. bye."), v, /*max_src=*/4);
  const int hi = v.id_of("hi"), dot = v.id_of(".");
  CHECK(enc.input_ids == std::vector<int>{kSent, hi, dot});
  CHECK(enc.n_sentences == 1);
  CHECK(enc.marker_positions.size() == 1);
}

TEST_CASE("encode_document target handling") {
  Vocabulary v = Vocabulary::build({doc("a b c d e.", "a b c d e")}, 32);
  EncodedDocument enc =
      encode_document(doc("a b c d e.", "a b c d e"), v, 512, /*max_tgt=*/4);
  REQUIRE(enc.target_ids.size() == 4);
  CHECK(enc.target_ids.front() == kBos);
  CHECK(enc.target_ids.back() == kEos);

  CHECK_THROWS_AS(encode_document(doc("   "), v), EmptyDocument);
}

TEST_CASE("encode invariants on synthetic documents") {
  testing::SyntheticOptions opt;
  opt.n_docs = 20;
  opt.seed = 9;
  const auto docs = testing::make_synthetic_corpus(opt);
  Vocabulary v = Vocabulary::build(docs, 4000);
  for (const RawDocument& d : docs) {
    const EncodedDocument enc = encode_document(d, v);
    REQUIRE(enc.sent_index.size() == enc.input_ids.size());
    // sent_index is non-decreasing and SENT count equals n_sentences.
    int sent_tokens = 0;
    for (size_t i = 0; i < enc.input_ids.size(); ++i) {
      if (i) CHECK(enc.sent_index[i] >= enc.sent_index[i - 1]);
      if (enc.input_ids[i] == kSent) ++sent_tokens;
    }
    CHECK(sent_tokens == enc.n_sentences);
    CHECK(enc.marker_positions.size() ==
          static_cast<size_t>(enc.n_sentences));
    // Tokens of sentence j form a contiguous block starting at its marker.
    for (int j = 0; j < enc.n_sentences; ++j) {
      const int start = enc.marker_positions[j];
      const int end = j + 1 < enc.n_sentences
                          ? enc.marker_positions[j + 1]
                          : static_cast<int>(enc.input_ids.size());
      for (int i = start; i < end; ++i) CHECK(enc.sent_index[i] == j + 1);
    }
  }
}

TEST_CASE("decode + re-encode round trip on generated documents") {
  std::mt19937_64 rng(31);
  testing::SyntheticOptions opt;
  opt.n_docs = 30;
  opt.seed = 17;
  auto docs = testing::make_synthetic_corpus(opt);
  // Add quoted spans and decimals, which stress the splitter rules.
  docs.push_back({"q1", "He said \"go now.\" Then he left.",
                  "he said \"go now.\""});
  docs.push_back({"q2", "Costs rose 3.5 percent. Wages fell.", "wages fell"});
  Vocabulary v = Vocabulary::build(docs, 4000);
  for (const RawDocument& d : docs) {
    const EncodedDocument enc = encode_document(d, v);
    std::vector<std::string> words;
    for (int id : enc.input_ids) {
      if (id == kSent || id == kPad) continue;
      words.push_back(v.token_of(id));
    }
    const std::string text = detokenize(words);
    const EncodedDocument re = encode_document({d.id, text, ""}, v);
    CHECK(re.input_ids == enc.input_ids);
    CHECK(re.sent_index == enc.sent_index);
  }
}

TEST_CASE("load_corpus parses JSONL and reports errors") {
  TempFile good(
      R"({"id":"a","article":"One. Two.","summary":"one"})"
      "\n"
      R"({"id":"b","article":"Three.","summary":"three"})"
      "\n");
  const auto docs = load_corpus(good.path);
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "a");
  CHECK(docs[1].id == "b");  // file order preserved

  TempFile missing(R"({"id":"a","summary":"x"})"
                   "\n");
  CHECK_THROWS_AS(load_corpus(missing.path), ParseError);
  try {
    load_corpus(missing.path);
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }

  TempFile dup(
      R"({"id":"a","article":"x.","summary":""})"
      "\n"
      R"({"id":"a","article":"y.","summary":""})"
      "\n");
  CHECK_THROWS_AS(load_corpus(dup.path), DuplicateId);

  TempFile bad("not json\n");
  CHECK_THROWS_AS(load_corpus(bad.path), ParseError);
}
