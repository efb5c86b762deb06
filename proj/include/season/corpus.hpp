#pragma once

#include <string>
#include <utility>
#include <vector>

#include "season/common.hpp"

namespace season::corpus {

// Fixed ids of the special tokens; the first five vocabulary slots.
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kSent = 4;
inline constexpr int kNumSpecials = 5;

struct RawDocument {
  std::string id;
  std::string article;
  std::string summary;  // may be empty at pure inference
};

struct SentenceSplit {
  std::vector<std::string> sentences;
  // Byte offsets (start, end) into the article, ordered and non-overlapping.
  std::vector<std::pair<size_t, size_t>> char_spans;
};

class Vocabulary {
 public:
  // Special tokens only; extend via build().
  Vocabulary();

  // Word-level vocabulary: lowercased word/punctuation tokens ranked by
  // corpus frequency (ties lexicographic), truncated to max_size including
  // the five specials. max_size >= 6.
  static Vocabulary build(const std::vector<RawDocument>& docs, int max_size);

  int size() const { return static_cast<int>(tokens_.size()); }
  // UNK for out-of-vocabulary words.
  int id_of(const std::string& token) const;
  const std::string& token_of(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line, line number = id.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::pair<std::string, int>> index_;  // sorted token -> id
  void rebuild_index();
};

struct EncodedDocument {
  std::string id;
  // Sentence-marked source: [SENT, tok...] per sentence, truncated so a
  // marker is never separated from its sentence's first token.
  std::vector<int> input_ids;
  // 1-based sentence index per source token, markers included.
  std::vector<int> sent_index;
  // Position of each SENT marker in input_ids.
  std::vector<int> marker_positions;
  // [BOS, tok..., EOS]; [BOS, EOS] when the summary is empty.
  std::vector<int> target_ids;
  int n_sentences = 0;
};

// Splits on '.', '!' or '?' followed by whitespace or end of text; closing
// quotes/brackets directly after the terminator stay with the sentence.
// Non-empty text always yields at least one sentence.
SentenceSplit split_sentences(const std::string& text);

// Lowercased word/punctuation tokens: runs of alphanumeric bytes are words,
// every other non-space byte is its own token.
std::vector<std::string> tokenize(const std::string& text);

// Inverse of tokenize up to spacing: punctuation attaches to the left,
// opening brackets to the right, quotes alternate.
std::string detokenize(const std::vector<std::string>& tokens);

EncodedDocument encode_document(const RawDocument& doc, const Vocabulary& vocab,
                                int max_src = 512, int max_tgt = 128);

// Token ids back to strings, dropping PAD/SENT markers (and BOS/EOS).
std::vector<std::string> decode_tokens(const std::vector<int>& ids,
                                       const Vocabulary& vocab);

// JSON-lines corpus: one {"id","article","summary"} object per line.
std::vector<RawDocument> load_corpus(const std::string& path);
void save_corpus(const std::vector<RawDocument>& docs,
                 const std::string& path);

}  // namespace season::corpus
