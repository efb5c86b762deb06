#include "season/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace season::corpus {

namespace {

const char* kSpecialNames[kNumSpecials] = {"<pad>", "<bos>", "<eos>", "<unk>",
                                           "<sent>"};

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']';
}

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

bool is_word_byte(unsigned char c) {
  // Alphanumeric ASCII plus any UTF-8 continuation/lead byte.
  return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace

SentenceSplit split_sentences(const std::string& text) {
  size_t first = 0;
  while (first < text.size() && is_space(text[first])) ++first;
  if (first == text.size()) {
    throw EmptyDocument("split_sentences: empty or whitespace-only text");
  }

  SentenceSplit out;
  size_t start = first;
  size_t i = first;
  const size_t n = text.size();
  auto flush = [&](size_t end) {
    // Trim trailing whitespace from the span.
    size_t e = end;
    while (e > start && is_space(text[e - 1])) --e;
    if (e > start) {
      out.sentences.push_back(text.substr(start, e - start));
      out.char_spans.emplace_back(start, e);
    }
  };
  while (i < n) {
    if (is_terminator(text[i])) {
      size_t j = i + 1;
      while (j < n && (is_terminator(text[j]) || is_closer(text[j]))) ++j;
      if (j >= n || is_space(text[j])) {
        flush(j);
        while (j < n && is_space(text[j])) ++j;
        start = j;
        i = j;
        continue;
      }
      i = j;
      continue;
    }
    ++i;
  }
  if (start < n) flush(n);
  if (out.sentences.empty()) {
    // No terminator at all: the whole text is one sentence.
    size_t e = n;
    while (e > first && is_space(text[e - 1])) --e;
    out.sentences.push_back(text.substr(first, e - first));
    out.char_spans.emplace_back(first, e);
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    const unsigned char c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      size_t j = i;
      std::string word;
      while (j < n && is_word_byte(text[j])) {
        word.push_back(static_cast<char>(std::tolower(
            static_cast<unsigned char>(text[j]))));
        ++j;
      }
      tokens.push_back(std::move(word));
      i = j;
    } else {
      tokens.push_back(std::string(1, text[i]));
      ++i;
    }
  }
  return tokens;
}

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (!std::isdigit(c)) return false;
  }
  return true;
}

}  // namespace

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  int quote_parity = 0;
  bool glue_next = false;
  for (size_t ti = 0; ti < tokens.size(); ++ti) {
    const std::string& t = tokens[ti];
    bool attach_left = false;
    bool attach_right = false;
    if (t.size() == 1) {
      const char c = t[0];
      // Decimal point between digit runs glues both sides ("3.5").
      if (c == '.' && ti > 0 && ti + 1 < tokens.size() &&
          all_digits(tokens[ti - 1]) && all_digits(tokens[ti + 1])) {
        out += t;
        glue_next = true;
        continue;
      }
      if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' ||
          c == ':' || c == ')' || c == ']' || c == '%') {
        attach_left = true;
      } else if (c == '(' || c == '[') {
        attach_right = true;
      } else if (c == '"' || c == '\'') {
        if (quote_parity % 2 == 0) {
          attach_right = true;  // opening
        } else {
          attach_left = true;  // closing
        }
        ++quote_parity;
      }
    }
    if (!out.empty() && !attach_left && !glue_next) out.push_back(' ');
    out += t;
    glue_next = attach_right;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* s : kSpecialNames) tokens_.emplace_back(s);
  rebuild_index();
}

void Vocabulary::rebuild_index() {
  index_.clear();
  index_.reserve(tokens_.size());
  for (size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace_back(tokens_[i], static_cast<int>(i));
  }
  std::sort(index_.begin(), index_.end());
}

Vocabulary Vocabulary::build(const std::vector<RawDocument>& docs,
                             int max_size) {
  if (docs.empty()) throw InputError("build_vocab: empty corpus");
  if (max_size < kNumSpecials + 1) {
    throw InputError("build_vocab: max_size must be at least 6");
  }
  std::map<std::string, int64_t> counts;
  for (const RawDocument& d : docs) {
    for (const std::string& t : tokenize(d.article)) ++counts[t];
    for (const std::string& t : tokenize(d.summary)) ++counts[t];
  }
  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(),
                                                      counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  const size_t budget = static_cast<size_t>(max_size - kNumSpecials);
  for (size_t i = 0; i < ranked.size() && i < budget; ++i) {
    v.tokens_.push_back(ranked[i].first);
  }
  v.rebuild_index();
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = std::lower_bound(
      index_.begin(), index_.end(), token,
      [](const auto& entry, const std::string& t) { return entry.first < t; });
  if (it != index_.end() && it->first == token) return it->second;
  return kUnk;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw Error("token_of: id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open vocabulary file for write: " + path);
  for (const std::string& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocabulary file: " + path);
  Vocabulary v;
  v.tokens_.clear();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no <= kNumSpecials) {
      if (line != kSpecialNames[line_no - 1]) {
        throw ParseError(line_no, "vocabulary file must start with " +
                                      std::string(kSpecialNames[line_no - 1]));
      }
    }
    v.tokens_.push_back(line);
  }
  if (v.tokens_.size() < kNumSpecials) {
    throw InputError("vocabulary file too short: " + path);
  }
  v.rebuild_index();
  return v;
}

EncodedDocument encode_document(const RawDocument& doc,
                                const Vocabulary& vocab, int max_src,
                                int max_tgt) {
  if (max_src < 2) throw InputError("encode_document: max_src must be >= 2");
  EncodedDocument enc;
  enc.id = doc.id;

  const SentenceSplit split = split_sentences(doc.article);
  bool any_token = false;
  int sent_no = 0;
  for (const std::string& sent : split.sentences) {
    const std::vector<std::string> words = tokenize(sent);
    if (words.empty()) continue;
    any_token = true;
    // Marker plus at least one content token must fit.
    if (static_cast<int>(enc.input_ids.size()) + 2 > max_src) break;
    ++sent_no;
    enc.marker_positions.push_back(static_cast<int>(enc.input_ids.size()));
    enc.input_ids.push_back(kSent);
    enc.sent_index.push_back(sent_no);
    for (const std::string& w : words) {
      if (static_cast<int>(enc.input_ids.size()) >= max_src) break;
      enc.input_ids.push_back(vocab.id_of(w));
      enc.sent_index.push_back(sent_no);
    }
  }
  if (!any_token) {
    throw EmptyDocument("encode_document: article yields no tokens: " +
                        doc.id);
  }
  enc.n_sentences = sent_no;

  enc.target_ids.push_back(kBos);
  const std::vector<std::string> summary_words = tokenize(doc.summary);
  for (const std::string& w : summary_words) {
    if (static_cast<int>(enc.target_ids.size()) >= max_tgt - 1) break;
    enc.target_ids.push_back(vocab.id_of(w));
  }
  enc.target_ids.push_back(kEos);
  return enc;
}

std::vector<std::string> decode_tokens(const std::vector<int>& ids,
                                       const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (int id : ids) {
    if (id == kPad || id == kSent || id == kBos || id == kEos) continue;
    words.push_back(vocab.token_of(id));
  }
  return words;
}

std::vector<RawDocument> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file: " + path);
  std::vector<RawDocument> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("article") ||
        !j.contains("summary") || !j["id"].is_string() ||
        !j["article"].is_string() || !j["summary"].is_string()) {
      throw ParseError(line_no,
                       "expected object with string fields id/article/summary");
    }
    RawDocument d{j["id"].get<std::string>(), j["article"].get<std::string>(),
                  j["summary"].get<std::string>()};
    if (!seen.insert(d.id).second) {
      throw DuplicateId("duplicate document id: " + d.id);
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

void save_corpus(const std::vector<RawDocument>& docs,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open corpus file for write: " + path);
  for (const RawDocument& d : docs) {
    nlohmann::json j{{"id", d.id}, {"article", d.article},
                     {"summary", d.summary}};
    out << j.dump() << "\n";
  }
}

}  // namespace season::corpus
