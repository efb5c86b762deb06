#include "season/decode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace season::decode {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

uint64_t hash_span(std::span<const int> tokens) {
  uint64_t h = 1469598103934665603ull;
  for (int t : tokens) {
    h ^= static_cast<uint64_t>(static_cast<uint32_t>(t));
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size < 1) throw InputError("decode: beam_size must be >= 1");
  if (block_ngram != 0 && block_ngram < 2) {
    throw InputError("decode: block_ngram must be 0 or >= 2");
  }
  if (min_len < 0 || min_len >= max_len) {
    throw InputError("decode: require 0 <= min_len < max_len");
  }
  if (!(tau > 0.0)) throw InputError("decode: tau must be > 0");
  if (length_penalty < 0.0) {
    throw InputError("decode: length_penalty must be >= 0");
  }
}

double score_hypothesis(const BeamHypothesis& hyp, double length_penalty) {
  const int len = hyp.generated_length();
  if (len <= 0) return hyp.logprob_sum;
  return hyp.logprob_sum /
         std::pow(static_cast<double>(len), length_penalty);
}

void append_token(BeamHypothesis& hyp, int token, double logprob, int n) {
  hyp.tokens.push_back(token);
  hyp.logprob_sum += logprob;
  if (n >= 2 && static_cast<int>(hyp.tokens.size()) >= n) {
    const std::span<const int> gram(hyp.tokens.data() + hyp.tokens.size() - n,
                                    static_cast<size_t>(n));
    hyp.ngram_index[hash_span(gram.first(n - 1))].push_back(gram.back());
  }
}

std::vector<int> blocked_tokens(const BeamHypothesis& hyp, int n) {
  if (n < 2 || static_cast<int>(hyp.tokens.size()) < n - 1) return {};
  const std::span<const int> tail(hyp.tokens.data() + hyp.tokens.size() - (n - 1),
                                  static_cast<size_t>(n - 1));
  auto it = hyp.ngram_index.find(hash_span(tail));
  if (it == hyp.ngram_index.end()) return {};
  std::vector<int> out = it->second;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ModelStepper::ModelStepper(
    const model::Inference& inf,
    std::shared_ptr<const model::Inference::CrossCache> cross)
    : inf_(inf), cross_(std::move(cross)) {}

namespace {
struct ModelState : Stepper::State {
  model::Inference::DecoderState inner;
  std::unique_ptr<Stepper::State> clone() const override {
    auto copy = std::make_unique<ModelState>();
    copy->inner = inner;
    return copy;
  }
};
}  // namespace

std::unique_ptr<Stepper::State> ModelStepper::initial() const {
  auto st = std::make_unique<ModelState>();
  st->inner = inf_.make_decoder_state(cross_);
  return st;
}

std::vector<double> ModelStepper::step(State& state, int token) const {
  auto& st = static_cast<ModelState&>(state);
  return model::log_softmax(inf_.step(st.inner, token));
}

int ModelStepper::vocab_size() const { return inf_.config().vocab_size; }

namespace {

struct LiveItem {
  BeamHypothesis hyp;
  std::unique_ptr<Stepper::State> state;  // has consumed hyp.tokens
  std::vector<double> next_logprobs;
  bool blocking_relaxed = false;
};

struct Candidate {
  double logprob_sum;
  int parent;
  int token;
  double token_logprob;
  bool relaxed;
};

}  // namespace

BeamResult beam_search(const Stepper& stepper, const DecodeConfig& cfg) {
  cfg.validate();
  const int vocab = stepper.vocab_size();

  std::vector<LiveItem> live;
  {
    LiveItem init;
    init.hyp.tokens = {corpus::kBos};
    init.state = stepper.initial();
    init.next_logprobs = stepper.step(*init.state, corpus::kBos);
    live.push_back(std::move(init));
  }

  bool have_best = false;
  BeamHypothesis best_finished;
  double best_score = kNegInf;
  bool best_relaxed = false;
  bool any_relaxed = false;

  // An unfinished hypothesis can at best keep adding zero-logprob tokens up
  // to the longest legal finished length.
  const double max_final_len = static_cast<double>(cfg.max_len + 1);
  auto optimistic_score = [&](const BeamHypothesis& hyp) {
    if (hyp.logprob_sum >= 0.0) return hyp.logprob_sum;
    return hyp.logprob_sum / std::pow(max_final_len, cfg.length_penalty);
  };

  while (!live.empty()) {
    std::vector<Candidate> candidates;
    candidates.reserve(live.size() * 8);
    for (int parent = 0; parent < static_cast<int>(live.size()); ++parent) {
      LiveItem& item = live[parent];
      const int content = item.hyp.content_length();
      const std::vector<double>& lp = item.next_logprobs;

      if (content >= cfg.max_len) {  // only EOS remains legal
        candidates.push_back({item.hyp.logprob_sum + lp[corpus::kEos], parent,
                              corpus::kEos, lp[corpus::kEos],
                              item.blocking_relaxed});
        continue;
      }
      std::vector<int> blocked;
      if (cfg.block_ngram >= 2) {
        blocked = blocked_tokens(item.hyp, cfg.block_ngram);
      }
      const bool eos_legal = content >= cfg.min_len;
      auto emit = [&](bool respect_blocking) {
        size_t emitted = 0;
        for (int t = 0; t < vocab; ++t) {
          if (t == corpus::kPad || t == corpus::kBos || t == corpus::kSent) {
            continue;
          }
          if (t == corpus::kEos && !eos_legal) continue;
          if (respect_blocking &&
              std::binary_search(blocked.begin(), blocked.end(), t)) {
            continue;
          }
          candidates.push_back({item.hyp.logprob_sum + lp[t], parent, t, lp[t],
                                item.blocking_relaxed || !respect_blocking});
          ++emitted;
        }
        return emitted;
      };
      if (emit(true) == 0) {
        // Everything legal was blocked: relax blocking for this one step.
        any_relaxed = true;
        log_debug("beam_search: n-gram blocking relaxed for one step");
        emit(false);
      }
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.logprob_sum != b.logprob_sum) {
                  return a.logprob_sum > b.logprob_sum;
                }
                if (a.token != b.token) return a.token < b.token;
                return a.parent < b.parent;
              });
    if (static_cast<int>(candidates.size()) > cfg.beam_size) {
      candidates.resize(cfg.beam_size);
    }

    std::vector<LiveItem> next_live;
    for (const Candidate& c : candidates) {
      if (c.token == corpus::kEos) {
        BeamHypothesis done = live[c.parent].hyp;
        append_token(done, corpus::kEos, c.token_logprob, cfg.block_ngram);
        done.finished = true;
        const double s = score_hypothesis(done, cfg.length_penalty);
        if (!have_best || s > best_score) {
          have_best = true;
          best_score = s;
          best_finished = std::move(done);
          best_relaxed = c.relaxed;
        }
      } else {
        LiveItem child;
        child.hyp = live[c.parent].hyp;
        append_token(child.hyp, c.token, c.token_logprob, cfg.block_ngram);
        child.state = live[c.parent].state->clone();
        child.next_logprobs = stepper.step(*child.state, c.token);
        child.blocking_relaxed = c.relaxed;
        next_live.push_back(std::move(child));
      }
    }
    live = std::move(next_live);

    if (have_best) {
      // Drop live branches that cannot beat the best finished score even
      // with free future tokens; exact, so exhaustive runs stay exhaustive.
      std::erase_if(live, [&](const LiveItem& item) {
        return optimistic_score(item.hyp) <= best_score;
      });
    }
  }

  if (!have_best) {
    // min_len < max_len guarantees at least one finished hypothesis.
    throw Error("beam_search: no finished hypothesis");
  }
  BeamResult result;
  result.tokens = best_finished.tokens;
  result.logprob_sum = best_finished.logprob_sum;
  result.score = best_score;
  result.blocking_relaxed = best_relaxed || any_relaxed;
  return result;
}

std::vector<GeneratedDoc> generate(const model::Inference& inf,
                                   const corpus::Vocabulary& vocab,
                                   std::span<const corpus::RawDocument> docs,
                                   const salience::ThresholdSpec* thresholds,
                                   const DecodeConfig& cfg, int max_src,
                                   int max_tgt) {
  cfg.validate();
  if (cfg.estimation == DecodeConfig::Estimation::kGold &&
      thresholds == nullptr) {
    throw InputError("generate: gold estimation needs a threshold spec");
  }
  const int n = static_cast<int>(docs.size());
  std::vector<GeneratedDoc> out(n);
  std::vector<std::string> failures(n);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const corpus::RawDocument& doc = docs[i];
      const corpus::EncodedDocument enc_doc =
          corpus::encode_document(doc, vocab, max_src, max_tgt);
      const model::Inference::Encoded enc = inf.encode(enc_doc);
      const model::Matrix probs = inf.salience_probs(enc, cfg.tau);

      GeneratedDoc& g = out[i];
      g.id = doc.id;
      g.degrees.resize(probs.rows);
      for (int j = 0; j < probs.rows; ++j) {
        int best = 0;
        for (int c = 1; c < probs.cols; ++c) {
          if (probs.at(j, c) > probs.at(j, best)) best = c;
        }
        g.degrees[j] = best + 1;
      }
      if (cfg.emit_probs) {
        g.degree_probs.resize(probs.rows);
        for (int j = 0; j < probs.rows; ++j) {
          g.degree_probs[j].assign(probs.row(j), probs.row(j) + probs.cols);
        }
      }

      model::Matrix sentence_guidance;
      switch (cfg.estimation) {
        case DecodeConfig::Estimation::kSoft:
          sentence_guidance = inf.guidance_soft(probs);
          break;
        case DecodeConfig::Estimation::kHard:
          sentence_guidance = inf.guidance_hard(probs);
          break;
        case DecodeConfig::Estimation::kZero:
          sentence_guidance = inf.guidance_zero(probs.rows);
          break;
        case DecodeConfig::Estimation::kGold: {
          if (corpus::tokenize(doc.summary).empty()) {
            throw MissingReference("gold estimation needs a reference: " +
                                   doc.id);
          }
          std::vector<double> scores = salience::score_document(doc);
          scores.resize(probs.rows);  // drop sentences lost to truncation
          const std::vector<int> degrees =
              salience::assign_degrees(scores, thresholds->cutoffs);
          g.degrees = degrees;
          sentence_guidance = inf.guidance_gold(degrees);
          break;
        }
      }
      const model::Matrix token_salience = model::Inference::broadcast_guidance(
          sentence_guidance, enc.sent_index);
      const auto cross = inf.make_cross_cache(enc, &token_salience);
      const ModelStepper stepper(inf, cross);
      const BeamResult beam = beam_search(stepper, cfg);
      g.token_ids = beam.content_tokens();
      g.summary = corpus::detokenize(corpus::decode_tokens(g.token_ids, vocab));
      g.blocking_relaxed = beam.blocking_relaxed;
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!failures[i].empty()) {
      throw InputError("generate: document " + docs[i].id + ": " + failures[i]);
    }
  }
  return out;
}

void save_generated(const std::vector<GeneratedDoc>& docs,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open file for write: " + path);
  for (const GeneratedDoc& d : docs) {
    nlohmann::json j{{"id", d.id}, {"summary", d.summary},
                     {"degrees", d.degrees}};
    if (!d.degree_probs.empty()) j["degree_probs"] = d.degree_probs;
    if (d.blocking_relaxed) j["blocking_relaxed"] = true;
    out << j.dump() << "\n";
  }
}

std::vector<GeneratedSummary> load_generated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open generated file: " + path);
  std::vector<GeneratedSummary> out;
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
    if (!j.contains("id") || !j.contains("summary")) {
      throw ParseError(line_no, "expected id and summary fields");
    }
    out.push_back({j["id"].get<std::string>(), j["summary"].get<std::string>()});
  }
  return out;
}

}  // namespace season::decode
