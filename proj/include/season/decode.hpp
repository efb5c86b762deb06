#pragma once

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "season/corpus.hpp"
#include "season/inference.hpp"
#include "season/salience.hpp"

namespace season::decode {

struct DecodeConfig {
  int beam_size = 5;
  double length_penalty = 1.5;
  int block_ngram = 3;  // 0 disables n-gram blocking
  int min_len = 20;     // content tokens before EOS becomes legal
  int max_len = 128;    // content tokens before EOS is forced
  double tau = 0.5;     // sharpening for the predicted degree distribution
  enum class Estimation { kSoft, kHard, kGold, kZero };
  Estimation estimation = Estimation::kSoft;
  bool emit_probs = false;

  void validate() const;
};

struct BeamHypothesis {
  std::vector<int> tokens;  // BOS-prefixed; last token is EOS once finished
  double logprob_sum = 0.0;
  bool finished = false;
  // n-grams seen so far: hash of the leading n-1 tokens -> following tokens.
  std::unordered_map<uint64_t, std::vector<int>> ngram_index;

  int generated_length() const {
    return static_cast<int>(tokens.size()) - 1;  // excludes BOS
  }
  int content_length() const {
    return generated_length() - (finished ? 1 : 0);
  }
};

// logprob_sum / generated_length^penalty (generated length excludes BOS,
// includes EOS).
double score_hypothesis(const BeamHypothesis& hyp, double length_penalty);

// Appends token and maintains the n-gram index (no-op bookkeeping when
// n <= 0).
void append_token(BeamHypothesis& hyp, int token, double logprob, int n);

// Tokens t whose appending would recreate an n-gram already present in the
// hypothesis.
std::vector<int> blocked_tokens(const BeamHypothesis& hyp, int n);

// Incremental next-token scorer; forked per beam hypothesis.
class Stepper {
 public:
  struct State {
    virtual ~State() = default;
    virtual std::unique_ptr<State> clone() const = 0;
  };
  virtual ~Stepper() = default;
  virtual std::unique_ptr<State> initial() const = 0;
  // Consumes one token and returns log-probabilities for the next position.
  virtual std::vector<double> step(State& state, int token) const = 0;
  virtual int vocab_size() const = 0;
};

// Stepper over the model's incremental decoder for one document.
class ModelStepper : public Stepper {
 public:
  ModelStepper(const model::Inference& inf,
               std::shared_ptr<const model::Inference::CrossCache> cross);
  std::unique_ptr<State> initial() const override;
  std::vector<double> step(State& state, int token) const override;
  int vocab_size() const override;

 private:
  const model::Inference& inf_;
  std::shared_ptr<const model::Inference::CrossCache> cross_;
};

struct BeamResult {
  std::vector<int> tokens;  // BOS ... EOS
  double logprob_sum = 0.0;
  double score = 0.0;
  bool blocking_relaxed = false;

  std::vector<int> content_tokens() const {
    if (tokens.size() <= 2) return {};
    return std::vector<int>(tokens.begin() + 1, tokens.end() - 1);
  }
};

// Beam search with n-gram blocking, length bounds and length-penalty
// scoring. PAD/BOS/SENT are never generated. Candidates rank by cumulative
// log-probability (ties: lower token id, then earlier hypothesis); finished
// hypotheses retire to a pool ranked by score_hypothesis. The search stops
// only when no live hypothesis could still beat the pool, so with
// beam_size >= the number of reachable prefixes it is exhaustive. If every
// candidate of a hypothesis is blocked, blocking is relaxed for that single
// step and the event is reported.
BeamResult beam_search(const Stepper& stepper, const DecodeConfig& cfg);

struct GeneratedDoc {
  std::string id;
  std::vector<int> token_ids;  // content tokens, specials stripped
  std::string summary;
  std::vector<int> degrees;  // argmax predicted (or gold) degree per sentence
  std::vector<std::vector<double>> degree_probs;  // kept when emit_probs
  bool blocking_relaxed = false;
};

// One encoder pass per document, salience prediction at cfg.tau, guidance by
// cfg.estimation, then beam search. Documents decode in parallel. Gold
// estimation labels sentences with the thresholds' cutoffs and requires
// references (MissingReference otherwise); thresholds may be null for the
// other modes.
std::vector<GeneratedDoc> generate(const model::Inference& inf,
                                   const corpus::Vocabulary& vocab,
                                   std::span<const corpus::RawDocument> docs,
                                   const salience::ThresholdSpec* thresholds,
                                   const DecodeConfig& cfg, int max_src,
                                   int max_tgt);

// Output JSONL: {"id","summary","degrees"} plus "degree_probs" when kept.
void save_generated(const std::vector<GeneratedDoc>& docs,
                    const std::string& path);

struct GeneratedSummary {
  std::string id;
  std::string summary;
};

std::vector<GeneratedSummary> load_generated(const std::string& path);

}  // namespace season::decode
