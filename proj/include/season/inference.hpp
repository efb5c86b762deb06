#pragma once

#include <memory>
#include <span>
#include <vector>

#include "season/model.hpp"

namespace season::model {

// Plain row-major matrix for the no-autodiff evaluation path.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(int64_t(r) * c, 0.0) {}
  double* row(int r) { return data.data() + int64_t(r) * cols; }
  const double* row(int r) const { return data.data() + int64_t(r) * cols; }
  double at(int r, int c) const { return data[int64_t(r) * cols + c]; }
};

// Read-only evaluator over a parameter snapshot. Replays the exact kernel
// sequence of the tape forward passes (tests pin the two paths against each
// other) but keeps no graph, making generation cheap; decoding is
// incremental with per-hypothesis key/value caches.
//
// Instances are safe to share across threads: every method is const and
// touches only its arguments.
class Inference {
 public:
  Inference(const Parameters& params, const ModelConfig& cfg);

  struct Encoded {
    Matrix token_states;     // S x d
    Matrix sentence_states;  // N x d
    std::vector<uint8_t> padding_mask;
    std::vector<int> sent_index;
  };

  Encoded encode(const corpus::EncodedDocument& doc) const;

  // N x L degree distributions at the given sharpening temperature.
  Matrix salience_probs(const Encoded& enc, double tau) const;

  // N x d sentence guidance embeddings.
  Matrix guidance_soft(const Matrix& degree_probs) const;
  Matrix guidance_hard(const Matrix& degree_probs) const;
  Matrix guidance_gold(std::span<const int> degrees) const;
  // All-zero guidance (salience signal disabled).
  Matrix guidance_zero(int n_sentences) const;

  // S x d per-token guidance; PAD positions zero.
  static Matrix broadcast_guidance(const Matrix& sentence_embeddings,
                                   std::span<const int> sent_index);

  // Per-document cross-attention state: projected keys/values per decoder
  // layer. Shared by every hypothesis decoding that document.
  struct CrossCache {
    std::vector<Matrix> keys;    // n_dec_layers of S x d
    std::vector<Matrix> values;  // n_dec_layers of S x d
    std::vector<uint8_t> padding_mask;
  };

  // token_salience may be null for a guidance-free decode.
  std::shared_ptr<const CrossCache> make_cross_cache(
      const Encoded& enc, const Matrix* token_salience) const;

  // Per-hypothesis decoder state; copy to fork a hypothesis.
  struct DecoderState {
    std::shared_ptr<const CrossCache> cross;
    std::vector<Matrix> self_keys;    // n_dec_layers of t x d
    std::vector<Matrix> self_values;  // n_dec_layers of t x d
    int length = 0;
  };

  DecoderState make_decoder_state(
      std::shared_ptr<const CrossCache> cross) const;

  // Feeds one token (position = current length) and returns the next-token
  // logits over the vocabulary.
  std::vector<double> step(DecoderState& state, int token) const;

  const ModelConfig& config() const { return cfg_; }

 private:
  const Parameters& params_;
  ModelConfig cfg_;
};

// log softmax of a logits row (natural log), stable.
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace season::model
