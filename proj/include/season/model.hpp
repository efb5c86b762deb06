#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "season/corpus.hpp"
#include "season/tensor.hpp"

namespace season::model {

struct ModelConfig {
  int d_model = 128;
  int n_heads = 4;
  int n_enc_layers = 3;
  int n_dec_layers = 3;
  int ffn_dim = 512;
  int vocab_size = 0;
  int n_degrees = 3;
  double tau = 0.5;            // sharpening for inference-time guidance
  double tau_cls_train = 1.0;  // classifier softmax temperature in training
  double dropout = 0.1;
  int max_positions = 512;

  int head_dim() const { return d_model / n_heads; }
  void validate() const;
};

// All trainable tensors. Parameter nodes are shared into tapes, so
// gradients land directly in node->grad.
struct Parameters {
  using P = tensor::NodePtr;

  struct AttentionP {
    P wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct NormP {
    P gain, bias;
  };
  struct FfnP {
    P w1, b1, w2, b2;
  };
  struct EncoderLayerP {
    NormP ln_attn;
    AttentionP self_attn;
    NormP ln_ffn;
    FfnP ffn;
  };
  struct DecoderLayerP {
    NormP ln_self;
    AttentionP self_attn;
    NormP ln_cross;
    AttentionP cross_attn;
    NormP ln_ffn;
    FfnP ffn;
  };

  P token_embedding;       // vocab x d, tied output projection
  P positional_embedding;  // max_positions x d
  std::vector<EncoderLayerP> encoder;
  std::vector<DecoderLayerP> decoder;
  NormP enc_final_norm;
  NormP dec_final_norm;
  P classifier_weight;     // L x d
  P classifier_bias;       // L
  P salience_embeddings;   // L x d, zero-initialized

  // Weight matrices N(0, 0.02); biases, norm offsets and salience
  // embeddings zero; norm gains one.
  static Parameters init(const ModelConfig& cfg, uint64_t seed);

  // Stable enumeration order shared by the optimizer, checkpoints and the
  // gradient checker.
  void for_each(
      const std::function<void(const std::string&, const tensor::NodePtr&)>& fn)
      const;
  std::vector<tensor::NamedParam> named() const;
  int64_t parameter_count() const;
};

struct ForwardOptions {
  bool training = false;          // enables dropout
  std::mt19937_64* rng = nullptr; // required when training && dropout > 0
  int pad_to = 0;                 // extend the source with PAD to this length
};

struct EncoderOutput {
  tensor::Tensor token_states;     // S x d
  tensor::Tensor sentence_states;  // N x d, rows at the marker positions
  std::vector<uint8_t> padding_mask;  // per source position, 1 = PAD
  std::vector<int> sent_index;        // copied from the document, 0 at PAD
};

// Pre-norm Transformer encoder over the sentence-marked source sequence.
EncoderOutput encode(tensor::Tape& tape, const corpus::EncodedDocument& doc,
                     const Parameters& params, const ModelConfig& cfg,
                     const ForwardOptions& opt = {});

// Row j = softmax_l((w_l . h_j + b_l) / tau) over the salience degrees.
tensor::Tensor salience_probs(tensor::Tape& tape,
                              const tensor::Tensor& sentence_states,
                              const Parameters& params, double tau);

// Embedding of the argmax degree per sentence; ties break toward the more
// salient (smaller) degree. Inference-only: no gradient flows to the
// probabilities.
tensor::Tensor salience_embedding_hard(tensor::Tape& tape,
                                       const tensor::Tensor& degree_probs,
                                       const Parameters& params);

// Expected embedding under the degree distribution: probs x Emb.
tensor::Tensor salience_embedding_soft(tensor::Tape& tape,
                                       const tensor::Tensor& degree_probs,
                                       const Parameters& params);

// Ground-truth salience embeddings from per-sentence degrees (1-based).
tensor::Tensor salience_embedding_gold(tensor::Tape& tape,
                                       std::span<const int> degrees,
                                       const Parameters& params);

// Token row i = sentence row sent_index[i]; PAD positions (index 0) get
// zero rows.
tensor::Tensor broadcast_salience(const tensor::Tensor& sentence_embeddings,
                                  std::span<const int> sent_index);

// Multi-head cross-attention with keys = token_states + token_salience and
// values = unmodified token_states. Pass an undefined token_salience for a
// vanilla cross-attention.
tensor::Tensor saca_cross_attention(tensor::Tape& tape,
                                    const tensor::Tensor& queries,
                                    const EncoderOutput& enc,
                                    const tensor::Tensor& token_salience,
                                    const Parameters::AttentionP& p,
                                    const ModelConfig& cfg);

// Teacher-forced decoder pass: causal self-attention over input_tokens
// (BOS-prefixed), salience-aware cross-attention, tied output projection.
// Returns logits for every position (T x vocab).
tensor::Tensor decoder_forward(tensor::Tape& tape,
                               std::span<const int> input_tokens,
                               const EncoderOutput& enc,
                               const tensor::Tensor& token_salience,
                               const Parameters& params, const ModelConfig& cfg,
                               const ForwardOptions& opt = {});

// Next-token logits after the given prefix (the last row of
// decoder_forward).
tensor::Tensor decode_step(tensor::Tape& tape, std::span<const int> prefix,
                           const EncoderOutput& enc,
                           const tensor::Tensor& token_salience,
                           const Parameters& params, const ModelConfig& cfg);

}  // namespace season::model
