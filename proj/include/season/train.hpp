#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "season/decode.hpp"
#include "season/model.hpp"
#include "season/salience.hpp"
#include "season/tensor.hpp"

namespace season::train {

struct TrainConfig {
  double alpha = 1.5;  // weight of the salience classification loss
  double beta = 0.2;   // adjacent label smoothing probability
  enum class Smoothing { kAdjacent, kUniform } smoothing = Smoothing::kAdjacent;
  double lr = 3e-4;
  int warmup_steps = 200;      // linear warmup, constant afterwards
  double weight_decay = 0.01;  // skipped for rank-1 params (biases, norms)
  double clip_norm = 0.1;      // global gradient norm cap
  int epochs = 30;
  int batch_size = 8;
  uint64_t seed = 1;
  // Stop once the epoch-mean token loss falls below this (0 disables).
  double stop_at_loss_lm = 0.0;
  int val_every = 1;
  // Feed zero salience to the decoder at training time (ablations).
  bool zero_guidance = false;

  void validate() const;
};

// -(1/N) sum_j sum_l target[j,l] * log p[j,l]; rows of both are
// distributions.
tensor::Tensor loss_cls(const tensor::Tensor& degree_probs,
                        std::span<const double> smoothed_targets);

// -(1/T) sum_k log p(y_k); logits are T x vocab rows aligned with targets.
tensor::Tensor loss_lm(const tensor::Tensor& logits,
                       std::span<const int> targets);

// lm + alpha * cls
tensor::Tensor loss_total(const tensor::Tensor& lm, const tensor::Tensor& cls,
                          double alpha);

// lr * min(step / warmup, 1); step is 1-based.
double lr_at_step(const TrainConfig& cfg, int64_t step);

// Decoupled-weight-decay adaptive-moment optimizer with momentum 0.9/0.99
// and global-norm clipping applied before the update.
class AdamW {
 public:
  explicit AdamW(std::vector<tensor::NamedParam> params, double beta1 = 0.9,
                 double beta2 = 0.99, double eps = 1e-8);

  void zero_grad();
  // Clips the global gradient norm to clip_norm, then updates parameters.
  // Throws NonFiniteGradient (naming the parameter) before touching any
  // value.
  void step(double lr, double weight_decay, double clip_norm);

  int64_t step_count() const { return t_; }
  // Gradient global norm of the current grads (0 when grads are empty).
  double gradient_norm() const;

  std::string state_to_json() const;
  void state_from_json(const std::string& json_text);

 private:
  struct Slot {
    tensor::NamedParam param;
    std::vector<double> m;
    std::vector<double> v;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

struct TrainExample {
  corpus::EncodedDocument enc;
  std::vector<int> degrees;  // per split sentence; at least enc.n_sentences
};

struct ValExample {
  corpus::EncodedDocument enc;
  std::vector<int> reference;  // content token ids of the reference summary
};

struct EpochMetrics {
  int epoch = 0;
  double loss_lm = 0.0;
  double loss_cls = 0.0;
  double loss_total = 0.0;
  double cls_accuracy = 0.0;
  bool has_val = false;
  double val_rouge1 = 0.0;
  double val_rouge2 = 0.0;
  double val_rougeL = 0.0;
};

struct TrainOptions {
  std::string out_dir;  // when set: metrics.jsonl + best/last checkpoints
  decode::DecodeConfig val_decode{.beam_size = 1,
                                  .length_penalty = 1.0,
                                  .block_ngram = 0,
                                  .min_len = 1,
                                  .max_len = 64};
  // Serialized train state from a previous last-checkpoint to continue from.
  std::string resume_state_json;
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  int best_epoch = -1;
  double best_val = 0.0;
  std::string best_checkpoint_path;
  std::string last_checkpoint_path;
  int64_t steps = 0;
};

// Multi-task loop: every step combines the token loss (teacher forcing with
// ground-truth salience guidance) and the smoothed salience classification
// loss, backprops, clips and updates. Documents are batched by similar
// source length; gradients accumulate per document and are averaged per
// batch. Determinism: fixed seed implies an identical run, and resuming
// from the saved last-checkpoint state reproduces the uninterrupted run.
TrainResult train(model::Parameters& params, const model::ModelConfig& mcfg,
                  const TrainConfig& cfg,
                  std::span<const TrainExample> train_set,
                  std::span<const ValExample> val_set,
                  const TrainOptions& opts = {});

// Builds train examples from a labeled corpus (MissingLabels when a
// document has no degrees).
std::vector<TrainExample> make_train_examples(
    const std::vector<salience::LabeledDocument>& docs,
    const corpus::Vocabulary& vocab, int max_src, int max_tgt);

std::vector<ValExample> make_val_examples(
    const std::vector<corpus::RawDocument>& docs,
    const corpus::Vocabulary& vocab, int max_src, int max_tgt);

}  // namespace season::train
