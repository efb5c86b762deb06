#include "season/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "season/checkpoint.hpp"
#include "season/metrics.hpp"

namespace season::train {

using tensor::Tape;
using tensor::Tensor;

void TrainConfig::validate() const {
  if (alpha < 0.0) throw InputError("train: alpha must be >= 0");
  if (beta < 0.0 || beta >= 1.0) throw InputError("train: beta must lie in [0,1)");
  if (!(clip_norm > 0.0)) throw InputError("train: clip_norm must be > 0");
  if (batch_size < 1) throw InputError("train: batch_size must be >= 1");
  if (epochs < 1) throw InputError("train: epochs must be >= 1");
  if (warmup_steps < 0) throw InputError("train: warmup_steps must be >= 0");
}

Tensor loss_cls(const Tensor& degree_probs,
                std::span<const double> smoothed_targets) {
  const int n = degree_probs.rows();
  const int l = degree_probs.cols();
  if (static_cast<int64_t>(smoothed_targets.size()) != int64_t(n) * l) {
    throw ShapeMismatch("loss_cls: targets size " +
                        std::to_string(smoothed_targets.size()) +
                        " does not match [" + std::to_string(n) + "," +
                        std::to_string(l) + "]");
  }
  Tape* tape = degree_probs.tape();
  const Tensor targets = tape->leaf({n, l}, smoothed_targets);
  const Tensor weighted = tensor::mul(tensor::log_clamped(degree_probs),
                                      targets);
  return tensor::scale(tensor::sum(weighted), -1.0 / static_cast<double>(n));
}

Tensor loss_lm(const Tensor& logits, std::span<const int> targets) {
  const int t = logits.rows();
  const int v = logits.cols();
  if (static_cast<int>(targets.size()) != t) {
    throw ShapeMismatch("loss_lm: " + std::to_string(targets.size()) +
                        " targets for " + std::to_string(t) + " positions");
  }
  const Tensor logp = tensor::log_clamped(tensor::softmax_rows(logits, 1.0));
  std::vector<int64_t> picks(targets.size());
  for (size_t k = 0; k < targets.size(); ++k) {
    picks[k] = int64_t(k) * v + targets[k];
  }
  const Tensor chosen = tensor::take_elements(logp, std::move(picks));
  return tensor::scale(tensor::sum(chosen), -1.0 / static_cast<double>(t));
}

Tensor loss_total(const Tensor& lm, const Tensor& cls, double alpha) {
  return tensor::add(lm, tensor::scale(cls, alpha));
}

double lr_at_step(const TrainConfig& cfg, int64_t step) {
  if (cfg.warmup_steps <= 0) return cfg.lr;
  const double frac = static_cast<double>(step) /
                      static_cast<double>(cfg.warmup_steps);
  return cfg.lr * std::min(frac, 1.0);
}

AdamW::AdamW(std::vector<tensor::NamedParam> params, double beta1,
             double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto& p : params) {
    Slot slot;
    slot.param = std::move(p);
    slot.m.assign(slot.param.node->size(), 0.0);
    slot.v.assign(slot.param.node->size(), 0.0);
    slots_.push_back(std::move(slot));
  }
}

void AdamW::zero_grad() {
  for (Slot& s : slots_) s.param.node->zero_grad();
}

double AdamW::gradient_norm() const {
  double sq = 0.0;
  for (const Slot& s : slots_) {
    for (double g : s.param.node->grad) sq += g * g;
  }
  return std::sqrt(sq);
}

void AdamW::step(double lr, double weight_decay, double clip_norm) {
  double sq = 0.0;
  for (const Slot& s : slots_) {
    double local = 0.0;
    for (double g : s.param.node->grad) local += g * g;
    if (!std::isfinite(local)) {
      throw NonFiniteGradient("non-finite gradient in " + s.param.name);
    }
    sq += local;
  }
  const double norm = std::sqrt(sq);
  const double clip_scale = norm > clip_norm ? clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Slot& s : slots_) {
    tensor::Node* node = s.param.node.get();
    node->ensure_grad();
    // Rank-1 tensors are biases and norm gains: no weight decay.
    const double wd = node->shape.size() >= 2 ? weight_decay : 0.0;
    const int64_t n = node->size();
    for (int64_t i = 0; i < n; ++i) {
      const double g = node->grad[i] * clip_scale;
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      node->value[i] -=
          lr * (mhat / (std::sqrt(vhat) + eps_) + wd * node->value[i]);
    }
  }
}

std::string AdamW::state_to_json() const {
  nlohmann::json j;
  j["t"] = t_;
  nlohmann::json moments = nlohmann::json::object();
  for (const Slot& s : slots_) {
    moments[s.param.name] = {{"m", s.m}, {"v", s.v}};
  }
  j["moments"] = std::move(moments);
  return j.dump();
}

void AdamW::state_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  t_ = j.at("t").get<int64_t>();
  const nlohmann::json& moments = j.at("moments");
  for (Slot& s : slots_) {
    if (!moments.contains(s.param.name)) {
      throw InputError("optimizer state: missing moments for " + s.param.name);
    }
    s.m = moments[s.param.name].at("m").get<std::vector<double>>();
    s.v = moments[s.param.name].at("v").get<std::vector<double>>();
    if (s.m.size() != s.param.node->value.size() ||
        s.v.size() != s.param.node->value.size()) {
      throw InputError("optimizer state: size mismatch for " + s.param.name);
    }
  }
}

std::vector<TrainExample> make_train_examples(
    const std::vector<salience::LabeledDocument>& docs,
    const corpus::Vocabulary& vocab, int max_src, int max_tgt) {
  std::vector<TrainExample> out;
  out.reserve(docs.size());
  for (const salience::LabeledDocument& d : docs) {
    if (d.degrees.empty()) {
      throw MissingLabels("document has no salience degrees: " + d.doc.id);
    }
    TrainExample ex;
    ex.enc = corpus::encode_document(d.doc, vocab, max_src, max_tgt);
    if (static_cast<int>(d.degrees.size()) < ex.enc.n_sentences) {
      throw MissingLabels("document " + d.doc.id + " has " +
                          std::to_string(d.degrees.size()) +
                          " degrees for " +
                          std::to_string(ex.enc.n_sentences) + " sentences");
    }
    ex.degrees = d.degrees;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<ValExample> make_val_examples(
    const std::vector<corpus::RawDocument>& docs,
    const corpus::Vocabulary& vocab, int max_src, int max_tgt) {
  std::vector<ValExample> out;
  out.reserve(docs.size());
  for (const corpus::RawDocument& d : docs) {
    ValExample ex;
    ex.enc = corpus::encode_document(d, vocab, max_src, max_tgt);
    ex.reference.assign(ex.enc.target_ids.begin() + 1,
                        ex.enc.target_ids.end() - 1);
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

struct DocLosses {
  double lm = 0.0;
  double cls = 0.0;
  double total = 0.0;
  int correct_degrees = 0;
  int n_sentences = 0;
};

std::vector<double> smoothed_target_matrix(std::span<const int> degrees, int n,
                                           int l, const TrainConfig& cfg) {
  std::vector<double> targets(static_cast<size_t>(n) * l);
  for (int j = 0; j < n; ++j) {
    const salience::SmoothedTarget t =
        cfg.smoothing == TrainConfig::Smoothing::kAdjacent
            ? salience::smooth_labels(degrees[j], l, cfg.beta)
            : salience::smooth_labels_uniform(degrees[j], l, cfg.beta);
    std::copy(t.distribution.begin(), t.distribution.end(),
              targets.begin() + static_cast<size_t>(j) * l);
  }
  return targets;
}

// Forward + backward for one document; gradient is scaled by inv_batch.
DocLosses train_step_doc(model::Parameters& params,
                         const model::ModelConfig& mcfg,
                         const TrainConfig& cfg, const TrainExample& ex,
                         double inv_batch, std::mt19937_64& rng) {
  Tape tape;
  model::ForwardOptions fwd;
  fwd.training = true;
  fwd.rng = &rng;

  const model::EncoderOutput enc = model::encode(tape, ex.enc, params, mcfg,
                                                 fwd);
  const int n = ex.enc.n_sentences;
  const Tensor probs = model::salience_probs(tape, enc.sentence_states, params,
                                             mcfg.tau_cls_train);
  const std::vector<double> targets =
      smoothed_target_matrix(ex.degrees, n, mcfg.n_degrees, cfg);
  const Tensor cls = loss_cls(probs, targets);

  Tensor token_salience;
  if (!cfg.zero_guidance) {
    const Tensor gold = model::salience_embedding_gold(
        tape, std::span<const int>(ex.degrees.data(), n), params);
    token_salience = model::broadcast_salience(gold, enc.sent_index);
  }

  const std::span<const int> input(ex.enc.target_ids.data(),
                                   ex.enc.target_ids.size() - 1);
  const std::span<const int> predict(ex.enc.target_ids.data() + 1,
                                     ex.enc.target_ids.size() - 1);
  const Tensor logits = model::decoder_forward(tape, input, enc,
                                               token_salience, params, mcfg,
                                               fwd);
  const Tensor lm = loss_lm(logits, predict);
  const Tensor total = loss_total(lm, cls, cfg.alpha);
  tape.backward(tensor::scale(total, inv_batch));

  DocLosses out;
  out.lm = lm.item();
  out.cls = cls.item();
  out.total = total.item();
  out.n_sentences = n;
  for (int j = 0; j < n; ++j) {
    int best = 0;
    for (int c = 1; c < mcfg.n_degrees; ++c) {
      if (probs.value_at(j, c) > probs.value_at(j, best)) best = c;
    }
    if (best + 1 == ex.degrees[j]) ++out.correct_degrees;
  }
  return out;
}

struct ValScores {
  double r1 = 0.0, r2 = 0.0, rl = 0.0;
};

metrics::TokenSeq ids_to_tokens(std::span<const int> ids) {
  metrics::TokenSeq out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(std::to_string(id));
  return out;
}

ValScores validate(const model::Parameters& params,
                   const model::ModelConfig& mcfg,
                   std::span<const ValExample> val_set,
                   const decode::DecodeConfig& dcfg) {
  const model::Inference inf(params, mcfg);
  ValScores scores;
  for (const ValExample& ex : val_set) {
    const model::Inference::Encoded enc = inf.encode(ex.enc);
    const model::Matrix probs = inf.salience_probs(enc, mcfg.tau);
    const model::Matrix guidance = inf.guidance_soft(probs);
    const model::Matrix token_salience =
        model::Inference::broadcast_guidance(guidance, enc.sent_index);
    const auto cross = inf.make_cross_cache(enc, &token_salience);
    const decode::ModelStepper stepper(inf, cross);
    const decode::BeamResult beam = decode::beam_search(stepper, dcfg);
    const metrics::TokenSeq cand = ids_to_tokens(beam.content_tokens());
    const metrics::TokenSeq ref = ids_to_tokens(ex.reference);
    scores.r1 += metrics::rouge_n(cand, ref, 1).f1;
    scores.r2 += metrics::rouge_n(cand, ref, 2).f1;
    scores.rl += metrics::rouge_l(cand, ref).f1;
  }
  const double inv = val_set.empty() ? 0.0 : 1.0 / double(val_set.size());
  scores.r1 *= inv;
  scores.r2 *= inv;
  scores.rl *= inv;
  return scores;
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
}

nlohmann::json metrics_to_json(const EpochMetrics& m) {
  nlohmann::json j{{"epoch", m.epoch},
                   {"loss_lm", m.loss_lm},
                   {"loss_cls", m.loss_cls},
                   {"loss_total", m.loss_total},
                   {"cls_accuracy", m.cls_accuracy}};
  if (m.has_val) {
    j["val_rouge1"] = m.val_rouge1;
    j["val_rouge2"] = m.val_rouge2;
    j["val_rougeL"] = m.val_rougeL;
  } else {
    j["val_rouge1"] = nullptr;
    j["val_rouge2"] = nullptr;
    j["val_rougeL"] = nullptr;
  }
  return j;
}

}  // namespace

TrainResult train(model::Parameters& params, const model::ModelConfig& mcfg,
                  const TrainConfig& cfg,
                  std::span<const TrainExample> train_set,
                  std::span<const ValExample> val_set,
                  const TrainOptions& opts) {
  cfg.validate();
  mcfg.validate();
  if (train_set.empty()) throw InputError("train: empty training set");
  for (const TrainExample& ex : train_set) {
    if (ex.degrees.empty()) {
      throw MissingLabels("train: document without salience degrees: " +
                          ex.enc.id);
    }
  }

  AdamW optimizer(params.named());
  std::mt19937_64 rng(cfg.seed);
  int start_epoch = 0;
  int best_epoch = -1;
  double best_val = -1.0;

  if (!opts.resume_state_json.empty()) {
    nlohmann::json j = nlohmann::json::parse(opts.resume_state_json);
    optimizer.state_from_json(j.at("optimizer").dump());
    rng_from_string(rng, j.at("rng").get<std::string>());
    start_epoch = j.at("epoch").get<int>();
    best_epoch = j.at("best_epoch").get<int>();
    best_val = j.at("best_val").get<double>();
  }

  // Batches group documents of similar source length.
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return train_set[a].enc.input_ids.size() <
           train_set[b].enc.input_ids.size();
  });
  std::vector<std::vector<int>> batches;
  for (size_t i = 0; i < order.size(); i += cfg.batch_size) {
    const size_t end = std::min(order.size(), i + cfg.batch_size);
    batches.emplace_back(order.begin() + i, order.begin() + end);
  }

  std::ofstream metrics_log;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const auto mode = start_epoch > 0 ? std::ios::app : std::ios::out;
    metrics_log.open(opts.out_dir + "/metrics.jsonl", mode);
  }

  // Best parameters are kept in memory and written once at the end.
  std::vector<std::vector<double>> best_values;
  auto snapshot_best = [&] {
    best_values.clear();
    params.for_each([&](const std::string&, const tensor::NodePtr& node) {
      best_values.push_back(node->value);
    });
  };

  TrainResult result;
  bool stop = false;
  for (int epoch = start_epoch; epoch < cfg.epochs && !stop; ++epoch) {
    std::shuffle(batches.begin(), batches.end(), rng);
    double sum_lm = 0.0, sum_cls = 0.0, sum_total = 0.0;
    int64_t docs_seen = 0, sent_correct = 0, sent_total = 0;
    for (const std::vector<int>& batch : batches) {
      optimizer.zero_grad();
      const double inv_batch = 1.0 / static_cast<double>(batch.size());
      for (int idx : batch) {
        const DocLosses dl = train_step_doc(params, mcfg, cfg,
                                            train_set[idx], inv_batch, rng);
        sum_lm += dl.lm;
        sum_cls += dl.cls;
        sum_total += dl.total;
        sent_correct += dl.correct_degrees;
        sent_total += dl.n_sentences;
        ++docs_seen;
      }
      optimizer.step(lr_at_step(cfg, optimizer.step_count() + 1),
                     cfg.weight_decay, cfg.clip_norm);
    }

    EpochMetrics em;
    em.epoch = epoch + 1;
    em.loss_lm = sum_lm / static_cast<double>(docs_seen);
    em.loss_cls = sum_cls / static_cast<double>(docs_seen);
    em.loss_total = sum_total / static_cast<double>(docs_seen);
    em.cls_accuracy = sent_total == 0 ? 0.0
                                      : static_cast<double>(sent_correct) /
                                            static_cast<double>(sent_total);

    const bool last_epoch = epoch + 1 == cfg.epochs;
    if (cfg.stop_at_loss_lm > 0.0 && em.loss_lm < cfg.stop_at_loss_lm) {
      stop = true;
    }
    if (!val_set.empty() &&
        ((epoch + 1) % std::max(1, cfg.val_every) == 0 || last_epoch || stop)) {
      const ValScores vs = validate(params, mcfg, val_set, opts.val_decode);
      em.has_val = true;
      em.val_rouge1 = vs.r1;
      em.val_rouge2 = vs.r2;
      em.val_rougeL = vs.rl;
      if (vs.rl > best_val) {
        best_val = vs.rl;
        best_epoch = epoch + 1;
        snapshot_best();
      }
    } else if (val_set.empty()) {
      // Without validation the best checkpoint tracks the token loss.
      if (best_epoch < 0 || em.loss_lm < best_val) {
        best_val = em.loss_lm;
        best_epoch = epoch + 1;
        snapshot_best();
      }
    }

    log_info("epoch " + std::to_string(em.epoch) +
             " loss_lm=" + std::to_string(em.loss_lm) +
             " loss_cls=" + std::to_string(em.loss_cls) +
             " acc=" + std::to_string(em.cls_accuracy) +
             (em.has_val ? " val_rL=" + std::to_string(em.val_rougeL) : ""));
    if (metrics_log.is_open()) {
      metrics_log << metrics_to_json(em).dump() << "\n";
      metrics_log.flush();
    }
    result.log.push_back(em);

    if (stop || last_epoch) {
      if (!opts.out_dir.empty()) {
        nlohmann::json state;
        state["epoch"] = epoch + 1;
        state["best_epoch"] = best_epoch;
        state["best_val"] = best_val;
        state["rng"] = rng_to_string(rng);
        state["optimizer"] = nlohmann::json::parse(optimizer.state_to_json());
        const std::string state_str = state.dump();
        result.last_checkpoint_path = opts.out_dir + "/last.ckpt.json";
        model::save_checkpoint(result.last_checkpoint_path, params, mcfg,
                               &state_str);
        if (!best_values.empty()) {
          // Materialize the best snapshot into a scratch copy for saving.
          model::Parameters best = model::Parameters::init(mcfg, 0);
          size_t slot = 0;
          best.for_each([&](const std::string&, const tensor::NodePtr& node) {
            node->value = best_values[slot++];
          });
          result.best_checkpoint_path = opts.out_dir + "/best.ckpt.json";
          model::save_checkpoint(result.best_checkpoint_path, best, mcfg);
        }
      }
      break;
    }
  }
  result.best_epoch = best_epoch;
  result.best_val = best_val;
  result.steps = optimizer.step_count();
  return result;
}

}  // namespace season::train
