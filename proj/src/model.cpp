#include "season/model.hpp"

#include <cmath>

namespace season::model {

using tensor::Tape;
using tensor::Tensor;

void ModelConfig::validate() const {
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0) {
    throw InputError("model config: d_model must be divisible by n_heads");
  }
  if (!(tau > 0.0) || !(tau_cls_train > 0.0)) {
    throw InputError("model config: tau must be > 0");
  }
  if (n_degrees < 2) throw InputError("model config: n_degrees must be >= 2");
  if (vocab_size < corpus::kNumSpecials + 1) {
    throw InputError("model config: vocab_size not set");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw InputError("model config: dropout must lie in [0,1)");
  }
}

namespace {

tensor::NodePtr init_matrix(int rows, int cols, std::mt19937_64& rng) {
  auto n = tensor::make_node({rows, cols}, /*requires_grad=*/true);
  std::normal_distribution<double> dist(0.0, 0.02);
  for (double& v : n->value) v = dist(rng);
  return n;
}

tensor::NodePtr init_zeros(std::vector<int> shape) {
  return tensor::make_node(std::move(shape), /*requires_grad=*/true, 0.0);
}

tensor::NodePtr init_ones(std::vector<int> shape) {
  return tensor::make_node(std::move(shape), /*requires_grad=*/true, 1.0);
}

Parameters::AttentionP init_attention(int d, std::mt19937_64& rng) {
  Parameters::AttentionP a;
  a.wq = init_matrix(d, d, rng);
  a.bq = init_zeros({d});
  a.wk = init_matrix(d, d, rng);
  a.bk = init_zeros({d});
  a.wv = init_matrix(d, d, rng);
  a.bv = init_zeros({d});
  a.wo = init_matrix(d, d, rng);
  a.bo = init_zeros({d});
  return a;
}

Parameters::NormP init_norm(int d) {
  return {init_ones({d}), init_zeros({d})};
}

Parameters::FfnP init_ffn(int d, int ffn, std::mt19937_64& rng) {
  Parameters::FfnP f;
  f.w1 = init_matrix(d, ffn, rng);
  f.b1 = init_zeros({ffn});
  f.w2 = init_matrix(ffn, d, rng);
  f.b2 = init_zeros({d});
  return f;
}

void walk_attention(const std::string& prefix, const Parameters::AttentionP& a,
                    const std::function<void(const std::string&,
                                             const tensor::NodePtr&)>& fn) {
  fn(prefix + ".wq", a.wq);
  fn(prefix + ".bq", a.bq);
  fn(prefix + ".wk", a.wk);
  fn(prefix + ".bk", a.bk);
  fn(prefix + ".wv", a.wv);
  fn(prefix + ".bv", a.bv);
  fn(prefix + ".wo", a.wo);
  fn(prefix + ".bo", a.bo);
}

void walk_norm(const std::string& prefix, const Parameters::NormP& n,
               const std::function<void(const std::string&,
                                        const tensor::NodePtr&)>& fn) {
  fn(prefix + ".gain", n.gain);
  fn(prefix + ".bias", n.bias);
}

void walk_ffn(const std::string& prefix, const Parameters::FfnP& f,
              const std::function<void(const std::string&,
                                       const tensor::NodePtr&)>& fn) {
  fn(prefix + ".w1", f.w1);
  fn(prefix + ".b1", f.b1);
  fn(prefix + ".w2", f.w2);
  fn(prefix + ".b2", f.b2);
}

}  // namespace

Parameters Parameters::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  Parameters p;
  p.token_embedding = init_matrix(cfg.vocab_size, cfg.d_model, rng);
  p.positional_embedding = init_matrix(cfg.max_positions, cfg.d_model, rng);
  for (int i = 0; i < cfg.n_enc_layers; ++i) {
    EncoderLayerP layer;
    layer.ln_attn = init_norm(cfg.d_model);
    layer.self_attn = init_attention(cfg.d_model, rng);
    layer.ln_ffn = init_norm(cfg.d_model);
    layer.ffn = init_ffn(cfg.d_model, cfg.ffn_dim, rng);
    p.encoder.push_back(std::move(layer));
  }
  for (int i = 0; i < cfg.n_dec_layers; ++i) {
    DecoderLayerP layer;
    layer.ln_self = init_norm(cfg.d_model);
    layer.self_attn = init_attention(cfg.d_model, rng);
    layer.ln_cross = init_norm(cfg.d_model);
    layer.cross_attn = init_attention(cfg.d_model, rng);
    layer.ln_ffn = init_norm(cfg.d_model);
    layer.ffn = init_ffn(cfg.d_model, cfg.ffn_dim, rng);
    p.decoder.push_back(std::move(layer));
  }
  p.enc_final_norm = init_norm(cfg.d_model);
  p.dec_final_norm = init_norm(cfg.d_model);
  p.classifier_weight = init_matrix(cfg.n_degrees, cfg.d_model, rng);
  p.classifier_bias = init_zeros({cfg.n_degrees});
  // Zero salience embeddings make the freshly initialized model exactly
  // salience-free.
  p.salience_embeddings = init_zeros({cfg.n_degrees, cfg.d_model});
  return p;
}

void Parameters::for_each(
    const std::function<void(const std::string&, const tensor::NodePtr&)>& fn)
    const {
  fn("token_embedding", token_embedding);
  fn("positional_embedding", positional_embedding);
  for (size_t i = 0; i < encoder.size(); ++i) {
    const std::string base = "encoder." + std::to_string(i);
    walk_norm(base + ".ln_attn", encoder[i].ln_attn, fn);
    walk_attention(base + ".self_attn", encoder[i].self_attn, fn);
    walk_norm(base + ".ln_ffn", encoder[i].ln_ffn, fn);
    walk_ffn(base + ".ffn", encoder[i].ffn, fn);
  }
  for (size_t i = 0; i < decoder.size(); ++i) {
    const std::string base = "decoder." + std::to_string(i);
    walk_norm(base + ".ln_self", decoder[i].ln_self, fn);
    walk_attention(base + ".self_attn", decoder[i].self_attn, fn);
    walk_norm(base + ".ln_cross", decoder[i].ln_cross, fn);
    walk_attention(base + ".cross_attn", decoder[i].cross_attn, fn);
    walk_norm(base + ".ln_ffn", decoder[i].ln_ffn, fn);
    walk_ffn(base + ".ffn", decoder[i].ffn, fn);
  }
  walk_norm("enc_final_norm", enc_final_norm, fn);
  walk_norm("dec_final_norm", dec_final_norm, fn);
  fn("classifier.weight", classifier_weight);
  fn("classifier.bias", classifier_bias);
  fn("salience_embeddings", salience_embeddings);
}

std::vector<tensor::NamedParam> Parameters::named() const {
  std::vector<tensor::NamedParam> out;
  for_each([&out](const std::string& name, const tensor::NodePtr& node) {
    out.push_back({name, node});
  });
  return out;
}

int64_t Parameters::parameter_count() const {
  int64_t total = 0;
  for_each([&total](const std::string&, const tensor::NodePtr& node) {
    total += node->size();
  });
  return total;
}

namespace {

Tensor maybe_dropout(const Tensor& x, const ModelConfig& cfg,
                     const ForwardOptions& opt) {
  if (!opt.training || cfg.dropout == 0.0) return x;
  if (opt.rng == nullptr) {
    throw Error("forward: training mode with dropout requires an rng");
  }
  return tensor::dropout(x, cfg.dropout, *opt.rng);
}

// Multi-head attention over projected q/k/v inputs. mask is a (Tq x Tk)
// byte matrix (1 = forbidden), shared across heads; pass nullptr for none.
Tensor multi_head_attention(Tape& tape, const Tensor& q_in, const Tensor& k_in,
                            const Tensor& v_in,
                            const Parameters::AttentionP& p,
                            const ModelConfig& cfg,
                            std::shared_ptr<const std::vector<uint8_t>> mask) {
  const int dh = cfg.head_dim();
  const Tensor q = tensor::add_rowvec(tensor::matmul(q_in, tape.wrap(p.wq)),
                                      tape.wrap(p.bq));
  const Tensor k = tensor::add_rowvec(tensor::matmul(k_in, tape.wrap(p.wk)),
                                      tape.wrap(p.bk));
  const Tensor v = tensor::add_rowvec(tensor::matmul(v_in, tape.wrap(p.wv)),
                                      tape.wrap(p.bv));
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> heads;
  heads.reserve(cfg.n_heads);
  for (int h = 0; h < cfg.n_heads; ++h) {
    const Tensor qh = tensor::slice_cols(q, h * dh, dh);
    const Tensor kh = tensor::slice_cols(k, h * dh, dh);
    const Tensor vh = tensor::slice_cols(v, h * dh, dh);
    Tensor scores = tensor::scale(
        tensor::matmul(qh, tensor::transpose(kh)), inv_sqrt_dh);
    if (mask) {
      scores = tensor::masked_fill(
          scores, mask, -std::numeric_limits<double>::infinity());
    }
    const Tensor probs = tensor::softmax_rows(scores, 1.0);
    heads.push_back(tensor::matmul(probs, vh));
  }
  const Tensor ctx = tensor::concat_cols(heads);
  return tensor::add_rowvec(tensor::matmul(ctx, tape.wrap(p.wo)),
                            tape.wrap(p.bo));
}

Tensor feed_forward(Tape& tape, const Tensor& x, const Parameters::FfnP& f) {
  const Tensor h = tensor::gelu(tensor::add_rowvec(
      tensor::matmul(x, tape.wrap(f.w1)), tape.wrap(f.b1)));
  return tensor::add_rowvec(tensor::matmul(h, tape.wrap(f.w2)),
                            tape.wrap(f.b2));
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Parameters::NormP& n) {
  return tensor::layer_norm_rows(x, tape.wrap(n.gain), tape.wrap(n.bias));
}

Tensor embed_sequence(Tape& tape, std::span<const int> ids,
                      const Parameters& params, const ModelConfig& cfg,
                      const ForwardOptions& opt) {
  const int len = static_cast<int>(ids.size());
  if (len > cfg.max_positions) {
    throw SequenceTooLong("sequence of length " + std::to_string(len) +
                          " exceeds max_positions " +
                          std::to_string(cfg.max_positions));
  }
  std::vector<int> id_vec(ids.begin(), ids.end());
  std::vector<int> positions(len);
  for (int i = 0; i < len; ++i) positions[i] = i;
  const Tensor tok =
      tensor::take_rows(tape.wrap(params.token_embedding), std::move(id_vec));
  const Tensor pos = tensor::take_rows(tape.wrap(params.positional_embedding),
                                       std::move(positions));
  return maybe_dropout(tensor::add(tok, pos), cfg, opt);
}

std::shared_ptr<const std::vector<uint8_t>> key_padding_mask(
    std::span<const uint8_t> padding, int query_rows) {
  bool any = false;
  for (uint8_t p : padding) {
    if (p) {
      any = true;
      break;
    }
  }
  if (!any) return nullptr;
  const int cols = static_cast<int>(padding.size());
  auto mask = std::make_shared<std::vector<uint8_t>>(
      static_cast<size_t>(query_rows) * cols, 0);
  for (int r = 0; r < query_rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      (*mask)[static_cast<size_t>(r) * cols + c] = padding[c];
    }
  }
  return mask;
}

std::shared_ptr<const std::vector<uint8_t>> causal_mask(int len) {
  auto mask =
      std::make_shared<std::vector<uint8_t>>(static_cast<size_t>(len) * len, 0);
  for (int r = 0; r < len; ++r) {
    for (int c = r + 1; c < len; ++c) {
      (*mask)[static_cast<size_t>(r) * len + c] = 1;
    }
  }
  return mask;
}

}  // namespace

EncoderOutput encode(Tape& tape, const corpus::EncodedDocument& doc,
                     const Parameters& params, const ModelConfig& cfg,
                     const ForwardOptions& opt) {
  if (doc.input_ids.empty()) {
    throw EmptyDocument("encode: document has no input tokens");
  }
  std::vector<int> ids = doc.input_ids;
  std::vector<int> sent_index = doc.sent_index;
  if (opt.pad_to > static_cast<int>(ids.size())) {
    ids.resize(opt.pad_to, corpus::kPad);
    sent_index.resize(opt.pad_to, 0);
  }
  const int len = static_cast<int>(ids.size());
  std::vector<uint8_t> padding(len, 0);
  for (int i = static_cast<int>(doc.input_ids.size()); i < len; ++i) {
    padding[i] = 1;
  }

  Tensor x = embed_sequence(tape, ids, params, cfg, opt);
  const auto pad_mask = key_padding_mask(padding, len);
  for (const Parameters::EncoderLayerP& layer : params.encoder) {
    const Tensor normed = layer_norm(tape, x, layer.ln_attn);
    const Tensor attn = multi_head_attention(tape, normed, normed, normed,
                                             layer.self_attn, cfg, pad_mask);
    x = tensor::add(x, maybe_dropout(attn, cfg, opt));
    const Tensor normed2 = layer_norm(tape, x, layer.ln_ffn);
    const Tensor ff = feed_forward(tape, normed2, layer.ffn);
    x = tensor::add(x, maybe_dropout(ff, cfg, opt));
  }
  EncoderOutput out;
  out.token_states = layer_norm(tape, x, params.enc_final_norm);
  out.sentence_states =
      tensor::take_rows(out.token_states, doc.marker_positions);
  out.padding_mask = std::move(padding);
  out.sent_index = std::move(sent_index);
  return out;
}

Tensor salience_probs(Tape& tape, const Tensor& sentence_states,
                      const Parameters& params, double tau) {
  const Tensor logits = tensor::add_rowvec(
      tensor::matmul(sentence_states,
                     tensor::transpose(tape.wrap(params.classifier_weight))),
      tape.wrap(params.classifier_bias));
  return tensor::softmax_rows(logits, tau);
}

Tensor salience_embedding_hard(Tape& tape, const Tensor& degree_probs,
                               const Parameters& params) {
  const int n = degree_probs.rows();
  const int l = degree_probs.cols();
  std::vector<int> picks(n);
  for (int j = 0; j < n; ++j) {
    int best = 0;
    for (int c = 1; c < l; ++c) {
      if (degree_probs.value_at(j, c) > degree_probs.value_at(j, best)) {
        best = c;  // strict: ties keep the smaller degree index
      }
    }
    picks[j] = best;
  }
  return tensor::take_rows(tape.wrap(params.salience_embeddings),
                           std::move(picks));
}

Tensor salience_embedding_soft(Tape& tape, const Tensor& degree_probs,
                               const Parameters& params) {
  return tensor::matmul(degree_probs, tape.wrap(params.salience_embeddings));
}

Tensor salience_embedding_gold(Tape& tape, std::span<const int> degrees,
                               const Parameters& params) {
  std::vector<int> rows(degrees.size());
  for (size_t j = 0; j < degrees.size(); ++j) {
    const int deg = degrees[j];
    if (deg < 1 || deg > params.salience_embeddings->rows()) {
      throw InputError("gold salience degree out of range: " +
                       std::to_string(deg));
    }
    rows[j] = deg - 1;
  }
  return tensor::take_rows(tape.wrap(params.salience_embeddings),
                           std::move(rows));
}

Tensor broadcast_salience(const Tensor& sentence_embeddings,
                          std::span<const int> sent_index) {
  std::vector<int> rows(sent_index.size());
  for (size_t i = 0; i < sent_index.size(); ++i) {
    // Sentence indices are 1-based; 0 marks PAD and yields a zero row.
    rows[i] = sent_index[i] - 1;
  }
  return tensor::take_rows(sentence_embeddings, std::move(rows));
}

Tensor saca_cross_attention(Tape& tape, const Tensor& queries,
                            const EncoderOutput& enc,
                            const Tensor& token_salience,
                            const Parameters::AttentionP& p,
                            const ModelConfig& cfg) {
  const Tensor keys = token_salience.defined()
                          ? tensor::add(enc.token_states, token_salience)
                          : enc.token_states;
  const auto mask = key_padding_mask(enc.padding_mask, queries.rows());
  return multi_head_attention(tape, queries, keys, enc.token_states, p, cfg,
                              mask);
}

Tensor decoder_forward(Tape& tape, std::span<const int> input_tokens,
                       const EncoderOutput& enc, const Tensor& token_salience,
                       const Parameters& params, const ModelConfig& cfg,
                       const ForwardOptions& opt) {
  if (input_tokens.empty() || input_tokens.front() != corpus::kBos) {
    throw Error("decoder_forward: prefix must start with BOS");
  }
  const int len = static_cast<int>(input_tokens.size());
  Tensor x = embed_sequence(tape, input_tokens, params, cfg, opt);
  const auto self_mask = causal_mask(len);
  for (const Parameters::DecoderLayerP& layer : params.decoder) {
    const Tensor normed = layer_norm(tape, x, layer.ln_self);
    const Tensor self = multi_head_attention(tape, normed, normed, normed,
                                             layer.self_attn, cfg, self_mask);
    x = tensor::add(x, maybe_dropout(self, cfg, opt));
    const Tensor normed_cross = layer_norm(tape, x, layer.ln_cross);
    const Tensor cross = saca_cross_attention(tape, normed_cross, enc,
                                              token_salience, layer.cross_attn,
                                              cfg);
    x = tensor::add(x, maybe_dropout(cross, cfg, opt));
    const Tensor normed_ffn = layer_norm(tape, x, layer.ln_ffn);
    const Tensor ff = feed_forward(tape, normed_ffn, layer.ffn);
    x = tensor::add(x, maybe_dropout(ff, cfg, opt));
  }
  const Tensor final = layer_norm(tape, x, params.dec_final_norm);
  return tensor::matmul(final,
                        tensor::transpose(tape.wrap(params.token_embedding)));
}

Tensor decode_step(Tape& tape, std::span<const int> prefix,
                   const EncoderOutput& enc, const Tensor& token_salience,
                   const Parameters& params, const ModelConfig& cfg) {
  const Tensor logits = decoder_forward(tape, prefix, enc, token_salience,
                                        params, cfg, ForwardOptions{});
  return tensor::take_rows(logits,
                           {static_cast<int>(prefix.size()) - 1});
}

}  // namespace season::model
