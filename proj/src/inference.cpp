#include "season/inference.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "season/kernels.hpp"

namespace season::model {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void add_bias(double* row, const double* bias, int n) {
  for (int i = 0; i < n; ++i) row[i] += bias[i];
}

// y = LN(x) rowwise with the parameter node's gain/bias.
Matrix layer_norm(const Matrix& x, const tensor::NodePtr& gain,
                  const tensor::NodePtr& bias) {
  Matrix y(x.rows, x.cols);
  std::vector<double> mean(x.rows), inv_std(x.rows);
  kernels::layer_norm_rows(x.data.data(), gain->value.data(),
                           bias->value.data(), y.data.data(), mean.data(),
                           inv_std.data(), x.rows, x.cols, 1e-5);
  return y;
}

// y = x * W + b for a parameter pair.
Matrix linear(const Matrix& x, const tensor::NodePtr& w,
              const tensor::NodePtr& b) {
  Matrix y(x.rows, w->cols());
  kernels::matmul_nn(x.data.data(), w->value.data(), y.data.data(), x.rows,
                     x.cols, w->cols());
  for (int r = 0; r < y.rows; ++r) add_bias(y.row(r), b->value.data(), y.cols);
  return y;
}

Matrix slice_head(const Matrix& x, int head, int dh) {
  Matrix y(x.rows, dh);
  for (int r = 0; r < x.rows; ++r) {
    std::memcpy(y.row(r), x.row(r) + head * dh, sizeof(double) * dh);
  }
  return y;
}

}  // namespace

std::vector<double> log_softmax(std::span<const double> logits) {
  double mx = kNegInf;
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

Inference::Inference(const Parameters& params, const ModelConfig& cfg)
    : params_(params), cfg_(cfg) {
  cfg_.validate();
}

Inference::Encoded Inference::encode(const corpus::EncodedDocument& doc) const {
  const int len = static_cast<int>(doc.input_ids.size());
  if (len == 0) throw EmptyDocument("encode: document has no input tokens");
  if (len > cfg_.max_positions) {
    throw SequenceTooLong("sequence of length " + std::to_string(len) +
                          " exceeds max_positions " +
                          std::to_string(cfg_.max_positions));
  }
  const int d = cfg_.d_model;
  const int dh = cfg_.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix x(len, d);
  for (int i = 0; i < len; ++i) {
    const double* tok = params_.token_embedding->value.data() +
                        int64_t(doc.input_ids[i]) * d;
    const double* pos = params_.positional_embedding->value.data() +
                        int64_t(i) * d;
    kernels::add(tok, pos, x.row(i), d);
  }

  for (const Parameters::EncoderLayerP& layer : params_.encoder) {
    const Matrix normed = layer_norm(x, layer.ln_attn.gain, layer.ln_attn.bias);
    const Matrix q = linear(normed, layer.self_attn.wq, layer.self_attn.bq);
    const Matrix k = linear(normed, layer.self_attn.wk, layer.self_attn.bk);
    const Matrix v = linear(normed, layer.self_attn.wv, layer.self_attn.bv);
    Matrix ctx(len, d);
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const Matrix qh = slice_head(q, h, dh);
      const Matrix kh = slice_head(k, h, dh);
      const Matrix vh = slice_head(v, h, dh);
      Matrix scores(len, len);
      kernels::matmul_nt(qh.data.data(), kh.data.data(), scores.data.data(),
                         len, dh, len);
      kernels::scale(scores.data.data(), inv_sqrt_dh, scores.data.data(),
                     scores.data.size());
      Matrix probs(len, len);
      kernels::softmax_rows(scores.data.data(), probs.data.data(), len, len,
                            1.0);
      Matrix ctx_h(len, dh);
      kernels::matmul_nn(probs.data.data(), vh.data.data(), ctx_h.data.data(),
                         len, len, dh);
      for (int r = 0; r < len; ++r) {
        std::memcpy(ctx.row(r) + h * dh, ctx_h.row(r), sizeof(double) * dh);
      }
    }
    const Matrix attn = linear(ctx, layer.self_attn.wo, layer.self_attn.bo);
    kernels::add(x.data.data(), attn.data.data(), x.data.data(),
                 x.data.size());

    const Matrix normed2 = layer_norm(x, layer.ln_ffn.gain, layer.ln_ffn.bias);
    Matrix hidden = linear(normed2, layer.ffn.w1, layer.ffn.b1);
    kernels::gelu(hidden.data.data(), hidden.data.data(), hidden.data.size());
    const Matrix ff = linear(hidden, layer.ffn.w2, layer.ffn.b2);
    kernels::add(x.data.data(), ff.data.data(), x.data.data(), x.data.size());
  }

  Encoded out;
  out.token_states =
      layer_norm(x, params_.enc_final_norm.gain, params_.enc_final_norm.bias);
  const int n_sent = static_cast<int>(doc.marker_positions.size());
  out.sentence_states = Matrix(n_sent, d);
  for (int j = 0; j < n_sent; ++j) {
    std::memcpy(out.sentence_states.row(j),
                out.token_states.row(doc.marker_positions[j]),
                sizeof(double) * d);
  }
  out.padding_mask.assign(len, 0);
  out.sent_index = doc.sent_index;
  return out;
}

Matrix Inference::salience_probs(const Encoded& enc, double tau) const {
  if (!(tau > 0.0)) throw Error("salience_probs: tau must be > 0");
  const int n = enc.sentence_states.rows;
  const int l = cfg_.n_degrees;
  Matrix logits(n, l);
  kernels::matmul_nt(enc.sentence_states.data.data(),
                     params_.classifier_weight->value.data(),
                     logits.data.data(), n, cfg_.d_model, l);
  for (int r = 0; r < n; ++r) {
    add_bias(logits.row(r), params_.classifier_bias->value.data(), l);
  }
  Matrix probs(n, l);
  kernels::softmax_rows(logits.data.data(), probs.data.data(), n, l,
                        1.0 / tau);
  return probs;
}

Matrix Inference::guidance_soft(const Matrix& degree_probs) const {
  Matrix out(degree_probs.rows, cfg_.d_model);
  kernels::matmul_nn(degree_probs.data.data(),
                     params_.salience_embeddings->value.data(),
                     out.data.data(), degree_probs.rows, cfg_.n_degrees,
                     cfg_.d_model);
  return out;
}

Matrix Inference::guidance_hard(const Matrix& degree_probs) const {
  Matrix out(degree_probs.rows, cfg_.d_model);
  for (int j = 0; j < degree_probs.rows; ++j) {
    int best = 0;
    for (int c = 1; c < degree_probs.cols; ++c) {
      if (degree_probs.at(j, c) > degree_probs.at(j, best)) best = c;
    }
    std::memcpy(out.row(j),
                params_.salience_embeddings->value.data() +
                    int64_t(best) * cfg_.d_model,
                sizeof(double) * cfg_.d_model);
  }
  return out;
}

Matrix Inference::guidance_gold(std::span<const int> degrees) const {
  Matrix out(static_cast<int>(degrees.size()), cfg_.d_model);
  for (size_t j = 0; j < degrees.size(); ++j) {
    if (degrees[j] < 1 || degrees[j] > cfg_.n_degrees) {
      throw InputError("gold salience degree out of range: " +
                       std::to_string(degrees[j]));
    }
    std::memcpy(out.row(static_cast<int>(j)),
                params_.salience_embeddings->value.data() +
                    int64_t(degrees[j] - 1) * cfg_.d_model,
                sizeof(double) * cfg_.d_model);
  }
  return out;
}

Matrix Inference::guidance_zero(int n_sentences) const {
  return Matrix(n_sentences, cfg_.d_model);
}

Matrix Inference::broadcast_guidance(const Matrix& sentence_embeddings,
                                     std::span<const int> sent_index) {
  Matrix out(static_cast<int>(sent_index.size()), sentence_embeddings.cols);
  for (size_t i = 0; i < sent_index.size(); ++i) {
    if (sent_index[i] > 0) {
      std::memcpy(out.row(static_cast<int>(i)),
                  sentence_embeddings.row(sent_index[i] - 1),
                  sizeof(double) * sentence_embeddings.cols);
    }
  }
  return out;
}

std::shared_ptr<const Inference::CrossCache> Inference::make_cross_cache(
    const Encoded& enc, const Matrix* token_salience) const {
  auto cache = std::make_shared<CrossCache>();
  Matrix keys_in = enc.token_states;
  if (token_salience != nullptr) {
    kernels::add(enc.token_states.data.data(), token_salience->data.data(),
                 keys_in.data.data(), keys_in.data.size());
  }
  for (const Parameters::DecoderLayerP& layer : params_.decoder) {
    cache->keys.push_back(
        linear(keys_in, layer.cross_attn.wk, layer.cross_attn.bk));
    cache->values.push_back(
        linear(enc.token_states, layer.cross_attn.wv, layer.cross_attn.bv));
  }
  cache->padding_mask = enc.padding_mask;
  return cache;
}

Inference::DecoderState Inference::make_decoder_state(
    std::shared_ptr<const CrossCache> cross) const {
  DecoderState st;
  st.cross = std::move(cross);
  const int layers = cfg_.n_dec_layers;
  st.self_keys.assign(layers, Matrix(0, cfg_.d_model));
  st.self_values.assign(layers, Matrix(0, cfg_.d_model));
  return st;
}

std::vector<double> Inference::step(DecoderState& state, int token) const {
  const int d = cfg_.d_model;
  const int dh = cfg_.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const int pos = state.length;
  if (pos >= cfg_.max_positions) {
    throw SequenceTooLong("decode position " + std::to_string(pos) +
                          " exceeds max_positions");
  }

  Matrix x(1, d);
  kernels::add(params_.token_embedding->value.data() + int64_t(token) * d,
               params_.positional_embedding->value.data() + int64_t(pos) * d,
               x.row(0), d);

  for (size_t li = 0; li < params_.decoder.size(); ++li) {
    const Parameters::DecoderLayerP& layer = params_.decoder[li];

    // Causal self-attention over the cached keys/values plus this position.
    const Matrix normed = layer_norm(x, layer.ln_self.gain, layer.ln_self.bias);
    const Matrix q = linear(normed, layer.self_attn.wq, layer.self_attn.bq);
    const Matrix k_new = linear(normed, layer.self_attn.wk, layer.self_attn.bk);
    const Matrix v_new = linear(normed, layer.self_attn.wv, layer.self_attn.bv);
    Matrix& keys = state.self_keys[li];
    Matrix& values = state.self_values[li];
    keys.data.insert(keys.data.end(), k_new.data.begin(), k_new.data.end());
    keys.rows += 1;
    values.data.insert(values.data.end(), v_new.data.begin(),
                       v_new.data.end());
    values.rows += 1;

    const int t = keys.rows;
    Matrix ctx(1, d);
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const Matrix qh = slice_head(q, h, dh);
      const Matrix kh = slice_head(keys, h, dh);
      const Matrix vh = slice_head(values, h, dh);
      Matrix scores(1, t);
      kernels::matmul_nt(qh.data.data(), kh.data.data(), scores.data.data(),
                         1, dh, t);
      kernels::scale(scores.data.data(), inv_sqrt_dh, scores.data.data(), t);
      Matrix probs(1, t);
      kernels::softmax_rows(scores.data.data(), probs.data.data(), 1, t, 1.0);
      Matrix ctx_h(1, dh);
      kernels::matmul_nn(probs.data.data(), vh.data.data(), ctx_h.data.data(),
                         1, t, dh);
      std::memcpy(ctx.row(0) + h * dh, ctx_h.row(0), sizeof(double) * dh);
    }
    const Matrix self_out = linear(ctx, layer.self_attn.wo, layer.self_attn.bo);
    kernels::add(x.row(0), self_out.row(0), x.row(0), d);

    // Cross-attention against the per-document cache.
    const Matrix normed_cross =
        layer_norm(x, layer.ln_cross.gain, layer.ln_cross.bias);
    const Matrix qc =
        linear(normed_cross, layer.cross_attn.wq, layer.cross_attn.bq);
    const Matrix& ck = state.cross->keys[li];
    const Matrix& cv = state.cross->values[li];
    const int src = ck.rows;
    Matrix cctx(1, d);
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const Matrix qh = slice_head(qc, h, dh);
      const Matrix kh = slice_head(ck, h, dh);
      const Matrix vh = slice_head(cv, h, dh);
      Matrix scores(1, src);
      kernels::matmul_nt(qh.data.data(), kh.data.data(), scores.data.data(),
                         1, dh, src);
      kernels::scale(scores.data.data(), inv_sqrt_dh, scores.data.data(), src);
      for (int c = 0; c < src; ++c) {
        if (state.cross->padding_mask[c]) scores.data[c] = kNegInf;
      }
      Matrix probs(1, src);
      kernels::softmax_rows(scores.data.data(), probs.data.data(), 1, src,
                            1.0);
      Matrix ctx_h(1, dh);
      kernels::matmul_nn(probs.data.data(), vh.data.data(), ctx_h.data.data(),
                         1, src, dh);
      std::memcpy(cctx.row(0) + h * dh, ctx_h.row(0), sizeof(double) * dh);
    }
    const Matrix cross_out =
        linear(cctx, layer.cross_attn.wo, layer.cross_attn.bo);
    kernels::add(x.row(0), cross_out.row(0), x.row(0), d);

    const Matrix normed_ffn = layer_norm(x, layer.ln_ffn.gain,
                                         layer.ln_ffn.bias);
    Matrix hidden = linear(normed_ffn, layer.ffn.w1, layer.ffn.b1);
    kernels::gelu(hidden.data.data(), hidden.data.data(), hidden.data.size());
    const Matrix ff = linear(hidden, layer.ffn.w2, layer.ffn.b2);
    kernels::add(x.row(0), ff.row(0), x.row(0), d);
  }

  const Matrix normed_out =
      layer_norm(x, params_.dec_final_norm.gain, params_.dec_final_norm.bias);
  std::vector<double> logits(cfg_.vocab_size);
  kernels::matmul_nt(normed_out.row(0), params_.token_embedding->value.data(),
                     logits.data(), 1, d, cfg_.vocab_size);
  state.length += 1;
  return logits;
}

}  // namespace season::model
