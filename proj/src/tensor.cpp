#include "season/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "season/kernels.hpp"

namespace season::tensor {

namespace {

std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

void require_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.tape() != b.tape()) {
    throw Error(std::string(op) + ": operands recorded on different tapes");
  }
}

[[noreturn]] void shape_error(const char* op, const std::vector<int>& a,
                              const std::vector<int>& b) {
  throw ShapeMismatch(std::string(op) + ": incompatible shapes " +
                      shape_str(a) + " and " + shape_str(b));
}

int64_t shape_product(const std::vector<int>& s) {
  int64_t p = 1;
  for (int d : s) p *= d;
  return p;
}

// Builds the output node for an op: value buffer sized from shape,
// requires_grad propagated from inputs when the tape records gradients.
NodePtr op_node(Tape* tape, std::vector<int> shape,
                std::initializer_list<NodePtr> inputs) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.resize(shape_product(n->shape));
  if (tape->grad_enabled()) {
    for (const auto& in : inputs) {
      if (in->requires_grad) {
        n->requires_grad = true;
        break;
      }
    }
    if (n->requires_grad) n->inputs.assign(inputs);
  }
  return n;
}

}  // namespace

NodePtr make_node(std::vector<int> shape, bool requires_grad, double fill) {
  auto n = std::make_shared<Node>();
  n->value.assign(shape_product(shape), fill);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return n;
}

double Tensor::item() const {
  if (!defined() || size() != 1) {
    throw Error("item: tensor is not a scalar");
  }
  return node_->value[0];
}

Tensor Tape::record(NodePtr node) {
  nodes_.push_back(node);
  return Tensor(this, std::move(node));
}

Tensor Tape::leaf(std::vector<int> shape, std::span<const double> data,
                  bool requires_grad) {
  auto n = make_node(std::move(shape), requires_grad && grad_enabled_);
  if (static_cast<int64_t>(data.size()) != n->size()) {
    throw ShapeMismatch("leaf: data size " + std::to_string(data.size()) +
                        " does not match shape " + shape_str(n->shape));
  }
  std::copy(data.begin(), data.end(), n->value.begin());
  return record(std::move(n));
}

Tensor Tape::zeros(std::vector<int> shape, bool requires_grad) {
  return record(make_node(std::move(shape), requires_grad && grad_enabled_));
}

Tensor Tape::full(std::vector<int> shape, double fill, bool requires_grad) {
  return record(
      make_node(std::move(shape), requires_grad && grad_enabled_, fill));
}

Tensor Tape::scalar(double v) { return full({1}, v, false); }

Tensor Tape::wrap(NodePtr external) {
  // Not recorded: parameters live before everything on the tape.
  return Tensor(this, std::move(external));
}

void Tape::backward(const Tensor& loss) {
  if (!grad_enabled_) throw Error("backward: tape was created without grad");
  if (!loss.defined() || loss.size() != 1) {
    throw LossNotScalar("backward: loss must hold exactly one element");
  }
  if (!loss.node()->requires_grad) return;
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (n->backward && n->has_grad()) n->backward();
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul");
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows()) {
    shape_error("matmul", a.shape(), b.shape());
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  auto out = op_node(a.tape(), {m, n}, {a.node(), b.node()});
  kernels::matmul_nn(a.values().data(), b.values().data(), out->value.data(),
                     m, k, n);
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward = [o, an, bn, m, k, n] {
      if (an->requires_grad) {
        an->ensure_grad();
        kernels::matmul_nt(o->grad.data(), bn->value.data(), an->grad.data(),
                           m, n, k, /*accumulate=*/true);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        kernels::matmul_tn(an->value.data(), o->grad.data(), bn->grad.data(),
                           m, k, n, /*accumulate=*/true);
      }
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) {
    throw ShapeMismatch("transpose: expected rank 2, got " +
                        shape_str(a.shape()));
  }
  const int r = a.rows(), c = a.cols();
  auto out = op_node(a.tape(), {c, r}, {a.node()});
  const double* src = a.values().data();
  double* dst = out->value.data();
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) dst[int64_t(j) * r + i] = src[int64_t(i) * c + j];
  }
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, r, c] {
      an->ensure_grad();
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
          an->grad[int64_t(i) * c + j] += o->grad[int64_t(j) * r + i];
        }
      }
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "add");
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  auto out = op_node(a.tape(), a.shape(), {a.node(), b.node()});
  kernels::add(a.values().data(), b.values().data(), out->value.data(),
               a.size());
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward = [o, an, bn] {
      if (an->requires_grad) {
        an->ensure_grad();
        kernels::axpy(1.0, o->grad.data(), an->grad.data(), o->size());
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        kernels::axpy(1.0, o->grad.data(), bn->grad.data(), o->size());
      }
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  require_same_tape(m, v, "add_rowvec");
  if (m.shape().size() != 2 || v.size() != m.cols()) {
    shape_error("add_rowvec", m.shape(), v.shape());
  }
  const int rows = m.rows(), cols = m.cols();
  auto out = op_node(m.tape(), m.shape(), {m.node(), v.node()});
  const double* src = m.values().data();
  const double* vec = v.values().data();
  double* dst = out->value.data();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      dst[int64_t(r) * cols + c] = src[int64_t(r) * cols + c] + vec[c];
    }
  }
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr mn = m.node(), vn = v.node();
    out->backward = [o, mn, vn, rows, cols] {
      if (mn->requires_grad) {
        mn->ensure_grad();
        kernels::axpy(1.0, o->grad.data(), mn->grad.data(), o->size());
      }
      if (vn->requires_grad) {
        vn->ensure_grad();
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) {
            vn->grad[c] += o->grad[int64_t(r) * cols + c];
          }
        }
      }
    };
  }
  return m.tape()->record(std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "mul");
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  auto out = op_node(a.tape(), a.shape(), {a.node(), b.node()});
  kernels::mul(a.values().data(), b.values().data(), out->value.data(),
               a.size());
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node(), bn = b.node();
    out->backward = [o, an, bn] {
      const int64_t n = o->size();
      if (an->requires_grad) {
        an->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
          an->grad[i] += o->grad[i] * bn->value[i];
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
          bn->grad[i] += o->grad[i] * an->value[i];
        }
      }
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor scale(const Tensor& a, double s) {
  auto out = op_node(a.tape(), a.shape(), {a.node()});
  kernels::scale(a.values().data(), s, out->value.data(), a.size());
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, s] {
      an->ensure_grad();
      kernels::axpy(s, o->grad.data(), an->grad.data(), o->size());
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor softmax_rows(const Tensor& a, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error("softmax_rows: temperature must be > 0");
  }
  const double inv_temp = 1.0 / temperature;
  const int rows = a.rows(), cols = a.cols();
  auto out = op_node(a.tape(), a.shape(), {a.node()});
  kernels::softmax_rows(a.values().data(), out->value.data(), rows, cols,
                        inv_temp);
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, rows, cols, inv_temp] {
      an->ensure_grad();
      kernels::softmax_rows_grad(o->value.data(), o->grad.data(),
                                 an->grad.data(), rows, cols, inv_temp);
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor log_clamped(const Tensor& a, double floor) {
  auto out = op_node(a.tape(), a.shape(), {a.node()});
  const double* x = a.values().data();
  double* y = out->value.data();
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) y[i] = std::log(x[i] < floor ? floor : x[i]);
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, floor] {
      an->ensure_grad();
      const int64_t sz = o->size();
      for (int64_t i = 0; i < sz; ++i) {
        if (an->value[i] >= floor) {
          an->grad[i] += o->grad[i] / an->value[i];
        }
      }
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor gelu(const Tensor& a) {
  auto out = op_node(a.tape(), a.shape(), {a.node()});
  kernels::gelu(a.values().data(), out->value.data(), a.size());
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an] {
      an->ensure_grad();
      kernels::gelu_grad(an->value.data(), o->grad.data(), an->grad.data(),
                         o->size());
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps) {
  require_same_tape(x, gain, "layer_norm_rows");
  require_same_tape(x, bias, "layer_norm_rows");
  const int rows = x.rows(), cols = x.cols();
  if (gain.size() != cols || bias.size() != cols) {
    shape_error("layer_norm_rows", x.shape(), gain.shape());
  }
  auto out = op_node(x.tape(), x.shape(), {x.node(), gain.node(), bias.node()});
  auto stats = std::make_shared<std::vector<double>>(2 * rows);
  double* mean = stats->data();
  double* inv_std = stats->data() + rows;
  kernels::layer_norm_rows(x.values().data(), gain.values().data(),
                           bias.values().data(), out->value.data(), mean,
                           inv_std, rows, cols, eps);
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr xn = x.node(), gn = gain.node(), bn = bias.node();
    out->backward = [o, xn, gn, bn, stats, rows, cols] {
      xn->ensure_grad();
      gn->ensure_grad();
      bn->ensure_grad();
      kernels::layer_norm_rows_grad(
          xn->value.data(), gn->value.data(), o->grad.data(), stats->data(),
          stats->data() + rows, xn->grad.data(), gn->grad.data(),
          bn->grad.data(), rows, cols);
    };
  }
  return x.tape()->record(std::move(out));
}

Tensor take_rows(const Tensor& src, std::vector<int> idx) {
  if (src.shape().size() != 2) {
    throw ShapeMismatch("take_rows: expected rank 2, got " +
                        shape_str(src.shape()));
  }
  const int cols = src.cols(), rows = src.rows();
  for (int i : idx) {
    if (i >= rows) {
      throw ShapeMismatch("take_rows: index " + std::to_string(i) +
                          " out of range for " + shape_str(src.shape()));
    }
  }
  const int out_rows = static_cast<int>(idx.size());
  auto out = op_node(src.tape(), {out_rows, cols}, {src.node()});
  kernels::take_rows(src.values().data(), idx.data(), out->value.data(),
                     out_rows, cols);
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr sn = src.node();
    auto indices = std::make_shared<std::vector<int>>(std::move(idx));
    out->backward = [o, sn, indices, out_rows, cols] {
      sn->ensure_grad();
      kernels::scatter_add_rows(sn->grad.data(), indices->data(),
                                o->grad.data(), out_rows, cols);
    };
  }
  return src.tape()->record(std::move(out));
}

Tensor take_elements(const Tensor& src, std::vector<int64_t> idx) {
  const int64_t n = static_cast<int64_t>(idx.size());
  for (int64_t i : idx) {
    if (i < 0 || i >= src.size()) {
      throw ShapeMismatch("take_elements: index " + std::to_string(i) +
                          " out of range for " + shape_str(src.shape()));
    }
  }
  auto out = op_node(src.tape(), {static_cast<int>(n)}, {src.node()});
  for (int64_t i = 0; i < n; ++i) out->value[i] = src.values()[idx[i]];
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr sn = src.node();
    auto indices = std::make_shared<std::vector<int64_t>>(std::move(idx));
    out->backward = [o, sn, indices] {
      sn->ensure_grad();
      for (size_t i = 0; i < indices->size(); ++i) {
        sn->grad[(*indices)[i]] += o->grad[i];
      }
    };
  }
  return src.tape()->record(std::move(out));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  const int rows = parts[0].rows();
  int total_cols = 0;
  for (const Tensor& p : parts) {
    require_same_tape(parts[0], p, "concat_cols");
    if (p.shape().size() != 2 || p.rows() != rows) {
      shape_error("concat_cols", parts[0].shape(), p.shape());
    }
    total_cols += p.cols();
  }
  auto node = std::make_shared<Node>();
  node->shape = {rows, total_cols};
  node->value.resize(int64_t(rows) * total_cols);
  std::vector<NodePtr> inputs;
  bool req = false;
  for (const Tensor& p : parts) {
    inputs.push_back(p.node());
    req = req || p.requires_grad();
  }
  node->requires_grad = parts[0].tape()->grad_enabled() && req;
  int col_off = 0;
  for (const Tensor& p : parts) {
    const int pc = p.cols();
    for (int r = 0; r < rows; ++r) {
      std::memcpy(node->value.data() + int64_t(r) * total_cols + col_off,
                  p.values().data() + int64_t(r) * pc, sizeof(double) * pc);
    }
    col_off += pc;
  }
  if (node->requires_grad) {
    node->inputs = inputs;
    Node* o = node.get();
    node->backward = [o, inputs, rows, total_cols] {
      int off = 0;
      for (const NodePtr& in : inputs) {
        const int pc = in->cols();
        if (in->requires_grad) {
          in->ensure_grad();
          for (int r = 0; r < rows; ++r) {
            const double* g = o->grad.data() + int64_t(r) * total_cols + off;
            double* dst = in->grad.data() + int64_t(r) * pc;
            for (int c = 0; c < pc; ++c) dst[c] += g[c];
          }
        }
        off += pc;
      }
    };
  }
  return parts[0].tape()->record(std::move(node));
}

Tensor slice_cols(const Tensor& a, int start, int count) {
  if (a.shape().size() != 2 || start < 0 || count < 1 ||
      start + count > a.cols()) {
    throw ShapeMismatch("slice_cols: range [" + std::to_string(start) + "," +
                        std::to_string(start + count) + ") invalid for " +
                        shape_str(a.shape()));
  }
  const int rows = a.rows(), cols = a.cols();
  auto out = op_node(a.tape(), {rows, count}, {a.node()});
  for (int r = 0; r < rows; ++r) {
    std::memcpy(out->value.data() + int64_t(r) * count,
                a.values().data() + int64_t(r) * cols + start,
                sizeof(double) * count);
  }
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, start, count, rows, cols] {
      an->ensure_grad();
      for (int r = 0; r < rows; ++r) {
        const double* g = o->grad.data() + int64_t(r) * count;
        double* dst = an->grad.data() + int64_t(r) * cols + start;
        for (int c = 0; c < count; ++c) dst[c] += g[c];
      }
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor masked_fill(const Tensor& a,
                   std::shared_ptr<const std::vector<uint8_t>> mask,
                   double fill) {
  if (static_cast<int64_t>(mask->size()) != a.size()) {
    throw ShapeMismatch("masked_fill: mask size " +
                        std::to_string(mask->size()) + " does not match " +
                        shape_str(a.shape()));
  }
  auto out = op_node(a.tape(), a.shape(), {a.node()});
  const double* x = a.values().data();
  const uint8_t* m = mask->data();
  double* y = out->value.data();
  const int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) y[i] = m[i] ? fill : x[i];
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, mask] {
      an->ensure_grad();
      const int64_t sz = o->size();
      const uint8_t* mm = mask->data();
      for (int64_t i = 0; i < sz; ++i) {
        if (!mm[i]) an->grad[i] += o->grad[i];
      }
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor sum(const Tensor& a) {
  auto out = op_node(a.tape(), {1}, {a.node()});
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  out->value[0] = acc;
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an] {
      an->ensure_grad();
      const double g = o->grad[0];
      for (double& d : an->grad) d += g;
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor mean(const Tensor& a) {
  auto out = op_node(a.tape(), {1}, {a.node()});
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  const double inv_n = 1.0 / static_cast<double>(a.size());
  out->value[0] = acc * inv_n;
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, inv_n] {
      an->ensure_grad();
      const double g = o->grad[0] * inv_n;
      for (double& d : an->grad) d += g;
    };
  }
  return a.tape()->record(std::move(out));
}

Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw Error("dropout: p must be in [0,1)");
  if (p == 0.0) return a;
  const double keep = 1.0 - p;
  const double inv_keep = 1.0 / keep;
  auto mask = std::make_shared<std::vector<double>>(a.size());
  std::bernoulli_distribution dist(keep);
  for (double& m : *mask) m = dist(rng) ? inv_keep : 0.0;
  auto out = op_node(a.tape(), a.shape(), {a.node()});
  kernels::mul(a.values().data(), mask->data(), out->value.data(), a.size());
  if (out->requires_grad) {
    Node* o = out.get();
    NodePtr an = a.node();
    out->backward = [o, an, mask] {
      an->ensure_grad();
      const int64_t n = o->size();
      for (int64_t i = 0; i < n; ++i) {
        an->grad[i] += o->grad[i] * (*mask)[i];
      }
    };
  }
  return a.tape()->record(std::move(out));
}

FiniteDiffReport finite_diff_check(const std::function<double()>& loss_fn,
                                   std::span<const NamedParam> params,
                                   double eps, int coords_per_tensor,
                                   uint64_t seed) {
  if (!(eps > 0.0)) throw Error("finite_diff_check: eps must be > 0");
  std::mt19937_64 rng(seed);
  FiniteDiffReport report;
  for (const NamedParam& p : params) {
    Node* n = p.node.get();
    const int64_t sz = n->size();
    std::vector<int64_t> coords;
    if (sz <= coords_per_tensor) {
      coords.resize(sz);
      std::iota(coords.begin(), coords.end(), 0);
    } else {
      std::vector<int64_t> all(sz);
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      coords.assign(all.begin(), all.begin() + coords_per_tensor);
    }
    double sum_diff_sq = 0.0, sum_a_sq = 0.0, sum_n_sq = 0.0;
    for (int64_t c : coords) {
      const double saved = n->value[c];
      n->value[c] = saved + eps;
      const double up = loss_fn();
      n->value[c] = saved - eps;
      const double down = loss_fn();
      n->value[c] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = n->has_grad() ? n->grad[c] : 0.0;
      sum_diff_sq += (analytic - numeric) * (analytic - numeric);
      sum_a_sq += analytic * analytic;
      sum_n_sq += numeric * numeric;
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
        report.worst_index = c;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
    const double group_denom = std::max(
        {std::sqrt(sum_a_sq), std::sqrt(sum_n_sq), 1e-8});
    const double group_rel = std::sqrt(sum_diff_sq) / group_denom;
    if (group_rel > report.max_group_rel_error) {
      report.max_group_rel_error = group_rel;
      report.worst_group = p.name;
    }
  }
  return report;
}

}  // namespace season::tensor
