#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "season/common.hpp"

namespace season::tensor {

// One value in the reverse-mode graph. Intermediate nodes are owned by the
// Tape that recorded them; parameters are long-lived nodes owned by the
// model and merely referenced from tapes. Rank is at most 2; scalars are
// stored as shape {1}.
struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first gradient contribution
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void()> backward;  // empty for leaves

  int64_t size() const { return static_cast<int64_t>(value.size()); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool has_grad() const { return !grad.empty(); }
  // Zero-filled gradient buffer, allocated on demand.
  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(std::vector<int> shape, bool requires_grad,
                  double fill = 0.0);

class Tape;

// Cheap handle pairing a node with the tape it lives on.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, NodePtr node) : tape_(tape), node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rows() const { return node_->rows(); }
  int cols() const { return node_->cols(); }
  int64_t size() const { return node_->size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  double value_at(int64_t i) const { return node_->value[i]; }
  double value_at(int r, int c) const {
    return node_->value[static_cast<int64_t>(r) * cols() + c];
  }

  // Scalar extraction; throws unless the tensor holds exactly one element.
  double item() const;

  const NodePtr& node() const { return node_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  NodePtr node_;
};

// Records operations in execution order and replays their backward rules in
// reverse. Every input of a recorded node precedes it on the tape (external
// leaves count as preceding everything), so one reverse sweep visits each
// node after all of its consumers. A tape is single-threaded; independent
// tapes may run concurrently against shared read-only parameter nodes.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  // Fresh leaf holding a copy of data.
  Tensor leaf(std::vector<int> shape, std::span<const double> data,
              bool requires_grad = false);
  Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  Tensor full(std::vector<int> shape, double fill, bool requires_grad = false);
  Tensor scalar(double v);

  // Wraps an external long-lived node (model parameter) without copying.
  Tensor wrap(NodePtr external);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
  // requires_grad node reachable from it, parameters included. Repeated use
  // of a tensor sums its contributions; gradients from earlier backward
  // calls (e.g. over a batch) also accumulate.
  void backward(const Tensor& loss);

  Tensor record(NodePtr node);
  int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }

 private:
  std::vector<NodePtr> nodes_;
  bool grad_enabled_;
};

// --- forward ops -----------------------------------------------------------
// All ops validate shapes and throw ShapeMismatch with both shapes in the
// message. Results are recorded on the tape of their first operand.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
// m (rows x cols) + v (cols), broadcast over rows.
Tensor add_rowvec(const Tensor& m, const Tensor& v);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// Row-wise softmax(x / temperature) with max subtraction; temperature > 0.
Tensor softmax_rows(const Tensor& a, double temperature);
// log(max(x, floor)); gradient is zero where the clamp engages.
Tensor log_clamped(const Tensor& a, double floor = 1e-12);
Tensor gelu(const Tensor& a);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps = 1e-5);
// out[r,:] = src[idx[r],:]; idx[r] == -1 emits a zero row (used for padding).
// Doubles as embedding lookup when src is an embedding table.
Tensor take_rows(const Tensor& src, std::vector<int> idx);
// out[i] = src.flat[idx[i]]; gradient scatter-adds.
Tensor take_elements(const Tensor& src, std::vector<int64_t> idx);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, int start, int count);
// out = a with mask==1 positions replaced by fill; their gradient is zero.
// The mask is shared, not copied: callers reuse one mask across heads.
Tensor masked_fill(const Tensor& a,
                   std::shared_ptr<const std::vector<uint8_t>> mask,
                   double fill);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Inverted-scale dropout; keep mask drawn from rng. p == 0 is the identity.
Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng);

// --- gradient checking ------------------------------------------------------

struct NamedParam {
  std::string name;
  NodePtr node;
};

struct FiniteDiffReport {
  // Norm-relative error per parameter group: ||a - n|| / max(||a||, ||n||,
  // 1e-8) over the sampled coordinates, maximized over groups. This is the
  // robust measure: central differences carry O(eps^2) truncation error per
  // coordinate, which dominates the per-coordinate ratio wherever the true
  // gradient happens to be tiny.
  double max_group_rel_error = 0.0;
  std::string worst_group;
  // Per-coordinate diagnostics: max |a - n| / max(|a|, |n|, 1e-8).
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central-difference check of analytic gradients. The caller runs the
// forward+backward pass first so that each param node's grad holds the
// analytic gradient; loss_fn must re-evaluate the loss from current
// parameter values (and must be deterministic). Checks all coordinates of
// tensors with at most coords_per_tensor entries, otherwise a random
// subsample of coords_per_tensor of them.
FiniteDiffReport finite_diff_check(const std::function<double()>& loss_fn,
                                   std::span<const NamedParam> params,
                                   double eps, int coords_per_tensor,
                                   uint64_t seed);

}  // namespace season::tensor
