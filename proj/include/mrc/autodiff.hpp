#pragma once

// Reverse-mode automatic differentiation over rank-2 tensors.
//
// A forward pass builds a graph of Node objects owned through Var handles.
// backward() walks the graph in reverse creation order and returns the
// gradient of a scalar with respect to every trainable Parameter reached.
// The graph lives exactly as long as the Var handles that reference it.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrc/tensor.hpp"

namespace mrc {

// A named trainable (or frozen) tensor. `group` collects parameters of one
// module iteration for reporting, e.g. "refiner.0" or "cue.1".
struct Parameter {
  std::string name;
  std::string group;
  Tensor value;
  bool requires_grad = true;
};

// Owns parameters with stable addresses, in registration order.
class ParamStore {
 public:
  Parameter& add(std::string name, std::string group, Tensor init, bool requires_grad = true);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Parameter* find(const std::string& name) noexcept;
  const Parameter* find(const std::string& name) const noexcept;

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  std::vector<Parameter*> trainable();
  std::size_t count(bool trainable_only = false) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

using GradientMap = std::map<std::string, Tensor>;

namespace detail {
struct Node;
}

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  bool defined() const noexcept { return node_ != nullptr; }
  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared() const noexcept { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {
// in_grads[i] is null when input i does not need a gradient; otherwise the
// backward rule accumulates (+=) into it.
using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor*> in_grads)>;

struct Node {
  Tensor owned;
  const Parameter* param = nullptr;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
  bool requires_grad = false;
  std::uint64_t seq = 0;

  const Tensor& value() const { return param ? param->value : owned; }
};
}  // namespace detail

// ---- leaves -------------------------------------------------------------

// Wraps a constant; never receives a gradient.
Var constant(Tensor value);
// Leaf reading the parameter's current value by reference.
Var param(const Parameter& p);

// ---- linear algebra -----------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var reshape(const Var& a, Shape shape);

// ---- elementwise with 2-D broadcasting (an extent of 1 broadcasts) ------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);

// ---- structure ----------------------------------------------------------

Var concat(std::span<const Var> parts, int axis);
Var concat(std::initializer_list<Var> parts, int axis);
Var slice(const Var& a, int axis, std::size_t begin, std::size_t end);
// Rows of `table` selected by `indices` (embedding lookup).
Var gather_rows(const Var& table, std::span<const std::int32_t> indices);

// ---- reductions ---------------------------------------------------------

Var sum(const Var& a);
Var dot(const Var& a, const Var& b);
Var pick(const Var& a, std::size_t r, std::size_t c);
// Column-wise max over consecutive row segments: output row s is the max of
// the rows belonging to segment s. Ties resolve to the earliest row.
Var segment_max(const Var& a, std::span<const std::size_t> segment_rows);
// Max along axis 1 over valid entries -> rows x 1.
Var masked_max_cols(const Var& a, const Mask& mask);

// ---- attention ----------------------------------------------------------

// Softmax along `axis` (0 or 1) restricted to valid positions. Masked
// outputs are exactly 0. Throws DegenerateSliceError for an all-masked slice.
Var masked_softmax(const Var& logits, const Mask& mask, int axis);
// log-softmax along `axis` over valid positions; masked outputs are 0 and
// carry no gradient.
Var masked_log_softmax(const Var& logits, const Mask& mask, int axis);
// S[i][j] = sum_k v[k] * tanh(x[i][k] + y[j][k]) for x: n x a, y: m x a,
// v: 1 x a. The pairwise tanh tensor is never materialised in the graph.
Var additive_scores(const Var& x, const Var& y, const Var& v);

// Plain-tensor masked softmax (no graph).
Tensor masked_softmax_values(const Tensor& logits, const Mask& mask, int axis);

// ---- differentiation ----------------------------------------------------

// Gradient of a 1x1 `loss` with respect to every trainable parameter the
// graph reaches. The graph is left intact, so calling again yields the same
// values.
GradientMap backward(const Var& loss);

// Fingerprint of the branches taken by piecewise-linear ops (relu signs and
// max/argmax choices) in forward passes run while the recorder is alive.
// Finite differences are only meaningful when both probes share a
// fingerprint.
class BranchRecorder {
 public:
  BranchRecorder();
  ~BranchRecorder();
  BranchRecorder(const BranchRecorder&) = delete;
  BranchRecorder& operator=(const BranchRecorder&) = delete;

  std::uint64_t signature() const noexcept { return signature_; }
  void reset() noexcept { signature_ = kSeed; }
  void record(std::uint64_t v) noexcept { signature_ = (signature_ ^ v) * 0x100000001b3ULL; }

 private:
  static constexpr std::uint64_t kSeed = 0xcbf29ce484222325ULL;
  std::uint64_t signature_ = kSeed;
  BranchRecorder* previous_;
};

namespace testing {
enum class Fault { kNone, kTanhBackward };
// Corrupts one backward rule; used to prove the gradient checker bites.
void set_fault(Fault f) noexcept;
Fault fault() noexcept;
}  // namespace testing

}  // namespace mrc
