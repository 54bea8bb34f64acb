#include "mrc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "mrc/errors.hpp"

namespace mrc {

using detail::Node;

namespace {

thread_local std::uint64_t g_next_seq = 1;
testing::Fault g_fault = testing::Fault::kNone;
thread_local BranchRecorder* g_recorder = nullptr;

constexpr double kMaskedLogit = -1e30;

Var make_node(Tensor value, std::vector<Var> inputs, detail::BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->owned = std::move(value);
  node->seq = g_next_seq++;
  bool needs = false;
  for (const Var& in : inputs) needs = needs || in.requires_grad();
  node->requires_grad = needs;
  if (needs) {
    node->inputs.reserve(inputs.size());
    for (const Var& in : inputs) node->inputs.push_back(in.shared());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

// Output extent for one broadcast axis.
std::size_t broadcast_extent(std::size_t a, std::size_t b, const char* op, const Tensor& ta,
                             const Tensor& tb) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(ta.shape()) + " with " +
                   shape_str(tb.shape()));
}

// Sums `g` (rows x cols) down to the shape of `target` and accumulates.
void reduce_into(const Tensor& g, Tensor& target) {
  const std::size_t rows = g.rows(), cols = g.cols();
  const std::size_t tr = target.rows(), tc = target.cols();
  if (tr == rows && tc == cols) {
    target += g;
    return;
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      target.at(tr == 1 ? 0 : i, tc == 1 ? 0 : j) += g.at(i, j);
    }
  }
}

template <typename F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_matrix(a, op);
  require_matrix(b, op);
  const std::size_t rows = broadcast_extent(a.rows(), b.rows(), op, a, b);
  const std::size_t cols = broadcast_extent(a.cols(), b.cols(), op, a, b);
  Tensor out({rows, cols});
  const bool ar = a.rows() == 1, ac = a.cols() == 1, br = b.rows() == 1, bc = b.cols() == 1;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out.at(i, j) = f(a.at(ar ? 0 : i, ac ? 0 : j), b.at(br ? 0 : i, bc ? 0 : j));
    }
  }
  return out;
}

// Iteration helper for per-slice operations along an axis of a matrix.
struct SliceLayout {
  std::size_t slices, length, slice_stride, elem_stride;
  std::size_t index(std::size_t s, std::size_t t) const { return s * slice_stride + t * elem_stride; }
};

SliceLayout layout_for(const Tensor& t, int axis, const char* op) {
  require_matrix(t, op);
  if (axis == 1) return {t.rows(), t.cols(), t.cols(), 1};
  if (axis == 0) return {t.cols(), t.rows(), 1, t.cols()};
  throw ContractError(std::string(op) + ": axis must be 0 or 1");
}

void check_mask(const Tensor& t, const Mask& mask, const char* op) {
  if (mask.shape() != t.shape()) {
    throw ShapeError(std::string(op) + ": mask shape " + shape_str(mask.shape()) +
                     " differs from " + shape_str(t.shape()));
  }
}

}  // namespace

// ---- ParamStore ------------------------------------------------------------

Parameter& ParamStore::add(std::string name, std::string group, Tensor init, bool requires_grad) {
  if (by_name_.count(name)) throw ContractError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->group = std::move(group);
  p->value = std::move(init);
  p->requires_grad = requires_grad;
  for (double& v : p->value.data()) v = storage_round(v);
  Parameter& ref = *p;
  by_name_.emplace(ref.name, &ref);
  params_.push_back(std::move(p));
  return ref;
}

Parameter& ParamStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (!p) throw ContractError("unknown parameter: " + name);
  return *p;
}

const Parameter& ParamStore::at(const std::string& name) const {
  const Parameter* p = find(name);
  if (!p) throw ContractError("unknown parameter: " + name);
  return *p;
}

Parameter* ParamStore::find(const std::string& name) noexcept {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParamStore::find(const std::string& name) const noexcept {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Parameter*> ParamStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->requires_grad) out.push_back(p.get());
  }
  return out;
}

std::size_t ParamStore::count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (!trainable_only || p->requires_grad) n += p->value.numel();
  }
  return n;
}

// ---- Var -------------------------------------------------------------------

const Tensor& Var::value() const {
  if (!node_) throw ContractError("use of an undefined Var");
  return node_->value();
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

// ---- leaves ----------------------------------------------------------------

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->owned = std::move(value);
  node->seq = g_next_seq++;
  return Var(std::move(node));
}

Var param(const Parameter& p) {
  auto node = std::make_shared<Node>();
  node->param = &p;
  node->requires_grad = p.requires_grad;
  node->seq = g_next_seq++;
  return Var(std::move(node));
}

// ---- linear algebra --------------------------------------------------------

namespace {
// out (+)= op(a) * op(b) with optional transposes.
void gemm(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& out) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  const std::size_t ac = a.cols(), bc = b.cols();
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = od + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? ad[p * ac + i] : ad[i * ac + p];
      if (av == 0.0) continue;
      if (!tb) {
        const double* brow = bd + p * bc;
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * bd[j * bc + p];
      }
    }
  }
}
}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ for " + shape_str(av.shape()) + " and " +
                     shape_str(bv.shape()));
  }
  Tensor out({av.rows(), bv.cols()});
  gemm(av, false, bv, false, out);
  auto an = a.shared(), bn = b.shared();
  return make_node(std::move(out), {a, b}, [an, bn](const Tensor& g, std::span<Tensor*> grads) {
    if (grads[0]) gemm(g, false, bn->value(), true, *grads[0]);
    if (grads[1]) gemm(an->value(), true, g, false, *grads[1]);
  });
}

Var transpose(const Var& a) {
  const Tensor& av = a.value();
  require_matrix(av, "transpose");
  Tensor out({av.cols(), av.rows()});
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out.at(j, i) = av.at(i, j);
  return make_node(std::move(out), {a}, [](const Tensor& g, std::span<Tensor*> grads) {
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) grads[0]->at(j, i) += g.at(i, j);
  });
}

Var reshape(const Var& a, Shape shape) {
  const Tensor& av = a.value();
  if (shape_numel(shape) != av.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(av.shape()) + " as " + shape_str(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(av.data().begin(), av.data().end()));
  return make_node(std::move(out), {a}, [](const Tensor& g, std::span<Tensor*> grads) {
    auto dst = grads[0]->data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
  });
}

// ---- elementwise -----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  Tensor out = broadcast_apply(a.value(), b.value(), "add", [](double x, double y) { return x + y; });
  return make_node(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor*> grads) {
    if (grads[0]) reduce_into(g, *grads[0]);
    if (grads[1]) reduce_into(g, *grads[1]);
  });
}

Var sub(const Var& a, const Var& b) {
  Tensor out = broadcast_apply(a.value(), b.value(), "sub", [](double x, double y) { return x - y; });
  return make_node(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor*> grads) {
    if (grads[0]) reduce_into(g, *grads[0]);
    if (grads[1]) {
      Tensor neg = g;
      for (double& v : neg.data()) v = -v;
      reduce_into(neg, *grads[1]);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Tensor out = broadcast_apply(a.value(), b.value(), "mul", [](double x, double y) { return x * y; });
  auto an = a.shared(), bn = b.shared();
  return make_node(std::move(out), {a, b}, [an, bn](const Tensor& g, std::span<Tensor*> grads) {
    if (grads[0]) {
      Tensor ga = broadcast_apply(g, bn->value(), "mul", [](double x, double y) { return x * y; });
      reduce_into(ga, *grads[0]);
    }
    if (grads[1]) {
      Tensor gb = broadcast_apply(g, an->value(), "mul", [](double x, double y) { return x * y; });
      reduce_into(gb, *grads[1]);
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  return make_node(std::move(out), {a}, [s](const Tensor& g, std::span<Tensor*> grads) {
    auto dst = grads[0]->data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * g[i];
  });
}

namespace {
// Unary op whose derivative is a function of the output value.
template <typename F, typename D>
Var unary(const Var& a, F f, D dfdy) {
  Tensor out = a.value();
  for (double& v : out.data()) v = f(v);
  Tensor y = out;
  return make_node(std::move(out), {a},
                   [y = std::move(y), dfdy](const Tensor& g, std::span<Tensor*> grads) {
                     auto dst = grads[0]->data();
                     for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i] * dfdy(y[i]);
                   });
}
}  // namespace

Var tanh(const Var& a) {
  const double fault = g_fault == testing::Fault::kTanhBackward ? 1.5 : 1.0;
  return unary(
      a, [](double x) { return std::tanh(x); },
      [fault](double y) { return fault * (1.0 - y * y); });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  if (g_recorder) {
    for (double x : a.value().data()) g_recorder->record(x > 0.0);
  }
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double y) { return y > 0.0 ? 1.0 : 0.0; });
}

// ---- structure -------------------------------------------------------------

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ContractError("concat: axis must be 0 or 1");
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    require_matrix(t, "concat");
    if (axis == 0) {
      if (cols && t.cols() != cols) {
        throw ShapeError("concat: column count mismatch " + shape_str(t.shape()));
      }
      cols = t.cols();
      rows += t.rows();
    } else {
      if (rows && t.rows() != rows) {
        throw ShapeError("concat: row count mismatch " + shape_str(t.shape()));
      }
      rows = t.rows();
      cols += t.cols();
    }
  }
  Tensor out({rows, cols});
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    offsets.push_back(off);
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = 0; j < t.cols(); ++j) {
        if (axis == 0) out.at(off + i, j) = t.at(i, j);
        else out.at(i, off + j) = t.at(i, j);
      }
    off += axis == 0 ? t.rows() : t.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_node(std::move(out), std::move(inputs),
                   [offsets, axis](const Tensor& g, std::span<Tensor*> grads) {
                     for (std::size_t k = 0; k < grads.size(); ++k) {
                       Tensor* dst = grads[k];
                       if (!dst) continue;
                       for (std::size_t i = 0; i < dst->rows(); ++i)
                         for (std::size_t j = 0; j < dst->cols(); ++j) {
                           dst->at(i, j) += axis == 0 ? g.at(offsets[k] + i, j)
                                                      : g.at(i, offsets[k] + j);
                         }
                     }
                   });
}

Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(const Var& a, int axis, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require_matrix(av, "slice");
  const std::size_t extent = axis == 0 ? av.rows() : av.cols();
  if (axis != 0 && axis != 1) throw ContractError("slice: axis must be 0 or 1");
  if (begin >= end || end > extent) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + shape_str(av.shape()));
  }
  const std::size_t rows = axis == 0 ? end - begin : av.rows();
  const std::size_t cols = axis == 1 ? end - begin : av.cols();
  Tensor out({rows, cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out.at(i, j) = axis == 0 ? av.at(begin + i, j) : av.at(i, begin + j);
  return make_node(std::move(out), {a}, [axis, begin](const Tensor& g, std::span<Tensor*> grads) {
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        if (axis == 0) grads[0]->at(begin + i, j) += g.at(i, j);
        else grads[0]->at(i, begin + j) += g.at(i, j);
      }
  });
}

Var gather_rows(const Var& table, std::span<const std::int32_t> indices) {
  const Tensor& tv = table.value();
  require_matrix(tv, "gather_rows");
  if (indices.empty()) throw ShapeError("gather_rows: no indices");
  const std::size_t cols = tv.cols();
  Tensor out({indices.size(), cols});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto r = indices[i];
    if (r < 0 || static_cast<std::size_t>(r) >= tv.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(r) + " outside table " +
                       shape_str(tv.shape()));
    }
    std::copy_n(tv.data().data() + r * cols, cols, out.data().data() + i * cols);
  }
  std::vector<std::int32_t> idx(indices.begin(), indices.end());
  return make_node(std::move(out), {table},
                   [idx = std::move(idx), cols](const Tensor& g, std::span<Tensor*> grads) {
                     for (std::size_t i = 0; i < idx.size(); ++i)
                       for (std::size_t j = 0; j < cols; ++j) grads[0]->at(idx[i], j) += g.at(i, j);
                   });
}

// ---- reductions ------------------------------------------------------------

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_node(Tensor::scalar(s), {a}, [](const Tensor& g, std::span<Tensor*> grads) {
    const double gv = g[0];
    for (double& v : grads[0]->data()) v += gv;
  });
}

Var dot(const Var& a, const Var& b) {
  if (a.value().numel() != b.value().numel()) {
    throw ShapeError("dot: sizes differ for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  double s = 0.0;
  const auto ad = a.value().data(), bd = b.value().data();
  for (std::size_t i = 0; i < ad.size(); ++i) s += ad[i] * bd[i];
  auto an = a.shared(), bn = b.shared();
  return make_node(Tensor::scalar(s), {a, b}, [an, bn](const Tensor& g, std::span<Tensor*> grads) {
    const double gv = g[0];
    if (grads[0]) {
      auto dst = grads[0]->data();
      const auto src = bn->value().data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gv * src[i];
    }
    if (grads[1]) {
      auto dst = grads[1]->data();
      const auto src = an->value().data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gv * src[i];
    }
  });
}

Var pick(const Var& a, std::size_t r, std::size_t c) {
  const Tensor& av = a.value();
  require_matrix(av, "pick");
  if (r >= av.rows() || c >= av.cols()) throw ShapeError("pick: index outside " + shape_str(av.shape()));
  return make_node(Tensor::scalar(av.at(r, c)), {a},
                   [r, c](const Tensor& g, std::span<Tensor*> grads) { grads[0]->at(r, c) += g[0]; });
}

Var segment_max(const Var& a, std::span<const std::size_t> segment_rows) {
  const Tensor& av = a.value();
  require_matrix(av, "segment_max");
  std::size_t total = 0;
  for (std::size_t n : segment_rows) {
    if (n == 0) throw ShapeError("segment_max: empty segment");
    total += n;
  }
  if (total != av.rows() || segment_rows.empty()) {
    throw ShapeError("segment_max: segments do not cover " + shape_str(av.shape()));
  }
  const std::size_t cols = av.cols();
  Tensor out({segment_rows.size(), cols});
  std::vector<std::size_t> argmax(segment_rows.size() * cols);
  std::size_t start = 0;
  for (std::size_t s = 0; s < segment_rows.size(); ++s) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::size_t best = start;
      for (std::size_t i = start + 1; i < start + segment_rows[s]; ++i) {
        if (av.at(i, j) > av.at(best, j)) best = i;
      }
      argmax[s * cols + j] = best;
      if (g_recorder) g_recorder->record(best);
      out.at(s, j) = av.at(best, j);
    }
    start += segment_rows[s];
  }
  return make_node(std::move(out), {a},
                   [argmax = std::move(argmax), cols](const Tensor& g, std::span<Tensor*> grads) {
                     for (std::size_t k = 0; k < argmax.size(); ++k)
                       grads[0]->at(argmax[k], k % cols) += g[k];
                   });
}

Var masked_max_cols(const Var& a, const Mask& mask) {
  const Tensor& av = a.value();
  require_matrix(av, "masked_max_cols");
  check_mask(av, mask, "masked_max_cols");
  Tensor out({av.rows(), 1});
  std::vector<std::size_t> argmax(av.rows());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    bool found = false;
    std::size_t best = 0;
    for (std::size_t j = 0; j < av.cols(); ++j) {
      if (!mask.at(i, j)) continue;
      if (!found || av.at(i, j) > av.at(i, best)) best = j;
      found = true;
    }
    if (!found) throw DegenerateSliceError("masked_max_cols: row " + std::to_string(i) + " has no valid entry");
    argmax[i] = best;
    if (g_recorder) g_recorder->record(best);
    out.at(i, 0) = av.at(i, best);
  }
  return make_node(std::move(out), {a}, [argmax = std::move(argmax)](const Tensor& g, std::span<Tensor*> grads) {
    for (std::size_t i = 0; i < argmax.size(); ++i) grads[0]->at(i, argmax[i]) += g[i];
  });
}

// ---- attention -------------------------------------------------------------

Tensor masked_softmax_values(const Tensor& logits, const Mask& mask, int axis) {
  check_mask(logits, mask, "masked_softmax");
  const SliceLayout L = layout_for(logits, axis, "masked_softmax");
  Tensor out(logits.shape());
  for (std::size_t s = 0; s < L.slices; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t t = 0; t < L.length; ++t) {
      const std::size_t k = L.index(s, t);
      const double x = mask[k] ? logits[k] : logits[k] + kMaskedLogit;
      if (mask[k]) any = true;
      mx = std::max(mx, x);
    }
    if (!any) {
      throw DegenerateSliceError("masked_softmax: slice " + std::to_string(s) +
                                 " has no valid position");
    }
    double z = 0.0;
    for (std::size_t t = 0; t < L.length; ++t) {
      const std::size_t k = L.index(s, t);
      const double x = mask[k] ? logits[k] : logits[k] + kMaskedLogit;
      out[k] = std::exp(x - mx);
      z += out[k];
    }
    for (std::size_t t = 0; t < L.length; ++t) {
      const std::size_t k = L.index(s, t);
      out[k] = mask[k] ? out[k] / z : 0.0;
    }
  }
  return out;
}

Var masked_softmax(const Var& logits, const Mask& mask, int axis) {
  Tensor out = masked_softmax_values(logits.value(), mask, axis);
  const SliceLayout L = layout_for(out, axis, "masked_softmax");
  Tensor y = out;
  return make_node(std::move(out), {logits},
                   [y = std::move(y), L](const Tensor& g, std::span<Tensor*> grads) {
                     Tensor& dst = *grads[0];
                     for (std::size_t s = 0; s < L.slices; ++s) {
                       double inner = 0.0;
                       for (std::size_t t = 0; t < L.length; ++t) {
                         const std::size_t k = L.index(s, t);
                         inner += g[k] * y[k];
                       }
                       for (std::size_t t = 0; t < L.length; ++t) {
                         const std::size_t k = L.index(s, t);
                         dst[k] += y[k] * (g[k] - inner);
                       }
                     }
                   });
}

Var masked_log_softmax(const Var& logits, const Mask& mask, int axis) {
  const Tensor& x = logits.value();
  check_mask(x, mask, "masked_log_softmax");
  const SliceLayout L = layout_for(x, axis, "masked_log_softmax");
  Tensor out(x.shape());
  Tensor probs(x.shape());
  for (std::size_t s = 0; s < L.slices; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t t = 0; t < L.length; ++t) {
      const std::size_t k = L.index(s, t);
      if (!mask[k]) continue;
      any = true;
      mx = std::max(mx, x[k]);
    }
    if (!any) {
      throw DegenerateSliceError("masked_log_softmax: slice " + std::to_string(s) +
                                 " has no valid position");
    }
    double z = 0.0;
    for (std::size_t t = 0; t < L.length; ++t) {
      const std::size_t k = L.index(s, t);
      if (mask[k]) z += std::exp(x[k] - mx);
    }
    const double log_z = std::log(z) + mx;
    for (std::size_t t = 0; t < L.length; ++t) {
      const std::size_t k = L.index(s, t);
      if (!mask[k]) continue;
      out[k] = x[k] - log_z;
      probs[k] = std::exp(out[k]);
    }
  }
  return make_node(std::move(out), {logits},
                   [probs = std::move(probs), mask, L](const Tensor& g, std::span<Tensor*> grads) {
                     Tensor& dst = *grads[0];
                     for (std::size_t s = 0; s < L.slices; ++s) {
                       double total = 0.0;
                       for (std::size_t t = 0; t < L.length; ++t) {
                         const std::size_t k = L.index(s, t);
                         if (mask[k]) total += g[k];
                       }
                       for (std::size_t t = 0; t < L.length; ++t) {
                         const std::size_t k = L.index(s, t);
                         if (mask[k]) dst[k] += g[k] - probs[k] * total;
                       }
                     }
                   });
}

Var additive_scores(const Var& x, const Var& y, const Var& v) {
  const Tensor& xv = x.value();
  const Tensor& yv = y.value();
  const Tensor& vv = v.value();
  require_matrix(xv, "additive_scores");
  require_matrix(yv, "additive_scores");
  const std::size_t n = xv.rows(), m = yv.rows(), a = xv.cols();
  if (yv.cols() != a || vv.numel() != a) {
    throw ShapeError("additive_scores: widths differ for " + shape_str(xv.shape()) + ", " +
                     shape_str(yv.shape()) + ", " + shape_str(vv.shape()));
  }
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a; ++k) s += vv[k] * std::tanh(xv.at(i, k) + yv.at(j, k));
      out.at(i, j) = s;
    }
  auto xn = x.shared(), yn = y.shared(), vn = v.shared();
  return make_node(std::move(out), {x, y, v},
                   [xn, yn, vn, n, m, a](const Tensor& g, std::span<Tensor*> grads) {
                     const Tensor& xv = xn->value();
                     const Tensor& yv = yn->value();
                     const Tensor& vv = vn->value();
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t j = 0; j < m; ++j) {
                         const double gij = g.at(i, j);
                         if (gij == 0.0) continue;
                         for (std::size_t k = 0; k < a; ++k) {
                           const double t = std::tanh(xv.at(i, k) + yv.at(j, k));
                           const double d = gij * vv[k] * (1.0 - t * t);
                           if (grads[0]) grads[0]->at(i, k) += d;
                           if (grads[1]) grads[1]->at(j, k) += d;
                           if (grads[2]) (*grads[2])[k] += gij * t;
                         }
                       }
                   });
}

// ---- backward --------------------------------------------------------------

GradientMap backward(const Var& loss) {
  if (!loss.defined()) throw ContractError("backward: undefined loss");
  if (loss.value().numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got " + shape_str(loss.shape()));
  }
  GradientMap result;
  if (!loss.requires_grad()) return result;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.node()};
  seen.insert(loss.node());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& in : n->inputs) {
      if (in->requires_grad && seen.insert(in.get()).second) stack.push_back(in.get());
    }
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->seq > b->seq; });

  std::unordered_map<Node*, Tensor> grads;
  grads.emplace(loss.node(), Tensor(loss.shape(), 1.0));
  std::vector<Tensor*> in_grads;
  for (Node* n : order) {
    auto it = grads.find(n);
    if (it == grads.end()) continue;
    if (n->param) {
      auto [slot, fresh] = result.try_emplace(n->param->name, it->second);
      if (!fresh) slot->second += it->second;
    } else if (n->backward) {
      in_grads.assign(n->inputs.size(), nullptr);
      for (std::size_t i = 0; i < n->inputs.size(); ++i) {
        Node* in = n->inputs[i].get();
        if (!in->requires_grad) continue;
        auto slot = grads.try_emplace(in, in->value().shape(), 0.0).first;
        in_grads[i] = &slot->second;
      }
      n->backward(it->second, in_grads);
    }
    grads.erase(n);
  }
  return result;
}

BranchRecorder::BranchRecorder() : previous_(g_recorder) { g_recorder = this; }
BranchRecorder::~BranchRecorder() { g_recorder = previous_; }

namespace testing {
void set_fault(Fault f) noexcept { g_fault = f; }
Fault fault() noexcept { return g_fault; }
}  // namespace testing

}  // namespace mrc
