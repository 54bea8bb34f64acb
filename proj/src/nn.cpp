#include "mrc/nn.hpp"

#include <cmath>
#include <vector>

#include "mrc/errors.hpp"

namespace mrc {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  return uniform_tensor({rows, cols}, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

Var Linear::operator()(const Var& x) const {
  Var y = matmul(x, param(*weight));
  return bias ? add(y, param(*bias)) : y;
}

Linear make_linear(ParamStore& store, const std::string& name, const std::string& group,
                   std::size_t in, std::size_t out, bool with_bias, Rng& rng) {
  Linear l;
  l.weight = &store.add(name + ".w", group, glorot(in, out, rng));
  if (with_bias) l.bias = &store.add(name + ".b", group, Tensor({1, out}));
  return l;
}

std::size_t linear_param_count(std::size_t in, std::size_t out, bool with_bias) {
  return in * out + (with_bias ? out : 0);
}

GruWeights make_gru(ParamStore& store, const std::string& prefix, const std::string& group,
                    std::size_t in, std::size_t hidden, Rng& rng) {
  GruWeights w;
  w.hidden = hidden;
  w.w_ih = &store.add(prefix + ".w_ih", group, glorot(in, 3 * hidden, rng));
  w.w_hh = &store.add(prefix + ".w_hh", group, glorot(hidden, 3 * hidden, rng));
  w.b_ih = &store.add(prefix + ".b_ih", group, Tensor({1, 3 * hidden}));
  w.b_hh = &store.add(prefix + ".b_hh", group, Tensor({1, 3 * hidden}));
  return w;
}

BiGruWeights make_bigru(ParamStore& store, const std::string& prefix, const std::string& group,
                        std::size_t in, std::size_t hidden, Rng& rng) {
  BiGruWeights w;
  w.forward = make_gru(store, prefix + ".fw", group, in, hidden, rng);
  w.backward = make_gru(store, prefix + ".bw", group, in, hidden, rng);
  return w;
}

std::size_t gru_param_count(std::size_t in, std::size_t hidden) {
  return 3 * hidden * in + 3 * hidden * hidden + 6 * hidden;
}

std::size_t bigru_param_count(std::size_t in, std::size_t hidden) {
  return 2 * gru_param_count(in, hidden);
}

Var gru_cell(const Var& x_proj, const Var& h_prev, const Var& w_hh, const Var& b_hh,
             std::size_t hidden) {
  const std::size_t h = hidden;
  Var hh = add(matmul(h_prev, w_hh), b_hh);
  Var r = sigmoid(add(slice(x_proj, 1, 0, h), slice(hh, 1, 0, h)));
  Var z = sigmoid(add(slice(x_proj, 1, h, 2 * h), slice(hh, 1, h, 2 * h)));
  Var n = tanh(add(slice(x_proj, 1, 2 * h, 3 * h), mul(r, slice(hh, 1, 2 * h, 3 * h))));
  // (1 - z) * n + z * h_prev == n + z * (h_prev - n)
  return add(n, mul(z, sub(h_prev, n)));
}

Var run_gru(const Var& seq, std::span<const std::uint8_t> valid, const GruWeights& w,
            bool reverse) {
  const std::size_t n = seq.rows();
  if (valid.size() != n) {
    throw ShapeError("run_gru: mask length " + std::to_string(valid.size()) + " for " +
                     std::to_string(n) + " rows");
  }
  const std::size_t h = w.hidden;
  Var proj = add(matmul(seq, param(*w.w_ih)), param(*w.b_ih));
  Var w_hh = param(*w.w_hh);
  Var b_hh = param(*w.b_hh);
  Var state = constant(Tensor({1, h}));
  Var zero_row = constant(Tensor({1, h}));
  std::vector<Var> outputs(n, zero_row);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = reverse ? n - 1 - step : step;
    if (!valid[i]) continue;
    state = gru_cell(slice(proj, 0, i, i + 1), state, w_hh, b_hh, h);
    outputs[i] = state;
  }
  return concat(outputs, 0);
}

Var bigru(const Var& seq, std::span<const std::uint8_t> valid, const BiGruWeights& w) {
  return concat({run_gru(seq, valid, w.forward, false), run_gru(seq, valid, w.backward, true)}, 1);
}

Tensor row_mask_column(std::span<const std::uint8_t> valid) {
  Tensor t({valid.size(), 1});
  for (std::size_t i = 0; i < valid.size(); ++i) t[i] = valid[i] ? 1.0 : 0.0;
  return t;
}

Var traced_softmax(const Var& logits, const Mask& mask, int axis, AttentionTrace* trace,
                   const std::string& name) {
  Var w = masked_softmax(logits, mask, axis);
  if (trace) trace->record(name, w, mask, axis);
  return w;
}

}  // namespace mrc
