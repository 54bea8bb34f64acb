#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mrc/autodiff.hpp"

namespace mrc {

// Seeded generator with platform-independent real/integer draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 engine_;
};

Tensor uniform_tensor(Shape shape, double bound, Rng& rng);
// Glorot-uniform rows x cols matrix.
Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng);

// y = x W (+ b). W is in x out, b is 1 x out.
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Var operator()(const Var& x) const;
};

Linear make_linear(ParamStore& store, const std::string& name, const std::string& group,
                   std::size_t in, std::size_t out, bool with_bias, Rng& rng);
std::size_t linear_param_count(std::size_t in, std::size_t out, bool with_bias);

// Gate layout along the 3h axis is [reset | update | candidate]:
//   r = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
//   z = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
//   n = tanh(x W_in + b_in + r * (h W_hn + b_hn))
//   h' = (1 - z) * n + z * h
struct GruWeights {
  Parameter* w_ih = nullptr;  // in x 3h
  Parameter* w_hh = nullptr;  // h x 3h
  Parameter* b_ih = nullptr;  // 1 x 3h
  Parameter* b_hh = nullptr;  // 1 x 3h
  std::size_t hidden = 0;
};

struct BiGruWeights {
  GruWeights forward;
  GruWeights backward;
  std::size_t output_width() const { return forward.hidden + backward.hidden; }
};

GruWeights make_gru(ParamStore& store, const std::string& prefix, const std::string& group,
                    std::size_t in, std::size_t hidden, Rng& rng);
BiGruWeights make_bigru(ParamStore& store, const std::string& prefix, const std::string& group,
                        std::size_t in, std::size_t hidden, Rng& rng);
std::size_t gru_param_count(std::size_t in, std::size_t hidden);
std::size_t bigru_param_count(std::size_t in, std::size_t hidden);

// One recurrence step. `x_proj` is the 1 x 3h input projection x W_ih + b_ih.
Var gru_cell(const Var& x_proj, const Var& h_prev, const Var& w_hh, const Var& b_hh,
             std::size_t hidden);

// Runs a GRU over the rows of `seq` (n x in). Rows with valid[i] == 0 are
// skipped: the state passes through unchanged and the output row is zero.
Var run_gru(const Var& seq, std::span<const std::uint8_t> valid, const GruWeights& w,
            bool reverse);
// Concatenation [forward | backward] per row, n x 2h.
Var bigru(const Var& seq, std::span<const std::uint8_t> valid, const BiGruWeights& w);

// Column vector (n x 1) of 0/1 validity, handy for zeroing padded rows.
Tensor row_mask_column(std::span<const std::uint8_t> valid);

// Optional sink for attention distributions produced during a forward pass.
struct AttentionTrace {
  struct Entry {
    std::string name;
    Tensor weights;
    Mask mask;
    int axis = 1;
  };
  std::vector<Entry> entries;

  void record(std::string name, const Var& weights, const Mask& mask, int axis) {
    entries.push_back({std::move(name), weights.value(), mask, axis});
  }
};

// masked_softmax that also records into `trace` when one is given.
Var traced_softmax(const Var& logits, const Mask& mask, int axis, AttentionTrace* trace,
                   const std::string& name);

}  // namespace mrc
