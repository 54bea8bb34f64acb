#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrc/autodiff.hpp"
#include "mrc/config.hpp"
#include "mrc/cue_miner.hpp"
#include "mrc/nn.hpp"
#include "mrc/text.hpp"

namespace mrc {

// logit_i = <beta, tanh(F_p,i W_p + G_i W_g)> where F_p is the cue-mined
// passage and G the concatenated interaction output. One head each for start
// and end.
struct PointerHead {
  Parameter* w_passage = nullptr;     // w x attn_dim
  Parameter* w_interaction = nullptr; // w x attn_dim
  Parameter* beta = nullptr;          // 1 x attn_dim
};

struct SpanParams {
  PointerHead start;
  PointerHead end;
};

SpanParams make_span_predictor(ParamStore& store, const ModelDims& dims, Rng& rng);
std::size_t span_predictor_param_count(const ModelDims& dims);

struct SpanLogits {
  Var start;  // 1 x L_total
  Var end;    // 1 x L_total
  std::vector<std::uint8_t> valid;

  std::vector<double> start_probs() const;
  std::vector<double> end_probs() const;
};

Var pointer_logits(const Var& passage, const Var& interaction, const PointerHead& head);
SpanLogits span_logits(const Var& passage, const Var& interaction, const SpanParams& params,
                       std::vector<std::uint8_t> valid);

struct GoldSpan {
  std::size_t start = 0;  // global index into the concatenated passage
  std::size_t end = 0;
};

// -[log p^s(start) + log p^e(end)] for one example. Throws DataError naming
// `example_id` when a gold index is masked or out of range.
Var span_loss(const SpanLogits& logits, GoldSpan gold, const std::string& example_id = "");
// Sum of per-example losses.
Var batch_span_loss(std::span<const SpanLogits> logits, std::span<const GoldSpan> gold,
                    std::span<const std::string> ids);

struct SpanPrediction {
  std::size_t doc = 0;
  std::size_t start = 0;  // local, inclusive
  std::size_t end = 0;    // local, inclusive
  double score = 0.0;
  std::string text;
};

// argmax p^s(x) p^e(y) subject to x <= y, same document, y - x + 1 <= max_len
// and both positions valid. Ties: smallest x, then shortest span. Throws
// InferenceError when no admissible pair exists.
SpanPrediction infer_span(std::span<const double> p_start, std::span<const double> p_end,
                          const DocOffsets& offsets, std::size_t max_len,
                          std::span<const std::uint8_t> valid = {});

// Averages the probability vectors of every model, then infers.
SpanPrediction ensemble_infer(std::span<const std::vector<double>> starts,
                              std::span<const std::vector<double>> ends, const DocOffsets& offsets,
                              std::size_t max_len, std::span<const std::uint8_t> valid = {});

std::string map_span_to_text(const SpanPrediction& span,
                             std::span<const std::vector<std::string>> documents, Language lang);

}  // namespace mrc
