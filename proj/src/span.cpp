#include "mrc/span.hpp"

#include <deque>

#include "mrc/errors.hpp"

namespace mrc {

namespace {
PointerHead make_head(ParamStore& store, const std::string& prefix, const ModelDims& dims, Rng& rng) {
  const std::size_t w = dims.width();
  PointerHead h;
  h.w_passage = &store.add(prefix + ".w_passage", "span", glorot(w, dims.attn_dim, rng));
  h.w_interaction = &store.add(prefix + ".w_interaction", "span", glorot(w, dims.attn_dim, rng));
  h.beta = &store.add(prefix + ".beta", "span", uniform_tensor({1, dims.attn_dim}, 0.1, rng));
  return h;
}
}  // namespace

SpanParams make_span_predictor(ParamStore& store, const ModelDims& dims, Rng& rng) {
  SpanParams p;
  p.start = make_head(store, "span.start", dims, rng);
  p.end = make_head(store, "span.end", dims, rng);
  return p;
}

std::size_t span_predictor_param_count(const ModelDims& dims) {
  return 2 * (2 * dims.width() * dims.attn_dim + dims.attn_dim);
}

std::vector<double> SpanLogits::start_probs() const {
  return masked_softmax_values(start.value(), Mask::row(valid), 1).storage();
}

std::vector<double> SpanLogits::end_probs() const {
  return masked_softmax_values(end.value(), Mask::row(valid), 1).storage();
}

Var pointer_logits(const Var& passage, const Var& interaction, const PointerHead& head) {
  Var hidden = tanh(add(matmul(passage, param(*head.w_passage)),
                        matmul(interaction, param(*head.w_interaction))));
  return transpose(matmul(hidden, transpose(param(*head.beta))));
}

SpanLogits span_logits(const Var& passage, const Var& interaction, const SpanParams& params,
                       std::vector<std::uint8_t> valid) {
  if (passage.rows() != interaction.rows()) {
    throw ShapeError("span_logits: passage has " + std::to_string(passage.rows()) +
                     " tokens but the interaction sequence has " + std::to_string(interaction.rows()));
  }
  if (valid.size() != passage.rows()) throw ShapeError("span_logits: mask length differs from token count");
  return {pointer_logits(passage, interaction, params.start), pointer_logits(passage, interaction, params.end),
          std::move(valid)};
}

Var span_loss(const SpanLogits& logits, GoldSpan gold, const std::string& example_id) {
  const std::size_t n = logits.valid.size();
  for (std::size_t g : {gold.start, gold.end}) {
    if (g >= n || logits.valid[g] == 0) {
      throw DataError("example '" + example_id + "': gold index " + std::to_string(g) +
                      " is masked or out of range");
    }
  }
  const Mask mask = Mask::row(logits.valid);
  Var ls = masked_log_softmax(logits.start, mask, 1);
  Var le = masked_log_softmax(logits.end, mask, 1);
  return scale(add(pick(ls, 0, gold.start), pick(le, 0, gold.end)), -1.0);
}

Var batch_span_loss(std::span<const SpanLogits> logits, std::span<const GoldSpan> gold,
                    std::span<const std::string> ids) {
  if (logits.size() != gold.size() || logits.empty()) {
    throw ContractError("batch_span_loss: need one gold span per example and at least one example");
  }
  Var total;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Var l = span_loss(logits[i], gold[i], i < ids.size() ? ids[i] : std::to_string(i));
    total = total.defined() ? add(total, l) : l;
  }
  return total;
}

SpanPrediction infer_span(std::span<const double> p_start, std::span<const double> p_end,
                          const DocOffsets& offsets, std::size_t max_len,
                          std::span<const std::uint8_t> valid) {
  if (p_start.size() != p_end.size() || p_start.size() != offsets.total ||
      (!valid.empty() && valid.size() != offsets.total)) {
    throw ShapeError("infer_span: probability vectors, mask and offsets disagree in length");
  }
  if (max_len == 0) throw ContractError("infer_span: max_len must be positive");
  auto ok = [&](std::size_t i) { return valid.empty() || valid[i] != 0; };

  bool found = false;
  std::size_t best_x = 0, best_y = 0;
  double best = 0.0;
  for (const auto& block : offsets.blocks) {
    std::deque<std::size_t> window;  // valid starts, p_start non-increasing front to back
    const std::size_t stop = block.start + block.length;
    for (std::size_t y = block.start; y < stop; ++y) {
      if (ok(y)) {
        while (!window.empty() && p_start[window.back()] < p_start[y]) window.pop_back();
        window.push_back(y);
      }
      const std::size_t lo = y + 1 >= block.start + max_len ? y + 1 - max_len : block.start;
      while (!window.empty() && window.front() < lo) window.pop_front();
      if (!ok(y) || window.empty()) continue;

      const double score = p_start[window.front()] * p_end[y];
      if (found && score < best) continue;
      // Rounding can make a smaller p_start reach the same product, so the
      // leftmost start attaining `score` is found by a scan of the window.
      std::size_t x = window.front();
      for (std::size_t i = lo; i < x; ++i) {
        if (ok(i) && p_start[i] * p_end[y] == score) {
          x = i;
          break;
        }
      }
      const bool better = !found || score > best || x < best_x ||
                          (x == best_x && y - x < best_y - best_x);
      if (better) {
        found = true;
        best = score;
        best_x = x;
        best_y = y;
      }
    }
  }
  if (!found) throw InferenceError("no admissible answer span: every position is masked");
  auto [doc, local] = offsets.locate(best_x);
  SpanPrediction p;
  p.doc = doc;
  p.start = local;
  p.end = local + (best_y - best_x);
  p.score = best;
  return p;
}

SpanPrediction ensemble_infer(std::span<const std::vector<double>> starts,
                              std::span<const std::vector<double>> ends, const DocOffsets& offsets,
                              std::size_t max_len, std::span<const std::uint8_t> valid) {
  if (starts.empty() || starts.size() != ends.size()) {
    throw ShapeError("ensemble_infer: need matching, non-empty start and end lists");
  }
  const std::size_t n = starts.front().size();
  std::vector<double> ps(n, 0.0), pe(n, 0.0);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    if (starts[k].size() != n || ends[k].size() != n) {
      throw ShapeError("ensemble_infer: model " + std::to_string(k) + " has a different length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] += starts[k][i];
      pe[i] += ends[k][i];
    }
  }
  const double m = static_cast<double>(starts.size());
  for (std::size_t i = 0; i < n; ++i) {
    ps[i] /= m;
    pe[i] /= m;
  }
  return infer_span(ps, pe, offsets, max_len, valid);
}

std::string map_span_to_text(const SpanPrediction& span,
                             std::span<const std::vector<std::string>> documents, Language lang) {
  if (span.doc >= documents.size() || span.start > span.end ||
      span.end >= documents[span.doc].size()) {
    throw ContractError("map_span_to_text: span (" + std::to_string(span.doc) + ", " +
                        std::to_string(span.start) + ", " + std::to_string(span.end) +
                        ") is outside its document");
  }
  return detokenize(documents[span.doc], span.start, span.end, lang);
}

}  // namespace mrc
