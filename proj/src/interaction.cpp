#include "mrc/interaction.hpp"

#include <algorithm>
#include <vector>

#include "mrc/errors.hpp"

namespace mrc {

InteractionFeatures bidaf_attention(const Var& doc, const Var& question, const Var& similarity,
                                    std::span<const std::uint8_t> doc_valid,
                                    std::span<const std::uint8_t> question_valid,
                                    AttentionTrace* trace) {
  const std::size_t w = doc.cols();
  if (question.cols() != w || similarity.value().numel() != 3 * w) {
    throw ShapeError("bidaf_attention: widths differ (" + shape_str(doc.shape()) + ", " +
                     shape_str(question.shape()) + ", w_s " + shape_str(similarity.shape()) + ")");
  }
  const std::size_t n = doc.rows();
  Var w_doc = slice(similarity, 1, 0, w);
  Var w_question = slice(similarity, 1, w, 2 * w);
  Var w_product = slice(similarity, 1, 2 * w, 3 * w);

  Var s_doc = matmul(doc, transpose(w_doc));                         // n x 1
  Var s_question = transpose(matmul(question, transpose(w_question)));  // 1 x m
  Var s_product = matmul(mul(doc, w_product), transpose(question));  // n x m
  Var S = add(add(s_product, s_doc), s_question);

  const std::vector<std::uint8_t> all_rows(n, 1);
  Mask q_mask = Mask::outer(all_rows, question_valid);
  Var a = traced_softmax(S, q_mask, 1, trace, "interaction.d2q");
  Var d2q = matmul(a, question);

  Var row_max = masked_max_cols(S, q_mask);  // n x 1
  Mask d_mask = Mask::row(doc_valid);
  Var b = traced_softmax(transpose(row_max), d_mask, 1, trace, "interaction.q2d");
  Var attended = matmul(b, doc);  // 1 x w
  Var q2d = mul(constant(Tensor({n, 1}, 1.0)), attended);
  return {d2q, q2d};
}

BidafStrategy::BidafStrategy(ParamStore& store, const ModelDims& dims, Rng& rng)
    : similarity_(&store.add("interaction.similarity", "interaction",
                             uniform_tensor({1, 3 * dims.width()}, 0.1, rng))) {}

InteractionFeatures BidafStrategy::attend(const Var& doc, const Var& question,
                                          std::span<const std::uint8_t> doc_valid,
                                          std::span<const std::uint8_t> question_valid,
                                          AttentionTrace* trace) const {
  return bidaf_attention(doc, question, param(*similarity_), doc_valid, question_valid, trace);
}

std::unique_ptr<InteractionStrategy> make_interaction_strategy(std::string_view name,
                                                               ParamStore& store,
                                                               const ModelDims& dims, Rng& rng) {
  if (name == "bidaf") return std::make_unique<BidafStrategy>(store, dims, rng);
  throw ConfigError("unknown interaction strategy '" + std::string(name) + "'");
}

std::size_t interaction_strategy_param_count(std::string_view name, const ModelDims& dims) {
  if (name == "bidaf") return 3 * dims.width();
  throw ConfigError("unknown interaction strategy '" + std::string(name) + "'");
}

InteractionParams make_interaction(ParamStore& store, const ModelDims& dims,
                                   std::string_view strategy, Rng& rng) {
  InteractionParams p;
  p.strategy = make_interaction_strategy(strategy, store, dims, rng);
  p.fusion = make_bigru(store, "interaction.fusion", "interaction", 4 * dims.width(), dims.hidden, rng);
  return p;
}

std::size_t interaction_param_count(const ModelDims& dims, std::string_view strategy) {
  return interaction_strategy_param_count(strategy, dims) +
         bigru_param_count(4 * dims.width(), dims.hidden);
}

Var fuse_interaction(const Var& doc, const Var& doc_to_question, const Var& question_to_doc,
                     const BiGruWeights& gru, std::span<const std::uint8_t> doc_valid) {
  if (doc.shape() != doc_to_question.shape() || doc.shape() != question_to_doc.shape()) {
    throw ShapeError("fuse_interaction: inputs must all be " + shape_str(doc.shape()));
  }
  Var x = concat({doc, doc_to_question, mul(doc, question_to_doc), mul(doc, doc_to_question)}, 1);
  return bigru(x, doc_valid, gru);
}

Var interact(const Var& doc, const Var& question, const InteractionParams& params,
             std::span<const std::uint8_t> doc_valid, std::span<const std::uint8_t> question_valid,
             AttentionTrace* trace) {
  if (std::none_of(doc_valid.begin(), doc_valid.end(), [](std::uint8_t v) { return v != 0; })) {
    return constant(Tensor({doc.rows(), params.fusion.output_width()}));
  }
  InteractionFeatures f = params.strategy->attend(doc, question, doc_valid, question_valid, trace);
  return fuse_interaction(doc, f.doc_to_question, f.question_to_doc, params.fusion, doc_valid);
}

}  // namespace mrc
