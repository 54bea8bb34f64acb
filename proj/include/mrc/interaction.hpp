#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "mrc/autodiff.hpp"
#include "mrc/config.hpp"
#include "mrc/nn.hpp"

namespace mrc {

// Both sequences are aligned with the document rows (n_t x w).
struct InteractionFeatures {
  Var doc_to_question;
  Var question_to_doc;
};

// Question/document interaction behind a uniform contract, so alternative
// attention schemes can be dropped in. Only BiDAF ships.
class InteractionStrategy {
 public:
  virtual ~InteractionStrategy() = default;
  virtual std::string_view name() const noexcept = 0;
  virtual InteractionFeatures attend(const Var& doc, const Var& question,
                                     std::span<const std::uint8_t> doc_valid,
                                     std::span<const std::uint8_t> question_valid,
                                     AttentionTrace* trace) const = 0;
};

// Trilinear similarity S_ij = <w_s, [d_i ; q_j ; d_i * q_j]> with w_s given
// as 1 x 3w. Document-to-question rows attend over valid question words;
// the question-to-document vector softmaxes max_j S_ij over valid document
// words and is tiled across all n_t rows.
InteractionFeatures bidaf_attention(const Var& doc, const Var& question, const Var& similarity,
                                    std::span<const std::uint8_t> doc_valid,
                                    std::span<const std::uint8_t> question_valid,
                                    AttentionTrace* trace = nullptr);

class BidafStrategy final : public InteractionStrategy {
 public:
  BidafStrategy(ParamStore& store, const ModelDims& dims, Rng& rng);
  std::string_view name() const noexcept override { return "bidaf"; }
  InteractionFeatures attend(const Var& doc, const Var& question,
                             std::span<const std::uint8_t> doc_valid,
                             std::span<const std::uint8_t> question_valid,
                             AttentionTrace* trace) const override;

 private:
  Parameter* similarity_;
};

std::unique_ptr<InteractionStrategy> make_interaction_strategy(std::string_view name,
                                                               ParamStore& store,
                                                               const ModelDims& dims, Rng& rng);
std::size_t interaction_strategy_param_count(std::string_view name, const ModelDims& dims);

struct InteractionParams {
  std::unique_ptr<InteractionStrategy> strategy;
  BiGruWeights fusion;  // 4w -> 2 * hidden
};

InteractionParams make_interaction(ParamStore& store, const ModelDims& dims,
                                   std::string_view strategy, Rng& rng);
std::size_t interaction_param_count(const ModelDims& dims, std::string_view strategy);

// BiGRU over [d ; d2q ; d * q2d ; d * d2q].
Var fuse_interaction(const Var& doc, const Var& doc_to_question, const Var& question_to_doc,
                     const BiGruWeights& gru, std::span<const std::uint8_t> doc_valid);

// g^{D_t} for one document; a document with no valid word yields zeros.
Var interact(const Var& doc, const Var& question, const InteractionParams& params,
             std::span<const std::uint8_t> doc_valid, std::span<const std::uint8_t> question_valid,
             AttentionTrace* trace = nullptr);

}  // namespace mrc
