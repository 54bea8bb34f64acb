#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mrc/autodiff.hpp"
#include "mrc/config.hpp"
#include "mrc/cue_miner.hpp"
#include "mrc/data.hpp"
#include "mrc/embedder.hpp"
#include "mrc/interaction.hpp"
#include "mrc/refiner.hpp"
#include "mrc/span.hpp"

namespace mrc {

struct ParamBreakdown {
  std::map<std::string, std::size_t> by_group;  // "embed", "refiner.input", "refiner.0", ...
  std::size_t total = 0;
  std::size_t trainable = 0;
};

// Closed-form parameter count for a config and vocabulary sizes.
ParamBreakdown analytic_param_count(const Config& config, std::size_t vocab_size,
                                    std::size_t char_vocab_size);
// Tally of the tensors actually held by `store`.
ParamBreakdown tally_params(const ParamStore& store);

struct ForwardResult {
  SpanLogits logits;
  Var passage;      // F_p, output of cue mining
  Var interaction;  // G, interaction output of every document concatenated
};

class MrcModel {
 public:
  // Builds every parameter from `config.seed`. Stages switched off by the
  // ablation flags are not instantiated.
  MrcModel(Config config, Vocab vocab, Tensor word_matrix);

  const Config& config() const noexcept { return config_; }
  const Vocab& vocab() const noexcept { return vocab_; }
  ParamStore& params() noexcept { return store_; }
  const ParamStore& params() const noexcept { return store_; }

  ForwardResult forward(const EncodedExample& example, AttentionTrace* trace = nullptr) const;
  // Sum of per-example span losses over examples carrying a gold span.
  Var batch_loss(const EncodedBatch& batch) const;

  BatchLimits batch_limits() const;

 private:
  Config config_;
  Vocab vocab_;
  ParamStore store_;
  EmbedderParams embedder_;
  RefinerParams refiner_;
  InteractionParams interaction_;
  CueParams cues_;
  SpanParams span_;
};

}  // namespace mrc
