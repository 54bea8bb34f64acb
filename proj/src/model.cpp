#include "mrc/model.hpp"

#include "mrc/errors.hpp"

namespace mrc {

namespace {
CueOptions cue_options(const Config& c) { return {c.use_intra(), c.use_inter()}; }
}  // namespace

ParamBreakdown analytic_param_count(const Config& config, std::size_t vocab_size,
                                    std::size_t char_vocab_size) {
  const ModelDims& dims = config.dims;
  ParamBreakdown b;
  b.by_group["embed"] = embedder_param_count(dims, vocab_size, char_vocab_size);
  b.by_group["refiner.input"] = refiner_param_count(dims, 0);
  const std::size_t per_iteration = refiner_param_count(dims, 1) - refiner_param_count(dims, 0);
  for (std::size_t l = 0; l < config.effective_L(); ++l) {
    b.by_group["refiner." + std::to_string(l)] = per_iteration;
  }
  b.by_group["interaction"] = interaction_param_count(dims, config.interaction);
  const CueOptions opts = cue_options(config);
  if (opts.intra || opts.inter) {
    for (std::size_t r = 0; r < config.effective_M(); ++r) {
      b.by_group["cue." + std::to_string(r)] = cue_miner_param_count(dims, 1, opts);
    }
  }
  b.by_group["span"] = span_predictor_param_count(dims);
  for (const auto& [g, n] : b.by_group) b.total += n;
  b.trainable = b.total - vocab_size * dims.word_dim;
  return b;
}

ParamBreakdown tally_params(const ParamStore& store) {
  ParamBreakdown b;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Parameter& p = store[i];
    b.by_group[p.group] += p.value.numel();
    b.total += p.value.numel();
    if (p.requires_grad) b.trainable += p.value.numel();
  }
  return b;
}

MrcModel::MrcModel(Config config, Vocab vocab, Tensor word_matrix)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  if (word_matrix.rows() != vocab_.size() || word_matrix.cols() != config_.dims.word_dim) {
    throw ConfigError("word matrix is " + shape_str(word_matrix.shape()) + " but the vocabulary has " +
                      std::to_string(vocab_.size()) + " tokens of dimension " +
                      std::to_string(config_.dims.word_dim));
  }
  Rng rng(config_.seed);
  const ModelDims& dims = config_.dims;
  embedder_ = make_embedder(store_, dims, std::move(word_matrix), vocab_.char_size(), rng);
  refiner_ = make_refiner(store_, dims, config_.effective_L(), rng);
  interaction_ = make_interaction(store_, dims, config_.interaction, rng);
  cues_ = make_cue_miner(store_, dims, config_.effective_M(), cue_options(config_), rng);
  span_ = make_span_predictor(store_, dims, rng);
}

BatchLimits MrcModel::batch_limits() const {
  BatchLimits l;
  l.max_word_len = config_.dims.max_word_len;
  return l;
}

ForwardResult MrcModel::forward(const EncodedExample& x, AttentionTrace* trace) const {
  SequenceSet coarse;
  coarse.question = coarse_embed(x.question, x.question_chars, x.question_valid, embedder_);
  for (std::size_t t = 0; t < x.docs.size(); ++t) {
    coarse.docs.push_back(coarse_embed(x.docs[t], x.doc_chars[t], x.docs_valid[t], embedder_));
  }
  const ExampleMasks masks{x.question_valid, x.docs_valid};
  SequenceSet refined = refine(coarse, refiner_, config_.effective_L(), masks, trace);

  std::vector<Var> interacted;
  for (std::size_t t = 0; t < refined.docs.size(); ++t) {
    interacted.push_back(interact(refined.docs[t], refined.question, interaction_, x.docs_valid[t],
                                  x.question_valid, trace));
  }
  Var passage = cue_mine(interacted, cues_, config_.effective_M(), x.docs_valid, cue_options(config_), trace);
  Var interaction = concat_documents(interacted).first;
  SpanLogits logits = span_logits(passage, interaction, span_, x.passage_valid());
  return {std::move(logits), passage, interaction};
}

Var MrcModel::batch_loss(const EncodedBatch& batch) const {
  Var total;
  for (const EncodedExample& x : batch.examples) {
    if (!x.gold) continue;
    Var l = span_loss(forward(x).logits, *x.gold, x.id);
    total = total.defined() ? add(total, l) : l;
  }
  if (!total.defined()) throw ContractError("batch_loss: no example in the batch has a gold span");
  return total;
}

}  // namespace mrc
