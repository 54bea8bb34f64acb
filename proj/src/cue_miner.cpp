#include "mrc/cue_miner.hpp"

#include <algorithm>

#include "mrc/errors.hpp"

namespace mrc {

DocOffsets DocOffsets::from_lengths(std::span<const std::size_t> lengths) {
  DocOffsets o;
  for (std::size_t n : lengths) {
    o.blocks.push_back({o.total, n});
    o.total += n;
  }
  return o;
}

std::pair<std::size_t, std::size_t> DocOffsets::locate(std::size_t global) const {
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    if (global >= blocks[t].start && global < blocks[t].start + blocks[t].length) {
      return {t, global - blocks[t].start};
    }
  }
  throw ContractError("position " + std::to_string(global) + " lies outside every document");
}

std::size_t DocOffsets::global(std::size_t doc, std::size_t local) const {
  if (doc >= blocks.size() || local >= blocks[doc].length) {
    throw ContractError("(doc " + std::to_string(doc) + ", token " + std::to_string(local) +
                        ") is out of range");
  }
  return blocks[doc].start + local;
}

namespace {
SelfAttentionWeights make_self_attention(ParamStore& store, const std::string& prefix,
                                         const std::string& group, const ModelDims& dims, Rng& rng) {
  const std::size_t w = dims.width();
  SelfAttentionWeights s;
  s.left = make_linear(store, prefix + ".left", group, w, dims.attn_dim, false, rng);
  s.right = make_linear(store, prefix + ".right", group, w, dims.attn_dim, false, rng);
  s.score = &store.add(prefix + ".score", group, uniform_tensor({1, dims.attn_dim}, 0.1, rng));
  s.gru = make_bigru(store, prefix + ".gru", group, 2 * w, dims.hidden, rng);
  return s;
}

std::size_t self_attention_param_count(const ModelDims& dims) {
  const std::size_t w = dims.width();
  return 2 * w * dims.attn_dim + dims.attn_dim + bigru_param_count(2 * w, dims.hidden);
}
}  // namespace

CueParams make_cue_miner(ParamStore& store, const ModelDims& dims, std::size_t M,
                         CueOptions options, Rng& rng) {
  CueParams p;
  for (std::size_t r = 0; r < M; ++r) {
    const std::string group = "cue." + std::to_string(r);
    CueRound round;
    if (options.intra) round.intra = make_self_attention(store, group + ".intra", group, dims, rng);
    if (options.inter) round.inter = make_self_attention(store, group + ".inter", group, dims, rng);
    p.rounds.push_back(std::move(round));
  }
  return p;
}

std::size_t cue_miner_param_count(const ModelDims& dims, std::size_t M, CueOptions options) {
  const std::size_t stages = (options.intra ? 1 : 0) + (options.inter ? 1 : 0);
  return M * stages * self_attention_param_count(dims);
}

Var self_attend(const Var& x, std::span<const std::uint8_t> valid, const SelfAttentionWeights& w,
                AttentionTrace* trace, const std::string& name) {
  if (valid.size() != x.rows()) throw ShapeError("self_attend: mask length differs from row count");
  if (std::none_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; })) {
    return constant(Tensor({x.rows(), w.gru.output_width()}));
  }
  return bigru(concat({x, self_attention_context(x, valid, w, trace, name)}, 1), valid, w.gru);
}

Var self_attention_context(const Var& x, std::span<const std::uint8_t> valid,
                           const SelfAttentionWeights& w, AttentionTrace* trace,
                           const std::string& name) {
  if (valid.size() != x.rows()) throw ShapeError("self_attention_context: mask length differs from row count");
  Var scores = additive_scores(w.left(x), w.right(x), param(*w.score));
  const std::vector<std::uint8_t> all_rows(x.rows(), 1);
  Var alpha = traced_softmax(scores, Mask::outer(all_rows, valid), 1, trace, name);
  return matmul(alpha, x);
}

Var intra_doc_attend(const Var& doc, const SelfAttentionWeights& w,
                     std::span<const std::uint8_t> valid, AttentionTrace* trace) {
  return self_attend(doc, valid, w, trace, "cue.intra");
}

Var inter_doc_attend(const Var& passage, const SelfAttentionWeights& w,
                     std::span<const std::uint8_t> valid, AttentionTrace* trace) {
  return self_attend(passage, valid, w, trace, "cue.inter");
}

std::pair<Var, DocOffsets> concat_documents(std::span<const Var> docs) {
  if (docs.empty()) throw ContractError("concat_documents: need at least one document");
  std::vector<std::size_t> lengths;
  for (const Var& d : docs) lengths.push_back(d.rows());
  return {docs.size() == 1 ? docs[0] : concat(docs, 0), DocOffsets::from_lengths(lengths)};
}

std::vector<Var> split_documents(const Var& passage, const DocOffsets& offsets) {
  if (offsets.total != passage.rows()) {
    throw ShapeError("split_documents: offsets cover " + std::to_string(offsets.total) + " rows, passage has " +
                     std::to_string(passage.rows()));
  }
  if (offsets.blocks.size() == 1) return {passage};
  std::vector<Var> out;
  for (const auto& b : offsets.blocks) out.push_back(slice(passage, 0, b.start, b.start + b.length));
  return out;
}

Var cue_mine(std::span<const Var> interaction, const CueParams& params, std::size_t M,
             const std::vector<std::vector<std::uint8_t>>& doc_valid, CueOptions options,
             AttentionTrace* trace) {
  if (M > params.rounds.size()) {
    throw ContractError("cue_mine: M=" + std::to_string(M) + " exceeds the " +
                        std::to_string(params.rounds.size()) + " configured rounds");
  }
  if (doc_valid.size() != interaction.size()) throw ShapeError("cue_mine: mask count differs from documents");
  std::vector<Var> docs(interaction.begin(), interaction.end());
  auto [passage, offsets] = concat_documents(docs);
  std::vector<std::uint8_t> all_valid;
  for (const auto& v : doc_valid) all_valid.insert(all_valid.end(), v.begin(), v.end());

  for (std::size_t r = 0; r < M; ++r) {
    const CueRound& round = params.rounds[r];
    if (options.intra && round.intra) {
      for (std::size_t t = 0; t < docs.size(); ++t) {
        docs[t] = intra_doc_attend(docs[t], *round.intra, doc_valid[t], trace);
      }
      passage = concat_documents(docs).first;
    }
    if (options.inter && round.inter) {
      passage = inter_doc_attend(passage, *round.inter, all_valid, trace);
      docs = split_documents(passage, offsets);
    }
  }
  return passage;
}

}  // namespace mrc
