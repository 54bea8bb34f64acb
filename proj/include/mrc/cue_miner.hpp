#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mrc/autodiff.hpp"
#include "mrc/config.hpp"
#include "mrc/nn.hpp"

namespace mrc {

// Placement of each document inside a concatenated sequence. Blocks are
// sorted, contiguous and non-overlapping; `total` is the concatenated length.
struct DocOffsets {
  struct Block {
    std::size_t start = 0;
    std::size_t length = 0;
    friend bool operator==(const Block&, const Block&) = default;
  };
  std::vector<Block> blocks;
  std::size_t total = 0;

  // Blocks laid out back to back with the given lengths.
  static DocOffsets from_lengths(std::span<const std::size_t> lengths);

  // Global index -> (document, local index). Throws ContractError when out of range.
  std::pair<std::size_t, std::size_t> locate(std::size_t global) const;
  std::size_t global(std::size_t doc, std::size_t local) const;
  std::size_t doc_count() const noexcept { return blocks.size(); }
};

// s_i^j = <v, tanh(x_i W + x_j V)>, alpha_i = softmax_j over valid j,
// c_i = sum_j alpha_i^j x_j, then a BiGRU over [x_i ; c_i].
struct SelfAttentionWeights {
  Linear left;             // w -> attn_dim, no bias
  Linear right;            // w -> attn_dim, no bias
  Parameter* score = nullptr;  // 1 x attn_dim
  BiGruWeights gru;        // 2w -> 2 * hidden
};

struct CueRound {
  std::optional<SelfAttentionWeights> intra;
  std::optional<SelfAttentionWeights> inter;
};

struct CueOptions {
  bool intra = true;
  bool inter = true;
};

struct CueParams {
  std::vector<CueRound> rounds;
};

CueParams make_cue_miner(ParamStore& store, const ModelDims& dims, std::size_t M,
                         CueOptions options, Rng& rng);
std::size_t cue_miner_param_count(const ModelDims& dims, std::size_t M, CueOptions options);

// Attention sums c_i = sum_j alpha_i^j x_j over valid j (n x w).
Var self_attention_context(const Var& x, std::span<const std::uint8_t> valid,
                           const SelfAttentionWeights& w, AttentionTrace* trace = nullptr,
                           const std::string& name = "self");

// Shared kernel of intra- and inter-document attention. Self-position is
// included; rows with valid[i] == 0 come out zero. A sequence with no valid
// row is returned as zeros.
Var self_attend(const Var& x, std::span<const std::uint8_t> valid, const SelfAttentionWeights& w,
                AttentionTrace* trace = nullptr, const std::string& name = "self");

Var intra_doc_attend(const Var& doc, const SelfAttentionWeights& w,
                     std::span<const std::uint8_t> valid, AttentionTrace* trace = nullptr);
Var inter_doc_attend(const Var& passage, const SelfAttentionWeights& w,
                     std::span<const std::uint8_t> valid, AttentionTrace* trace = nullptr);

// Concatenates documents in input order.
std::pair<Var, DocOffsets> concat_documents(std::span<const Var> docs);
// Inverse of concat_documents.
std::vector<Var> split_documents(const Var& passage, const DocOffsets& offsets);

// M rounds of (intra per document -> concat -> inter -> re-split). Disabled
// stages are skipped; M = 0 returns concat(G).
Var cue_mine(std::span<const Var> interaction, const CueParams& params, std::size_t M,
             const std::vector<std::vector<std::uint8_t>>& doc_valid, CueOptions options,
             AttentionTrace* trace = nullptr);

}  // namespace mrc
