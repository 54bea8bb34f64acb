#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mrc/autodiff.hpp"
#include "mrc/config.hpp"
#include "mrc/nn.hpp"

namespace mrc {

// A question sequence and its k document sequences, all of one width.
struct SequenceSet {
  Var question;            // m x width
  std::vector<Var> docs;   // n_t x width each
};

// Row validity for a question and its documents.
struct ExampleMasks {
  std::vector<std::uint8_t> question;
  std::vector<std::vector<std::uint8_t>> docs;

  std::vector<std::uint8_t> docs_concat() const;
};

struct RefinerIteration {
  Parameter* bilinear = nullptr;  // w x w
  Parameter* u_left = nullptr;    // 1 x w, scores document words
  Parameter* u_right = nullptr;   // 1 x w, scores question words
  Linear fuse_doc;                // 3w -> w with bias
  Linear fuse_question;           // 3w -> w with bias
  BiGruWeights doc_gru;           // w -> 2 * hidden
  BiGruWeights question_gru;
};

struct RefinerParams {
  Linear input;  // d -> w, shared; the whole refiner when L = 0
  std::vector<RefinerIteration> iterations;
};

RefinerParams make_refiner(ParamStore& store, const ModelDims& dims, std::size_t L, Rng& rng);
std::size_t refiner_param_count(const ModelDims& dims, std::size_t L);

// A[i][j] = hD_i W hQ_j + <u_left, hD_i> + <u_right, hQ_j>  (n_t x m).
Var cross_attention_matrix(const Var& doc, const Var& question, const Var& bilinear,
                           const Var& u_left, const Var& u_right);

struct CrossAttended {
  std::vector<Var> docs;  // h~D_t = softmax over question positions of A_t rows, applied to hQ
  Var question;           // h~Q_j = softmax over all documents' positions of column j
};

// Document rows attend over valid question positions; question rows attend
// over the valid positions of every document concatenated.
CrossAttended cross_attend(std::span<const Var> matrices, const Var& question,
                           std::span<const Var> docs, const ExampleMasks& masks,
                           AttentionTrace* trace = nullptr);

// f = [h ; h - h~ ; h * h~], relu(f W_f + b_f), then a BiGRU over the rows.
Var fuse_bigru(const Var& h, const Var& attended, const Linear& fuse, const BiGruWeights& gru,
               std::span<const std::uint8_t> valid);

// Applies the input map and then `L` refinement iterations with their own
// parameters. L = 0 returns the input map's image of the coarse vectors.
SequenceSet refine(const SequenceSet& coarse, const RefinerParams& params, std::size_t L,
                   const ExampleMasks& masks, AttentionTrace* trace = nullptr);

}  // namespace mrc
