#include "mrc/refiner.hpp"

#include "mrc/errors.hpp"

namespace mrc {

std::vector<std::uint8_t> ExampleMasks::docs_concat() const {
  std::vector<std::uint8_t> out;
  for (const auto& d : docs) out.insert(out.end(), d.begin(), d.end());
  return out;
}

RefinerParams make_refiner(ParamStore& store, const ModelDims& dims, std::size_t L, Rng& rng) {
  const std::size_t w = dims.width();
  RefinerParams p;
  p.input = make_linear(store, "refiner.input", "refiner.input", dims.word_dim, w, false, rng);
  for (std::size_t l = 0; l < L; ++l) {
    const std::string prefix = "refiner." + std::to_string(l);
    RefinerIteration it;
    it.bilinear = &store.add(prefix + ".bilinear", prefix, glorot(w, w, rng));
    it.u_left = &store.add(prefix + ".u_left", prefix, uniform_tensor({1, w}, 0.1, rng));
    it.u_right = &store.add(prefix + ".u_right", prefix, uniform_tensor({1, w}, 0.1, rng));
    it.fuse_doc = make_linear(store, prefix + ".fuse_doc", prefix, 3 * w, w, true, rng);
    it.fuse_question = make_linear(store, prefix + ".fuse_question", prefix, 3 * w, w, true, rng);
    it.doc_gru = make_bigru(store, prefix + ".doc_gru", prefix, w, dims.hidden, rng);
    it.question_gru = make_bigru(store, prefix + ".question_gru", prefix, w, dims.hidden, rng);
    p.iterations.push_back(it);
  }
  return p;
}

std::size_t refiner_param_count(const ModelDims& dims, std::size_t L) {
  const std::size_t w = dims.width();
  const std::size_t per_iteration = w * w + 2 * w + 2 * linear_param_count(3 * w, w, true) +
                                    2 * bigru_param_count(w, dims.hidden);
  return linear_param_count(dims.word_dim, w, false) + L * per_iteration;
}

Var cross_attention_matrix(const Var& doc, const Var& question, const Var& bilinear,
                           const Var& u_left, const Var& u_right) {
  if (doc.cols() != question.cols() || bilinear.rows() != doc.cols() ||
      bilinear.cols() != question.cols()) {
    throw ShapeError("cross_attention_matrix: widths differ (" + shape_str(doc.shape()) + ", " +
                     shape_str(question.shape()) + ", W " + shape_str(bilinear.shape()) + ")");
  }
  Var bil = matmul(matmul(doc, bilinear), transpose(question));  // n x m
  Var left = matmul(doc, transpose(u_left));                     // n x 1
  Var right = transpose(matmul(question, transpose(u_right)));   // 1 x m
  return add(add(bil, left), right);
}

CrossAttended cross_attend(std::span<const Var> matrices, const Var& question,
                           std::span<const Var> docs, const ExampleMasks& masks,
                           AttentionTrace* trace) {
  if (matrices.size() != docs.size() || masks.docs.size() != docs.size()) {
    throw ShapeError("cross_attend: document count mismatch");
  }
  CrossAttended out;
  const std::size_t m = question.rows();
  for (std::size_t t = 0; t < docs.size(); ++t) {
    const std::vector<std::uint8_t> rows(docs[t].rows(), 1);
    Mask mask = Mask::outer(rows, masks.question);
    Var alpha = traced_softmax(matrices[t], mask, 1, trace, "refiner.doc" + std::to_string(t));
    out.docs.push_back(matmul(alpha, question));
  }
  Var all = concat(matrices, 0);       // N x m
  Var all_docs = concat(docs, 0);      // N x w
  const std::vector<std::uint8_t> cols(m, 1);
  Mask mask = Mask::outer(masks.docs_concat(), cols);
  Var beta = traced_softmax(all, mask, 0, trace, "refiner.question");
  out.question = matmul(transpose(beta), all_docs);
  return out;
}

Var fuse_bigru(const Var& h, const Var& attended, const Linear& fuse, const BiGruWeights& gru,
               std::span<const std::uint8_t> valid) {
  if (h.shape() != attended.shape()) {
    throw ShapeError("fuse_bigru: " + shape_str(h.shape()) + " vs " + shape_str(attended.shape()));
  }
  Var f = concat({h, sub(h, attended), mul(h, attended)}, 1);
  return bigru(relu(fuse(f)), valid, gru);
}

SequenceSet refine(const SequenceSet& coarse, const RefinerParams& params, std::size_t L,
                   const ExampleMasks& masks, AttentionTrace* trace) {
  if (L > params.iterations.size()) {
    throw ContractError("refine: L=" + std::to_string(L) + " exceeds the " +
                        std::to_string(params.iterations.size()) + " configured iterations");
  }
  SequenceSet cur;
  cur.question = params.input(coarse.question);
  for (const Var& d : coarse.docs) cur.docs.push_back(params.input(d));

  for (std::size_t l = 0; l < L; ++l) {
    const RefinerIteration& it = params.iterations[l];
    Var W = param(*it.bilinear);
    Var ul = param(*it.u_left);
    Var ur = param(*it.u_right);
    std::vector<Var> matrices;
    for (const Var& d : cur.docs) matrices.push_back(cross_attention_matrix(d, cur.question, W, ul, ur));
    CrossAttended att = cross_attend(matrices, cur.question, cur.docs, masks, trace);

    SequenceSet next;
    next.question = fuse_bigru(cur.question, att.question, it.fuse_question, it.question_gru,
                               masks.question);
    for (std::size_t t = 0; t < cur.docs.size(); ++t) {
      next.docs.push_back(fuse_bigru(cur.docs[t], att.docs[t], it.fuse_doc, it.doc_gru, masks.docs[t]));
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace mrc
