#include <cmath>
#include <random>

#include "doctest.h"

#include "mrc/errors.hpp"
#include "mrc/gradcheck.hpp"
#include "mrc/span.hpp"

using namespace mrc;

namespace {
DocOffsets offsets_of(std::vector<std::size_t> lens) { return DocOffsets::from_lengths(lens); }

SpanLogits flat_logits(std::size_t n, std::vector<std::uint8_t> valid) {
  return {constant(Tensor({1, n})), constant(Tensor({1, n})), std::move(valid)};
}
}  // namespace

TEST_CASE("best span by product") {
  const std::vector<double> ps = {0.1, 0.6, 0.3}, pe = {0.2, 0.1, 0.7};
  SpanPrediction p = infer_span(ps, pe, offsets_of({3}), 3);
  CHECK(p.doc == 0);
  CHECK(p.start == 1);
  CHECK(p.end == 2);
  CHECK(p.score == doctest::Approx(0.42));
}

TEST_CASE("uniform scores pick the first single-token span") {
  const std::vector<double> u(4, 0.25);
  SpanPrediction p = infer_span(u, u, offsets_of({2, 2}), 4);
  CHECK(p.doc == 0);
  CHECK(p.start == 0);
  CHECK(p.end == 0);
}

TEST_CASE("spans never cross documents and respect the length cap") {
  // best unconstrained pair would be start 1 (doc 0) to end 2 (doc 1)
  const std::vector<double> ps = {0.0, 0.9, 0.1, 0.0}, pe = {0.0, 0.1, 0.9, 0.0};
  SpanPrediction p = infer_span(ps, pe, offsets_of({2, 2}), 5);
  CHECK(p.score == doctest::Approx(0.09));
  CHECK(((p.doc == 0 && p.start == 1 && p.end == 1) || (p.doc == 1 && p.start == 0 && p.end == 0)));
  CHECK(p.doc == 0);

  const std::vector<double> a = {0.9, 0.05, 0.05}, b = {0.05, 0.05, 0.9};
  SpanPrediction capped = infer_span(a, b, offsets_of({3}), 2);
  CHECK(capped.end - capped.start + 1 <= 2);
}

TEST_CASE("masked positions are never chosen") {
  const std::vector<double> ps = {0.9, 0.1}, pe = {0.9, 0.1};
  const std::vector<std::uint8_t> v = {0, 1};
  SpanPrediction p = infer_span(ps, pe, offsets_of({2}), 2, v);
  CHECK(p.start == 1);
  const std::vector<std::uint8_t> none = {0, 0};
  CHECK_THROWS_AS(infer_span(ps, pe, offsets_of({2}), 2, none), InferenceError);
}

TEST_CASE("inference matches brute force") {
  std::mt19937 gen(12345);
  std::uniform_int_distribution<int> eighths(0, 8), len(0, 5), docs(1, 3), cap(1, 6), coin(0, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> lens;
    const int k = docs(gen);
    for (int t = 0; t < k; ++t) lens.push_back(static_cast<std::size_t>(len(gen)));
    DocOffsets o = offsets_of(lens);
    std::vector<double> ps(o.total), pe(o.total);
    std::vector<std::uint8_t> valid(o.total);
    for (std::size_t i = 0; i < o.total; ++i) {
      ps[i] = eighths(gen) / 8.0;
      pe[i] = eighths(gen) / 8.0;
      valid[i] = coin(gen) != 0;
    }
    const auto max_len = static_cast<std::size_t>(cap(gen));

    bool found = false;
    std::size_t bx = 0, by = 0;
    double best = 0;
    for (const auto& blk : o.blocks) {
      for (std::size_t x = blk.start; x < blk.start + blk.length; ++x) {
        for (std::size_t y = x; y < blk.start + blk.length && y - x < max_len; ++y) {
          if (!valid[x] || !valid[y]) continue;
          const double s = ps[x] * pe[y];
          if (!found || s > best || (s == best && (x < bx || (x == bx && y < by)))) {
            found = true;
            best = s;
            bx = x;
            by = y;
          }
        }
      }
    }
    CAPTURE(trial);
    if (!found) {
      CHECK_THROWS_AS(infer_span(ps, pe, o, max_len, valid), InferenceError);
      continue;
    }
    SpanPrediction p = infer_span(ps, pe, o, max_len, valid);
    CHECK(o.global(p.doc, p.start) == bx);
    CHECK(o.global(p.doc, p.end) == by);
    CHECK(p.score == best);
  }
}

TEST_CASE("ensemble averages before inference") {
  const std::vector<std::vector<double>> s = {{0.9, 0.1}, {0.1, 0.9}}, e = {{0.5, 0.5}, {0.5, 0.5}};
  SpanPrediction a = ensemble_infer(s, e, offsets_of({2}), 2);
  CHECK(a.start == 0);
  CHECK(a.score == doctest::Approx(0.25));
  const std::vector<std::vector<double>> one = {{0.1, 0.9}};
  const std::vector<std::vector<double>> one_e = {{0.5, 0.5}};
  CHECK(ensemble_infer(one, one_e, offsets_of({2}), 2).start == 1);
}

TEST_CASE("uniform logits give loss 2 ln 4") {
  SpanLogits l = flat_logits(5, {1, 1, 0, 1, 1});
  CHECK(span_loss(l, {0, 3}).value().item() == doctest::Approx(2 * std::log(4.0)).epsilon(1e-15));
  CHECK(l.start_probs()[2] == 0.0);
  CHECK(l.start_probs()[0] == doctest::Approx(0.25));
}

TEST_CASE("masked gold is a data error naming the example") {
  SpanLogits l = flat_logits(3, {1, 0, 1});
  try {
    span_loss(l, {1, 2}, "ex-7");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("ex-7") != std::string::npos);
  }
  CHECK_THROWS_AS(span_loss(l, {0, 3}), DataError);
}

TEST_CASE("batch loss is the sum of example losses") {
  Rng rng(3);
  std::vector<SpanLogits> ls = {
      {constant(uniform_tensor({1, 4}, 2, rng)), constant(uniform_tensor({1, 4}, 2, rng)), {1, 1, 1, 0}},
      {constant(uniform_tensor({1, 3}, 2, rng)), constant(uniform_tensor({1, 3}, 2, rng)), {1, 1, 1}}};
  std::vector<GoldSpan> gold = {{0, 2}, {1, 1}};
  std::vector<std::string> ids = {"a", "b"};
  const double total = batch_span_loss(ls, gold, ids).value().item();
  const double parts = span_loss(ls[0], gold[0]).value().item() + span_loss(ls[1], gold[1]).value().item();
  CHECK(total == doctest::Approx(parts).epsilon(1e-15));
}

TEST_CASE("pointer head shapes and gradients") {
  PrecisionGuard g(Precision::kFloat64);
  ParamStore s;
  Rng rng(4);
  ModelDims d;
  d.hidden = 2;
  d.attn_dim = 3;
  SpanParams p = make_span_predictor(s, d, rng);
  CHECK(s.count() == span_predictor_param_count(d));
  CHECK(span_predictor_param_count(d) == 2 * (2 * 4 * 3 + 3));
  Var fp = constant(uniform_tensor({5, 4}, 1, rng)), gi = constant(uniform_tensor({5, 4}, 1, rng));
  CHECK_THROWS_AS(span_logits(fp, constant(Tensor({4, 4})), p, {1, 1, 1, 1, 1}), ShapeError);
  std::vector<std::uint8_t> v = {1, 1, 0, 1, 1};
  SpanLogits l = span_logits(fp, gi, p, v);
  CHECK(l.start.shape() == Shape{1, 5});
  std::vector<Parameter*> ps = s.trainable();
  auto loss = [&] { return span_loss(span_logits(fp, gi, p, v), {1, 3}); };
  CHECK(grad_check(loss, ps).max_rel_error < 1e-6);
}

TEST_CASE("span to text") {
  const std::vector<std::vector<std::string>> docs = {{"a", "b"}, {"mount", "kilimanjaro", "rises"}};
  SpanPrediction p;
  p.doc = 1;
  p.start = 0;
  p.end = 1;
  CHECK(map_span_to_text(p, docs, Language::kEnglish) == "mount kilimanjaro");
  p.end = 3;
  CHECK_THROWS_AS(map_span_to_text(p, docs, Language::kEnglish), ContractError);
}
