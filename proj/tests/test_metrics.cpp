#include <cmath>

#include "doctest.h"

#include "mrc/errors.hpp"
#include "mrc/metrics.hpp"

using namespace mrc;
using Strs = std::vector<std::string>;

TEST_CASE("answer normalization") {
  CHECK(normalize_answer("The  Big, DOG!") == Strs{"big", "dog"});
  CHECK(normalize_answer("an apple a day") == Strs{"apple", "day"});
  CHECK(normalize_answer("北京，大学。", Language::kChinese) == Strs{"北", "京", "大", "学"});
}

TEST_CASE("exact match") {
  CHECK(exact_match("The Rum.", {"rum"}) == 1.0);
  CHECK(exact_match("rum", {"gin"}) == 0.0);
  CHECK(exact_match("rum", {"gin", "RUM"}) == 1.0);
  CHECK(exact_match("北京。", {"北京"}, Language::kChinese) == 1.0);
  CHECK_THROWS_AS(exact_match("x", {}), ContractError);
}

TEST_CASE("token F1") {
  CHECK(token_f1("cat", {"cat sat"}) == doctest::Approx(2.0 / 3));
  CHECK(token_f1("a cat sat", {"cat sat down"}) == doctest::Approx(0.8));
  CHECK(token_f1("dog", {"cat"}) == 0.0);
  CHECK(token_f1("cat cat", {"cat"}) == doctest::Approx(2.0 / 3));
  CHECK(token_f1("the", {"a"}) == 1.0);  // both normalize to nothing
  CHECK(token_f1("x", {"the"}) == 0.0);
}

TEST_CASE("ROUGE-L") {
  CHECK(rouge_l("cat sat", {"cat sat mat"}, 1.0) == doctest::Approx(0.8));
  // P = 1, R = 2/3, beta 1.2: 2.44 * 2/3 / (2/3 + 1.44)
  CHECK(rouge_l("cat sat", {"cat sat mat"}) == doctest::Approx(2.44 * (2.0 / 3) / (2.0 / 3 + 1.44)));
  CHECK(rouge_l("a b c", {"c b a"}, 1.0) == doctest::Approx(1.0 / 3));
  CHECK(rouge_l("q", {"z"}) == 0.0);
  CHECK(rouge_l_score(0, 3, 3, 1.2) == 0.0);
}

TEST_CASE("BLEU-4") {
  BleuOptions raw;
  raw.smoothing = false;
  // precisions 4/5, 3/4, 2/3, 1/2 multiply to 1/5, lengths equal
  CHECK(bleu4({"a b c d x"}, {{"a b c d y"}}, raw) == doctest::Approx(std::pow(0.2, 0.25)).epsilon(1e-14));
  CHECK(bleu4({"a b c d"}, {{"a b c d e f"}}, raw) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(bleu4({"a x b y"}, {{"a b c d"}}, raw) == 0.0);
  CHECK(bleu4({"a x b y"}, {{"a b c d"}}) == doctest::Approx(std::pow(1.0 / 48, 0.25)).epsilon(1e-14));
  CHECK(bleu4({"q r s t"}, {{"a b c d"}}) == 0.0);
  // the closest reference length wins, shorter on ties
  CHECK(bleu4({"a b c d"}, {{"a b c d e f", "a b c"}}, raw) == doctest::Approx(1.0));
  CHECK(bleu4({"a b c d e"}, {{"a b c d e f", "a b c d"}}, raw) == doctest::Approx(1.0));
}

TEST_CASE("corpus BLEU pools counts") {
  const double b = bleu4({"a b c d", "e f g h"}, {{"a b c d"}, {"e f g h"}});
  CHECK(b == doctest::Approx(1.0));
}

TEST_CASE("reference order and duplicates do not matter") {
  const std::string pred = "the big red dog barked";
  const Strs refs = {"a red dog barked loudly", "big dogs bark", "the big red fox"};
  const Strs shuffled = {refs[2], refs[0], refs[1], refs[0]};
  CHECK(exact_match(pred, refs) == exact_match(pred, shuffled));
  CHECK(token_f1(pred, refs) == token_f1(pred, shuffled));
  CHECK(rouge_l(pred, refs) == rouge_l(pred, shuffled));
  CHECK(bleu4({pred}, {refs}) == bleu4({pred}, {shuffled}));
}

TEST_CASE("exact match implies perfect F1 and ROUGE-L on clean text") {
  const std::vector<std::pair<std::string, Strs>> cases = {
      {"big dog", {"big dog", "cat"}}, {"x y z", {"q", "x y z"}}, {"one", {"one"}}};
  for (const auto& [p, r] : cases) {
    REQUIRE(exact_match(p, r) == 1.0);
    CHECK(token_f1(p, r) == 1.0);
    CHECK(rouge_l(p, r) == doctest::Approx(1.0));
  }
  CHECK(token_f1("The Rum.", {"rum"}) == 1.0);
}

TEST_CASE("metric report") {
  MetricReport r = evaluate_predictions({"cat", "dog"}, {{"cat"}, {"cow"}});
  CHECK(r.count == 2);
  CHECK(r.em == 0.5);
  CHECK(r.f1 == 0.5);
  CHECK(r.example_em == std::vector<double>{1.0, 0.0});
  auto j = r.to_json();
  CHECK(j.at("em").get<double>() == 0.5);
  CHECK(j.contains("bleu4"));
  CHECK(evaluate_predictions({}, {}).count == 0);
}
