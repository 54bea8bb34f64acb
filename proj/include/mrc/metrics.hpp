#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mrc/text.hpp"

namespace mrc {

// Lowercase, drop punctuation and the articles a/an/the, collapse
// whitespace. Chinese text is split into characters with punctuation removed.
std::vector<std::string> normalize_answer(std::string_view text, Language lang = Language::kEnglish);

double exact_match(std::string_view prediction, const std::vector<std::string>& references,
                   Language lang = Language::kEnglish);
double token_f1(std::string_view prediction, const std::vector<std::string>& references,
                Language lang = Language::kEnglish);

// LCS F-measure (1 + b^2) P R / (R + b^2 P) on raw tokens, best reference.
double rouge_l(std::string_view prediction, const std::vector<std::string>& references,
               double beta = 1.2, Language lang = Language::kEnglish);
// F-measure from an LCS length; 0 when the LCS is empty.
double rouge_l_score(std::size_t lcs_len, std::size_t prediction_len, std::size_t reference_len,
                     double beta);
double rouge_l_tokens(const std::vector<std::string>& prediction,
                      const std::vector<std::vector<std::string>>& references, double beta);

struct BleuOptions {
  bool smoothing = true;  // add-one on zero 2..4-gram match counts
  Language lang = Language::kEnglish;
};

// Corpus BLEU-4 over raw tokens: clipped n-gram precisions against all
// references, brevity penalty from the closest reference length.
double bleu4(const std::vector<std::string>& predictions,
             const std::vector<std::vector<std::string>>& references, BleuOptions options = {});

struct MetricReport {
  double em = 0.0;
  double f1 = 0.0;
  double rouge_l = 0.0;
  double bleu4 = 0.0;
  std::size_t count = 0;
  std::vector<double> example_em;
  std::vector<double> example_f1;
  std::vector<double> example_rouge_l;

  // Keys em, f1, rouge_l, bleu4, count.
  nlohmann::json to_json() const;
};

struct MetricOptions {
  double rouge_beta = 1.2;
  bool bleu_smoothing = true;
  Language lang = Language::kEnglish;
};

MetricReport evaluate_predictions(const std::vector<std::string>& predictions,
                                  const std::vector<std::vector<std::string>>& references,
                                  MetricOptions options = {});

}  // namespace mrc
