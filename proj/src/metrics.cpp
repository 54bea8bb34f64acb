#include "mrc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "mrc/errors.hpp"

namespace mrc {

namespace {
const std::set<std::string>& cjk_punctuation() {
  static const std::set<std::string> p = {"。", "，", "！", "？", "、", "；", "：", "“", "”",
                                          "‘", "’", "（", "）", "《", "》", "【", "】", "…"};
  return p;
}

void require_refs(const std::vector<std::string>& refs, const char* who) {
  if (refs.empty()) throw ContractError(std::string(who) + ": at least one reference is required");
}

std::size_t lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& t, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[{t.begin() + i, t.begin() + i + n}];
  return out;
}
}  // namespace

std::vector<std::string> normalize_answer(std::string_view text, Language lang) {
  std::vector<std::string> out;
  if (lang == Language::kChinese) {
    for (std::string& c : utf8_chars(text)) {
      if (c.size() == 1 && (std::isspace(static_cast<unsigned char>(c[0])) ||
                            std::ispunct(static_cast<unsigned char>(c[0])))) {
        continue;
      }
      if (cjk_punctuation().count(c)) continue;
      if (c.size() == 1) c[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(c[0])));
      out.push_back(std::move(c));
    }
    return out;
  }
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      flush();
    } else if (!std::ispunct(u)) {
      cur += static_cast<char>(std::tolower(u));
    }
  }
  flush();
  return out;
}

double exact_match(std::string_view prediction, const std::vector<std::string>& references,
                   Language lang) {
  require_refs(references, "exact_match");
  const auto p = normalize_answer(prediction, lang);
  for (const auto& r : references) {
    if (normalize_answer(r, lang) == p) return 1.0;
  }
  return 0.0;
}

double token_f1(std::string_view prediction, const std::vector<std::string>& references,
                Language lang) {
  require_refs(references, "token_f1");
  const auto p = normalize_answer(prediction, lang);
  std::map<std::string, std::size_t> pc;
  for (const auto& t : p) ++pc[t];
  double best = 0.0;
  for (const auto& ref : references) {
    const auto r = normalize_answer(ref, lang);
    if (p.empty() || r.empty()) {
      best = std::max(best, p == r ? 1.0 : 0.0);
      continue;
    }
    std::map<std::string, std::size_t> rc;
    for (const auto& t : r) ++rc[t];
    std::size_t common = 0;
    for (const auto& [tok, n] : pc) {
      auto it = rc.find(tok);
      if (it != rc.end()) common += std::min(n, it->second);
    }
    if (common == 0) continue;
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(r.size());
    best = std::max(best, 2.0 * precision * recall / (precision + recall));
  }
  return best;
}

double rouge_l_score(std::size_t lcs_len, std::size_t prediction_len, std::size_t reference_len,
                     double beta) {
  if (lcs_len == 0) return 0.0;
  // (1 + b^2) P R / (R + b^2 P) with P = lcs/pred and R = lcs/ref, simplified
  // so that equal scores from different lengths round identically.
  const double b2 = beta * beta;
  return (1.0 + b2) * static_cast<double>(lcs_len) /
         (static_cast<double>(prediction_len) + b2 * static_cast<double>(reference_len));
}

double rouge_l_tokens(const std::vector<std::string>& prediction,
                      const std::vector<std::vector<std::string>>& references, double beta) {
  double best = 0.0;
  for (const auto& ref : references) {
    if (prediction.empty() || ref.empty()) continue;
    best = std::max(best, rouge_l_score(lcs(prediction, ref), prediction.size(), ref.size(), beta));
  }
  return best;
}

double rouge_l(std::string_view prediction, const std::vector<std::string>& references,
               double beta, Language lang) {
  require_refs(references, "rouge_l");
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(tokenize_words(r, lang));
  return rouge_l_tokens(tokenize_words(prediction, lang), refs, beta);
}

double bleu4(const std::vector<std::string>& predictions,
             const std::vector<std::vector<std::string>>& references, BleuOptions options) {
  if (predictions.empty() || predictions.size() != references.size()) {
    throw ContractError("bleu4: need a non-empty corpus with one reference list per prediction");
  }
  std::array<double, 4> matched{}, total{};
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    require_refs(references[i], "bleu4");
    const auto cand = tokenize_words(predictions[i], options.lang);
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references[i]) refs.push_back(tokenize_words(r, options.lang));

    cand_len += static_cast<double>(cand.size());
    std::size_t closest = refs.front().size();
    for (const auto& r : refs) {
      const auto d = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (d(r.size()) < d(closest) || (d(r.size()) == d(closest) && r.size() < closest)) closest = r.size();
    }
    ref_len += static_cast<double>(closest);

    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramCounts c = ngrams(cand, n);
      NgramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
      }
      for (const auto& [g, k] : c) {
        auto it = max_ref.find(g);
        matched[n - 1] += static_cast<double>(it == max_ref.end() ? 0 : std::min(k, it->second));
        total[n - 1] += static_cast<double>(k);
      }
    }
  }
  if (cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    double m = matched[n], t = total[n];
    if (m == 0.0) {
      if (!options.smoothing || n == 0) return 0.0;
      m += 1.0;
      t += 1.0;
    }
    log_sum += std::log(m / t);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / 4.0);
}

nlohmann::json MetricReport::to_json() const {
  return {{"em", em}, {"f1", f1}, {"rouge_l", rouge_l}, {"bleu4", bleu4}, {"count", count}};
}

MetricReport evaluate_predictions(const std::vector<std::string>& predictions,
                                  const std::vector<std::vector<std::string>>& references,
                                  MetricOptions options) {
  if (predictions.size() != references.size()) {
    throw ContractError("evaluate_predictions: prediction and reference counts differ");
  }
  MetricReport r;
  r.count = predictions.size();
  if (r.count == 0) return r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    r.example_em.push_back(exact_match(predictions[i], references[i], options.lang));
    r.example_f1.push_back(token_f1(predictions[i], references[i], options.lang));
    r.example_rouge_l.push_back(rouge_l(predictions[i], references[i], options.rouge_beta, options.lang));
  }
  auto mean = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  r.em = mean(r.example_em);
  r.f1 = mean(r.example_f1);
  r.rouge_l = mean(r.example_rouge_l);
  r.bleu4 = bleu4(predictions, references, {options.bleu_smoothing, options.lang});
  return r;
}

}  // namespace mrc
