#include "mrc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mrc/errors.hpp"
#include "mrc/metrics.hpp"

namespace mrc {

nlohmann::json example_to_json(const Example& e) {
  nlohmann::json j = {{"id", e.id}, {"question", e.question}, {"documents", e.documents},
                      {"answers", e.answers}};
  if (e.gold_span) j["gold_span"] = {e.gold_span->doc, e.gold_span->start, e.gold_span->end};
  return j;
}

namespace {
template <typename T>
T field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}
}  // namespace

Example example_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("expected a JSON object");
  Example e;
  e.id = field<std::string>(j, "id");
  e.question = field<std::string>(j, "question");
  e.documents = field<std::vector<std::string>>(j, "documents");
  e.answers = j.contains("answers") ? field<std::vector<std::string>>(j, "answers")
                                    : std::vector<std::string>{};
  if (e.documents.empty()) throw DataError("example '" + e.id + "' has no documents");
  if (j.contains("gold_span")) {
    auto g = field<std::vector<std::size_t>>(j, "gold_span");
    if (g.size() != 3) throw DataError("gold_span must be [doc, start, end]");
    e.gold_span = DocSpan{g[0], g[1], g[2]};
  }
  return e;
}

std::vector<Example> read_jsonl(std::istream& in) {
  std::vector<Example> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(number, e.what());
    } catch (const DataError& e) {
      throw ParseError(number, e.what());
    }
  }
  return out;
}

void write_jsonl(std::ostream& out, const std::vector<Example>& examples) {
  for (const auto& e : examples) out << example_to_json(e).dump() << '\n';
}

std::vector<Example> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_jsonl(in);
}

void save_dataset(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset '" + path + "'");
  write_jsonl(out, examples);
}

double tf_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::string, double> ta, tb;
  for (const auto& t : a) ta[t] += 1.0;
  for (const auto& t : b) tb[t] += 1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, c] : ta) {
    na += c * c;
    auto it = tb.find(t);
    if (it != tb.end()) dot += c * it->second;
  }
  for (const auto& [t, c] : tb) nb += c * c;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string filter_sentences(const std::string& document, const std::string& reference,
                             double threshold, Language lang) {
  if (threshold <= 0.0) return document;
  const auto sentences = split_sentences(document, lang);
  if (sentences.empty()) return document;
  const auto ref = tokenize_words(reference, lang);
  std::vector<std::string> kept;
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    std::string s = document.substr(sentences[i].begin, sentences[i].end - sentences[i].begin);
    const double c = tf_cosine(tokenize_words(s, lang), ref);
    if (c > best_score) {
      best_score = c;
      best = i;
    }
    if (c >= threshold) kept.push_back(std::move(s));
  }
  if (kept.empty()) {
    kept.push_back(document.substr(sentences[best].begin, sentences[best].end - sentences[best].begin));
  }
  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) out += '\n';
    out += kept[i];
  }
  return out;
}

GoldenSpan select_golden_span(const std::vector<std::vector<std::string>>& documents,
                              const std::vector<std::vector<std::string>>& references,
                              std::size_t max_len, double beta) {
  if (std::all_of(documents.begin(), documents.end(), [](const auto& d) { return d.empty(); })) {
    throw DataError("select_golden_span: every document is empty");
  }
  if (max_len == 0) throw ContractError("select_golden_span: max_len must be positive");
  GoldenSpan best;
  bool found = false;
  // rows[r][j] = LCS(doc[s..e], ref_r[0..j)), extended one token at a time.
  std::vector<std::vector<std::size_t>> rows(references.size());
  for (std::size_t t = 0; t < documents.size(); ++t) {
    const auto& doc = documents[t];
    for (std::size_t s = 0; s < doc.size(); ++s) {
      for (std::size_t r = 0; r < references.size(); ++r) rows[r].assign(references[r].size() + 1, 0);
      const std::size_t stop = std::min(doc.size(), s + max_len);
      for (std::size_t e = s; e < stop; ++e) {
        double score = 0.0;
        for (std::size_t r = 0; r < references.size(); ++r) {
          const auto& ref = references[r];
          if (ref.empty()) continue;
          auto& row = rows[r];
          std::size_t diag = row[0];
          for (std::size_t j = 1; j <= ref.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = doc[e] == ref[j - 1] ? diag + 1 : std::max(up, row[j - 1]);
            diag = up;
          }
          score = std::max(score, rouge_l_score(row[ref.size()], e - s + 1, ref.size(), beta));
        }
        if (!found || score > best.rouge_l) {
          found = true;
          best = {DocSpan{t, s, e}, score};
        }
      }
    }
  }
  return best;
}

namespace {
std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}
}  // namespace

PreparedExample prepare_example(const Example& example, const Config& config, Stage stage) {
  PreparedExample p;
  p.id = example.id;
  p.answers = example.answers;
  p.question = tokenize_words(example.question, config.language);
  if (p.question.empty()) throw DataError("example '" + example.id + "' has an empty question");

  const std::string reference =
      stage == Stage::kTrain ? join(example.answers, " ") : example.question;
  std::size_t budget = config.token_cap;
  std::size_t total = 0;
  for (const auto& text : example.documents) {
    const std::string kept = config.ablations.no_preprocessing
                                 ? text
                                 : filter_sentences(text, reference, config.cosine_threshold,
                                                    config.language);
    auto tokens = tokenize_words(kept, config.language);
    total += tokens.size();
    if (tokens.size() > budget) tokens.resize(budget);
    budget -= tokens.size();
    p.documents.push_back(std::move(tokens));
  }
  if (total > config.token_cap) {
    p.warnings.push_back("example '" + example.id + "': truncated from " + std::to_string(total) +
                         " to " + std::to_string(config.token_cap) + " document tokens");
  }

  if (stage == Stage::kTrain && !example.answers.empty()) {
    std::vector<std::vector<std::string>> refs;
    for (const auto& a : example.answers) refs.push_back(tokenize_words(a, config.language));
    const bool any_tokens =
        std::any_of(p.documents.begin(), p.documents.end(), [](const auto& d) { return !d.empty(); });
    if (any_tokens) {
      GoldenSpan g = select_golden_span(p.documents, refs, config.max_answer_len, config.rouge_beta);
      if (g.rouge_l > 0.0) p.gold = g;
    }
  }
  return p;
}

PreparedSet prepare_dataset(const std::vector<Example>& examples, const Config& config, Stage stage) {
  PreparedSet set;
  for (const auto& e : examples) {
    PreparedExample p = prepare_example(e, config, stage);
    set.warnings.insert(set.warnings.end(), p.warnings.begin(), p.warnings.end());
    if (stage == Stage::kTrain && !p.gold) {
      ++set.dropped;
      continue;
    }
    set.examples.push_back(std::move(p));
  }
  return set;
}

std::vector<std::vector<std::string>> vocabulary_corpus(const std::vector<PreparedExample>& examples) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& e : examples) {
    corpus.push_back(e.question);
    for (const auto& d : e.documents) corpus.push_back(d);
  }
  return corpus;
}

std::vector<std::uint8_t> EncodedExample::passage_valid() const {
  std::vector<std::uint8_t> out;
  for (const auto& v : docs_valid) out.insert(out.end(), v.begin(), v.end());
  return out;
}

EncodedBatch make_batch(const std::vector<const PreparedExample*>& examples, const Vocab& vocab,
                        const BatchLimits& limits) {
  EncodedBatch b;
  b.m_max = limits.min_question;
  b.k_max = limits.min_docs;
  b.n_max = limits.min_doc_len;
  for (const PreparedExample* e : examples) {
    if (std::all_of(e->documents.begin(), e->documents.end(), [](const auto& d) { return d.empty(); })) {
      throw DataError("example '" + e->id + "' has no non-empty document");
    }
    b.m_max = std::max(b.m_max, e->question.size());
    b.k_max = std::max(b.k_max, e->documents.size());
    for (const auto& d : e->documents) b.n_max = std::max(b.n_max, d.size());
  }

  auto encode = [&](const std::vector<std::string>& tokens, std::size_t len,
                    std::vector<std::int32_t>& ids, std::vector<std::uint8_t>& valid,
                    std::vector<std::vector<std::int32_t>>& chars) {
    ids.assign(len, Vocab::kPad);
    valid.assign(len, 0);
    chars.assign(len, {});
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      ids[i] = vocab.index(tokens[i]);
      valid[i] = 1;
      chars[i] = vocab.encode_chars(tokens[i], limits.max_word_len);
    }
  };

  for (const PreparedExample* e : examples) {
    EncodedExample x;
    x.id = e->id;
    encode(e->question, b.m_max, x.question, x.question_valid, x.question_chars);
    std::vector<std::size_t> lengths;
    for (std::size_t t = 0; t < b.k_max; ++t) {
      static const std::vector<std::string> kEmpty;
      const auto& tokens = t < e->documents.size() ? e->documents[t] : kEmpty;
      x.docs.emplace_back();
      x.docs_valid.emplace_back();
      x.doc_chars.emplace_back();
      encode(tokens, b.n_max, x.docs.back(), x.docs_valid.back(), x.doc_chars.back());
      lengths.push_back(b.n_max);
    }
    x.offsets = DocOffsets::from_lengths(lengths);
    if (e->gold) {
      const DocSpan& s = e->gold->span;
      x.gold = GoldSpan{x.offsets.global(s.doc, s.start), x.offsets.global(s.doc, s.end)};
    }
    b.examples.push_back(std::move(x));
  }
  return b;
}

std::vector<Example> gen_synthetic(const SyntheticConfig& config) {
  if (config.docs == 0 || config.count == 0 || config.vocab_size == 0 || config.max_answer_tokens == 0) {
    throw ConfigError("gen_synthetic: docs, count, vocab_size and max_answer_tokens must be positive");
  }
  if (config.tokens_per_doc < config.max_answer_tokens + 3) {
    throw ConfigError("gen_synthetic: tokens_per_doc must leave room for the answer and 3 context tokens");
  }
  Rng rng(config.seed);
  const std::size_t n = config.tokens_per_doc;
  std::vector<Example> out;
  for (std::size_t i = 0; i < config.count; ++i) {
    std::vector<std::vector<std::string>> docs(config.docs);
    for (auto& d : docs) {
      for (std::size_t j = 0; j < n; ++j) d.push_back("w" + std::to_string(rng.below(config.vocab_size)));
    }
    const std::size_t len = 1 + rng.below(config.max_answer_tokens);
    std::vector<std::string> answer;
    while (answer.size() < len) {
      std::string a = "x" + std::to_string(rng.below(config.vocab_size));
      if (std::find(answer.begin(), answer.end(), a) == answer.end()) answer.push_back(std::move(a));
    }
    const std::size_t t0 = rng.below(config.docs);
    const std::size_t p = 2 + rng.below(n - len - 2);
    std::copy(answer.begin(), answer.end(), docs[t0].begin() + static_cast<std::ptrdiff_t>(p));

    const bool repeat = rng.bernoulli(config.repeat_probability);
    const std::size_t later = config.docs - 1 - t0;
    if (repeat && later > 0) {
      const std::size_t t1 = t0 + 1 + rng.below(later);
      const std::size_t q = rng.below(n - len + 1);
      std::copy(answer.begin(), answer.end(), docs[t1].begin() + static_cast<std::ptrdiff_t>(q));
    }

    Example e;
    e.id = "syn-" + std::to_string(i);
    e.question = "what " + docs[t0][p - 2] + " " + docs[t0][p - 1] + " " + docs[t0][p + len];
    for (const auto& d : docs) e.documents.push_back(join(d, " "));
    e.answers = {join(answer, " ")};
    e.gold_span = DocSpan{t0, p, p + len - 1};
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mrc
