#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mrc/config.hpp"
#include "mrc/cue_miner.hpp"
#include "mrc/embedder.hpp"
#include "mrc/span.hpp"
#include "mrc/text.hpp"

namespace mrc {

// Token span inside one document; indices are local and inclusive.
struct DocSpan {
  std::size_t doc = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const DocSpan&, const DocSpan&) = default;
};

struct Example {
  std::string id;
  std::string question;
  std::vector<std::string> documents;
  std::vector<std::string> answers;
  std::optional<DocSpan> gold_span;
  friend bool operator==(const Example&, const Example&) = default;
};

nlohmann::json example_to_json(const Example& e);
// Throws DataError for missing or mistyped fields.
Example example_from_json(const nlohmann::json& j);

// One JSON object per line; blank lines are skipped. Errors carry the
// 1-based line number.
std::vector<Example> read_jsonl(std::istream& in);
void write_jsonl(std::ostream& out, const std::vector<Example>& examples);
std::vector<Example> load_dataset(const std::string& path);
void save_dataset(const std::string& path, const std::vector<Example>& examples);

// Term-frequency cosine similarity of two token bags; 0 if either is empty.
double tf_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Keeps sentences whose cosine with `reference` reaches `threshold`, in
// their original order and joined by newlines. If none qualifies the single
// most similar sentence (earliest on ties) is kept. threshold <= 0 returns
// the document unchanged.
std::string filter_sentences(const std::string& document, const std::string& reference,
                             double threshold, Language lang);

struct GoldenSpan {
  DocSpan span;
  double rouge_l = 0.0;
};

// Best ROUGE-L span of length <= max_len over all documents and references.
// Ties: earliest (doc, start), then shortest. Throws DataError when every
// document is empty.
GoldenSpan select_golden_span(const std::vector<std::vector<std::string>>& documents,
                              const std::vector<std::vector<std::string>>& references,
                              std::size_t max_len, double beta);

enum class Stage { kTrain, kTest };

// Tokenized, filtered example. `gold` is set at train time.
struct PreparedExample {
  std::string id;
  std::vector<std::string> question;
  std::vector<std::vector<std::string>> documents;
  std::vector<std::string> answers;
  std::optional<GoldenSpan> gold;
  std::vector<std::string> warnings;
};

// Filters with the answers at train time and the question at test time
// (unless disabled), applies the total-token cap by truncating later
// documents first and, for training, selects the golden span.
PreparedExample prepare_example(const Example& example, const Config& config, Stage stage);

struct PreparedSet {
  std::vector<PreparedExample> examples;
  std::size_t dropped = 0;  // training examples without an extractable span
  std::vector<std::string> warnings;
};

PreparedSet prepare_dataset(const std::vector<Example>& examples, const Config& config, Stage stage);

// Every token of every question and document, for vocabulary building.
std::vector<std::vector<std::string>> vocabulary_corpus(const std::vector<PreparedExample>& examples);

// One example laid out for the model: every document padded to n_max rows
// and k_max documents, question padded to m_max.
struct EncodedExample {
  std::string id;
  std::vector<std::int32_t> question;
  std::vector<std::uint8_t> question_valid;
  std::vector<std::vector<std::int32_t>> question_chars;
  std::vector<std::vector<std::int32_t>> docs;
  std::vector<std::vector<std::uint8_t>> docs_valid;
  std::vector<std::vector<std::vector<std::int32_t>>> doc_chars;
  DocOffsets offsets;
  std::optional<GoldSpan> gold;  // global, padded coordinates

  std::vector<std::uint8_t> passage_valid() const;
};

struct EncodedBatch {
  std::vector<EncodedExample> examples;
  std::size_t m_max = 0;
  std::size_t k_max = 0;
  std::size_t n_max = 0;
};

struct BatchLimits {
  std::size_t max_word_len = 16;
  std::size_t min_question = 0;  // pad to at least these extents
  std::size_t min_docs = 0;
  std::size_t min_doc_len = 0;
};

// Throws DataError when an example has no non-empty document.
EncodedBatch make_batch(const std::vector<const PreparedExample*>& examples, const Vocab& vocab,
                        const BatchLimits& limits);

struct SyntheticConfig {
  std::uint64_t seed = 1;
  std::size_t docs = 2;
  std::size_t tokens_per_doc = 6;
  std::size_t vocab_size = 50;
  std::size_t count = 32;
  std::size_t max_answer_tokens = 2;
  double repeat_probability = 0.5;
};

// Filler words w<i> and a disjoint answer pool x<i>. The question is "what"
// plus the two tokens before and the one after the answer; with
// `repeat_probability` the answer also appears in a later document.
std::vector<Example> gen_synthetic(const SyntheticConfig& config);

}  // namespace mrc
