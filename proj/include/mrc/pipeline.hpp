#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mrc/checkpoint.hpp"
#include "mrc/data.hpp"
#include "mrc/gradcheck.hpp"
#include "mrc/metrics.hpp"
#include "mrc/model.hpp"

namespace mrc {

// Vocabulary from the prepared training set and a word matrix seeded from
// config.seed (pretrained rows copied when config.word_vectors is set).
std::unique_ptr<MrcModel> build_model(const Config& config, const std::vector<PreparedExample>& train);

struct TrainOptions {
  std::string checkpoint_path;  // empty: keep the model in memory only
  std::ostream* log = nullptr;  // per-step and per-epoch lines
  Precision precision = Precision::kFloat32;
};

struct TrainResult {
  std::unique_ptr<MrcModel> model;  // best-dev parameters when dev data was given
  Adam optimizer;
  std::vector<double> losses;  // one entry per step
  std::size_t steps = 0;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
  std::vector<MetricReport> dev_reports;  // one per epoch
  std::optional<double> best_dev;
};

// Fixed-epoch training (capped by config.max_steps when non-zero) with Adam
// on the summed span loss. Throws NumericError on a non-finite loss.
TrainResult train_model(const Config& config, const std::vector<Example>& train,
                        const std::vector<Example>& dev, const TrainOptions& options = {});

struct Prediction {
  std::string id;
  SpanPrediction span;
};

// Predicts every example with the average of the models' probabilities.
// Test-time filtering follows the first model's config.
std::vector<Prediction> predict_examples(const std::vector<const MrcModel*>& models,
                                         const std::vector<Example>& examples);

struct Evaluation {
  MetricReport report;
  std::vector<Prediction> predictions;
};

Evaluation evaluate_models(const std::vector<const MrcModel*>& models,
                           const std::vector<Example>& examples);

// Full-model gradient check on one seeded synthetic example with 2 documents
// of 6 tokens and a 4-token question, in 64-bit mode.
GradCheckReport run_gradcheck(const Config& config, const GradCheckOptions& options = {});

// Analytic count plus, when `instantiate` is set, the tally of a model
// actually built for a synthetic vocabulary of the given sizes.
struct ParamReport {
  ParamBreakdown analytic;
  std::optional<ParamBreakdown> tally;
};
ParamReport count_parameters(const Config& config, std::size_t vocab_size, std::size_t char_vocab_size,
                             bool instantiate);

}  // namespace mrc
