#include "mrc/pipeline.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "mrc/errors.hpp"

namespace mrc {

std::unique_ptr<MrcModel> build_model(const Config& config, const std::vector<PreparedExample>& train) {
  Vocab vocab = Vocab::build(vocabulary_corpus(train), config.min_count);
  std::optional<WordVectorFile> vectors;
  if (!config.word_vectors.empty()) vectors = load_word_vectors(config.word_vectors, config.dims.word_dim);
  Tensor words = build_word_matrix(vocab, vectors ? &*vectors : nullptr, config.dims.word_dim, config.seed);
  return std::make_unique<MrcModel>(config, std::move(vocab), std::move(words));
}

namespace {
double selection_metric(const Config& config, const MetricReport& r) {
  return config.free_form ? r.rouge_l : r.f1;
}
}  // namespace

TrainResult train_model(const Config& config, const std::vector<Example>& train,
                        const std::vector<Example>& dev, const TrainOptions& options) {
  PrecisionGuard guard(options.precision);
  config.validate();
  TrainResult result;
  PreparedSet set = prepare_dataset(train, config, Stage::kTrain);
  result.dropped = set.dropped;
  result.warnings = set.warnings;
  if (options.log && set.dropped) {
    *options.log << "dropped " << set.dropped << " training examples without an extractable span\n";
  }
  for (const auto& w : set.warnings) {
    if (options.log) *options.log << "warning: " << w << '\n';
  }
  if (set.examples.empty()) throw DataError("no trainable examples after preprocessing");

  result.model = build_model(config, set.examples);
  MrcModel& model = *result.model;
  result.optimizer = Adam(AdamConfig{config.lr});
  const BatchLimits limits = model.batch_limits();

  Rng order_rng(config.seed ^ 0x5deece66dULL);
  std::vector<std::size_t> order(set.examples.size());
  std::vector<Tensor> best_values;
  bool done = false;
  for (std::size_t epoch = 0; epoch < config.epochs && !done; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);

    for (std::size_t begin = 0; begin < order.size() && !done; begin += config.batch) {
      std::vector<const PreparedExample*> members;
      for (std::size_t i = begin; i < std::min(order.size(), begin + config.batch); ++i) {
        members.push_back(&set.examples[order[i]]);
      }
      const EncodedBatch batch = make_batch(members, model.vocab(), limits);
      Var loss = model.batch_loss(batch);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw NumericError("step " + std::to_string(result.steps) + ": loss is " + std::to_string(value) +
                           "; try a lower learning rate");
      }
      result.optimizer.step(model.params(), backward(loss));
      result.losses.push_back(value);
      ++result.steps;
      if (options.log) {
        *options.log << "epoch " << epoch << " step " << result.steps << " loss " << value << '\n';
      }
      done = config.max_steps != 0 && result.steps >= config.max_steps;
    }

    if (!dev.empty()) {
      Evaluation ev = evaluate_models({&model}, dev);
      const double metric = selection_metric(config, ev.report);
      if (options.log) *options.log << "epoch " << epoch << " dev " << ev.report.to_json().dump() << '\n';
      result.dev_reports.push_back(ev.report);
      if (!result.best_dev || metric > *result.best_dev) {
        result.best_dev = metric;
        best_values.clear();
        for (std::size_t i = 0; i < model.params().size(); ++i) best_values.push_back(model.params()[i].value);
        if (!options.checkpoint_path.empty()) {
          save_checkpoint(options.checkpoint_path, model, &result.optimizer, result.steps);
        }
      }
    }
  }
  if (!best_values.empty()) {
    for (std::size_t i = 0; i < model.params().size(); ++i) model.params()[i].value = best_values[i];
  } else if (!options.checkpoint_path.empty()) {
    save_checkpoint(options.checkpoint_path, model, &result.optimizer, result.steps);
  }
  return result;
}

std::vector<Prediction> predict_examples(const std::vector<const MrcModel*>& models,
                                         const std::vector<Example>& examples) {
  if (models.empty()) throw ContractError("predict_examples: need at least one model");
  const Config& config = models.front()->config();
  std::vector<Prediction> out;
  for (const Example& e : examples) {
    PreparedExample p = prepare_example(e, config, Stage::kTest);
    if (std::all_of(p.documents.begin(), p.documents.end(), [](const auto& d) { return d.empty(); })) {
      throw InferenceError("example '" + e.id +
                           "': every document is empty after filtering; lower cosine_threshold or "
                           "pass --no-preprocessing");
    }
    std::vector<std::vector<double>> starts, ends;
    std::optional<EncodedExample> layout;
    for (const MrcModel* m : models) {
      EncodedBatch batch = make_batch({&p}, m->vocab(), m->batch_limits());
      ForwardResult r = m->forward(batch.examples.front());
      starts.push_back(r.logits.start_probs());
      ends.push_back(r.logits.end_probs());
      if (!layout) layout = std::move(batch.examples.front());
    }
    const std::vector<std::uint8_t> valid = layout->passage_valid();
    SpanPrediction span = ensemble_infer(starts, ends, layout->offsets, config.max_answer_len, valid);
    span.text = map_span_to_text(span, p.documents, config.language);
    out.push_back({e.id, std::move(span)});
  }
  return out;
}

Evaluation evaluate_models(const std::vector<const MrcModel*>& models,
                           const std::vector<Example>& examples) {
  Evaluation ev;
  ev.predictions = predict_examples(models, examples);
  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> refs;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].answers.empty()) throw DataError("example '" + examples[i].id + "' has no answers to score");
    texts.push_back(ev.predictions[i].span.text);
    refs.push_back(examples[i].answers);
  }
  const Config& config = models.front()->config();
  MetricOptions opts;
  opts.rouge_beta = config.rouge_beta;
  opts.lang = config.language;
  ev.report = evaluate_predictions(texts, refs, opts);
  return ev;
}

GradCheckReport run_gradcheck(const Config& config, const GradCheckOptions& options) {
  PrecisionGuard guard(Precision::kFloat64);
  config.validate();
  SyntheticConfig sc;
  sc.seed = config.seed;
  sc.docs = 2;
  sc.tokens_per_doc = 6;
  sc.count = 1;
  const PreparedSet set = prepare_dataset(gen_synthetic(sc), config, Stage::kTrain);
  if (set.examples.empty()) throw DataError("gradcheck: the synthetic example has no golden span");
  auto model = build_model(config, set.examples);
  const EncodedBatch batch = make_batch({&set.examples.front()}, model->vocab(), model->batch_limits());
  const std::vector<Parameter*> params = model->params().trainable();
  return grad_check([&] { return model->batch_loss(batch); }, params, options);
}

ParamReport count_parameters(const Config& config, std::size_t vocab_size, std::size_t char_vocab_size,
                             bool instantiate) {
  if (vocab_size < 2 || char_vocab_size < 2) {
    throw ConfigError("vocabulary sizes include PAD and UNK and must be at least 2");
  }
  config.validate();
  ParamReport r;
  r.analytic = analytic_param_count(config, vocab_size, char_vocab_size);
  if (instantiate) {
    std::vector<std::string> tokens = {Vocab::kPadToken, Vocab::kUnkToken};
    std::vector<std::string> chars = {Vocab::kPadToken, Vocab::kUnkToken};
    for (std::size_t i = 2; i < vocab_size; ++i) tokens.push_back("t" + std::to_string(i));
    for (std::size_t i = 2; i < char_vocab_size; ++i) chars.push_back("c" + std::to_string(i));
    MrcModel model(config, Vocab::from_lists(std::move(tokens), std::move(chars)),
                   Tensor({vocab_size, config.dims.word_dim}));
    r.tally = tally_params(model.params());
  }
  return r;
}

}  // namespace mrc
