// Command-line front end: train, eval, predict, gradcheck, gen-data, params.
// Results go to stdout as JSON; logs and errors go to stderr.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mrc/errors.hpp"
#include "mrc/pipeline.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  bool tiny = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> L, M;
  bool no_cross_att = false, no_supporting_cue = false, no_intra = false, no_inter = false,
       no_preprocessing = false;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_flag("--tiny", o.tiny, "start from the tiny test configuration");
  cmd->add_option("--seed", o.seed);
  cmd->add_option("--l", o.L, "word-sense refinement iterations");
  cmd->add_option("--m", o.M, "cue-mining rounds");
  cmd->add_flag("--no-cross-att", o.no_cross_att);
  cmd->add_flag("--no-supporting-cue", o.no_supporting_cue);
  cmd->add_flag("--no-intra", o.no_intra);
  cmd->add_flag("--no-inter", o.no_inter);
  cmd->add_flag("--no-preprocessing", o.no_preprocessing);
  cmd->add_option("--set", o.settings, "extra key=value overrides");
}

mrc::Config resolve_config(const CommonOptions& o) {
  mrc::Config c = o.tiny ? mrc::Config::tiny() : mrc::Config{};
  if (!o.config_path.empty()) c = mrc::load_config(o.config_path, c);
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw mrc::ConfigError("--set expects key=value, got '" + s + "'");
    mrc::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.L) c.L = *o.L;
  if (o.M) c.M = *o.M;
  c.ablations.no_cross_att |= o.no_cross_att;
  c.ablations.no_supporting_cue |= o.no_supporting_cue;
  c.ablations.no_intra |= o.no_intra;
  c.ablations.no_inter |= o.no_inter;
  c.ablations.no_preprocessing |= o.no_preprocessing;
  c.validate();
  return c;
}

json breakdown_json(const mrc::ParamBreakdown& b) {
  return {{"total", b.total}, {"trainable", b.trainable}, {"by_group", b.by_group}};
}

json span_json(const mrc::Prediction& p) {
  return {{"id", p.id},         {"answer", p.span.text}, {"doc", p.span.doc},
          {"start", p.span.start}, {"end", p.span.end},   {"score", p.span.score}};
}

std::vector<std::unique_ptr<mrc::MrcModel>> load_models(const std::vector<std::string>& paths) {
  std::vector<std::unique_ptr<mrc::MrcModel>> models;
  for (const auto& p : paths) models.push_back(mrc::load_checkpoint(p).model);
  return models;
}

std::vector<const mrc::MrcModel*> views(const std::vector<std::unique_ptr<mrc::MrcModel>>& models) {
  std::vector<const mrc::MrcModel*> out;
  for (const auto& m : models) out.push_back(m.get());
  return out;
}

int exit_code(const mrc::Error& e) {
  if (dynamic_cast<const mrc::ConfigError*>(&e)) return 3;
  if (dynamic_cast<const mrc::DataError*>(&e)) return 4;
  if (dynamic_cast<const mrc::InferenceError*>(&e)) return 5;
  if (dynamic_cast<const mrc::NumericError*>(&e)) return 6;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-document extractive reading comprehension"};
  app.require_subcommand(1);

  CommonOptions train_common;
  std::string train_path, dev_path, out_path;
  auto* train = app.add_subcommand("train", "train a model and save the best checkpoint");
  add_common(train, train_common);
  train->add_option("--train", train_path, "training JSONL")->required();
  train->add_option("--dev", dev_path, "development JSONL");
  train->add_option("--out", out_path, "checkpoint path")->required();

  std::vector<std::string> eval_ckpts;
  std::string eval_data;
  auto* eval = app.add_subcommand("eval", "score a dataset");
  eval->add_option("--checkpoint,--ensemble", eval_ckpts, "one checkpoint, or several to ensemble")
      ->required();
  eval->add_option("--data", eval_data)->required();

  std::vector<std::string> pred_ckpts, pred_docs;
  std::string question;
  auto* predict = app.add_subcommand("predict", "answer one question over document files");
  predict->add_option("--checkpoint,--ensemble", pred_ckpts)->required();
  predict->add_option("--question", question)->required();
  predict->add_option("--doc", pred_docs, "document text file (repeatable)")->required();

  CommonOptions grad_common;
  std::string fault = "none";
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full model");
  add_common(gradcheck, grad_common);
  gradcheck->add_option("--fault", fault, "test hook: none|tanh")->check(CLI::IsMember({"none", "tanh"}));

  mrc::SyntheticConfig syn;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "write a seeded synthetic dataset");
  gen->add_option("--seed", syn.seed);
  gen->add_option("--count", syn.count);
  gen->add_option("--docs", syn.docs);
  gen->add_option("--tokens", syn.tokens_per_doc);
  gen->add_option("--vocab", syn.vocab_size);
  gen->add_option("--max-answer", syn.max_answer_tokens);
  gen->add_option("--repeat", syn.repeat_probability);
  gen->add_option("--out", gen_out, "output path; stdout when omitted");

  CommonOptions params_common;
  std::size_t vocab_size = 50000, char_vocab_size = 100;
  bool no_tally = false;
  auto* params = app.add_subcommand("params", "count parameters");
  add_common(params, params_common);
  params->add_option("--vocab-size", vocab_size);
  params->add_option("--char-vocab-size", char_vocab_size);
  params->add_flag("--no-tally", no_tally, "skip instantiating the model");

  CLI11_PARSE(app, argc, argv);

  try {
    json out;
    int code = 0;
    if (*train) {
      const mrc::Config config = resolve_config(train_common);
      const auto train_set = mrc::load_dataset(train_path);
      const auto dev_set = dev_path.empty() ? std::vector<mrc::Example>{} : mrc::load_dataset(dev_path);
      mrc::TrainOptions opts;
      opts.checkpoint_path = out_path;
      opts.log = &std::cerr;
      const mrc::TrainResult r = mrc::train_model(config, train_set, dev_set, opts);
      out = {{"steps", r.steps},
             {"final_loss", r.losses.empty() ? json(nullptr) : json(r.losses.back())},
             {"dropped", r.dropped},
             {"checkpoint", out_path},
             {"best_dev", r.best_dev ? json(*r.best_dev) : json(nullptr)}};
    } else if (*eval) {
      const auto models = load_models(eval_ckpts);
      const mrc::Evaluation ev = mrc::evaluate_models(views(models), mrc::load_dataset(eval_data));
      out = ev.report.to_json();
    } else if (*predict) {
      mrc::Example e;
      e.id = "query";
      e.question = question;
      for (const auto& path : pred_docs) {
        std::ifstream in(path);
        if (!in) throw mrc::DataError("cannot open document '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        e.documents.push_back(ss.str());
      }
      const auto models = load_models(pred_ckpts);
      out = span_json(mrc::predict_examples(views(models), {e}).front());
    } else if (*gradcheck) {
      const mrc::Config config = resolve_config(grad_common);
      if (fault == "tanh") mrc::testing::set_fault(mrc::testing::Fault::kTanhBackward);
      const mrc::GradCheckReport r = mrc::run_gradcheck(config);
      constexpr double kTolerance = 1e-4;
      json groups = json::array();
      for (const auto& g : r.groups) {
        groups.push_back({{"group", g.group},
                          {"max_rel_error", g.max_rel_error},
                          {"coords", g.coords},
                          {"worst_param", g.worst_param},
                          {"worst_index", g.worst_index},
                          {"worst_analytic", g.worst_analytic},
                          {"worst_numeric", g.worst_numeric},
                          {"pass", g.max_rel_error < kTolerance}});
        if (g.max_rel_error >= kTolerance) std::cerr << "gradcheck FAILED in group " << g.group << '\n';
      }
      out = {{"max_rel_error", r.max_rel_error}, {"coords", r.coords}, {"groups", groups},
             {"pass", r.max_rel_error < kTolerance}};
      code = r.max_rel_error < kTolerance ? 0 : 2;
    } else if (*gen) {
      const auto data = mrc::gen_synthetic(syn);
      if (gen_out.empty()) {
        mrc::write_jsonl(std::cout, data);
        return 0;
      }
      mrc::save_dataset(gen_out, data);
      out = {{"examples", data.size()}, {"path", gen_out}};
    } else if (*params) {
      const mrc::Config config = resolve_config(params_common);
      const mrc::ParamReport r = mrc::count_parameters(config, vocab_size, char_vocab_size, !no_tally);
      out = {{"analytic", breakdown_json(r.analytic)},
             {"tally", r.tally ? breakdown_json(*r.tally) : json(nullptr)}};
      if (r.tally) out["match"] = r.tally->total == r.analytic.total && r.tally->by_group == r.analytic.by_group;
    }
    std::cout << out.dump(2) << '\n';
    return code;
  } catch (const mrc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
