#include "mrc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mrc/errors.hpp"

namespace mrc {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {
struct TableEntry {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
};

template <typename T>
void write_values(std::ostream& out, std::span<const double> values) {
  std::vector<T> buf(values.begin(), values.end());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(T)));
}

std::string expect_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string("checkpoint truncated before ") + what);
  return line;
}

// Reads "<keyword> <n>" and returns n.
std::size_t keyword_count(std::istream& in, const std::string& keyword) {
  std::istringstream is(expect_line(in, keyword.c_str()));
  std::string k;
  std::size_t n = 0;
  if (!(is >> k >> n) || k != keyword) throw DataError("checkpoint header: expected '" + keyword + " <n>'");
  return n;
}
}  // namespace

void save_checkpoint(std::ostream& out, const MrcModel& model, const Adam* optimizer,
                     std::uint64_t step) {
  const bool f32 = precision() == Precision::kFloat32;
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  const ParamStore& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) tensors.emplace_back(store[i].name, &store[i].value);
  if (optimizer) {
    for (const auto& [name, m] : optimizer->moments()) {
      tensors.emplace_back("adam.m/" + name, &m.first);
      tensors.emplace_back("adam.v/" + name, &m.second);
    }
  }

  const std::string config = serialize_config(model.config());
  std::size_t config_lines = 0;
  for (char c : config) config_lines += c == '\n';

  out << "mrc-checkpoint " << kCheckpointVersion << '\n'
      << "dtype " << (f32 ? "f32" : "f64") << '\n'
      << "step " << step << '\n'
      << "config " << config_lines << '\n'
      << config;
  out << "tokens " << model.vocab().size() << '\n';
  for (const auto& t : model.vocab().tokens()) out << t << '\n';
  out << "chars " << model.vocab().char_size() << '\n';
  for (const auto& c : model.vocab().chars()) out << c << '\n';
  out << "tensors " << tensors.size() << '\n';
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    out << name << ' ' << t->rows() << ' ' << t->cols() << ' ' << offset << '\n';
    offset += t->numel();
  }
  if (optimizer) out << "adam " << optimizer->steps() << '\n';
  out << "end\n";
  for (const auto& [name, t] : tensors) {
    if (f32) {
      write_values<float>(out, t->data());
    } else {
      write_values<double>(out, t->data());
    }
  }
  if (!out) throw DataError("failed writing checkpoint");
}

void save_checkpoint(const std::string& path, const MrcModel& model, const Adam* optimizer,
                     std::uint64_t step) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  save_checkpoint(out, model, optimizer, step);
}

Checkpoint load_checkpoint(std::istream& in) {
  {
    std::istringstream is(expect_line(in, "magic"));
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "mrc-checkpoint") throw DataError("not a checkpoint file");
    if (version != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
  }
  std::string dtype;
  {
    std::istringstream is(expect_line(in, "dtype"));
    std::string k;
    if (!(is >> k >> dtype) || k != "dtype" || (dtype != "f32" && dtype != "f64")) {
      throw DataError("checkpoint header: bad dtype line");
    }
  }
  Checkpoint ck;
  ck.step = keyword_count(in, "step");

  std::string config_text;
  for (std::size_t i = 0, n = keyword_count(in, "config"); i < n; ++i) config_text += expect_line(in, "config") + '\n';
  std::istringstream config_in(config_text);
  Config config = parse_config(config_in);

  std::vector<std::string> tokens, chars;
  for (std::size_t i = 0, n = keyword_count(in, "tokens"); i < n; ++i) tokens.push_back(expect_line(in, "tokens"));
  for (std::size_t i = 0, n = keyword_count(in, "chars"); i < n; ++i) chars.push_back(expect_line(in, "chars"));
  Vocab vocab = Vocab::from_lists(std::move(tokens), std::move(chars));

  std::vector<TableEntry> table;
  for (std::size_t i = 0, n = keyword_count(in, "tensors"); i < n; ++i) {
    std::istringstream is(expect_line(in, "tensor table"));
    TableEntry e;
    if (!(is >> e.name >> e.rows >> e.cols >> e.offset)) throw DataError("checkpoint header: bad tensor line");
    table.push_back(std::move(e));
  }
  std::optional<std::uint64_t> adam_steps;
  std::string line = expect_line(in, "end");
  if (line.rfind("adam ", 0) == 0) {
    adam_steps = std::stoull(line.substr(5));
    line = expect_line(in, "end");
  }
  if (line != "end") throw DataError("checkpoint header: expected 'end', got '" + line + "'");

  std::size_t total = 0;
  for (const auto& e : table) total = std::max(total, e.offset + e.rows * e.cols);
  std::vector<double> values(total);
  if (dtype == "f32") {
    std::vector<float> buf(total);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(total * sizeof(float)));
    std::copy(buf.begin(), buf.end(), values.begin());
  } else {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(total * sizeof(double)));
  }
  if (!in) throw DataError("checkpoint truncated in tensor data");

  const std::size_t d = config.dims.word_dim;
  ck.model = std::make_unique<MrcModel>(config, vocab, Tensor({vocab.size(), d}));
  ParamStore& store = ck.model->params();
  std::map<std::string, AdamMoments> moments;
  std::size_t assigned = 0;
  for (const auto& e : table) {
    Tensor t({e.rows, e.cols},
             std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(e.offset),
                                 values.begin() + static_cast<std::ptrdiff_t>(e.offset + e.rows * e.cols)));
    if (e.name.rfind("adam.m/", 0) == 0) {
      moments[e.name.substr(7)].first = std::move(t);
    } else if (e.name.rfind("adam.v/", 0) == 0) {
      moments[e.name.substr(7)].second = std::move(t);
    } else {
      Parameter* p = store.find(e.name);
      if (!p) throw ConfigError("checkpoint tensor '" + e.name + "' does not exist in the stored config");
      if (p->value.shape() != t.shape()) {
        throw ConfigError("checkpoint tensor '" + e.name + "' is " + shape_str(t.shape()) +
                          " but the config expects " + shape_str(p->value.shape()));
      }
      p->value = std::move(t);
      ++assigned;
    }
  }
  if (assigned != store.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(assigned) + " of the " +
                      std::to_string(store.size()) + " parameters the config requires");
  }
  if (adam_steps) {
    Adam adam(AdamConfig{config.lr});
    adam.restore(*adam_steps, std::move(moments));
    ck.optimizer = std::move(adam);
  }
  return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace mrc
