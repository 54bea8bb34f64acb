#include "mrc/embedder.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mrc/errors.hpp"
#include "mrc/text.hpp"

namespace mrc {

Vocab::Vocab() {
  tokens_ = {kPadToken, kUnkToken};
  chars_ = {kPadToken, kUnkToken};
  token_index_ = {{kPadToken, kPad}, {kUnkToken, kUnk}};
  char_index_ = {{kPadToken, kPad}, {kUnkToken, kUnk}};
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& corpus, std::size_t min_count) {
  if (min_count < 1) throw ContractError("build_vocab: min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  std::set<std::string> chars;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) {
      ++counts[tok];
      for (auto& ch : utf8_chars(tok)) chars.insert(std::move(ch));
    }
  }
  if (counts.empty()) throw DataError("build_vocab: empty corpus");

  std::vector<std::string> tokens{kPadToken, kUnkToken};
  for (const auto& [tok, n] : counts) {
    if (n >= min_count && tok != kPadToken && tok != kUnkToken) tokens.push_back(tok);
  }
  std::vector<std::string> char_list{kPadToken, kUnkToken};
  for (const auto& ch : chars) char_list.push_back(ch);
  return from_lists(std::move(tokens), std::move(char_list));
}

Vocab Vocab::from_lists(std::vector<std::string> tokens, std::vector<std::string> chars) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken || chars.size() < 2 ||
      chars[0] != kPadToken || chars[1] != kUnkToken) {
    throw DataError("vocab lists must start with PAD and UNK");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.chars_ = std::move(chars);
  v.token_index_.clear();
  v.char_index_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.token_index_.emplace(v.tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw DataError("duplicate vocabulary token: " + v.tokens_[i]);
    }
  }
  for (std::size_t i = 0; i < v.chars_.size(); ++i) {
    if (!v.char_index_.emplace(v.chars_[i], static_cast<std::int32_t>(i)).second) {
      throw DataError("duplicate vocabulary character: " + v.chars_[i]);
    }
  }
  return v;
}

std::int32_t Vocab::index(const std::string& token) const {
  auto it = token_index_.find(token);
  return it == token_index_.end() ? kUnk : it->second;
}

std::int32_t Vocab::char_index(const std::string& ch) const {
  auto it = char_index_.find(ch);
  return it == char_index_.end() ? kUnk : it->second;
}

std::vector<std::int32_t> Vocab::encode_chars(const std::string& token, std::size_t max_word_len) const {
  std::vector<std::int32_t> out;
  for (const auto& ch : utf8_chars(token)) {
    if (out.size() == max_word_len) break;
    out.push_back(char_index(ch));
  }
  return out;
}

WordVectorFile read_word_vectors(std::istream& in, std::size_t expected_dim) {
  WordVectorFile file;
  file.dim = expected_dim;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> values;
    std::string field;
    bool ok = true;
    while (ls >> field) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
        ok = ok && used == field.size();
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (file.dim == 0 && ok && !values.empty()) file.dim = values.size();
    if (!ok || values.size() != file.dim) {
      ++file.skipped;
      continue;
    }
    file.vectors.emplace(std::move(token), std::move(values));
  }
  return file;
}

WordVectorFile load_word_vectors(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open word vector file " + path);
  return read_word_vectors(in, expected_dim);
}

Tensor build_word_matrix(const Vocab& vocab, const WordVectorFile* vectors, std::size_t dim,
                         std::uint64_t seed) {
  if (vectors && !vectors->vectors.empty() && vectors->dim != dim) {
    throw ConfigError("word vectors have dimension " + std::to_string(vectors->dim) +
                      " but the model expects " + std::to_string(dim));
  }
  Rng rng(seed);
  Tensor m({vocab.size(), dim});
  for (std::size_t r = 1; r < vocab.size(); ++r) {
    const std::vector<double>* row = nullptr;
    if (vectors) {
      auto it = vectors->vectors.find(vocab.tokens()[r]);
      if (it != vectors->vectors.end()) row = &it->second;
    }
    // Draw unconditionally so a row's random init does not depend on which
    // other tokens the file happens to cover.
    for (std::size_t c = 0; c < dim; ++c) {
      const double draw = rng.uniform(-0.1, 0.1);
      m.at(r, c) = row ? (*row)[c] : draw;
    }
  }
  return m;
}

EmbedderParams make_embedder(ParamStore& store, const ModelDims& dims, Tensor word_matrix,
                             std::size_t char_vocab_size, Rng& rng) {
  if (word_matrix.cols() != dims.word_dim) {
    throw ConfigError("word matrix width " + std::to_string(word_matrix.cols()) +
                      " differs from word_dim " + std::to_string(dims.word_dim));
  }
  const std::string group = "embed";
  EmbedderParams p;
  p.char_width = dims.char_width;
  p.max_word_len = dims.max_word_len;
  p.word = &store.add("embed.word", group, std::move(word_matrix), /*requires_grad=*/false);
  p.char_table = &store.add("embed.char", group,
                            uniform_tensor({char_vocab_size, dims.char_dim}, 0.1, rng));
  p.conv_w = &store.add("embed.conv.w", group,
                        glorot(dims.char_width * dims.char_dim, dims.char_filters, rng));
  p.conv_b = &store.add("embed.conv.b", group, Tensor({1, dims.char_filters}));
  p.projection = make_linear(store, "embed.proj", group, dims.word_dim + dims.char_filters,
                             dims.word_dim, false, rng);
  for (std::size_t l = 0; l < dims.highway_layers; ++l) {
    const std::string name = "embed.highway" + std::to_string(l);
    HighwayLayer layer;
    layer.transform = make_linear(store, name + ".transform", group, dims.word_dim, dims.word_dim, true, rng);
    layer.gate = make_linear(store, name + ".gate", group, dims.word_dim, dims.word_dim, true, rng);
    p.highway.push_back(layer);
  }
  return p;
}

std::size_t embedder_param_count(const ModelDims& dims, std::size_t vocab_size,
                                 std::size_t char_vocab_size) {
  const std::size_t d = dims.word_dim;
  return vocab_size * d + char_vocab_size * dims.char_dim +
         dims.char_width * dims.char_dim * dims.char_filters + dims.char_filters +
         (d + dims.char_filters) * d + dims.highway_layers * 2 * (d * d + d);
}

namespace {
// Window-major gather indices for one word plus its number of windows.
std::size_t append_windows(std::span<const std::int32_t> ids, std::size_t width,
                           std::vector<std::int32_t>& out) {
  std::vector<std::int32_t> padded(ids.begin(), ids.end());
  if (padded.size() < width) padded.resize(width, Vocab::kPad);
  const std::size_t windows = padded.size() - width + 1;
  for (std::size_t p = 0; p < windows; ++p)
    for (std::size_t w = 0; w < width; ++w) out.push_back(padded[p + w]);
  return windows;
}
}  // namespace

Var char_encode_words(const std::vector<std::vector<std::int32_t>>& words, const EmbedderParams& p) {
  std::vector<std::int32_t> gather;
  std::vector<std::size_t> segments;
  for (const auto& w : words) segments.push_back(append_windows(w, p.char_width, gather));
  const std::size_t char_dim = p.char_table->value.cols();
  Var rows = gather_rows(param(*p.char_table), gather);
  std::size_t windows = 0;
  for (std::size_t s : segments) windows += s;
  Var unfolded = reshape(rows, {windows, p.char_width * char_dim});
  Var conv = add(matmul(unfolded, param(*p.conv_w)), param(*p.conv_b));
  return segment_max(conv, segments);
}

Var char_encode(std::span<const std::int32_t> char_ids, const EmbedderParams& p) {
  return char_encode_words({std::vector<std::int32_t>(char_ids.begin(), char_ids.end())}, p);
}

Var highway(const Var& x, const EmbedderParams& p) {
  Var y = x;
  for (const auto& layer : p.highway) {
    Var t = sigmoid(layer.gate(y));
    Var h = relu(layer.transform(y));
    y = add(y, mul(t, sub(h, y)));
  }
  return y;
}

Var coarse_embed(std::span<const std::int32_t> token_ids,
                 const std::vector<std::vector<std::int32_t>>& char_ids,
                 std::span<const std::uint8_t> valid, const EmbedderParams& p) {
  if (token_ids.size() != char_ids.size() || token_ids.size() != valid.size()) {
    throw ShapeError("coarse_embed: token, character and mask lengths differ");
  }
  Var words = gather_rows(param(*p.word), token_ids);
  Var chars = char_encode_words(char_ids, p);
  Var x = p.projection(concat({words, chars}, 1));
  return mul(highway(x, p), constant(row_mask_column(valid)));
}

}  // namespace mrc
