#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrc/autodiff.hpp"
#include "mrc/config.hpp"
#include "mrc/nn.hpp"

namespace mrc {

// Token and character vocabularies. Index 0 is PAD and index 1 is UNK in
// both; the remaining entries are sorted so rebuilding on the same corpus
// reproduces the same assignment.
class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocab();

  // Tokens with frequency >= min_count; characters from every token seen.
  static Vocab build(const std::vector<std::vector<std::string>>& corpus, std::size_t min_count);
  // Rebuilds from stored lists whose first two entries are PAD and UNK.
  static Vocab from_lists(std::vector<std::string> tokens, std::vector<std::string> chars);

  std::int32_t index(const std::string& token) const;
  const std::string& token(std::int32_t index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  bool contains(const std::string& token) const { return token_index_.count(token) != 0; }
  std::size_t size() const noexcept { return tokens_.size(); }

  std::int32_t char_index(const std::string& ch) const;
  std::size_t char_size() const noexcept { return chars_.size(); }
  // Character indices of `token`, truncated to max_word_len (no padding).
  std::vector<std::int32_t> encode_chars(const std::string& token, std::size_t max_word_len) const;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::string>& chars() const noexcept { return chars_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> chars_;
  std::unordered_map<std::string, std::int32_t> token_index_;
  std::unordered_map<std::string, std::int32_t> char_index_;
};

struct WordVectorFile {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::size_t skipped = 0;  // lines whose float count differed from dim
};

// Reads "token v1 ... v_d" lines. With expected_dim == 0 the dimension is
// taken from the first well-formed line.
WordVectorFile read_word_vectors(std::istream& in, std::size_t expected_dim = 0);
WordVectorFile load_word_vectors(const std::string& path, std::size_t expected_dim = 0);

// |vocab| x dim matrix: PAD row zero, file rows copied verbatim, every other
// row seeded-uniform in [-0.1, 0.1]. Throws ConfigError when the file's
// dimension differs from `dim`.
Tensor build_word_matrix(const Vocab& vocab, const WordVectorFile* vectors, std::size_t dim,
                         std::uint64_t seed);

struct HighwayLayer {
  Linear transform;  // relu(x W_h + b_h)
  Linear gate;       // sigmoid(x W_t + b_t)
};

struct EmbedderParams {
  Parameter* word = nullptr;        // |V| x d, frozen
  Parameter* char_table = nullptr;  // |C| x char_dim
  Parameter* conv_w = nullptr;      // (char_width * char_dim) x char_filters
  Parameter* conv_b = nullptr;      // 1 x char_filters
  Linear projection;                // (d + char_filters) x d, no bias
  std::vector<HighwayLayer> highway;
  std::size_t char_width = 0;
  std::size_t max_word_len = 0;
};

EmbedderParams make_embedder(ParamStore& store, const ModelDims& dims, Tensor word_matrix,
                             std::size_t char_vocab_size, Rng& rng);
std::size_t embedder_param_count(const ModelDims& dims, std::size_t vocab_size,
                                 std::size_t char_vocab_size);

// Embeds characters (padded with PAD to the convolution width), convolves
// and max-pools over positions -> 1 x char_filters.
Var char_encode(std::span<const std::int32_t> char_ids, const EmbedderParams& p);
// One row per word -> n x char_filters.
Var char_encode_words(const std::vector<std::vector<std::int32_t>>& words, const EmbedderParams& p);

// y = x + t * (h - x) per layer, i.e. t*h + (1-t)*x.
Var highway(const Var& x, const EmbedderParams& p);

// Concatenates frozen word vectors with character encodings, projects to d
// and applies the highway stack. Rows with valid[i] == 0 are zero.
Var coarse_embed(std::span<const std::int32_t> token_ids,
                 const std::vector<std::vector<std::int32_t>>& char_ids,
                 std::span<const std::uint8_t> valid, const EmbedderParams& p);

}  // namespace mrc
