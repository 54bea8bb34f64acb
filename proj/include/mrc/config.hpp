#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "mrc/text.hpp"

namespace mrc {

struct ModelDims {
  std::size_t word_dim = 300;  // d
  std::size_t hidden = 150;    // per BiGRU direction; sequence width is 2 * hidden
  std::size_t char_dim = 16;
  std::size_t char_filters = 100;
  std::size_t char_width = 5;
  std::size_t highway_layers = 2;
  std::size_t max_word_len = 16;
  std::size_t attn_dim = 150;  // inner width of the additive scorers

  std::size_t width() const noexcept { return 2 * hidden; }
};

struct Ablations {
  bool no_cross_att = false;       // L := 0
  bool no_supporting_cue = false;  // M := 0
  bool no_intra = false;
  bool no_inter = false;
  bool no_preprocessing = false;   // skip sentence filtering
};

struct Config {
  ModelDims dims;
  std::size_t L = 1;
  std::size_t M = 2;
  std::size_t batch = 16;
  double lr = 0.001;
  std::size_t epochs = 2;
  std::uint64_t seed = 1;
  std::size_t max_answer_len = 30;
  double cosine_threshold = 0.3;
  std::size_t token_cap = 2000;
  std::size_t min_count = 1;
  std::size_t max_steps = 0;  // 0: no cap beyond epochs
  Language language = Language::kEnglish;
  bool free_form = false;     // select best dev checkpoint by ROUGE-L instead of F1
  double rouge_beta = 1.2;
  Ablations ablations;
  std::string interaction = "bidaf";
  std::string word_vectors;   // optional pretrained vector file

  std::size_t effective_L() const noexcept { return ablations.no_cross_att ? 0 : L; }
  std::size_t effective_M() const noexcept { return ablations.no_supporting_cue ? 0 : M; }
  bool use_intra() const noexcept { return !ablations.no_intra; }
  bool use_inter() const noexcept { return !ablations.no_inter; }

  // Throws ConfigError on a non-positive size or an unknown strategy.
  void validate() const;

  // d=8, hidden=4, L=1, M=1 with small character settings and lr=0.005.
  static Config tiny();
};

// Sets one `key=value` field; throws ConfigError for an unknown key or an
// unparseable value.
void apply_setting(Config& config, std::string_view key, std::string_view value);

// Flat `key=value` text; blank lines and `#` comments are ignored.
Config parse_config(std::istream& in, Config base = {});
Config load_config(const std::string& path, Config base = {});
std::string serialize_config(const Config& config);

}  // namespace mrc
