#include "mrc/text.hpp"

#include <cctype>

#include "mrc/errors.hpp"

namespace mrc {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

}  // namespace

Language parse_language(std::string_view name) {
  if (name == "en" || name == "english") return Language::kEnglish;
  if (name == "zh" || name == "chinese") return Language::kChinese;
  throw ConfigError("unknown language '" + std::string(name) + "' (expected en or zh)");
}

std::string_view language_name(Language lang) noexcept {
  return lang == Language::kEnglish ? "en" : "zh";
}

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t len = utf8_length(static_cast<unsigned char>(s[i]));
    if (i + len > s.size()) len = 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text, Language lang) {
  std::vector<Token> tokens;
  if (lang == Language::kChinese) {
    for (std::size_t i = 0; i < text.size();) {
      const auto c = static_cast<unsigned char>(text[i]);
      std::size_t len = utf8_length(c);
      if (i + len > text.size()) len = 1;
      if (!(len == 1 && is_space(c))) {
        tokens.push_back({lower_ascii(text.substr(i, len)), i, i + len});
      }
      i += len;
    }
    return tokens;
  }

  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t end = i;
    while (end < text.size() && !is_space(static_cast<unsigned char>(text[end]))) ++end;

    std::size_t lo = i, hi = end;
    while (lo < hi && is_punct(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && is_punct(static_cast<unsigned char>(text[hi - 1]))) --hi;
    for (std::size_t p = i; p < lo; ++p) tokens.push_back({std::string(1, text[p]), p, p + 1});
    if (lo < hi) tokens.push_back({lower_ascii(text.substr(lo, hi - lo)), lo, hi});
    for (std::size_t p = hi; p < end; ++p) tokens.push_back({std::string(1, text[p]), p, p + 1});
    i = end;
  }
  return tokens;
}

std::vector<std::string> tokenize_words(std::string_view text, Language lang) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text, lang)) out.push_back(std::move(t.text));
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end,
                       Language lang) {
  std::string out;
  for (std::size_t i = begin; i <= end && i < tokens.size(); ++i) {
    if (i > begin && lang == Language::kEnglish) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<TextRange> split_sentences(std::string_view text, Language lang) {
  std::vector<TextRange> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      if (!is_space(static_cast<unsigned char>(text[k]))) {
        out.push_back({b, e});
        return;
      }
    }
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = utf8_length(c);
    if (i + len > text.size()) len = 1;
    bool boundary = c == '\n';
    if (lang == Language::kEnglish) {
      boundary = boundary || c == '.' || c == '!' || c == '?';
    } else {
      const std::string_view ch = text.substr(i, len);
      boundary = boundary || ch == "\xE3\x80\x82" || ch == "\xEF\xBC\x81" || ch == "\xEF\xBC\x9F";
    }
    i += len;
    if (boundary) {
      emit(start, i);
      start = i;
    }
  }
  if (start < text.size()) emit(start, text.size());
  return out;
}

}  // namespace mrc
