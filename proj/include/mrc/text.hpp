#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mrc {

enum class Language { kEnglish, kChinese };

Language parse_language(std::string_view name);
std::string_view language_name(Language lang) noexcept;

// A token and the byte range [begin, end) it came from in the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// Splits into UTF-8 code points (invalid bytes become single-byte units).
std::vector<std::string> utf8_chars(std::string_view s);

// English: ASCII-lowercase, split on whitespace, and peel leading/trailing
// punctuation off each chunk as one-character tokens. Chinese: every
// non-whitespace code point is a token.
std::vector<Token> tokenize(std::string_view text, Language lang);
std::vector<std::string> tokenize_words(std::string_view text, Language lang);

// Surface form for a token sequence: space-joined for English, concatenated
// for Chinese.
std::string detokenize(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end,
                       Language lang);

struct TextRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Sentence byte ranges, each including its terminator. Boundaries follow
// [.!?] and newlines (English) or the full-width 。！？ and newlines (Chinese).
// Whitespace-only sentences are dropped.
std::vector<TextRange> split_sentences(std::string_view text, Language lang);

}  // namespace mrc
