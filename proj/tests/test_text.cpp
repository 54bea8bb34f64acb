#include "doctest.h"

#include "mrc/errors.hpp"
#include "mrc/text.hpp"

using namespace mrc;
using Words = std::vector<std::string>;

TEST_CASE("english tokenization peels punctuation and lowercases") {
  CHECK(tokenize_words("Mount Kilimanjaro, Africa", Language::kEnglish) ==
        Words{"mount", "kilimanjaro", ",", "africa"});
  CHECK(tokenize_words("  \"Hi!\"  ", Language::kEnglish) == Words{"\"", "hi", "!", "\""});
  CHECK(tokenize_words("", Language::kEnglish).empty());
}

TEST_CASE("token byte offsets point into the source") {
  const std::string s = "Ab, cd";
  auto toks = tokenize(s, Language::kEnglish);
  REQUIRE(toks.size() == 3);
  CHECK(s.substr(toks[0].begin, toks[0].end - toks[0].begin) == "Ab");
  CHECK(toks[1].text == ",");
  CHECK(toks[2].begin == 4);
}

TEST_CASE("chinese splits per character") {
  CHECK(tokenize_words("北京 大学", Language::kChinese) == Words{"北", "京", "大", "学"});
  CHECK(utf8_chars("a北") == Words{"a", "北"});
}

TEST_CASE("detokenize") {
  const Words en = {"the", "big", "dog"};
  CHECK(detokenize(en, 1, 2, Language::kEnglish) == "big dog");
  const Words zh = {"北", "京"};
  CHECK(detokenize(zh, 0, 1, Language::kChinese) == "北京");
}

TEST_CASE("sentence splitting") {
  const std::string s = "One. Two!\nThree";
  auto r = split_sentences(s, Language::kEnglish);
  REQUIRE(r.size() == 3);
  CHECK(s.substr(r[0].begin, r[0].end - r[0].begin) == "One.");
  CHECK(s.substr(r[2].begin, r[2].end - r[2].begin).find("Three") != std::string::npos);
  const std::string z = "你好。再见！";
  CHECK(split_sentences(z, Language::kChinese).size() == 2);
  CHECK(split_sentences("   ", Language::kEnglish).empty());
}

TEST_CASE("language names") {
  CHECK(parse_language("en") == Language::kEnglish);
  CHECK(parse_language("zh") == Language::kChinese);
  CHECK_THROWS_AS(parse_language("fr"), ConfigError);
}
