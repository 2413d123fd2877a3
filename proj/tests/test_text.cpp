#include <doctest.h>

#include "support.hpp"

using namespace cqkit;

TEST_CASE("normalize lowercases and strips punctuation") {
  CHECK(normalize("Windows 10!") == TokenList{"windows", "10"});
  CHECK(normalize("").empty());
  CHECK(normalize("  \t\n ").empty());
  CHECK(normalize("a-b,c.d") == TokenList{"a", "b", "c", "d"});
  CHECK(normalize("Crème BRÛLÉE") == TokenList{"crème", "brûlée"});
  CHECK(normalize("ΑΘΗΝΑ Москва") == TokenList{"αθηνα", "москва"});
  CHECK(normalize("“quoted” — dash… ¿qué?") == TokenList{"quoted", "dash", "qué"});
}

TEST_CASE("normalize treats invalid UTF-8 bytes as separators") {
  const std::string bad = std::string("ab") + char(0xff) + "cd" + char(0xc3);
  CHECK(normalize(bad) == TokenList{"ab", "cd"});
}

TEST_CASE("stopword filtering follows the bundled list") {
  const std::string phrase = "things to do in Leiden";
  // Oracle: filter by hand against the list itself.
  TokenList expected;
  for (const auto &t : normalize(phrase)) {
    const auto list = stopword_list();
    if (std::find(list.begin(), list.end(), t) == list.end())
      expected.push_back(t);
  }
  CHECK(expected == TokenList{"things", "leiden"});
  CHECK(normalize(phrase, true) == expected);
}

TEST_CASE("bundled stopword list") {
  const auto list = stopword_list();
  CHECK(list.size() == 179);
  CHECK(list.front() == "i");
  std::size_t single = 0;
  for (auto w : list) {
    CHECK(is_stopword(w));
    const auto tokens = normalize(w);
    if (tokens.size() == 1) {
      CHECK(tokens[0] == w);
      ++single;
    }
  }
  CHECK(single > 140);
  // Contractions split at the apostrophe; both halves are listed words.
  CHECK(normalize("don't", true).empty());
  CHECK_FALSE(is_stopword("leiden"));
}

TEST_CASE("normalize is idempotent on its own output") {
  SplitMix rng(11);
  const std::vector<std::string> pieces{"Foo", "bar!", "ÉTÉ", "x-y", " ", "  ", "10",
                                        "?", "naïve", "Ωmega", "the", "\xe2\x80\x94"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto n = rng.uniform(8);
    for (std::size_t i = 0; i < n; ++i)
      text += testing::pick(rng, pieces) + (rng.uniform(2) ? " " : "");
    const auto tokens = normalize(text);
    CHECK(normalize(join_tokens(tokens)) == tokens);
    CHECK(normalized_key(text) == join_tokens(tokens));
    CHECK(normalize(text, true) == normalize(join_tokens(normalize(text, true)), true));
  }
}

TEST_CASE("contains_sequence") {
  const TokenList hay{"a", "b", "c", "b", "d"};
  CHECK(contains_sequence(hay, TokenList{"b", "c"}));
  CHECK(contains_sequence(hay, TokenList{"b", "d"}));
  CHECK(contains_sequence(hay, hay));
  CHECK_FALSE(contains_sequence(hay, TokenList{"c", "d"}));
  CHECK_FALSE(contains_sequence(hay, TokenList{}));
  CHECK_FALSE(contains_sequence(TokenList{"a"}, TokenList{"a", "b"}));
}
