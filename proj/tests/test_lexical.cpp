#include <doctest.h>

#include <cmath>

#include "infodens/corpus.hpp"
#include "infodens/error.hpp"
#include "infodens/lexical.hpp"
#include "infodens/rng.hpp"
#include "oracles.hpp"

using namespace infodens;

TEST_SUITE("lexical") {
  TEST_CASE("syllables") {
    CHECK(count_syllables("cat") == 1);
    CHECK(count_syllables("apple") == 2);
    CHECK(count_syllables("a") == 1);
    CHECK(count_syllables("the") == 1);
    CHECK(count_syllables("make") == 1);
    CHECK(count_syllables("rhythm") == 1);
    CHECK(count_syllables("banana") == 3);
    CHECK(count_syllables("xyz") == 1);
    CHECK(count_syllables("") == 1);
  }

  TEST_CASE("flesch hand oracles") {
    CHECK(flesch_reading_ease(make_document("d", "The cat sat on the mat.", {}, Split::Train)) ==
          oracle::flesch(6, 1, 6));
    CHECK(oracle::flesch(6, 1, 6) == doctest::Approx(116.145).epsilon(1e-15));
    CHECK(flesch_reading_ease(1, 1, 1) == doctest::Approx(121.22).epsilon(1e-15));
    CHECK_THROWS_AS(flesch_reading_ease(0, 1, 0), DomainError);
  }

  TEST_CASE("heavy syllable text reads below zero") {
    Document d = make_document(
        "j", "Hyperlipidemia cardiomyopathy hypercholesterolemia electroencephalography gastroenterology.", {},
        Split::Train);
    CHECK(flesch_reading_ease(d) < 0.0);
  }

  TEST_CASE("herdan analytic cases") {
    using V = std::vector<std::string>;
    CHECK(herdan_richness(V{"a", "a", "b", "b"}) == 0.5);
    CHECK(herdan_richness(V{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"}) == 1.0);
    CHECK(herdan_richness(V{"a", "a", "a"}) == 0.0);
    CHECK(herdan_richness(V{"a"}) == 1.0);
    CHECK_THROWS_AS(herdan_richness(V{}), DomainError);
  }

  TEST_CASE("herdan matches the oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<std::string> tokens;
      const std::size_t n = 2 + rng.below(80);
      for (std::size_t i = 0; i < n; ++i) tokens.push_back("w" + std::to_string(rng.below(30)));
      CHECK(herdan_richness(tokens) == doctest::Approx(oracle::herdan(tokens)).epsilon(1e-14));
    }
  }

  TEST_CASE("syllable count is at least one") {
    Rng rng(4);
    const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    for (int trial = 0; trial < 2000; ++trial) {
      std::string w;
      const std::size_t n = 1 + rng.below(14);
      for (std::size_t i = 0; i < n; ++i) w += letters[rng.below(letters.size())];
      CHECK(count_syllables(w) >= 1);
    }
  }

  TEST_CASE("flesch falls as syllables rise") {
    for (std::size_t words = 1; words <= 30; words += 7) {
      for (std::size_t sentences = 1; sentences <= 4; ++sentences) {
        for (std::size_t syl = words; syl < 4 * words; ++syl) {
          CHECK(flesch_reading_ease(words, sentences, syl + 1) < flesch_reading_ease(words, sentences, syl));
        }
      }
    }
  }

  TEST_CASE("herdan drops on a repeated token and ignores order") {
    Rng rng(12);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<std::string> tokens = {"x0", "x1"};
      const std::size_t n = rng.below(40);
      for (std::size_t i = 0; i < n; ++i) tokens.push_back("w" + std::to_string(rng.below(25)));
      const double before = herdan_richness(tokens);
      std::vector<std::string> longer = tokens;
      longer.push_back(tokens[rng.below(tokens.size())]);
      CHECK(herdan_richness(longer) < before);
      rng.shuffle(tokens);
      CHECK(herdan_richness(tokens) == before);
    }
  }

  TEST_CASE("profile") {
    LexicalProfile p = lexical_profile(make_document("d", "The cat sat. The dog ran.", {}, Split::Train));
    CHECK(p.word_count == 6);
    CHECK(p.sentence_count == 2);
    CHECK(p.syllable_count == 6);
    CHECK(p.type_count == 5);
    CHECK(p.flesch == oracle::flesch(6, 2, 6));
  }
}
