#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "infodens/corpus.hpp"
#include "infodens/error.hpp"

using namespace infodens;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("infodens_test_" + name);
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("tokenize splits on punctuation and whitespace") {
    CHECK(surfaces(tokenize("The cat sat.")) == std::vector<std::string>{"The", "cat", "sat"});
    CHECK(tokenize("").empty());
    CHECK(surfaces(tokenize("don't stop")) == std::vector<std::string>{"don't", "stop"});
    const auto t = tokenize("Caf\xc3\xa9 NOIR");
    REQUIRE(t.size() == 2);
    CHECK(t[0].normalized == "caf\xc3\xa9");
    CHECK(t[1].normalized == "noir");
    CHECK(t[1].begin == 6);
    CHECK(t[1].end == 10);
  }

  TEST_CASE("sentence boundaries") {
    auto ranges = [](const std::string& text) { return split_sentences(text, tokenize(text)); };
    CHECK(ranges("A b. C d.") == std::vector<SentenceRange>{{0, 2}, {2, 4}});
    CHECK(ranges("A b") == std::vector<SentenceRange>{{0, 2}});
    CHECK(ranges("Dr. Smith left.") == std::vector<SentenceRange>{{0, 3}});
    CHECK(ranges("Stop! Go? Now") == std::vector<SentenceRange>{{0, 1}, {1, 2}, {2, 3}});
    CHECK(ranges("").empty());
  }

  TEST_CASE("minimal record") {
    Corpus c = parse_corpus(R"({"id":"d1","text":"a b","labels":["L1"],"split":"train"})");
    REQUIRE(c.documents.size() == 1);
    CHECK(c.documents[0].tokens.size() == 2);
    CHECK(c.label_vocab == std::vector<std::string>{"L1"});
    CHECK(c.token_vocab.total() == 2);
  }

  TEST_CASE("empty input gives an empty corpus") {
    Corpus c = parse_corpus("");
    CHECK(c.documents.empty());
    CHECK(c.label_vocab.empty());
    CHECK(c.token_vocab.size() == 1);  // only the unknown entry
    CHECK(c.token_vocab.total() == 0);
  }

  TEST_CASE("schema violations report the line") {
    try {
      parse_corpus(R"({"id":"d1","labels":[]})");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
    try {
      parse_corpus("{\"id\":\"a\",\"text\":\"x\"}\n{not json}\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_corpus(R"({"id":"a","text":"x","split":"dev"})"), ValidationError);
    CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}"), DuplicateError);
    CHECK_THROWS_AS(parse_corpus(R"({"id":"a","text":" ... "})"), ValidationError);
  }

  TEST_CASE("vocabulary counts train tokens and prunes rare ones") {
    const std::string jsonl =
        "{\"id\":\"a\",\"text\":\"x x y\",\"split\":\"train\"}\n"
        "{\"id\":\"b\",\"text\":\"x z\",\"split\":\"train\"}\n"
        "{\"id\":\"c\",\"text\":\"q q q\",\"split\":\"test\"}\n";
    Corpus c = parse_corpus(jsonl, CorpusOptions{2});
    CHECK(c.token_vocab.contains("x"));
    CHECK_FALSE(c.token_vocab.contains("y"));
    CHECK_FALSE(c.token_vocab.contains("q"));
    CHECK(c.token_vocab.frequency(c.token_vocab.id("x")) == 3);
    CHECK(c.token_vocab.frequency(Vocabulary::kUnknownId) == 2);
    CHECK(c.token_vocab.total() == 5);
    CHECK(c.split(Split::Test).size() == 1);
  }

  TEST_CASE("labels are sorted and deduplicated") {
    Document d = make_document("d", "text", {"b", "a", "b"}, Split::Valid);
    CHECK(d.labels == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("save and load round trip") {
    const std::string jsonl =
        "{\"id\":\"a\",\"text\":\"Dr. Who met \\u00e9mile. Then left!\",\"labels\":[\"L2\",\"L1\"],\"split\":\"train\"}\n"
        "{\"id\":\"b\",\"text\":\"x z\",\"labels\":[],\"split\":\"valid\"}\n";
    Corpus c = parse_corpus(jsonl);
    const auto path = temp_path("roundtrip.jsonl");
    save_corpus(c, path);
    Corpus back = load_corpus(path);
    CHECK(back == c);
    save_corpus(back, path);
    std::ifstream in(path);
    std::string first((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(first == serialize_corpus(c));
    std::filesystem::remove(path);
  }

  TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(load_corpus(temp_path("does_not_exist.jsonl")), IoError);
  }
}
