#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "infodens/corpus.hpp"
#include "infodens/error.hpp"
#include "infodens/probability.hpp"
#include "infodens/rng.hpp"

using namespace infodens;

namespace {

Corpus train_corpus(const std::vector<std::string>& texts) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    docs.push_back(make_document("d" + std::to_string(i), texts[i], {}, Split::Train));
  }
  return build_corpus(std::move(docs));
}

}  // namespace

TEST_SUITE("probability") {
  TEST_CASE("hand-counted bigrams") {
    Corpus c = train_corpus({"a b", "a b"});
    NgramModel k0 = train_ngram(c, 2, 0.0);
    CHECK(k0.prob("b", {"a"}) == 1.0);
    NgramModel k1 = train_ngram(c, 2, 1.0);
    CHECK(k1.vocab_size() == 4);
    CHECK(k1.prob("b", {"a"}) == 0.5);
  }

  TEST_CASE("unigram over a single type") {
    Corpus c = train_corpus({"a a a"});
    NgramModel m = train_ngram(c, 1, 0.0);
    CHECK(m.prob("a", {}) == 1.0);
  }

  TEST_CASE("token_probs") {
    Corpus c = train_corpus({"a b"});
    NgramModel m = train_ngram(c, 2, 0.0);
    auto s = token_probs(m, c.documents[0]);
    CHECK(s.probs == std::vector<double>{1.0, 1.0});
    CHECK(s.tokens == std::vector<std::string>{"a", "b"});
    CHECK(token_probs(m, make_document("e", "", {}, Split::Test)).empty());

    NgramModel smooth = train_ngram(c, 2, 0.1);
    auto unseen = token_probs(smooth, make_document("u", "a zebra", {}, Split::Test));
    CHECK(unseen.probs[1] > 0.0);
    CHECK(unseen.probs[1] == doctest::Approx(smooth.prob(Vocabulary::kUnknownId, {smooth.id("a")})));
    CHECK_THROWS_AS(token_probs(m, make_document("u", "b a", {}, Split::Test)), DomainError);
  }

  TEST_CASE("context resets at sentence boundaries") {
    Corpus c = train_corpus({"a b. a b."});
    NgramModel m = train_ngram(c, 2, 0.0);
    auto s = token_probs(m, c.documents[0]);
    CHECK(s.probs == std::vector<double>{1.0, 1.0, 1.0, 1.0});
  }

  TEST_CASE("counts match a brute-force trigram tally") {
    Corpus c = train_corpus({"x y z x y. y z", "z z x. x y z"});
    NgramModel m = train_ngram(c, 3, 0.0);
    std::map<std::vector<std::string>, std::map<std::string, double>> counts;
    for (const auto& d : c.documents) {
      for (const auto& sent : d.sentences) {
        std::vector<std::string> padded = {"<s>", "<s>"};
        for (std::size_t t = sent.begin; t < sent.end; ++t) padded.push_back(d.tokens[t].normalized);
        padded.push_back("</s>");
        for (std::size_t i = 2; i < padded.size(); ++i) counts[{padded[i - 2], padded[i - 1]}][padded[i]] += 1.0;
      }
    }
    for (const auto& [ctx, next] : counts) {
      double total = 0.0;
      for (const auto& [w, n] : next) total += n;
      for (const auto& [w, n] : next) {
        auto to_id = [&](const std::string& s) -> std::uint32_t {
          if (s == "<s>") return m.begin_id();
          if (s == "</s>") return m.end_id();
          return m.id(s);
        };
        CHECK(m.prob(to_id(w), {to_id(ctx[0]), to_id(ctx[1])}) == doctest::Approx(n / total).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("distributions sum to one") {
    Corpus c = train_corpus({"the cat sat on the mat", "the dog sat. a cat ran"});
    for (int order : {1, 2, 3}) {
      NgramModel m = train_ngram(c, order, 0.5);
      for (const auto& ctx : m.observed_contexts()) {
        double sum = 0.0;
        for (std::uint32_t w = 0; w < m.vocab_size(); ++w) sum += m.prob(w, ctx);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("larger k flattens every observed context") {
    Corpus c = train_corpus({"the cat sat on the mat", "the dog sat. a cat ran", "the cat ran"});
    for (int order : {2, 3}) {
      double previous_gap = 2.0;
      for (double k : {0.01, 0.1, 0.5, 1.0, 5.0}) {
        NgramModel m = train_ngram(c, order, k);
        double worst_gap = 0.0;
        for (const auto& ctx : m.observed_contexts()) {
          double lo = 1.0;
          double hi = 0.0;
          for (std::uint32_t w = 0; w < m.vocab_size(); ++w) {
            lo = std::min(lo, m.prob(w, ctx));
            hi = std::max(hi, m.prob(w, ctx));
          }
          worst_gap = std::max(worst_gap, hi - lo);
        }
        CHECK(worst_gap < previous_gap);
        previous_gap = worst_gap;
      }
    }
  }

  TEST_CASE("sequence_log_prob") {
    TokenProbabilitySeries s{"d", {"a", "b"}, {1.0, 1.0}};
    CHECK(sequence_log_prob(s) == 0.0);
    s.probs = {std::exp(-1.0), std::exp(-1.0)};
    CHECK(sequence_log_prob(s) == doctest::Approx(-2.0).epsilon(1e-15));
    s.probs = {0.5, 0.25};
    CHECK(sequence_log_prob(s) == doctest::Approx(std::log(0.125)).epsilon(1e-15));
    CHECK_THROWS_AS(sequence_log_prob(TokenProbabilitySeries{}), DomainError);
  }

  TEST_CASE("sidecar validation") {
    Corpus c = parse_corpus(R"({"id":"d","text":"a b"})");
    auto ok = parse_external_probs(R"({"doc_id":"d","tokens":["a","b"],"probs":[0.5,0.25]})", c);
    CHECK(ok.at("d").probs == std::vector<double>{0.5, 0.25});
    CHECK_THROWS_AS(parse_external_probs(R"({"doc_id":"d","tokens":["a","b"],"probs":[1.5,0.2]})", c),
                    ValidationError);
    CHECK_THROWS_AS(parse_external_probs(R"({"doc_id":"d","tokens":["a","b"],"probs":[0.0,0.2]})", c),
                    ValidationError);
    try {
      parse_external_probs(R"({"doc_id":"d","tokens":["a","c"],"probs":[0.5,0.5]})", c);
      FAIL("expected an alignment error");
    } catch (const AlignmentError& e) {
      CHECK(e.index() == 1);
      CHECK(e.doc_id() == "d");
    }
    CHECK_THROWS_AS(parse_external_probs(R"({"doc_id":"x","tokens":["a"],"probs":[0.5]})", c), ValidationError);
    CHECK_THROWS_AS(load_external_probs("/nonexistent/sidecar.jsonl", c), IoError);
  }

  TEST_CASE("bad model parameters") {
    Corpus c = train_corpus({"a"});
    CHECK_THROWS_AS(train_ngram(c, 0, 0.1), DomainError);
    CHECK_THROWS_AS(train_ngram(c, 2, -1.0), DomainError);
    Corpus no_train = parse_corpus(R"({"id":"d","text":"a","split":"test"})");
    CHECK_THROWS_AS(train_ngram(no_train, 2, 0.1), TrainingError);
  }
}
