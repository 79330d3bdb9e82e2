#include <doctest.h>

#include <cmath>
#include <numbers>

#include "infodens/corpus.hpp"
#include "infodens/density.hpp"
#include "infodens/error.hpp"
#include "infodens/probability.hpp"
#include "infodens/rng.hpp"
#include "oracles.hpp"

using namespace infodens;

namespace {

TokenProbabilitySeries series(std::vector<double> probs) {
  TokenProbabilitySeries s;
  s.doc_id = "d";
  s.probs = std::move(probs);
  s.tokens.assign(s.probs.size(), "w");
  return s;
}

}  // namespace

TEST_SUITE("density") {
  TEST_CASE("surprisal") {
    CHECK(surprisal(1.0) == 0.0);
    CHECK(surprisal(std::exp(-2.0)) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(surprisal(0.5) == doctest::Approx(0.6931471805599453).epsilon(1e-15));
    CHECK(surprisal(0.5, LogBase::Bits) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(unit_scale(LogBase::Bits) == doctest::Approx(1.0 / std::numbers::ln2).epsilon(1e-15));
    CHECK_THROWS_AS(surprisal(0.0), DomainError);
    CHECK_THROWS_AS(surprisal(1.5), DomainError);
  }

  TEST_CASE("document surprisal") {
    auto a = document_surprisal(series({1.0, 1.0}));
    CHECK(a.series == std::vector<double>{0.0, 0.0});
    CHECK(a.mean == 0.0);
    auto b = document_surprisal(series({std::exp(-1.0), std::exp(-3.0)}));
    CHECK(b.series[0] == doctest::Approx(1.0));
    CHECK(b.series[1] == doctest::Approx(3.0));
    CHECK(b.mean == doctest::Approx(2.0));
    CHECK(document_surprisal(series({0.5, 0.25, 0.125})).mean == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  }

  TEST_CASE("frequency entropy") {
    using V = std::vector<std::string>;
    CHECK(std::fabs(entropy_frequency(V{"a", "b", "c", "d"}) - std::log(4.0)) <= 1e-12);
    CHECK(entropy_frequency(V{"a", "a", "a", "a"}) == 0.0);
    CHECK(entropy_frequency(make_document("d", "the cat the dog", {}, Split::Train)) ==
          doctest::Approx(-(0.5 * std::log(0.5) + 2 * 0.25 * std::log(0.25))).epsilon(1e-14));
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      V tokens;
      const std::size_t n = 1 + rng.below(60);
      for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::string(1, static_cast<char>('a' + rng.below(8))));
      CHECK(entropy_frequency(tokens) == doctest::Approx(oracle::shannon_entropy(tokens)).epsilon(1e-12));
      CHECK(entropy_frequency(tokens, LogBase::Bits) ==
            doctest::Approx(oracle::shannon_entropy(tokens) / std::log(2.0)).epsilon(1e-12));
    }
  }

  TEST_CASE("contextual entropy") {
    CHECK(entropy_contextual(series({1.0, 1.0, 1.0})) == 0.0);
    CHECK(entropy_contextual(series({0.5, 0.5})) == doctest::Approx(0.34657359027997264).epsilon(1e-14));
    CHECK(entropy_contextual(series({std::exp(-1.0)})) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }

  TEST_CASE("uid deviation") {
    UidConfig sq;
    sq.mu_c = 2.0;
    const std::vector<double> flat = {2.0, 2.0, 2.0};
    const std::vector<double> split = {1.0, 3.0};
    CHECK(uid_deviation(flat, sq) == 0.0);
    CHECK(uid_deviation(split, sq) == 1.0);
    UidConfig ab = sq;
    ab.distance = UidDistance::Absolute;
    CHECK(uid_deviation(split, ab) == 1.0);
    const std::vector<double> spread = {0.0, 4.0};
    CHECK(uid_deviation(spread, sq) == 4.0);
    CHECK(uid_deviation(spread, ab) == 2.0);
  }

  TEST_CASE("sentence surprisal") {
    const std::vector<double> tokens = {1.0, 3.0, 5.0};
    auto s = sentence_surprisal(tokens, {{0, 2}, {2, 3}});
    CHECK(s == std::vector<double>{2.0, 5.0});
  }

  TEST_CASE("corpus density with a sidecar") {
    Corpus c = parse_corpus(
        "{\"id\":\"a\",\"text\":\"x y\"}\n"
        "{\"id\":\"b\",\"text\":\"x y\"}\n"
        "{\"id\":\"one\",\"text\":\"z\"}\n");
    const double e0 = 1.0;
    const double e2 = std::exp(-2.0);
    SeriesMap map;
    map["a"] = TokenProbabilitySeries{"a", {"x", "y"}, {e0, e0}};
    map["b"] = TokenProbabilitySeries{"b", {"x", "y"}, {e2, e2}};
    SidecarProvider provider(map, "memory");
    DensityOptions opts;
    DensityRun run = corpus_density(c, provider, opts);
    REQUIRE(run.profiles.size() == 2);
    REQUIRE(run.failures.size() == 1);
    CHECK(run.failures[0].doc_id == "one");
    CHECK(run.uid.mu_c == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(run.profiles[0].uid_deviation == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(run.profiles[1].uid_deviation == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(run.profiles[0].mean_surprisal == 0.0);

    map["one"] = TokenProbabilitySeries{"one", {"z"}, {1.0}};
    Corpus single = parse_corpus("{\"id\":\"one\",\"text\":\"z\"}\n");
    DensityRun lone = corpus_density(single, SidecarProvider(map, "memory"), opts);
    CHECK(lone.profiles[0].mean_surprisal == 0.0);
    CHECK(lone.profiles[0].uid_deviation == 0.0);
  }

  TEST_CASE("identical constant surprisal gives zero deviation") {
    Corpus c = parse_corpus("{\"id\":\"a\",\"text\":\"x y\"}\n{\"id\":\"b\",\"text\":\"x y z\"}\n");
    SeriesMap map;
    map["a"] = TokenProbabilitySeries{"a", {"x", "y"}, {0.25, 0.25}};
    map["b"] = TokenProbabilitySeries{"b", {"x", "y", "z"}, {0.25, 0.25, 0.25}};
    DensityRun run = corpus_density(c, SidecarProvider(map, "memory"), DensityOptions{});
    CHECK(run.uid.mu_c == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    for (const auto& p : run.profiles) CHECK(p.uid_deviation == doctest::Approx(0.0));
  }

  TEST_CASE("thread count does not change results") {
    std::string jsonl;
    Rng rng(3);
    for (int d = 0; d < 40; ++d) {
      std::string text;
      for (int t = 0; t < 30; ++t) text += std::string(1, static_cast<char>('a' + rng.below(6))) + (t % 7 == 6 ? ". " : " ");
      jsonl += "{\"id\":\"d" + std::to_string(d) + "\",\"text\":\"" + text + "\"}\n";
    }
    Corpus c = parse_corpus(jsonl);
    NgramProvider provider(std::make_shared<const NgramModel>(train_ngram(c, 3, 0.1)));
    DensityOptions one;
    DensityOptions four;
    four.threads = 4;
    auto a = corpus_density(c, provider, one);
    auto b = corpus_density(c, provider, four);
    REQUIRE(a.profiles.size() == b.profiles.size());
    CHECK(a.uid.mu_c == b.uid.mu_c);
    for (std::size_t i = 0; i < a.profiles.size(); ++i) {
      CHECK(a.profiles[i].uid_deviation == b.profiles[i].uid_deviation);
      CHECK(a.profiles[i].entropy_contextual == b.profiles[i].entropy_contextual);
    }
  }
}
