#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "infodens/analytics.hpp"
#include "infodens/attention.hpp"
#include "infodens/error.hpp"
#include "infodens/rng.hpp"
#include "infodens/selection.hpp"
#include "oracles.hpp"

using namespace infodens;

namespace {

AttentionScores scores_of(const std::string& id, std::vector<double> pooled) {
  AttentionScores s;
  s.doc_id = id;
  s.pooled = std::move(pooled);
  s.matrix = Matrix(s.pooled.size(), 1);
  for (std::size_t i = 0; i < s.pooled.size(); ++i) s.matrix(i, 0) = s.pooled[i];
  return s;
}

std::vector<std::string> normalized(const Document& d) { return d.normalized_tokens(); }

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("nearest rank quantile") {
    const std::vector<double> v = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    CHECK(nearest_rank_quantile(v, 0.875) == 0.7);
    auto sel = select_words(scores_of("d", v), SelectionCriteria::quantile(0.875));
    CHECK(sel.selected_indices == std::vector<std::size_t>{6, 7});
    CHECK(nearest_rank_quantile(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.7) == 7.0);
    CHECK_THROWS_AS(nearest_rank_quantile(std::vector<double>{}, 0.5), DomainError);
    CHECK_THROWS_AS(nearest_rank_quantile(v, 1.0), DomainError);
  }

  TEST_CASE("quantile matches enumeration on every short document") {
    Rng rng(17);
    for (std::size_t n = 1; n <= 12; ++n) {
      for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(n);
        for (auto& x : v) x = static_cast<double>(rng.below(5)) / 4.0;
        for (double q : {0.1, 0.25, 0.5, 0.7, 0.875, 0.9, 0.99}) {
          CHECK(nearest_rank_quantile(v, q) == oracle::quantile_by_enumeration(v, q));
        }
      }
    }
  }

  TEST_CASE("ties and fallback") {
    auto all = select_words(scores_of("d", {0.25, 0.25, 0.25, 0.25}), SelectionCriteria::quantile(0.875));
    CHECK(all.selected_indices.size() == 4);
    auto fb = select_words(scores_of("d", {0.1, 0.7, 0.3, 0.7}), SelectionCriteria::fixed(0.9));
    CHECK(fb.fallback);
    CHECK(fb.selected_indices == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(SelectionCriteria::quantile(0.0).validate(), ValidationError);
  }

  TEST_CASE("quantile bound with distinct scores") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(60);
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) + rng.uniform() * 0.5;
      rng.shuffle(v);
      const double q = 0.875;
      auto sel = select_words(scores_of("d", v), SelectionCriteria::quantile(q));
      const double k = (1.0 - q) * static_cast<double>(n);
      CHECK(sel.selected_indices.size() >= static_cast<std::size_t>(std::floor(k)));
      CHECK(sel.selected_indices.size() <= static_cast<std::size_t>(std::ceil(k)) + 1);
    }
  }

  TEST_CASE("threshold monotonicity") {
    Rng rng(8);
    std::vector<double> v(40);
    for (auto& x : v) x = rng.uniform();
    std::vector<std::size_t> previous = select_positions(v, -1.0);
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      auto now = select_positions(v, t);
      CHECK(std::includes(previous.begin(), previous.end(), now.begin(), now.end()));
      previous = now;
    }
  }

  TEST_CASE("threshold at or below the minimum keeps everything") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(1 + rng.below(30));
      for (auto& x : v) x = rng.uniform();
      const double lo = *std::min_element(v.begin(), v.end());
      for (double t : {lo, lo - 0.1, -1.0}) {
        auto sel = select_words(scores_of("d", v), SelectionCriteria::fixed(t));
        CHECK(sel.selected_indices.size() == v.size());
        CHECK_FALSE(sel.fallback);
      }
    }
  }

  TEST_CASE("calibration examples") {
    CHECK(calibrate_threshold({scores_of("d", {0.2, 0.9})}, 1) == 0.9);
    std::vector<AttentionScores> docs = {scores_of("a", {0.1, 0.5, 0.3}), scores_of("b", {0.2, 0.4}),
                                         scores_of("c", {0.6, 0.05, 0.7})};
    const double t_all = calibrate_threshold(docs, 10);
    CHECK(mean_selected_length(docs, t_all) == doctest::Approx(8.0 / 3.0));
    CHECK(t_all == 0.05);
  }

  TEST_CASE("calibration matches enumeration") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n_docs = 1 + rng.below(5);
      std::vector<AttentionScores> docs;
      std::vector<std::vector<double>> raw;
      for (std::size_t d = 0; d < n_docs; ++d) {
        std::vector<double> v(1 + rng.below(12));
        for (auto& x : v) x = static_cast<double>(rng.below(20)) / 19.0;
        raw.push_back(v);
        docs.push_back(scores_of("d" + std::to_string(d), v));
      }
      const std::size_t target = 1 + rng.below(10);
      const double expected = oracle::calibrate_by_enumeration(raw, static_cast<double>(target));
      CHECK(calibrate_threshold(docs, target) == expected);
      CHECK(mean_selected_length(docs, expected) == oracle::mean_length_at(raw, expected));
    }
  }

  TEST_CASE("reduced documents") {
    Document d = make_document("d", "Alpha beta gamma. Delta epsilon! Zeta", {"L"}, Split::Test);
    Document r = reduced_document(d, std::vector<std::size_t>{0, 2, 4, 5});
    CHECK(normalized(r) == std::vector<std::string>{"alpha", "gamma", "epsilon", "zeta"});
    CHECK(r.sentences.size() == 3);
    CHECK(r.labels == d.labels);
    CHECK(r.split == d.split);
    std::vector<std::size_t> everything(d.tokens.size());
    for (std::size_t i = 0; i < everything.size(); ++i) everything[i] = i;
    CHECK(normalized(reduced_document(d, everything)) == normalized(d));
    CHECK_THROWS_AS(reduced_document(d, std::vector<std::size_t>{2, 1}), ContractViolation);
  }

  TEST_CASE("corpus reduction, scaling and audit") {
    SynthSpec spec;
    spec.labels = 4;
    spec.docs_per_label = 6;
    spec.labels_per_doc = 2;
    Corpus c = synthesize_corpus(spec, 5);
    AttentionConfig cfg;
    cfg.d_h = 8;
    cfg.epochs = 2;
    AttentionModel model = train_attention(c, cfg);

    Reduction keep_all = reduce_corpus(c, model, SelectionCriteria::fixed(-1.0));
    REQUIRE(keep_all.corpus.documents.size() == c.documents.size());
    for (std::size_t i = 0; i < c.documents.size(); ++i) {
      CHECK(normalized(keep_all.corpus.documents[i]) == normalized(c.documents[i]));
    }

    Reduction q = reduce_corpus(c, model, SelectionCriteria::quantile(0.875));
    for (std::size_t i = 0; i < c.documents.size(); ++i) {
      CHECK(q.corpus.documents[i].tokens.size() == q.audit[i].selected_indices.size());
      CHECK(q.corpus.documents[i].tokens.size() < c.documents[i].tokens.size());
    }

    Corpus single = build_corpus({make_document("one", "keyword", {"L000"}, Split::Test)});
    AttentionModel m1 = model;
    Reduction r1 = reduce_corpus(single, m1, SelectionCriteria::fixed(10.0));
    CHECK(normalized(r1.corpus.documents[0]) == std::vector<std::string>{"keyword"});

    const auto path = std::filesystem::temp_directory_path() / "infodens_test_audit.jsonl";
    write_audit(q.audit, path);
    auto back = read_audit(path);
    REQUIRE(back.size() == q.audit.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].doc_id == q.audit[i].doc_id);
      CHECK(back[i].selected_indices == q.audit[i].selected_indices);
      CHECK(back[i].threshold == q.audit[i].threshold);
    }
    std::filesystem::remove(path);

    const Document& doc = c.documents[0];
    const auto& sel = q.audit[0].selected_indices;
    CHECK(scaled_predict(model, doc, sel, doc.id, 1.0, ScaleTarget::Selected) == predict(model, doc));
    CHECK(scaled_predict(model, doc, sel, doc.id, 1.0, ScaleTarget::NonSelected) == predict(model, doc));
    AttentionModel zero = model;
    zero.embeddings.fill(0.0);
    auto a = scaled_predict(model, doc, sel, doc.id, 0.0, ScaleTarget::Selected);
    std::vector<double> scale(doc.tokens.size(), 0.0);
    auto zeroed = predict(model, doc, scale);
    std::vector<std::size_t> all_positions(doc.tokens.size());
    for (std::size_t i = 0; i < all_positions.size(); ++i) all_positions[i] = i;
    CHECK(scaled_predict(model, doc, all_positions, doc.id, 0.0, ScaleTarget::Selected) == zeroed);
    CHECK(zeroed == predict(zero, doc));
    (void)a;
    CHECK_THROWS_AS(scaled_predict(model, doc, sel, "other", 0.5, ScaleTarget::Selected), ContractViolation);
    CHECK_THROWS_AS(scaled_predict(model, doc, sel, doc.id, -0.5, ScaleTarget::Selected), DomainError);
  }
}
