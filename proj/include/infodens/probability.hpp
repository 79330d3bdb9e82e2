#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "infodens/corpus.hpp"

namespace infodens {

// Per-token conditional probabilities for one document, aligned 1:1 with
// the document's normalized tokens.
struct TokenProbabilitySeries {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  bool empty() const { return probs.empty(); }
};

// Throws ValidationError if lengths differ or any prob is outside (0, 1].
void validate_series(const TokenProbabilitySeries& series);

// Sum of natural logs of the probabilities. Throws DomainError when empty.
double sequence_log_prob(const TokenProbabilitySeries& series);

// Add-k smoothed n-gram model over normalized tokens.
//
// Ids 0..V-1 are the predictable symbols: the corpus vocabulary (id 0 is
// <unk>) followed by the end-of-sentence marker. The begin marker only ever
// appears in contexts and is not part of V.
class NgramModel {
 public:
  using Context = std::vector<std::uint32_t>;

  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<std::uint32_t, std::uint64_t> next;
    bool operator==(const ContextCounts&) const = default;
  };

  static constexpr std::string_view kEndMarker = "</s>";
  static constexpr std::string_view kBeginMarker = "<s>";

  NgramModel(int order, double smoothing_k, Vocabulary vocab);

  int order() const { return order_; }
  double smoothing_k() const { return k_; }
  // |V| including <unk> and the end marker.
  std::size_t vocab_size() const { return vocab_.size() + 1; }
  std::uint32_t end_id() const { return static_cast<std::uint32_t>(vocab_.size()); }
  std::uint32_t begin_id() const { return static_cast<std::uint32_t>(vocab_.size() + 1); }
  std::uint32_t id(std::string_view token) const {
    return static_cast<std::uint32_t>(vocab_.id(token));
  }
  const Vocabulary& vocab() const { return vocab_; }

  // Adds one sentence of normalized tokens to the count tables.
  void observe(const std::vector<std::string>& sentence);

  // prob(w | context) with |context| == order - 1 (older symbols first).
  double prob(std::uint32_t word, const Context& context) const;
  double prob(std::string_view word, const std::vector<std::string>& context) const;

  // Count tables for n-grams of length n, keyed by the (n-1)-symbol context.
  const std::map<Context, ContextCounts>& table(int n) const { return tables_.at(n - 1); }
  std::vector<Context> observed_contexts() const;

 private:
  int order_;
  double k_;
  Vocabulary vocab_;
  std::vector<std::map<Context, ContextCounts>> tables_;
};

// Counts over the train split, sentence by sentence. Throws TrainingError if
// the train split is empty, DomainError for order < 1 or k < 0.
NgramModel train_ngram(const Corpus& corpus, int order = 3, double smoothing_k = 0.1);

// probs[t] = prob(token_t | previous order-1 tokens in the same sentence).
// Throws DomainError if a conditional probability is zero (k = 0 with an
// unseen event).
TokenProbabilitySeries token_probs(const NgramModel& model, const Document& doc);

// Source of TokenProbabilitySeries for documents. Implementations must be
// safe to call concurrently.
class ProbabilityProvider {
 public:
  virtual ~ProbabilityProvider() = default;
  // Throws when no series is available for the document.
  virtual TokenProbabilitySeries series(const Document& doc) const = 0;
  virtual std::string name() const = 0;
};

class NgramProvider : public ProbabilityProvider {
 public:
  explicit NgramProvider(std::shared_ptr<const NgramModel> model) : model_(std::move(model)) {}
  TokenProbabilitySeries series(const Document& doc) const override {
    return token_probs(*model_, doc);
  }
  std::string name() const override;

 private:
  std::shared_ptr<const NgramModel> model_;
};

using SeriesMap = std::map<std::string, TokenProbabilitySeries>;

// Reads the probability sidecar (one {"doc_id","tokens","probs"} object per
// line) and checks each series against the corpus tokenization.
SeriesMap load_external_probs(const std::filesystem::path& path, const Corpus& corpus);
SeriesMap parse_external_probs(std::string_view jsonl, const Corpus& corpus);

class SidecarProvider : public ProbabilityProvider {
 public:
  SidecarProvider(SeriesMap series, std::string origin)
      : series_(std::move(series)), origin_(std::move(origin)) {}
  TokenProbabilitySeries series(const Document& doc) const override;
  std::string name() const override { return "sidecar:" + origin_; }

 private:
  SeriesMap series_;
  std::string origin_;
};

}  // namespace infodens
