#pragma once

#include <span>
#include <string>
#include <vector>

#include "infodens/corpus.hpp"
#include "infodens/probability.hpp"

namespace infodens {

enum class LogBase { Nats, Bits };

std::string_view to_string(LogBase base);
LogBase parse_log_base(std::string_view tag);

// Multiplier converting a natural-log quantity into the requested unit.
double unit_scale(LogBase base);

// -log(prob). Throws DomainError unless prob is in (0, 1].
double surprisal(double prob, LogBase base = LogBase::Nats);

struct SurprisalSummary {
  std::vector<double> series;
  double mean = 0.0;
};

SurprisalSummary document_surprisal(const TokenProbabilitySeries& series, LogBase base = LogBase::Nats);

// Shannon entropy of the document's normalized-token type histogram.
double entropy_frequency(const Document& doc, LogBase base = LogBase::Nats);
double entropy_frequency(const std::vector<std::string>& tokens, LogBase base = LogBase::Nats);

// -(1/n) sum_t p_t log p_t over token positions.
double entropy_contextual(const TokenProbabilitySeries& series, LogBase base = LogBase::Nats);

enum class UidDistance { Squared, Absolute };
enum class RateSource { CorpusMean, DocumentMean };
enum class UidUnit { Token, Sentence };

std::string_view to_string(UidDistance d);
std::string_view to_string(RateSource r);
std::string_view to_string(UidUnit u);
UidDistance parse_uid_distance(std::string_view tag);
RateSource parse_rate_source(std::string_view tag);
UidUnit parse_uid_unit(std::string_view tag);

struct UidConfig {
  UidDistance distance = UidDistance::Squared;
  RateSource rate_source = RateSource::CorpusMean;
  UidUnit unit = UidUnit::Token;
  // Average information rate. Resolved by corpus_density for CorpusMean;
  // replaced per document for DocumentMean.
  double mu_c = 0.0;
};

// (1/n) sum_i distance(series_i, mu_c).
double uid_deviation(std::span<const double> series, const UidConfig& config);

// Mean surprisal of each sentence; the UID unit series under UidUnit::Sentence.
std::vector<double> sentence_surprisal(std::span<const double> token_surprisal,
                                       const std::vector<SentenceRange>& sentences);

struct DensityProfile {
  std::string doc_id;
  std::vector<double> surprisal_series;
  double mean_surprisal = 0.0;
  double entropy_frequency = 0.0;
  double entropy_contextual = 0.0;
  double uid_deviation = 0.0;
  double mu_c = 0.0;  // rate actually used for this document
};

struct DocumentFailure {
  std::string doc_id;
  std::string kind;
  std::string message;
};

struct DensityRun {
  std::vector<DensityProfile> profiles;  // corpus order, failed documents omitted
  std::vector<DocumentFailure> failures;
  UidConfig uid;  // with the resolved corpus-level mu_c
  LogBase log_base = LogBase::Nats;
};

struct DensityOptions {
  UidConfig uid;
  LogBase log_base = LogBase::Nats;
  std::size_t threads = 1;
};

// Two passes: the first resolves the corpus-level rate (token-weighted mean
// surprisal), the second builds one profile per document. Documents whose
// series cannot be obtained are reported in failures.
DensityRun corpus_density(const std::vector<const Document*>& docs, const ProbabilityProvider& provider,
                          const DensityOptions& options);
DensityRun corpus_density(const Corpus& corpus, const ProbabilityProvider& provider,
                          const DensityOptions& options);

}  // namespace infodens
