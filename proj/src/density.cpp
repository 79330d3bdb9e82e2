#include "infodens/density.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <optional>

#include "infodens/error.hpp"
#include "infodens/parallel.hpp"

namespace infodens {

std::string_view to_string(LogBase base) { return base == LogBase::Bits ? "bits" : "nats"; }

LogBase parse_log_base(std::string_view tag) {
  if (tag == "nats") return LogBase::Nats;
  if (tag == "bits") return LogBase::Bits;
  throw ValidationError("unknown log base '" + std::string(tag) + "' (expected nats or bits)");
}

double unit_scale(LogBase base) { return base == LogBase::Bits ? 1.0 / std::numbers::ln2 : 1.0; }

double surprisal(double prob, LogBase base) {
  if (!(prob > 0.0 && prob <= 1.0)) {
    throw DomainError("surprisal requires a probability in (0, 1], got " + std::to_string(prob));
  }
  return -std::log(prob) * unit_scale(base);
}

SurprisalSummary document_surprisal(const TokenProbabilitySeries& series, LogBase base) {
  if (series.empty()) throw DomainError("document_surprisal of an empty series");
  SurprisalSummary out;
  out.series.reserve(series.size());
  double sum = 0.0;
  for (double p : series.probs) {
    // -log(1) is -0.0; keep the series free of negative zeros.
    const double s = surprisal(p, base) + 0.0;
    out.series.push_back(s);
    sum += s;
  }
  out.mean = sum / static_cast<double>(out.series.size());
  return out;
}

double entropy_frequency(const std::vector<std::string>& tokens, LogBase base) {
  if (tokens.empty()) throw DomainError("entropy of an empty document");
  std::map<std::string_view, std::size_t> hist;
  for (const auto& t : tokens) ++hist[t];
  const double n = static_cast<double>(tokens.size());
  double h = 0.0;
  for (const auto& [type, count] : hist) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log(p);
  }
  return (h + 0.0) * unit_scale(base);
}

double entropy_frequency(const Document& doc, LogBase base) {
  return entropy_frequency(doc.normalized_tokens(), base);
}

double entropy_contextual(const TokenProbabilitySeries& series, LogBase base) {
  if (series.empty()) throw DomainError("contextual entropy of an empty series");
  double sum = 0.0;
  for (double p : series.probs) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("probability outside (0, 1]");
    sum -= p * std::log(p);
  }
  return (sum / static_cast<double>(series.size()) + 0.0) * unit_scale(base);
}

std::string_view to_string(UidDistance d) { return d == UidDistance::Squared ? "squared" : "absolute"; }
std::string_view to_string(RateSource r) {
  return r == RateSource::CorpusMean ? "corpus_mean" : "document_mean";
}
std::string_view to_string(UidUnit u) { return u == UidUnit::Token ? "token" : "sentence"; }

UidDistance parse_uid_distance(std::string_view tag) {
  if (tag == "squared") return UidDistance::Squared;
  if (tag == "absolute") return UidDistance::Absolute;
  throw ValidationError("unknown UID distance '" + std::string(tag) + "'");
}

RateSource parse_rate_source(std::string_view tag) {
  if (tag == "corpus_mean") return RateSource::CorpusMean;
  if (tag == "document_mean") return RateSource::DocumentMean;
  throw ValidationError("unknown UID rate source '" + std::string(tag) + "'");
}

UidUnit parse_uid_unit(std::string_view tag) {
  if (tag == "token") return UidUnit::Token;
  if (tag == "sentence") return UidUnit::Sentence;
  throw ValidationError("unknown UID unit '" + std::string(tag) + "'");
}

double uid_deviation(std::span<const double> series, const UidConfig& config) {
  if (series.empty()) throw DomainError("uid_deviation of an empty series");
  if (!std::isfinite(config.mu_c)) throw DomainError("UID rate mu_c is not finite");
  double sum = 0.0;
  for (double x : series) {
    const double d = x - config.mu_c;
    sum += config.distance == UidDistance::Squared ? d * d : std::abs(d);
  }
  return sum / static_cast<double>(series.size());
}

std::vector<double> sentence_surprisal(std::span<const double> token_surprisal,
                                       const std::vector<SentenceRange>& sentences) {
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (s.size() == 0) continue;
    if (s.end > token_surprisal.size()) throw ContractViolation("sentence range exceeds series");
    double sum = 0.0;
    for (std::size_t i = s.begin; i < s.end; ++i) sum += token_surprisal[i];
    out.push_back(sum / static_cast<double>(s.size()));
  }
  return out;
}

DensityRun corpus_density(const std::vector<const Document*>& docs, const ProbabilityProvider& provider,
                          const DensityOptions& options) {
  struct Slot {
    std::optional<TokenProbabilitySeries> series;
    std::optional<SurprisalSummary> surprisal;
    DocumentFailure failure;
  };
  std::vector<Slot> slots(docs.size());

  // Pass 1: probabilities and surprisal per document.
  parallel_for(docs.size(), options.threads, [&](std::size_t i) {
    Slot& slot = slots[i];
    try {
      auto series = provider.series(*docs[i]);
      validate_series(series);
      if (series.size() != docs[i]->tokens.size()) {
        throw AlignmentError(docs[i]->id, std::min(series.size(), docs[i]->tokens.size()));
      }
      slot.surprisal = document_surprisal(series, options.log_base);
      slot.series = std::move(series);
    } catch (const Error& e) {
      slot.failure = {docs[i]->id, e.kind(), e.what()};
    }
  });

  DensityRun run;
  run.log_base = options.log_base;
  run.uid = options.uid;
  if (options.uid.rate_source == RateSource::CorpusMean) {
    // Sequential reduction in corpus order so the rate does not depend on
    // the thread count.
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& slot : slots) {
      if (!slot.surprisal) continue;
      for (double s : slot.surprisal->series) sum += s;
      count += slot.surprisal->series.size();
    }
    run.uid.mu_c = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }

  // Pass 2: profiles.
  std::vector<std::optional<DensityProfile>> profiles(docs.size());
  parallel_for(docs.size(), options.threads, [&](std::size_t i) {
    Slot& slot = slots[i];
    if (!slot.surprisal) return;
    try {
      DensityProfile p;
      p.doc_id = docs[i]->id;
      p.mean_surprisal = slot.surprisal->mean;
      p.entropy_frequency = entropy_frequency(*docs[i], options.log_base);
      p.entropy_contextual = entropy_contextual(*slot.series, options.log_base);
      UidConfig cfg = run.uid;
      if (cfg.rate_source == RateSource::DocumentMean) cfg.mu_c = slot.surprisal->mean;
      p.mu_c = cfg.mu_c;
      if (cfg.unit == UidUnit::Sentence) {
        auto units = sentence_surprisal(slot.surprisal->series, docs[i]->sentences);
        p.uid_deviation = uid_deviation(units, cfg);
      } else {
        p.uid_deviation = uid_deviation(slot.surprisal->series, cfg);
      }
      p.surprisal_series = std::move(slot.surprisal->series);
      profiles[i] = std::move(p);
    } catch (const Error& e) {
      slot.failure = {docs[i]->id, e.kind(), e.what()};
    }
  });

  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (profiles[i]) {
      run.profiles.push_back(std::move(*profiles[i]));
    } else {
      run.failures.push_back(std::move(slots[i].failure));
    }
  }
  return run;
}

DensityRun corpus_density(const Corpus& corpus, const ProbabilityProvider& provider,
                          const DensityOptions& options) {
  std::vector<const Document*> docs;
  docs.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) docs.push_back(&d);
  return corpus_density(docs, provider, options);
}

}  // namespace infodens
