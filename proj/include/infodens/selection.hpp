#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infodens/attention.hpp"
#include "infodens/corpus.hpp"

namespace infodens {

enum class SelectionMode { FixedThreshold, Quantile };

struct SelectionCriteria {
  SelectionMode mode = SelectionMode::Quantile;
  double threshold = 0.0;  // fixed mode
  double q = 0.875;        // quantile mode

  static SelectionCriteria quantile(double q);
  static SelectionCriteria fixed(double threshold);
  // Throws ValidationError unless q is in (0, 1) and threshold is finite.
  void validate() const;
};

struct SelectionResult {
  std::string doc_id;
  std::vector<double> pooled;
  std::vector<std::size_t> selected_indices;  // strictly increasing
  double threshold = 0.0;                     // effective threshold
  bool fallback = false;                      // nothing qualified; argmax kept
};

// Nearest-rank quantile: element ceil(q * n) (1-based) of the ascending sort.
double nearest_rank_quantile(std::span<const double> values, double q);

// Positions with pooled >= threshold; the first argmax alone when none qualify.
std::vector<std::size_t> select_positions(std::span<const double> pooled, double threshold, bool* fallback = nullptr);

SelectionResult select_words(const AttentionScores& scores, const SelectionCriteria& criteria);

// Document made of the selected tokens in their original order. Sentence
// boundaries of the original are kept as terminators between selected
// tokens, so the reduced text re-tokenizes to exactly the selected tokens.
Document reduced_document(const Document& doc, std::span<const std::size_t> selected);

// Global threshold among the pooled values whose corpus mean reduced length
// is closest to target_avg_length; ties go to the larger threshold.
double calibrate_threshold(const std::vector<AttentionScores>& scores, std::size_t target_avg_length);

// Mean reduced length over the corpus for a global threshold.
double mean_selected_length(const std::vector<AttentionScores>& scores, double threshold);

struct ReductionRecord {
  std::string doc_id;
  std::vector<std::size_t> selected_indices;
  double threshold = 0.0;
  bool reduced = true;  // false when the document passed through unreduced
  std::vector<std::string> dropped_negations;
};

struct Reduction {
  Corpus corpus;
  std::vector<ReductionRecord> audit;
  std::optional<double> calibrated_threshold;
};

struct ReduceOptions {
  // When set, the fixed threshold is calibrated to this mean length first.
  std::optional<std::size_t> target_avg_length;
  std::size_t threads = 1;
};

Reduction reduce_corpus(const Corpus& corpus, const AttentionModel& model, SelectionCriteria criteria,
                        const ReduceOptions& options = {});

enum class ScaleTarget { Selected, NonSelected };
std::string_view to_string(ScaleTarget target);
ScaleTarget parse_scale_target(std::string_view tag);

// Prediction with the embeddings of the target positions multiplied by
// factor. Throws ContractViolation if the selection belongs to another
// document, DomainError for factor < 0.
std::vector<double> scaled_predict(const AttentionModel& model, const Document& doc,
                                   std::span<const std::size_t> selected, const std::string& selection_doc_id,
                                   double factor, ScaleTarget target);
std::vector<double> scaled_predict(const AttentionModel& model, const Document& doc, const SelectionResult& selection,
                                   double factor, ScaleTarget target);

struct ScalePoint {
  double factor = 1.0;
  EvalMetrics metrics;
};

// Micro/macro metrics of the scaled model over docs for each factor. The
// selection map is keyed by document id.
std::vector<ScalePoint> scale_sweep(const AttentionModel& model, const std::vector<const Document*>& docs,
                                    const std::vector<ReductionRecord>& selections, std::span<const double> factors,
                                    ScaleTarget target, std::size_t threads = 1);

void write_audit(const std::vector<ReductionRecord>& audit, const std::filesystem::path& path);
std::vector<ReductionRecord> read_audit(const std::filesystem::path& path);
std::string serialize_audit(const std::vector<ReductionRecord>& audit);
std::vector<ReductionRecord> parse_audit(std::string_view jsonl);

}  // namespace infodens
