#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "infodens/corpus.hpp"
#include "infodens/density.hpp"
#include "infodens/probability.hpp"

namespace infodens {

// ---------------------------------------------------------------------------
// Kernel density estimation

struct KdeCurve {
  std::vector<double> xs;  // evenly spaced
  std::vector<double> ys;
  double bandwidth = 0.0;
  std::size_t n_points = 0;
};

inline constexpr double kMinBandwidth = 1e-6;
// Grid padding on each side of the sample range, in bandwidths.
inline constexpr double kGridPadding = 5.0;

// 0.9 * min(sd, IQR / 1.34) * n^(-1/5), floored at kMinBandwidth. When one
// of sd and IQR is zero the other is used.
double silverman_bandwidth(std::span<const double> samples);

// Gaussian KDE on a grid spanning [min - 5h, max + 5h]. grid_size is a lower
// bound: the grid is refined so the step never exceeds h / 2.
KdeCurve kde(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt,
             std::size_t grid_size = 512);

double trapezoid(std::span<const double> xs, std::span<const double> ys);

// ---------------------------------------------------------------------------
// Corpus comparison

enum class Metric { MeanSurprisal, EntropyFrequency, UidDeviation, Flesch, HerdanC };
inline constexpr std::array<Metric, 5> kMetrics = {Metric::MeanSurprisal, Metric::EntropyFrequency,
                                                   Metric::UidDeviation, Metric::Flesch, Metric::HerdanC};
inline constexpr std::size_t kMetricCount = kMetrics.size();
std::string_view metric_name(Metric metric);

using MetricValues = std::array<double, kMetricCount>;

struct VariantInput {
  std::string tag;
  const Corpus* corpus = nullptr;
  const ProbabilityProvider* provider = nullptr;
};

struct CompareOptions {
  DensityOptions density;
  std::optional<Split> split;  // compare only this split when set
  std::size_t kde_grid = 512;
  bool histograms = false;
};

struct DocumentMetrics {
  std::string doc_id;
  MetricValues values{};
};

struct VariantSummary {
  std::string tag;
  std::string provider;
  std::vector<DocumentMetrics> rows;
  MetricValues means{};
  std::array<KdeCurve, kMetricCount> curves;
  std::array<std::vector<double>, kMetricCount> samples;
  std::vector<DocumentFailure> failures;
  double mu_c = 0.0;
  double mean_tokens = 0.0;
};

struct CorpusComparison {
  std::vector<VariantSummary> variants;   // variants[0] is the reference
  std::vector<MetricValues> deltas;       // variant - reference, aligned with variants
  std::vector<std::string> document_ids;  // the compared id intersection
  CompareOptions options;
};

// The first variant is the reference ("original"). Variants are compared on
// the intersection of their document ids.
CorpusComparison compare_corpora(const std::vector<VariantInput>& variants, const CompareOptions& options);

// ---------------------------------------------------------------------------
// Reports

struct ReportContext {
  std::uint64_t seed = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

// Writes metrics.csv, summary.json and one SVG per metric. Files are staged
// and renamed into place; on failure nothing new is left behind.
std::vector<std::filesystem::path> emit_report(const CorpusComparison& comparison,
                                               const std::filesystem::path& out_dir,
                                               const ReportContext& context = {});

std::string comparison_csv(const CorpusComparison& comparison);
nlohmann::ordered_json comparison_summary(const CorpusComparison& comparison, const ReportContext& context);

struct SvgSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> histogram_samples;  // optional overlay, unit area
};

// 800 x 500 self-contained line chart with a legend.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series);
std::string kde_svg(const CorpusComparison& comparison, Metric metric);

// Corpus means as recorded in a summary.json: variant tag -> metric -> mean.
std::map<std::string, std::map<std::string, double>> read_summary_means(const std::filesystem::path& path);

// Writes files atomically into a directory; used by every report emitter.
class StagedWriter {
 public:
  explicit StagedWriter(std::filesystem::path dir);
  ~StagedWriter();
  StagedWriter(const StagedWriter&) = delete;
  StagedWriter& operator=(const StagedWriter&) = delete;

  void add(const std::string& name, const std::string& contents);
  // Renames every staged file into place. Throws IoError after removing
  // whatever it had written.
  std::vector<std::filesystem::path> commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
  bool committed_ = false;
};

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SynthSpec {
  std::size_t labels = 10;
  std::size_t docs_per_label = 50;  // documents generated per primary label
  std::size_t labels_per_doc = 5;
  std::size_t keywords_per_label = 1;
  std::size_t keyword_repeats = 1;  // occurrences of each keyword in the fresh text
  std::size_t filler_vocab = 400;
  double zipf_exponent = 1.0;
  std::size_t mean_length = 40;
  double length_spread = 0.25;  // lengths uniform in mean * [1 - spread, 1 + spread]
  double redundancy = 0.0;      // fraction of each document made of copied spans
  std::size_t min_span = 4;
  std::size_t max_span = 16;
  std::size_t min_sentence = 8;
  std::size_t max_sentence = 20;
  double valid_fraction = 0.1;
  double test_fraction = 0.2;

  // Throws ValidationError for inconsistent parameters.
  void validate() const;
};

Corpus synthesize_corpus(const SynthSpec& spec, std::uint64_t seed);

// Deterministic pseudo-words used by the generator.
std::string synth_filler_word(std::size_t index);
std::string synth_keyword(std::size_t label, std::size_t k);
std::string synth_label(std::size_t label);

}  // namespace infodens
