#include "infodens/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "infodens/error.hpp"
#include "infodens/lexical.hpp"
#include "infodens/log.hpp"
#include "infodens/parallel.hpp"

namespace infodens {

namespace {

constexpr std::size_t kMaxGrid = std::size_t{1} << 21;

// Linear-interpolation quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("bandwidth of an empty sample");
  const double n = static_cast<double>(samples.size());
  if (samples.size() < 2) return kMinBandwidth;
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = (sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25)) / 1.34;
  double spread;
  if (sd > 0.0 && iqr > 0.0) {
    spread = std::min(sd, iqr);
  } else {
    spread = std::max(sd, iqr);
  }
  return std::max(kMinBandwidth, 0.9 * spread * std::pow(n, -0.2));
}

KdeCurve kde(std::span<const double> samples, std::optional<double> bandwidth, std::size_t grid_size) {
  if (samples.empty()) throw DomainError("kernel density of an empty sample");
  for (double x : samples) {
    if (!std::isfinite(x)) throw DomainError("kernel density sample is not finite");
  }
  if (bandwidth && !(*bandwidth > 0.0)) throw DomainError("bandwidth must be positive");
  KdeCurve curve;
  curve.n_points = samples.size();
  curve.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  const double h = curve.bandwidth;
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn - kGridPadding * h;
  const double hi = *mx + kGridPadding * h;
  const double needed = std::ceil((hi - lo) / (0.5 * h)) + 1.0;
  std::size_t points = std::max<std::size_t>(grid_size, 2);
  if (needed > static_cast<double>(points)) points = static_cast<std::size_t>(std::min(needed, static_cast<double>(kMaxGrid)));
  curve.xs.resize(points);
  curve.ys.resize(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < points; ++g) {
    const double x = g + 1 == points ? hi : lo + step * static_cast<double>(g);
    double sum = 0.0;
    for (double s : samples) {
      const double z = (x - s) / h;
      sum += std::exp(-0.5 * z * z);
    }
    curve.xs[g] = x;
    curve.ys[g] = sum * norm;
  }
  return curve;
}

double trapezoid(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ContractViolation("trapezoid: xs and ys differ in length");
  double area = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) area += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
  return area;
}

std::string_view metric_name(Metric metric) {
  switch (metric) {
    case Metric::MeanSurprisal:
      return "mean_surprisal";
    case Metric::EntropyFrequency:
      return "entropy_frequency";
    case Metric::UidDeviation:
      return "uid_deviation";
    case Metric::Flesch:
      return "flesch";
    case Metric::HerdanC:
      return "herdan_c";
  }
  return "unknown";
}

CorpusComparison compare_corpora(const std::vector<VariantInput>& variants, const CompareOptions& options) {
  if (variants.size() < 2) throw ValidationError("comparison needs at least two variants");
  std::set<std::string> tags;
  for (const auto& v : variants) {
    if (v.corpus == nullptr || v.provider == nullptr) throw ContractViolation("variant '" + v.tag + "' is incomplete");
    if (!tags.insert(v.tag).second) throw DuplicateError("variant tag '" + v.tag + "' used twice");
  }

  CorpusComparison out;
  out.options = options;
  const Corpus& reference = *variants.front().corpus;
  std::size_t candidates = 0;
  for (const auto& doc : reference.documents) {
    if (options.split && doc.split != *options.split) continue;
    ++candidates;
    bool everywhere = true;
    for (std::size_t v = 1; v < variants.size() && everywhere; ++v) {
      everywhere = variants[v].corpus->find(doc.id) != nullptr;
    }
    if (everywhere) out.document_ids.push_back(doc.id);
  }
  if (out.document_ids.size() < candidates) {
    log::warn("comparison restricted to " + std::to_string(out.document_ids.size()) + " of " +
              std::to_string(candidates) + " documents shared by every variant");
  }
  if (out.document_ids.empty()) throw ValidationError("variants share no document ids");

  for (const auto& variant : variants) {
    VariantSummary summary;
    summary.tag = variant.tag;
    summary.provider = variant.provider->name();
    std::vector<const Document*> docs;
    docs.reserve(out.document_ids.size());
    double tokens = 0.0;
    for (const auto& id : out.document_ids) {
      docs.push_back(variant.corpus->find(id));
      tokens += static_cast<double>(docs.back()->tokens.size());
    }
    summary.mean_tokens = tokens / static_cast<double>(docs.size());

    DensityRun run = corpus_density(docs, *variant.provider, options.density);
    summary.failures = run.failures;
    summary.mu_c = run.uid.mu_c;
    std::map<std::string_view, const DensityProfile*> by_id;
    for (const auto& p : run.profiles) by_id[p.doc_id] = &p;

    std::vector<std::optional<DocumentMetrics>> rows(docs.size());
    parallel_for(docs.size(), options.density.threads, [&](std::size_t i) {
      auto it = by_id.find(docs[i]->id);
      if (it == by_id.end()) return;
      const DensityProfile& p = *it->second;
      DocumentMetrics row;
      row.doc_id = docs[i]->id;
      row.values[static_cast<std::size_t>(Metric::MeanSurprisal)] = p.mean_surprisal;
      row.values[static_cast<std::size_t>(Metric::EntropyFrequency)] = p.entropy_frequency;
      row.values[static_cast<std::size_t>(Metric::UidDeviation)] = p.uid_deviation;
      row.values[static_cast<std::size_t>(Metric::Flesch)] = flesch_reading_ease(*docs[i]);
      row.values[static_cast<std::size_t>(Metric::HerdanC)] = herdan_richness(*docs[i]);
      rows[i] = std::move(row);
    });
    for (auto& r : rows)
      if (r) summary.rows.push_back(std::move(*r));

    for (std::size_t m = 0; m < kMetricCount; ++m) {
      auto& samples = summary.samples[m];
      for (const auto& r : summary.rows) samples.push_back(r.values[m]);
      double sum = 0.0;
      for (double x : samples) sum += x;
      summary.means[m] = samples.empty() ? std::nan("") : sum / static_cast<double>(samples.size());
      if (!samples.empty()) summary.curves[m] = kde(samples, std::nullopt, options.kde_grid);
    }
    out.variants.push_back(std::move(summary));
  }

  for (const auto& v : out.variants) {
    MetricValues delta{};
    for (std::size_t m = 0; m < kMetricCount; ++m) delta[m] = v.means[m] - out.variants.front().means[m];
    out.deltas.push_back(delta);
  }
  return out;
}

}  // namespace infodens
