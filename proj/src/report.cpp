#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "infodens/analytics.hpp"
#include "infodens/error.hpp"

namespace infodens {

namespace {

constexpr int kSchemaVersion = 1;
constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;
constexpr std::size_t kMaxPolylinePoints = 1000;
constexpr std::size_t kHistogramBins = 20;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string exact(double v) { return fmt("%.17g", v); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

StagedWriter::StagedWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw IoError("cannot create output directory '" + dir_.string() + "'");
  }
}

StagedWriter::~StagedWriter() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, final_path] : staged_) std::filesystem::remove(tmp, ec);
}

void StagedWriter::add(const std::string& name, const std::string& contents) {
  const auto final_path = dir_ / name;
  const auto tmp = dir_ / ("." + name + ".partial");
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + tmp.string() + "'");
  out << contents;
  out.close();
  if (!out) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw IoError("write failed for '" + final_path.string() + "'");
  }
  staged_.emplace_back(tmp, final_path);
}

std::vector<std::filesystem::path> StagedWriter::commit() {
  std::vector<std::filesystem::path> done;
  for (const auto& [tmp, final_path] : staged_) {
    std::error_code ec;
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) {
      std::error_code ignore;
      for (const auto& p : done) std::filesystem::remove(p, ignore);
      throw IoError("cannot move '" + final_path.string() + "' into place: " + ec.message());
    }
    done.push_back(final_path);
  }
  committed_ = true;
  return done;
}

std::string comparison_csv(const CorpusComparison& comparison) {
  std::string out = "doc_id,variant,metric,value\n";
  for (const auto& v : comparison.variants) {
    for (const auto& row : v.rows) {
      for (std::size_t m = 0; m < kMetricCount; ++m) {
        out += csv_field(row.doc_id);
        out += ',';
        out += csv_field(v.tag);
        out += ',';
        out += metric_name(kMetrics[m]);
        out += ',';
        out += exact(row.values[m]);
        out += '\n';
      }
    }
  }
  return out;
}

nlohmann::ordered_json comparison_summary(const CorpusComparison& comparison, const ReportContext& context) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["toolkit_version"] = INFODENS_VERSION;
  j["seed"] = context.seed;
  const auto& d = comparison.options.density;
  j["settings"] = {{"log_base", std::string(to_string(d.log_base))},
                   {"uid_distance", std::string(to_string(d.uid.distance))},
                   {"uid_rate_source", std::string(to_string(d.uid.rate_source))},
                   {"uid_unit", std::string(to_string(d.uid.unit))},
                   {"entropy_estimator", "frequency (type-summed Shannon)"},
                   {"kde_kernel", "gaussian"},
                   {"kde_bandwidth_rule", "silverman: 0.9*min(sd, IQR/1.34)*n^(-1/5)"},
                   {"kde_grid_min", comparison.options.kde_grid},
                   {"split", comparison.options.split ? std::string(to_string(*comparison.options.split)) : "all"},
                   {"length_unit", "words"}};
  j["config"] = context.config;
  j["documents_compared"] = comparison.document_ids.size();
  nlohmann::ordered_json variants = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < comparison.variants.size(); ++v) {
    const auto& s = comparison.variants[v];
    nlohmann::ordered_json vj;
    vj["tag"] = s.tag;
    vj["probability_source"] = s.provider;
    vj["documents"] = s.rows.size();
    vj["mean_tokens"] = s.mean_tokens;
    vj["mu_c"] = number_or_null(s.mu_c);
    nlohmann::ordered_json means = nlohmann::ordered_json::object();
    nlohmann::ordered_json deltas = nlohmann::ordered_json::object();
    nlohmann::ordered_json kdes = nlohmann::ordered_json::object();
    for (std::size_t m = 0; m < kMetricCount; ++m) {
      const std::string name(metric_name(kMetrics[m]));
      means[name] = number_or_null(s.means[m]);
      deltas[name] = number_or_null(comparison.deltas[v][m]);
      kdes[name] = {{"bandwidth", s.curves[m].bandwidth},
                    {"n_points", s.curves[m].n_points},
                    {"grid_points", s.curves[m].xs.size()}};
    }
    vj["means"] = std::move(means);
    vj["delta_vs_reference"] = std::move(deltas);
    vj["kde"] = std::move(kdes);
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& f : s.failures) failures.push_back({{"doc_id", f.doc_id}, {"kind", f.kind}, {"message", f.message}});
    vj["failures"] = std::move(failures);
    variants.push_back(std::move(vj));
  }
  j["variants"] = std::move(variants);
  return j;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series) {
  double x_min = INFINITY, x_max = -INFINITY, y_max = 0.0;
  // Histogram overlays, normalized to unit area on a shared bin grid.
  std::vector<std::vector<double>> heights(series.size());
  for (const auto& s : series) {
    for (double x : s.xs) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
    for (double y : s.ys) y_max = std::max(y_max, y);
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  const double bin_width = (x_max - x_min) / static_cast<double>(kHistogramBins);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& samples = series[k].histogram_samples;
    if (samples.empty()) continue;
    heights[k].assign(kHistogramBins, 0.0);
    for (double x : samples) {
      auto b = static_cast<std::size_t>(std::clamp((x - x_min) / bin_width, 0.0, static_cast<double>(kHistogramBins - 1)));
      heights[k][b] += 1.0;
    }
    for (double& h : heights[k]) {
      h /= static_cast<double>(samples.size()) * bin_width;
      y_max = std::max(y_max, h);
    }
  }
  if (y_max <= 0.0) y_max = 1.0;
  y_max *= 1.05;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) { return kTop + ph - y / y_max * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << fmt("%.1f", kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << fmt("%.1f", pw) << "\" height=\""
      << fmt("%.1f", ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x_min + (x_max - x_min) * t / 5.0;
    const double yv = y_max * t / 5.0;
    svg << "<line x1=\"" << fmt("%.2f", px(xv)) << "\" y1=\"" << fmt("%.2f", kTop + ph) << "\" x2=\""
        << fmt("%.2f", px(xv)) << "\" y2=\"" << fmt("%.2f", kTop + ph + 5) << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << fmt("%.2f", px(xv)) << "\" y=\"" << fmt("%.2f", kTop + ph + 18)
        << "\" text-anchor=\"middle\">" << fmt("%.3g", xv) << "</text>\n";
    svg << "<line x1=\"" << fmt("%.2f", kLeft - 5) << "\" y1=\"" << fmt("%.2f", py(yv)) << "\" x2=\"" << kLeft
        << "\" y2=\"" << fmt("%.2f", py(yv)) << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << fmt("%.2f", kLeft - 8) << "\" y=\"" << fmt("%.2f", py(yv) + 4)
        << "\" text-anchor=\"end\">" << fmt("%.3g", yv) << "</text>\n";
  }
  svg << "<text x=\"" << fmt("%.1f", kLeft + pw / 2) << "\" y=\"" << fmt("%.1f", kHeight - 12)
      << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << fmt("%.1f", kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt("%.1f", kTop + ph / 2) << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    for (std::size_t b = 0; b < heights[k].size(); ++b) {
      const double x0 = x_min + bin_width * static_cast<double>(b);
      svg << "<rect x=\"" << fmt("%.2f", px(x0)) << "\" y=\"" << fmt("%.2f", py(heights[k][b])) << "\" width=\""
          << fmt("%.2f", px(x0 + bin_width) - px(x0)) << "\" height=\""
          << fmt("%.2f", py(0.0) - py(heights[k][b])) << "\" fill=\"" << color << "\" fill-opacity=\"0.15\"/>\n";
    }
    const auto& s = series[k];
    const std::size_t stride = std::max<std::size_t>(1, (s.xs.size() + kMaxPolylinePoints - 1) / kMaxPolylinePoints);
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); i += stride) {
      if (i > 0) svg << ' ';
      svg << fmt("%.2f", px(s.xs[i])) << ',' << fmt("%.2f", py(s.ys[i]));
    }
    if (!s.xs.empty() && (s.xs.size() - 1) % stride != 0) {
      svg << ' ' << fmt("%.2f", px(s.xs.back())) << ',' << fmt("%.2f", py(s.ys.back()));
    }
    svg << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    const double lx = kWidth - kRight + 15;
    svg << "<line x1=\"" << fmt("%.1f", lx) << "\" y1=\"" << fmt("%.1f", ly) << "\" x2=\"" << fmt("%.1f", lx + 24)
        << "\" y2=\"" << fmt("%.1f", ly) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    svg << "<text x=\"" << fmt("%.1f", lx + 30) << "\" y=\"" << fmt("%.1f", ly + 4) << "\">" << xml_escape(s.name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string kde_svg(const CorpusComparison& comparison, Metric metric) {
  const auto m = static_cast<std::size_t>(metric);
  std::vector<SvgSeries> series;
  for (const auto& v : comparison.variants) {
    SvgSeries s;
    s.name = v.tag;
    s.xs = v.curves[m].xs;
    s.ys = v.curves[m].ys;
    if (comparison.options.histograms) s.histogram_samples = v.samples[m];
    series.push_back(std::move(s));
  }
  const std::string name(metric_name(metric));
  return svg_line_chart("Kernel density: " + name, name, "density", series);
}

std::vector<std::filesystem::path> emit_report(const CorpusComparison& comparison,
                                               const std::filesystem::path& out_dir, const ReportContext& context) {
  StagedWriter writer(out_dir);
  writer.add("metrics.csv", comparison_csv(comparison));
  writer.add("summary.json", comparison_summary(comparison, context).dump(2) + "\n");
  for (Metric m : kMetrics) writer.add(std::string(metric_name(m)) + ".svg", kde_svg(comparison, m));
  return writer.commit();
}

std::map<std::string, std::map<std::string, double>> read_summary_means(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open summary '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed summary: ") + e.what(), 1);
  }
  if (j.value("schema_version", 0) != kSchemaVersion) throw ValidationError("unsupported summary schema version");
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& v : j.at("variants")) {
    auto& row = out[v.at("tag").get<std::string>()];
    for (const auto& [name, value] : v.at("means").items()) {
      row[name] = value.is_null() ? std::nan("") : value.get<double>();
    }
  }
  return out;
}

}  // namespace infodens
