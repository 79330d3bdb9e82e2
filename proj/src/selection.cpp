#include "infodens/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "infodens/error.hpp"
#include "infodens/log.hpp"
#include "infodens/parallel.hpp"

namespace infodens {

namespace {

bool is_negation(const std::string& token) {
  static const std::unordered_set<std::string> words = {"not", "no", "never", "without"};
  if (words.count(token)) return true;
  return token.size() > 3 && (token.ends_with("n't") || token.ends_with("n’t"));
}

}  // namespace

SelectionCriteria SelectionCriteria::quantile(double q) {
  SelectionCriteria c;
  c.mode = SelectionMode::Quantile;
  c.q = q;
  return c;
}

SelectionCriteria SelectionCriteria::fixed(double threshold) {
  SelectionCriteria c;
  c.mode = SelectionMode::FixedThreshold;
  c.threshold = threshold;
  return c;
}

void SelectionCriteria::validate() const {
  if (mode == SelectionMode::Quantile && !(q > 0.0 && q < 1.0)) {
    throw ValidationError("quantile q must lie in (0, 1)");
  }
  if (mode == SelectionMode::FixedThreshold && !std::isfinite(threshold)) {
    throw ValidationError("fixed threshold must be finite");
  }
}

double nearest_rank_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty vector");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile q must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double x = q * n;
  // q * n is often meant to be an integer (0.875 * 8); absorb rounding noise.
  const double nearest = std::round(x);
  double rank = std::abs(x - nearest) < 1e-9 * std::max(1.0, n) ? nearest : std::ceil(x);
  rank = std::clamp(rank, 1.0, n);
  return sorted[static_cast<std::size_t>(rank) - 1];
}

std::vector<std::size_t> select_positions(std::span<const double> pooled, double threshold, bool* fallback) {
  if (pooled.empty()) throw DomainError("selection over an empty pooled vector");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled[i] >= threshold) out.push_back(i);
  }
  const bool empty = out.empty();
  if (empty) {
    out.push_back(static_cast<std::size_t>(std::max_element(pooled.begin(), pooled.end()) - pooled.begin()));
  }
  if (fallback != nullptr) *fallback = empty;
  return out;
}

SelectionResult select_words(const AttentionScores& scores, const SelectionCriteria& criteria) {
  criteria.validate();
  if (scores.pooled.empty()) throw DomainError("document '" + scores.doc_id + "' has no pooled scores");
  SelectionResult r;
  r.doc_id = scores.doc_id;
  r.pooled = scores.pooled;
  r.threshold = criteria.mode == SelectionMode::Quantile ? nearest_rank_quantile(scores.pooled, criteria.q)
                                                         : criteria.threshold;
  r.selected_indices = select_positions(r.pooled, r.threshold, &r.fallback);
  return r;
}

Document reduced_document(const Document& doc, std::span<const std::size_t> selected) {
  std::vector<std::size_t> sentence_of(doc.tokens.size());
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    for (std::size_t i = doc.sentences[s].begin; i < doc.sentences[s].end; ++i) sentence_of[i] = s;
  }
  std::string text;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const std::size_t i = selected[k];
    if (i >= doc.tokens.size()) throw ContractViolation("selected index out of range for '" + doc.id + "'");
    if (k > 0 && selected[k - 1] >= i) throw ContractViolation("selected indices must be strictly increasing");
    if (k > 0) text += sentence_of[selected[k - 1]] != sentence_of[i] ? ". " : " ";
    text += doc.tokens[i].surface;
  }
  if (!selected.empty()) text += '.';
  return make_document(doc.id, std::move(text), doc.labels, doc.split);
}

double mean_selected_length(const std::vector<AttentionScores>& scores, double threshold) {
  if (scores.empty()) throw DomainError("no documents to measure");
  double total = 0.0;
  for (const auto& s : scores) {
    std::size_t count = 0;
    for (double v : s.pooled) count += v >= threshold ? 1 : 0;
    total += static_cast<double>(std::max<std::size_t>(count, 1));
  }
  return total / static_cast<double>(scores.size());
}

double calibrate_threshold(const std::vector<AttentionScores>& scores, std::size_t target_avg_length) {
  if (scores.empty()) throw DomainError("threshold calibration needs at least one document");
  if (target_avg_length == 0) throw DomainError("target average length must be >= 1");

  std::vector<std::vector<double>> sorted;
  std::vector<double> candidates;
  for (const auto& s : scores) {
    if (s.pooled.empty()) throw DomainError("document '" + s.doc_id + "' has no pooled scores");
    sorted.emplace_back(s.pooled.begin(), s.pooled.end());
    std::sort(sorted.back().begin(), sorted.back().end());
    candidates.insert(candidates.end(), s.pooled.begin(), s.pooled.end());
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  auto mean_len = [&](double t) {
    double total = 0.0;
    for (const auto& v : sorted) {
      const auto count = static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
      total += static_cast<double>(std::max<std::size_t>(count, 1));
    }
    return total / static_cast<double>(sorted.size());
  };
  const double target = static_cast<double>(target_avg_length);

  // Mean length is non-increasing in the threshold: find the first candidate
  // at or below the target.
  std::size_t lo = 0;
  std::size_t hi = candidates.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (mean_len(candidates[mid]) <= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  std::size_t best;
  if (lo == candidates.size()) {
    best = candidates.size() - 1;
  } else if (lo == 0) {
    best = 0;
  } else {
    const double below = std::abs(mean_len(candidates[lo]) - target);
    const double above = std::abs(mean_len(candidates[lo - 1]) - target);
    best = below <= above ? lo : lo - 1;
  }
  // Several candidates can share the same mean length; take the largest.
  const double best_len = mean_len(candidates[best]);
  lo = best;
  hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (mean_len(candidates[mid]) == best_len) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return candidates[lo];
}

Reduction reduce_corpus(const Corpus& corpus, const AttentionModel& model, SelectionCriteria criteria,
                        const ReduceOptions& options) {
  criteria.validate();
  model.check_shapes();
  const std::size_t n = corpus.documents.size();
  std::vector<std::optional<AttentionScores>> scores(n);
  std::vector<std::string> errors(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    try {
      scores[i] = attention_scores(model, corpus.documents[i]);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  Reduction out;
  if (options.target_avg_length) {
    std::vector<AttentionScores> ok;
    for (const auto& s : scores)
      if (s) ok.push_back(*s);
    if (!ok.empty()) {
      const double t = calibrate_threshold(ok, *options.target_avg_length);
      out.calibrated_threshold = t;
      criteria = SelectionCriteria::fixed(t);
    }
  }

  std::vector<Document> docs(n);
  out.audit.resize(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const Document& doc = corpus.documents[i];
    ReductionRecord& rec = out.audit[i];
    rec.doc_id = doc.id;
    try {
      if (!scores[i]) throw DomainError(errors[i]);
      SelectionResult sel = select_words(*scores[i], criteria);
      docs[i] = reduced_document(doc, sel.selected_indices);
      rec.selected_indices = sel.selected_indices;
      rec.threshold = sel.threshold;
      std::size_t k = 0;
      for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
        if (k < sel.selected_indices.size() && sel.selected_indices[k] == t) {
          ++k;
          continue;
        }
        if (is_negation(doc.tokens[t].normalized)) rec.dropped_negations.push_back(doc.tokens[t].normalized);
      }
    } catch (const Error& e) {
      docs[i] = doc;
      rec.reduced = false;
      rec.selected_indices.resize(doc.tokens.size());
      for (std::size_t t = 0; t < doc.tokens.size(); ++t) rec.selected_indices[t] = t;
      log::warn("document '" + doc.id + "' passed through unreduced: " + e.what());
    }
  });
  out.corpus = build_corpus(std::move(docs));
  return out;
}

std::string_view to_string(ScaleTarget target) {
  return target == ScaleTarget::Selected ? "selected" : "non_selected";
}

ScaleTarget parse_scale_target(std::string_view tag) {
  if (tag == "selected") return ScaleTarget::Selected;
  if (tag == "non_selected") return ScaleTarget::NonSelected;
  throw ValidationError("unknown scaling target '" + std::string(tag) + "'");
}

std::vector<double> scaled_predict(const AttentionModel& model, const Document& doc,
                                   std::span<const std::size_t> selected, const std::string& selection_doc_id,
                                   double factor, ScaleTarget target) {
  if (selection_doc_id != doc.id) {
    throw ContractViolation("selection for '" + selection_doc_id + "' applied to document '" + doc.id + "'");
  }
  if (!(factor >= 0.0) || !std::isfinite(factor)) throw DomainError("scaling factor must be finite and >= 0");
  const double selected_scale = target == ScaleTarget::Selected ? factor : 1.0;
  const double other_scale = target == ScaleTarget::Selected ? 1.0 : factor;
  std::vector<double> scale(doc.tokens.size(), other_scale);
  for (std::size_t i : selected) {
    if (i >= scale.size()) throw ContractViolation("selected index out of range for '" + doc.id + "'");
    scale[i] = selected_scale;
  }
  return predict(model, doc, scale);
}

std::vector<double> scaled_predict(const AttentionModel& model, const Document& doc, const SelectionResult& selection,
                                   double factor, ScaleTarget target) {
  return scaled_predict(model, doc, selection.selected_indices, selection.doc_id, factor, target);
}

std::vector<ScalePoint> scale_sweep(const AttentionModel& model, const std::vector<const Document*>& docs,
                                    const std::vector<ReductionRecord>& selections, std::span<const double> factors,
                                    ScaleTarget target, std::size_t threads) {
  std::map<std::string, const ReductionRecord*> by_id;
  for (const auto& r : selections) by_id[r.doc_id] = &r;
  std::vector<const ReductionRecord*> matched(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto it = by_id.find(docs[i]->id);
    if (it == by_id.end()) throw ContractViolation("no selection recorded for document '" + docs[i]->id + "'");
    matched[i] = it->second;
  }
  std::vector<std::vector<int>> gold(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto y = label_targets(model, *docs[i]);
    gold[i].assign(y.begin(), y.end());
  }
  std::vector<ScalePoint> out;
  for (double factor : factors) {
    std::vector<std::vector<double>> scores(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) {
      scores[i] = scaled_predict(model, *docs[i], matched[i]->selected_indices, matched[i]->doc_id, factor, target);
    });
    out.push_back({factor, compute_metrics(scores, gold)});
  }
  return out;
}

std::string serialize_audit(const std::vector<ReductionRecord>& audit) {
  std::string out;
  for (const auto& r : audit) {
    nlohmann::ordered_json j;
    j["doc_id"] = r.doc_id;
    j["selected_indices"] = r.selected_indices;
    j["threshold"] = r.threshold;
    j["reduced"] = r.reduced;
    j["dropped_negations"] = r.dropped_negations;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ReductionRecord> parse_audit(std::string_view jsonl) {
  std::vector<ReductionRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ReductionRecord r;
      r.doc_id = j.at("doc_id").get<std::string>();
      r.selected_indices = j.at("selected_indices").get<std::vector<std::size_t>>();
      r.threshold = j.at("threshold").get<double>();
      r.reduced = j.value("reduced", true);
      r.dropped_negations = j.value("dropped_negations", std::vector<std::string>{});
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad selection audit record: ") + e.what(), line_no);
    }
  }
  return out;
}

void write_audit(const std::vector<ReductionRecord>& audit, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write selection audit '" + path.string() + "'");
  out << serialize_audit(audit);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<ReductionRecord> read_audit(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open selection audit '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_audit(buf.str());
}

}  // namespace infodens
