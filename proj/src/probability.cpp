#include "infodens/probability.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "infodens/error.hpp"

namespace infodens {

void validate_series(const TokenProbabilitySeries& series) {
  if (series.tokens.size() != series.probs.size()) {
    throw ValidationError("document '" + series.doc_id + "': " + std::to_string(series.tokens.size()) +
                          " tokens but " + std::to_string(series.probs.size()) + " probabilities");
  }
  for (std::size_t i = 0; i < series.probs.size(); ++i) {
    const double p = series.probs[i];
    if (!std::isfinite(p) || p <= 0.0 || p > 1.0) {
      std::ostringstream msg;
      msg << "document '" << series.doc_id << "': probability " << p << " at index " << i
          << " is outside (0, 1]";
      throw ValidationError(msg.str());
    }
  }
}

double sequence_log_prob(const TokenProbabilitySeries& series) {
  if (series.empty()) throw DomainError("sequence_log_prob of an empty series");
  double sum = 0.0;
  for (double p : series.probs) sum += std::log(p);
  return sum;
}

NgramModel::NgramModel(int order, double smoothing_k, Vocabulary vocab)
    : order_(order), k_(smoothing_k), vocab_(std::move(vocab)), tables_(order) {
  if (order < 1) throw DomainError("n-gram order must be >= 1");
  if (!(smoothing_k >= 0.0) || !std::isfinite(smoothing_k)) {
    throw DomainError("smoothing k must be a finite value >= 0");
  }
}

void NgramModel::observe(const std::vector<std::string>& sentence) {
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(order_ - 1), begin_id());
  for (const auto& tok : sentence) ids.push_back(id(tok));
  // A unigram model has no context from which to predict the sentence end.
  if (order_ > 1) ids.push_back(end_id());
  const std::size_t pad = static_cast<std::size_t>(order_ - 1);
  for (std::size_t pos = pad; pos < ids.size(); ++pos) {
    for (int n = 1; n <= order_; ++n) {
      Context ctx(ids.begin() + static_cast<std::ptrdiff_t>(pos) - (n - 1),
                  ids.begin() + static_cast<std::ptrdiff_t>(pos));
      auto& cell = tables_[n - 1][ctx];
      cell.total += 1;
      cell.next[ids[pos]] += 1;
    }
  }
}

double NgramModel::prob(std::uint32_t word, const Context& context) const {
  if (context.size() != static_cast<std::size_t>(order_ - 1)) {
    throw ContractViolation("context length " + std::to_string(context.size()) + " for order " +
                            std::to_string(order_));
  }
  const double v = static_cast<double>(vocab_size());
  const auto& table = tables_.back();
  auto it = table.find(context);
  double count = 0.0;
  double total = 0.0;
  if (it != table.end()) {
    total = static_cast<double>(it->second.total);
    auto w = it->second.next.find(word);
    if (w != it->second.next.end()) count = static_cast<double>(w->second);
  }
  const double denom = total + k_ * v;
  if (denom == 0.0) return 0.0;
  return (count + k_) / denom;
}

double NgramModel::prob(std::string_view word, const std::vector<std::string>& context) const {
  Context ctx;
  ctx.reserve(context.size());
  for (const auto& c : context) {
    if (c == kBeginMarker) {
      ctx.push_back(begin_id());
    } else {
      ctx.push_back(id(c));
    }
  }
  const std::uint32_t w = word == kEndMarker ? end_id() : id(word);
  return prob(w, ctx);
}

std::vector<NgramModel::Context> NgramModel::observed_contexts() const {
  std::vector<Context> out;
  for (const auto& [ctx, counts] : tables_.back()) out.push_back(ctx);
  return out;
}

NgramModel train_ngram(const Corpus& corpus, int order, double smoothing_k) {
  NgramModel model(order, smoothing_k, corpus.token_vocab);
  bool any = false;
  for (const auto& doc : corpus.documents) {
    if (doc.split != Split::Train) continue;
    any = true;
    for (const auto& s : doc.sentences) {
      std::vector<std::string> sentence;
      sentence.reserve(s.size());
      for (std::size_t i = s.begin; i < s.end; ++i) sentence.push_back(doc.tokens[i].normalized);
      model.observe(sentence);
    }
  }
  if (!any) throw TrainingError("n-gram training requires at least one train document");
  return model;
}

TokenProbabilitySeries token_probs(const NgramModel& model, const Document& doc) {
  TokenProbabilitySeries out;
  out.doc_id = doc.id;
  out.tokens = doc.normalized_tokens();
  out.probs.reserve(doc.tokens.size());
  const std::size_t pad = static_cast<std::size_t>(model.order() - 1);
  for (const auto& s : doc.sentences) {
    std::vector<std::uint32_t> ids(pad, model.begin_id());
    for (std::size_t i = s.begin; i < s.end; ++i) ids.push_back(model.id(doc.tokens[i].normalized));
    for (std::size_t pos = pad; pos < ids.size(); ++pos) {
      NgramModel::Context ctx(ids.begin() + static_cast<std::ptrdiff_t>(pos - pad),
                              ids.begin() + static_cast<std::ptrdiff_t>(pos));
      const double p = model.prob(ids[pos], ctx);
      if (!(p > 0.0)) {
        throw DomainError("document '" + doc.id + "': zero probability at token " +
                          std::to_string(s.begin + pos - pad) + " (use smoothing k > 0)");
      }
      out.probs.push_back(p);
    }
  }
  return out;
}

std::string NgramProvider::name() const {
  std::ostringstream s;
  s << "ngram(order=" << model_->order() << ",k=" << model_->smoothing_k() << ")";
  return s.str();
}

SeriesMap parse_external_probs(std::string_view jsonl, const Corpus& corpus) {
  SeriesMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    TokenProbabilitySeries series;
    try {
      series.doc_id = rec.at("doc_id").get<std::string>();
      series.tokens = rec.at("tokens").get<std::vector<std::string>>();
      series.probs = rec.at("probs").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad sidecar record: ") + e.what(), line_no);
    }
    const Document* doc = corpus.find(series.doc_id);
    if (doc == nullptr) throw ValidationError("sidecar names unknown document '" + series.doc_id + "'");
    const std::size_t n = std::min(series.tokens.size(), doc->tokens.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (series.tokens[i] != doc->tokens[i].normalized) throw AlignmentError(series.doc_id, i);
    }
    if (series.tokens.size() != doc->tokens.size()) throw AlignmentError(series.doc_id, n);
    validate_series(series);
    if (out.count(series.doc_id)) {
      throw DuplicateError("sidecar repeats document '" + series.doc_id + "'");
    }
    out.emplace(series.doc_id, std::move(series));
  }
  return out;
}

SeriesMap load_external_probs(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open probability sidecar '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_external_probs(buf.str(), corpus);
}

TokenProbabilitySeries SidecarProvider::series(const Document& doc) const {
  auto it = series_.find(doc.id);
  if (it == series_.end()) {
    throw ValidationError("no probability series for document '" + doc.id + "' in " + origin_);
  }
  return it->second;
}

}  // namespace infodens
