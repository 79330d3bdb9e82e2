#include "infodens/attention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "infodens/error.hpp"
#include "infodens/log.hpp"
#include "infodens/parallel.hpp"
#include "infodens/rng.hpp"

namespace infodens {

namespace {

constexpr double kEmbeddingInit = 0.05;
constexpr const char* kModelFormat = "infodens-attention-model";
constexpr int kModelVersion = 1;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Forward {
  Matrix hidden;            // n x d
  Matrix attention;         // n x m
  Matrix context;           // m x d
  std::vector<double> logit;  // m
  std::vector<double> prob;   // m
};

Forward forward(const AttentionModel& model, std::span<const std::size_t> ids, std::span<const double> scale) {
  Forward f;
  f.hidden = hidden_features(model.embeddings, ids, model.window, scale);
  f.attention = label_attention(f.hidden, model.query);
  const std::size_t n = ids.size();
  const std::size_t m = model.label_count();
  const std::size_t d = model.d_h;
  f.context = Matrix(m, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto h = f.hidden.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double a = f.attention(i, j);
      auto c = f.context.row(j);
      for (std::size_t k = 0; k < d; ++k) c[k] += a * h[k];
    }
  }
  f.logit.resize(m);
  f.prob.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    auto w = model.head_w.row(j);
    auto c = f.context.row(j);
    double s = model.head_b[j];
    for (std::size_t k = 0; k < d; ++k) s += w[k] * c[k];
    f.logit[j] = s;
    f.prob[j] = sigmoid(s);
  }
  return f;
}

void fill_uniform(Matrix& m, Rng& rng, double limit) {
  for (auto& x : m.data()) x = rng.uniform(-limit, limit);
}

}  // namespace

void AttentionModel::check_shapes() const {
  const std::size_t m = labels.size();
  if (embeddings.rows() != vocab.size() || embeddings.cols() != d_h || query.rows() != d_h ||
      query.cols() != m || head_w.rows() != m || head_w.cols() != d_h || head_b.size() != m) {
    throw ContractViolation("attention model parameter shapes are inconsistent");
  }
  if (window == 0 || window % 2 == 0) throw ContractViolation("context window must be odd");
}

AttentionModel init_attention_model(const Corpus& corpus, const AttentionConfig& config) {
  if (config.d_h == 0) throw ValidationError("hidden size must be positive");
  if (config.window == 0 || config.window % 2 == 0) throw ValidationError("context window must be odd");
  AttentionModel model;
  model.vocab = corpus.token_vocab;
  model.labels = corpus.label_vocab;
  model.d_h = config.d_h;
  model.window = config.window;
  model.seed = config.seed;
  const std::size_t m = model.labels.size();
  Rng rng(config.seed);
  model.embeddings = Matrix(model.vocab.size(), config.d_h);
  fill_uniform(model.embeddings, rng, kEmbeddingInit);
  // Glorot-uniform for the query and the label head.
  const double limit = std::sqrt(6.0 / static_cast<double>(config.d_h + std::max<std::size_t>(m, 1)));
  model.query = Matrix(config.d_h, m);
  fill_uniform(model.query, rng, limit);
  model.head_w = Matrix(m, config.d_h);
  fill_uniform(model.head_w, rng, limit);
  model.head_b.assign(m, 0.0);
  return model;
}

std::vector<std::size_t> token_ids(const AttentionModel& model, const Document& doc) {
  std::vector<std::size_t> ids;
  ids.reserve(doc.tokens.size());
  for (const auto& t : doc.tokens) ids.push_back(model.vocab.id(t.normalized));
  return ids;
}

Matrix hidden_features(const Matrix& embeddings, std::span<const std::size_t> ids, std::size_t window,
                       std::span<const double> scale) {
  if (ids.empty()) throw DomainError("hidden features of an empty document");
  if (!scale.empty() && scale.size() != ids.size()) {
    throw ContractViolation("scale vector length does not match the document");
  }
  const std::size_t n = ids.size();
  const std::size_t d = embeddings.cols();
  const std::size_t radius = window / 2;
  Matrix hidden(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= radius ? i - radius : 0;
    const std::size_t hi = std::min(n, i + radius + 1);
    auto h = hidden.row(i);
    for (std::size_t t = lo; t < hi; ++t) {
      auto e = embeddings.row(ids[t]);
      if (scale.empty()) {
        for (std::size_t k = 0; k < d; ++k) h[k] += e[k];
      } else {
        const double s = scale[t];
        for (std::size_t k = 0; k < d; ++k) h[k] += s * e[k];
      }
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    if (hi - lo > 1) {
      for (std::size_t k = 0; k < d; ++k) h[k] *= inv;
    }
  }
  return hidden;
}

Matrix hidden_features(const AttentionModel& model, const Document& doc, std::span<const double> scale) {
  auto ids = token_ids(model, doc);
  return hidden_features(model.embeddings, ids, model.window, scale);
}

Matrix label_attention(const Matrix& hidden, const Matrix& query) {
  if (hidden.cols() != query.rows()) {
    throw ContractViolation("hidden width " + std::to_string(hidden.cols()) + " does not match query rows " +
                            std::to_string(query.rows()));
  }
  const std::size_t n = hidden.rows();
  const std::size_t m = query.cols();
  const std::size_t d = hidden.cols();
  Matrix a(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    auto h = hidden.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      const double hk = h[k];
      if (hk == 0.0) continue;
      auto u = query.row(k);
      for (std::size_t j = 0; j < m; ++j) a(i, j) += hk * u[j];
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, a(i, j));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a(i, j) = std::exp(a(i, j) - mx);
      sum += a(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) a(i, j) /= sum;
  }
  return a;
}

std::vector<double> mean_pool(const Matrix& attention) {
  std::vector<double> pooled(attention.rows(), 0.0);
  const double m = static_cast<double>(attention.cols());
  for (std::size_t i = 0; i < attention.rows(); ++i) {
    double sum = 0.0;
    for (double v : attention.row(i)) sum += v;
    pooled[i] = sum / m;
  }
  return pooled;
}

AttentionScores attention_scores(const AttentionModel& model, const Document& doc) {
  AttentionScores s;
  s.doc_id = doc.id;
  s.matrix = label_attention(hidden_features(model, doc), model.query);
  s.pooled = mean_pool(s.matrix);
  return s;
}

std::vector<double> predict(const AttentionModel& model, const Document& doc, std::span<const double> scale) {
  auto ids = token_ids(model, doc);
  return forward(model, ids, scale).prob;
}

Gradients::Gradients(const AttentionModel& model)
    : embeddings(model.embeddings.rows(), model.embeddings.cols()),
      query(model.query.rows(), model.query.cols()),
      head_w(model.head_w.rows(), model.head_w.cols()),
      head_b(model.head_b.size(), 0.0) {}

void Gradients::zero() {
  embeddings.fill(0.0);
  query.fill(0.0);
  head_w.fill(0.0);
  std::fill(head_b.begin(), head_b.end(), 0.0);
}

std::vector<double> label_targets(const AttentionModel& model, const Document& doc) {
  std::vector<double> y(model.label_count(), 0.0);
  for (const auto& l : doc.labels) {
    auto it = std::lower_bound(model.labels.begin(), model.labels.end(), l);
    if (it != model.labels.end() && *it == l) y[static_cast<std::size_t>(it - model.labels.begin())] = 1.0;
  }
  return y;
}

double loss_and_gradients(const AttentionModel& model, std::span<const std::size_t> ids,
                          std::span<const double> targets, Gradients* grads) {
  const std::size_t m = model.label_count();
  if (targets.size() != m) throw ContractViolation("target vector length does not match label count");
  Forward f = forward(model, ids, {});
  const double inv_m = 1.0 / static_cast<double>(m);
  double loss = 0.0;
  for (std::size_t j = 0; j < m; ++j) loss += softplus(f.logit[j]) - targets[j] * f.logit[j];
  loss *= inv_m;
  if (grads == nullptr) return loss;

  const std::size_t n = ids.size();
  const std::size_t d = model.d_h;
  // dL/dlogit_j, then back through the head, the attention pooling, the
  // softmax over positions and the windowed encoder.
  Matrix d_context(m, d);
  for (std::size_t j = 0; j < m; ++j) {
    const double g = (f.prob[j] - targets[j]) * inv_m;
    grads->head_b[j] += g;
    auto c = f.context.row(j);
    auto w = model.head_w.row(j);
    auto gw = grads->head_w.row(j);
    auto dc = d_context.row(j);
    for (std::size_t k = 0; k < d; ++k) {
      gw[k] += g * c[k];
      dc[k] = g * w[k];
    }
  }
  Matrix d_hidden(n, d);
  Matrix d_logits(n, m);  // gradient wrt H*U before softmax
  for (std::size_t j = 0; j < m; ++j) {
    auto dc = d_context.row(j);
    double weighted = 0.0;
    std::vector<double> d_att(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto h = f.hidden.row(i);
      double v = 0.0;
      for (std::size_t k = 0; k < d; ++k) v += dc[k] * h[k];
      d_att[i] = v;
      weighted += f.attention(i, j) * v;
      const double a = f.attention(i, j);
      auto dh = d_hidden.row(i);
      for (std::size_t k = 0; k < d; ++k) dh[k] += a * dc[k];
    }
    for (std::size_t i = 0; i < n; ++i) d_logits(i, j) = f.attention(i, j) * (d_att[i] - weighted);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto h = f.hidden.row(i);
    auto dh = d_hidden.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      auto u = model.query.row(k);
      auto gu = grads->query.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double dz = d_logits(i, j);
        gu[j] += h[k] * dz;
        acc += dz * u[j];
      }
      dh[k] += acc;
    }
  }
  const std::size_t radius = model.window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= radius ? i - radius : 0;
    const std::size_t hi = std::min(n, i + radius + 1);
    const double inv = 1.0 / static_cast<double>(hi - lo);
    auto dh = d_hidden.row(i);
    for (std::size_t t = lo; t < hi; ++t) {
      auto ge = grads->embeddings.row(ids[t]);
      for (std::size_t k = 0; k < d; ++k) ge[k] += inv * dh[k];
    }
  }
  return loss;
}

AttentionModel train_attention(const Corpus& corpus, const AttentionConfig& config, TrainReport* report) {
  auto train_docs = corpus.split(Split::Train);
  bool any_label = false;
  for (const auto* d : train_docs) any_label = any_label || !d->labels.empty();
  if (!any_label) throw TrainingError("attention training needs labeled train documents");
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");

  AttentionModel model = init_attention_model(corpus, config);
  std::vector<std::vector<std::size_t>> ids;
  std::vector<std::vector<double>> targets;
  ids.reserve(train_docs.size());
  for (const auto* d : train_docs) {
    ids.push_back(token_ids(model, *d));
    targets.push_back(label_targets(model, *d));
  }

  // A separate stream from the initializer so that the number of epochs does
  // not change the initial parameters.
  Rng order_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train_docs.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients grads(model);
  const double lr = config.learning_rate;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      grads.zero();
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        epoch_loss += loss_and_gradients(model, ids[i], targets[i], &grads);
      }
      // The rate applies to the per-label BCE summed over labels and over
      // the documents of the mini-batch.
      const double step = lr * static_cast<double>(model.label_count());
      auto apply = [step](std::vector<double>& param, const std::vector<double>& grad) {
        for (std::size_t k = 0; k < param.size(); ++k) param[k] -= step * grad[k];
      };
      apply(model.embeddings.data(), grads.embeddings.data());
      apply(model.query.data(), grads.query.data());
      apply(model.head_w.data(), grads.head_w.data());
      apply(model.head_b, grads.head_b);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (report != nullptr) report->epoch_loss.push_back(epoch_loss);
    std::ostringstream msg;
    msg << "epoch " << epoch + 1 << "/" << config.epochs << " loss " << epoch_loss;
    log::write(log::Level::Debug, msg.str());
  }
  return model;
}

double roc_auc(std::span<const double> scores, std::span<const int> gold) {
  if (scores.size() != gold.size()) throw ContractViolation("scores and gold differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double pos = 0.0;
  double neg = 0.0;
  for (int g : gold) (g ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0) return std::nan("");
  // Trapezoids over the ROC step function; tied scores form one diagonal step.
  double area = 0.0;
  double tp = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    double tp_g = 0.0;
    double fp_g = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (gold[idx[j]] ? tp_g : fp_g) += 1.0;
      ++j;
    }
    area += fp_g * (tp + 0.5 * tp_g);
    tp += tp_g;
    i = j;
  }
  return area / (pos * neg);
}

EvalMetrics compute_metrics(const std::vector<std::vector<double>>& scores,
                            const std::vector<std::vector<int>>& gold, double threshold) {
  if (scores.size() != gold.size()) throw ContractViolation("scores and gold differ in document count");
  EvalMetrics out;
  out.documents = scores.size();
  if (scores.empty()) throw DomainError("evaluation over zero documents");
  const std::size_t m = scores.front().size();
  for (std::size_t d = 0; d < scores.size(); ++d) {
    if (scores[d].size() != m || gold[d].size() != m) throw ContractViolation("ragged score matrix");
  }

  auto f1 = [](double tp, double fp, double fn) {
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  };

  std::vector<double> all_scores;
  std::vector<int> all_gold;
  double tp_all = 0.0, fp_all = 0.0, fn_all = 0.0;
  double auc_sum = 0.0;
  double f1_sum = 0.0;
  std::size_t auc_labels = 0;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> s(scores.size());
    std::vector<int> g(scores.size());
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t d = 0; d < scores.size(); ++d) {
      s[d] = scores[d][j];
      g[d] = gold[d][j] ? 1 : 0;
      const bool predicted = s[d] >= threshold;
      if (predicted && g[d]) tp += 1.0;
      if (predicted && !g[d]) fp += 1.0;
      if (!predicted && g[d]) fn += 1.0;
    }
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
    f1_sum += f1(tp, fp, fn);
    const double auc = roc_auc(s, g);
    if (std::isnan(auc)) {
      log::write(log::Level::Debug, "label " + std::to_string(j) + " lacks a positive or negative; excluded from macro AUC");
    } else {
      auc_sum += auc;
      ++auc_labels;
    }
    all_scores.insert(all_scores.end(), s.begin(), s.end());
    all_gold.insert(all_gold.end(), g.begin(), g.end());
  }
  out.macro_auc_labels = auc_labels;
  out.auc_macro = auc_labels > 0 ? auc_sum / static_cast<double>(auc_labels) : 0.5;
  const double micro = roc_auc(all_scores, all_gold);
  out.auc_micro = std::isnan(micro) ? 0.5 : micro;
  out.f1_macro = m > 0 ? f1_sum / static_cast<double>(m) : 0.0;
  out.f1_micro = f1(tp_all, fp_all, fn_all);

  double p5 = 0.0;
  for (std::size_t d = 0; d < scores.size(); ++d) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t k = std::min<std::size_t>(5, m);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (scores[d][a] != scores[d][b]) return scores[d][a] > scores[d][b];
                        return a < b;
                      });
    std::size_t hits = 0;
    for (std::size_t t = 0; t < k; ++t) hits += gold[d][idx[t]] ? 1 : 0;
    p5 += static_cast<double>(hits) / 5.0;
  }
  out.p_at_5 = p5 / static_cast<double>(scores.size());
  return out;
}

EvalMetrics evaluate(const AttentionModel& model, const std::vector<const Document*>& docs, std::size_t threads) {
  if (docs.empty()) throw DomainError("evaluation split is empty");
  std::vector<std::vector<double>> scores(docs.size());
  std::vector<std::vector<int>> gold(docs.size());
  parallel_for(docs.size(), threads, [&](std::size_t i) {
    scores[i] = predict(model, *docs[i]);
    auto y = label_targets(model, *docs[i]);
    gold[i].assign(y.begin(), y.end());
  });
  return compute_metrics(scores, gold);
}

EvalMetrics evaluate(const AttentionModel& model, const Corpus& corpus, Split split, std::size_t threads) {
  return evaluate(model, corpus.split(split), threads);
}

std::string serialize_model(const AttentionModel& model) {
  model.check_shapes();
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["d_h"] = model.d_h;
  j["window"] = model.window;
  j["seed"] = model.seed;
  j["labels"] = model.labels;
  j["vocab"] = {{"types", model.vocab.types()}, {"frequencies", model.vocab.frequencies()}};
  j["embeddings"] = model.embeddings.data();
  j["query"] = model.query.data();
  j["head_w"] = model.head_w.data();
  j["head_b"] = model.head_b;
  return j.dump();
}

AttentionModel parse_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed model checkpoint: ") + e.what(), 1);
  }
  AttentionModel model;
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ValidationError("not an attention model checkpoint");
    if (j.at("version").get<int>() != kModelVersion) {
      throw ValidationError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
    }
    model.d_h = j.at("d_h").get<std::size_t>();
    model.window = j.at("window").get<std::size_t>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.labels = j.at("labels").get<std::vector<std::string>>();
    model.vocab = Vocabulary::from_columns(j.at("vocab").at("types").get<std::vector<std::string>>(),
                                           j.at("vocab").at("frequencies").get<std::vector<std::size_t>>());
    const std::size_t m = model.labels.size();
    auto load = [&](const char* key, std::size_t rows, std::size_t cols) {
      Matrix mat(rows, cols);
      auto values = j.at(key).get<std::vector<double>>();
      if (values.size() != rows * cols) throw ValidationError(std::string("checkpoint array '") + key + "' has wrong size");
      mat.data() = std::move(values);
      return mat;
    };
    model.embeddings = load("embeddings", model.vocab.size(), model.d_h);
    model.query = load("query", model.d_h, m);
    model.head_w = load("head_w", m, model.d_h);
    model.head_b = j.at("head_b").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model checkpoint: ") + e.what());
  }
  model.check_shapes();
  return model;
}

void save_model(const AttentionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model '" + path.string() + "'");
  out << serialize_model(model) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

AttentionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace infodens
