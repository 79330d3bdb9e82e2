#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "infodens/corpus.hpp"

namespace infodens {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct AttentionConfig {
  std::size_t d_h = 64;
  std::size_t window = 3;  // odd
  double learning_rate = 0.05;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  // Documents scored concurrently during evaluation; training is sequential.
  std::size_t threads = 1;
};

// Windowed-embedding encoder, label-attention head and per-label logistic
// classifier.
//
//   H[i]  = mean of embeddings over the window centred at i
//   A     = softmax over token positions of H * query (one column per label)
//   c_j   = sum_i A[i, j] * H[i]
//   p_j   = sigmoid(head_w[j] . c_j + head_b[j])
struct AttentionModel {
  Vocabulary vocab;
  std::vector<std::string> labels;
  std::size_t d_h = 0;
  std::size_t window = 1;
  std::uint64_t seed = 0;
  Matrix embeddings;  // |vocab| x d_h
  Matrix query;       // d_h x m
  Matrix head_w;      // m x d_h
  std::vector<double> head_b;

  std::size_t label_count() const { return labels.size(); }
  // Throws ContractViolation if the parameter shapes disagree.
  void check_shapes() const;

  bool operator==(const AttentionModel&) const = default;
};

struct AttentionScores {
  std::string doc_id;
  Matrix matrix;               // n x m, columns are distributions over positions
  std::vector<double> pooled;  // length n
};

struct EvalMetrics {
  double auc_macro = 0.0;
  double auc_micro = 0.0;
  double f1_macro = 0.0;
  double f1_micro = 0.0;
  double p_at_5 = 0.0;
  std::size_t documents = 0;
  std::size_t macro_auc_labels = 0;  // labels with both classes present
};

AttentionModel init_attention_model(const Corpus& corpus, const AttentionConfig& config);

std::vector<std::size_t> token_ids(const AttentionModel& model, const Document& doc);

// Optional per-position embedding scale factors (empty means all 1).
Matrix hidden_features(const Matrix& embeddings, std::span<const std::size_t> ids, std::size_t window,
                       std::span<const double> scale = {});
Matrix hidden_features(const AttentionModel& model, const Document& doc, std::span<const double> scale = {});

// Column-wise softmax of H * U. Throws ContractViolation on shape mismatch.
Matrix label_attention(const Matrix& hidden, const Matrix& query);

std::vector<double> mean_pool(const Matrix& attention);

AttentionScores attention_scores(const AttentionModel& model, const Document& doc);

std::vector<double> predict(const AttentionModel& model, const Document& doc, std::span<const double> scale = {});

struct Gradients {
  Matrix embeddings;
  Matrix query;
  Matrix head_w;
  std::vector<double> head_b;

  explicit Gradients(const AttentionModel& model);
  void zero();
};

// Gold label indicator for a document against the model's label list.
std::vector<double> label_targets(const AttentionModel& model, const Document& doc);

// Mean binary cross-entropy over labels. When grads is non-null the
// gradient of this loss is added into it.
double loss_and_gradients(const AttentionModel& model, std::span<const std::size_t> ids,
                          std::span<const double> targets, Gradients* grads);

struct TrainReport {
  std::vector<double> epoch_loss;  // mean per-document loss seen during each epoch
};

// Mini-batch SGD with a fixed learning rate. Each step moves by the rate
// times the gradient of the per-label BCE summed over labels and over the
// batch; the reported loss is the mean per label. Throws TrainingError when
// the train split carries no labels.
AttentionModel train_attention(const Corpus& corpus, const AttentionConfig& config,
                               TrainReport* report = nullptr);

double roc_auc(std::span<const double> scores, std::span<const int> gold);

// scores[d][j] and gold[d][j] for documents d and labels j.
EvalMetrics compute_metrics(const std::vector<std::vector<double>>& scores,
                            const std::vector<std::vector<int>>& gold, double threshold = 0.5);

EvalMetrics evaluate(const AttentionModel& model, const std::vector<const Document*>& docs,
                     std::size_t threads = 1);
EvalMetrics evaluate(const AttentionModel& model, const Corpus& corpus, Split split, std::size_t threads = 1);

std::string serialize_model(const AttentionModel& model);
AttentionModel parse_model(std::string_view text);
void save_model(const AttentionModel& model, const std::filesystem::path& path);
AttentionModel load_model(const std::filesystem::path& path);

}  // namespace infodens
