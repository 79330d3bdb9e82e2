#pragma once

// Reference implementations written straight from the definitions. They are
// deliberately naive and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double shannon_entropy(const std::vector<std::string>& tokens) {
  std::map<std::string, double> counts;
  for (const auto& t : tokens) counts[t] += 1.0;
  const double n = static_cast<double>(tokens.size());
  double h = 0.0;
  for (const auto& [type, c] : counts) {
    const double p = c / n;
    h -= p * std::log(p);
  }
  return h;
}

inline double herdan(const std::vector<std::string>& tokens) {
  std::set<std::string> types(tokens.begin(), tokens.end());
  if (tokens.size() == 1) return 1.0;
  return std::log(static_cast<double>(types.size())) / std::log(static_cast<double>(tokens.size()));
}

inline double gaussian_kde_at(const std::vector<double>& samples, double h, double x) {
  double sum = 0.0;
  for (double s : samples) {
    const double z = (x - s) / h;
    sum += std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  }
  return sum / (static_cast<double>(samples.size()) * h);
}

// Smallest observed value t such that at least a fraction q of the sample
// is <= t.
inline double quantile_by_enumeration(const std::vector<double>& values, double q) {
  double best = std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(values.size());
  for (double t : values) {
    double at_or_below = 0.0;
    for (double v : values) at_or_below += v <= t ? 1.0 : 0.0;
    if (at_or_below >= q * n - 1e-9 && t < best) best = t;
  }
  return best;
}

inline std::vector<std::size_t> select_at(const std::vector<double>& pooled, double t) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    if (pooled[i] >= t) out.push_back(i);
  if (out.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pooled.size(); ++i)
      if (pooled[i] > pooled[best]) best = i;
    out.push_back(best);
  }
  return out;
}

inline double mean_length_at(const std::vector<std::vector<double>>& docs, double t) {
  double total = 0.0;
  for (const auto& d : docs) total += static_cast<double>(select_at(d, t).size());
  return total / static_cast<double>(docs.size());
}

// Every observed score is a candidate; the closest mean length wins, ties go
// to the larger threshold.
inline double calibrate_by_enumeration(const std::vector<std::vector<double>>& docs, double target) {
  std::set<double> candidates;
  for (const auto& d : docs) candidates.insert(d.begin(), d.end());
  double best_t = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    const double gap = std::fabs(mean_length_at(docs, t) - target);
    if (gap < best_gap || (gap == best_gap && t > best_t)) {
      best_gap = gap;
      best_t = t;
    }
  }
  return best_t;
}

// Mann-Whitney statistic: fraction of (positive, negative) pairs ranked
// correctly, ties counting one half.
inline double auc_by_pairs(const std::vector<double>& scores, const std::vector<int>& gold) {
  double good = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!gold[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (gold[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) good += 1.0;
      if (scores[i] == scores[j]) good += 0.5;
    }
  }
  return good / pairs;
}

inline double softmax_entry(const std::vector<double>& logits, std::size_t i) {
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z);
  return std::exp(logits[i]) / sum;
}

// Central difference of f at x along coordinate k of the parameter vector.
inline double central_difference(std::vector<double>& params, std::size_t k, double step,
                                 const std::function<double()>& f) {
  const double saved = params[k];
  params[k] = saved + step;
  const double up = f();
  params[k] = saved - step;
  const double down = f();
  params[k] = saved;
  return (up - down) / (2.0 * step);
}

inline double flesch(double words, double sentences, double syllables) {
  return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double below = 0.0;
      double equal = 0.0;
      for (double w : v) {
        below += w < v[i] ? 1.0 : 0.0;
        equal += w == v[i] ? 1.0 : 0.0;
      }
      r[i] = below + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
