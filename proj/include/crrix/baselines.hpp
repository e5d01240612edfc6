#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "crrix/corpus.hpp"
#include "crrix/error.hpp"
#include "crrix/random.hpp"

namespace crrix {

// Supervised comparison classifiers over raw term counts. Class 1 is
// policy-related, class 0 everything else.

namespace detail {

inline void check_binary(const BowCorpus& corpus, const std::vector<int>& labels) {
  if (labels.size() != corpus.size()) throw UsageError("baseline: label count does not match corpus");
  bool has0 = false;
  bool has1 = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw UsageError("baseline: labels must be 0 or 1");
    (y ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw DataError("baseline: training data must contain both classes");
}

}  // namespace detail

struct NbModel {
  double smoothing = 1.0;
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> log_prob;  ///< per class, V entries
};

/// Multinomial naive Bayes with additive smoothing.
inline NbModel nb_train(const BowCorpus& corpus, const std::vector<int>& labels, double smoothing = 1.0) {
  detail::check_binary(corpus, labels);
  if (!(smoothing > 0.0)) throw UsageError("nb: smoothing must be positive");
  const std::size_t V = corpus.vocab_size();
  NbModel m;
  m.smoothing = smoothing;
  std::array<double, 2> docs{};
  std::array<std::vector<double>, 2> counts{std::vector<double>(V, 0.0), std::vector<double>(V, 0.0)};
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const int c = labels[d];
    docs[c] += 1.0;
    for (const auto& tc : corpus.docs[d]) counts[c][tc.term] += tc.count;
  }
  for (int c = 0; c < 2; ++c) {
    m.log_prior[c] = std::log(docs[c] / (docs[0] + docs[1]));
    const double total = std::accumulate(counts[c].begin(), counts[c].end(), 0.0) + smoothing * static_cast<double>(V);
    m.log_prob[c].resize(V);
    for (std::size_t v = 0; v < V; ++v) m.log_prob[c][v] = std::log((counts[c][v] + smoothing) / total);
  }
  return m;
}

inline std::array<double, 2> nb_scores(const NbModel& m, const SparseDoc& doc) {
  std::array<double, 2> s = m.log_prior;
  for (const auto& tc : doc)
    for (int c = 0; c < 2; ++c) s[c] += tc.count * m.log_prob[c].at(tc.term);
  return s;
}

/// Ties go to class 0.
inline int nb_predict(const NbModel& m, const SparseDoc& doc) {
  const auto s = nb_scores(m, doc);
  return s[1] > s[0] ? 1 : 0;
}

struct SvmOptions {
  double weight_neg = 1.0;  ///< misclassification penalty for class 0
  double weight_pos = 1.0;  ///< misclassification penalty for class 1
  double lambda = 1e-2;
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  std::uint64_t seed = 42;
};

struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double weight_neg = 1.0;
  double weight_pos = 1.0;
  double lambda = 1e-2;
};

inline double svm_decision(const SvmModel& m, const SparseDoc& doc) {
  double s = m.bias;
  for (const auto& tc : doc) s += m.weights.at(tc.term) * tc.count;
  return s;
}

inline int svm_predict(const SvmModel& m, const SparseDoc& doc) { return svm_decision(m, doc) > 0.0 ? 1 : 0; }

/**
 * Linear SVM trained by stochastic subgradient descent on
 *   lambda/2 |w|^2 + mean_i c_{y_i} max(0, 1 - y_i (w.x_i + b)).
 * Each epoch visits the documents in a permutation drawn from `seed`;
 * step size eta_t = eta_0 / (1 + lambda eta_0 t). The bias is not regularised.
 */
inline SvmModel svm_train(const BowCorpus& corpus, const std::vector<int>& labels, const SvmOptions& opt = {}) {
  if (!(opt.lambda > 0.0)) throw UsageError("svm: lambda must be positive");
  if (opt.epochs == 0) throw UsageError("svm: epochs must be positive");
  if (!(opt.weight_neg > 0.0) || !(opt.weight_pos > 0.0)) throw UsageError("svm: class weights must be positive");
  if (!(opt.learning_rate > 0.0)) throw UsageError("svm: learning rate must be positive");
  detail::check_binary(corpus, labels);

  SvmModel m;
  m.weights.assign(corpus.vocab_size(), 0.0);
  m.weight_neg = opt.weight_neg;
  m.weight_pos = opt.weight_pos;
  m.lambda = opt.lambda;

  // w is stored as scale * raw so the L2 shrink is O(1) per step.
  std::vector<double> raw(corpus.vocab_size(), 0.0);
  double scale = 1.0;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opt.seed);
  std::size_t t = 0;
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (auto d : order) {
      const double eta = opt.learning_rate / (1.0 + opt.lambda * opt.learning_rate * static_cast<double>(t++));
      const double y = labels[d] ? 1.0 : -1.0;
      const double c = labels[d] ? opt.weight_pos : opt.weight_neg;
      double margin = m.bias;
      for (const auto& tc : corpus.docs[d]) margin += scale * raw[tc.term] * tc.count;
      margin *= y;
      scale *= (1.0 - eta * opt.lambda);
      if (scale < 1e-9) {
        for (auto& r : raw) r *= scale;
        scale = 1.0;
      }
      if (margin < 1.0) {
        for (const auto& tc : corpus.docs[d]) raw[tc.term] += eta * c * y * tc.count / scale;
        m.bias += eta * c * y;
      }
    }
  }
  for (std::size_t v = 0; v < raw.size(); ++v) m.weights[v] = scale * raw[v];
  for (double w : m.weights)
    if (!std::isfinite(w)) throw NumericalError("svm: weights diverged");
  return m;
}

inline nlohmann::json to_json(const NbModel& m) {
  return {{"smoothing", m.smoothing},
          {"log_prior", m.log_prior},
          {"log_prob", {m.log_prob[0], m.log_prob[1]}}};
}

inline NbModel nb_from_json(const nlohmann::json& j) {
  NbModel m;
  m.smoothing = j.at("smoothing").get<double>();
  m.log_prior = j.at("log_prior").get<std::array<double, 2>>();
  m.log_prob[0] = j.at("log_prob").at(0).get<std::vector<double>>();
  m.log_prob[1] = j.at("log_prob").at(1).get<std::vector<double>>();
  return m;
}

inline nlohmann::json to_json(const SvmModel& m) {
  return {{"weights", m.weights}, {"bias", m.bias}, {"weight_neg", m.weight_neg}, {"weight_pos", m.weight_pos}, {"lambda", m.lambda}};
}

inline SvmModel svm_from_json(const nlohmann::json& j) {
  SvmModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.weight_neg = j.at("weight_neg").get<double>();
  m.weight_pos = j.at("weight_pos").get<double>();
  m.lambda = j.at("lambda").get<double>();
  return m;
}

}  // namespace crrix
