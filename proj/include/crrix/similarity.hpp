#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crrix/corpus.hpp"
#include "crrix/error.hpp"
#include "crrix/lda.hpp"
#include "crrix/matrix.hpp"

namespace crrix {

/// (1/sqrt 2) * || sqrt(p) - sqrt(q) ||_2 over probability vectors.
inline double hellinger(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw UsageError("hellinger: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0 || q[k] < 0.0) throw UsageError("hellinger: negative probability");
    const double d = std::sqrt(p[k]) - std::sqrt(q[k]);
    sum += d * d;
  }
  return std::sqrt(sum) * (1.0 / std::numbers::sqrt2);
}

inline Matrix hellinger_topic_distance(const TopicModel& model) {
  const std::size_t K = model.num_topics();
  Matrix out(K, K);
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = a + 1; b < K; ++b) out(a, b) = out(b, a) = hellinger(model.phi.row(a), model.phi.row(b));
  return out;
}

/// 1 - |A ∩ B| / |A ∪ B| over the topics' top-j word sets.
inline Matrix jaccard_topic_distance(const TopicModel& model, std::size_t top_j) {
  if (top_j == 0 || top_j > model.vocab_size()) throw UsageError("jaccard: top_j must be in [1, V]");
  const std::size_t K = model.num_topics();
  std::vector<std::set<TermId>> sets;
  for (std::size_t k = 0; k < K; ++k) {
    const auto words = top_words(model, k, top_j);
    sets.emplace_back(words.begin(), words.end());
  }
  Matrix out(K, K);
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = a + 1; b < K; ++b) {
      std::size_t inter = 0;
      for (auto t : sets[a]) inter += sets[b].count(t);
      const std::size_t uni = sets[a].size() + sets[b].size() - inter;
      out(a, b) = out(b, a) = 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
    }
  }
  return out;
}

enum class Group { Regulatory, NonRegulatory, Unlabeled };

inline Group group_of(Label l) {
  switch (l) {
    case Label::Regulatory: return Group::Regulatory;
    case Label::NonRegulatory: return Group::NonRegulatory;
    case Label::Unlabeled: break;
  }
  return Group::Unlabeled;
}

inline const char* group_name(Group g) {
  switch (g) {
    case Group::Regulatory: return "r";
    case Group::NonRegulatory: return "non";
    case Group::Unlabeled: break;
  }
  return "u";
}

struct DistanceProfile {
  std::string article_id;
  Group group = Group::Unlabeled;
  double avg_dist = 0.0;
};

/**
 * Mean Hellinger distance from every article to all regulatory articles.
 * A regulatory article's own zero self-distance is part of its mean.
 */
inline std::vector<DistanceProfile> distance_profiles(const std::vector<std::string>& ids,
                                                      const std::vector<std::vector<double>>& thetas,
                                                      const std::vector<Group>& groups) {
  if (ids.size() != thetas.size() || ids.size() != groups.size()) throw UsageError("distance_profiles: length mismatch");
  std::vector<std::size_t> reg;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (groups[i] == Group::Regulatory) reg.push_back(i);
  if (reg.empty()) throw DataError("distance_profiles: no regulatory articles");

  std::vector<DistanceProfile> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double sum = 0.0;
    for (auto j : reg) sum += hellinger(thetas[i], thetas[j]);
    out[i] = {ids[i], groups[i], sum / static_cast<double>(reg.size())};
  }
  return out;
}

/// Profiles for every document of a model's training corpus using its theta rows.
inline std::vector<DistanceProfile> distance_profiles(const TopicModel& model, const BowCorpus& corpus) {
  if (model.num_docs() != corpus.size()) throw DataError("distance_profiles: theta rows do not match corpus");
  std::vector<std::string> ids;
  std::vector<std::vector<double>> thetas;
  std::vector<Group> groups;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    ids.push_back(corpus.meta[d].id);
    const auto row = model.theta.row(d);
    thetas.emplace_back(row.begin(), row.end());
    groups.push_back(group_of(corpus.meta[d].label));
  }
  return distance_profiles(ids, thetas, groups);
}

/// Type-7 sample quantile (linear interpolation between order statistics).
inline double quantile_linear(std::vector<double> values, double tau) {
  if (values.empty()) throw UsageError("quantile: empty sample");
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("quantile: tau outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * tau;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct ThresholdRule {
  double tau = 0.95;
  double threshold_value = 0.0;

  /// Boundary equality counts as regulatory.
  bool is_regulatory(double avg_dist) const { return avg_dist <= threshold_value; }
};

struct Classification {
  ThresholdRule rule;
  std::vector<std::string> ids;   ///< unlabeled articles, in profile order
  std::vector<bool> regulatory;   ///< parallel to ids
};

/// Threshold = tau-quantile of the regulatory profiles; unlabeled articles at or below it are regulatory.
inline Classification classify(const std::vector<DistanceProfile>& profiles, double tau = 0.95) {
  if (!(tau > 0.0 && tau < 1.0)) throw UsageError("classify: tau must lie in (0, 1)");
  std::vector<double> reg;
  for (const auto& p : profiles)
    if (p.group == Group::Regulatory) reg.push_back(p.avg_dist);
  if (reg.size() < 2) throw DataError("classify: need at least two regulatory profiles");
  Classification c;
  c.rule.tau = tau;
  c.rule.threshold_value = quantile_linear(std::move(reg), tau);
  for (const auto& p : profiles) {
    if (p.group != Group::Unlabeled) continue;
    c.ids.push_back(p.article_id);
    c.regulatory.push_back(c.rule.is_regulatory(p.avg_dist));
  }
  return c;
}

/// Rows are truth, columns predicted; class 1 is policy-related.
struct ConfusionMatrix {
  std::size_t tp = 0;  ///< truth 1, predicted 1
  std::size_t fn = 0;  ///< truth 1, predicted 0
  std::size_t fp = 0;  ///< truth 0, predicted 1
  std::size_t tn = 0;  ///< truth 0, predicted 0

  std::size_t total() const { return tp + fn + fp + tn; }
  double accuracy() const {
    return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
  }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw UsageError("confusion_matrix: length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1))
      throw UsageError("confusion_matrix: labels must be 0 or 1");
    if (truth[i] == 1) {
      predicted[i] == 1 ? ++cm.tp : ++cm.fn;
    } else {
      predicted[i] == 1 ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"rows", {{"1", {{"1", cm.tp}, {"0", cm.fn}, {"total", cm.tp + cm.fn}}},
                    {"0", {{"1", cm.fp}, {"0", cm.tn}, {"total", cm.fp + cm.tn}}},
                    {"total", {{"1", cm.tp + cm.fp}, {"0", cm.fn + cm.tn}, {"total", cm.total()}}}}},
          {"accuracy", cm.accuracy()}};
}

}  // namespace crrix
