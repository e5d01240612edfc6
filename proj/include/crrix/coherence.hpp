#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crrix/corpus.hpp"
#include "crrix/error.hpp"
#include "crrix/lda.hpp"

namespace crrix {

enum class CoherenceMeasure { UCI, UMass, Cv };

inline const char* measure_name(CoherenceMeasure m) {
  switch (m) {
    case CoherenceMeasure::UCI: return "uci";
    case CoherenceMeasure::UMass: return "umass";
    case CoherenceMeasure::Cv: break;
  }
  return "cv";
}

inline CoherenceMeasure parse_measure(const std::string& s) {
  if (s == "uci") return CoherenceMeasure::UCI;
  if (s == "umass") return CoherenceMeasure::UMass;
  if (s == "cv") return CoherenceMeasure::Cv;
  throw UsageError("unknown coherence measure '" + s + "' (expected cv, umass or uci)");
}

struct CoherenceConfig {
  std::size_t top_j = 10;
  double epsilon = 1e-12;
  double gamma = 1.0;
  std::size_t window = 110;
  CoherenceMeasure measure = CoherenceMeasure::Cv;

  void validate() const {
    if (top_j < 2) throw UsageError("coherence: top_j must be at least 2");
    if (!(epsilon > 0.0)) throw UsageError("coherence: epsilon must be positive");
    if (!(gamma > 0.0)) throw UsageError("coherence: gamma must be positive");
    if (window == 0) throw UsageError("coherence: window must be positive");
  }
};

struct CoherenceResult {
  double score = 0.0;
  std::vector<double> per_topic;
  std::vector<std::string> warnings;
};

enum class CountingBasis { Document, SlidingWindow };

/**
 * Marginal and joint occurrence probabilities for a fixed set of terms.
 *
 * Document basis: the unit is a non-empty document. Sliding-window basis:
 * windows of `window` consecutive tokens advancing by one; a document shorter
 * than the window forms a single window. Joint counts are taken from the
 * same units as the marginals, so P(a,b) <= min(P(a), P(b)) exactly.
 */
class CooccurrenceStats {
 public:
  CooccurrenceStats(const BowCorpus& corpus, const std::vector<TermId>& terms, CountingBasis basis, std::size_t window)
      : basis_(basis), terms_(terms) {
    std::sort(terms_.begin(), terms_.end());
    terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
    for (std::size_t i = 0; i < terms_.size(); ++i) local_[terms_[i]] = i;
    const std::size_t R = terms_.size();
    single_.assign(R, 0);
    joint_.assign(R * R, 0);

    std::vector<std::size_t> present;
    auto count_unit = [&]() {
      ++units_;
      for (std::size_t a = 0; a < present.size(); ++a) {
        ++single_[present[a]];
        for (std::size_t b = 0; b < present.size(); ++b) ++joint_[present[a] * R + present[b]];
      }
    };

    if (basis == CountingBasis::Document) {
      for (const auto& doc : corpus.docs) {
        if (doc.empty()) continue;
        present.clear();
        for (const auto& tc : doc)
          if (auto it = local_.find(tc.term); it != local_.end()) present.push_back(it->second);
        count_unit();
      }
      return;
    }

    if (!corpus.has_sequences()) throw DataError("sliding-window coherence needs token sequences in the corpus");
    std::vector<std::uint32_t> in_window(R, 0);
    for (const auto& seq : corpus.sequences) {
      if (seq.empty()) continue;
      std::fill(in_window.begin(), in_window.end(), 0);
      auto rebuild = [&]() {
        present.clear();
        for (std::size_t r = 0; r < R; ++r)
          if (in_window[r]) present.push_back(r);
      };
      auto bump = [&](TermId t, int delta) {
        if (auto it = local_.find(t); it != local_.end()) in_window[it->second] += delta;
      };
      const std::size_t w = std::min(window, seq.size());
      for (std::size_t i = 0; i < w; ++i) bump(seq[i], +1);
      rebuild();
      count_unit();
      for (std::size_t start = 1; start + w <= seq.size(); ++start) {
        bump(seq[start - 1], -1);
        bump(seq[start + w - 1], +1);
        rebuild();
        count_unit();
      }
    }
  }

  CountingBasis basis() const { return basis_; }
  std::size_t units() const { return units_; }
  bool contains(TermId t) const { return local_.count(t) > 0; }

  std::size_t count(TermId a) const { return single_[local_.at(a)]; }
  std::size_t count(TermId a, TermId b) const { return joint_[local_.at(a) * terms_.size() + local_.at(b)]; }

  double p(TermId a) const { return units_ ? static_cast<double>(count(a)) / static_cast<double>(units_) : 0.0; }
  double p(TermId a, TermId b) const { return units_ ? static_cast<double>(count(a, b)) / static_cast<double>(units_) : 0.0; }

 private:
  CountingBasis basis_;
  std::vector<TermId> terms_;
  std::unordered_map<TermId, std::size_t> local_;
  std::vector<std::size_t> single_;
  std::vector<std::size_t> joint_;
  std::size_t units_ = 0;
};

/// Map topic word lists onto a reference vocabulary; missing words become nullopt.
inline std::vector<std::vector<std::optional<TermId>>> map_topics(const std::vector<std::vector<std::string>>& topics,
                                                                  const Vocabulary& vocab) {
  std::vector<std::vector<std::optional<TermId>>> out;
  for (const auto& t : topics) {
    std::vector<std::optional<TermId>> row;
    for (const auto& w : t) row.push_back(vocab.find(w));
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<std::vector<std::string>> topic_terms(const TopicModel& model, const Vocabulary& vocab, std::size_t j) {
  if (model.vocab_fingerprint != vocab.fingerprint()) throw DataError("coherence: model/vocabulary fingerprint mismatch");
  std::vector<std::vector<std::string>> out;
  for (const auto& ids : top_words(model, j)) {
    std::vector<std::string> words;
    for (auto id : ids) words.push_back(vocab.term(id));
    out.push_back(std::move(words));
  }
  return out;
}

namespace detail {

inline std::vector<TermId> required_terms(const std::vector<std::vector<std::optional<TermId>>>& topics) {
  std::vector<TermId> out;
  for (const auto& t : topics)
    for (const auto& w : t)
      if (w) out.push_back(*w);
  return out;
}

inline void finish(CoherenceResult& r) {
  double total = 0.0;
  for (double s : r.per_topic) total += s;
  r.score = r.per_topic.empty() ? 0.0 : total / static_cast<double>(r.per_topic.size());
}

inline double signed_pow(double x, double g) { return g == 1.0 ? x : std::copysign(std::pow(std::abs(x), g), x); }

}  // namespace detail

/// (2/(J(J-1))) sum_{i>j} log[(P(w_i,w_j)+eps)/P(w_j)], document counts, w_1 the top-ranked word.
inline CoherenceResult coherence_umass(const std::vector<std::vector<std::string>>& topics, const BowCorpus& corpus,
                                       const CoherenceConfig& cfg) {
  cfg.validate();
  const auto mapped = map_topics(topics, corpus.vocabulary);
  CooccurrenceStats stats(corpus, detail::required_terms(mapped), CountingBasis::Document, cfg.window);
  CoherenceResult r;
  for (std::size_t t = 0; t < mapped.size(); ++t) {
    const auto& words = mapped[t];
    const std::size_t J = words.size();
    if (J < 2) throw UsageError("coherence: topic needs at least two words");
    for (std::size_t i = 0; i < J; ++i)
      if (!words[i] || stats.count(*words[i]) == 0)
        throw DataError("umass: top word '" + topics[t][i] + "' has zero document frequency");
    double sum = 0.0;
    for (std::size_t i = 1; i < J; ++i)
      for (std::size_t j = 0; j < i; ++j)
        sum += std::log((stats.p(*words[i], *words[j]) + cfg.epsilon) / stats.p(*words[j]));
    r.per_topic.push_back(2.0 / (static_cast<double>(J) * static_cast<double>(J - 1)) * sum);
  }
  detail::finish(r);
  return r;
}

/// (2/(J(J-1))) sum_{i<j} log[(P(w_i,w_j)+eps)/(P(w_i)P(w_j))], sliding-window counts.
inline CoherenceResult coherence_uci(const std::vector<std::vector<std::string>>& topics, const BowCorpus& reference,
                                     const CoherenceConfig& cfg) {
  cfg.validate();
  const auto mapped = map_topics(topics, reference.vocabulary);
  CoherenceResult r;
  const CountingBasis basis = reference.has_sequences() ? CountingBasis::SlidingWindow : CountingBasis::Document;
  if (basis == CountingBasis::Document) r.warnings.push_back("reference corpus has no token sequences; using document co-occurrence");
  CooccurrenceStats stats(reference, detail::required_terms(mapped), basis, cfg.window);
  std::size_t used = 0;
  for (std::size_t t = 0; t < mapped.size(); ++t) {
    const auto& words = mapped[t];
    const std::size_t J = words.size();
    if (J < 2) throw UsageError("coherence: topic needs at least two words");
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < J; ++i) {
      for (std::size_t j = i + 1; j < J; ++j) {
        if (!words[i] || !words[j] || stats.count(*words[i]) == 0 || stats.count(*words[j]) == 0) {
          r.warnings.push_back("uci: skipped pair (" + topics[t][i] + ", " + topics[t][j] + ") absent from reference");
          continue;
        }
        sum += std::log((stats.p(*words[i], *words[j]) + cfg.epsilon) / (stats.p(*words[i]) * stats.p(*words[j])));
        ++used;
      }
    }
    r.per_topic.push_back(2.0 / (static_cast<double>(J) * static_cast<double>(J - 1)) * sum);
  }
  if (used == 0) throw DataError("uci: every word pair was skipped");
  detail::finish(r);
  return r;
}

/// NPMI with additive smoothing of the joint probability.
inline double npmi(double p_ij, double p_i, double p_j, double epsilon) {
  return std::log((p_ij + epsilon) / (p_i * p_j)) / -std::log(p_ij + epsilon);
}

/**
 * C_v: context vectors v_i[j] = NPMI(w_i, w_j)^gamma over the topic's top
 * words, confirmation = cosine(v_i, sum_k v_k), averaged over words then topics.
 */
inline CoherenceResult coherence_cv(const std::vector<std::vector<std::string>>& topics, const BowCorpus& reference,
                                    const CoherenceConfig& cfg) {
  cfg.validate();
  const auto mapped = map_topics(topics, reference.vocabulary);
  CoherenceResult r;
  const CountingBasis basis = reference.has_sequences() ? CountingBasis::SlidingWindow : CountingBasis::Document;
  if (basis == CountingBasis::Document) r.warnings.push_back("reference corpus has no token sequences; using document co-occurrence");
  CooccurrenceStats stats(reference, detail::required_terms(mapped), basis, cfg.window);

  for (std::size_t t = 0; t < mapped.size(); ++t) {
    const auto& words = mapped[t];
    const std::size_t J = words.size();
    if (J < 2) throw UsageError("coherence: topic needs at least two words");
    auto known = [&](std::size_t i) { return words[i] && stats.count(*words[i]) > 0; };
    std::vector<std::vector<double>> ctx(J, std::vector<double>(J, 0.0));
    for (std::size_t i = 0; i < J; ++i) {
      if (!known(i)) {
        r.warnings.push_back("cv: word '" + topics[t][i] + "' absent from reference");
        continue;
      }
      for (std::size_t j = 0; j < J; ++j) {
        if (!known(j)) continue;
        const double v = npmi(stats.p(*words[i], *words[j]), stats.p(*words[i]), stats.p(*words[j]), cfg.epsilon);
        ctx[i][j] = detail::signed_pow(v, cfg.gamma);
      }
    }
    std::vector<double> agg(J, 0.0);
    for (const auto& v : ctx)
      for (std::size_t j = 0; j < J; ++j) agg[j] += v[j];
    double agg_norm = 0.0;
    for (double a : agg) agg_norm += a * a;
    agg_norm = std::sqrt(agg_norm);

    double sum = 0.0;
    for (std::size_t i = 0; i < J; ++i) {
      double dot = 0.0;
      double norm = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        dot += ctx[i][j] * agg[j];
        norm += ctx[i][j] * ctx[i][j];
      }
      if (norm == 0.0 || agg_norm == 0.0) {
        r.warnings.push_back("cv: zero-norm context vector for '" + topics[t][i] + "'");
        continue;
      }
      sum += dot / (std::sqrt(norm) * agg_norm);
    }
    r.per_topic.push_back(sum / static_cast<double>(J));
  }
  detail::finish(r);
  return r;
}

inline CoherenceResult coherence(const std::vector<std::vector<std::string>>& topics, const BowCorpus& training,
                                 const BowCorpus& reference, const CoherenceConfig& cfg) {
  switch (cfg.measure) {
    case CoherenceMeasure::UMass: return coherence_umass(topics, training, cfg);
    case CoherenceMeasure::UCI: return coherence_uci(topics, reference, cfg);
    case CoherenceMeasure::Cv: break;
  }
  return coherence_cv(topics, reference, cfg);
}

inline CoherenceResult coherence_umass(const TopicModel& model, const BowCorpus& corpus, const CoherenceConfig& cfg) {
  return coherence_umass(topic_terms(model, corpus.vocabulary, cfg.top_j), corpus, cfg);
}

/// `training` supplies the model's vocabulary; probabilities come from `reference`.
inline CoherenceResult coherence_uci(const TopicModel& model, const BowCorpus& training, const BowCorpus& reference,
                                     const CoherenceConfig& cfg) {
  return coherence_uci(topic_terms(model, training.vocabulary, cfg.top_j), reference, cfg);
}

inline CoherenceResult coherence_cv(const TopicModel& model, const BowCorpus& training, const BowCorpus& reference,
                                    const CoherenceConfig& cfg) {
  return coherence_cv(topic_terms(model, training.vocabulary, cfg.top_j), reference, cfg);
}

inline constexpr double kScoreTieTolerance = 1e-12;

struct KRange {
  std::size_t min = 2;
  std::size_t max = 25;
};

struct SelectKResult {
  std::size_t best_k = 0;
  std::vector<std::pair<std::size_t, double>> scores;
  std::vector<TopicModel> models;  ///< one per k, same order as scores
};

/**
 * Train one model per K (seed = template seed XOR K), score each with
 * cfg.measure and return the argmax, ties toward smaller K. Scores within
 * kScoreTieTolerance (relative) count as ties, so summation-order noise
 * never favours a larger K. Trainings run on up to `threads` workers;
 * results do not depend on the thread count.
 */
inline SelectKResult select_k(const BowCorpus& corpus, KRange range, const LdaHyperparams& tmpl, const CoherenceConfig& cfg,
                              const BowCorpus* reference = nullptr, std::size_t threads = 0) {
  if (range.min > range.max) throw UsageError("select_k: empty K range");
  if (range.min < 2) throw UsageError("select_k: K must be at least 2");
  cfg.validate();
  const BowCorpus& ref = reference ? *reference : corpus;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  const std::size_t n = range.max - range.min + 1;
  std::vector<std::optional<std::pair<TopicModel, double>>> results(n);
  auto job = [&](std::size_t i) {
    LdaHyperparams h = tmpl;
    h.k = range.min + i;
    h.seed = tmpl.seed ^ static_cast<std::uint64_t>(h.k);
    TopicModel m = train(corpus, h);
    const double s = coherence(topic_terms(m, corpus.vocabulary, cfg.top_j), corpus, ref, cfg).score;
    return std::make_pair(std::move(m), s);
  };
  for (std::size_t start = 0; start < n; start += threads) {
    std::vector<std::future<std::pair<TopicModel, double>>> batch;
    for (std::size_t i = start; i < std::min(n, start + threads); ++i) batch.push_back(std::async(std::launch::async, job, i));
    for (std::size_t b = 0; b < batch.size(); ++b) results[start + b] = batch[b].get();
  }

  SelectKResult out;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = range.min + i;
    const double s = results[i]->second;
    out.scores.emplace_back(k, s);
    out.models.push_back(std::move(results[i]->first));
    if (!(s <= best + kScoreTieTolerance * std::max(1.0, std::abs(best)))) {
      best = s;
      out.best_k = k;
    }
  }
  if (out.best_k == 0) throw NumericalError("select_k: no finite coherence score");
  return out;
}

}  // namespace crrix
