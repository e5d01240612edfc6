#pragma once

/*
 * Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
 *
 *   theta_d ~ Dir(alpha),  phi_k ~ Dir(beta)
 *   z_dn ~ Mult(theta_d),  w_dn ~ Mult(phi_{z_dn})
 *
 * Full conditional for one token with its own assignment removed:
 *
 *   p(z = k | rest) ∝ (n_dk + alpha) (n_kw + beta) / (n_k + V beta)
 *
 * Each sweep resamples every document against the topic-word counts of the
 * previous sweep plus that document's own in-sweep changes, so documents are
 * independent within a sweep. Each document draws from its own xoshiro256**
 * stream keyed by (seed, document content, sweep), which makes the result
 * independent of document order and gives duplicated documents identical
 * assignments.
 */

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crrix/corpus.hpp"
#include "crrix/error.hpp"
#include "crrix/hash.hpp"
#include "crrix/matrix.hpp"
#include "crrix/random.hpp"

namespace crrix {

struct LdaHyperparams {
  std::size_t k = 14;
  double alpha = 0.01;
  double beta = 0.1;
  std::size_t iterations = 1000;
  std::size_t burn_in = 200;
  std::uint64_t seed = 42;

  void validate() const {
    if (k == 0) throw UsageError("lda: K must be at least 1");
    if (!(alpha > 0.0) || !(beta > 0.0)) throw UsageError("lda: alpha and beta must be positive");
    if (iterations == 0) throw UsageError("lda: iterations must be positive");
    if (burn_in >= iterations) throw UsageError("lda: burn_in must be smaller than iterations");
  }
};

struct TopicModel {
  LdaHyperparams hyper;
  Matrix phi;    ///< K x V
  Matrix theta;  ///< M x K, one row per corpus document (empty docs uniform)
  std::uint64_t vocab_fingerprint = 0;
  std::uint64_t corpus_fingerprint = 0;
  std::size_t trained_on = 0;  ///< non-empty documents used for sampling

  std::size_t num_topics() const { return phi.rows(); }
  std::size_t vocab_size() const { return phi.cols(); }
  std::size_t num_docs() const { return theta.rows(); }
};

/// Indices of the `j` most probable terms of topic `k`, ties by lower index.
inline std::vector<TermId> top_words(const TopicModel& m, std::size_t k, std::size_t j) {
  const auto row = m.phi.row(k);
  std::vector<TermId> idx(row.size());
  std::iota(idx.begin(), idx.end(), TermId{0});
  j = std::min(j, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(j), idx.end(),
                    [&](TermId a, TermId b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
  idx.resize(j);
  return idx;
}

inline std::vector<std::vector<TermId>> top_words(const TopicModel& m, std::size_t j) {
  std::vector<std::vector<TermId>> out;
  for (std::size_t k = 0; k < m.num_topics(); ++k) out.push_back(top_words(m, k, j));
  return out;
}

namespace detail {

inline std::uint64_t doc_key(const SparseDoc& d) {
  Fnv1a h;
  for (const auto& tc : d) {
    h.update_u64(tc.term);
    h.update_u64(tc.count);
  }
  return h.digest();
}

/// Log-likelihood of sparse docs under explicit phi/theta.
inline double log_likelihood(const Matrix& phi, const Matrix& theta, std::span<const SparseDoc> docs) {
  const std::size_t K = phi.rows();
  double ll = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& tc : docs[d]) {
      double p = 0.0;
      for (std::size_t k = 0; k < K; ++k) p += theta(d, k) * phi(k, tc.term);
      ll += tc.count * std::log(p);
    }
  }
  return ll;
}

class GibbsState {
 public:
  GibbsState(const BowCorpus& corpus, const LdaHyperparams& hyper)
      : corpus_(corpus), hyper_(hyper), K_(hyper.k), V_(corpus.vocab_size()) {
    for (std::size_t d = 0; d < corpus.size(); ++d)
      if (!corpus.docs[d].empty()) active_.push_back(d);
    words_.resize(active_.size());
    slots_.resize(active_.size());
    z_.resize(active_.size());
    keys_.resize(active_.size());
    ndk_.assign(active_.size() * K_, 0);
    nkv_.assign(K_ * V_, 0);
    nk_.assign(K_, 0);

    for (std::size_t a = 0; a < active_.size(); ++a) {
      const auto& doc = corpus.docs[active_[a]];
      keys_[a] = doc_key(doc);
      for (std::size_t s = 0; s < doc.size(); ++s) {
        for (std::uint32_t c = 0; c < doc[s].count; ++c) {
          words_[a].push_back(doc[s].term);
          slots_[a].push_back(static_cast<std::uint32_t>(s));
        }
      }
      Rng rng(derive_seed(hyper.seed, keys_[a], 0));
      z_[a].resize(words_[a].size());
      for (std::size_t i = 0; i < words_[a].size(); ++i) {
        const auto k = static_cast<std::uint32_t>(rng.below(K_));
        z_[a][i] = k;
        ++ndk_[a * K_ + k];
        ++nkv_[k * V_ + words_[a][i]];
        ++nk_[k];
      }
    }
  }

  std::size_t active_docs() const { return active_.size(); }

  void sweep(std::uint64_t iteration) {
    const std::vector<std::int64_t> prev_nkv = nkv_;
    const std::vector<std::int64_t> prev_nk = nk_;
    std::vector<double> weights(K_);
    std::vector<std::int64_t> delta;
    std::vector<std::int64_t> delta_k(K_);
    const double vbeta = static_cast<double>(V_) * hyper_.beta;

    for (std::size_t a = 0; a < active_.size(); ++a) {
      const auto& doc = corpus_.docs[active_[a]];
      delta.assign(doc.size() * K_, 0);
      std::fill(delta_k.begin(), delta_k.end(), 0);
      std::int64_t* ndk = &ndk_[a * K_];
      Rng rng(derive_seed(hyper_.seed, keys_[a], iteration));

      for (std::size_t i = 0; i < words_[a].size(); ++i) {
        const TermId w = words_[a][i];
        const std::size_t s = slots_[a][i];
        const std::uint32_t old = z_[a][i];
        --ndk[old];
        --delta[s * K_ + old];
        --delta_k[old];
        for (std::size_t k = 0; k < K_; ++k) {
          const double nkw = static_cast<double>(prev_nkv[k * V_ + w] + delta[s * K_ + k]);
          const double nk = static_cast<double>(prev_nk[k] + delta_k[k]);
          weights[k] = (static_cast<double>(ndk[k]) + hyper_.alpha) * (nkw + hyper_.beta) / (nk + vbeta);
        }
        const auto k_new = static_cast<std::uint32_t>(rng.categorical(weights));
        z_[a][i] = k_new;
        ++ndk[k_new];
        ++delta[s * K_ + k_new];
        ++delta_k[k_new];
      }
      for (std::size_t s = 0; s < doc.size(); ++s)
        for (std::size_t k = 0; k < K_; ++k) nkv_[k * V_ + doc[s].term] += delta[s * K_ + k];
      for (std::size_t k = 0; k < K_; ++k) nk_[k] += delta_k[k];
    }
#ifndef NDEBUG
    check_counts();
#endif
  }

  void check_counts() const {
    for (std::size_t k = 0; k < K_; ++k) {
      std::int64_t total = 0;
      for (std::size_t v = 0; v < V_; ++v) {
        assert(nkv_[k * V_ + v] >= 0);
        total += nkv_[k * V_ + v];
      }
      assert(total == nk_[k]);
      (void)total;
    }
    for (std::size_t a = 0; a < active_.size(); ++a) {
      std::int64_t total = 0;
      for (std::size_t k = 0; k < K_; ++k) total += ndk_[a * K_ + k];
      assert(total == static_cast<std::int64_t>(words_[a].size()));
      (void)total;
    }
  }

  Matrix phi() const {
    Matrix out(K_, V_);
    const double vbeta = static_cast<double>(V_) * hyper_.beta;
    for (std::size_t k = 0; k < K_; ++k)
      for (std::size_t v = 0; v < V_; ++v)
        out(k, v) = (static_cast<double>(nkv_[k * V_ + v]) + hyper_.beta) / (static_cast<double>(nk_[k]) + vbeta);
    return out;
  }

  Matrix theta() const {
    Matrix out(corpus_.size(), K_);
    const double kalpha = static_cast<double>(K_) * hyper_.alpha;
    for (std::size_t d = 0; d < corpus_.size(); ++d)
      for (std::size_t k = 0; k < K_; ++k) out(d, k) = hyper_.alpha / kalpha;
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const double nd = static_cast<double>(words_[a].size());
      for (std::size_t k = 0; k < K_; ++k)
        out(active_[a], k) = (static_cast<double>(ndk_[a * K_ + k]) + hyper_.alpha) / (nd + kalpha);
    }
    return out;
  }

 private:
  const BowCorpus& corpus_;
  LdaHyperparams hyper_;
  std::size_t K_;
  std::size_t V_;
  std::vector<std::size_t> active_;
  std::vector<std::vector<TermId>> words_;
  std::vector<std::vector<std::uint32_t>> slots_;
  std::vector<std::vector<std::uint32_t>> z_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::int64_t> ndk_;
  std::vector<std::int64_t> nkv_;
  std::vector<std::int64_t> nk_;
};

}  // namespace detail

/// Optional per-iteration log-likelihood record, filled when passed to train().
struct TrainTrace {
  std::size_t every = 1;
  std::vector<std::pair<std::size_t, double>> log_likelihood;
};

/**
 * Fit a topic model. Point estimates come from the final sampler state:
 * phi[k][v] = (n_kv + beta)/(n_k + V beta), theta[d][k] = (n_dk + alpha)/(n_d + K alpha).
 */
inline TopicModel train(const BowCorpus& corpus, const LdaHyperparams& hyper, TrainTrace* trace = nullptr) {
  hyper.validate();
  if (corpus.vocab_size() == 0 || corpus.non_empty_docs() == 0) throw DataError("lda: corpus has no tokens");

  detail::GibbsState state(corpus, hyper);
  for (std::size_t it = 1; it <= hyper.iterations; ++it) {
    state.sweep(it);
    if (trace && trace->every > 0 && (it == 1 || it % trace->every == 0 || it == hyper.iterations)) {
      trace->log_likelihood.emplace_back(it, detail::log_likelihood(state.phi(), state.theta(), corpus.docs));
    }
  }

  TopicModel m;
  m.hyper = hyper;
  m.phi = state.phi();
  m.theta = state.theta();
  m.vocab_fingerprint = corpus.vocabulary.fingerprint();
  m.corpus_fingerprint = corpus.content_fingerprint();
  m.trained_on = state.active_docs();
  return m;
}

struct InferredTheta {
  std::vector<double> theta;
  bool empty = false;  ///< document had no tokens; theta is uniform
};

/// Topic proportions of an unseen document by Gibbs sampling with phi fixed.
inline InferredTheta infer_theta(const TopicModel& model, const SparseDoc& doc, std::size_t iterations, std::uint64_t seed) {
  const std::size_t K = model.num_topics();
  if (iterations == 0) throw UsageError("infer_theta: iterations must be positive");
  InferredTheta out;
  std::vector<TermId> words;
  for (const auto& tc : doc) {
    if (tc.term >= model.vocab_size()) throw DataError("infer_theta: term index outside model vocabulary");
    words.insert(words.end(), tc.count, tc.term);
  }
  if (words.empty()) {
    out.theta.assign(K, 1.0 / static_cast<double>(K));
    out.empty = true;
    return out;
  }

  Rng rng(derive_seed(seed, detail::doc_key(doc), 0));
  std::vector<std::uint32_t> z(words.size());
  std::vector<double> ndk(K, 0.0);
  for (auto& zi : z) {
    zi = static_cast<std::uint32_t>(rng.below(K));
    ndk[zi] += 1.0;
  }
  std::vector<double> weights(K);
  const double alpha = model.hyper.alpha;
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      ndk[z[i]] -= 1.0;
      for (std::size_t k = 0; k < K; ++k) weights[k] = model.phi(k, words[i]) * (ndk[k] + alpha);
      z[i] = static_cast<std::uint32_t>(rng.categorical(weights));
      ndk[z[i]] += 1.0;
    }
  }
  const double denom = static_cast<double>(words.size()) + static_cast<double>(K) * alpha;
  out.theta.resize(K);
  for (std::size_t k = 0; k < K; ++k) out.theta[k] = (ndk[k] + alpha) / denom;
  return out;
}

/// Sum over documents and tokens of log sum_k theta[d][k] phi[k][w].
inline double log_likelihood(const TopicModel& model, const BowCorpus& corpus) {
  if (model.vocab_fingerprint != corpus.vocabulary.fingerprint())
    throw DataError("log_likelihood: vocabulary fingerprint mismatch");
  if (model.num_docs() != corpus.size()) throw DataError("log_likelihood: model theta rows do not match corpus size");
  return detail::log_likelihood(model.phi, model.theta, corpus.docs);
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t cols_hint = 0) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : cols_hint;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw DataError("matrix: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

inline std::uint64_t parse_hex(const std::string& s) {
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw DataError("bad hex fingerprint '" + s + "'");
  return v;
}

}  // namespace detail

inline nlohmann::json to_json(const LdaHyperparams& h) {
  return {{"k", h.k}, {"alpha", h.alpha}, {"beta", h.beta}, {"iterations", h.iterations}, {"burn_in", h.burn_in}, {"seed", h.seed}};
}

inline LdaHyperparams hyper_from_json(const nlohmann::json& j) {
  LdaHyperparams h;
  h.k = j.at("k").get<std::size_t>();
  h.alpha = j.at("alpha").get<double>();
  h.beta = j.at("beta").get<double>();
  h.iterations = j.at("iterations").get<std::size_t>();
  h.burn_in = j.at("burn_in").get<std::size_t>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

inline nlohmann::json to_json(const TopicModel& m) {
  return {{"hyper", to_json(m.hyper)},
          {"vocab_fingerprint", to_hex(m.vocab_fingerprint)},
          {"corpus_fingerprint", to_hex(m.corpus_fingerprint)},
          {"trained_on", m.trained_on},
          {"phi", detail::matrix_to_json(m.phi)},
          {"theta", detail::matrix_to_json(m.theta)}};
}

inline TopicModel model_from_json(const nlohmann::json& j) {
  try {
    TopicModel m;
    m.hyper = hyper_from_json(j.at("hyper"));
    m.vocab_fingerprint = detail::parse_hex(j.at("vocab_fingerprint").get<std::string>());
    m.corpus_fingerprint = detail::parse_hex(j.value("corpus_fingerprint", std::string("0")));
    m.trained_on = j.at("trained_on").get<std::size_t>();
    m.phi = detail::matrix_from_json(j.at("phi"));
    m.theta = detail::matrix_from_json(j.at("theta"), m.phi.rows());
    if (m.phi.rows() != m.hyper.k || (m.theta.rows() > 0 && m.theta.cols() != m.hyper.k))
      throw DataError("model: matrix shapes disagree with K");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

}  // namespace crrix
