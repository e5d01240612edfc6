#include <gtest/gtest.h>

#include <numeric>

#include "crrix/lda.hpp"
#include "fixtures.hpp"
#include "synthetic.hpp"

using namespace crrix;
using namespace crrix::testing;

namespace {

LdaHyperparams quick(std::size_t k, std::uint64_t seed = 7) {
  LdaHyperparams h;
  h.k = k;
  h.iterations = 60;
  h.burn_in = 10;
  h.seed = seed;
  return h;
}

const BowCorpus& fixture() {
  static const BowCorpus c = preprocess(load_corpus(data_path("mini_corpus.jsonl")), load_stopwords(data_path("stopwords.txt")));
  return c;
}

BowCorpus small_corpus() {
  return corpus_from_sequences({{0, 1, 1, 2}, {3, 4, 3, 4, 5}, {0, 0, 1}, {5, 5, 4, 2}, {}, {2, 3}}, 6);
}

void expect_row_stochastic(const Matrix& m, double tol) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, tol) << "row " << r;
  }
}

}  // namespace

TEST(Hyperparams, Validation) {
  auto h = quick(3);
  EXPECT_NO_THROW(h.validate());
  h.k = 0;
  EXPECT_THROW(h.validate(), UsageError);
  h = quick(3);
  h.alpha = 0.0;
  EXPECT_THROW(h.validate(), UsageError);
  h = quick(3);
  h.burn_in = h.iterations;
  EXPECT_THROW(h.validate(), UsageError);
}

TEST(Train, SingleTopicIsSmoothedFrequency) {
  const auto c = small_corpus();
  const auto m = train(c, quick(1));
  for (std::size_t d = 0; d < c.size(); ++d) EXPECT_EQ(m.theta(d, 0), 1.0);
  std::vector<double> freq(c.vocab_size(), 0.0);
  for (const auto& doc : c.docs)
    for (const auto& tc : doc) freq[tc.term] += tc.count;
  const double n = std::accumulate(freq.begin(), freq.end(), 0.0);
  const double beta = m.hyper.beta;
  for (std::size_t v = 0; v < c.vocab_size(); ++v)
    EXPECT_NEAR(m.phi(0, v), (freq[v] + beta) / (n + static_cast<double>(c.vocab_size()) * beta), 1e-15);
}

TEST(Train, ShapesAndStochasticity) {
  const auto m = train(fixture(), quick(5));
  EXPECT_EQ(m.num_topics(), 5u);
  EXPECT_EQ(m.vocab_size(), fixture().vocab_size());
  EXPECT_EQ(m.num_docs(), fixture().size());
  EXPECT_EQ(m.trained_on, fixture().non_empty_docs());
  expect_row_stochastic(m.phi, 1e-9);
  expect_row_stochastic(m.theta, 1e-9);
}

TEST(Train, EmptyDocumentGetsUniformTheta) {
  const auto c = small_corpus();
  const auto m = train(c, quick(4));
  EXPECT_EQ(m.trained_on, 5u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(m.theta(4, k), 0.25);
}

TEST(Train, SeedDeterminism) {
  const auto a = train(fixture(), quick(4, 11));
  const auto b = train(fixture(), quick(4, 11));
  const auto c = train(fixture(), quick(4, 12));
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_NE(a.theta, c.theta);
}

TEST(Train, DuplicatedDocumentsShareTheta) {
  auto seqs = std::vector<std::vector<TermId>>{{0, 1, 1, 2, 7}, {3, 4, 3, 4, 5}, {0, 0, 1, 6}, {5, 5, 4, 2}, {2, 3, 6, 7}};
  seqs.push_back(seqs[1]);
  seqs.push_back(seqs[3]);
  const auto c = corpus_from_sequences(seqs, 8);
  const auto m = train(c, quick(3));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(m.theta(1, k), m.theta(5, k));
    EXPECT_EQ(m.theta(3, k), m.theta(6, k));
  }
}

TEST(Train, DocumentOrderIrrelevant) {
  const auto syn = lda_corpus(block_topics(3, 30, 10, 0.9), 60, 20, 40, 0.2, 5);
  std::vector<std::vector<TermId>> reversed(syn.corpus.sequences.rbegin(), syn.corpus.sequences.rend());
  const auto rc = corpus_from_sequences(reversed, 30);
  const auto a = train(syn.corpus, quick(3));
  const auto b = train(rc, quick(3));
  EXPECT_EQ(a.phi, b.phi);
  const std::size_t M = syn.corpus.size();
  for (std::size_t d = 0; d < M; ++d)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.theta(d, k), b.theta(M - 1 - d, k));
}

TEST(Train, LikelihoodImproves) {
  TrainTrace trace;
  auto h = quick(5);
  h.iterations = 200;
  train(fixture(), h, &trace);
  ASSERT_EQ(trace.log_likelihood.size(), 200u);
  EXPECT_EQ(trace.log_likelihood.front().first, 1u);
  double tail = 0.0;
  for (std::size_t i = 180; i < 200; ++i) tail += trace.log_likelihood[i].second;
  tail /= 20.0;
  EXPECT_GE(tail, trace.log_likelihood.front().second);
}

TEST(Train, RecoversPlantedTopics) {
  const auto truth = block_topics(3, 30, 10, 0.9);
  const auto syn = lda_corpus(truth, 500, 100, 100, 0.1, 2024);
  LdaHyperparams h;
  h.k = 3;
  h.alpha = 0.1;
  h.beta = 0.1;
  h.iterations = 400;
  h.burn_in = 100;
  const auto m = train(syn.corpus, h);
  EXPECT_LE(matched_max_tv(m.phi, truth), 0.10);
}

TEST(Train, RejectsTokenlessCorpus) {
  const auto c = corpus_from_sequences({{}, {}}, 3);
  EXPECT_THROW(train(c, quick(2)), DataError);
}

TEST(Infer, SingleTopic) {
  const auto c = small_corpus();
  const auto m = train(c, quick(1));
  const auto r = infer_theta(m, c.docs[1], 20, 3);
  ASSERT_EQ(r.theta.size(), 1u);
  EXPECT_EQ(r.theta[0], 1.0);
  EXPECT_FALSE(r.empty);
}

TEST(Infer, EmptyDocumentUniform) {
  const auto m = train(small_corpus(), quick(4));
  const auto r = infer_theta(m, {}, 20, 3);
  EXPECT_TRUE(r.empty);
  for (double t : r.theta) EXPECT_DOUBLE_EQ(t, 0.25);
}

TEST(Infer, PicksMatchingTopic) {
  TopicModel m;
  m.hyper.k = 3;
  m.phi = block_topics(3, 30, 10, 0.95);
  SparseDoc doc{{20, 3}, {21, 2}, {25, 4}, {29, 1}};
  const auto r = infer_theta(m, doc, 50, 9);
  EXPECT_EQ(std::max_element(r.theta.begin(), r.theta.end()) - r.theta.begin(), 2);
  EXPECT_NEAR(std::accumulate(r.theta.begin(), r.theta.end(), 0.0), 1.0, 1e-12);
  EXPECT_THROW(infer_theta(m, SparseDoc{{30, 1}}, 5, 1), DataError);
}

TEST(LogLikelihood, HandComputed) {
  auto c = corpus_from_sequences({{0, 0, 2}, {1, 2}}, 3);
  TopicModel m;
  m.phi = Matrix(2, 3);
  const double phi[2][3] = {{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}};
  const double theta[2][2] = {{0.7, 0.3}, {0.25, 0.75}};
  for (int k = 0; k < 2; ++k)
    for (int v = 0; v < 3; ++v) m.phi(k, v) = phi[k][v];
  m.theta = Matrix(2, 2);
  for (int d = 0; d < 2; ++d)
    for (int k = 0; k < 2; ++k) m.theta(d, k) = theta[d][k];
  m.vocab_fingerprint = c.vocabulary.fingerprint();
  const double expected = 2 * std::log(0.7 * 0.5 + 0.3 * 0.1) + std::log(0.7 * 0.2 + 0.3 * 0.3) +
                          std::log(0.25 * 0.3 + 0.75 * 0.6) + std::log(0.25 * 0.2 + 0.75 * 0.3);
  EXPECT_NEAR(log_likelihood(m, c), expected, 1e-12);

  m.vocab_fingerprint ^= 1;
  EXPECT_THROW(log_likelihood(m, c), DataError);
}

TEST(LogLikelihood, NegativeOnTrainedModel) {
  const auto m = train(fixture(), quick(5));
  const double ll = log_likelihood(m, fixture());
  EXPECT_LT(ll, 0.0);
  EXPECT_TRUE(std::isfinite(ll));
}

TEST(TopWords, SortedWithIndexTieBreak) {
  TopicModel m;
  m.phi = Matrix(1, 5);
  const double row[5] = {0.1, 0.3, 0.1, 0.3, 0.2};
  for (int v = 0; v < 5; ++v) m.phi(0, v) = row[v];
  EXPECT_EQ(top_words(m, 0, 4), (std::vector<TermId>{1, 3, 4, 0}));
}

TEST(Serialize, RoundTrip) {
  const auto m = train(fixture(), quick(4));
  const auto back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.phi, m.phi);
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(back.vocab_fingerprint, m.vocab_fingerprint);
  EXPECT_EQ(back.corpus_fingerprint, m.corpus_fingerprint);
  EXPECT_EQ(back.trained_on, m.trained_on);
  EXPECT_EQ(back.hyper.k, 4u);
  EXPECT_EQ(back.hyper.seed, 7u);
}
