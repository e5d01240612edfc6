#include <gtest/gtest.h>

#include <sstream>

#include "crrix/coherence.hpp"
#include "synthetic.hpp"
#include "toy_corpus.hpp"

using namespace crrix;
using namespace crrix::testing;

namespace {

CoherenceConfig config(std::size_t window = 110) {
  CoherenceConfig c;
  c.window = window;
  return c;
}

void expect_matches(const CoherenceResult& r, const std::vector<double>& oracle, double tol) {
  ASSERT_EQ(r.per_topic.size(), oracle.size());
  for (std::size_t t = 0; t < oracle.size(); ++t) EXPECT_NEAR(r.per_topic[t], oracle[t], tol) << "topic " << t;
  EXPECT_NEAR(r.score, mean(oracle), tol);
}

}  // namespace

TEST(Config, Validation) {
  CoherenceConfig c;
  EXPECT_NO_THROW(c.validate());
  c.top_j = 1;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.epsilon = 0;
  EXPECT_THROW(c.validate(), UsageError);
  EXPECT_EQ(parse_measure("cv"), CoherenceMeasure::Cv);
  EXPECT_EQ(parse_measure("umass"), CoherenceMeasure::UMass);
  EXPECT_EQ(parse_measure("uci"), CoherenceMeasure::UCI);
  EXPECT_THROW(parse_measure("npmi"), UsageError);
}

TEST(UMass, PerfectCooccurrence) {
  const auto c = build({"aa bb", "aa bb cc", "bb aa"});
  const auto r = coherence_umass({{"aa", "bb"}}, c, config());
  EXPECT_NEAR(r.score, 0.0, 1e-11);
}

TEST(UMass, NeverCooccurring) {
  const auto c = build({"aa", "bb"});
  const double eps = config().epsilon;
  EXPECT_NEAR(coherence_umass({{"aa", "bb"}}, c, config()).score, std::log(2 * eps), 1e-12);
}

TEST(UMass, ZeroFrequencyTopWordIsError) {
  const auto c = build({"aa bb", "bb cc"});
  EXPECT_THROW(coherence_umass({{"aa", "zz"}}, c, config()), DataError);
}

TEST(UMass, MatchesOracle) {
  const auto c = build(kToy);
  expect_matches(coherence_umass(kToyTopics, c, config()), oracle_umass(split_docs(kToy), kToyTopics, 1e-12), 1e-12);
}

TEST(UMass, AddingCooccurringDocumentNeverLowersPair) {
  Rng rng(3);
  const std::vector<std::string> words{"aa", "bb", "cc", "dd", "ee"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> texts;
    const std::size_t n = 2 + rng.below(6);
    for (std::size_t d = 0; d < n; ++d) {
      std::string t = "zz";
      for (const auto& w : words)
        if (rng.uniform() < 0.5) t += " " + w;
      texts.push_back(t);
    }
    const std::string a = words[rng.below(5)];
    const std::string b = words[rng.below(5)];
    if (a == b) continue;
    texts.push_back(a + " " + b);
    const double before = coherence_umass({{a, b}}, build(texts), config()).score;
    texts.push_back(a + " " + b);
    const double after = coherence_umass({{a, b}}, build(texts), config()).score;
    EXPECT_GE(after, before - 1e-9) << "trial " << trial;
  }
}

TEST(Uci, AlwaysTogether) {
  const auto c = build({"aa bb", "cc dd"});
  EXPECT_NEAR(coherence_uci({{"aa", "bb"}}, c, config()).score, std::log(2.0), 1e-11);
}

TEST(Uci, Independent) {
  const auto c = build({"aa bb", "aa cc", "dd bb", "dd cc"});
  EXPECT_NEAR(coherence_uci({{"aa", "bb"}}, c, config()).score, 0.0, 1e-11);
}

TEST(Uci, MatchesOracleDocumentSizedWindows) {
  const auto c = build(kToy);
  expect_matches(coherence_uci(kToyTopics, c, config()), oracle_uci(split_docs(kToy), kToyTopics, 1e-12, 110), 1e-12);
}

TEST(Uci, MatchesOracleSlidingWindows) {
  const auto c = build(kToy);
  for (std::size_t w : {2u, 3u, 4u, 6u}) {
    expect_matches(coherence_uci(kToyTopics, c, config(w)), oracle_uci(split_docs(kToy), kToyTopics, 1e-12, w), 1e-12);
  }
}

TEST(Uci, MissingWordSkippedWithWarning) {
  const auto c = build(kToy);
  const auto r = coherence_uci({{"tax", "law", "unicorn"}}, c, config());
  EXPECT_FALSE(r.warnings.empty());
  const auto o = oracle_uci(split_docs(kToy), {{"tax", "law"}}, 1e-12, 110);
  EXPECT_NEAR(r.score, o[0] / 3.0, 1e-12);
  EXPECT_THROW(coherence_uci({{"unicorn", "dragon"}}, c, config()), DataError);
}

TEST(Uci, FallsBackToDocumentsWithoutSequences) {
  auto c = build(kToy);
  c.sequences.clear();
  const auto r = coherence_uci(kToyTopics, c, config(3));
  EXPECT_FALSE(r.warnings.empty());
  expect_matches(r, oracle_uci(split_docs(kToy), kToyTopics, 1e-12, 1000), 1e-12);
}

TEST(Npmi, UpperBoundForPerfectAssociation) {
  for (double p : {1e-4, 1e-3, 0.01, 0.2, 0.5}) EXPECT_NEAR(npmi(p, p, p, 1e-12), 1.0, 1e-6) << p;
}

TEST(Npmi, WithinBounds) {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double pi = 0.001 + 0.999 * rng.uniform();
    const double pj = 0.001 + 0.999 * rng.uniform();
    const double lo = std::max(0.0, pi + pj - 1.0);
    const double pij = lo + (std::min(pi, pj) - lo) * rng.uniform();
    const double v = npmi(pij, pi, pj, 1e-12);
    EXPECT_GE(v, -1.0 - 1e-6);
    EXPECT_LE(v, 1.0 + 1e-6);
  }
  EXPECT_NEAR(npmi(0.0, 0.5, 0.5, 1e-12), -1.0, 0.06);
}

TEST(Cv, IdenticalStatisticsPair) {
  const auto c = build({"aa bb", "cc dd"});
  EXPECT_NEAR(coherence_cv({{"aa", "bb"}}, c, config()).score, 1.0, 1e-12);
}

TEST(Cv, MatchesOracle) {
  const auto c = build(kToy);
  for (std::size_t w : {3u, 4u, 110u}) {
    for (double gamma : {1.0, 2.0}) {
      auto cfg = config(w);
      cfg.gamma = gamma;
      expect_matches(coherence_cv(kToyTopics, c, cfg), oracle_cv(split_docs(kToy), kToyTopics, 1e-12, w, gamma), 1e-9);
    }
  }
}

TEST(Cv, UnknownWordContributesZero) {
  const auto c = build(kToy);
  const auto r = coherence_cv({{"tax", "law", "unicorn"}}, c, config());
  EXPECT_GE(r.warnings.size(), 2u);
  const auto two = oracle_cv(split_docs(kToy), {{"tax", "law"}}, 1e-12, 110, 1.0);
  EXPECT_NEAR(r.score, two[0] * 2.0 / 3.0, 1e-9);
}

TEST(Measures, InvariantUnderTopicReordering) {
  const auto c = build(kToy);
  const std::vector<Tokens> flipped{kToyTopics[1], kToyTopics[0]};
  for (auto m : {CoherenceMeasure::UMass, CoherenceMeasure::UCI, CoherenceMeasure::Cv}) {
    auto cfg = config(4);
    cfg.measure = m;
    const auto a = coherence(kToyTopics, c, c, cfg);
    const auto b = coherence(flipped, c, c, cfg);
    EXPECT_NEAR(a.score, b.score, 1e-15) << measure_name(m);
    EXPECT_EQ(a.per_topic[0], b.per_topic[1]);
  }
}

TEST(Stats, JointNeverExceedsMarginals) {
  const auto c = build(kToy);
  std::vector<TermId> all(c.vocab_size());
  std::iota(all.begin(), all.end(), 0);
  for (auto basis : {CountingBasis::Document, CountingBasis::SlidingWindow}) {
    CooccurrenceStats s(c, all, basis, 3);
    for (TermId a : all) {
      EXPECT_LE(s.p(a), 1.0);
      for (TermId b : all) EXPECT_LE(s.count(a, b), std::min(s.count(a), s.count(b)));
    }
  }
}

TEST(SelectK, SingletonRange) {
  const auto syn = lda_corpus(block_topics(3, 30, 10, 0.9), 80, 30, 30, 0.1, 1);
  LdaHyperparams h;
  h.iterations = 30;
  h.burn_in = 5;
  const auto r = select_k(syn.corpus, {3, 3}, h, config());
  EXPECT_EQ(r.best_k, 3u);
  ASSERT_EQ(r.scores.size(), 1u);
  EXPECT_THROW(select_k(syn.corpus, {4, 3}, h, config()), UsageError);
  EXPECT_THROW(select_k(syn.corpus, {1, 3}, h, config()), UsageError);
}

TEST(SelectK, DeterministicAcrossThreadCounts) {
  const auto syn = lda_corpus(block_topics(4, 40, 10, 0.9), 120, 30, 50, 0.1, 2);
  LdaHyperparams h;
  h.iterations = 40;
  h.burn_in = 5;
  const auto a = select_k(syn.corpus, {2, 5}, h, config(), nullptr, 1);
  const auto b = select_k(syn.corpus, {2, 5}, h, config(), nullptr, 4);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.best_k, b.best_k);
  for (std::size_t i = 0; i < a.models.size(); ++i) EXPECT_EQ(a.models[i].phi, b.models[i].phi);
}

TEST(SelectK, FindsPlantedTopicCount) {
  const auto c = rotated_topics(4, 10, 100, 40, 80, 0.1, 3);
  LdaHyperparams h;
  h.alpha = 0.1;
  h.iterations = 300;
  h.burn_in = 50;
  const auto r = select_k(c, {2, 8}, h, config());
  EXPECT_GE(r.best_k, 3u);
  EXPECT_LE(r.best_k, 5u);
  EXPECT_GE(r.scores[2].second, r.scores[0].second);
}
