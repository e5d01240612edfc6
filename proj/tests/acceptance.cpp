// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "coherence_oracle.hpp"
#include "crrix/baselines.hpp"
#include "crrix/pipeline.hpp"
#include "fixtures.hpp"
#include "index_fixture.hpp"
#include "ols_oracle.hpp"
#include "synthetic.hpp"
#include "toy_corpus.hpp"

using namespace crrix;
using namespace crrix::testing;

namespace {

/// Collects failed checks for one criterion.
class Check {
 public:
  void that(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double a, double b, double tol, const std::string& what) {
    if (!(std::abs(a - b) <= tol)) {
      std::ostringstream s;
      s.precision(17);
      s << what << ": " << a << " vs " << b << " (tol " << tol << ")";
      failures_.push_back(s.str());
    }
  }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<void(Check&)> body;
};

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

void hellinger_suite(Check& c) {
  c.near(hellinger(std::vector<double>{0.2, 0.3, 0.5}, std::vector<double>{0.2, 0.3, 0.5}), 0.0, 1e-12, "identical");
  c.near(hellinger(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0, 1e-12, "disjoint");
  c.near(hellinger(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}), 0.541196100146197, 1e-12, "half mass");
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + rng.below(14);
    const std::vector<double> conc(k, 0.5);
    const auto p = rng.dirichlet(conc);
    const auto q = rng.dirichlet(conc);
    const auto r = rng.dirichlet(conc);
    const double pq = hellinger(p, q);
    c.that(pq == hellinger(q, p), "symmetry");
    c.that(pq >= 0.0 && pq <= 1.0 + 1e-12, "bound");
    c.that(pq <= hellinger(p, r) + hellinger(r, q) + 1e-12, "triangle");
    c.that(pq > 0.0 && hellinger(p, p) <= 1e-12, "zero iff equal");
  }
}

void lda_recovery(Check& c) {
  const auto truth = block_topics(3, 30, 10, 0.9);
  const auto syn = lda_corpus(truth, 500, 100, 100, 0.1, 2024);
  LdaHyperparams h;
  h.k = 3;
  h.alpha = 0.1;
  h.beta = 0.1;
  h.iterations = 400;
  h.burn_in = 100;
  const auto a = train(syn.corpus, h);
  const auto b = train(syn.corpus, h);
  const double tv = matched_max_tv(a.phi, truth);
  c.that(tv <= 0.10, "matched topic TV " + std::to_string(tv) + " > 0.10");
  for (std::size_t d = 0; d < a.num_docs(); ++d) {
    double s = 0;
    for (double v : a.theta.row(d)) s += v;
    c.near(s, 1.0, 1e-9, "theta row " + std::to_string(d));
  }
  c.that(fnv1a(to_json(a).dump()) == fnv1a(to_json(b).dump()), "same seed gives identical model hash");
}

void coherence_oracles(Check& c) {
  const auto corpus = build(kToy);
  const auto docs = split_docs(kToy);
  auto compare = [&](const CoherenceResult& r, const std::vector<double>& o, const std::string& label) {
    c.that(r.per_topic.size() == o.size(), label + " topic count");
    for (std::size_t t = 0; t < o.size() && t < r.per_topic.size(); ++t) c.near(r.per_topic[t], o[t], 1e-9, label);
  };
  CoherenceConfig cfg;
  compare(coherence_umass(kToyTopics, corpus, cfg), oracle_umass(docs, kToyTopics, cfg.epsilon), "umass");
  for (std::size_t w : {2u, 3u, 4u, 110u}) {
    cfg.window = w;
    const std::string ws = " w=" + std::to_string(w);
    compare(coherence_uci(kToyTopics, corpus, cfg), oracle_uci(docs, kToyTopics, cfg.epsilon, w), "uci" + ws);
    for (double g : {1.0, 2.0}) {
      cfg.gamma = g;
      compare(coherence_cv(kToyTopics, corpus, cfg), oracle_cv(docs, kToyTopics, cfg.epsilon, w, g), "cv" + ws);
    }
    cfg.gamma = 1.0;
  }
}

void select_k_sanity(Check& c) {
  const auto corpus = rotated_topics(4, 10, 100, 40, 80, 0.1, 3);
  LdaHyperparams h;
  h.alpha = 0.1;
  h.iterations = 300;
  h.burn_in = 50;
  h.seed = 42;
  const auto r = select_k(corpus, {2, 8}, h, CoherenceConfig{});
  c.that(r.scores.size() == 7, "sweep covers 2..8");
  c.that(r.best_k >= 3 && r.best_k <= 5, "chosen k " + std::to_string(r.best_k) + " outside {3,4,5}");
}

void classification(Check& c) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto syn = two_class_corpus(1600, 7, 3, 10, 30, 0.3, seed);
    label_first(syn, 800);
    LdaHyperparams h;
    h.k = 4;
    h.alpha = 0.1;
    h.iterations = 300;
    h.burn_in = 50;
    const auto out = classify_corpus(train(syn.corpus, h), syn.corpus, 0.95);
    std::vector<int> pred;
    std::vector<int> truth;
    for (std::size_t d = 800; d < syn.corpus.size(); ++d) {
      pred.push_back(out.articles[d].predicted ? 1 : 0);
      truth.push_back(syn.truth[d]);
    }
    const double acc = confusion_matrix(pred, truth).accuracy();
    c.that(acc >= 0.90, "hellinger threshold accuracy " + std::to_string(acc) + " (seed " + std::to_string(seed) + ")");
  }

  const auto train_set = overlap_corpus(4000, 7, 20, 25, 1);
  const auto eval = overlap_corpus(4000, 7, 20, 25, 101);
  const double majority =
      static_cast<double>(std::count(eval.truth.begin(), eval.truth.end(), 0)) / static_cast<double>(eval.truth.size());
  const auto nb = nb_train(train_set.corpus, train_set.truth);
  SvmOptions opt;
  opt.weight_pos = 3.0;
  const auto svm = svm_train(train_set.corpus, train_set.truth, opt);
  std::vector<int> p_nb;
  std::vector<int> p_svm;
  for (const auto& d : eval.corpus.docs) {
    p_nb.push_back(nb_predict(nb, d));
    p_svm.push_back(svm_predict(svm, d));
  }
  c.that(std::count(p_nb.begin(), p_nb.end(), 1) == 0, "naive Bayes predicts a minority label");
  c.that(std::count(p_svm.begin(), p_svm.end(), 1) == 0, "weighted SVM predicts a minority label");
  c.near(confusion_matrix(p_nb, eval.truth).accuracy(), majority, 1e-15, "naive Bayes accuracy equals majority share");
  c.near(confusion_matrix(p_svm, eval.truth).accuracy(), majority, 1e-15, "SVM accuracy equals majority share");
}

void table_arithmetic(Check& c) {
  std::vector<int> truth(582, 1);
  truth.resize(4586, 0);
  const auto majority = confusion_matrix(std::vector<int>(4586, 0), truth);
  c.that(majority.tn == 4004 && majority.fn == 582, "majority cells");
  c.near(majority.accuracy(), 0.8731, 5e-5, "all-majority accuracy");
  std::vector<int> pred;
  pred.insert(pred.end(), 361, 1);
  pred.insert(pred.end(), 221, 0);
  pred.insert(pred.end(), 188, 1);
  pred.insert(pred.end(), 3816, 0);
  const auto lda = confusion_matrix(pred, truth);
  c.that(lda.tp == 361 && lda.fn == 221 && lda.fp == 188 && lda.tn == 3816, "topic model cells");
  c.near(lda.accuracy(), 0.9108, 5e-5, "topic model accuracy");
}

void index_correctness(Check& c) {
  const auto monthly = build_index(sixty(), Periodicity::Monthly);
  const double want_m[] = {5.0 / 20, 10.0 / 25, 3.0 / 15};
  c.that(monthly.points.size() == 3, "monthly bucket count");
  for (std::size_t i = 0; i < 3 && i < monthly.points.size(); ++i) c.that(monthly.points[i].value == want_m[i], "monthly ratio");

  const auto weekly = build_index(sixty(), Periodicity::Weekly);
  const std::size_t reg[] = {2, 2, 1, 0, 2, 3, 4, 1, 1, 2, 0};
  const std::size_t all[] = {7, 7, 6, 0, 4, 7, 7, 7, 4, 7, 4};
  c.that(weekly.points.size() == 11, "weekly bucket count");
  for (std::size_t i = 0; i < 11 && i < weekly.points.size(); ++i) {
    const auto& p = weekly.points[i];
    c.that(p.n_reg == reg[i] && p.n_all == all[i], "weekly tally " + std::to_string(i));
    if (all[i] == 0) {
      c.that(!p.value, "empty week is missing");
    } else {
      c.that(p.value && *p.value == static_cast<double>(reg[i]) / static_cast<double>(all[i]), "weekly ratio");
    }
  }

  const auto daily = build_index(sixty(), Periodicity::Daily);
  c.that(daily.points.size() == 74, "daily bucket count");
  for (const auto& a : sixty()) {
    const auto& p = daily.points[static_cast<std::size_t>((a.date.days() - daily.points[0].bucket_start.days()).count())];
    c.that(p.n_all == 1 && p.value == (a.regulatory ? 1.0 : 0.0), "daily ratio " + a.date.str());
  }

  for (auto period : {Periodicity::Daily, Periodicity::Weekly, Periodicity::Monthly}) {
    auto arts = sixty();
    const auto base = build_index(arts, period);
    const auto copy = arts;
    arts.insert(arts.end(), copy.begin(), copy.end());
    const auto dup = build_index(arts, period);
    for (std::size_t i = 0; i < base.points.size(); ++i) c.that(base.points[i].value == dup.points[i].value, "duplication");

    arts = sixty();
    for (std::size_t j = 0; j < arts.size(); ++j) {
      if (arts[j].regulatory) continue;
      auto flipped = arts;
      flipped[j].regulatory = true;
      const auto after = build_index(flipped, period);
      const Date bucket = bucket_start(arts[j].date, period);
      for (std::size_t i = 0; i < base.points.size(); ++i) {
        const auto& p0 = base.points[i];
        const auto& p1 = after.points[i];
        if (p0.bucket_start == bucket) {
          c.near(*p1.value - *p0.value, 1.0 / static_cast<double>(p0.n_all), 1e-15, "relabel delta");
        } else {
          c.that(p0.value == p1.value, "relabel leaves other buckets");
        }
      }
    }
  }
}

void granger_adf(Check& c) {
  const std::size_t n = 900;
  const auto x = white_noise(n, 31);
  auto y = white_noise(n, 32);
  for (std::size_t t = 1; t < n; ++t) y[t] += 0.8 * x[t - 1];
  const auto forward = granger_sweep(x, y, 7);
  const auto reverse = granger_sweep(y, x, 7);
  c.that(forward.size() == 7, "seven forward lags");
  for (const auto& g : forward) c.that(g.f_pvalue < 0.01, "forward lag " + std::to_string(g.lag) + " p >= 0.01");
  c.that(reverse[0].f_pvalue > 0.05, "reverse lag 1 rejects");
  for (const auto& g : reverse) c.that(g.f_pvalue > 0.05, "reverse lag " + std::to_string(g.lag) + " p <= 0.05");

  const auto t829 = granger_test(white_noise(829, 41), white_noise(829, 42), 1);
  c.that(t829.nobs == 828 && t829.df_denom == 825, "df_denom for 828 rows at lag 1");
  const auto ref = granger_from_ssr(1.0 + 23.1736 / 825.0, 1.0, 828, 1);
  c.near(ref.chi2_stat, 23.2579, 5e-5, "chi2 from F=23.1736");
  c.near(ref.lr_stat, 22.9372, 5e-5, "LR from F=23.1736");

  const auto wn = white_noise(1000, 21);
  auto walk = white_noise(1000, 22);
  for (std::size_t t = 1; t < walk.size(); ++t) walk[t] += walk[t - 1];
  const auto max_lag = schwert_max_lag(1000);
  c.that(adf_test(wn, max_lag, LagSelection::Aic).p_value < 0.01, "white noise keeps unit root");
  c.that(adf_test(walk, max_lag, LagSelection::Aic).p_value > 0.10, "random walk rejects unit root");

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 30 + rng.below(100);
    Matrix xm(rows, 5);
    std::vector<double> ym(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      xm(r, 0) = 1.0;
      for (std::size_t k = 1; k < 5; ++k) xm(r, k) = rng.normal() * static_cast<double>(k) + 0.3 * xm(r, k - 1);
      ym[r] = 0.5 - xm(r, 1) + 2 * xm(r, 3) + rng.normal();
    }
    const auto qr = ols(xm, ym);
    const auto ne = normal_equations(xm, ym);
    for (std::size_t i = 0; i < 5; ++i) {
      c.near(qr.coef[i], ne.coef[i], 1e-9, "OLS coefficient");
      c.near(qr.std_err[i], ne.std_err[i], 1e-9, "OLS standard error");
    }
  }
}

void variance_stabilization(Check& c) {
  const double target = 0.25 * kGaussianKernelL2;
  const auto r = hellinger_variance_check(TestDensity::GaussianMixture, 100000, 0.01, {0.0, 4.0}, 500, 7);
  const double f_ratio = r[0].density / r[1].density;
  c.near(f_ratio, 3.0, 0.01, "density ratio");
  for (const auto& p : r) c.near(p.var_sqrt_nh / target, 1.0, 0.15, "var(sqrt f)*nh at x=" + std::to_string(p.x));
  c.near((r[0].var_raw_nh / r[1].var_raw_nh) / f_ratio, 1.0, 0.20, "var(f)*nh proportional to f");
}

void end_to_end(Check& c) {
  const auto work = scratch_dir("acceptance_run");
  std::string manifests[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = work / ("run" + std::to_string(i + 1));
    const std::string cmd = std::string("\"") + CRRIX_CLI + "\" run --config \"" + data_path("fixture_config.json") +
                            "\" --out-dir \"" + out.string() + "\" > /dev/null 2>&1";
    c.that(std::system(cmd.c_str()) == 0, "crrix run exit status");
    manifests[i] = read_file(out / "manifest.json");
  }
  c.that(!manifests[0].empty(), "manifest written");
  c.that(fnv1a(manifests[0]) == fnv1a(manifests[1]), "manifest hashes differ");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"hellinger metric suite", 1, hellinger_suite},
      {"lda synthetic recovery", 60, lda_recovery},
      {"coherence oracle equivalence", 1, coherence_oracles},
      {"select_k sanity", 180, select_k_sanity},
      {"classification pipeline", 120, classification},
      {"confusion matrix arithmetic", 1, table_arithmetic},
      {"index correctness", 1, index_correctness},
      {"granger and adf suite", 30, granger_adf},
      {"variance stabilization", 300, variance_stabilization},
      {"end-to-end reproducibility", 300, end_to_end},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.that(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_seconds) check.that(false, "runtime over " + std::to_string(cr.budget_seconds) + " s");
    const bool ok = check.failures().empty();
    failed += !ok;
    std::printf("%s  %-30s %8.3f s\n", ok ? "PASS" : "FAIL", cr.name.c_str(), secs);
    for (std::size_t i = 0; i < check.failures().size() && i < 5; ++i) std::printf("      %s\n", check.failures()[i].c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
