#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crrix/coherence.hpp"
#include "crrix/corpus.hpp"
#include "crrix/csv.hpp"
#include "crrix/error.hpp"
#include "crrix/hash.hpp"
#include "crrix/index.hpp"
#include "crrix/lda.hpp"
#include "crrix/similarity.hpp"
#include "crrix/stats.hpp"
#include "crrix/svg.hpp"

namespace crrix {

// ---------------------------------------------------------------------------
// Classification stage

struct ClassifiedArticle {
  std::string id;
  Date date;
  Group group = Group::Unlabeled;
  double avg_dist = 0.0;
  bool predicted = false;   ///< threshold rule applied to avg_dist
  bool regulatory = false;  ///< human label when present, otherwise the prediction
  bool empty = false;       ///< no tokens survived preprocessing
};

struct ClassifyOutput {
  ThresholdRule rule;
  std::vector<ClassifiedArticle> articles;
  bool inferred = false;  ///< theta came from infer_theta rather than the training state
};

/**
 * Distance profiles and threshold labels for every document of `corpus`.
 * When `corpus` is the model's training corpus the fitted theta rows are
 * used; otherwise each document's theta is inferred with phi fixed.
 */
inline ClassifyOutput classify_corpus(const TopicModel& model, const BowCorpus& corpus, double tau,
                                      std::size_t infer_iterations = 200, std::uint64_t seed = 42) {
  if (model.vocab_fingerprint != corpus.vocabulary.fingerprint()) throw DataError("classify: model/corpus vocabulary mismatch");
  ClassifyOutput out;
  std::vector<std::vector<double>> thetas;
  std::vector<std::string> ids;
  std::vector<Group> groups;
  out.inferred = !(model.corpus_fingerprint == corpus.content_fingerprint() && model.num_docs() == corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    if (out.inferred) {
      thetas.push_back(infer_theta(model, corpus.docs[d], infer_iterations, seed).theta);
    } else {
      const auto row = model.theta.row(d);
      thetas.emplace_back(row.begin(), row.end());
    }
    ids.push_back(corpus.meta[d].id);
    groups.push_back(group_of(corpus.meta[d].label));
  }
  const auto profiles = distance_profiles(ids, thetas, groups);
  out.rule = classify(profiles, tau).rule;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    ClassifiedArticle a;
    a.id = ids[d];
    a.date = corpus.meta[d].date;
    a.group = groups[d];
    a.avg_dist = profiles[d].avg_dist;
    a.predicted = out.rule.is_regulatory(a.avg_dist);
    a.regulatory = a.group == Group::Unlabeled ? a.predicted : a.group == Group::Regulatory;
    a.empty = corpus.docs[d].empty();
    out.articles.push_back(std::move(a));
  }
  return out;
}

inline void write_classified(std::ostream& out, const ClassifyOutput& c) {
  for (const auto& a : c.articles) {
    nlohmann::json j = {{"id", a.id},
                        {"date", a.date.str()},
                        {"group", group_name(a.group)},
                        {"avg_dist", a.avg_dist},
                        {"predicted_label", a.predicted ? "regulatory" : "non-regulatory"},
                        {"regulatory", a.regulatory},
                        {"empty", a.empty}};
    out << j.dump() << '\n';
  }
}

inline std::vector<DatedArticle> read_classified(std::istream& in) {
  std::vector<DatedArticle> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto d = Date::parse(j.at("date").get<std::string>());
      if (!d) throw DataError("bad date");
      out.push_back({*d, j.at("regulatory").get<bool>()});
    } catch (const std::exception& e) {
      throw DataError("classified line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analysis stage

namespace detail {

inline nlohmann::json granger_json(const GrangerResult& g) {
  return {{"lag", g.lag},
          {"nobs", g.nobs},
          {"ssr_ftest", {{"F", g.f_stat}, {"p", g.f_pvalue}, {"df_denom", g.df_denom}, {"df_num", g.df_num}}},
          {"ssr_chi2test", {{"chi2", g.chi2_stat}, {"p", g.chi2_pvalue}, {"df", g.df_num}}},
          {"lrtest", {{"chi2", g.lr_stat}, {"p", g.lr_pvalue}, {"df", g.df_num}}},
          // Wald F on the lagged-cause block equals the SSR F for nested OLS.
          {"params_ftest", {{"F", g.f_stat}, {"p", g.f_pvalue}, {"df_denom", g.df_denom}, {"df_num", g.df_num}}}};
}

inline nlohmann::json adf_json(const AdfResult& r) {
  return {{"test_stat", r.test_stat}, {"p_value", r.p_value}, {"lags_used", r.lags_used}, {"nobs", r.nobs}, {"regression", r.regression}};
}

}  // namespace detail

/// Correlation, ADF on both series and Granger tests (index -> market and reverse).
inline nlohmann::json analyze(const IndexSeries& index, const std::vector<DatedValue>& market, std::size_t max_lag,
                              std::optional<std::size_t> adf_max_lag = std::nullopt) {
  const auto aligned = align_series(index, market);
  const std::size_t n = aligned.size();
  std::size_t adf_lag = adf_max_lag ? *adf_max_lag : schwert_max_lag(n);
  if (!adf_max_lag && n > 6) adf_lag = std::min(adf_lag, n / 2 - 3);
  nlohmann::json report;
  report["n_aligned"] = n;
  report["first_bucket"] = aligned.dates.front().str();
  report["last_bucket"] = aligned.dates.back().str();
  report["correlation"] = pearson(aligned.a, aligned.b);
  report["adf"] = {{"index", detail::adf_json(adf_test(aligned.a, adf_lag, LagSelection::Aic))},
                   {"market", detail::adf_json(adf_test(aligned.b, adf_lag, LagSelection::Aic))},
                   {"max_lag", adf_lag},
                   {"lag_selection", "aic"}};
  auto forward = nlohmann::json::array();
  for (const auto& g : granger_sweep(aligned.a, aligned.b, max_lag)) forward.push_back(detail::granger_json(g));
  auto reverse = nlohmann::json::array();
  for (const auto& g : granger_sweep(aligned.b, aligned.a, max_lag)) reverse.push_back(detail::granger_json(g));
  report["granger"] = std::move(forward);
  report["granger_reverse"] = std::move(reverse);
  return report;
}

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path stopwords;
  std::optional<std::filesystem::path> market;
  std::filesystem::path output_dir = "crrix_out";
  PreprocessOptions preprocess;
  LdaHyperparams lda;
  std::optional<std::size_t> k;
  std::optional<KRange> k_range;
  CoherenceConfig coherence;
  double tau = 0.95;
  Periodicity periodicity = Periodicity::Weekly;
  FillPolicy fill = FillPolicy::Missing;
  std::size_t max_lag = 7;
  std::optional<std::size_t> adf_max_lag;
  std::uint64_t seed = 42;
  bool plots = true;

  void validate() const {
    if (k && k_range) throw UsageError("config: 'lda.k' and 'select_k' are mutually exclusive");
    if (corpus.empty()) throw UsageError("config: corpus path is required");
    if (stopwords.empty()) throw UsageError("config: stopwords path is required");
    if (!std::filesystem::exists(corpus)) throw UsageError("config: corpus '" + corpus.string() + "' does not exist");
    if (!std::filesystem::exists(stopwords)) throw UsageError("config: stopwords '" + stopwords.string() + "' does not exist");
    if (market && !std::filesystem::exists(*market)) throw UsageError("config: market series '" + market->string() + "' does not exist");
    if (!(tau > 0.0 && tau < 1.0)) throw UsageError("config: tau must lie in (0, 1)");
    coherence.validate();
  }

  /// Normalised key set as written to the manifest (paths as given).
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["corpus"] = corpus.generic_string();
    j["stopwords"] = stopwords.generic_string();
    j["market"] = market ? nlohmann::json(market->generic_string()) : nlohmann::json(nullptr);
    j["preprocess"] = {{"min_doc_count", preprocess.min_doc_count},
                       {"min_token_len", preprocess.min_token_len},
                       {"stem", preprocess.stem},
                       {"include_title", preprocess.include_title}};
    j["lda"] = {{"k", k ? nlohmann::json(*k) : nlohmann::json(nullptr)},
                {"alpha", lda.alpha},
                {"beta", lda.beta},
                {"iterations", lda.iterations},
                {"burn_in", lda.burn_in}};
    j["select_k"] = k_range ? nlohmann::json{{"k_min", k_range->min}, {"k_max", k_range->max}} : nlohmann::json(nullptr);
    j["coherence"] = {{"measure", measure_name(coherence.measure)},
                      {"top_j", coherence.top_j},
                      {"epsilon", coherence.epsilon},
                      {"gamma", coherence.gamma},
                      {"window", coherence.window}};
    j["classify"] = {{"tau", tau}};
    j["index"] = {{"period", periodicity_name(periodicity)}, {"fill", fill_name(fill)}};
    j["analyze"] = {{"max_lag", max_lag}, {"adf_max_lag", adf_max_lag ? nlohmann::json(*adf_max_lag) : nlohmann::json(nullptr)}};
    j["seed"] = seed;
    j["plots"] = plots;
    return j;
  }
};

/**
 * Read a config document. Relative paths resolve against `base_dir`.
 * Unknown top-level keys are rejected.
 */
inline PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  static const std::set<std::string> known = {"corpus", "stopwords", "market", "output_dir", "preprocess", "lda", "select_k",
                                              "coherence", "classify", "index", "analyze", "seed", "plots"};
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw UsageError("config: unknown key '" + key + "'");
  auto path = [&](const std::string& s) {
    std::filesystem::path p(s);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  PipelineConfig c;
  try {
    if (j.contains("corpus")) c.corpus = path(j.at("corpus").get<std::string>());
    if (j.contains("stopwords")) c.stopwords = path(j.at("stopwords").get<std::string>());
    if (j.contains("market") && !j.at("market").is_null()) c.market = path(j.at("market").get<std::string>());
    if (j.contains("output_dir")) c.output_dir = path(j.at("output_dir").get<std::string>());
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      c.preprocess.min_doc_count = p.value("min_doc_count", c.preprocess.min_doc_count);
      c.preprocess.min_token_len = p.value("min_token_len", c.preprocess.min_token_len);
      c.preprocess.stem = p.value("stem", c.preprocess.stem);
      c.preprocess.include_title = p.value("include_title", c.preprocess.include_title);
    }
    if (j.contains("lda")) {
      const auto& l = j.at("lda");
      if (l.contains("k") && !l.at("k").is_null()) c.k = l.at("k").get<std::size_t>();
      c.lda.alpha = l.value("alpha", c.lda.alpha);
      c.lda.beta = l.value("beta", c.lda.beta);
      c.lda.iterations = l.value("iterations", c.lda.iterations);
      c.lda.burn_in = l.value("burn_in", c.lda.burn_in);
    }
    if (j.contains("select_k") && !j.at("select_k").is_null()) {
      const auto& s = j.at("select_k");
      c.k_range = KRange{s.value("k_min", std::size_t{2}), s.value("k_max", std::size_t{25})};
    }
    if (j.contains("coherence")) {
      const auto& s = j.at("coherence");
      if (s.contains("measure")) c.coherence.measure = parse_measure(s.at("measure").get<std::string>());
      c.coherence.top_j = s.value("top_j", c.coherence.top_j);
      c.coherence.epsilon = s.value("epsilon", c.coherence.epsilon);
      c.coherence.gamma = s.value("gamma", c.coherence.gamma);
      c.coherence.window = s.value("window", c.coherence.window);
    }
    if (j.contains("classify")) c.tau = j.at("classify").value("tau", c.tau);
    if (j.contains("index")) {
      const auto& s = j.at("index");
      if (s.contains("period")) c.periodicity = parse_periodicity(s.at("period").get<std::string>());
      if (s.contains("fill")) c.fill = parse_fill(s.at("fill").get<std::string>());
    }
    if (j.contains("analyze")) {
      const auto& s = j.at("analyze");
      c.max_lag = s.value("max_lag", c.max_lag);
      if (s.contains("adf_max_lag") && !s.at("adf_max_lag").is_null()) c.adf_max_lag = s.at("adf_max_lag").get<std::size_t>();
    }
    c.seed = j.value("seed", c.seed);
    c.plots = j.value("plots", c.plots);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw UsageError("cannot open config '" + file.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return config_from_json(j, file.parent_path());
}

inline std::string hash_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return to_hex(fnv1a(ss.str()));
}

/// Tracks files written by a run so a failed run can remove them.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& contents) {
    const auto p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    written_.push_back(p);
    out << contents;
    if (!out) throw DataError("write failed for '" + p.string() + "'");
  }

  void remove_all() noexcept {
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
    written_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

struct StageRecord {
  std::string name;
  bool skipped = false;
  std::string notice;
  std::vector<std::string> outputs;
};

struct RunManifest {
  nlohmann::json document;
  std::filesystem::path path;
  std::vector<StageRecord> stages;
};

/**
 * ingest -> preprocess -> select-k -> train -> classify -> index -> analyze.
 *
 * Every artifact lands in config.output_dir together with manifest.json,
 * which lists the FNV-1a hash of each output. select-k runs only with a K
 * range and analyze only with a market series; skipped stages are recorded.
 * On failure all files written by this run are removed and the error is
 * rethrown prefixed with the stage name.
 */
inline RunManifest run_pipeline(const PipelineConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  OutputSet files(cfg.output_dir);
  RunManifest manifest;
  std::string stage;
  auto note = [&](const std::string& msg) {
    if (log) *log << "[" << stage << "] " << msg << '\n';
  };
  auto record = [&](std::vector<std::string> outputs) { manifest.stages.push_back({stage, false, {}, std::move(outputs)}); };

  try {
    stage = "ingest";
    const auto articles = load_corpus(cfg.corpus.string());
    {
      std::ostringstream s;
      for (const auto& a : articles) s << article_to_json(a).dump() << '\n';
      files.write("articles.jsonl", s.str());
    }
    note(std::to_string(articles.size()) + " articles");
    record({"articles.jsonl"});

    stage = "preprocess";
    const auto stop = load_stopwords(cfg.stopwords.string());
    const BowCorpus corpus = preprocess(articles, stop, cfg.preprocess);
    files.write("bow.json", to_json(corpus).dump());
    note("V=" + std::to_string(corpus.vocab_size()) + " tokens=" + std::to_string(corpus.total_tokens()));
    record({"bow.json"});

    LdaHyperparams hyper = cfg.lda;
    hyper.seed = cfg.seed;
    stage = "select-k";
    if (cfg.k_range) {
      const auto sel = select_k(corpus, *cfg.k_range, hyper, cfg.coherence);
      std::ostringstream s;
      csv::write_row(s, {"k", "coherence"});
      std::vector<std::string> labels;
      svg::LineSeries line{std::string("coherence (") + measure_name(cfg.coherence.measure) + ")", {}, "#1f77b4"};
      for (const auto& [k, score] : sel.scores) {
        csv::write_row(s, {std::to_string(k), csv::format_double(score)});
        labels.push_back(std::to_string(k));
        line.y.push_back(score);
      }
      files.write("k_scores.csv", s.str());
      std::vector<std::string> outs{"k_scores.csv"};
      if (cfg.plots) {
        files.write("k_scores.svg", svg::line_chart("Coherence by number of topics", labels, {line}));
        outs.push_back("k_scores.svg");
      }
      hyper.k = sel.best_k;
      note("best k=" + std::to_string(sel.best_k));
      record(std::move(outs));
    } else {
      if (cfg.k) hyper.k = *cfg.k;
      manifest.stages.push_back({stage, true, "fixed k=" + std::to_string(hyper.k), {}});
    }

    stage = "train";
    const TopicModel model = train(corpus, hyper);
    files.write("model.json", to_json(model).dump());
    record({"model.json"});

    stage = "classify";
    const auto classified = classify_corpus(model, corpus, cfg.tau, 200, cfg.seed);
    {
      std::ostringstream s;
      write_classified(s, classified);
      files.write("classified.jsonl", s.str());
    }
    note("threshold=" + csv::format_double(classified.rule.threshold_value));
    record({"classified.jsonl"});

    stage = "index";
    std::vector<DatedArticle> dated;
    for (const auto& a : classified.articles) dated.push_back({a.date, a.regulatory});
    const IndexSeries index = build_index(dated, cfg.periodicity, cfg.fill);
    {
      std::ostringstream s;
      write_index_csv(s, index);
      files.write("crrix.csv", s.str());
    }
    std::vector<std::string> outs{"crrix.csv"};
    if (cfg.plots) {
      std::vector<std::string> labels;
      svg::LineSeries line{"CRRIX", {}, "#1f77b4"};
      for (const auto& p : index.points) {
        labels.push_back(p.bucket_start.str());
        line.y.push_back(p.value);
      }
      files.write("crrix.svg", svg::line_chart(std::string("CRRIX (") + periodicity_name(cfg.periodicity) + ")", labels, {line}));
      outs.push_back("crrix.svg");
    }
    record(std::move(outs));

    stage = "analyze";
    if (cfg.market) {
      const auto market = read_market_csv(cfg.market->string());
      nlohmann::json report = analyze(index, market, cfg.max_lag, cfg.adf_max_lag);
      report["seed"] = cfg.seed;
      files.write("report.json", report.dump(2));
      record({"report.json"});
    } else {
      note("no market series configured; analyze skipped");
      manifest.stages.push_back({stage, true, "no market series configured", {}});
    }

    nlohmann::json doc;
    doc["seed"] = cfg.seed;
    doc["config"] = cfg.to_json();
    auto stages = nlohmann::json::array();
    for (const auto& s : manifest.stages) {
      nlohmann::json entry = {{"stage", s.name}, {"status", s.skipped ? "skipped" : "ok"}};
      if (!s.notice.empty()) entry["notice"] = s.notice;
      auto outs_json = nlohmann::json::array();
      for (const auto& f : s.outputs) outs_json.push_back({{"file", f}, {"fnv1a", hash_file(cfg.output_dir / f)}});
      entry["outputs"] = std::move(outs_json);
      stages.push_back(std::move(entry));
    }
    doc["stages"] = std::move(stages);
    stage = "manifest";
    files.write("manifest.json", doc.dump(2) + "\n");
    manifest.document = std::move(doc);
    manifest.path = cfg.output_dir / "manifest.json";
    return manifest;
  } catch (const Error& e) {
    files.remove_all();
    throw_error(e.kind(), "stage '" + stage + "': " + e.what());
  } catch (const std::exception& e) {
    files.remove_all();
    throw DataError("stage '" + stage + "': " + e.what());
  }
}

}  // namespace crrix
