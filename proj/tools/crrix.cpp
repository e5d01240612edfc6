// crrix: command-line front end for the regulatory risk index pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crrix/crrix.hpp"

namespace {

using namespace crrix;

const std::string kDefaultStopwords = std::string(CRRIX_DATA_DIR) + "/stopwords.txt";

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

/// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << contents;
}

struct PreprocessFlags {
  std::string stopwords = kDefaultStopwords;
  PreprocessOptions opt;
  bool no_title = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--stopwords", stopwords, "Stopword file, one token per line")->capture_default_str();
    cmd->add_option("--min-doc-count", opt.min_doc_count, "Minimum document frequency per term")->capture_default_str();
    cmd->add_option("--min-token-len", opt.min_token_len, "Minimum token length in code points")->capture_default_str();
    cmd->add_flag("--stem", opt.stem, "Strip plural suffixes");
    cmd->add_flag("--no-title", no_title, "Exclude titles from the bag of words");
  }
  PreprocessOptions options() const {
    auto o = opt;
    o.include_title = !no_title;
    return o;
  }
};

struct LdaFlags {
  LdaHyperparams hyper;
  void add(CLI::App* cmd, bool with_k) {
    if (with_k) cmd->add_option("--k", hyper.k, "Number of topics")->capture_default_str();
    cmd->add_option("--alpha", hyper.alpha, "Symmetric Dirichlet prior on document-topic proportions")->capture_default_str();
    cmd->add_option("--beta", hyper.beta, "Symmetric Dirichlet prior on topic-word distributions")->capture_default_str();
    cmd->add_option("--iters", hyper.iterations, "Gibbs sweeps")->capture_default_str();
    cmd->add_option("--burn-in", hyper.burn_in, "Burn-in sweeps")->capture_default_str();
    cmd->add_option("--seed", hyper.seed, "Random seed")->capture_default_str();
  }
};

struct CoherenceFlags {
  CoherenceConfig cfg;
  std::string metric = "cv";
  void add(CLI::App* cmd) {
    cmd->add_option("--metric", metric, "cv, umass or uci")->capture_default_str();
    cmd->add_option("--top-j", cfg.top_j, "Top words per topic")->capture_default_str();
    cmd->add_option("--window", cfg.window, "Sliding window width")->capture_default_str();
    cmd->add_option("--epsilon", cfg.epsilon, "Smoothing constant")->capture_default_str();
    cmd->add_option("--gamma", cfg.gamma, "NPMI exponent")->capture_default_str();
  }
  CoherenceConfig config() const {
    auto c = cfg;
    c.measure = parse_measure(metric);
    return c;
  }
};

std::vector<int> binary_labels(const std::vector<Article>& articles) {
  std::vector<int> y;
  for (const auto& a : articles) y.push_back(a.label == Label::Regulatory ? 1 : 0);
  return y;
}

std::vector<Article> labeled_only(std::vector<Article> articles) {
  std::erase_if(articles, [](const Article& a) { return a.label == Label::Unlabeled; });
  if (articles.empty()) throw DataError("no labeled articles");
  return articles;
}

int exit_code(ErrorKind k) { return static_cast<int>(k); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crrix: regulatory risk index from labeled news"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a JSONL corpus and write the bag-of-words corpus");
  std::string ingest_in;
  std::string ingest_out = "bow.json";
  PreprocessFlags ingest_pre;
  ingest->add_option("--corpus", ingest_in, "Articles in JSON Lines")->required();
  ingest->add_option("--out", ingest_out, "Output bag-of-words JSON")->capture_default_str();
  ingest_pre.add(ingest);

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit an LDA model by collapsed Gibbs sampling");
  std::string train_corpus = "bow.json";
  std::string train_out = "model.json";
  LdaFlags train_lda;
  train_cmd->add_option("--corpus", train_corpus, "Bag-of-words JSON")->capture_default_str();
  train_cmd->add_option("--out", train_out, "Output model JSON")->capture_default_str();
  train_lda.add(train_cmd, true);

  // select-k
  auto* selk = app.add_subcommand("select-k", "Score a range of topic counts by coherence");
  std::string selk_corpus = "bow.json";
  std::string selk_out;
  std::string selk_plot;
  std::string selk_reference;
  std::size_t k_min = 2;
  std::size_t k_max = 25;
  LdaFlags selk_lda;
  CoherenceFlags selk_coh;
  PreprocessFlags selk_ref_pre;
  selk->add_option("--corpus", selk_corpus, "Bag-of-words JSON")->capture_default_str();
  selk->add_option("--k-min", k_min)->capture_default_str();
  selk->add_option("--k-max", k_max)->capture_default_str();
  selk->add_option("--out", selk_out, "CSV output (default stdout)");
  selk->add_option("--plot", selk_plot, "SVG line chart of coherence by K");
  selk->add_option("--reference", selk_reference, "Reference JSONL corpus for uci/cv probabilities");
  selk_lda.add(selk, false);
  selk_coh.add(selk);

  // classify
  auto* cls = app.add_subcommand("classify", "Label articles by mean Hellinger distance to the regulatory set");
  std::string cls_model = "model.json";
  std::string cls_corpus = "bow.json";
  std::string cls_out;
  double tau = 0.95;
  std::size_t infer_iters = 200;
  std::uint64_t cls_seed = 42;
  cls->add_option("--model", cls_model)->capture_default_str();
  cls->add_option("--corpus", cls_corpus)->capture_default_str();
  cls->add_option("--tau", tau, "Quantile of the regulatory distances used as threshold")->capture_default_str();
  cls->add_option("--infer-iters", infer_iters, "Gibbs sweeps for documents outside the training corpus")->capture_default_str();
  cls->add_option("--seed", cls_seed)->capture_default_str();
  cls->add_option("--out", cls_out, "JSONL output (default stdout)");

  // baseline
  auto* base = app.add_subcommand("baseline", "Naive Bayes or class-weighted SVM baseline");
  std::string method = "nb";
  std::string base_train;
  std::string base_eval;
  std::string base_out;
  PreprocessFlags base_pre;
  SvmOptions svm_opt;
  std::optional<double> weight_pos;
  base->add_option("--method", method, "nb or svm")->capture_default_str()->check(CLI::IsMember({"nb", "svm"}));
  base->add_option("--train", base_train, "Labeled JSONL for training")->required();
  base->add_option("--eval", base_eval, "Labeled JSONL for evaluation")->required();
  base->add_option("--out", base_out, "Confusion matrix JSON (default stdout)");
  base->add_option("--weight-pos", weight_pos, "SVM penalty for class 1 (default n_neg/n_pos)");
  base->add_option("--weight-neg", svm_opt.weight_neg, "SVM penalty for class 0")->capture_default_str();
  base->add_option("--lambda", svm_opt.lambda, "SVM L2 regularisation")->capture_default_str();
  base->add_option("--epochs", svm_opt.epochs, "SVM epochs")->capture_default_str();
  base->add_option("--seed", svm_opt.seed, "SVM shuffle seed")->capture_default_str();
  base_pre.add(base);

  // index
  auto* idx = app.add_subcommand("index", "Build the CRRIX series from classified articles");
  std::string idx_in = "classified.jsonl";
  std::string idx_out;
  std::string idx_plot;
  std::string period = "weekly";
  std::string fill = "missing";
  idx->add_option("--classified", idx_in)->capture_default_str();
  idx->add_option("--period", period, "daily, weekly or monthly")->capture_default_str();
  idx->add_option("--fill", fill, "missing, zero or forward")->capture_default_str();
  idx->add_option("--out", idx_out, "CSV output (default stdout)");
  idx->add_option("--plot", idx_plot, "SVG line chart");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Correlation, ADF and Granger tests against a market series");
  std::string ana_index = "crrix.csv";
  std::string ana_market;
  std::string ana_period = "weekly";
  std::string ana_out;
  std::size_t max_lag = 7;
  std::optional<std::size_t> adf_max_lag;
  ana->add_option("--index", ana_index)->capture_default_str();
  ana->add_option("--market", ana_market, "CSV date,value")->required();
  ana->add_option("--period", ana_period, "Periodicity of the index CSV")->capture_default_str();
  ana->add_option("--max-lag", max_lag)->capture_default_str();
  ana->add_option("--adf-max-lag", adf_max_lag, "Maximum ADF lag (default Schwert rule)");
  ana->add_option("--out", ana_out, "JSON output (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run the whole pipeline from a config file");
  std::string run_config;
  std::optional<std::string> run_out_dir;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_k;
  std::optional<std::string> run_market;
  bool no_plots = false;
  run->add_option("--config", run_config, "Pipeline config JSON")->required();
  run->add_option("--out-dir", run_out_dir, "Override output directory");
  run->add_option("--seed", run_seed, "Override seed");
  run->add_option("--k", run_k, "Fix K (disables select-k from the config)");
  run->add_option("--market", run_market, "Override market series");
  run->add_flag("--no-plots", no_plots, "Skip SVG output");

  // topic-distances
  auto* td = app.add_subcommand("topic-distances", "Pairwise topic distances");
  std::string td_model = "model.json";
  std::string td_metric = "hellinger";
  std::string td_heatmap;
  std::string td_out;
  std::size_t td_top_j = 10;
  td->add_option("--model", td_model)->capture_default_str();
  td->add_option("--metric", td_metric, "hellinger or jaccard")->capture_default_str()->check(CLI::IsMember({"hellinger", "jaccard"}));
  td->add_option("--top-j", td_top_j, "Top words for jaccard")->capture_default_str();
  td->add_option("--heatmap", td_heatmap, "SVG heatmap output");
  td->add_option("--out", td_out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      const auto articles = load_corpus(ingest_in);
      const auto corpus = preprocess(articles, load_stopwords(ingest_pre.stopwords), ingest_pre.options());
      emit(ingest_out, to_json(corpus).dump());
      std::cerr << "articles=" << articles.size() << " V=" << corpus.vocab_size() << " tokens=" << corpus.total_tokens()
                << " empty=" << corpus.size() - corpus.non_empty_docs() << '\n';
    } else if (*train_cmd) {
      const auto corpus = bow_from_json(read_json(train_corpus));
      if (train_lda.hyper.k > corpus.non_empty_docs()) std::cerr << "warning: K exceeds the number of non-empty documents\n";
      const auto model = train(corpus, train_lda.hyper);
      emit(train_out, to_json(model).dump());
    } else if (*selk) {
      const auto corpus = bow_from_json(read_json(selk_corpus));
      std::optional<BowCorpus> reference;
      if (!selk_reference.empty()) {
        auto opt = corpus.options;
        opt.min_doc_count = 1;
        reference = preprocess(load_corpus(selk_reference), load_stopwords(selk_ref_pre.stopwords), opt);
      }
      const auto sel = select_k(corpus, {k_min, k_max}, selk_lda.hyper, selk_coh.config(), reference ? &*reference : nullptr);
      std::ostringstream s;
      csv::write_row(s, {"k", "coherence"});
      std::vector<std::string> labels;
      svg::LineSeries line{"coherence (" + selk_coh.metric + ")", {}, "#1f77b4"};
      for (const auto& [k, score] : sel.scores) {
        csv::write_row(s, {std::to_string(k), csv::format_double(score)});
        labels.push_back(std::to_string(k));
        line.y.push_back(score);
      }
      emit(selk_out, s.str());
      if (!selk_plot.empty()) emit(selk_plot, svg::line_chart("Coherence by number of topics", labels, {line}));
      std::cerr << "best_k=" << sel.best_k << '\n';
    } else if (*cls) {
      const auto model = model_from_json(read_json(cls_model));
      const auto corpus = bow_from_json(read_json(cls_corpus));
      const auto out = classify_corpus(model, corpus, tau, infer_iters, cls_seed);
      std::ostringstream s;
      write_classified(s, out);
      emit(cls_out, s.str());
      std::cerr << "threshold=" << csv::format_double(out.rule.threshold_value) << (out.inferred ? " (theta inferred)" : "") << '\n';
    } else if (*base) {
      const auto stop = load_stopwords(base_pre.stopwords);
      const auto train_articles = labeled_only(load_corpus(base_train));
      const auto eval_articles = labeled_only(load_corpus(base_eval));
      const auto train_corpus_bow = preprocess(train_articles, stop, base_pre.options());
      const auto eval_corpus = project(eval_articles, stop, train_corpus_bow);
      const auto y_train = binary_labels(train_articles);
      const auto y_eval = binary_labels(eval_articles);
      std::vector<int> predicted;
      if (method == "nb") {
        const auto m = nb_train(train_corpus_bow, y_train);
        for (const auto& d : eval_corpus.docs) predicted.push_back(nb_predict(m, d));
      } else {
        const auto pos = static_cast<double>(std::count(y_train.begin(), y_train.end(), 1));
        svm_opt.weight_pos = weight_pos ? *weight_pos : (static_cast<double>(y_train.size()) - pos) / pos;
        const auto m = svm_train(train_corpus_bow, y_train, svm_opt);
        for (const auto& d : eval_corpus.docs) predicted.push_back(svm_predict(m, d));
      }
      auto j = to_json(confusion_matrix(predicted, y_eval));
      j["method"] = method;
      emit(base_out, j.dump(2) + "\n");
    } else if (*idx) {
      std::ifstream in(idx_in);
      if (!in) throw DataError("cannot open '" + idx_in + "'");
      const auto series = build_index(read_classified(in), parse_periodicity(period), parse_fill(fill));
      std::ostringstream s;
      write_index_csv(s, series);
      emit(idx_out, s.str());
      if (!idx_plot.empty()) {
        std::vector<std::string> labels;
        svg::LineSeries line{"CRRIX", {}, "#1f77b4"};
        for (const auto& p : series.points) {
          labels.push_back(p.bucket_start.str());
          line.y.push_back(p.value);
        }
        emit(idx_plot, svg::line_chart("CRRIX (" + period + ")", labels, {line}));
      }
    } else if (*ana) {
      std::ifstream in(ana_index);
      if (!in) throw DataError("cannot open '" + ana_index + "'");
      const auto series = read_index_csv(in, parse_periodicity(ana_period));
      const auto report = analyze(series, read_market_csv(ana_market), max_lag, adf_max_lag);
      emit(ana_out, report.dump(2) + "\n");
    } else if (*run) {
      auto cfg = load_config(run_config);
      if (run_out_dir) cfg.output_dir = *run_out_dir;
      if (run_seed) cfg.seed = *run_seed;
      if (run_market) cfg.market = *run_market;
      if (run_k) {
        cfg.k = *run_k;
        cfg.k_range.reset();
      }
      if (no_plots) cfg.plots = false;
      const auto manifest = run_pipeline(cfg, &std::cerr);
      std::cout << manifest.path.string() << '\n';
    } else if (*td) {
      const auto model = model_from_json(read_json(td_model));
      const Matrix m = td_metric == "hellinger" ? hellinger_topic_distance(model) : jaccard_topic_distance(model, td_top_j);
      std::ostringstream s;
      for (std::size_t r = 0; r < m.rows(); ++r) {
        std::vector<std::string> row;
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(csv::format_double(m(r, c)));
        csv::write_row(s, row);
      }
      emit(td_out, s.str());
      if (!td_heatmap.empty()) emit(td_heatmap, svg::heatmap("Topic distances (" + td_metric + ")", m));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
