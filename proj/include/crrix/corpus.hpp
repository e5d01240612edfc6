#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "crrix/date.hpp"
#include "crrix/error.hpp"
#include "crrix/hash.hpp"

namespace crrix {

enum class Label { Regulatory, NonRegulatory, Unlabeled };

inline const char* label_name(Label l) {
  switch (l) {
    case Label::Regulatory: return "regulatory";
    case Label::NonRegulatory: return "non-regulatory";
    case Label::Unlabeled: break;
  }
  return "unlabeled";
}

struct Article {
  std::string id;
  Date date;
  std::string source;
  std::string title;
  std::string body;
  Label label = Label::Unlabeled;
};

/// JSON field names for the article records.
struct CorpusSchema {
  std::string id = "id";
  std::string date = "date";
  std::string source = "source";
  std::string title = "title";
  std::string body = "body";
  std::string label = "label";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::string optional_string(const nlohmann::json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw DataError("field '" + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

/// Parse one JSON object into an Article, validating the record invariants.
inline Article parse_article(const nlohmann::json& obj, const CorpusSchema& schema = {}) {
  if (!obj.is_object()) throw DataError("article record is not a JSON object");
  Article a;
  a.id = detail::optional_string(obj, schema.id);
  if (a.id.empty()) throw DataError("article with missing or empty id");
  const std::string date = detail::optional_string(obj, schema.date);
  const auto parsed = Date::parse(date);
  if (!parsed) throw DataError("article '" + a.id + "': unparseable date '" + date + "'");
  a.date = *parsed;
  a.source = detail::optional_string(obj, schema.source);
  a.title = detail::optional_string(obj, schema.title);
  a.body = detail::optional_string(obj, schema.body);
  if (detail::trim(a.body).empty()) throw DataError("article '" + a.id + "': empty body");
  const std::string label = detail::optional_string(obj, schema.label);
  if (label.empty()) {
    a.label = Label::Unlabeled;
  } else if (label == "regulatory") {
    a.label = Label::Regulatory;
  } else if (label == "non-regulatory") {
    a.label = Label::NonRegulatory;
  } else {
    throw DataError("article '" + a.id + "': unknown label '" + label + "'");
  }
  return a;
}

inline nlohmann::json article_to_json(const Article& a) {
  nlohmann::json j;
  j["id"] = a.id;
  j["date"] = a.date.str();
  j["source"] = a.source;
  j["title"] = a.title;
  j["body"] = a.body;
  j["label"] = a.label == Label::Unlabeled ? nlohmann::json(nullptr) : nlohmann::json(label_name(a.label));
  return j;
}

/// Read a JSON Lines corpus. Blank lines are skipped; ids must be unique.
inline std::vector<Article> load_corpus(std::istream& in, const CorpusSchema& schema = {}) {
  std::vector<Article> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("line " + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
    }
    Article a;
    try {
      a = parse_article(obj, schema);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!seen.insert(a.id).second) throw DataError("duplicate article id '" + a.id + "'");
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<Article> load_corpus(const std::string& path, const CorpusSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return load_corpus(in, schema);
}

/// One token per line; blank lines and lines starting with '#' ignored.
inline std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file '" + path + "'");
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::string w(t);
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.insert(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tokenization

/// Bytes >= 0x80 are treated as word characters so UTF-8 letters stay intact.
inline bool is_token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

/// Split on non-alphanumeric boundaries and lowercase ASCII letters.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Length in code points (UTF-8 continuation bytes are not counted).
inline std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](unsigned char c) { return (c & 0xC0) != 0x80; }));
}

inline bool is_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return c >= '0' && c <= '9'; });
}

/// Harman's S-stemmer: strips plural suffixes only.
inline std::string stem_plural(std::string w) {
  auto ends = [&](std::string_view suf) { return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0; };
  if (ends("ies") && !ends("eies") && !ends("aies")) {
    w.replace(w.size() - 3, 3, "y");
  } else if (ends("es") && !ends("aes") && !ends("ees") && !ends("oes")) {
    w.pop_back();
  } else if (ends("s") && !ends("us") && !ends("ss")) {
    w.pop_back();
  }
  return w;
}

// ---------------------------------------------------------------------------
// Bag of words

using TermId = std::uint32_t;

struct TermCount {
  TermId term;
  std::uint32_t count;
  friend bool operator==(const TermCount&, const TermCount&) = default;
};

using SparseDoc = std::vector<TermCount>;

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Terms must be unique; their order defines the indices.
  Vocabulary(std::vector<std::string> terms, std::vector<std::uint32_t> doc_frequency)
      : terms_(std::move(terms)), doc_frequency_(std::move(doc_frequency)) {
    if (doc_frequency_.size() != terms_.size()) throw DataError("vocabulary: term/frequency length mismatch");
    index_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (!index_.emplace(terms_[i], static_cast<TermId>(i)).second)
        throw DataError("vocabulary: duplicate term '" + terms_[i] + "'");
  }

  std::size_t size() const { return terms_.size(); }
  const std::string& term(TermId i) const { return terms_.at(i); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<std::uint32_t>& doc_frequency() const { return doc_frequency_; }

  std::optional<TermId> find(std::string_view t) const {
    auto it = index_.find(std::string(t));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Order-sensitive hash of the term list; binds models to vocabularies.
  std::uint64_t fingerprint() const {
    Fnv1a h;
    h.update_u64(terms_.size());
    for (const auto& t : terms_) {
      h.update(t);
      h.update(std::string_view("\n", 1));
    }
    return h.digest();
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> doc_frequency_;
  std::unordered_map<std::string, TermId> index_;
};

struct DocMeta {
  std::string id;
  Date date;
  Label label = Label::Unlabeled;
};

struct PreprocessOptions {
  std::size_t min_doc_count = 5;
  std::size_t min_token_len = 2;
  bool stem = false;
  bool include_title = true;
};

struct BowCorpus {
  Vocabulary vocabulary;
  std::vector<SparseDoc> docs;  ///< sorted by term index
  std::vector<DocMeta> meta;    ///< parallel to docs
  /// Surviving tokens in reading order; empty vectors when unavailable.
  std::vector<std::vector<TermId>> sequences;
  PreprocessOptions options;

  std::size_t size() const { return docs.size(); }
  std::size_t vocab_size() const { return vocabulary.size(); }
  bool is_empty_doc(std::size_t d) const { return docs[d].empty(); }
  bool has_sequences() const { return sequences.size() == docs.size(); }

  std::size_t non_empty_docs() const {
    return static_cast<std::size_t>(std::count_if(docs.begin(), docs.end(), [](const SparseDoc& d) { return !d.empty(); }));
  }

  std::uint64_t total_tokens() const {
    std::uint64_t n = 0;
    for (const auto& d : docs)
      for (const auto& tc : d) n += tc.count;
    return n;
  }

  /// Hash over vocabulary and document contents (not metadata).
  std::uint64_t content_fingerprint() const {
    Fnv1a h;
    h.update_u64(vocabulary.fingerprint());
    h.update_u64(docs.size());
    for (const auto& d : docs) {
      h.update_u64(d.size());
      for (const auto& tc : d) {
        h.update_u64(tc.term);
        h.update_u64(tc.count);
      }
    }
    return h.digest();
  }
};

inline std::uint32_t doc_length(const SparseDoc& d) {
  std::uint32_t n = 0;
  for (const auto& tc : d) n += tc.count;
  return n;
}

/// Apply the token filter chain (length, stopword, number, optional stemming).
inline std::vector<std::string> filter_tokens(std::string_view text, const std::set<std::string>& stopwords,
                                              const PreprocessOptions& opt) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) {
    if (is_number(t)) continue;
    if (stopwords.count(t)) continue;
    std::string w = opt.stem ? stem_plural(std::move(t)) : std::move(t);
    if (utf8_length(w) < opt.min_token_len) continue;
    if (opt.stem && stopwords.count(w)) continue;
    out.push_back(std::move(w));
  }
  return out;
}

inline std::string article_text(const Article& a, bool include_title) {
  if (!include_title || a.title.empty()) return a.body;
  return a.title + "\n" + a.body;
}

/**
 * Tokenize, filter and count articles into a bag-of-words corpus.
 *
 * Vocabulary terms are sorted lexicographically (byte order) and must occur
 * in at least `min_doc_count` documents. Documents left without tokens stay
 * in the corpus with an empty sparse vector.
 */
inline BowCorpus preprocess(const std::vector<Article>& articles, const std::set<std::string>& stopwords,
                            const PreprocessOptions& opt = {}) {
  if (articles.empty()) throw DataError("preprocess: no articles");
  if (opt.min_doc_count == 0 || opt.min_token_len == 0) throw UsageError("preprocess: min_doc_count and min_token_len must be positive");

  std::vector<std::vector<std::string>> tokens(articles.size());
  std::map<std::string, std::uint32_t> df;
  for (std::size_t i = 0; i < articles.size(); ++i) {
    tokens[i] = filter_tokens(article_text(articles[i], opt.include_title), stopwords, opt);
    std::set<std::string_view> uniq(tokens[i].begin(), tokens[i].end());
    for (auto t : uniq) ++df[std::string(t)];
  }

  std::vector<std::string> terms;
  std::vector<std::uint32_t> freq;
  for (const auto& [t, n] : df) {
    if (n >= opt.min_doc_count) {
      terms.push_back(t);
      freq.push_back(n);
    }
  }

  BowCorpus c;
  c.options = opt;
  c.vocabulary = Vocabulary(std::move(terms), std::move(freq));
  c.docs.resize(articles.size());
  c.sequences.resize(articles.size());
  c.meta.reserve(articles.size());
  for (std::size_t i = 0; i < articles.size(); ++i) {
    std::map<TermId, std::uint32_t> counts;
    for (const auto& t : tokens[i]) {
      if (auto id = c.vocabulary.find(t)) {
        ++counts[*id];
        c.sequences[i].push_back(*id);
      }
    }
    for (auto [id, n] : counts) c.docs[i].push_back({id, n});
    c.meta.push_back({articles[i].id, articles[i].date, articles[i].label});
  }
  if (c.non_empty_docs() == 0) throw DataError("preprocess: every document is empty after filtering");
  return c;
}

/// Project articles onto an existing vocabulary (unknown terms dropped).
inline BowCorpus project(const std::vector<Article>& articles, const std::set<std::string>& stopwords,
                         const BowCorpus& reference) {
  BowCorpus c;
  c.options = reference.options;
  c.vocabulary = reference.vocabulary;
  c.docs.resize(articles.size());
  c.sequences.resize(articles.size());
  for (std::size_t i = 0; i < articles.size(); ++i) {
    std::map<TermId, std::uint32_t> counts;
    for (const auto& t : filter_tokens(article_text(articles[i], c.options.include_title), stopwords, c.options)) {
      if (auto id = c.vocabulary.find(t)) {
        ++counts[*id];
        c.sequences[i].push_back(*id);
      }
    }
    for (auto [id, n] : counts) c.docs[i].push_back({id, n});
    c.meta.push_back({articles[i].id, articles[i].date, articles[i].label});
  }
  return c;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const BowCorpus& c) {
  nlohmann::json j;
  j["vocab"] = c.vocabulary.terms();
  auto docs = nlohmann::json::array();
  for (const auto& d : c.docs) {
    auto row = nlohmann::json::array();
    for (const auto& tc : d) row.push_back({tc.term, tc.count});
    docs.push_back(std::move(row));
  }
  j["docs"] = std::move(docs);
  auto meta = nlohmann::json::array();
  for (const auto& m : c.meta) {
    meta.push_back({{"id", m.id},
                    {"date", m.date.str()},
                    {"label", m.label == Label::Unlabeled ? nlohmann::json(nullptr) : nlohmann::json(label_name(m.label))}});
  }
  j["meta"] = std::move(meta);
  if (c.has_sequences()) j["seq"] = c.sequences;
  j["params"] = {{"min_doc_count", c.options.min_doc_count},
                 {"min_token_len", c.options.min_token_len},
                 {"stem", c.options.stem},
                 {"include_title", c.options.include_title}};
  return j;
}

inline BowCorpus bow_from_json(const nlohmann::json& j) {
  try {
    BowCorpus c;
    auto terms = j.at("vocab").get<std::vector<std::string>>();
    const std::size_t V = terms.size();
    std::vector<std::uint32_t> df(V, 0);
    for (const auto& row : j.at("docs")) {
      SparseDoc d;
      for (const auto& pair : row) {
        const auto term = pair.at(0).get<TermId>();
        const auto count = pair.at(1).get<std::uint32_t>();
        if (term >= V || count == 0) throw DataError("bow corpus: invalid (term, count) entry");
        if (!d.empty() && d.back().term >= term) throw DataError("bow corpus: doc entries not strictly increasing");
        d.push_back({term, count});
        ++df[term];
      }
      c.docs.push_back(std::move(d));
    }
    c.vocabulary = Vocabulary(std::move(terms), std::move(df));
    for (const auto& m : j.at("meta")) {
      DocMeta dm;
      dm.id = m.at("id").get<std::string>();
      const auto date = Date::parse(m.at("date").get<std::string>());
      if (!date) throw DataError("bow corpus: bad date for '" + dm.id + "'");
      dm.date = *date;
      const auto& l = m.at("label");
      dm.label = l.is_null() ? Label::Unlabeled
                 : l.get<std::string>() == "regulatory" ? Label::Regulatory
                                                        : Label::NonRegulatory;
      c.meta.push_back(std::move(dm));
    }
    if (c.meta.size() != c.docs.size()) throw DataError("bow corpus: docs/meta length mismatch");
    if (j.contains("seq")) c.sequences = j.at("seq").get<std::vector<std::vector<TermId>>>();
    if (j.contains("params")) {
      const auto& p = j.at("params");
      c.options.min_doc_count = p.at("min_doc_count").get<std::size_t>();
      c.options.min_token_len = p.at("min_token_len").get<std::size_t>();
      c.options.stem = p.at("stem").get<bool>();
      c.options.include_title = p.value("include_title", true);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bow corpus: ") + e.what());
  }
}

}  // namespace crrix
