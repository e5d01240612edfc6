#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crrix/csv.hpp"
#include "crrix/date.hpp"
#include "crrix/error.hpp"

namespace crrix {

enum class Periodicity { Daily, Weekly, Monthly };
enum class FillPolicy { Missing, Zero, Forward };

inline Periodicity parse_periodicity(const std::string& s) {
  if (s == "daily") return Periodicity::Daily;
  if (s == "weekly") return Periodicity::Weekly;
  if (s == "monthly") return Periodicity::Monthly;
  throw UsageError("unknown periodicity '" + s + "' (expected daily, weekly or monthly)");
}

inline const char* periodicity_name(Periodicity p) {
  switch (p) {
    case Periodicity::Daily: return "daily";
    case Periodicity::Weekly: return "weekly";
    case Periodicity::Monthly: break;
  }
  return "monthly";
}

inline FillPolicy parse_fill(const std::string& s) {
  if (s == "missing") return FillPolicy::Missing;
  if (s == "zero") return FillPolicy::Zero;
  if (s == "forward") return FillPolicy::Forward;
  throw UsageError("unknown fill policy '" + s + "' (expected missing, zero or forward)");
}

inline const char* fill_name(FillPolicy f) {
  switch (f) {
    case FillPolicy::Missing: return "missing";
    case FillPolicy::Zero: return "zero";
    case FillPolicy::Forward: break;
  }
  return "forward";
}

/// First day of the bucket containing `d`; weeks are ISO weeks starting Monday.
inline Date bucket_start(Date d, Periodicity p) {
  switch (p) {
    case Periodicity::Daily: return d;
    case Periodicity::Weekly: return d.iso_week_start();
    case Periodicity::Monthly: break;
  }
  return d.month_start();
}

inline Date next_bucket(Date start, Periodicity p) {
  switch (p) {
    case Periodicity::Daily: return start.plus_days(1);
    case Periodicity::Weekly: return start.plus_days(7);
    case Periodicity::Monthly: break;
  }
  return start.next_month_start();
}

struct IndexPoint {
  Date bucket_start;
  std::size_t n_reg = 0;
  std::size_t n_all = 0;
  std::optional<double> value;
};

struct IndexSeries {
  Periodicity periodicity = Periodicity::Weekly;
  std::vector<IndexPoint> points;
};

struct DatedArticle {
  Date date;
  bool regulatory = false;
};

/// Ratio of regulatory to all articles per bucket, spanning min..max date.
inline IndexSeries build_index(const std::vector<DatedArticle>& articles, Periodicity periodicity,
                               FillPolicy fill = FillPolicy::Missing) {
  if (articles.empty()) throw DataError("build_index: no articles");
  std::map<Date, std::pair<std::size_t, std::size_t>> tally;
  Date lo = articles.front().date;
  Date hi = lo;
  for (const auto& a : articles) {
    auto& [reg, all] = tally[bucket_start(a.date, periodicity)];
    reg += a.regulatory ? 1 : 0;
    ++all;
    lo = std::min(lo, a.date);
    hi = std::max(hi, a.date);
  }

  IndexSeries s;
  s.periodicity = periodicity;
  std::optional<double> last;
  for (Date b = bucket_start(lo, periodicity); b <= hi; b = next_bucket(b, periodicity)) {
    IndexPoint p;
    p.bucket_start = b;
    if (auto it = tally.find(b); it != tally.end()) {
      p.n_reg = it->second.first;
      p.n_all = it->second.second;
      p.value = static_cast<double>(p.n_reg) / static_cast<double>(p.n_all);
      last = p.value;
    } else if (fill == FillPolicy::Zero) {
      p.value = 0.0;
    } else if (fill == FillPolicy::Forward) {
      p.value = last;
    }
    s.points.push_back(p);
  }
  return s;
}

struct DatedValue {
  Date date;
  double value = 0.0;
};

/// Last observation within each bucket, buckets ascending.
inline std::vector<DatedValue> resample_last(std::vector<DatedValue> series, Periodicity p) {
  std::stable_sort(series.begin(), series.end(), [](const DatedValue& a, const DatedValue& b) { return a.date < b.date; });
  std::map<Date, double> last;
  for (const auto& o : series) last[bucket_start(o.date, p)] = o.value;
  std::vector<DatedValue> out;
  for (const auto& [d, v] : last) out.push_back({d, v});
  return out;
}

inline std::vector<DatedValue> index_values(const IndexSeries& s) {
  std::vector<DatedValue> out;
  for (const auto& p : s.points)
    if (p.value) out.push_back({p.bucket_start, *p.value});
  return out;
}

struct AlignedSeries {
  std::vector<Date> dates;
  std::vector<double> a;
  std::vector<double> b;
  std::size_t size() const { return dates.size(); }
};

/// Inner join on identical dates.
inline AlignedSeries align_series(const std::vector<DatedValue>& a, const std::vector<DatedValue>& b) {
  std::map<Date, double> right;
  for (const auto& o : b) right[o.date] = o.value;
  std::map<Date, double> left;
  for (const auto& o : a) left[o.date] = o.value;
  AlignedSeries out;
  for (const auto& [d, v] : left) {
    if (auto it = right.find(d); it != right.end()) {
      out.dates.push_back(d);
      out.a.push_back(v);
      out.b.push_back(it->second);
    }
  }
  if (out.dates.empty()) throw DataError("align_series: the two series share no dates");
  return out;
}

/// Index buckets with a value, joined with the market resampled to the same periodicity.
inline AlignedSeries align_series(const IndexSeries& index, const std::vector<DatedValue>& market) {
  return align_series(index_values(index), resample_last(market, index.periodicity));
}

// ---------------------------------------------------------------------------
// CSV

inline void write_index_csv(std::ostream& out, const IndexSeries& s) {
  csv::write_row(out, {"bucket_start", "n_reg", "n_all", "crrix"});
  for (const auto& p : s.points)
    csv::write_row(out, {p.bucket_start.str(), std::to_string(p.n_reg), std::to_string(p.n_all),
                         p.value ? csv::format_double(*p.value) : std::string()});
}

inline IndexSeries read_index_csv(std::istream& in, Periodicity periodicity) {
  const auto rows = csv::read(in);
  if (rows.empty() || rows[0] != std::vector<std::string>{"bucket_start", "n_reg", "n_all", "crrix"})
    throw DataError("index csv: expected header bucket_start,n_reg,n_all,crrix");
  IndexSeries s;
  s.periodicity = periodicity;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw DataError("index csv: row " + std::to_string(i + 1) + " has " + std::to_string(r.size()) + " fields");
    IndexPoint p;
    const auto d = Date::parse(r[0]);
    if (!d) throw DataError("index csv: bad date '" + r[0] + "'");
    p.bucket_start = *d;
    p.n_reg = static_cast<std::size_t>(csv::parse_double(r[1], "n_reg"));
    p.n_all = static_cast<std::size_t>(csv::parse_double(r[2], "n_all"));
    if (!r[3].empty()) p.value = csv::parse_double(r[3], "crrix");
    if (!s.points.empty() && !(s.points.back().bucket_start < p.bucket_start))
      throw DataError("index csv: buckets not strictly increasing");
    s.points.push_back(p);
  }
  return s;
}

/// `date,value` with a header row; rows with an empty value are skipped.
inline std::vector<DatedValue> read_market_csv(std::istream& in) {
  const auto rows = csv::read(in);
  if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "date" || rows[0][1] != "value")
    throw DataError("market csv: expected header date,value");
  std::vector<DatedValue> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 2) throw DataError("market csv: row " + std::to_string(i + 1) + " needs 2 fields");
    const auto d = Date::parse(r[0]);
    if (!d) throw DataError("market csv: bad date '" + r[0] + "'");
    if (r[1].empty()) continue;
    out.push_back({*d, csv::parse_double(r[1], "value")});
  }
  return out;
}

inline std::vector<DatedValue> read_market_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open market series '" + path + "'");
  return read_market_csv(in);
}

}  // namespace crrix
