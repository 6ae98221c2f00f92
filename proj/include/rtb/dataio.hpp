#pragma once

// Canonical bid log TSV, feature encoding, dataset splits and an adapter for
// iPinYou-style impression logs.
//
// Canonical columns, tab separated, prices in integer ticks:
//   1 timestamp_ms  2 auction_id  3 campaign_id  4 bid  5 won
//   6 market_price  7 click  8 conversion  9 features
// Columns 6-8 are empty when won is 0; 7 and 8 may also be empty on a win.
// Features are space-separated field:value tokens. Extra trailing columns
// are carried through untouched.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtb/core.hpp"

namespace rtb {

inline constexpr const char* kLogHeader = "#rtb-log v1";
inline constexpr std::size_t kCanonicalColumns = 9;

struct CanonicalLogLine {
  std::int64_t timestamp_ms = 0;
  std::string auction_id;
  std::string campaign_id;
  Price bid;
  bool won = false;
  std::optional<Price> market_price;
  std::optional<int> click;
  std::optional<int> conversion;
  std::vector<std::string> features;
  std::vector<std::string> extra;

  friend bool operator==(const CanonicalLogLine&, const CanonicalLogLine&) = default;
};

struct ParseError {
  std::size_t line = 0;    // 1-based, 0 when parsing a lone line
  std::size_t column = 0;  // 1-based, 0 for whole-line problems
  std::string message;

  [[nodiscard]] std::string describe() const {
    std::string s;
    if (line) s += "line " + std::to_string(line) + ", ";
    if (column) s += "column " + std::to_string(column) + ": ";
    return s + message;
  }
};

struct ParsedLine {
  std::optional<CanonicalLogLine> record;
  std::optional<ParseError> error;
  [[nodiscard]] bool ok() const { return record.has_value(); }
};

namespace dataio_detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = 0;
  const bool neg = s[0] == '-';
  if (neg) i = 1;
  if (i == s.size()) return std::nullopt;
  std::uint64_t v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    if (v > (std::uint64_t{1} << 62)) return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(s[i] - '0');
  }
  // Reject non-canonical spellings so that text round-trips exactly.
  if ((s.size() > (neg ? 2u : 1u) && s[neg ? 1 : 0] == '0') || (neg && v == 0)) return std::nullopt;
  return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
}

inline std::optional<int> parse_flag(std::string_view s) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  return std::nullopt;
}

inline bool valid_token(std::string_view t) {
  const auto colon = t.find(':');
  if (colon == 0 || colon == std::string_view::npos) return false;
  return std::none_of(t.begin(), t.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

}  // namespace dataio_detail

inline ParsedLine parse_line(std::string_view line) {
  using namespace dataio_detail;
  auto fail = [](std::size_t col, std::string msg) { return ParsedLine{std::nullopt, ParseError{0, col, std::move(msg)}}; };
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto cols = split(line, '\t');
  if (cols.size() < kCanonicalColumns)
    return fail(0, "expected at least 9 tab-separated columns, got " + std::to_string(cols.size()));

  CanonicalLogLine r;
  const auto ts = parse_int(cols[0]);
  if (!ts || *ts < 0) return fail(1, "timestamp must be a non-negative integer");
  r.timestamp_ms = *ts;
  if (cols[1].empty()) return fail(2, "auction id is empty");
  r.auction_id = std::string(cols[1]);
  if (cols[2].empty()) return fail(3, "campaign id is empty");
  r.campaign_id = std::string(cols[2]);
  const auto bid = parse_int(cols[3]);
  if (!bid || *bid < 0) return fail(4, "bid must be a non-negative integer tick count");
  r.bid = Price::from_ticks(*bid);
  const auto won = parse_flag(cols[4]);
  if (!won) return fail(5, "won must be 0 or 1");
  r.won = *won == 1;

  if (!r.won) {
    for (std::size_t c = 5; c < 8; ++c)
      if (!cols[c].empty()) return fail(c + 1, "must be empty on a lost auction");
  } else {
    const auto mp = parse_int(cols[5]);
    if (!mp || *mp < 0) return fail(6, "market price must be a non-negative integer tick count on a win");
    if (*mp > *bid) return fail(6, "market price above bid");
    r.market_price = Price::from_ticks(*mp);
    if (!cols[6].empty()) {
      r.click = parse_flag(cols[6]);
      if (!r.click) return fail(7, "click must be 0, 1 or empty");
    }
    if (!cols[7].empty()) {
      r.conversion = parse_flag(cols[7]);
      if (!r.conversion) return fail(8, "conversion must be 0, 1 or empty");
    }
  }

  if (cols[8].empty()) return fail(9, "no feature tokens");
  for (auto tok : split(cols[8], ' ')) {
    if (!valid_token(tok)) return fail(9, "bad feature token '" + std::string(tok) + "'");
    r.features.emplace_back(tok);
  }
  for (std::size_t c = kCanonicalColumns; c < cols.size(); ++c) r.extra.emplace_back(cols[c]);
  return {std::move(r), std::nullopt};
}

inline std::string serialize(const CanonicalLogLine& r) {
  std::string s = std::to_string(r.timestamp_ms);
  auto col = [&s](const std::string& v) {
    s += '\t';
    s += v;
  };
  col(r.auction_id);
  col(r.campaign_id);
  col(std::to_string(r.bid.ticks()));
  col(r.won ? "1" : "0");
  col(r.market_price ? std::to_string(r.market_price->ticks()) : "");
  col(r.click ? std::to_string(*r.click) : "");
  col(r.conversion ? std::to_string(*r.conversion) : "");
  std::string feats;
  for (std::size_t k = 0; k < r.features.size(); ++k) {
    if (k) feats += ' ';
    feats += r.features[k];
  }
  col(feats);
  for (const auto& e : r.extra) col(e);
  return s;
}

inline BidLogRecord to_bid_log(const CanonicalLogLine& r) {
  if (!r.won) return BidLogRecord::loss(r.bid);
  return BidLogRecord::win(r.bid, *r.market_price, r.click);
}

struct LogReadResult {
  std::vector<CanonicalLogLine> records;
  std::vector<ParseError> errors;
};

/// Parses every line, collecting errors instead of stopping. Blank lines
/// and lines starting with '#' are skipped.
inline LogReadResult read_log(std::istream& in) {
  LogReadResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    auto parsed = parse_line(line);
    if (parsed.ok()) {
      out.records.push_back(std::move(*parsed.record));
    } else {
      parsed.error->line = lineno;
      out.errors.push_back(std::move(*parsed.error));
    }
  }
  return out;
}

inline void write_log(std::ostream& os, std::span<const CanonicalLogLine> records) {
  os << kLogHeader << '\n';
  for (const auto& r : records) os << serialize(r) << '\n';
}

// ---------------------------------------------------------------------------
// Feature encoding

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Field part of a field:value token.
inline std::string_view token_field(std::string_view token) {
  const auto colon = token.find(':');
  if (colon == 0 || colon == std::string_view::npos) throw Error("feature token must look like field:value");
  return token.substr(0, colon);
}

/// Field:value vocabulary with one out-of-vocabulary slot per field. Built
/// once, immutable afterwards.
class Dictionary {
 public:
  static Dictionary build(std::span<const std::vector<std::string>> rows) {
    std::map<std::string, std::vector<std::string>, std::less<>> by_field;
    for (const auto& row : rows)
      for (const auto& t : row) by_field[std::string(token_field(t))].push_back(t);
    Dictionary d;
    for (auto& [field, toks] : by_field) {
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      d.oov_.emplace(field, static_cast<std::uint32_t>(d.dimension_++));
      for (const auto& t : toks) d.index_.emplace(t, static_cast<std::uint32_t>(d.dimension_++));
    }
    return d;
  }

  /// Rebuilds a dictionary from entries(); the out-of-vocabulary slot of a
  /// field is written as field:<oov>.
  static Dictionary from_entries(std::span<const std::pair<std::string, std::uint32_t>> entries) {
    Dictionary d;
    std::vector<bool> used(entries.size(), false);
    for (const auto& [tok, idx] : entries) {
      if (idx >= entries.size() || used[idx]) throw Error("Dictionary: indices must be a permutation of 0..n-1");
      used[idx] = true;
      const auto field = token_field(tok);
      if (tok.substr(field.size() + 1) == "<oov>")
        d.oov_.emplace(std::string(field), idx);
      else
        d.index_.emplace(tok, idx);
    }
    d.dimension_ = entries.size();
    return d;
  }

  /// Index of the token, the field's out-of-vocabulary slot, or nothing for
  /// a field never seen in training.
  [[nodiscard]] std::optional<std::uint32_t> lookup(std::string_view token) const {
    if (auto it = index_.find(token); it != index_.end()) return it->second;
    if (auto it = oov_.find(token_field(token)); it != oov_.end()) return it->second;
    return std::nullopt;
  }

  [[nodiscard]] std::size_t dimension() const { return dimension_; }
  [[nodiscard]] std::size_t vocabulary() const { return index_.size(); }

  [[nodiscard]] std::vector<std::pair<std::string, std::uint32_t>> entries() const {
    std::vector<std::pair<std::string, std::uint32_t>> out(index_.begin(), index_.end());
    for (const auto& [f, i] : oov_) out.emplace_back(f + ":<oov>", i);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    return out;
  }

 private:
  std::map<std::string, std::uint32_t, std::less<>> index_;
  std::map<std::string, std::uint32_t, std::less<>> oov_;
  std::size_t dimension_ = 0;
};

enum class EncoderMode { exact_onehot, hashed };

struct EncoderConfig {
  EncoderMode mode = EncoderMode::hashed;
  int bits = 20;
  const Dictionary* dictionary = nullptr;  // exact_onehot only

  static EncoderConfig hashed_bits(int b) { return {EncoderMode::hashed, b, nullptr}; }
  static EncoderConfig exact(const Dictionary& d) { return {EncoderMode::exact_onehot, 0, &d}; }

  [[nodiscard]] std::size_t dimension() const {
    validate();
    return mode == EncoderMode::hashed ? std::size_t{1} << bits : dictionary->dimension();
  }
  void validate() const {
    if (mode == EncoderMode::hashed && (bits < 16 || bits > 28)) throw Error("EncoderConfig: hash bits must be in [16, 28]");
    if (mode == EncoderMode::exact_onehot && dictionary == nullptr) throw Error("EncoderConfig: exact mode needs a dictionary");
  }
};

inline FeatureVector encode(std::span<const std::string> tokens, const EncoderConfig& cfg) {
  const auto dim = cfg.dimension();
  std::vector<std::uint32_t> idx;
  idx.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (cfg.mode == EncoderMode::hashed) {
      token_field(t);
      idx.push_back(static_cast<std::uint32_t>(fnv1a64(t) & (dim - 1)));
    } else if (auto i = cfg.dictionary->lookup(t)) {
      idx.push_back(*i);
    }
  }
  return FeatureVector::from_unsorted(std::move(idx), dim);
}

// ---------------------------------------------------------------------------
// Splits

template <class T>
struct Split {
  std::vector<T> train;
  std::vector<T> test;
};

/// The earliest `fraction` of records (stable on ties) go to training.
inline Split<CanonicalLogLine> split_by_time(std::vector<CanonicalLogLine> records, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("split_by_time: fraction must be in [0, 1]");
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
  const auto cut = static_cast<std::size_t>(fraction * static_cast<double>(records.size()));
  Split<CanonicalLogLine> s;
  s.train.assign(std::make_move_iterator(records.begin()), std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(cut)));
  s.test.assign(std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(cut)), std::make_move_iterator(records.end()));
  return s;
}

/// Assigns each record by a hash of its auction id, so the same auction
/// always lands on the same side.
inline Split<CanonicalLogLine> split_by_hash(std::vector<CanonicalLogLine> records, double fraction,
                                             std::string_view salt = "") {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("split_by_hash: fraction must be in [0, 1]");
  constexpr std::uint64_t kBuckets = 1'000'000;
  const auto cut = static_cast<std::uint64_t>(fraction * static_cast<double>(kBuckets));
  Split<CanonicalLogLine> s;
  for (auto& r : records) {
    const auto bucket = fnv1a64(std::string(salt) + r.auction_id) % kBuckets;
    (bucket < cut ? s.train : s.test).push_back(std::move(r));
  }
  return s;
}

// ---------------------------------------------------------------------------
// iPinYou adapter
//
// Targets the season 2/3 training log layout with a header row naming the
// columns. Every row is a won impression; prices are integer CPM units.

inline const std::vector<std::string>& ipinyou_required_columns() {
  static const std::vector<std::string> cols{
      "click",     "weekday",   "hour",      "bidid",          "timestamp",  "logtype",   "ipinyouid",
      "useragent", "IP",        "region",    "city",           "adexchange", "domain",    "url",
      "urlid",     "slotid",    "slotwidth", "slotheight",     "slotvisibility", "slotformat", "slotprice",
      "creative",  "bidprice",  "payprice",  "keypage",        "advertiser", "usertag"};
  return cols;
}

/// Milliseconds since the Unix epoch for a UTC yyyyMMddHHmmssSSS stamp.
inline std::optional<std::int64_t> ipinyou_timestamp_ms(std::string_view s) {
  if (s.size() != 17 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) {
    std::int64_t v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (s[i] - '0');
    return v;
  };
  std::int64_t y = num(0, 4);
  const std::int64_t m = num(4, 2);
  const std::int64_t d = num(6, 2);
  const std::int64_t hh = num(8, 2), mm = num(10, 2), ss = num(12, 2), ms = num(14, 3);
  if (m < 1 || m > 12 || d < 1 || d > 31 || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  // Days from civil date, proleptic Gregorian calendar.
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const std::int64_t days = era * 146097 + doe - 719468;
  return ((days * 24 + hh) * 60 + mm) * 60'000 + ss * 1000 + ms;
}

inline LogReadResult read_ipinyou(std::istream& in) {
  LogReadResult out;
  std::string line;
  if (!std::getline(in, line)) throw Error("ipinyou: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::map<std::string, std::size_t, std::less<>> at;
  const auto header = dataio_detail::split(line, '\t');
  for (std::size_t i = 0; i < header.size(); ++i) at.emplace(std::string(header[i]), i);
  std::vector<std::string> missing;
  for (const auto& c : ipinyou_required_columns())
    if (!at.contains(c)) missing.push_back(c);
  if (!missing.empty()) {
    std::string m;
    for (const auto& c : missing) m += (m.empty() ? "" : ", ") + c;
    throw Error("ipinyou: unsupported layout, missing columns: " + m);
  }
  const auto conversion_col = at.find("conversion");

  static const std::vector<std::string> feature_fields{"weekday",    "hour",      "region",     "city",
                                                       "adexchange", "domain",    "slotid",     "slotwidth",
                                                       "slotheight", "slotvisibility", "slotformat", "creative",
                                                       "useragent"};
  auto clean = [](std::string_view v) {
    std::string s(v);
    for (char& c : s)
      if (c == ' ' || c == '\t' || c == ':') c = '_';
    return s;
  };

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = dataio_detail::split(line, '\t');
    auto fail = [&](const std::string& col, std::string msg) {
      out.errors.push_back({lineno, at.count(col) ? at.at(col) + 1 : 0, std::move(msg)});
    };
    if (cols.size() != header.size()) {
      out.errors.push_back({lineno, 0, "expected " + std::to_string(header.size()) + " columns"});
      continue;
    }
    auto col = [&](const std::string& name) { return cols[at.at(name)]; };

    CanonicalLogLine r;
    const auto ts = ipinyou_timestamp_ms(col("timestamp"));
    if (!ts) {
      fail("timestamp", "bad timestamp");
      continue;
    }
    r.timestamp_ms = *ts;
    r.auction_id = std::string(col("bidid"));
    r.campaign_id = std::string(col("advertiser"));
    const auto bid = dataio_detail::parse_int(col("bidprice"));
    const auto pay = dataio_detail::parse_int(col("payprice"));
    if (!bid || *bid < 0) {
      fail("bidprice", "bad bid price");
      continue;
    }
    if (!pay || *pay < 0 || *pay > *bid) {
      fail("payprice", "bad paying price");
      continue;
    }
    if (r.auction_id.empty() || r.campaign_id.empty()) {
      fail("bidid", "empty id");
      continue;
    }
    r.bid = Price::from_cpm(static_cast<double>(*bid));
    r.won = true;
    r.market_price = Price::from_cpm(static_cast<double>(*pay));
    r.click = dataio_detail::parse_flag(col("click"));
    if (!r.click) {
      fail("click", "click must be 0 or 1");
      continue;
    }
    if (conversion_col != at.end() && !cols[conversion_col->second].empty()) {
      r.conversion = dataio_detail::parse_flag(cols[conversion_col->second]);
      if (!r.conversion) {
        fail("conversion", "conversion must be 0 or 1");
        continue;
      }
    }
    for (const auto& f : feature_fields) {
      const auto v = col(f);
      r.features.push_back(f + ":" + (v.empty() ? std::string("null") : clean(v)));
    }
    for (auto tag : dataio_detail::split(col("usertag"), ','))
      if (!tag.empty() && tag != "null") r.features.push_back("usertag:" + clean(tag));
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace rtb
