#pragma once

// Shared domain types: integer prices, sparse one-hot features, bid logs,
// campaign descriptors and the auction metrics report.

#include <algorithm>
#include <compare>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of ticks in one unit of currency. One tick is one micro-unit of
/// currency paid for a single impression.
inline constexpr std::int64_t kTicksPerUnit = 1'000'000;

/// Non-negative integer price in ticks. Arithmetic is overflow-checked and
/// subtraction below zero throws.
class Price {
 public:
  constexpr Price() = default;

  static constexpr Price from_ticks(std::int64_t ticks) {
    if (ticks < 0) throw Error("Price: negative tick count");
    Price p;
    p.ticks_ = ticks;
    return p;
  }

  /// Converts a per-impression currency amount, rounding to the nearest tick.
  static Price from_currency(double units) {
    if (!(units >= 0.0) || !std::isfinite(units)) throw Error("Price: invalid currency amount");
    const double t = std::round(units * static_cast<double>(kTicksPerUnit));
    if (t > static_cast<double>(std::numeric_limits<std::int64_t>::max() / 2))
      throw Error("Price: currency amount out of range");
    return from_ticks(static_cast<std::int64_t>(t));
  }

  /// CPM quotes are per thousand impressions.
  static Price from_cpm(double cpm) { return from_currency(cpm / 1000.0); }

  /// Floors a non-negative real tick amount. Values within 1e-9 of the next
  /// integer snap up so that products like 1000 * 0.002 land on 2.
  static Price floor_ticks(double ticks) {
    if (std::isnan(ticks)) throw Error("Price: NaN tick amount");
    if (ticks <= 0.0) return Price{};
    if (ticks >= 9.0e18) throw Error("Price: tick amount out of range");
    return from_ticks(static_cast<std::int64_t>(std::floor(ticks + 1e-9)));
  }

  [[nodiscard]] constexpr std::int64_t ticks() const { return ticks_; }
  [[nodiscard]] double to_currency() const {
    return static_cast<double>(ticks_) / static_cast<double>(kTicksPerUnit);
  }
  [[nodiscard]] double to_cpm() const { return to_currency() * 1000.0; }
  [[nodiscard]] double as_double() const { return static_cast<double>(ticks_); }

  friend constexpr auto operator<=>(const Price&, const Price&) = default;

  friend Price operator+(Price a, Price b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a.ticks_, b.ticks_, &out)) throw Error("Price: addition overflow");
    return from_ticks(out);
  }
  friend Price operator-(Price a, Price b) {
    if (b.ticks_ > a.ticks_) throw Error("Price: subtraction below zero");
    return from_ticks(a.ticks_ - b.ticks_);
  }
  friend Price operator*(Price a, std::int64_t k) {
    std::int64_t out = 0;
    if (k < 0 || __builtin_mul_overflow(a.ticks_, k, &out)) throw Error("Price: multiplication overflow");
    return from_ticks(out);
  }
  Price& operator+=(Price b) { return *this = *this + b; }
  Price& operator-=(Price b) { return *this = *this - b; }

 private:
  std::int64_t ticks_ = 0;
};

/// Binary one-hot feature vector stored as its sorted active dimensions.
class FeatureVector {
 public:
  FeatureVector() = default;

  FeatureVector(std::vector<std::uint32_t> indices, std::size_t dimension)
      : indices_(std::move(indices)), dimension_(dimension) {
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (indices_[i] >= dimension_) throw Error("FeatureVector: index out of range");
      if (i > 0 && indices_[i] <= indices_[i - 1])
        throw Error("FeatureVector: indices must be strictly increasing");
    }
  }

  /// Sorts and de-duplicates before validating.
  static FeatureVector from_unsorted(std::vector<std::uint32_t> indices, std::size_t dimension) {
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    return FeatureVector(std::move(indices), dimension);
  }

  [[nodiscard]] std::span<const std::uint32_t> indices() const { return indices_; }
  [[nodiscard]] std::size_t dimension() const { return dimension_; }
  [[nodiscard]] std::size_t size() const { return indices_.size(); }
  [[nodiscard]] bool empty() const { return indices_.empty(); }
  [[nodiscard]] bool contains(std::uint32_t index) const {
    return std::binary_search(indices_.begin(), indices_.end(), index);
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<std::uint32_t> indices_;
  std::size_t dimension_ = 0;
};

struct BidRequest {
  std::uint64_t id = 0;
  std::int64_t timestamp_ms = 0;
  FeatureVector features;
  double true_ctr = 0.0;  // simulation only

  void validate() const {
    if (!(true_ctr >= 0.0 && true_ctr <= 1.0)) throw Error("BidRequest: true_ctr outside [0,1]");
  }
};

enum class Kpi { clicks, profit };

struct Campaign {
  std::string id;
  Price budget;
  std::int64_t volume = 0;
  Price click_value;
  Kpi kpi = Kpi::clicks;
  std::int64_t t_start = 0;
  std::int64_t t_end = 1;

  void validate() const {
    if (budget.ticks() <= 0) throw Error("Campaign " + id + ": budget must be positive");
    if (volume <= 0) throw Error("Campaign " + id + ": volume must be positive");
    if (t_start >= t_end) throw Error("Campaign " + id + ": lifetime must satisfy t_start < t_end");
  }
};

/// One <bid, won, market price> observation. The market price and the label
/// exist only for won auctions.
class BidLogRecord {
 public:
  static BidLogRecord win(Price bid, Price market_price, std::optional<int> label = std::nullopt) {
    if (market_price > bid) throw Error("BidLogRecord: market price above bid on a win");
    if (label && *label != 0 && *label != 1) throw Error("BidLogRecord: label must be 0 or 1");
    BidLogRecord r;
    r.bid_ = bid;
    r.won_ = true;
    r.market_price_ = market_price;
    r.label_ = label;
    return r;
  }
  static BidLogRecord loss(Price bid) {
    BidLogRecord r;
    r.bid_ = bid;
    return r;
  }

  [[nodiscard]] Price bid() const { return bid_; }
  [[nodiscard]] bool won() const { return won_; }
  [[nodiscard]] std::optional<Price> market_price() const { return market_price_; }
  [[nodiscard]] std::optional<int> label() const { return label_; }

  friend bool operator==(const BidLogRecord&, const BidLogRecord&) = default;

 private:
  Price bid_;
  bool won_ = false;
  std::optional<Price> market_price_;
  std::optional<int> label_;
};

/// Per-auction result consumed by compute_metrics.
struct AuctionResult {
  bool won = false;
  bool clicked = false;
  bool converted = false;
  Price cost;
};

struct MetricsReport {
  std::int64_t auctions = 0;
  std::int64_t impressions = 0;
  std::int64_t clicks = 0;
  std::int64_t conversions = 0;
  Price spend;

  // Ratios, all in ticks where a price is involved.
  double awr = 0.0;
  double ctr = 0.0;
  std::optional<double> ecpc;
  std::optional<double> ecpm;

  /// Recomputes every ratio from the raw counts.
  void derive_ratios() {
    awr = auctions > 0 ? static_cast<double>(impressions) / static_cast<double>(auctions) : 0.0;
    ctr = impressions > 0 ? static_cast<double>(clicks) / static_cast<double>(impressions) : 0.0;
    ecpc = clicks > 0 ? std::optional<double>(spend.as_double() / static_cast<double>(clicks))
                      : std::nullopt;
    ecpm = impressions > 0
               ? std::optional<double>(spend.as_double() * 1000.0 / static_cast<double>(impressions))
               : std::nullopt;
  }

  void add(const AuctionResult& r) {
    ++auctions;
    if (!r.won) return;
    ++impressions;
    clicks += r.clicked ? 1 : 0;
    conversions += r.converted ? 1 : 0;
    spend += r.cost;
  }
};

inline MetricsReport compute_metrics(std::span<const AuctionResult> outcomes) {
  MetricsReport m;
  for (const auto& r : outcomes) m.add(r);
  m.derive_ratios();
  return m;
}

}  // namespace rtb
