#pragma once

// Single-tier auction engine with hard/soft floors, plus a synthetic market of
// i.i.d. opponents used both by the simulator and by the profit oracle.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/random.hpp"

namespace rtb {

using BidderId = std::string;

struct Bid {
  BidderId bidder;
  Price price;

  friend bool operator==(const Bid&, const Bid&) = default;
};

struct FloorPolicy {
  Price hard_floor;
  std::optional<Price> soft_floor;

  void validate() const {
    if (soft_floor && *soft_floor < hard_floor) throw Error("FloorPolicy: soft floor below hard floor");
  }
};

struct AuctionOutcome {
  std::optional<BidderId> winner;
  std::optional<Price> paying_price;
  std::optional<Price> second_bid;
  std::vector<Bid> all_bids;  // descending by price, ascending id on ties

  [[nodiscard]] bool sold() const { return winner.has_value(); }
  friend bool operator==(const AuctionOutcome&, const AuctionOutcome&) = default;
};

namespace detail {

inline std::vector<Bid> ranked(std::span<const Bid> bids) {
  std::vector<Bid> out(bids.begin(), bids.end());
  std::sort(out.begin(), out.end(), [](const Bid& a, const Bid& b) {
    if (a.price != b.price) return a.price > b.price;
    return a.bidder < b.bidder;
  });
  std::vector<BidderId> ids;
  ids.reserve(out.size());
  for (const auto& b : out) ids.push_back(b.bidder);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw Error("auction: duplicate bidder id");
  return out;
}

inline std::vector<Bid> from_map(const std::map<BidderId, Price>& bids) {
  std::vector<Bid> out;
  out.reserve(bids.size());
  for (const auto& [id, p] : bids) out.push_back({id, p});
  return out;
}

enum class Rule { first_price, second_price };

inline AuctionOutcome run(std::span<const Bid> bids, const FloorPolicy& floor, Rule rule) {
  floor.validate();
  AuctionOutcome out;
  out.all_bids = ranked(bids);
  if (out.all_bids.empty()) return out;
  const Bid& top = out.all_bids.front();
  if (top.price < floor.hard_floor) return out;

  out.winner = top.bidder;
  if (out.all_bids.size() > 1 && out.all_bids[1].price >= floor.hard_floor)
    out.second_bid = out.all_bids[1].price;

  if (rule == Rule::first_price) {
    out.paying_price = top.price;
    return out;
  }
  if (floor.soft_floor && top.price < *floor.soft_floor) {
    out.paying_price = top.price;
    return out;
  }
  Price pay = std::max(out.second_bid.value_or(Price{}), floor.hard_floor);
  if (floor.soft_floor) pay = std::max(pay, *floor.soft_floor);
  out.paying_price = std::min(pay, top.price);
  return out;
}

}  // namespace detail

/// Second-price auction. The highest bid at or above the hard floor wins and
/// pays the larger of the runner-up bid and the floor. Below a soft floor the
/// winner pays its own bid.
inline AuctionOutcome run_second_price(std::span<const Bid> bids, const FloorPolicy& floor = {}) {
  return detail::run(bids, floor, detail::Rule::second_price);
}
inline AuctionOutcome run_second_price(const std::map<BidderId, Price>& bids, const FloorPolicy& floor = {}) {
  const auto v = detail::from_map(bids);
  return run_second_price(v, floor);
}

inline AuctionOutcome run_first_price(std::span<const Bid> bids, const FloorPolicy& floor = {}) {
  return detail::run(bids, floor, detail::Rule::first_price);
}
inline AuctionOutcome run_first_price(const std::map<BidderId, Price>& bids, const FloorPolicy& floor = {}) {
  const auto v = detail::from_map(bids);
  return run_first_price(v, floor);
}

struct UniformOpponents {
  double upper;  // draws from uniform(0, upper)
};
struct LognormalOpponents {
  double mu;
  double sigma;
};
struct EmpiricalOpponents {
  std::vector<double> samples;
};

/// Market made of `opponent_count` i.i.d. competitors. The market price is the
/// highest competing bid.
struct OpponentModel {
  std::variant<UniformOpponents, LognormalOpponents, EmpiricalOpponents> distribution;
  int opponent_count = 1;

  void validate() const {
    if (opponent_count < 1) throw Error("OpponentModel: opponent_count must be positive");
    std::visit(
        [](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformOpponents>) {
            if (!(d.upper > 0.0)) throw Error("OpponentModel: uniform upper bound must be positive");
          } else if constexpr (std::is_same_v<T, LognormalOpponents>) {
            if (!(d.sigma > 0.0) || !std::isfinite(d.mu)) throw Error("OpponentModel: invalid lognormal parameters");
          } else {
            if (d.samples.empty()) throw Error("OpponentModel: empirical samples are empty");
          }
        },
        distribution);
  }

  [[nodiscard]] double draw_one(Rng& rng) const {
    return std::visit(
        [&rng](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformOpponents>) {
            return rng.uniform() * d.upper;
          } else if constexpr (std::is_same_v<T, LognormalOpponents>) {
            return std::exp(rng.gaussian(d.mu, d.sigma));
          } else {
            return d.samples[rng.uniform_int(d.samples.size())];
          }
        },
        distribution);
  }
};

/// Highest of the opponents' draws, in the distribution's own units.
inline double sample_market_value(const OpponentModel& model, Rng& rng) {
  double best = model.draw_one(rng);
  for (int i = 1; i < model.opponent_count; ++i) best = std::max(best, model.draw_one(rng));
  return best;
}

/// Market price in ticks; draws are interpreted as tick amounts and floored.
inline Price sample_market_price(const OpponentModel& model, Rng& rng) {
  model.validate();
  return Price::floor_ticks(sample_market_value(model, rng));
}

/// Monte-Carlo estimate of E[(v - z) 1{z < b}] where z is the market price.
/// Ties lose.
inline double expected_profit(double bid, double value, const OpponentModel& model, int trials, Rng& rng) {
  if (trials < 1) throw Error("expected_profit: trials must be positive");
  model.validate();
  double total = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double z = sample_market_value(model, rng);
    if (z < bid) total += value - z;
  }
  return total / trials;
}

inline double expected_profit(Price bid, Price value, const OpponentModel& model, int trials, Rng& rng) {
  return expected_profit(bid.as_double(), value.as_double(), model, trials, rng);
}

}  // namespace rtb
