#pragma once

// Batch simulation of campaigns bidding into a synthetic full-information
// market: request, bid, auction, win notice and click feedback, slot by slot.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtb/bidding.hpp"
#include "rtb/pacing.hpp"
#include "rtb/random.hpp"

namespace rtb::sim {

struct MarketSpec {
  std::int64_t volume = 20000;          // bid requests
  std::int64_t price_upper = 100000;    // market prices uniform on [0, upper] ticks
  double ctr_beta = 9.0;                // CTR ~ Beta(1, ctr_beta)
  AuctionPricing pricing = AuctionPricing::first_price;
  int slots = 24;

  void validate() const {
    if (volume < 1) throw Error("market.volume must be at least 1");
    if (price_upper < 1) throw Error("market.price_upper must be at least 1");
    if (!(ctr_beta > 0.0) || !std::isfinite(ctr_beta)) throw Error("market.ctr_beta must be positive");
    if (slots < 1 || slots > volume) throw Error("market.slots must be in [1, volume]");
  }
};

/// Requests with CTR drawn from Beta(1, b) by inversion, an integer market
/// price and a Bernoulli click outcome.
inline std::vector<ReplayImpression> generate_market(const MarketSpec& m, std::uint64_t seed) {
  m.validate();
  Rng rng(seed);
  std::vector<ReplayImpression> logs;
  logs.reserve(static_cast<std::size_t>(m.volume));
  for (std::int64_t i = 0; i < m.volume; ++i) {
    const double ctr = 1.0 - std::pow(1.0 - rng.uniform(), 1.0 / m.ctr_beta);
    const auto z = Price::from_ticks(static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(m.price_upper) + 1)));
    const bool click = rng.bernoulli(ctr);
    logs.push_back({ctr, z, click});
  }
  return logs;
}

/// Equal consecutive slots; the remainder goes to the last slot.
inline std::vector<std::vector<ReplayImpression>> into_slots(std::span<const ReplayImpression> logs, int slots) {
  if (slots < 1 || static_cast<std::size_t>(slots) > logs.size()) throw Error("into_slots: bad slot count");
  const std::size_t per = logs.size() / static_cast<std::size_t>(slots);
  std::vector<std::vector<ReplayImpression>> out(static_cast<std::size_t>(slots));
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto begin = logs.begin() + static_cast<std::ptrdiff_t>(t * per);
    const auto end = t + 1 == out.size() ? logs.end() : begin + static_cast<std::ptrdiff_t>(per);
    out[t].assign(begin, end);
  }
  return out;
}

/// Parameter in [lo, hi] at which unguarded replay spend first reaches the
/// budget, assuming spend grows with the parameter.
template <class MakeStrategy>
double calibrate_to_budget(std::span<const ReplayImpression> logs, MakeStrategy make, Price budget, double lo,
                           double hi, AuctionPricing pricing) {
  ReplayOptions opt;
  opt.pricing = pricing;
  opt.budget_guard = false;
  for (int it = 0; it < 100; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (replay(logs, make(mid), opt).spend < budget)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

enum class StrategyKind { truthful, linear, ortb1, ortb2, ortb_uniform_fp };

inline const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::truthful: return "truthful";
    case StrategyKind::linear: return "linear";
    case StrategyKind::ortb1: return "ortb1";
    case StrategyKind::ortb2: return "ortb2";
    case StrategyKind::ortb_uniform_fp: return "ortb_uniform_fp";
  }
  return "?";
}

enum class PacingMode { none, throttle };

struct CampaignSpec {
  std::string id;
  Price budget;
  Price value;  // per click
  StrategyKind strategy = StrategyKind::truthful;
  Kpi kpi = Kpi::profit;
  /// phi for linear, lambda for the ORTB kinds; calibrated to the budget
  /// when absent.
  std::optional<double> parameter;
  /// Win-curve scale for ortb1 and ortb_uniform_fp; defaults to the market's
  /// price upper bound.
  std::optional<double> landscape_scale;
  PacingMode pacing = PacingMode::none;
  double initial_rate = 0.1;
};

struct SimulationConfig {
  std::uint64_t seed = 0;
  MarketSpec market;
  std::vector<CampaignSpec> campaigns;
};

struct CampaignReport {
  std::string id;
  std::string strategy;
  double parameter = 0.0;
  Price budget;
  PacedReplay replay;
  MetricsReport metrics;
};

struct SimulationReport {
  std::uint64_t seed = 0;
  std::int64_t requests = 0;
  std::vector<CampaignReport> campaigns;
};

inline BiddingStrategy make_strategy(const CampaignSpec& c, const MarketSpec& m, double parameter) {
  const UtilitySpec u = c.kpi == Kpi::clicks ? UtilitySpec::clicks() : UtilitySpec::profit(c.value.as_double());
  const double l = c.landscape_scale.value_or(static_cast<double>(m.price_upper));
  switch (c.strategy) {
    case StrategyKind::truthful: return BiddingStrategy::truthful(c.value);
    case StrategyKind::linear: return BiddingStrategy::linear(parameter, c.value);
    case StrategyKind::ortb1: return BiddingStrategy::ortb1(parameter, l, u);
    case StrategyKind::ortb2: return BiddingStrategy::ortb2(parameter, u);
    case StrategyKind::ortb_uniform_fp: return BiddingStrategy::ortb_uniform_fp(parameter, l, u);
  }
  throw Error("unknown strategy");
}

/// Bid parameter for the campaign: the configured one, or the value whose
/// replay spend just reaches the budget.
inline double resolve_parameter(const CampaignSpec& c, const MarketSpec& m, std::span<const ReplayImpression> logs) {
  if (c.parameter) return *c.parameter;
  switch (c.strategy) {
    case StrategyKind::truthful: return 1.0;
    case StrategyKind::linear:
      if (c.budget.ticks() == 0) return 0.0;
      return calibrate_to_budget(
          logs, [&](double x) { return make_strategy(c, m, x); }, c.budget, 1e-6, 1e3, m.pricing);
    case StrategyKind::ortb1:
    case StrategyKind::ortb2:
    case StrategyKind::ortb_uniform_fp: {
      if (c.budget.ticks() == 0) return 1e12;
      const double inv = calibrate_to_budget(
          logs, [&](double x) { return make_strategy(c, m, 1.0 / x); }, c.budget, 1e-9, 1e9, m.pricing);
      return 1.0 / inv;
    }
  }
  throw Error("unknown strategy");
}

inline MetricsReport metrics_of(const PacedReplay& r) {
  MetricsReport m;
  for (const auto& s : r.slots) {
    m.auctions += s.requests;
    m.impressions += s.wins;
    m.clicks += s.clicks;
    m.spend += s.spend;
  }
  m.derive_ratios();
  return m;
}

/// Every campaign replays the same request stream on its own, with the
/// budget guard on and, if configured, slot-level throttling.
inline SimulationReport simulate(const SimulationConfig& cfg) {
  cfg.market.validate();
  if (cfg.campaigns.empty()) throw Error("no campaigns configured");
  const auto logs = generate_market(cfg.market, cfg.seed);
  const auto slots = into_slots(logs, cfg.market.slots);
  SimulationReport out;
  out.seed = cfg.seed;
  out.requests = static_cast<std::int64_t>(logs.size());
  for (std::size_t i = 0; i < cfg.campaigns.size(); ++i) {
    const auto& c = cfg.campaigns[i];
    if (c.budget.ticks() < 0) throw Error("campaign " + c.id + ": negative budget");
    const double parameter = resolve_parameter(c, cfg.market, logs);
    const auto strategy = make_strategy(c, cfg.market, parameter);
    ThrottleOptions opt;
    opt.enabled = c.pacing == PacingMode::throttle;
    opt.initial_rate = c.initial_rate;
    opt.pricing = cfg.market.pricing;
    Rng rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
    auto replayed = throttled_replay(
        slots, [&](const ReplayImpression& imp) { return strategy.bid(imp.ctr); },
        SlotPlan::even(c.budget, cfg.market.slots), opt, rng);
    CampaignReport rep{c.id, strategy_name(c.strategy), parameter, c.budget, std::move(replayed), {}};
    rep.metrics = metrics_of(rep.replay);
    out.campaigns.push_back(std::move(rep));
  }
  return out;
}

/// The bundled ordering market: three campaigns with the same budget and
/// click value in a first-price market.
inline SimulationConfig bundled_synthetic(std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.seed = seed;
  const Price budget = Price::from_ticks(600'000'000);
  const Price value = Price::from_ticks(5'000'000);
  cfg.campaigns = {
      {"ortb", budget, value, StrategyKind::ortb_uniform_fp, Kpi::profit, std::nullopt, std::nullopt, PacingMode::none, 0.1},
      {"linear", budget, value, StrategyKind::linear, Kpi::profit, std::nullopt, std::nullopt, PacingMode::none, 0.1},
      {"truthful", budget, value, StrategyKind::truthful, Kpi::profit, std::nullopt, std::nullopt, PacingMode::none, 0.1},
  };
  return cfg;
}

}  // namespace rtb::sim
