#pragma once

// Budget pacing. Slot budgets come from a knapsack plan; spend is then steered
// either by throttling participation or by PID bid modification.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rtb/bidding.hpp"
#include "rtb/core.hpp"
#include "rtb/random.hpp"

namespace rtb {

struct SlotPlan {
  std::vector<Price> budgets;
  std::int64_t slot_duration_ms = 3'600'000;

  /// Splits a daily budget evenly; leftover ticks go to the earliest slots.
  static SlotPlan even(Price total, int slots = 24, std::int64_t slot_duration_ms = 3'600'000) {
    if (slots < 1) throw Error("SlotPlan: need at least one slot");
    SlotPlan p;
    p.slot_duration_ms = slot_duration_ms;
    const std::int64_t base = total.ticks() / slots;
    const std::int64_t extra = total.ticks() % slots;
    for (int i = 0; i < slots; ++i) p.budgets.push_back(Price::from_ticks(base + (i < extra ? 1 : 0)));
    return p;
  }

  [[nodiscard]] Price total() const {
    Price t;
    for (Price b : budgets) t += b;
    return t;
  }

  void validate() const {
    if (budgets.empty()) throw Error("SlotPlan: no slots");
    if (slot_duration_ms <= 0) throw Error("SlotPlan: slot duration must be positive");
  }
};

// ---------------------------------------------------------------------------
// Slot knapsack

struct SlotItem {
  double value = 0.0;
  Price cost;
};

struct SlotSelection {
  std::vector<std::vector<bool>> chosen;
  std::vector<double> slot_value;
  double total_value = 0.0;
};

inline constexpr std::int64_t kMaxKnapsackCells = 50'000'000;

/// Exact 0/1 knapsack per slot by dynamic programming over tick budgets.
inline SlotSelection plan_slots(std::span<const std::vector<SlotItem>> slots, std::span<const Price> budgets) {
  if (slots.size() != budgets.size()) throw Error("plan_slots: one budget per slot required");
  SlotSelection out;
  for (std::size_t t = 0; t < slots.size(); ++t) {
    const auto& items = slots[t];
    const std::int64_t cap = budgets[t].ticks();
    const auto n = static_cast<std::int64_t>(items.size());
    if ((cap + 1) > kMaxKnapsackCells / std::max<std::int64_t>(n, 1))
      throw Error("plan_slots: budget too large for exact planning; express costs in coarser ticks");
    for (const auto& it : items)
      if (!std::isfinite(it.value)) throw Error("plan_slots: item value must be finite");
    const auto width = static_cast<std::size_t>(cap + 1);
    std::vector<double> best(width, 0.0);
    std::vector<std::vector<bool>> take(items.size(), std::vector<bool>(width, false));
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::int64_t c = items[i].cost.ticks();
      if (items[i].value <= 0.0 || c > cap) continue;
      for (std::int64_t b = cap; b >= c; --b) {
        const double with = best[static_cast<std::size_t>(b - c)] + items[i].value;
        if (with > best[static_cast<std::size_t>(b)]) {
          best[static_cast<std::size_t>(b)] = with;
          take[i][static_cast<std::size_t>(b)] = true;
        }
      }
    }
    std::vector<bool> chosen(items.size(), false);
    std::int64_t b = cap;
    for (std::size_t i = items.size(); i-- > 0;) {
      if (take[i][static_cast<std::size_t>(b)]) {
        chosen[i] = true;
        b -= items[i].cost.ticks();
      }
    }
    out.chosen.push_back(std::move(chosen));
    out.slot_value.push_back(best[width - 1]);
    out.total_value += best[width - 1];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Throttling

struct PacingState {
  double rate = 1.0;
  Price spend;  // last slot
  std::int64_t requests = 0;
  double win_rate = 0.0;
  std::int64_t holds = 0;  // updates skipped for zero denominators
};

/// Next-slot participation probability; holds the current rate when a
/// denominator is zero.
inline double update_pacing_rate(PacingState& s, Price next_budget, double next_requests, double next_win_rate) {
  if (s.spend.ticks() == 0 || s.requests == 0 || !(s.win_rate > 0.0) || !(next_requests > 0.0) ||
      !(next_win_rate > 0.0)) {
    ++s.holds;
    return s.rate;
  }
  const double r = s.rate * (next_budget.as_double() / s.spend.as_double()) *
                   (static_cast<double>(s.requests) / next_requests) * (s.win_rate / next_win_rate);
  s.rate = std::clamp(r, 0.0, 1.0);
  return s.rate;
}

/// Persistence forecast: next slot looks like the last one.
inline double update_pacing_rate(PacingState& s, Price next_budget) {
  return update_pacing_rate(s, next_budget, static_cast<double>(s.requests), s.win_rate);
}

inline bool throttle(const PacingState& s, Rng& rng) {
  if (s.rate >= 1.0) return true;
  if (s.rate <= 0.0) return false;
  return rng.bernoulli(s.rate);
}

// ---------------------------------------------------------------------------
// PID bid modification

struct PidGains {
  double proportional = 0.0;
  double integral = 0.0;
  double derivative = 0.0;
};

class PidController {
 public:
  PidController(PidGains gains, double reference, double start_time = 0.0,
                std::optional<double> integral_limit = 10.0)
      : gains_(gains), reference_(reference), last_time_(start_time), integral_limit_(integral_limit) {
    if (!std::isfinite(gains.proportional) || !std::isfinite(gains.integral) || !std::isfinite(gains.derivative))
      throw Error("PidController: gains must be finite");
    if (!std::isfinite(reference)) throw Error("PidController: reference must be finite");
    if (integral_limit && !(*integral_limit >= 0.0)) throw Error("PidController: integral limit must be >= 0");
  }

  /// Control signal after observing the controlled variable at time t.
  double update(double observed, double t) {
    if (!(t > last_time_)) throw Error("PidController: timestamps must increase");
    if (!std::isfinite(observed)) throw Error("PidController: observation must be finite");
    const double dt = t - last_time_;
    const double e = reference_ - observed;
    integral_ += e * dt;
    if (integral_limit_) integral_ = std::clamp(integral_, -*integral_limit_, *integral_limit_);
    const double derivative = last_error_ ? (e - *last_error_) / dt : 0.0;
    last_error_ = e;
    last_time_ = t;
    signal_ = gains_.proportional * e + gains_.integral * integral_ + gains_.derivative * derivative;
    return signal_;
  }

  [[nodiscard]] double signal() const { return signal_; }
  [[nodiscard]] double integral() const { return integral_; }
  [[nodiscard]] double reference() const { return reference_; }
  [[nodiscard]] std::optional<double> last_error() const { return last_error_; }
  [[nodiscard]] const PidGains& gains() const { return gains_; }

 private:
  PidGains gains_;
  double reference_;
  double last_time_;
  std::optional<double> integral_limit_;
  double integral_ = 0.0;
  std::optional<double> last_error_;
  double signal_ = 0.0;
};

inline double pid_signal(PidController& c, double observed, double t) { return c.update(observed, t); }

/// b exp(phi), floored to ticks and clamped to [0, max_bid].
inline Price pid_actuate(Price bid, double phi, std::optional<Price> max_bid = std::nullopt) {
  if (std::isnan(phi)) throw Error("pid_actuate: signal is NaN");
  const double cap = max_bid ? max_bid->as_double() : 9.0e18 - 1.0;
  const double scaled = bid.as_double() * std::exp(phi);
  return Price::floor_ticks(std::min(scaled, cap));
}

// ---------------------------------------------------------------------------
// Slot replays

using BidFunction = std::function<Price(const ReplayImpression&)>;

struct SlotStats {
  std::int64_t requests = 0;
  std::int64_t bids = 0;
  std::int64_t wins = 0;
  std::int64_t clicks = 0;
  Price spend;
  double rate = 1.0;
  double signal = 0.0;
};

struct PacedReplay {
  std::vector<SlotStats> slots;
  Price spend;
  std::int64_t clicks = 0;
  /// Global request index at which the budget guard first blocked a bid.
  std::optional<std::int64_t> exhausted_at;
};

struct ThrottleOptions {
  bool enabled = true;
  double initial_rate = 1.0;
  AuctionPricing pricing = AuctionPricing::second_price;
};

/// Replays slots of traffic against a total budget; with throttling enabled
/// each request participates with the current pacing rate, which is updated
/// at every slot boundary toward the plan's next slot budget.
inline PacedReplay throttled_replay(std::span<const std::vector<ReplayImpression>> slots, const BidFunction& bid_for,
                                    const SlotPlan& plan, const ThrottleOptions& opt, Rng& rng) {
  plan.validate();
  if (slots.size() != plan.budgets.size()) throw Error("throttled_replay: one plan budget per slot required");
  if (!(opt.initial_rate >= 0.0 && opt.initial_rate <= 1.0)) throw Error("throttled_replay: rate outside [0, 1]");
  const Price budget = plan.total();
  PacedReplay out;
  PacingState state;
  state.rate = opt.enabled ? opt.initial_rate : 1.0;
  std::int64_t index = 0;
  for (std::size_t t = 0; t < slots.size(); ++t) {
    SlotStats st;
    st.rate = state.rate;
    for (const auto& imp : slots[t]) {
      ++st.requests;
      const std::int64_t here = index++;
      if (opt.enabled && !throttle(state, rng)) continue;
      const Price bid = bid_for(imp);
      if (bid.ticks() == 0) continue;
      if (budget - out.spend < bid) {
        if (!out.exhausted_at) out.exhausted_at = here;
        continue;
      }
      ++st.bids;
      if (!(imp.market_price < bid)) continue;
      const Price cost = opt.pricing == AuctionPricing::first_price ? bid : imp.market_price;
      ++st.wins;
      st.spend += cost;
      out.spend += cost;
      if (imp.click) ++st.clicks;
    }
    out.clicks += st.clicks;
    if (opt.enabled && t + 1 < slots.size()) {
      state.spend = st.spend;
      state.requests = st.requests;
      state.win_rate = st.bids > 0 ? static_cast<double>(st.wins) / static_cast<double>(st.bids) : 0.0;
      update_pacing_rate(state, plan.budgets[t + 1]);
    }
    out.slots.push_back(st);
  }
  return out;
}

enum class ControlledKpi { ecpc, cpm, awr, ctr };

/// KPI of one slot, or nothing when it is undefined (no clicks, no wins...).
inline std::optional<double> slot_kpi(const SlotStats& s, ControlledKpi kpi) {
  switch (kpi) {
    case ControlledKpi::ecpc:
      if (s.clicks == 0) return std::nullopt;
      return s.spend.as_double() / static_cast<double>(s.clicks);
    case ControlledKpi::cpm:
      if (s.wins == 0) return std::nullopt;
      return 1000.0 * s.spend.as_double() / static_cast<double>(s.wins);
    case ControlledKpi::awr:
      if (s.bids == 0) return std::nullopt;
      return static_cast<double>(s.wins) / static_cast<double>(s.bids);
    case ControlledKpi::ctr:
      if (s.wins == 0) return std::nullopt;
      return static_cast<double>(s.clicks) / static_cast<double>(s.wins);
  }
  return std::nullopt;
}

struct PidReplayOptions {
  ControlledKpi kpi = ControlledKpi::ecpc;
  AuctionPricing pricing = AuctionPricing::second_price;
  std::optional<Price> budget;
  std::optional<Price> max_bid;
};

/// Replays slots with every base bid scaled by exp(phi); phi is refreshed
/// from the slot's KPI at the end of each slot. Slots whose KPI is undefined
/// keep the previous signal.
inline PacedReplay pid_replay(std::span<const std::vector<ReplayImpression>> slots, const BidFunction& base_bid,
                              PidController& controller, const PidReplayOptions& opt) {
  PacedReplay out;
  double phi = controller.signal();
  std::int64_t index = 0;
  for (std::size_t t = 0; t < slots.size(); ++t) {
    SlotStats st;
    st.signal = phi;
    for (const auto& imp : slots[t]) {
      ++st.requests;
      const std::int64_t here = index++;
      const Price bid = pid_actuate(base_bid(imp), phi, opt.max_bid);
      if (bid.ticks() == 0) continue;
      if (opt.budget && *opt.budget - out.spend < bid) {
        if (!out.exhausted_at) out.exhausted_at = here;
        continue;
      }
      ++st.bids;
      if (!(imp.market_price < bid)) continue;
      const Price cost = opt.pricing == AuctionPricing::first_price ? bid : imp.market_price;
      ++st.wins;
      st.spend += cost;
      out.spend += cost;
      if (imp.click) ++st.clicks;
    }
    out.clicks += st.clicks;
    if (const auto x = slot_kpi(st, opt.kpi)) phi = controller.update(*x, static_cast<double>(t + 1));
    out.slots.push_back(st);
  }
  return out;
}

}  // namespace rtb
