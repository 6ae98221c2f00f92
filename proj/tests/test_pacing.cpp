#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rtb/pacing.hpp"
#include "synthetic.hpp"

using namespace rtb;

TEST(SlotPlan, EvenSplitSumsToBudget) {
  const auto p = SlotPlan::even(Price::from_ticks(1000), 24);
  EXPECT_EQ(p.budgets.size(), 24u);
  EXPECT_EQ(p.total().ticks(), 1000);
  EXPECT_EQ(p.budgets.front().ticks(), 42);
  EXPECT_EQ(p.budgets.back().ticks(), 41);
  EXPECT_THROW(SlotPlan::even(Price::from_ticks(5), 0), Error);
}

TEST(PlanSlots, DominantItemChosen) {
  const std::vector<std::vector<SlotItem>> slots = {{{3.0, Price::from_ticks(2)}, {2.0, Price::from_ticks(2)}}};
  const std::vector<Price> budgets = {Price::from_ticks(2)};
  const auto sel = plan_slots(slots, budgets);
  EXPECT_EQ(sel.chosen[0], (std::vector<bool>{true, false}));
  EXPECT_DOUBLE_EQ(sel.total_value, 3.0);
}

TEST(PlanSlots, ZeroBudgetSelectsNothing) {
  const std::vector<std::vector<SlotItem>> slots = {{{3.0, Price::from_ticks(2)}, {1.0, Price::from_ticks(0)}}};
  const std::vector<Price> budgets = {Price::from_ticks(0)};
  const auto sel = plan_slots(slots, budgets);
  EXPECT_FALSE(sel.chosen[0][0]);
  EXPECT_DOUBLE_EQ(sel.slot_value[0], sel.chosen[0][1] ? 1.0 : 0.0);
  const std::vector<std::vector<SlotItem>> costly = {{{3.0, Price::from_ticks(2)}, {2.0, Price::from_ticks(5)}}};
  const auto none = plan_slots(costly, budgets);
  EXPECT_EQ(none.chosen[0], (std::vector<bool>{false, false}));
  EXPECT_DOUBLE_EQ(none.total_value, 0.0);
}

TEST(PlanSlots, MatchesSubsetEnumeration) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SlotItem> items;
    for (int i = 0; i < 10; ++i)
      items.push_back({rng.uniform(0.0, 10.0), Price::from_ticks(static_cast<std::int64_t>(1 + rng.uniform_int(30)))});
    const auto budget = Price::from_ticks(static_cast<std::int64_t>(rng.uniform_int(120)));
    double brute = 0.0;
    for (int mask = 0; mask < (1 << 10); ++mask) {
      double v = 0.0;
      std::int64_t c = 0;
      for (int i = 0; i < 10; ++i)
        if (mask & (1 << i)) {
          v += items[static_cast<std::size_t>(i)].value;
          c += items[static_cast<std::size_t>(i)].cost.ticks();
        }
      if (c <= budget.ticks()) brute = std::max(brute, v);
    }
    const std::vector<std::vector<SlotItem>> slots = {items};
    const std::vector<Price> budgets = {budget};
    const auto sel = plan_slots(slots, budgets);
    EXPECT_NEAR(sel.total_value, brute, 1e-9);
    double v = 0.0;
    std::int64_t c = 0;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (sel.chosen[0][i]) {
        v += items[i].value;
        c += items[i].cost.ticks();
      }
    EXPECT_NEAR(v, brute, 1e-9);
    EXPECT_LE(c, budget.ticks());
  }
}

TEST(PlanSlots, RejectsHugeTables) {
  const std::vector<std::vector<SlotItem>> slots = {{{1.0, Price::from_ticks(1)}, {1.0, Price::from_ticks(1)}}};
  const std::vector<Price> budgets = {Price::from_ticks(kMaxKnapsackCells)};
  EXPECT_THROW(plan_slots(slots, budgets), Error);
  const std::vector<Price> two = {Price::from_ticks(1), Price::from_ticks(1)};
  EXPECT_THROW(plan_slots(slots, two), Error);
}

TEST(PacingRate, FixedPointAndDoubling) {
  PacingState s;
  s.rate = 0.4;
  s.spend = Price::from_ticks(100);
  s.requests = 50;
  s.win_rate = 0.2;
  EXPECT_DOUBLE_EQ(update_pacing_rate(s, Price::from_ticks(100), 50.0, 0.2), 0.4);
  EXPECT_DOUBLE_EQ(update_pacing_rate(s, Price::from_ticks(200), 50.0, 0.2), 0.8);
  EXPECT_DOUBLE_EQ(update_pacing_rate(s, Price::from_ticks(200), 50.0, 0.2), 1.0);
}

TEST(PacingRate, ZeroDenominatorsHold) {
  PacingState s;
  s.rate = 0.3;
  s.requests = 10;
  s.win_rate = 0.5;
  EXPECT_DOUBLE_EQ(update_pacing_rate(s, Price::from_ticks(10), 10.0, 0.5), 0.3);
  EXPECT_EQ(s.holds, 1);
  s.spend = Price::from_ticks(5);
  EXPECT_DOUBLE_EQ(update_pacing_rate(s, Price::from_ticks(10), 0.0, 0.5), 0.3);
  EXPECT_EQ(s.holds, 2);
}

TEST(PacingRate, ScaleInvariant) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    PacingState a;
    a.rate = rng.uniform();
    a.spend = Price::from_ticks(static_cast<std::int64_t>(1 + rng.uniform_int(1000)));
    a.requests = static_cast<std::int64_t>(1 + rng.uniform_int(1000));
    a.win_rate = rng.uniform(0.01, 1.0);
    const auto next_budget = Price::from_ticks(static_cast<std::int64_t>(rng.uniform_int(1000)));
    const double next_reqs = static_cast<double>(1 + rng.uniform_int(1000));
    const double next_win = rng.uniform(0.01, 1.0);
    const std::int64_t k = static_cast<std::int64_t>(2 + rng.uniform_int(50));
    PacingState b = a;
    b.spend = a.spend * k;
    b.requests = a.requests * k;
    const double ra = update_pacing_rate(a, next_budget, next_reqs, next_win);
    const double rb = update_pacing_rate(b, next_budget * k, next_reqs * static_cast<double>(k), next_win);
    EXPECT_NEAR(ra, rb, 1e-12);
  }
}

TEST(Throttle, ExtremesAndFrequency) {
  Rng rng(12);
  PacingState s;
  s.rate = 1.0;
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(throttle(s, rng));
  s.rate = 0.0;
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(throttle(s, rng));
  s.rate = 0.3;
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += throttle(s, rng) ? 1 : 0;
  EXPECT_NEAR(hits / 100000.0, 0.3, 0.01);
}

TEST(Pid, ZeroErrorGivesZeroSignal) {
  PidController c(PidGains{1.0, 2.0, 3.0}, 5.0);
  for (int t = 1; t <= 5; ++t) EXPECT_EQ(pid_signal(c, 5.0, t), 0.0);
}

TEST(Pid, ProportionalOnly) {
  PidController c(PidGains{0.7, 0.0, 0.0}, 10.0);
  EXPECT_DOUBLE_EQ(pid_signal(c, 4.0, 1.0), 0.7 * 6.0);
  EXPECT_DOUBLE_EQ(pid_signal(c, 12.0, 3.0), 0.7 * -2.0);
}

TEST(Pid, TwoStepHandTrace) {
  PidController c(PidGains{1.0, 1.0, 1.0}, 10.0, 0.0, std::nullopt);
  // e1 = 10 - 7 = 3; integral 3; no previous error so no derivative.
  EXPECT_DOUBLE_EQ(pid_signal(c, 7.0, 1.0), 3.0 + 3.0);
  // e2 = 10 - 9 = 1; integral 4; derivative (1 - 3) / 1 = -2.
  EXPECT_DOUBLE_EQ(pid_signal(c, 9.0, 2.0), 1.0 + 4.0 - 2.0);
}

TEST(Pid, UnevenStepsWeightIntegralAndDerivative) {
  PidController c(PidGains{0.0, 1.0, 1.0}, 0.0, 0.0, std::nullopt);
  pid_signal(c, -2.0, 0.5);  // e = 2, integral 1
  // e = 1 over dt = 2: integral 1 + 2 = 3, derivative -0.5.
  EXPECT_DOUBLE_EQ(pid_signal(c, -1.0, 2.5), 3.0 - 0.5);
}

TEST(Pid, IntegralIsClamped) {
  PidController c(PidGains{0.0, 1.0, 0.0}, 100.0, 0.0, 5.0);
  for (int t = 1; t <= 10; ++t) pid_signal(c, 0.0, t);
  EXPECT_DOUBLE_EQ(c.integral(), 5.0);
  EXPECT_DOUBLE_EQ(c.signal(), 5.0);
}

TEST(Pid, RejectsNonIncreasingTime) {
  PidController c(PidGains{1.0, 0.0, 0.0}, 1.0, 5.0);
  EXPECT_THROW(pid_signal(c, 0.0, 5.0), Error);
  pid_signal(c, 0.0, 6.0);
  EXPECT_THROW(pid_signal(c, 0.0, 6.0), Error);
  EXPECT_THROW(PidController(PidGains{std::nan(""), 0.0, 0.0}, 1.0), Error);
}

TEST(PidActuate, ExponentialScaling) {
  const auto b = Price::from_ticks(1000);
  EXPECT_EQ(pid_actuate(b, 0.0), b);
  EXPECT_EQ(pid_actuate(b, std::log(2.0)).ticks(), 2000);
  EXPECT_EQ(pid_actuate(b, -std::numeric_limits<double>::infinity()).ticks(), 0);
  EXPECT_EQ(pid_actuate(b, 50.0, Price::from_ticks(5000)).ticks(), 5000);
  EXPECT_THROW(pid_actuate(b, std::nan("")), Error);
}

TEST(ThrottledReplay, NeverOverspendsAndSmoothsSpend) {
  const auto slots = synthetic::slotted_market(3, 24, 5000, 1000);
  const Price v = Price::from_ticks(4000);
  const BidFunction bid = [&](const ReplayImpression& i) { return bid_truthful(i.ctr, v); };
  const auto plan = SlotPlan::even(Price::from_ticks(3'000'000), 24);
  Rng rng(3);
  ThrottleOptions paced;
  paced.initial_rate = 0.1;
  ThrottleOptions unpaced;
  unpaced.enabled = false;
  const auto a = throttled_replay(slots, bid, plan, paced, rng);
  const auto b = throttled_replay(slots, bid, plan, unpaced, rng);
  EXPECT_LE(a.spend, plan.total());
  EXPECT_LE(b.spend, plan.total());
  double peak = 0.0;
  for (const auto& s : a.slots) peak = std::max(peak, s.spend.as_double());
  EXPECT_LE(peak, 2.0 * a.spend.as_double() / 24.0);
  ASSERT_TRUE(b.exhausted_at.has_value());
  EXPECT_TRUE(!a.exhausted_at || *a.exhausted_at > *b.exhausted_at);
  EXPECT_LT(*b.exhausted_at, 5000 * 12);
}

TEST(PidReplay, DrivesEcpcToReference) {
  constexpr int per_slot = 60000;
  const auto slots = synthetic::slotted_market(1, 50, per_slot, 1000);
  const Price v = Price::from_ticks(4000);
  const BidFunction base = [&](const ReplayImpression& i) { return bid_truthful(i.ctr, v); };
  // A reachable reference: the eCPC realised by a fixed multiplier on independent traffic.
  const auto probe = synthetic::slotted_market(1001, 10, per_slot, 1000);
  PidController fixed(PidGains{}, 0.0);
  const auto probe_run = pid_replay(probe, [&](const ReplayImpression& i) { return pid_actuate(base(i), 0.5); }, fixed,
                                    PidReplayOptions{});
  const double reference = probe_run.spend.as_double() / static_cast<double>(probe_run.clicks);
  PidController c(PidGains{0.3 / reference, 0.2 / reference, 0.0}, reference, 0.0, 10.0 * reference);
  const auto run = pid_replay(slots, base, c, PidReplayOptions{});
  for (std::size_t t = 45; t < 50; ++t) {
    const auto x = slot_kpi(run.slots[t], ControlledKpi::ecpc);
    ASSERT_TRUE(x.has_value());
    EXPECT_LE(std::fabs(*x - reference) / reference, 0.05) << "slot " << t;
  }
}

TEST(PidReplay, BudgetGuardHolds) {
  const auto slots = synthetic::slotted_market(2, 10, 2000, 1000);
  const BidFunction base = [](const ReplayImpression& i) { return bid_truthful(i.ctr, Price::from_ticks(4000)); };
  PidController c(PidGains{0.001, 0.0, 0.0}, 100.0);
  PidReplayOptions opt;
  opt.budget = Price::from_ticks(50000);
  const auto run = pid_replay(slots, base, c, opt);
  EXPECT_LE(run.spend, *opt.budget);
  EXPECT_TRUE(run.exhausted_at.has_value());
}

TEST(SlotKpi, UndefinedWithoutDenominator) {
  SlotStats s;
  EXPECT_FALSE(slot_kpi(s, ControlledKpi::ecpc).has_value());
  EXPECT_FALSE(slot_kpi(s, ControlledKpi::awr).has_value());
  s.bids = 4;
  s.wins = 2;
  s.clicks = 1;
  s.spend = Price::from_ticks(10);
  EXPECT_DOUBLE_EQ(*slot_kpi(s, ControlledKpi::ecpc), 10.0);
  EXPECT_DOUBLE_EQ(*slot_kpi(s, ControlledKpi::cpm), 5000.0);
  EXPECT_DOUBLE_EQ(*slot_kpi(s, ControlledKpi::awr), 0.5);
  EXPECT_DOUBLE_EQ(*slot_kpi(s, ControlledKpi::ctr), 0.5);
}
