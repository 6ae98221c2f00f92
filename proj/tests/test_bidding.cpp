#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rtb/bidding.hpp"
#include "rtb/random.hpp"
#include "synthetic.hpp"

using namespace rtb;

namespace {

std::vector<double> midpoint_grid(int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back((i + 0.5) / n);
  return g;
}

}  // namespace

TEST(Truthful, BidsTheImpressionValue) {
  EXPECT_EQ(bid_truthful(0.0, Price::from_ticks(1000)).ticks(), 0);
  EXPECT_EQ(bid_truthful(1.0, Price::from_ticks(1000)).ticks(), 1000);
  EXPECT_EQ(bid_truthful(0.002, Price::from_ticks(1000)).ticks(), 2);
  EXPECT_THROW(bid_truthful(-0.1, Price::from_ticks(10)), Error);
}

TEST(Linear, SpecialCases) {
  Rng rng(1);
  const auto v = Price::from_ticks(123456);
  for (int i = 0; i < 100; ++i) {
    const double r = rng.uniform();
    EXPECT_EQ(bid_linear(r, v, 1.0), bid_truthful(r, v));
    EXPECT_EQ(bid_linear(r, v, 0.0).ticks(), 0);
  }
  EXPECT_EQ(bid_linear(0.5, Price::from_ticks(10), 2.0).ticks(), 10);
}

TEST(Ortb1, FormulaValues) {
  EXPECT_EQ(bid_ortb1(0.0, 1.0, 10.0).ticks(), 0);
  EXPECT_DOUBLE_EQ(ortb1_value(30.0, 1.0, 10.0), 10.0);
  EXPECT_EQ(bid_ortb1(30.0, 1.0, 10.0).ticks(), 10);
  EXPECT_THROW(bid_ortb1(1.0, 0.0, 10.0), Error);
  EXPECT_THROW(bid_ortb1(1.0, 1.0, -1.0), Error);
}

TEST(Ortb1, MatchesPerImpressionEnumeration) {
  // w(b) = b / (b + l) with first-price cost; maximise (u - lambda b) w(b) over integer bids.
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double l = 5.0 + rng.uniform_int(40);
    const double lambda = 0.05 + rng.uniform();
    const double u = rng.uniform(0.0, 200.0);
    long best = 0;
    double best_val = -1e300;
    for (long b = 0; b <= 2000; ++b) {
      const double w = b / (b + l);
      const double val = (u - lambda * b) * w;
      if (val > best_val) {
        best_val = val;
        best = b;
      }
    }
    const double formula = ortb1_value(u, lambda, l);
    EXPECT_LE(std::fabs(static_cast<double>(best) - formula), 1.0) << "u=" << u << " lambda=" << lambda << " l=" << l;
  }
}

TEST(Ortb1, StrictlyConcaveIncreasing) {
  double prev = ortb1_value(0.0, 0.7, 12.0);
  double prev_step = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 200; ++i) {
    const double cur = ortb1_value(i * 0.5, 0.7, 12.0);
    const double step = cur - prev;
    EXPECT_GT(step, 0.0);
    EXPECT_LT(step, prev_step);
    prev_step = step;
    prev = cur;
  }
}

TEST(Ortb2, LinearInUtility) {
  EXPECT_EQ(bid_ortb2(0.0, 3.0).ticks(), 0);
  EXPECT_EQ(bid_ortb2(10.0, 2.0).ticks(), 5);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double u = rng.uniform(0.0, 1e6);
    const double lambda = rng.uniform(0.1, 10.0);
    EXPECT_DOUBLE_EQ(ortb2_value(u, 2.0 * lambda), ortb2_value(u, lambda) / 2.0);
  }
}

TEST(Lift, ValuesAndDomain) {
  const auto v = Price::from_ticks(1000);
  EXPECT_EQ(bid_lift(0.3, 0.0, v).ticks(), 0);
  EXPECT_EQ(bid_lift(0.25, 0.25, v), bid_truthful(0.25, v));
  EXPECT_EQ(bid_lift(0.02, 0.005, v).ticks(), 5);
  EXPECT_THROW(bid_lift(0.02, 0.03, v), Error);
  EXPECT_THROW(bid_lift(1.2, 0.1, v), Error);
  EXPECT_THROW(bid_lift(0.2, -0.1, v), Error);
}

TEST(BiddingStrategy, EveryKindIsMonotoneInCtr) {
  const auto v = Price::from_ticks(50000);
  const std::vector<BiddingStrategy> all = {
      BiddingStrategy::truthful(v),
      BiddingStrategy::linear(0.8, v),
      BiddingStrategy::ortb1(1e-5, 300.0),
      BiddingStrategy::ortb2(2e-4),
      BiddingStrategy::ortb_uniform_fp(0.1, 5000.0, UtilitySpec::profit(50000)),
      BiddingStrategy::lift(v)};
  for (const auto& s : all) {
    Price prev = s.bid(0.0);
    EXPECT_EQ(prev.ticks(), 0) << s.name();
    for (int i = 1; i <= 1000; ++i) {
      const Price cur = s.bid(i / 1000.0);
      EXPECT_GE(cur, prev) << s.name();
      prev = cur;
    }
  }
}

TEST(BiddingStrategy, RejectsBadParameters) {
  EXPECT_THROW(BiddingStrategy::linear(-1.0, Price::from_ticks(1)), Error);
  EXPECT_THROW(BiddingStrategy::ortb2(0.0), Error);
  EXPECT_THROW(BiddingStrategy::ortb1(1.0, 0.0), Error);
  EXPECT_THROW(BiddingStrategy::ortb1(std::nan(""), 1.0), Error);
  EXPECT_THROW(UtilitySpec::profit(0.0), Error);
}

TEST(BiddingStrategy, Ortb1CrossesEqualSpendLinearExactlyOnce) {
  const double l = 50.0;
  const double lambda = 0.02;
  const auto win = WinFunction::parametric(l);
  std::vector<double> us;
  for (double r : midpoint_grid(400)) us.push_back(20.0 * r);
  const BidFamily ortb = [l](double u, double lam) { return ortb1_value(u, lam, l); };
  const double target = expected_spend(win, CostModel::first_price, us, 1.0, ortb, lambda);
  // Linear bid phi * u with phi calibrated to the same expected spend.
  const BidFamily lin = [](double u, double inv_phi) { return u / inv_phi; };
  const auto sol = solve_lambda(win, CostModel::first_price, us, target, 1.0, lin);
  ASSERT_TRUE(sol.converged);
  const double phi = 1.0 / sol.lambda;
  int changes = 0;
  double prev_sign = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const double u = 20.0 * i / 2000.0;
    const double d = ortb1_value(u, lambda, l) - phi * u;
    const double sign = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
    if (sign != 0.0 && prev_sign != 0.0 && sign != prev_sign) ++changes;
    if (sign != 0.0) prev_sign = sign;
    if (i == 1) {
      EXPECT_GT(d, 0.0);
    }
  }
  EXPECT_EQ(changes, 1);
}

TEST(SolveLambda, SpendStrictlyDecreasesInLambda) {
  const auto us = midpoint_grid(200);
  const std::vector<WinFunction> wins = {WinFunction::uniform(100.0), WinFunction::parametric(30.0)};
  for (const auto& win : wins) {
    for (auto cost : {CostModel::first_price, CostModel::second_price, CostModel::second_price_unnormalized}) {
      const BidFamily f = [](double u, double lam) { return u / lam; };
      double prev = std::numeric_limits<double>::infinity();
      for (double lam = 1e-3; lam < 1.0; lam *= 1.5) {
        const double s = expected_spend(win, cost, us, 1000.0, f, lam);
        EXPECT_LT(s, prev) << win.name();
        prev = s;
      }
    }
  }
}

TEST(SolveLambda, FirstPriceUniformAnalytic) {
  const auto us = midpoint_grid(2000);
  for (auto [B, T, l] : std::vector<std::tuple<double, double, double>>{
           {1e6, 1e4, 1000.0}, {5e5, 2e4, 400.0}, {2e7, 5e4, 5000.0}}) {
    const auto win = WinFunction::uniform(l);
    const BidFamily f = [](double u, double lam) { return u / (2.0 * lam); };
    const auto sol = solve_lambda(win, CostModel::first_price, us, B, T, f);
    ASSERT_TRUE(sol.converged);
    const double analytic = 0.5 * std::sqrt(T / (3.0 * B * l));
    EXPECT_NEAR(sol.lambda / analytic, 1.0, 5e-3);
    EXPECT_NEAR(f(0.5, sol.lambda), 0.5 * std::sqrt(3.0 * B * l / T), 5e-3 * f(0.5, sol.lambda));
  }
}

TEST(SolveLambda, SecondPriceUniformAnalytic) {
  const auto us = midpoint_grid(2000);
  for (auto [B, T, l] : std::vector<std::tuple<double, double, double>>{
           {1e6, 1e4, 1000.0}, {5e5, 2e4, 400.0}, {2e7, 5e4, 5000.0}}) {
    const auto win = WinFunction::uniform(l);
    const BidFamily f = [](double u, double lam) { return u / lam; };
    const auto raw = solve_lambda(win, CostModel::second_price_unnormalized, us, B, T, f);
    ASSERT_TRUE(raw.converged);
    EXPECT_NEAR(raw.lambda / (0.5 * std::cbrt(T / (B * l * l))), 1.0, 5e-3);
    EXPECT_NEAR(f(1.0, raw.lambda) / (2.0 * std::cbrt(B * l * l / T)), 1.0, 5e-3);

    // Conditional-mean cost: T * E[r^2] / (2 lambda^2 l) = B.
    const auto cond = solve_lambda(win, CostModel::second_price, us, B, T, f);
    ASSERT_TRUE(cond.converged);
    EXPECT_NEAR(cond.lambda / std::sqrt(T / (6.0 * B * l)), 1.0, 5e-3);
  }
}

TEST(SolveLambda, UnattainableBudgetIsFlagged) {
  const auto us = midpoint_grid(50);
  const auto win = WinFunction::uniform(10.0);
  const BidFamily capped = [](double u, double lam) { return std::min(u / lam, 10.0); };
  const auto sol = solve_lambda(win, CostModel::first_price, us, 1e9, 100.0, capped);
  EXPECT_TRUE(sol.budget_unattainable);
  EXPECT_FALSE(sol.converged);
  EXPECT_THROW(solve_lambda(win, CostModel::first_price, us, 0.0, 100.0, capped), Error);
  EXPECT_THROW(solve_lambda(win, CostModel::first_price, {}, 1.0, 100.0, capped), Error);
}

TEST(SolveLambda, WorksOnDiscreteLandscapes) {
  std::vector<BidLogRecord> logs;
  for (int p = 1; p <= 50; ++p) logs.push_back(BidLogRecord::win(Price::from_ticks(100), Price::from_ticks(p)));
  const auto win = WinFunction::counting(logs);
  const auto us = midpoint_grid(100);
  const BidFamily f = [](double u, double lam) { return u / lam; };
  // Spend is a step function of lambda here, so only closeness is required.
  const auto sol = solve_lambda(win, CostModel::second_price, us, 500.0, 100.0, f);
  EXPECT_FALSE(sol.budget_unattainable);
  EXPECT_NEAR(sol.expected_spend, 500.0, 5.0);
}

TEST(Replay, TiesLoseAndPricingRules) {
  const std::vector<ReplayImpression> logs = {{0.1, Price::from_ticks(5), true}, {0.1, Price::from_ticks(4), false}};
  const auto fixed = [](const ReplayImpression&) { return Price::from_ticks(5); };
  const auto second = replay(logs, fixed);
  EXPECT_EQ(second.wins, 1);
  EXPECT_EQ(second.clicks, 0);
  EXPECT_EQ(second.spend.ticks(), 4);
  ReplayOptions fp;
  fp.pricing = AuctionPricing::first_price;
  EXPECT_EQ(replay(logs, fixed, fp).spend.ticks(), 5);
}

TEST(Replay, BudgetGuardSkipsUnaffordableBids) {
  std::vector<ReplayImpression> logs(10, {0.5, Price::from_ticks(1), true});
  ReplayOptions opt;
  opt.budget = Price::from_ticks(25);
  opt.pricing = AuctionPricing::first_price;
  const auto r = replay(logs, [](const ReplayImpression&) { return Price::from_ticks(10); }, opt);
  EXPECT_EQ(r.wins, 2);
  EXPECT_EQ(r.spend.ticks(), 20);
  EXPECT_LE(r.spend, *opt.budget);
  opt.budget_guard = false;
  EXPECT_EQ(replay(logs, [](const ReplayImpression&) { return Price::from_ticks(10); }, opt).spend.ticks(), 100);
}

TEST(TunePhi, UnlimitedBudgetPicksGridMaximum) {
  const auto logs = synthetic::uniform_market(5, 2000, 1000);
  const auto grid = phi_grid(0.0, 2.0, 40);
  const auto t = tune_phi(logs, std::nullopt, 2000.0, Price::from_ticks(20000), grid);
  EXPECT_DOUBLE_EQ(t.phi, 2.0);
}

TEST(TunePhi, ZeroBudgetPicksZero) {
  const auto logs = synthetic::uniform_market(5, 2000, 1000);
  const auto grid = phi_grid(0.0, 2.0, 40);
  EXPECT_DOUBLE_EQ(tune_phi(logs, Price::from_ticks(0), 2000.0, Price::from_ticks(20000), grid).phi, 0.0);
  const std::vector<double> positive = {0.5, 1.0};
  EXPECT_THROW(tune_phi(logs, Price::from_ticks(0), 2000.0, Price::from_ticks(20000), positive), Error);
}

TEST(TunePhi, MatchesExhaustiveGridOracle) {
  const auto logs = synthetic::uniform_market(9, 3000, 1000);
  const auto grid = phi_grid(0.0, 3.0, 60);
  const Price v = Price::from_ticks(10000);
  const Price budget = Price::from_ticks(300000);
  const double volume = 6000.0;
  const auto t = tune_phi(logs, budget, volume, v, grid);

  const double cap = budget.as_double() * 3000.0 / volume;
  double best_phi = -1.0;
  std::int64_t best_clicks = -1;
  for (double phi : grid) {
    std::int64_t clicks = 0;
    std::int64_t spend = 0;
    for (const auto& imp : logs) {
      const auto b = static_cast<std::int64_t>(std::floor(phi * v.as_double() * imp.ctr + 1e-9));
      if (imp.market_price.ticks() < b) {
        spend += imp.market_price.ticks();
        clicks += imp.click ? 1 : 0;
      }
    }
    if (static_cast<double>(spend) <= cap && clicks >= best_clicks) {
      best_clicks = clicks;
      best_phi = phi;
    }
  }
  EXPECT_DOUBLE_EQ(t.phi, best_phi);
  EXPECT_EQ(t.result.clicks, best_clicks);
}

TEST(Replay, OrtbBeatsLinearBeatsTruthfulAtEqualSpend) {
  const auto o = synthetic::strategy_ordering(1);
  const double b = o.ortb.spend.as_double();
  EXPECT_NEAR(o.linear.spend.as_double() / b, 1.0, 0.02);
  EXPECT_NEAR(o.truthful.spend.as_double() / b, 1.0, 0.02);
  EXPECT_GE(o.ortb.clicks, o.linear.clicks);
  EXPECT_GE(o.linear.clicks, o.truthful.clicks);
}

namespace {

WinFunction small_market() {
  std::vector<BidLogRecord> logs;
  for (int p : {1, 2, 2, 3, 4, 5, 5, 6, 8, 10}) logs.push_back(BidLogRecord::win(Price::from_ticks(20), Price::from_ticks(p)));
  return WinFunction::counting(logs);
}

ArbitrageOptions small_options() {
  ArbitrageOptions opt;
  for (int b = 0; b <= 12; ++b) opt.candidate_bids.push_back(Price::from_ticks(b));
  return opt;
}

std::vector<double> random_utilities(std::uint64_t seed, int n, double scale) {
  Rng rng(seed);
  std::vector<double> u;
  for (int i = 0; i < n; ++i) u.push_back(scale * rng.uniform());
  return u;
}

}  // namespace

TEST(Arbitrage, SingleCampaignIsPlainProfitOptimisation) {
  const auto win = small_market();
  const auto opt = small_options();
  const std::vector<ArbitrageCampaign> one = {{random_utilities(4, 200, 20.0)}};
  const auto r = arbitrage_em(one, win, 2000.0, 400.0, opt);
  ASSERT_EQ(r.sampling.size(), 1u);
  EXPECT_EQ(r.sampling[0], 1.0);
  EXPECT_LE(r.expected_cost, 2000.0 * (1 + 1e-9));
  // Each bid maximises (u - kappa b) w(b) over the candidates.
  for (std::size_t t = 0; t < one[0].utilities.size(); ++t) {
    const double u = one[0].utilities[t];
    const auto val = [&](Price b) { return (u - r.cost_multiplier * b.as_double()) * win(b); };
    for (Price b : opt.candidate_bids) EXPECT_LE(val(b), val(r.bids[0][t]) + 1e-9);
  }
}

TEST(Arbitrage, IdenticalCampaignsMatchSingleCampaignObjective) {
  const auto win = small_market();
  const auto opt = small_options();
  const auto u = random_utilities(5, 150, 15.0);
  const std::vector<ArbitrageCampaign> one = {{u}};
  const std::vector<ArbitrageCampaign> two = {{u}, {u}};
  const auto a = arbitrage_em(one, win, 800.0, 300.0, opt);
  const auto b = arbitrage_em(two, win, 800.0, 300.0, opt);
  EXPECT_NEAR(b.objective, a.objective, 1e-9 * std::fabs(a.objective));
  EXPECT_NEAR(b.sampling[0] + b.sampling[1], 1.0, 1e-12);
}

TEST(Arbitrage, DominantCampaignMatchesSamplingGridOracle) {
  const auto win = small_market();
  const auto opt = small_options();
  const auto u = random_utilities(6, 150, 12.0);
  std::vector<double> doubled;
  for (double x : u) doubled.push_back(2.0 * x);
  const std::vector<ArbitrageCampaign> pair = {{doubled}, {u}};
  const double budget = 700.0;
  const double volume = 300.0;
  const auto em = arbitrage_em(pair, win, budget, volume, opt);

  double best_obj = -1e300;
  double best_s = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const std::vector<double> s = {i / 100.0, 1.0 - i / 100.0};
    const auto r = arbitrage_evaluate(pair, win, s, budget, volume, opt);
    if (r.objective > best_obj) {
      best_obj = r.objective;
      best_s = s[0];
    }
  }
  EXPECT_GE(em.objective, best_obj - 1e-6 * std::fabs(best_obj));
  EXPECT_DOUBLE_EQ(best_s, 1.0);
  EXPECT_DOUBLE_EQ(em.sampling[0], 1.0);
  EXPECT_NEAR(em.sampling[0] + em.sampling[1], 1.0, 1e-12);
}

TEST(Arbitrage, VarianceCapIsRespected) {
  const auto win = small_market();
  auto opt = small_options();
  Rng rng(7);
  std::vector<double> steady;
  std::vector<double> volatile_u;
  for (int i = 0; i < 150; ++i) {
    steady.push_back(6.0 + rng.uniform());
    volatile_u.push_back(rng.bernoulli(0.5) ? 24.0 * rng.uniform() : 0.0);
  }
  const std::vector<ArbitrageCampaign> pair = {{volatile_u}, {steady}};
  const auto free = arbitrage_em(pair, win, 500.0, 300.0, opt);
  ASSERT_GT(free.profit_variance, 0.0);
  opt.variance_cap = 0.5 * free.profit_variance;
  const auto capped = arbitrage_em(pair, win, 500.0, 300.0, opt);
  EXPECT_TRUE(capped.variance_met);
  EXPECT_LE(capped.profit_variance, *opt.variance_cap * (1.0 + 1e-9));
  EXPECT_LE(capped.objective, free.objective + 1e-9);
  EXPECT_NEAR(capped.sampling[0] + capped.sampling[1], 1.0, 1e-12);
}

TEST(Arbitrage, RejectsMalformedPortfolios) {
  const auto win = small_market();
  const auto opt = small_options();
  EXPECT_THROW(arbitrage_em({}, win, 1.0, 1.0, opt), Error);
  const std::vector<ArbitrageCampaign> ragged = {{{1.0, 2.0}}, {{1.0}}};
  EXPECT_THROW(arbitrage_em(ragged, win, 1.0, 1.0, opt), Error);
  const std::vector<ArbitrageCampaign> one = {{{1.0, 2.0}}};
  EXPECT_THROW(arbitrage_em(one, win, 0.0, 1.0, opt), Error);
  const std::vector<double> bad = {0.7};
  EXPECT_THROW(arbitrage_evaluate(one, win, bad, 1.0, 1.0, opt), Error);
}
