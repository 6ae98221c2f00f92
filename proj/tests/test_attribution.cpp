#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "rtb/attribution.hpp"
#include "rtb/bidding.hpp"

using namespace rtb;

namespace {

TouchpointPath path_of(std::vector<ChannelId> channels, bool converted, std::int64_t value = 0) {
  TouchpointPath p;
  p.converted = converted;
  p.value = Price::from_ticks(value);
  std::int64_t ts = 1000;
  for (auto c : channels) p.events.push_back({c, ts += 10});
  return p;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Shapley value by averaging marginal contributions over every ordering.
std::vector<double> permutation_oracle(std::size_t n, const std::function<double(ChannelMask)>& v) {
  std::vector<ChannelId> order(n);
  std::iota(order.begin(), order.end(), ChannelId{0});
  std::vector<double> out(n, 0.0);
  double count = 0;
  do {
    ChannelMask m = 0;
    for (auto k : order) {
      const double before = v(m);
      m |= ChannelMask{1} << k;
      out[k] += v(m) - before;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& x : out) x /= count;
  return out;
}

}  // namespace

TEST(HeuristicCredit, TableRowsForFourTouches) {
  const auto p = path_of({0, 1, 2, 3}, true);
  const std::vector<double> last{0, 0, 0, 1}, first{1, 0, 0, 0}, linear{0.25, 0.25, 0.25, 0.25},
      decay{0.1, 0.2, 0.3, 0.4}, position{0.4, 0.1, 0.1, 0.4};
  auto near = [](const std::vector<double>& a, const std::vector<double>& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12) << i;
  };
  near(heuristic_credit(p, CreditModel::last()), last);
  near(heuristic_credit(p, CreditModel::first()), first);
  near(heuristic_credit(p, CreditModel::linear()), linear);
  near(heuristic_credit(p, CreditModel::time_decay()), decay);
  near(heuristic_credit(p, CreditModel::position()), position);
  near(heuristic_credit(p, CreditModel::custom({1, 1, 2, 4})), {0.125, 0.125, 0.25, 0.5});
}

TEST(HeuristicCredit, SingleTouchGetsEverything) {
  const auto p = path_of({2}, true);
  for (auto m : {CreditModel::last(), CreditModel::first(), CreditModel::linear(), CreditModel::time_decay(),
                 CreditModel::position(), CreditModel::custom({3.0}), CreditModel::exponential_decay(100.0)})
    EXPECT_EQ(heuristic_credit(p, m), std::vector<double>{1.0}) << credit_rule_name(m.rule);
}

TEST(HeuristicCredit, PositionWithTwoTouches) {
  EXPECT_EQ(heuristic_credit(path_of({0, 1}, true), CreditModel::position()), (std::vector<double>{0.5, 0.5}));
}

TEST(HeuristicCredit, CreditsSumToOne) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ChannelId> ch(1 + rng.uniform_int(12));
    for (auto& c : ch) c = static_cast<ChannelId>(rng.uniform_int(5));
    auto p = path_of(ch, true);
    for (auto& e : p.events) e.timestamp_ms += static_cast<std::int64_t>(rng.uniform_int(5)) * (&e - &p.events[0]);
    std::vector<double> w(ch.size());
    for (auto& x : w) x = rng.uniform() + 1e-3;
    for (auto m : {CreditModel::last(), CreditModel::first(), CreditModel::linear(), CreditModel::time_decay(),
                   CreditModel::position(), CreditModel::custom(w), CreditModel::exponential_decay(25.0)}) {
      const auto c = heuristic_credit(p, m);
      EXPECT_NEAR(sum(c), 1.0, 1e-12);
      for (double x : c) EXPECT_GE(x, 0.0);
      EXPECT_NEAR(sum(channel_credit(p, c, 5)), 1.0, 1e-12);
    }
  }
}

TEST(HeuristicCredit, ExponentialDecayFavoursRecentTouches) {
  auto p = path_of({0, 1}, true);
  p.events[0].timestamp_ms = 0;
  p.events[1].timestamp_ms = 100;
  const auto c = heuristic_credit(p, CreditModel::exponential_decay(100.0));
  EXPECT_NEAR(c[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(c[1], 2.0 / 3.0, 1e-12);
}

TEST(HeuristicCredit, Errors) {
  EXPECT_THROW(heuristic_credit(path_of({0, 1}, false), CreditModel::last()), Error);
  EXPECT_THROW(heuristic_credit(path_of({}, true), CreditModel::last()), Error);
  EXPECT_THROW(heuristic_credit(path_of({0, 1}, true), CreditModel::custom({1.0})), Error);
  EXPECT_THROW(heuristic_credit(path_of({0, 1}, true), CreditModel::custom({0.0, 0.0})), Error);
}

TEST(Shapley, TwoChannelExampleMatchesPermutations) {
  const std::vector<double> v{0.0, 0.1, 0.2, 0.4};
  const auto s = shapley_values(v);
  EXPECT_NEAR(s[0], 0.15, 1e-12);
  EXPECT_NEAR(s[1], 0.25, 1e-12);
  const auto o = permutation_oracle(2, [&](ChannelMask m) { return v[m]; });
  EXPECT_NEAR(s[0], o[0], 1e-12);
  EXPECT_NEAR(s[1], o[1], 1e-12);
}

TEST(Shapley, AxiomsOnRandomGames) {
  Rng rng(2);
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> v(std::size_t{1} << n);
      for (auto& x : v) x = rng.uniform();
      v[0] = rng.uniform() * 0.1;
      auto f = [&](ChannelMask m) { return v[m]; };
      const auto s = shapley_values(n, f);
      EXPECT_NEAR(sum(s), v.back() - v[0], 1e-12);
      const auto o = permutation_oracle(n, f);
      for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(s[k], o[k], 1e-12);
    }
  }
}

TEST(Shapley, SymmetryAndNullPlayer) {
  const std::vector<double> by_size{0.0, 0.3, 0.5, 0.6, 0.9};
  const auto sym = shapley_values(4, [&](ChannelMask m) { return by_size[static_cast<std::size_t>(std::popcount(m))]; });
  for (double x : sym) EXPECT_NEAR(x, sym[0], 1e-15);

  // Channel 2 never changes the value.
  Rng rng(3);
  std::vector<double> base(8);
  for (auto& x : base) x = rng.uniform();
  const auto s = shapley_values(4, [&](ChannelMask m) { return base[(m & 3U) | ((m >> 1) & 4U)]; });
  EXPECT_NEAR(s[2], 0.0, 1e-15);
}

TEST(Shapley, TooManyChannelsIsAnError) {
  EXPECT_THROW(shapley_values(21, [](ChannelMask) { return 0.0; }), Error);
  EXPECT_THROW(shapley_values(std::vector<double>{0.0, 1.0, 2.0}), Error);
}

TEST(Shapley, SampledPermutationsConverge) {
  Rng rng(4);
  std::vector<double> v(32);
  for (auto& x : v) x = rng.uniform();
  auto f = [&](ChannelMask m) { return v[m]; };
  const auto exact = shapley_values(5, f);
  Rng draw(5);
  const auto approx = shapley_sampled(5, f, 20000, draw);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(approx[k], exact[k], 0.02);
  EXPECT_NEAR(sum(approx), v.back() - v[0], 1e-9);
}

TEST(Shapley, CoalitionRatesFromPaths) {
  const std::vector<TouchpointPath> paths{path_of({0}, true), path_of({0}, false), path_of({1, 1}, true),
                                          path_of({0, 1}, true), path_of({1, 0}, false), path_of({}, false)};
  const auto r = coalition_rates(paths, 2);
  EXPECT_DOUBLE_EQ(r.rate[0], 0.0);
  EXPECT_DOUBLE_EQ(r.rate[1], 0.5);
  EXPECT_DOUBLE_EQ(r.rate[2], 1.0);
  EXPECT_DOUBLE_EQ(r.rate[3], 0.5);
  EXPECT_EQ(r.users[3], 2);
  EXPECT_EQ(r.unsupported, 0u);
}

TEST(Shao, HandCountedSixUsers) {
  const std::vector<TouchpointPath> paths{path_of({0}, true),       path_of({0, 1}, true), path_of({1}, false),
                                          path_of({0, 1, 2}, false), path_of({2}, true),    path_of({2, 1}, false)};
  const auto s = channel_stats(paths, 3);
  EXPECT_EQ(s.pos[0], 2);
  EXPECT_EQ(s.neg[0], 1);
  // P(y|x0) = 2/3, P(y|x1) = 1/4, P(y|x2) = 1/3, P(y|x0,x1) = 1/2, P(y|x0,x2) = 0.
  const double v0 = 0.5 * (2.0 / 3.0) + (1.0 / 4.0) * ((0.5 - 0.25) + (0.0 - 1.0 / 3.0));
  EXPECT_NEAR(shao_value(s, 0).value, v0, 1e-15);
  // P(y|x1,x0) = 1/2, P(y|x1,x2) = 0.
  const double v1 = 0.5 * 0.25 + (1.0 / 4.0) * ((0.5 - 2.0 / 3.0) + (0.0 - 1.0 / 3.0));
  EXPECT_NEAR(shao_value(s, 1).value, v1, 1e-15);
  EXPECT_EQ(shao_value(s, 1).excluded, 0u);
}

TEST(Shao, SymmetricChannelsAndZeroChannel) {
  const std::vector<TouchpointPath> paths{path_of({0}, true), path_of({1}, true), path_of({0, 1}, false),
                                          path_of({0}, false), path_of({1}, false)};
  const auto s = channel_stats(paths, 2);
  EXPECT_DOUBLE_EQ(shao_value(s, 0).value, shao_value(s, 1).value);

  const std::vector<TouchpointPath> dead{path_of({0}, false), path_of({0, 1}, false), path_of({1}, false)};
  const auto d = channel_stats(dead, 2);
  EXPECT_DOUBLE_EQ(shao_value(d, 0).value, 0.0);
}

TEST(Shao, MissingPartnerIsExcludedAndUnseenChannelIsAnError) {
  const std::vector<TouchpointPath> paths{path_of({0}, true), path_of({0}, false)};
  const auto s = channel_stats(paths, 3);
  const auto v = shao_value(s, 0);
  EXPECT_EQ(v.excluded, 2u);
  EXPECT_DOUBLE_EQ(v.value, 0.25);
  EXPECT_THROW(shao_value(s, 1), Error);
}

TEST(Shao, MatchesTwoChannelShapleyFormula) {
  // With an empty coalition worth zero, the two-channel Shapley value is
  // 0.5 v({i}) + 0.5 (v({i,j}) - v({j})), which is the count model's form.
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    ChannelStats s(2);
    s.pos = {static_cast<std::int64_t>(rng.uniform_int(50)), static_cast<std::int64_t>(rng.uniform_int(50))};
    s.neg = {1 + static_cast<std::int64_t>(rng.uniform_int(50)), 1 + static_cast<std::int64_t>(rng.uniform_int(50))};
    const auto pp = static_cast<std::int64_t>(rng.uniform_int(20));
    const auto pn = 1 + static_cast<std::int64_t>(rng.uniform_int(20));
    s.pair_pos = {0, pp, pp, 0};
    s.pair_neg = {0, pn, pn, 0};
    const std::vector<double> v{0.0, *s.rate(0), *s.rate(1), *s.rate(0, 1)};
    const auto shap = shapley_values(v);
    EXPECT_NEAR(shao_value(s, 0).value, shap[0], 1e-14);
    EXPECT_NEAR(shao_value(s, 1).value, shap[1], 1e-14);
  }
}

TEST(ChannelStats, MergeIsOrderIndependent) {
  Rng rng(7);
  std::vector<TouchpointPath> paths;
  for (int i = 0; i < 300; ++i) {
    std::vector<ChannelId> ch(rng.uniform_int(5));
    for (auto& c : ch) c = static_cast<ChannelId>(rng.uniform_int(4));
    paths.push_back(path_of(ch, rng.bernoulli(0.3)));
  }
  const auto all = channel_stats(paths, 4);
  auto a = channel_stats(std::span(paths).subspan(0, 100), 4);
  auto b = channel_stats(std::span(paths).subspan(100), 4);
  auto ab = a;
  ab.merge(b);
  auto ba = b;
  ba.merge(a);
  EXPECT_EQ(ab.pos, all.pos);
  EXPECT_EQ(ab.pair_neg, all.pair_neg);
  EXPECT_EQ(ba.pair_pos, all.pair_pos);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_LE(all.pair_pos[i * 4 + j], all.pos[i]);
      EXPECT_LE(all.pair_neg[i * 4 + j], all.neg[i]);
    }
}

TEST(Causal, SingleChannelIsPlainUplift) {
  std::vector<TouchpointPath> paths;
  for (int i = 0; i < 10; ++i) paths.push_back(path_of({0}, i < 4));
  for (int i = 0; i < 10; ++i) paths.push_back(path_of({}, i < 1));
  const auto v = causal_value(paths, 1, 0);
  EXPECT_NEAR(v.value, 0.4 - 0.1, 1e-15);
  EXPECT_EQ(v.excluded, 0u);
}

TEST(Causal, ZeroUpliftEverywhereGivesZero) {
  std::vector<TouchpointPath> paths;
  for (int i = 0; i < 4; ++i) {
    paths.push_back(path_of({}, i == 0));
    paths.push_back(path_of({1}, i < 2));
    paths.push_back(path_of({0}, i == 0));
    paths.push_back(path_of({1, 0}, i < 2));
  }
  EXPECT_DOUBLE_EQ(causal_value(paths, 2, 0).value, 0.0);
}

TEST(Causal, RecoversPlantedUpliftSigns) {
  const std::vector<double> uplift{0.08, 0.03, -0.03};
  Rng rng(8);
  std::vector<TouchpointPath> paths;
  for (int u = 0; u < 200000; ++u) {
    std::vector<ChannelId> ch;
    double p = 0.06;
    for (ChannelId c = 0; c < 3; ++c)
      if (rng.bernoulli(0.5)) {
        ch.push_back(c);
        p += uplift[c];
      }
    for (std::size_t i = ch.size(); i > 1; --i) std::swap(ch[i - 1], ch[rng.uniform_int(i)]);
    paths.push_back(path_of(ch, rng.bernoulli(p)));
  }
  for (std::size_t c = 0; c < 3; ++c) {
    const auto v = causal_value(paths, 3, c);
    EXPECT_EQ(v.value > 0.0, uplift[c] > 0.0) << c << " " << v.value;
    EXPECT_NEAR(v.value, uplift[c], 0.01) << c;
  }
}

TEST(BaggedLr, SingleBagWithoutResamplingIsPlainFit) {
  Rng rng(9);
  std::vector<TouchpointPath> paths;
  for (int u = 0; u < 500; ++u) {
    std::vector<ChannelId> ch;
    for (ChannelId c = 0; c < 3; ++c)
      if (rng.bernoulli(0.5)) ch.push_back(c);
    paths.push_back(path_of(ch, rng.bernoulli(ch.empty() ? 0.1 : 0.3)));
  }
  BaggingOptions opt;
  opt.bags = 1;
  opt.bootstrap = false;
  const auto w = bagged_lr_attribution(paths, 3, opt);

  std::vector<LabeledExample> data;
  for (const auto& p : paths) {
    std::vector<std::uint32_t> idx;
    for (std::uint32_t c = 0; c < 3; ++c)
      if (p.mask() >> c & 1U) idx.push_back(c);
    data.push_back({FeatureVector(idx, 3), p.converted ? 1 : 0});
  }
  LinearModel m(3, 0.0, true);
  lr_fit(m, data, opt.sgd);
  EXPECT_EQ(w, m.weights);

  opt.bags = 4;
  EXPECT_EQ(bagged_lr_attribution(paths, 3, opt), m.weights);
}

TEST(BaggedLr, PlantedStrongChannelHasLargestWeight) {
  Rng rng(10);
  std::vector<TouchpointPath> paths;
  for (int u = 0; u < 4000; ++u) {
    std::vector<ChannelId> ch;
    double logit = -2.5;
    for (ChannelId c = 0; c < 5; ++c)
      if (rng.bernoulli(0.4)) {
        ch.push_back(c);
        logit += c == 3 ? 2.0 : 0.2;
      }
    paths.push_back(path_of(ch, rng.bernoulli(num::sigmoid(logit))));
  }
  BaggingOptions opt;
  opt.bags = 8;
  opt.channel_fraction = 0.6;
  const auto w = bagged_lr_attribution(paths, 5, opt);
  EXPECT_EQ(std::max_element(w.begin(), w.end()) - w.begin(), 3);
  EXPECT_EQ(bagged_lr_attribution(paths, 5, opt), w);
  EXPECT_THROW(bagged_lr_attribution(std::vector<TouchpointPath>{path_of({0}, true)}, 1, opt), Error);
}

TEST(ConversionCredit, Examples) {
  const std::vector<double> v{1.0, 3.0, 0.5};
  EXPECT_EQ(conversion_credit(v, std::vector<ChannelId>{2}), std::vector<double>{1.0});
  EXPECT_EQ(conversion_credit(v, std::vector<ChannelId>{0, 1}), (std::vector<double>{0.25, 0.75}));
  const std::vector<double> eq{2.0, 2.0, 2.0};
  for (double x : conversion_credit(eq, std::vector<ChannelId>{0, 1, 2})) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
  EXPECT_THROW(conversion_credit(std::vector<double>{0.0, -1.0}, std::vector<ChannelId>{0, 1}), Error);
}

TEST(ConversionCredit, LiftBidUsesAttributedCredit) {
  const Price v = Price::from_ticks(200000);
  const double theta = 0.02;
  for (double credit : {0.25, 0.5, 1.0}) {
    const double lift = attributed_lift(theta, credit);
    EXPECT_EQ(bid_lift(theta, lift, v), Price::floor_ticks(v.as_double() * theta * credit));
  }
}

TEST(ChannelRoi, AttributedRevenueOverCost) {
  const std::vector<TouchpointPath> paths{path_of({0, 1}, true, 400), path_of({1}, true, 100), path_of({0}, false)};
  const std::vector<double> v{1.0, 3.0};
  const std::vector<Price> cost{Price::from_ticks(50), Price::from_ticks(0)};
  const auto r = channel_roi(paths, v, cost);
  ASSERT_TRUE(r[0].has_value());
  EXPECT_DOUBLE_EQ(*r[0], 100.0 / 50.0);
  EXPECT_FALSE(r[1].has_value());
}

TEST(AllocateBudget, WorkedExampleAndLimits) {
  const std::vector<double> roi{2.0, 1.0};
  const std::vector<double> caps{5.0, 10.0};
  const auto a = allocate_budget(roi, caps, 8.0);
  EXPECT_EQ(a.amounts, (std::vector<double>{5.0, 3.0}));
  EXPECT_DOUBLE_EQ(a.objective, 13.0);
  EXPECT_EQ(allocate_budget(roi, caps, 100.0).amounts, caps);
  EXPECT_EQ(allocate_budget(roi, caps, 0.0).amounts, (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(allocate_budget(roi, caps, -1.0), Error);
}

TEST(AllocateBudget, MatchesEnumerationOnSmallInstances) {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(6);
    std::vector<double> roi(n), caps(n);
    for (std::size_t i = 0; i < n; ++i) {
      roi[i] = rng.uniform(-0.5, 3.0);
      caps[i] = static_cast<double>(rng.uniform_int(4));
    }
    const double budget = static_cast<double>(rng.uniform_int(12));
    // Integer caps and budget make some optimal vertex integral.
    double best = 0.0;
    std::vector<int> b(n, 0);
    for (;;) {
      double spent = 0.0;
      double obj = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        spent += b[i];
        obj += roi[i] * b[i];
      }
      if (spent <= budget) best = std::max(best, obj);
      std::size_t k = 0;
      while (k < n && b[k] == static_cast<int>(caps[k])) b[k++] = 0;
      if (k == n) break;
      ++b[k];
    }
    const auto a = allocate_budget(roi, caps, budget);
    EXPECT_NEAR(a.objective, best, 1e-9);
    double total = 0.0;
    double positive_caps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GE(a.amounts[i], 0.0);
      EXPECT_LE(a.amounts[i], caps[i]);
      total += a.amounts[i];
      if (roi[i] >= 0.0) positive_caps += caps[i];
    }
    EXPECT_NEAR(total, std::min(budget, positive_caps), 1e-12);
  }
}

TEST(PathIo, RoundTripAndErrors) {
  std::vector<TouchpointPath> paths{path_of({0, 2, 1}, true, 1234), path_of({}, false)};
  paths[0].user = "u1";
  paths[1].user = "u2";
  std::stringstream ss;
  write_paths(ss, paths);
  const auto back = read_paths(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].events, paths[0].events);
  EXPECT_EQ(back[0].value, paths[0].value);
  EXPECT_TRUE(back[0].converted);
  EXPECT_TRUE(back[1].events.empty());
  EXPECT_EQ(format_path_line(back[0]), format_path_line(paths[0]));

  EXPECT_THROW(parse_path_line("u\t2\t0\t"), Error);
  EXPECT_THROW(parse_path_line("u\t1\tx\t"), Error);
  EXPECT_THROW(parse_path_line("u\t1\t5\t1@x"), Error);
  EXPECT_THROW(parse_path_line("u\t1\t5"), Error);
  std::stringstream bad("#rtb-paths v1\nu\t1\t0\t0@1\nu\t1\t0\tzz\n");
  try {
    read_paths(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(PathIo, CreditCsv) {
  std::stringstream ss;
  const std::vector<CreditRow> rows{{"search", "linear", 0.25}, {"display", "shapley", 0.75}};
  write_credit_csv(ss, rows);
  EXPECT_EQ(ss.str(), "channel,model,credit\nsearch,linear,0.25\ndisplay,shapley,0.75\n");
}
