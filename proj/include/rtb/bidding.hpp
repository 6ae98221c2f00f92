#pragma once

// Bidding strategies, the budget multiplier solver, log replay and
// multi-campaign arbitrage.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/landscape.hpp"

namespace rtb {

/// What one impression is worth to the campaign as a function of its CTR.
struct UtilitySpec {
  Kpi kind = Kpi::clicks;
  double value = 0.0;  // ticks per click, profit only

  static UtilitySpec clicks() { return {}; }
  static UtilitySpec profit(double click_value) {
    UtilitySpec u{Kpi::profit, click_value};
    u.validate();
    return u;
  }

  void validate() const {
    if (kind == Kpi::profit && !(value > 0.0)) throw Error("UtilitySpec: profit needs a positive click value");
  }

  [[nodiscard]] double operator()(double ctr) const { return kind == Kpi::clicks ? ctr : value * ctr; }
};

namespace detail {
inline void require_finite_nonneg(double x, const char* what) {
  if (!std::isfinite(x) || x < 0.0) throw Error(std::string(what) + " must be finite and non-negative");
}
inline void require_positive(double x, const char* what) {
  if (!std::isfinite(x) || !(x > 0.0)) throw Error(std::string(what) + " must be positive");
}
}  // namespace detail

inline double ortb1_value(double u, double lambda, double l) {
  detail::require_finite_nonneg(u, "utility");
  detail::require_positive(lambda, "lambda");
  detail::require_positive(l, "l");
  return std::sqrt(u * l / lambda + l * l) - l;
}

inline double ortb2_value(double u, double lambda) {
  detail::require_finite_nonneg(u, "utility");
  detail::require_positive(lambda, "lambda");
  return u / lambda;
}

/// Optimal first-price bid when market prices are uniform on [0, l].
inline double ortb_uniform_fp_value(double u, double lambda, double l) {
  detail::require_finite_nonneg(u, "utility");
  detail::require_positive(lambda, "lambda");
  detail::require_positive(l, "l");
  return std::min(u / (2.0 * lambda), l);
}

inline Price bid_truthful(double r, Price v) {
  detail::require_finite_nonneg(r, "ctr");
  return Price::floor_ticks(v.as_double() * r);
}

inline Price bid_linear(double r, Price v, double phi) {
  detail::require_finite_nonneg(r, "ctr");
  detail::require_finite_nonneg(phi, "phi");
  return Price::floor_ticks(phi * v.as_double() * r);
}

inline Price bid_ortb1(double u, double lambda, double l) { return Price::floor_ticks(ortb1_value(u, lambda, l)); }

inline Price bid_ortb2(double u, double lambda) { return Price::floor_ticks(ortb2_value(u, lambda)); }

inline Price bid_ortb_uniform_fp(double u, double lambda, double l) {
  return Price::floor_ticks(ortb_uniform_fp_value(u, lambda, l));
}

/// Bids the value of the conversion-probability increase caused by the ad.
inline Price bid_lift(double theta, double lift, Price v) {
  if (!(lift >= 0.0 && lift <= theta && theta <= 1.0)) throw Error("bid_lift: need 0 <= lift <= theta <= 1");
  return Price::floor_ticks(v.as_double() * lift);
}

namespace strategy {
struct Truthful {
  Price value;
};
struct Linear {
  double phi;
  Price value;
};
struct Ortb1 {
  double lambda;
  double l;
  UtilitySpec utility;
};
struct Ortb2 {
  double lambda;
  UtilitySpec utility;
};
struct OrtbUniformFirstPrice {
  double lambda;
  double l;
  UtilitySpec utility;
};
/// Input to bid() is the estimated lift rather than the CTR.
struct Lift {
  Price value;
};
}  // namespace strategy

class BiddingStrategy {
 public:
  using Kind = std::variant<strategy::Truthful, strategy::Linear, strategy::Ortb1, strategy::Ortb2,
                            strategy::OrtbUniformFirstPrice, strategy::Lift>;

  explicit BiddingStrategy(Kind kind) : kind_(std::move(kind)) { validate(); }

  static BiddingStrategy truthful(Price v) { return BiddingStrategy(strategy::Truthful{v}); }
  static BiddingStrategy linear(double phi, Price v) { return BiddingStrategy(strategy::Linear{phi, v}); }
  static BiddingStrategy ortb1(double lambda, double l, UtilitySpec u = {}) {
    return BiddingStrategy(strategy::Ortb1{lambda, l, u});
  }
  static BiddingStrategy ortb2(double lambda, UtilitySpec u = {}) { return BiddingStrategy(strategy::Ortb2{lambda, u}); }
  static BiddingStrategy ortb_uniform_fp(double lambda, double l, UtilitySpec u = {}) {
    return BiddingStrategy(strategy::OrtbUniformFirstPrice{lambda, l, u});
  }
  static BiddingStrategy lift(Price v) { return BiddingStrategy(strategy::Lift{v}); }

  [[nodiscard]] const Kind& kind() const { return kind_; }

  [[nodiscard]] std::string name() const {
    static constexpr const char* names[] = {"truthful", "linear", "ortb1", "ortb2", "ortb_uniform_fp", "lift"};
    return names[kind_.index()];
  }

  /// Unrounded bid in ticks.
  [[nodiscard]] double bid_value(double r) const {
    detail::require_finite_nonneg(r, "ctr");
    return std::visit(
        [r](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, strategy::Truthful>) {
            return k.value.as_double() * r;
          } else if constexpr (std::is_same_v<T, strategy::Linear>) {
            return k.phi * k.value.as_double() * r;
          } else if constexpr (std::is_same_v<T, strategy::Ortb1>) {
            return ortb1_value(k.utility(r), k.lambda, k.l);
          } else if constexpr (std::is_same_v<T, strategy::Ortb2>) {
            return ortb2_value(k.utility(r), k.lambda);
          } else if constexpr (std::is_same_v<T, strategy::OrtbUniformFirstPrice>) {
            return ortb_uniform_fp_value(k.utility(r), k.lambda, k.l);
          } else {
            return k.value.as_double() * r;
          }
        },
        kind_);
  }

  [[nodiscard]] Price bid(double r) const { return Price::floor_ticks(bid_value(r)); }

 private:
  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, strategy::Linear>) {
            detail::require_finite_nonneg(k.phi, "phi");
          } else if constexpr (std::is_same_v<T, strategy::Ortb1> ||
                               std::is_same_v<T, strategy::OrtbUniformFirstPrice>) {
            detail::require_positive(k.lambda, "lambda");
            detail::require_positive(k.l, "l");
            k.utility.validate();
          } else if constexpr (std::is_same_v<T, strategy::Ortb2>) {
            detail::require_positive(k.lambda, "lambda");
            k.utility.validate();
          }
        },
        kind_);
  }

  Kind kind_;
};

// ---------------------------------------------------------------------------
// Budget multiplier

enum class CostModel {
  first_price,
  second_price,
  /// Second-price cost taken as the raw integral of z p(z) up to the bid,
  /// without conditioning on winning.
  second_price_unnormalized,
};

/// Maps (utility, lambda) to a real-valued bid in ticks.
using BidFamily = std::function<double(double u, double lambda)>;

/// Expected spend of one impression: c(b) w(b).
inline double expected_impression_spend(const WinFunction& win, CostModel cost, double bid) {
  if (!(bid > 0.0)) return 0.0;
  const double w = win(bid);
  if (!(w > 0.0)) return 0.0;
  switch (cost) {
    case CostModel::first_price:
      return bid * w;
    case CostModel::second_price:
    case CostModel::second_price_unnormalized: {
      const double mass = w - win(0.0);
      if (!(mass > 0.0)) return 0.0;
      const double c = expected_cost_second_price(win, bid);
      return cost == CostModel::second_price ? c * w : c * mass * w;
    }
  }
  return 0.0;
}

/// T times the sample mean of c(b(u, lambda)) w(b(u, lambda)).
inline double expected_spend(const WinFunction& win, CostModel cost, std::span<const double> utilities, double volume,
                             const BidFamily& family, double lambda) {
  if (utilities.empty()) throw Error("expected_spend: empty utility sample");
  double total = 0.0;
  for (double u : utilities) total += expected_impression_spend(win, cost, family(u, lambda));
  return volume * total / static_cast<double>(utilities.size());
}

struct LambdaOptions {
  double relative_tolerance = 1e-4;
  double lambda_min = 1e-12;
  double lambda_max = 1e12;
  int max_iterations = 300;
};

struct LambdaSolution {
  double lambda = 0.0;
  double expected_spend = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Even the smallest lambda spends less than the budget.
  bool budget_unattainable = false;
};

/// Finds the lambda at which expected spend equals the budget by bisection
/// on log(lambda); spend decreases in lambda.
inline LambdaSolution solve_lambda(const WinFunction& win, CostModel cost, std::span<const double> utilities,
                                   double budget, double volume, const BidFamily& family,
                                   const LambdaOptions& opt = {}) {
  detail::require_positive(budget, "budget");
  detail::require_positive(volume, "volume");
  if (utilities.empty()) throw Error("solve_lambda: empty utility sample");
  const auto spend = [&](double lambda) { return expected_spend(win, cost, utilities, volume, family, lambda); };
  const auto close = [&](double s) { return std::fabs(s - budget) <= opt.relative_tolerance * budget; };

  LambdaSolution out;
  double lo = opt.lambda_min;
  double hi = opt.lambda_max;
  const double s_lo = spend(lo);
  if (s_lo < budget && !close(s_lo)) {
    out.lambda = lo;
    out.expected_spend = s_lo;
    out.budget_unattainable = true;
    return out;
  }
  const double s_hi = spend(hi);
  if (s_hi > budget && !close(s_hi)) {
    out.lambda = hi;
    out.expected_spend = s_hi;
    return out;
  }
  for (out.iterations = 1; out.iterations <= opt.max_iterations; ++out.iterations) {
    const double mid = std::sqrt(lo * hi);
    const double s = spend(mid);
    out.lambda = mid;
    out.expected_spend = s;
    if (close(s)) {
      out.converged = true;
      return out;
    }
    if (s > budget)
      lo = mid;
    else
      hi = mid;
    if (hi / lo - 1.0 < 1e-15) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay over logged auctions with full information

struct ReplayImpression {
  double ctr = 0.0;
  Price market_price;
  bool click = false;
};

enum class AuctionPricing { first_price, second_price };

struct ReplayOptions {
  std::optional<Price> budget;  // absent means unlimited
  AuctionPricing pricing = AuctionPricing::second_price;
  /// Skip a bid when the remaining budget is below it.
  bool budget_guard = true;
};

struct ReplayResult {
  std::int64_t auctions = 0;
  std::int64_t bids = 0;
  std::int64_t wins = 0;
  std::int64_t clicks = 0;
  Price spend;
  double expected_clicks = 0.0;
};

template <class BidFn>
  requires std::invocable<BidFn&, const ReplayImpression&>
ReplayResult replay(std::span<const ReplayImpression> logs, BidFn&& bid_for, const ReplayOptions& opt = {}) {
  ReplayResult res;
  for (const auto& imp : logs) {
    ++res.auctions;
    const Price bid = bid_for(imp);
    if (bid.ticks() == 0) continue;
    if (opt.budget_guard && opt.budget && *opt.budget - res.spend < bid) continue;
    ++res.bids;
    if (!(imp.market_price < bid)) continue;
    ++res.wins;
    res.spend += opt.pricing == AuctionPricing::first_price ? bid : imp.market_price;
    res.expected_clicks += imp.ctr;
    if (imp.click) ++res.clicks;
  }
  return res;
}

inline ReplayResult replay(std::span<const ReplayImpression> logs, const BiddingStrategy& s,
                           const ReplayOptions& opt = {}) {
  return replay(logs, [&s](const ReplayImpression& imp) { return s.bid(imp.ctr); }, opt);
}

inline std::vector<double> phi_grid(double lo, double hi, int steps) {
  if (steps < 1 || !(hi >= lo) || lo < 0.0) throw Error("phi_grid: bad range");
  std::vector<double> g;
  for (int i = 0; i <= steps; ++i) g.push_back(lo + (hi - lo) * i / steps);
  return g;
}

struct TunedPhi {
  double phi = 0.0;
  ReplayResult result;
};

/// Picks the grid value of phi that maximises replayed clicks while keeping
/// replayed spend within the budget scaled to the log length. The replay
/// runs without the budget guard so that spend reflects the bid level.
inline TunedPhi tune_phi(std::span<const ReplayImpression> logs, std::optional<Price> budget, double volume,
                         Price click_value, std::span<const double> grid,
                         AuctionPricing pricing = AuctionPricing::second_price) {
  if (logs.empty()) throw Error("tune_phi: no training logs");
  if (grid.empty()) throw Error("tune_phi: empty phi grid");
  detail::require_positive(volume, "volume");
  const double scaled =
      budget ? budget->as_double() * static_cast<double>(logs.size()) / volume : std::numeric_limits<double>::infinity();
  ReplayOptions opt;
  opt.pricing = pricing;
  opt.budget_guard = false;
  std::optional<TunedPhi> best;
  for (double phi : grid) {
    const auto s = BiddingStrategy::linear(phi, click_value);
    const auto r = replay(logs, s, opt);
    if (r.spend.as_double() > scaled) continue;
    if (!best || r.clicks >= best->result.clicks) best = TunedPhi{phi, r};
  }
  if (!best) throw Error("tune_phi: every phi on the grid overspends");
  return *best;
}

// ---------------------------------------------------------------------------
// Multi-campaign arbitrage

/// Utility in ticks of every training impression to one campaign; all
/// campaigns share the same impression stream.
struct ArbitrageCampaign {
  std::vector<double> utilities;
};

struct ArbitrageOptions {
  std::vector<Price> candidate_bids;
  /// Upper bound on the variance of total profit; absent means no bound.
  std::optional<double> variance_cap;
  int max_iterations = 100;
  double tolerance = 1e-5;
  double budget_tolerance = 1e-3;
};

struct ArbitrageResult {
  std::vector<double> sampling;
  double cost_multiplier = 1.0;
  std::vector<std::vector<Price>> bids;
  double expected_profit = 0.0;
  double profit_variance = 0.0;
  double expected_cost = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool budget_met = false;
  bool variance_met = true;
};

namespace detail {

struct ArbitrageMarket {
  std::span<const ArbitrageCampaign> campaigns;
  std::vector<double> bids;  // candidate bids in ticks, ascending
  std::vector<double> wins;  // w at each candidate
  double volume;
  double budget;
  std::optional<double> variance_cap;
  std::size_t impressions;
};

inline ArbitrageMarket make_market(std::span<const ArbitrageCampaign> campaigns, const WinFunction& win,
                                   double budget, double volume, const ArbitrageOptions& opt) {
  if (campaigns.empty()) throw Error("arbitrage: need at least one campaign");
  require_positive(budget, "budget");
  require_positive(volume, "volume");
  if (opt.variance_cap) require_positive(*opt.variance_cap, "variance cap");
  if (opt.candidate_bids.empty()) throw Error("arbitrage: no candidate bids");
  const std::size_t n = campaigns.front().utilities.size();
  if (n == 0) throw Error("arbitrage: no training impressions");
  for (const auto& c : campaigns) {
    if (c.utilities.size() != n) throw Error("arbitrage: campaigns must share the impression stream");
    for (double u : c.utilities) require_finite_nonneg(u, "utility");
  }
  ArbitrageMarket m{campaigns, {}, {}, volume, budget, opt.variance_cap, n};
  for (Price p : opt.candidate_bids) m.bids.push_back(p.as_double());
  std::sort(m.bids.begin(), m.bids.end());
  m.bids.erase(std::unique(m.bids.begin(), m.bids.end()), m.bids.end());
  for (double b : m.bids) m.wins.push_back(b > 0.0 ? win(b) : 0.0);
  return m;
}

/// Index of the candidate maximising (u - kappa b) w(b); ties go to the lower bid.
inline std::size_t best_bid(const ArbitrageMarket& m, double u, double kappa) {
  std::size_t best = 0;
  double best_val = (u - kappa * m.bids[0]) * m.wins[0];
  for (std::size_t j = 1; j < m.bids.size(); ++j) {
    const double val = (u - kappa * m.bids[j]) * m.wins[j];
    if (val > best_val + 1e-12 * std::max(1.0, std::fabs(best_val))) {
      best_val = val;
      best = j;
    }
  }
  return best;
}

struct ArbitrageState {
  std::vector<std::vector<std::size_t>> choice;  // campaign x impression
  std::vector<double> mean_profit;               // per impression
  std::vector<double> mean_cost;                 // per impression
  std::vector<std::vector<double>> covariance;   // per impression profit
};

inline ArbitrageState evaluate_bids(const ArbitrageMarket& m, double kappa) {
  const std::size_t k = m.campaigns.size();
  const double n = static_cast<double>(m.impressions);
  ArbitrageState st;
  st.choice.assign(k, std::vector<std::size_t>(m.impressions));
  st.mean_profit.assign(k, 0.0);
  st.mean_cost.assign(k, 0.0);
  std::vector<std::vector<double>> profit(k, std::vector<double>(m.impressions));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t t = 0; t < m.impressions; ++t) {
      const double u = m.campaigns[i].utilities[t];
      const std::size_t j = best_bid(m, u, kappa);
      st.choice[i][t] = j;
      profit[i][t] = (u - m.bids[j]) * m.wins[j];
      st.mean_profit[i] += profit[i][t];
      st.mean_cost[i] += m.bids[j] * m.wins[j];
    }
    st.mean_profit[i] /= n;
    st.mean_cost[i] /= n;
  }
  st.covariance.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      double c = 0.0;
      for (std::size_t t = 0; t < m.impressions; ++t)
        c += (profit[i][t] - st.mean_profit[i]) * (profit[j][t] - st.mean_profit[j]);
      st.covariance[i][j] = st.covariance[j][i] = c / n;
    }
  return st;
}

inline double sampled_cost(const ArbitrageMarket& m, const ArbitrageState& st, std::span<const double> s) {
  double c = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) c += s[i] * st.mean_cost[i];
  return m.volume * c;
}

struct ProfitMoments {
  double mean;
  double variance;
};

inline ProfitMoments profit_moments(const ArbitrageMarket& m, const ArbitrageState& st, std::span<const double> s) {
  double mean = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    mean += s[i] * st.mean_profit[i];
    for (std::size_t j = 0; j < s.size(); ++j) var += s[i] * s[j] * st.covariance[i][j];
  }
  return {m.volume * mean, m.volume * var};
}

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

/// Cost multiplier kappa whose bids spend closest to the budget from below;
/// spend is non-increasing in kappa.
inline double solve_cost_multiplier(const ArbitrageMarket& m, std::span<const double> s) {
  const auto cost = [&](double kappa) { return sampled_cost(m, evaluate_bids(m, kappa), s); };
  double lo = 1e-6;
  double hi = 1e6;
  if (cost(lo) <= m.budget) return lo;
  if (cost(hi) > m.budget) return hi;
  for (int it = 0; it < 100 && hi / lo - 1.0 > 1e-12; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (cost(mid) > m.budget)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

/// Maximises s.m - gamma s'Cs over the simplex by projected gradient
/// ascent; the objective is concave so the result is global.
inline std::vector<double> mean_variance_sampling(const ArbitrageState& st, double gamma, std::vector<double> s) {
  const std::size_t k = s.size();
  const auto value = [&](const std::vector<double>& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      v += x[i] * st.mean_profit[i];
      for (std::size_t j = 0; j < k; ++j) v -= gamma * x[i] * x[j] * st.covariance[i][j];
    }
    return v;
  };
  double fx = value(s);
  double step = 0.5;
  for (int it = 0; it < 5000 && step > 1e-14; ++it) {
    std::vector<double> g(k);
    double norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double cov_s = 0.0;
      for (std::size_t j = 0; j < k; ++j) cov_s += st.covariance[i][j] * s[j];
      g[i] = st.mean_profit[i] - 2.0 * gamma * cov_s;
      norm += g[i] * g[i];
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) break;
    std::vector<double> y(k);
    for (std::size_t i = 0; i < k; ++i) y[i] = s[i] + step * g[i] / norm;
    y = project_simplex(std::move(y));
    const double fy = value(y);
    if (fy > fx) {
      s = std::move(y);
      fx = fy;
      step = std::min(step * 2.0, 1.0);
    } else {
      step *= 0.5;
    }
  }
  return s;
}

/// Sampling step: the most profitable campaign when risk is unbounded,
/// otherwise the mean-variance portfolio with the smallest risk weight that
/// respects the variance cap.
inline std::vector<double> optimise_sampling(const ArbitrageMarket& m, const ArbitrageState& st,
                                             const std::vector<double>& current) {
  const std::size_t k = current.size();
  std::vector<double> vertex(k, 0.0);
  vertex[static_cast<std::size_t>(std::max_element(st.mean_profit.begin(), st.mean_profit.end()) -
                                  st.mean_profit.begin())] = 1.0;
  const auto within_cap = [&](const std::vector<double>& s) {
    return !m.variance_cap || profit_moments(m, st, s).variance <= *m.variance_cap;
  };
  if (within_cap(vertex)) return vertex;
  double hi = 1.0;
  std::vector<double> s_hi = mean_variance_sampling(st, hi, current);
  for (int it = 0; it < 200 && !within_cap(s_hi); ++it) {
    hi *= 4.0;
    s_hi = mean_variance_sampling(st, hi, s_hi);
  }
  if (!within_cap(s_hi)) return s_hi;
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto s_mid = mean_variance_sampling(st, mid, s_hi);
    if (within_cap(s_mid)) {
      hi = mid;
      s_hi = std::move(s_mid);
    } else {
      lo = mid;
    }
  }
  return s_hi;
}

inline ArbitrageResult summarise(const ArbitrageMarket& m, std::vector<double> s, double kappa) {
  const auto st = evaluate_bids(m, kappa);
  ArbitrageResult r;
  const auto pm = profit_moments(m, st, s);
  r.sampling = std::move(s);
  r.cost_multiplier = kappa;
  r.expected_profit = pm.mean;
  r.profit_variance = pm.variance;
  r.expected_cost = sampled_cost(m, st, r.sampling);
  r.objective = pm.mean;
  r.variance_met = !m.variance_cap || pm.variance <= *m.variance_cap * (1.0 + 1e-9);
  for (const auto& row : st.choice) {
    std::vector<Price> bids;
    for (std::size_t j : row) bids.push_back(Price::from_ticks(static_cast<std::int64_t>(m.bids[j])));
    r.bids.push_back(std::move(bids));
  }
  return r;
}

}  // namespace detail

/// Bids for a fixed sampling vector with the cost multiplier set to meet the budget.
inline ArbitrageResult arbitrage_evaluate(std::span<const ArbitrageCampaign> campaigns, const WinFunction& win,
                                          std::span<const double> sampling, double budget, double volume,
                                          const ArbitrageOptions& opt) {
  const auto m = detail::make_market(campaigns, win, budget, volume, opt);
  if (sampling.size() != campaigns.size()) throw Error("arbitrage: sampling size mismatch");
  double total = 0.0;
  for (double x : sampling) {
    if (x < 0.0) throw Error("arbitrage: sampling must be non-negative");
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw Error("arbitrage: sampling must sum to one");
  std::vector<double> s(sampling.begin(), sampling.end());
  const double kappa = detail::solve_cost_multiplier(m, s);
  auto r = detail::summarise(m, std::move(s), kappa);
  r.budget_met = std::fabs(r.expected_cost - budget) <= opt.budget_tolerance * budget;
  return r;
}

/// Alternates between choosing the sampling vector for fixed bids and
/// choosing the bids (through one cost multiplier) for a fixed sampling
/// vector. Returns the best iterate seen.
inline ArbitrageResult arbitrage_em(std::span<const ArbitrageCampaign> campaigns, const WinFunction& win,
                                    double budget, double volume, const ArbitrageOptions& opt) {
  const auto m = detail::make_market(campaigns, win, budget, volume, opt);
  const std::size_t k = campaigns.size();
  std::vector<double> s(k, 1.0 / static_cast<double>(k));
  double kappa = detail::solve_cost_multiplier(m, s);
  std::optional<ArbitrageResult> best;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    s = detail::optimise_sampling(m, detail::evaluate_bids(m, kappa), s);
    kappa = detail::solve_cost_multiplier(m, s);
    auto r = detail::summarise(m, s, kappa);
    r.iterations = it;
    r.budget_met = std::fabs(r.expected_cost - budget) <= opt.budget_tolerance * budget;
    const double obj = r.objective;
    const bool better = !best || (r.variance_met && !best->variance_met) ||
                        (r.variance_met == best->variance_met && obj > best->objective);
    if (better) best = r;
    if (std::isfinite(previous) && std::fabs(obj - previous) <= opt.tolerance * std::max(std::fabs(previous), 1e-300)) {
      best->converged = true;
      best->iterations = it;
      return *best;
    }
    previous = obj;
  }
  best->iterations = opt.max_iterations;
  return *best;
}

}  // namespace rtb
