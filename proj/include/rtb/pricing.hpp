#pragma once

// Publisher reserve prices: payoff, the optimal-auction fixed point, an
// explore/back-off heuristic and a staged explorer over normalised prices.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/landscape.hpp"
#include "rtb/numeric.hpp"

namespace rtb {

/// Seller revenue with reserve alpha given the two highest bids.
inline Price reserve_payoff(Price b1, Price b2, Price alpha) {
  if (b1 < b2) throw Error("reserve_payoff: bids must be sorted b1 >= b2");
  if (alpha > b1) return Price{};
  if (b2 >= alpha) return b2;
  return alpha;
}

inline double reserve_payoff(double b1, double b2, double alpha) {
  if (b1 < b2) throw Error("reserve_payoff: bids must be sorted b1 >= b2");
  if (alpha > b1) return 0.0;
  if (b2 >= alpha) return b2;
  return alpha;
}

/// Bidder value distribution with a density.
struct ValueDistribution {
  std::function<double(double)> cdf;
  std::function<double(double)> pdf;

  static ValueDistribution uniform(double lo, double hi) {
    if (!(hi > lo)) throw Error("ValueDistribution: empty uniform support");
    return {[lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); },
            [lo, hi](double x) { return x >= lo && x <= hi ? 1.0 / (hi - lo) : 0.0; }};
  }
  static ValueDistribution lognormal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw Error("ValueDistribution: sigma must be positive");
    return {[mu, sigma](double x) { return num::lognormal_cdf(x, mu, sigma); },
            [mu, sigma](double x) { return num::lognormal_pdf(x, mu, sigma); }};
  }
};

/// alpha - (1 - F(alpha)) / F'(alpha) - v_P.
inline double reserve_condition(const ValueDistribution& f, double alpha, double publisher_value) {
  const double density = f.pdf(alpha);
  if (!(density > 0.0)) return -std::numeric_limits<double>::infinity();
  return alpha - (1.0 - f.cdf(alpha)) / density - publisher_value;
}

/// Solves alpha = (1 - F(alpha)) / F'(alpha) + v_P by bisection on [lo, hi].
inline double optimal_reserve(const ValueDistribution& f, double publisher_value, double lo, double hi,
                              double tol = 1e-12) {
  const auto g = [&](double a) { return reserve_condition(f, a, publisher_value); };
  const double glo = g(lo);
  const double ghi = g(hi);
  if (std::isnan(glo) || std::isnan(ghi) || (glo > 0.0) == (ghi > 0.0))
    throw Error("optimal_reserve: fixed point not bracketed");
  const auto root = num::bisect(g, lo, hi, tol, 400);
  if (!root) throw Error("optimal_reserve: fixed point not bracketed");
  return *root;
}

// ---------------------------------------------------------------------------
// Explore/back-off heuristic

struct ReserveRecord {
  Price alpha;
  Price b1;
  Price b2;
  Price payoff;
};

struct ReserveState {
  Price alpha;
  std::vector<ReserveRecord> history;
};

struct HeuristicParams {
  double step_up = 1.1;
  /// Fraction of the gap to the last top bid kept after an unsold auction.
  double step_down = 0.5;
};

/// Runs one auction at the current reserve and records it.
inline Price observe_auction(ReserveState& s, Price b1, Price b2) {
  const Price pay = reserve_payoff(b1, b2, s.alpha);
  s.history.push_back({s.alpha, b1, b2, pay});
  return pay;
}

/// After a sale the reserve rises by step_up, capped at the winning bid;
/// after no sale it moves toward the top bid, keeping step_down of the gap.
inline Price heuristic_step(ReserveState& s, const HeuristicParams& p = {}) {
  if (s.history.empty()) throw Error("heuristic_step: no auction observed yet");
  if (!(p.step_up >= 1.0) || !(p.step_down >= 0.0 && p.step_down < 1.0))
    throw Error("heuristic_step: need step_up >= 1 and step_down in [0, 1)");
  const auto& last = s.history.back();
  const double a = last.alpha.as_double();
  const double b1 = last.b1.as_double();
  if (last.b1 >= last.alpha) {
    Price raised = Price::floor_ticks(a * p.step_up);
    if (p.step_up > 1.0 && raised <= last.alpha) raised = Price::from_ticks(last.alpha.ticks() + 1);
    s.alpha = std::min(raised, last.b1);
  } else {
    s.alpha = Price::floor_ticks(b1 + p.step_down * (a - b1));
  }
  return s.alpha;
}

// ---------------------------------------------------------------------------
// Staged explorer over prices normalised to [0, 1]

enum class ReserveEstimator {
  /// Revenue curve from the empirical second-price distribution with the
  /// confidence-set selection rule.
  staged_confidence,
  /// Reserve maximising average revenue on the previous stage's bid pairs.
  empirical_argmax,
};

struct RegretParams {
  double approximation = 0.1;  // a
  double confidence = 0.1;     // delta
  int stage_bound = 20;        // S
  std::int64_t first_stage = 1000;
  int grid = 1000;
  ReserveEstimator estimator = ReserveEstimator::staged_confidence;
  /// Number of i.i.d. bidders used to map the second-price CDF to the
  /// top-bid CDF; 0 keeps the identity map.
  int bidders = 0;

  void validate() const {
    if (!(approximation > 0.0 && approximation <= 1.0)) throw Error("RegretParams: a must be in (0, 1]");
    if (!(confidence > 0.0 && confidence <= 1.0)) throw Error("RegretParams: delta must be in (0, 1]");
    if (stage_bound < 1 || first_stage < 1 || grid < 2) throw Error("RegretParams: bad stage or grid size");
    if (bidders < 0 || bidders == 1) throw Error("RegretParams: bidder count must be 0 or at least 2");
  }
};

/// Auction seen by the explorer: top two bids normalised to [0, 1].
struct NormalisedAuction {
  double b1;
  double b2;
};

class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  explicit EmpiricalCdf(std::vector<double> samples) : xs_(std::move(samples)) {
    std::sort(xs_.begin(), xs_.end());
    prefix_.assign(xs_.size() + 1, 0.0);
    for (std::size_t i = 0; i < xs_.size(); ++i) prefix_[i + 1] = prefix_[i] + xs_[i];
  }

  [[nodiscard]] bool empty() const { return xs_.empty(); }
  [[nodiscard]] std::size_t size() const { return xs_.size(); }

  /// Fraction of samples <= x.
  [[nodiscard]] double operator()(double x) const {
    if (xs_.empty()) return 0.0;
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    return static_cast<double>(it - xs_.begin()) / static_cast<double>(xs_.size());
  }

  [[nodiscard]] double mean() const { return xs_.empty() ? 0.0 : prefix_.back() / static_cast<double>(xs_.size()); }

  /// Integral of the step CDF over [a, b].
  [[nodiscard]] double integral(double a, double b) const {
    if (b <= a || xs_.empty()) return 0.0;
    // Each sample x contributes the length of [max(a, x), b].
    const auto ka = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), a) - xs_.begin());
    const auto kb = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), b) - xs_.begin());
    double s = static_cast<double>(ka) * (b - a);
    if (kb > ka) s += static_cast<double>(kb - ka) * b - (prefix_[kb] - prefix_[ka]);
    return s / static_cast<double>(xs_.size());
  }

 private:
  std::vector<double> xs_;
  std::vector<double> prefix_;
};

struct RegretState {
  int stage = 0;  // completed stages
  std::int64_t stage_length = 0;
  double alpha = 0.0;
  EmpiricalCdf first_stage;  // second prices seen with no reserve
  EmpiricalCdf latest;       // revenues of the latest stage
  std::int64_t empty_candidate_sets = 0;
};

inline RegretState regret_start(const RegretParams& p) {
  p.validate();
  RegretState s;
  s.stage_length = p.first_stage;
  return s;
}

/// Top-bid CDF implied by a second-price CDF value y for n i.i.d. bidders:
/// solves y = n x^(n-1) - (n-1) x^n for x and returns x^n. With n = 0 the
/// map is the identity.
inline double top_bid_cdf(double y, int bidders) {
  if (bidders == 0 || y <= 0.0 || y >= 1.0) return std::clamp(y, 0.0, 1.0);
  const double n = bidders;
  const auto beta = [n, y](double x) { return n * std::pow(x, n - 1.0) - (n - 1.0) * std::pow(x, n) - y; };
  const double x = num::bisect(beta, 0.0, 1.0, 1e-14).value_or(y);
  return std::pow(x, n);
}

/// Estimated revenue of reserve alpha from the second-price distribution.
inline double estimated_revenue(const RegretState& s, const RegretParams& p, double alpha) {
  const double base = s.first_stage.mean() + s.first_stage.integral(0.0, std::min(alpha, s.alpha));
  return base + s.latest.integral(s.alpha, alpha) - alpha * top_bid_cdf(s.latest(alpha), p.bidders);
}

/// Width of the confidence band at alpha after a stage of the given length.
inline double confidence_width(const RegretState& s, const RegretParams& p, double alpha) {
  const double tail = 1.0 - s.latest(alpha);
  if (!(tail > 0.0)) return std::numeric_limits<double>::infinity();
  return alpha * std::sqrt(2.0 / (tail * static_cast<double>(s.stage_length)) *
                           std::log(6.0 * p.stage_bound / p.confidence));
}

/// Closes a stage given the auctions played at the current reserve and
/// returns the reserve for the next stage.
inline double regret_stage(RegretState& s, const RegretParams& p, std::span<const NormalisedAuction> auctions) {
  if (auctions.empty()) throw Error("regret_stage: stage has no auctions");
  std::vector<double> revenues;
  revenues.reserve(auctions.size());
  for (const auto& a : auctions) {
    if (!(a.b1 >= a.b2 && a.b2 >= 0.0 && a.b1 <= 1.0)) throw Error("regret_stage: bids must satisfy 1 >= b1 >= b2 >= 0");
    revenues.push_back(reserve_payoff(a.b1, a.b2, s.alpha));
  }
  if (s.stage == 0) s.first_stage = EmpiricalCdf(revenues);
  s.latest = EmpiricalCdf(revenues);
  s.stage_length = static_cast<std::int64_t>(auctions.size());

  const double lo = s.alpha;
  std::vector<double> grid;
  for (int k = 0; k <= p.grid; ++k) {
    const double a = lo + (1.0 - lo) * k / p.grid;
    grid.push_back(a);
  }
  double next = s.alpha;
  if (p.estimator == ReserveEstimator::empirical_argmax) {
    double best = -1.0;
    for (double a : grid) {
      double rev = 0.0;
      for (const auto& x : auctions) rev += reserve_payoff(x.b1, x.b2, a);
      if (rev > best + 1e-12) {
        best = rev;
        next = a;
      }
    }
  } else {
    const double cap = 1.0 - p.approximation;
    std::optional<double> star;
    double star_value = -std::numeric_limits<double>::infinity();
    for (double a : grid) {
      if (!(s.latest(a) < cap)) continue;
      const double v = estimated_revenue(s, p, a);
      if (v >= star_value) {
        star_value = v;
        star = a;
      }
    }
    std::optional<double> chosen;
    if (star) {
      const double c_star = confidence_width(s, p, *star);
      for (double a : grid) {
        if (!(s.latest(a) <= cap)) continue;
        if (estimated_revenue(s, p, a) >= star_value - 2.0 * c_star - 2.0 * confidence_width(s, p, a)) {
          chosen = a;
          break;
        }
      }
    }
    if (chosen) {
      next = *chosen;
    } else {
      ++s.empty_candidate_sets;
    }
  }
  s.alpha = std::max(next, s.alpha);
  ++s.stage;
  s.stage_length *= 2;
  return s.alpha;
}

struct ExplorerRun {
  double revenue = 0.0;
  std::vector<double> stage_reserves;
};

/// Plays the explorer over a stream of auctions with doubling stages.
inline ExplorerRun run_explorer(std::span<const NormalisedAuction> stream, const RegretParams& p) {
  auto s = regret_start(p);
  ExplorerRun out;
  std::size_t at = 0;
  while (at < stream.size()) {
    const auto len = std::min<std::size_t>(static_cast<std::size_t>(s.stage_length), stream.size() - at);
    const auto stage = stream.subspan(at, len);
    out.stage_reserves.push_back(s.alpha);
    for (const auto& a : stage) out.revenue += reserve_payoff(a.b1, a.b2, s.alpha);
    at += len;
    if (at < stream.size()) regret_stage(s, p, stage);
  }
  return out;
}

/// Best fixed reserve on a grid over [0, 1] in hindsight.
inline std::pair<double, double> best_fixed_reserve(std::span<const NormalisedAuction> stream, int grid) {
  double best_alpha = 0.0;
  double best = -1.0;
  for (int k = 0; k <= grid; ++k) {
    const double a = static_cast<double>(k) / grid;
    double rev = 0.0;
    for (const auto& x : stream) rev += reserve_payoff(x.b1, x.b2, a);
    if (rev > best) {
      best = rev;
      best_alpha = a;
    }
  }
  return {best_alpha, best};
}

// ---------------------------------------------------------------------------
// Goodness of fit for bid distributions

struct ChiSquaredFit {
  std::string hypothesis;
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

/// Pearson chi-squared test against a fully specified CDF using bins of
/// equal probability; fitted_parameters reduces the degrees of freedom.
inline ChiSquaredFit chi_squared_test(std::span<const double> samples, const std::function<double(double)>& cdf,
                                      int bins, int fitted_parameters, std::string hypothesis) {
  if (bins < 2) throw Error("chi_squared_test: need at least two bins");
  if (samples.size() < static_cast<std::size_t>(5 * bins)) throw Error("chi_squared_test: too few samples for bins");
  const int dof = bins - 1 - fitted_parameters;
  if (dof < 1) throw Error("chi_squared_test: no degrees of freedom left");
  std::vector<double> observed(static_cast<std::size_t>(bins), 0.0);
  for (double x : samples) {
    const double u = std::clamp(cdf(x), 0.0, 1.0);
    const auto k = std::min(static_cast<std::size_t>(u * bins), static_cast<std::size_t>(bins - 1));
    observed[k] += 1.0;
  }
  const double expected = static_cast<double>(samples.size()) / bins;
  ChiSquaredFit out;
  out.hypothesis = std::move(hypothesis);
  for (double o : observed) out.statistic += (o - expected) * (o - expected) / expected;
  out.degrees_of_freedom = dof;
  out.p_value = num::chi_squared_sf(out.statistic, dof);
  return out;
}

/// Tests the uniform and log-normal hypotheses with parameters fitted to the sample.
inline std::vector<ChiSquaredFit> bid_distribution_report(std::span<const double> bids, int bins = 10) {
  if (bids.empty()) throw Error("bid_distribution_report: no bids");
  const auto [mn, mx] = std::minmax_element(bids.begin(), bids.end());
  std::vector<ChiSquaredFit> out;
  if (*mx > *mn) {
    const double lo = *mn;
    const double hi = *mx;
    out.push_back(chi_squared_test(bids, [lo, hi](double x) { return (x - lo) / (hi - lo); }, bins, 2, "uniform"));
  }
  std::vector<double> positive;
  for (double b : bids)
    if (b > 0.0) positive.push_back(b);
  if (positive.size() == bids.size() && positive.size() > 1) {
    const auto fit = fit_lognormal_sample(positive);
    out.push_back(chi_squared_test(
        bids, [fit](double x) { return num::lognormal_cdf(x, fit.mu, fit.sigma); }, bins, 2, "lognormal"));
  }
  return out;
}

}  // namespace rtb
