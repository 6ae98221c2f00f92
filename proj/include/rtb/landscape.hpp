#pragma once

// Bid landscape: winning probability, market price density and expected cost
// estimated from (possibly censored) bid logs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/numeric.hpp"

namespace rtb {

/// Exact fraction with overflow-checked 64-bit terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {
    if (den_ == 0) throw Error("Rational: zero denominator");
    normalize();
  }

  [[nodiscard]] std::int64_t num() const { return num_; }
  [[nodiscard]] std::int64_t den() const { return den_; }
  [[nodiscard]] double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(Rational a, Rational b) {
    return Rational(add(mul(a.num_, b.den_), mul(b.num_, a.den_)), mul(a.den_, b.den_));
  }
  friend Rational operator-(Rational a, Rational b) { return a + Rational(-b.num_, b.den_); }
  friend Rational operator*(Rational a, Rational b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    const std::int64_t n1 = g1 ? a.num_ / g1 : a.num_;
    const std::int64_t d2 = g1 ? b.den_ / g1 : b.den_;
    const std::int64_t n2 = g2 ? b.num_ / g2 : b.num_;
    const std::int64_t d1 = g2 ? a.den_ / g2 : a.den_;
    return Rational(mul(n1, n2), mul(d1, d2));
  }
  friend Rational operator/(Rational a, Rational b) {
    if (b.num_ == 0) throw Error("Rational: division by zero");
    return a * Rational(b.den_, b.num_);
  }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    if (l < r) return std::strong_ordering::less;
    if (l > r) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  static std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw Error("Rational: overflow");
    return out;
  }
  static std::int64_t add(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw Error("Rational: overflow");
    return out;
  }
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

namespace detail {
inline void require_logs(std::span<const BidLogRecord> logs) {
  if (logs.empty()) throw Error("landscape: no data");
}
inline std::int64_t count_wins(std::span<const BidLogRecord> logs) {
  return std::count_if(logs.begin(), logs.end(), [](const BidLogRecord& r) { return r.won(); });
}
}  // namespace detail

/// Fraction of observed winning prices strictly below `bid`. Only won
/// auctions reveal a price, so the denominator is the number of wins.
inline Rational win_prob_counting_exact(std::span<const BidLogRecord> logs, Price bid) {
  detail::require_logs(logs);
  const std::int64_t wins = detail::count_wins(logs);
  if (wins == 0) throw Error("landscape: no winning records to count");
  std::int64_t below = 0;
  for (const auto& r : logs)
    if (r.won() && *r.market_price() < bid) ++below;
  return Rational(below, wins);
}

inline double win_prob_counting(std::span<const BidLogRecord> logs, Price bid) {
  return win_prob_counting_exact(logs, bid).to_double();
}

struct SurvivalRow {
  Price bid;             // level b_j
  std::int64_t deaths;   // wins whose market price is exactly b_j - 1
  std::int64_t at_risk;  // cases that cannot be won by bidding b_j - 1

  friend bool operator==(const SurvivalRow&, const SurvivalRow&) = default;
};

class SurvivalTable {
 public:
  SurvivalTable() = default;
  explicit SurvivalTable(std::vector<SurvivalRow> rows) : rows_(std::move(rows)) { validate(); }

  [[nodiscard]] const std::vector<SurvivalRow>& rows() const { return rows_; }

  void validate() const {
    for (std::size_t j = 0; j < rows_.size(); ++j) {
      const auto& r = rows_[j];
      if (r.deaths < 0 || r.deaths > r.at_risk) throw Error("SurvivalTable: need 0 <= d_j <= n_j");
      if (j > 0) {
        if (r.bid <= rows_[j - 1].bid) throw Error("SurvivalTable: bid levels must increase");
        if (r.at_risk > rows_[j - 1].at_risk) throw Error("SurvivalTable: n_j must be non-increasing");
      }
    }
  }

  /// Probability of losing with `bid` as an exact fraction.
  [[nodiscard]] Rational lose_prob_exact(Price bid) const {
    Rational survive(1);
    for (const auto& r : rows_) {
      if (r.bid > bid) break;
      if (r.at_risk == 0) continue;
      survive = survive * Rational(r.at_risk - r.deaths, r.at_risk);
    }
    return survive;
  }

  /// Same product for a real-valued bid: a death at price b_j - 1 counts when
  /// b_j - 1 < bid.
  [[nodiscard]] double lose_prob(double bid) const {
    double survive = 1.0;
    for (const auto& r : rows_) {
      if (r.bid.as_double() - 1.0 >= bid) break;
      if (r.at_risk == 0) continue;
      survive *= static_cast<double>(r.at_risk - r.deaths) / static_cast<double>(r.at_risk);
    }
    return survive;
  }

 private:
  std::vector<SurvivalRow> rows_;
};

/// Bid levels are the distinct bids together with every observed winning
/// price plus one. At each level b_j:
///   d_j = wins with market price b_j - 1
///   n_j = wins with market price >= b_j - 1 plus losses with bid >= b_j
inline SurvivalTable build_survival_table(std::span<const BidLogRecord> logs) {
  detail::require_logs(logs);
  std::vector<std::int64_t> levels;
  for (const auto& r : logs) {
    levels.push_back(r.bid().ticks());
    if (r.won()) levels.push_back(r.market_price()->ticks() + 1);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<SurvivalRow> rows;
  rows.reserve(levels.size());
  for (const std::int64_t b : levels) {
    SurvivalRow row{Price::from_ticks(b), 0, 0};
    for (const auto& r : logs) {
      if (r.won()) {
        const std::int64_t z = r.market_price()->ticks();
        if (z == b - 1) ++row.deaths;
        if (z >= b - 1) ++row.at_risk;
      } else if (r.bid().ticks() >= b) {
        ++row.at_risk;
      }
    }
    rows.push_back(row);
  }
  return SurvivalTable(std::move(rows));
}

/// w(b) = 1 - prod over levels b_j <= b of (n_j - d_j)/n_j. Bids below the
/// first level give 0; bids above the last level give the table maximum.
inline Rational win_prob_km_exact(const SurvivalTable& table, Price bid) {
  return Rational(1) - table.lose_prob_exact(bid);
}

inline double win_prob_km(const SurvivalTable& table, Price bid) { return win_prob_km_exact(table, bid).to_double(); }

inline double win_prob_parametric(double l, double bid) {
  if (!(l > 0.0)) throw Error("win_prob_parametric: l must be positive");
  if (bid <= 0.0) return 0.0;
  return bid / (bid + l);
}
inline double win_prob_parametric(double l, Price bid) { return win_prob_parametric(l, bid.as_double()); }

struct LognormalSample {
  std::string key;
  double mu = 0.0;
  double sigma = 1.0;
  double weight = 1.0;
};

inline constexpr double kMinLognormalSigma = 1e-6;

/// Moment-matched lognormal: sigma^2 = ln(1 + Var/E^2), mu = ln E - sigma^2/2.
inline LognormalSample fit_lognormal_sample(std::span<const double> prices, std::string key = {}) {
  if (prices.size() < 2) throw Error("fit_lognormal_sample: need at least two prices");
  double sum = 0.0;
  for (double p : prices) {
    if (!(p > 0.0)) throw Error("fit_lognormal_sample: prices must be positive");
    sum += p;
  }
  const double n = static_cast<double>(prices.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double p : prices) ss += (p - mean) * (p - mean);
  const double var = ss / (n - 1.0);
  const double s2 = std::log1p(var / (mean * mean));
  LognormalSample out;
  out.key = std::move(key);
  out.mu = std::log(mean) - 0.5 * s2;
  out.sigma = std::max(std::sqrt(s2), kMinLognormalSigma);
  return out;
}

inline void check_mixture(std::span<const LognormalSample> samples) {
  if (samples.empty()) throw Error("lognormal mixture: no samples");
  double total = 0.0;
  for (const auto& s : samples) {
    if (!(s.sigma > 0.0)) throw Error("lognormal mixture: sigma must be positive");
    if (s.weight < 0.0) throw Error("lognormal mixture: negative weight");
    total += s.weight;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw Error("lognormal mixture: weights must sum to 1");
}

inline double campaign_price_density(std::span<const LognormalSample> samples, double z) {
  check_mixture(samples);
  double out = 0.0;
  for (const auto& s : samples) out += s.weight * num::lognormal_pdf(z, s.mu, s.sigma);
  return out;
}

inline double campaign_price_cdf(std::span<const LognormalSample> samples, double z) {
  check_mixture(samples);
  double out = 0.0;
  for (const auto& s : samples) out += s.weight * num::lognormal_cdf(z, s.mu, s.sigma);
  return out;
}

// ---------------------------------------------------------------------------
// Censored linear regression of the market price.

struct CensoredWon {
  std::vector<double> x;
  double price;
};
struct CensoredLost {
  std::vector<double> x;
  double bid;
};

namespace detail {
inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("censored regression: feature dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace detail

/// -sum_W log phi((z - b.x)/s) - sum_L log Phi((b.x - bid)/s)
inline double censored_nll(std::span<const double> beta, std::span<const CensoredWon> won,
                           std::span<const CensoredLost> lost, double sigma) {
  if (!(sigma > 0.0)) throw Error("censored regression: sigma must be positive");
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double nll = 0.0;
  for (const auto& w : won) {
    const double t = (w.price - detail::dot(beta, w.x)) / sigma;
    nll += half_log_2pi + 0.5 * t * t;
  }
  for (const auto& l : lost) nll -= num::log_normal_cdf((detail::dot(beta, l.x) - l.bid) / sigma);
  return nll;
}

inline std::vector<double> censored_nll_gradient(std::span<const double> beta, std::span<const CensoredWon> won,
                                                 std::span<const CensoredLost> lost, double sigma) {
  std::vector<double> g(beta.size(), 0.0);
  for (const auto& w : won) {
    const double t = (w.price - detail::dot(beta, w.x)) / sigma;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= t * w.x[i] / sigma;
  }
  for (const auto& l : lost) {
    const double s = (detail::dot(beta, l.x) - l.bid) / sigma;
    const double m = num::inverse_mills(s);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= m * l.x[i] / sigma;
  }
  return g;
}

struct CensoredFitOptions {
  double sigma = 1.0;
  int max_iterations = 2000;
  double tolerance = 1e-10;  // relative objective change
  double initial_step = 1.0;
};

struct CensoredFit {
  std::vector<double> beta;
  std::vector<double> objective;  // one entry per accepted iterate
  int iterations = 0;
};

/// Full-batch gradient descent with Armijo backtracking.
inline CensoredFit fit_censored_regression(std::span<const CensoredWon> won, std::span<const CensoredLost> lost,
                                           const CensoredFitOptions& opt = {}) {
  if (!(opt.sigma > 0.0)) throw Error("censored regression: sigma must be positive");
  std::size_t dim = 0;
  if (!won.empty())
    dim = won.front().x.size();
  else if (!lost.empty())
    dim = lost.front().x.size();
  else
    throw Error("censored regression: no data");

  CensoredFit fit;
  fit.beta.assign(dim, 0.0);
  double f = censored_nll(fit.beta, won, lost, opt.sigma);
  fit.objective.push_back(f);
  const double scale = 1.0 / static_cast<double>(won.size() + lost.size());
  double step = opt.initial_step;

  for (int it = 1; it <= opt.max_iterations; ++it) {
    const auto g = censored_nll_gradient(fit.beta, won, lost, opt.sigma);
    double gnorm2 = 0.0;
    for (double v : g) gnorm2 += v * v;
    if (!std::isfinite(gnorm2) || !std::isfinite(f))
      throw Error("censored regression diverged at iteration " + std::to_string(it));
    if (gnorm2 * scale * scale < 1e-24) break;

    std::vector<double> trial(dim);
    double f_trial = f;
    bool accepted = false;
    step = std::min(step * 2.0, 1e6);
    for (int k = 0; k < 60; ++k) {
      for (std::size_t i = 0; i < dim; ++i) trial[i] = fit.beta[i] - step * scale * g[i];
      f_trial = censored_nll(trial, won, lost, opt.sigma);
      if (std::isfinite(f_trial) && f_trial <= f - 1e-4 * step * scale * gnorm2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    fit.iterations = it;
    if (!accepted) break;
    const double change = std::fabs(f - f_trial) / std::max(1.0, std::fabs(f));
    fit.beta = trial;
    f = f_trial;
    fit.objective.push_back(f);
    if (change < opt.tolerance) break;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Winning functions.

namespace win {
struct Counting {
  std::vector<double> prices;  // observed winning prices, ascending
};
struct KaplanMeier {
  SurvivalTable table;
};
struct Parametric {
  double l;  // w(b) = b / (b + l)
};
struct Uniform {
  double upper;  // market price uniform on [0, upper]
};
struct LognormalMixture {
  std::vector<LognormalSample> samples;
};
struct CensoredLinear {
  double mean;  // predicted market price b.x
  double sigma;
};
}  // namespace win

/// A market-price model exposing w(b) = P(z < b) over real-valued bids in ticks.
class WinFunction {
 public:
  using Kind = std::variant<win::Counting, win::KaplanMeier, win::Parametric, win::Uniform, win::LognormalMixture,
                            win::CensoredLinear>;

  explicit WinFunction(Kind kind) : kind_(std::move(kind)) { validate(); }

  static WinFunction counting(std::span<const BidLogRecord> logs) {
    detail::require_logs(logs);
    win::Counting c;
    for (const auto& r : logs)
      if (r.won()) c.prices.push_back(r.market_price()->as_double());
    if (c.prices.empty()) throw Error("landscape: no winning records to count");
    std::sort(c.prices.begin(), c.prices.end());
    return WinFunction(std::move(c));
  }
  static WinFunction kaplan_meier(SurvivalTable table) { return WinFunction(win::KaplanMeier{std::move(table)}); }
  static WinFunction parametric(double l) { return WinFunction(win::Parametric{l}); }
  static WinFunction uniform(double upper) { return WinFunction(win::Uniform{upper}); }
  static WinFunction lognormal_mixture(std::vector<LognormalSample> s) {
    return WinFunction(win::LognormalMixture{std::move(s)});
  }
  static WinFunction censored_linear(double mean, double sigma) { return WinFunction(win::CensoredLinear{mean, sigma}); }

  [[nodiscard]] const Kind& kind() const { return kind_; }

  [[nodiscard]] std::string name() const {
    static constexpr const char* names[] = {"counting", "kaplan_meier", "parametric",
                                            "uniform", "lognormal_mixture", "censored_linear"};
    return names[kind_.index()];
  }

  [[nodiscard]] bool discrete() const {
    return std::holds_alternative<win::Counting>(kind_) || std::holds_alternative<win::KaplanMeier>(kind_);
  }

  /// P(z < bid).
  [[nodiscard]] double operator()(double bid) const {
    return std::visit(
        [bid](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, win::Counting>) {
            const auto it = std::lower_bound(k.prices.begin(), k.prices.end(), bid);
            return static_cast<double>(it - k.prices.begin()) / static_cast<double>(k.prices.size());
          } else if constexpr (std::is_same_v<T, win::KaplanMeier>) {
            return 1.0 - k.table.lose_prob(bid);
          } else if constexpr (std::is_same_v<T, win::Parametric>) {
            return win_prob_parametric(k.l, bid);
          } else if constexpr (std::is_same_v<T, win::Uniform>) {
            return std::clamp(bid / k.upper, 0.0, 1.0);
          } else if constexpr (std::is_same_v<T, win::LognormalMixture>) {
            return campaign_price_cdf(k.samples, bid);
          } else {
            return num::normal_cdf((bid - k.mean) / k.sigma);
          }
        },
        kind_);
  }

  [[nodiscard]] double operator()(Price bid) const { return (*this)(bid.as_double()); }

  /// Atoms (price, probability) of a discrete market-price distribution.
  [[nodiscard]] std::vector<std::pair<double, double>> mass_points() const {
    std::vector<std::pair<double, double>> out;
    if (const auto* c = std::get_if<win::Counting>(&kind_)) {
      const double m = 1.0 / static_cast<double>(c->prices.size());
      for (double p : c->prices) {
        if (!out.empty() && out.back().first == p)
          out.back().second += m;
        else
          out.emplace_back(p, m);
      }
    } else if (const auto* km = std::get_if<win::KaplanMeier>(&kind_)) {
      double survive = 1.0;
      for (const auto& r : km->table.rows()) {
        if (r.at_risk == 0) continue;
        const double next = survive * static_cast<double>(r.at_risk - r.deaths) / static_cast<double>(r.at_risk);
        if (survive - next > 0.0) out.emplace_back(r.bid.as_double() - 1.0, survive - next);
        survive = next;
      }
    } else {
      throw Error("WinFunction: continuous kinds have no mass points");
    }
    return out;
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, win::Counting>) {
            if (k.prices.empty()) throw Error("WinFunction: counting needs observed prices");
          } else if constexpr (std::is_same_v<T, win::KaplanMeier>) {
            k.table.validate();
          } else if constexpr (std::is_same_v<T, win::Parametric>) {
            if (!(k.l > 0.0)) throw Error("WinFunction: parametric l must be positive");
          } else if constexpr (std::is_same_v<T, win::Uniform>) {
            if (!(k.upper > 0.0)) throw Error("WinFunction: uniform upper bound must be positive");
          } else if constexpr (std::is_same_v<T, win::LognormalMixture>) {
            check_mixture(k.samples);
          } else {
            if (!(k.sigma > 0.0)) throw Error("WinFunction: sigma must be positive");
          }
        },
        kind_);
  }

  Kind kind_;
};

/// E[z | z < b] restricted to non-negative prices. Discrete kinds sum over
/// their atoms; continuous kinds integrate by parts: b F(b) - int_0^b F.
inline double expected_cost_second_price(const WinFunction& w, double bid) {
  if (w.discrete()) {
    double mass = 0.0;
    double weighted = 0.0;
    for (const auto& [z, m] : w.mass_points()) {
      if (z >= bid) break;
      mass += m;
      weighted += z * m;
    }
    if (!(mass > 0.0)) throw Error("expected_cost_second_price: no win mass below bid");
    return weighted / mass;
  }
  if (!(bid > 0.0)) throw Error("expected_cost_second_price: no win mass below bid");
  if (const auto* u = std::get_if<win::Uniform>(&w.kind())) return bid <= u->upper ? bid / 2.0 : u->upper / 2.0;
  if (const auto* p = std::get_if<win::Parametric>(&w.kind())) {
    const double area = bid - p->l * std::log1p(bid / p->l);
    const double fb = bid / (bid + p->l);
    return std::clamp((bid * fb - area) / fb, 0.0, bid);
  }
  const double f0 = w(0.0);
  const double fb = w(bid);
  const double mass = fb - f0;
  if (!(mass > 0.0)) throw Error("expected_cost_second_price: no win mass below bid");
  const double area = num::integrate([&w, f0](double t) { return w(t) - f0; }, 0.0, bid, 1e-9 * std::max(1.0, bid));
  return std::clamp((bid * mass - area) / mass, 0.0, bid);
}

inline double expected_cost_second_price(const WinFunction& w, Price bid) {
  return expected_cost_second_price(w, bid.as_double());
}

/// Exact conditional mean for the Kaplan-Meier kind.
inline Rational expected_cost_km_exact(const SurvivalTable& table, Price bid) {
  Rational survive(1);
  Rational mass(0);
  Rational weighted(0);
  for (const auto& r : table.rows()) {
    if (r.bid > bid) break;
    if (r.at_risk == 0) continue;
    const Rational next = survive * Rational(r.at_risk - r.deaths, r.at_risk);
    const Rational m = survive - next;
    mass = mass + m;
    weighted = weighted + m * Rational(r.bid.ticks() - 1);
    survive = next;
  }
  if (mass == Rational(0)) throw Error("expected_cost_second_price: no win mass below bid");
  return weighted / mass;
}

}  // namespace rtb
