#pragma once

// Multi-touch conversion attribution and ROI-driven budget allocation.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/linear.hpp"
#include "rtb/random.hpp"

namespace rtb {

using ChannelId = std::uint32_t;
using ChannelMask = std::uint32_t;

struct Touch {
  ChannelId channel = 0;
  std::int64_t timestamp_ms = 0;
  friend bool operator==(const Touch&, const Touch&) = default;
};

struct TouchpointPath {
  std::string user;
  std::vector<Touch> events;
  bool converted = false;
  Price value;

  void validate(std::size_t channels) const {
    for (std::size_t k = 0; k < events.size(); ++k) {
      if (events[k].channel >= channels) throw Error("TouchpointPath: unknown channel " + std::to_string(events[k].channel));
      if (k > 0 && events[k].timestamp_ms < events[k - 1].timestamp_ms)
        throw Error("TouchpointPath: timestamps must be non-decreasing");
    }
    if (value.ticks() < 0) throw Error("TouchpointPath: negative conversion value");
  }

  /// Channels touched at least once.
  [[nodiscard]] ChannelMask mask() const {
    ChannelMask m = 0;
    for (const auto& e : events) m |= ChannelMask{1} << e.channel;
    return m;
  }
};

// ---------------------------------------------------------------------------
// Rule-based credit

enum class CreditRule { last, first, linear, time_decay, position, custom, exponential_decay };

struct CreditModel {
  CreditRule rule = CreditRule::last;
  std::vector<double> weights;  // custom
  double half_life_ms = 0.0;    // exponential_decay

  static CreditModel last() { return {CreditRule::last, {}, 0.0}; }
  static CreditModel first() { return {CreditRule::first, {}, 0.0}; }
  static CreditModel linear() { return {CreditRule::linear, {}, 0.0}; }
  static CreditModel time_decay() { return {CreditRule::time_decay, {}, 0.0}; }
  static CreditModel position() { return {CreditRule::position, {}, 0.0}; }
  static CreditModel custom(std::vector<double> w) { return {CreditRule::custom, std::move(w), 0.0}; }
  static CreditModel exponential_decay(double half_life_ms) {
    return {CreditRule::exponential_decay, {}, half_life_ms};
  }
};

inline const char* credit_rule_name(CreditRule r) {
  switch (r) {
    case CreditRule::last: return "last";
    case CreditRule::first: return "first";
    case CreditRule::linear: return "linear";
    case CreditRule::time_decay: return "time_decay";
    case CreditRule::position: return "position";
    case CreditRule::custom: return "custom";
    case CreditRule::exponential_decay: return "exponential_decay";
  }
  return "?";
}

/// Credit per touchpoint, in path order. Sums to one.
inline std::vector<double> heuristic_credit(const TouchpointPath& path, const CreditModel& model) {
  if (!path.converted) throw Error("heuristic_credit: path did not convert");
  const std::size_t n = path.events.size();
  if (n == 0) throw Error("heuristic_credit: empty path");
  std::vector<double> c(n, 0.0);
  switch (model.rule) {
    case CreditRule::last: c.back() = 1.0; return c;
    case CreditRule::first: c.front() = 1.0; return c;
    case CreditRule::linear: std::fill(c.begin(), c.end(), 1.0 / static_cast<double>(n)); return c;
    case CreditRule::time_decay: {
      const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
      for (std::size_t k = 0; k < n; ++k) c[k] = static_cast<double>(k + 1) / total;
      return c;
    }
    case CreditRule::position: {
      if (n == 1) {
        c[0] = 1.0;
      } else if (n == 2) {
        c[0] = c[1] = 0.5;
      } else {
        c.front() = c.back() = 0.4;
        for (std::size_t k = 1; k + 1 < n; ++k) c[k] = 0.2 / static_cast<double>(n - 2);
      }
      return c;
    }
    case CreditRule::custom: {
      if (model.weights.size() != n) throw Error("heuristic_credit: custom weights must match the path length");
      double s = 0.0;
      for (double w : model.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error("heuristic_credit: custom weights must be finite and >= 0");
        s += w;
      }
      if (!(s > 0.0)) throw Error("heuristic_credit: custom weights sum to zero");
      for (std::size_t k = 0; k < n; ++k) c[k] = model.weights[k] / s;
      return c;
    }
    case CreditRule::exponential_decay: {
      if (!(model.half_life_ms > 0.0)) throw Error("heuristic_credit: half life must be positive");
      const auto t_end = path.events.back().timestamp_ms;
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        c[k] = std::exp2(-static_cast<double>(t_end - path.events[k].timestamp_ms) / model.half_life_ms);
        s += c[k];
      }
      for (double& x : c) x /= s;
      return c;
    }
  }
  throw Error("heuristic_credit: unknown rule");
}

/// Sums touchpoint credit per channel.
inline std::vector<double> channel_credit(const TouchpointPath& path, std::span<const double> touch_credit,
                                          std::size_t channels) {
  if (touch_credit.size() != path.events.size()) throw Error("channel_credit: size mismatch");
  std::vector<double> out(channels, 0.0);
  for (std::size_t k = 0; k < touch_credit.size(); ++k) {
    if (path.events[k].channel >= channels) throw Error("channel_credit: unknown channel");
    out[path.events[k].channel] += touch_credit[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shapley values

inline constexpr std::size_t kMaxExactShapleyChannels = 20;

/// Exact Shapley values for a coalition value function over channel masks.
inline std::vector<double> shapley_values(std::size_t channels, const std::function<double(ChannelMask)>& value) {
  if (channels == 0) throw Error("shapley_values: no channels");
  if (channels > kMaxExactShapleyChannels) throw Error("shapley_values: too many channels for exact enumeration");
  const std::size_t subsets = std::size_t{1} << channels;
  std::vector<double> v(subsets);
  for (std::size_t m = 0; m < subsets; ++m) v[m] = value(static_cast<ChannelMask>(m));

  // weight[s] = s! (n - s - 1)! / n!
  std::vector<double> weight(channels);
  for (std::size_t s = 0; s < channels; ++s)
    weight[s] = std::exp(std::lgamma(static_cast<double>(s + 1)) + std::lgamma(static_cast<double>(channels - s)) -
                         std::lgamma(static_cast<double>(channels + 1)));

  std::vector<double> out(channels, 0.0);
  for (std::size_t k = 0; k < channels; ++k) {
    const std::size_t bit = std::size_t{1} << k;
    for (std::size_t m = 0; m < subsets; ++m) {
      if (m & bit) continue;
      out[k] += weight[static_cast<std::size_t>(std::popcount(m))] * (v[m | bit] - v[m]);
    }
  }
  return out;
}

inline std::vector<double> shapley_values(std::span<const double> coalition_values) {
  const std::size_t n = coalition_values.size();
  if (n < 2 || !std::has_single_bit(n)) throw Error("shapley_values: need 2^channels coalition values");
  const auto channels = static_cast<std::size_t>(std::countr_zero(n));
  return shapley_values(channels, [&](ChannelMask m) { return coalition_values[m]; });
}

/// Monte-Carlo estimate by sampling channel orderings.
inline std::vector<double> shapley_sampled(std::size_t channels, const std::function<double(ChannelMask)>& value,
                                           std::size_t permutations, Rng& rng) {
  if (channels == 0 || channels > 32) throw Error("shapley_sampled: channel count must be in [1, 32]");
  if (permutations == 0) throw Error("shapley_sampled: need at least one permutation");
  std::vector<double> out(channels, 0.0);
  std::vector<ChannelId> order(channels);
  std::iota(order.begin(), order.end(), ChannelId{0});
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = channels - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
    ChannelMask m = 0;
    double prev = value(m);
    for (auto k : order) {
      m |= ChannelMask{1} << k;
      const double cur = value(m);
      out[k] += cur - prev;
      prev = cur;
    }
  }
  for (double& x : out) x /= static_cast<double>(permutations);
  return out;
}

struct CoalitionRates {
  std::vector<double> rate;             // indexed by channel mask
  std::vector<std::int64_t> users;      // support per mask
  std::size_t unsupported = 0;          // masks with no users, valued at 0
};

/// Empirical conversion rate among users whose distinct channel set is
/// exactly each mask.
inline CoalitionRates coalition_rates(std::span<const TouchpointPath> paths, std::size_t channels) {
  if (channels == 0 || channels > kMaxExactShapleyChannels) throw Error("coalition_rates: bad channel count");
  const std::size_t subsets = std::size_t{1} << channels;
  CoalitionRates r{std::vector<double>(subsets, 0.0), std::vector<std::int64_t>(subsets, 0), 0};
  std::vector<std::int64_t> conv(subsets, 0);
  for (const auto& p : paths) {
    p.validate(channels);
    const auto m = p.mask();
    ++r.users[m];
    conv[m] += p.converted ? 1 : 0;
  }
  for (std::size_t m = 0; m < subsets; ++m) {
    if (r.users[m] == 0) {
      ++r.unsupported;
      continue;
    }
    r.rate[m] = static_cast<double>(conv[m]) / static_cast<double>(r.users[m]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Count-based probabilistic model

struct ChannelStats {
  std::size_t channels = 0;
  std::vector<std::int64_t> pos, neg;            // per channel
  std::vector<std::int64_t> pair_pos, pair_neg;  // channels x channels, row-major

  explicit ChannelStats(std::size_t n = 0)
      : channels(n), pos(n, 0), neg(n, 0), pair_pos(n * n, 0), pair_neg(n * n, 0) {}

  void add(const TouchpointPath& p) {
    p.validate(channels);
    const auto m = p.mask();
    auto& single = p.converted ? pos : neg;
    auto& pair = p.converted ? pair_pos : pair_neg;
    for (std::size_t i = 0; i < channels; ++i) {
      if (!(m >> i & 1U)) continue;
      ++single[i];
      for (std::size_t j = 0; j < channels; ++j)
        if (j != i && (m >> j & 1U)) ++pair[i * channels + j];
    }
  }

  ChannelStats& merge(const ChannelStats& o) {
    if (o.channels != channels) throw Error("ChannelStats::merge: channel count mismatch");
    auto add_all = [](std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
      for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    };
    add_all(pos, o.pos);
    add_all(neg, o.neg);
    add_all(pair_pos, o.pair_pos);
    add_all(pair_neg, o.pair_neg);
    return *this;
  }

  [[nodiscard]] std::optional<double> rate(std::size_t i) const {
    const auto d = pos.at(i) + neg.at(i);
    if (d == 0) return std::nullopt;
    return static_cast<double>(pos[i]) / static_cast<double>(d);
  }
  [[nodiscard]] std::optional<double> rate(std::size_t i, std::size_t j) const {
    const auto d = pair_pos.at(i * channels + j) + pair_neg.at(i * channels + j);
    if (d == 0) return std::nullopt;
    return static_cast<double>(pair_pos[i * channels + j]) / static_cast<double>(d);
  }
};

inline ChannelStats channel_stats(std::span<const TouchpointPath> paths, std::size_t channels) {
  ChannelStats s(channels);
  for (const auto& p : paths) s.add(p);
  return s;
}

struct ChannelValue {
  double value = 0.0;
  std::size_t excluded = 0;  // partner channels left out for lack of data
};

/// Half the channel's own conversion rate plus half the mean pairwise lift
/// over the other channels.
inline ChannelValue shao_value(const ChannelStats& s, std::size_t i) {
  if (i >= s.channels) throw Error("shao_value: unknown channel");
  const auto own = s.rate(i);
  if (!own) throw Error("shao_value: channel " + std::to_string(i) + " has no exposures");
  ChannelValue out;
  double lift = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < s.channels; ++j) {
    if (j == i) continue;
    const auto both = s.rate(i, j);
    const auto other = s.rate(j);
    if (!both || !other) {
      ++out.excluded;
      continue;
    }
    lift += *both - *other;
    ++used;
  }
  out.value = 0.5 * *own;
  if (used > 0) out.value += lift / (2.0 * static_cast<double>(used));
  return out;
}

// ---------------------------------------------------------------------------
// Causal uplift over ordered contexts

/// For each user reached by channel i, the context is the set of channels
/// seen before i's first touch. The value is the context-frequency-weighted
/// difference between the conversion rate of users whose journey is exactly
/// the context followed by i and the rate of users whose whole journey is
/// the context.
inline ChannelValue causal_value(std::span<const TouchpointPath> paths, std::size_t channels, std::size_t i) {
  if (i >= channels) throw Error("causal_value: unknown channel");
  if (channels > 31) throw Error("causal_value: at most 31 channels");
  std::map<ChannelMask, std::int64_t> frequency;                         // context -> users reached by i
  std::map<ChannelMask, std::pair<std::int64_t, std::int64_t>> with_i;   // context -> (users, conversions)
  std::map<ChannelMask, std::pair<std::int64_t, std::int64_t>> exactly;  // journey set -> (users, conversions)
  std::int64_t reached = 0;
  for (const auto& p : paths) {
    p.validate(channels);
    auto& e = exactly[p.mask()];
    ++e.first;
    e.second += p.converted ? 1 : 0;
    ChannelMask context = 0;
    bool found = false;
    for (const auto& t : p.events) {
      if (t.channel == i) {
        found = true;
        break;
      }
      context |= ChannelMask{1} << t.channel;
    }
    if (!found) continue;
    ++reached;
    ++frequency[context];
    if (p.mask() == (context | (ChannelMask{1} << i))) {
      auto& w = with_i[context];
      ++w.first;
      w.second += p.converted ? 1 : 0;
    }
  }
  if (reached == 0) throw Error("causal_value: channel " + std::to_string(i) + " has no exposures");
  ChannelValue out;
  for (const auto& [context, n] : frequency) {
    const auto after_it = with_i.find(context);
    const auto before_it = exactly.find(context);
    if (after_it == with_i.end() || before_it == exactly.end()) {
      ++out.excluded;
      continue;
    }
    const auto& a = after_it->second;
    const auto& b = before_it->second;
    const double after = static_cast<double>(a.second) / static_cast<double>(a.first);
    const double before = static_cast<double>(b.second) / static_cast<double>(b.first);
    out.value += static_cast<double>(n) / static_cast<double>(reached) * (after - before);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bagged logistic regression

struct BaggingOptions {
  std::size_t bags = 10;
  bool bootstrap = true;             // resample users with replacement
  double channel_fraction = 1.0;     // share of channels kept per bag
  SgdOptions sgd{20, 0.5, true};
  double l2 = 0.0;
  std::uint64_t seed = 1;
};

/// Per-channel weights averaged over the bags in which each channel was kept.
inline std::vector<double> bagged_lr_attribution(std::span<const TouchpointPath> paths, std::size_t channels,
                                                 const BaggingOptions& opt = {}) {
  if (channels == 0) throw Error("bagged_lr_attribution: no channels");
  if (opt.bags == 0) throw Error("bagged_lr_attribution: need at least one bag");
  if (!(opt.channel_fraction > 0.0 && opt.channel_fraction <= 1.0))
    throw Error("bagged_lr_attribution: channel_fraction must be in (0, 1]");
  bool any_pos = false;
  bool any_neg = false;
  for (const auto& p : paths) {
    p.validate(channels);
    (p.converted ? any_pos : any_neg) = true;
  }
  if (!any_pos || !any_neg) throw Error("bagged_lr_attribution: need both converting and non-converting paths");

  Rng rng(opt.seed);
  const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.channel_fraction * static_cast<double>(channels))));
  std::vector<double> sum(channels, 0.0);
  std::vector<std::size_t> count(channels, 0);
  std::vector<ChannelId> order(channels);
  for (std::size_t bag = 0; bag < opt.bags; ++bag) {
    std::iota(order.begin(), order.end(), ChannelId{0});
    if (keep < channels)
      for (std::size_t k = 0; k < keep; ++k) std::swap(order[k], order[k + rng.uniform_int(channels - k)]);
    ChannelMask kept = 0;
    for (std::size_t k = 0; k < keep; ++k) kept |= ChannelMask{1} << order[k];

    std::vector<LabeledExample> data;
    data.reserve(paths.size());
    for (std::size_t u = 0; u < paths.size(); ++u) {
      const auto& p = opt.bootstrap ? paths[rng.uniform_int(paths.size())] : paths[u];
      std::vector<std::uint32_t> idx;
      const auto m = p.mask() & kept;
      for (std::size_t c = 0; c < channels; ++c)
        if (m >> c & 1U) idx.push_back(static_cast<std::uint32_t>(c));
      data.push_back({FeatureVector(std::move(idx), channels), p.converted ? 1 : 0});
    }
    LinearModel model(channels, opt.l2, true);
    lr_fit(model, data, opt.sgd);
    for (std::size_t c = 0; c < channels; ++c) {
      if (!(kept >> c & 1U)) continue;
      sum[c] += model.weights[c];
      ++count[c];
    }
  }
  for (std::size_t c = 0; c < channels; ++c) sum[c] = count[c] ? sum[c] / static_cast<double>(count[c]) : 0.0;
  return sum;
}

// ---------------------------------------------------------------------------
// From channel values to money

/// Share of one conversion owed to each touched channel. Negative channel
/// values count as zero.
inline std::vector<double> conversion_credit(std::span<const double> values, std::span<const ChannelId> touched) {
  if (touched.empty()) throw Error("conversion_credit: no touched channels");
  std::vector<double> out(touched.size());
  double s = 0.0;
  for (std::size_t k = 0; k < touched.size(); ++k) {
    if (touched[k] >= values.size()) throw Error("conversion_credit: unknown channel");
    out[k] = std::max(0.0, values[touched[k]]);
    s += out[k];
  }
  if (!(s > 0.0)) throw Error("conversion_credit: touched channels carry no value");
  for (double& x : out) x /= s;
  return out;
}

/// Conversion lift credited to one touchpoint, for use with bid_lift.
inline double attributed_lift(double conversion_rate, double credit) {
  if (!(conversion_rate >= 0.0 && conversion_rate <= 1.0)) throw Error("attributed_lift: rate must be in [0, 1]");
  if (!(credit >= 0.0 && credit <= 1.0)) throw Error("attributed_lift: credit must be in [0, 1]");
  return conversion_rate * credit;
}

/// Attributed revenue over cost per channel. Channels with zero cost get
/// no ROI.
inline std::vector<std::optional<double>> channel_roi(std::span<const TouchpointPath> paths,
                                                      std::span<const double> values, std::span<const Price> cost) {
  const std::size_t n = values.size();
  if (cost.size() != n) throw Error("channel_roi: size mismatch");
  std::vector<double> revenue(n, 0.0);
  for (const auto& p : paths) {
    p.validate(n);
    if (!p.converted || p.events.empty()) continue;
    std::vector<ChannelId> touched;
    for (const auto& e : p.events)
      if (std::find(touched.begin(), touched.end(), e.channel) == touched.end()) touched.push_back(e.channel);
    double s = 0.0;
    for (auto c : touched) s += std::max(0.0, values[c]);
    if (!(s > 0.0)) continue;
    const auto share = conversion_credit(values, touched);
    for (std::size_t k = 0; k < touched.size(); ++k) revenue[touched[k]] += share[k] * p.value.as_double();
  }
  std::vector<std::optional<double>> out(n);
  for (std::size_t c = 0; c < n; ++c)
    if (cost[c].ticks() > 0) out[c] = revenue[c] / cost[c].as_double();
  return out;
}

struct BudgetAllocation {
  std::vector<double> amounts;
  double objective = 0.0;  // sum of roi * amount
};

/// Fills channels in descending ROI order up to their caps. Channels with
/// negative ROI receive nothing.
inline BudgetAllocation allocate_budget(std::span<const double> roi, std::span<const double> caps, double budget) {
  if (roi.size() != caps.size()) throw Error("allocate_budget: size mismatch");
  if (!(budget >= 0.0) || !std::isfinite(budget)) throw Error("allocate_budget: budget must be finite and >= 0");
  for (std::size_t i = 0; i < roi.size(); ++i) {
    if (!std::isfinite(roi[i])) throw Error("allocate_budget: ROI must be finite");
    if (!(caps[i] >= 0.0) || !std::isfinite(caps[i])) throw Error("allocate_budget: caps must be finite and >= 0");
  }
  std::vector<std::size_t> order(roi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return roi[a] > roi[b]; });
  BudgetAllocation out{std::vector<double>(roi.size(), 0.0), 0.0};
  double left = budget;
  for (auto i : order) {
    if (roi[i] < 0.0 || left <= 0.0) break;
    const double take = std::min(left, caps[i]);
    out.amounts[i] = take;
    out.objective += roi[i] * take;
    left -= take;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Path logs and reports
//
// One journey per line: user, converted (0/1), value ticks, then events as
// comma-separated channel@timestamp pairs (empty for no touches).

inline constexpr const char* kPathHeader = "#rtb-paths v1";

inline std::string format_path_line(const TouchpointPath& p) {
  std::ostringstream os;
  os << p.user << '\t' << (p.converted ? 1 : 0) << '\t' << p.value.ticks() << '\t';
  for (std::size_t k = 0; k < p.events.size(); ++k) {
    if (k) os << ',';
    os << p.events[k].channel << '@' << p.events[k].timestamp_ms;
  }
  return os.str();
}

inline TouchpointPath parse_path_line(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (cols.size() != 4) throw Error("path line: expected 4 tab-separated columns, got " + std::to_string(cols.size()));
  TouchpointPath p;
  p.user = cols[0];
  if (cols[1] != "0" && cols[1] != "1") throw Error("path line: converted flag must be 0 or 1");
  p.converted = cols[1] == "1";
  std::size_t used = 0;
  long long ticks = 0;
  try {
    ticks = std::stoll(cols[2], &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cols[2].size() || cols[2].empty()) throw Error("path line: bad value column");
  p.value = Price::from_ticks(ticks);
  std::stringstream events(cols[3]);
  std::string tok;
  while (std::getline(events, tok, ',')) {
    const auto at = tok.find('@');
    if (at == std::string::npos) throw Error("path line: event must be channel@timestamp");
    try {
      std::size_t a = 0;
      std::size_t b = 0;
      const auto ch = std::stoul(tok.substr(0, at), &a);
      const auto ts = std::stoll(tok.substr(at + 1), &b);
      if (a != at || b != tok.size() - at - 1) throw Error("");
      p.events.push_back({static_cast<ChannelId>(ch), ts});
    } catch (const std::exception&) {
      throw Error("path line: bad event '" + tok + "'");
    }
  }
  return p;
}

inline std::vector<TouchpointPath> read_paths(std::istream& in) {
  std::vector<TouchpointPath> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(parse_path_line(line));
    } catch (const Error& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_paths(std::ostream& os, std::span<const TouchpointPath> paths) {
  os << kPathHeader << '\n';
  for (const auto& p : paths) os << format_path_line(p) << '\n';
}

struct CreditRow {
  std::string channel;
  std::string model;
  double credit = 0.0;
};

inline void write_credit_csv(std::ostream& os, std::span<const CreditRow> rows) {
  os << "channel,model,credit\n";
  std::ostringstream num;
  num.precision(17);
  for (const auto& r : rows) {
    num.str("");
    num << r.credit;
    os << r.channel << ',' << r.model << ',' << num.str() << '\n';
  }
}

}  // namespace rtb
