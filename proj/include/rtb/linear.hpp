#pragma once

// Logistic regression trained by SGD, plus the bid-aware variant that
// reweights won impressions by the inverse winning probability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/landscape.hpp"
#include "rtb/numeric.hpp"

namespace rtb {

struct LabeledExample {
  FeatureVector x;
  int y = 0;  // 0 or 1
};

struct LinearModel {
  std::vector<double> weights;
  double lambda = 0.0;  // L2 strength
  double bias = 0.0;
  bool learn_bias = false;

  LinearModel() = default;
  explicit LinearModel(std::size_t dimension, double l2 = 0.0, bool with_bias = false)
      : weights(dimension, 0.0), lambda(l2), learn_bias(with_bias) {}

  [[nodiscard]] double score(const FeatureVector& x) const {
    if (x.dimension() != weights.size()) throw Error("LinearModel: feature dimension mismatch");
    double s = bias;
    for (auto i : x.indices()) s += weights[i];
    return s;
  }
};

inline double lr_predict(const LinearModel& m, const FeatureVector& x) { return num::sigmoid(m.score(x)); }

namespace detail {
inline void check_label(int y) {
  if (y != 0 && y != 1) throw Error("label must be 0 or 1");
}

/// w <- (1 - eta*lambda) w + eta * scale * (y - yhat) x
inline void weighted_lr_step(LinearModel& m, const FeatureVector& x, int y, double eta, double scale) {
  check_label(y);
  if (!(eta > 0.0)) throw Error("learning rate must be positive");
  const double err = static_cast<double>(y) - lr_predict(m, x);
  if (m.lambda != 0.0) {
    const double decay = 1.0 - eta * m.lambda;
    for (double& w : m.weights) w *= decay;
  }
  const double step = eta * scale * err;
  for (auto i : x.indices()) m.weights[i] += step;
  if (m.learn_bias) m.bias += step;
}
}  // namespace detail

inline void lr_sgd_step(LinearModel& m, const FeatureVector& x, int y, double eta) {
  detail::weighted_lr_step(m, x, y, eta, 1.0);
}

/// eta_t = eta_0 / sqrt(t), t counted from 1.
inline double eta_schedule(double eta0, std::int64_t t) {
  if (t < 1) throw Error("eta_schedule: t must be >= 1");
  return eta0 / std::sqrt(static_cast<double>(t));
}

/// Mean log-loss with predictions clipped away from 0 and 1.
inline double log_loss(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size() || p.empty()) throw Error("log_loss: size mismatch or empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
    s -= y[i] ? std::log(q) : std::log(1.0 - q);
  }
  return s / static_cast<double>(p.size());
}

/// Area under the ROC curve; tied scores count one half.
inline double roc_auc(std::span<const double> score, std::span<const int> y) {
  if (score.size() != y.size() || score.empty()) throw Error("roc_auc: size mismatch or empty input");
  std::vector<std::size_t> order(score.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return score[a] < score[b]; });
  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && score[order[j]] == score[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      detail::check_label(y[order[k]]);
      if (y[order[k]] == 1) {
        pos += 1.0;
        rank_sum += mid_rank;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(score.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error("roc_auc: need both labels");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

struct SgdOptions {
  int epochs = 10;
  double eta0 = 0.1;
  bool decay = true;  // eta_t = eta0/sqrt(t)
};

/// Runs SGD epochs in data order and returns the training log-loss after
/// every epoch.
inline std::vector<double> lr_fit(LinearModel& m, std::span<const LabeledExample> data, const SgdOptions& opt = {}) {
  if (data.empty()) throw Error("lr_fit: no data");
  std::vector<double> curve;
  std::int64_t t = 0;
  std::vector<double> p(data.size());
  std::vector<int> y(data.size());
  for (int e = 0; e < opt.epochs; ++e) {
    for (const auto& ex : data) {
      ++t;
      lr_sgd_step(m, ex.x, ex.y, opt.decay ? eta_schedule(opt.eta0, t) : opt.eta0);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      p[i] = lr_predict(m, data[i].x);
      y[i] = data[i].y;
    }
    curve.push_back(log_loss(p, y));
  }
  return curve;
}

inline constexpr double kDefaultMaxImportanceWeight = 100.0;

/// Importance weight 1/w(b), clipped at `max_weight`.
inline double bid_aware_weight(const WinFunction& win, double bid, double max_weight = kDefaultMaxImportanceWeight) {
  const double w = win(bid);
  if (!(w > 0.0)) throw Error("bid_aware_weight: winning probability is zero at this bid");
  return std::min(1.0 / w, max_weight);
}
inline double bid_aware_weight(const WinFunction& win, Price bid, double max_weight = kDefaultMaxImportanceWeight) {
  return bid_aware_weight(win, bid.as_double(), max_weight);
}

/// w <- (1 - eta*lambda) w + eta / w(b) * (y - yhat) x
inline void bgd_step(LinearModel& m, const FeatureVector& x, int y, Price bid, const WinFunction& win, double eta,
                     double max_weight = kDefaultMaxImportanceWeight) {
  detail::weighted_lr_step(m, x, y, eta, bid_aware_weight(win, bid, max_weight));
}

struct BidAwareExample {
  FeatureVector x;
  int y = 0;
  Price bid;
};

struct BidAwareReport {
  std::vector<double> loss_curve;
  std::int64_t skipped = 0;  // impressions whose bid has zero winning probability
};

/// SGD over won impressions with inverse-winning-probability weights.
inline BidAwareReport bid_aware_fit(LinearModel& m, std::span<const BidAwareExample> data, const WinFunction& win,
                                    const SgdOptions& opt = {}, double max_weight = kDefaultMaxImportanceWeight) {
  if (data.empty()) throw Error("bid_aware_fit: no data");
  BidAwareReport rep;
  std::vector<double> weight(data.size(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double w = win(data[i].bid);
    if (w > 0.0)
      weight[i] = std::min(1.0 / w, max_weight);
    else
      ++rep.skipped;
  }
  std::int64_t t = 0;
  for (int e = 0; e < opt.epochs; ++e) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (weight[i] == 0.0) continue;
      ++t;
      detail::weighted_lr_step(m, data[i].x, data[i].y, opt.decay ? eta_schedule(opt.eta0, t) : opt.eta0, weight[i]);
    }
    double s = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (weight[i] == 0.0) continue;
      const double q = std::clamp(lr_predict(m, data[i].x), 1e-15, 1.0 - 1e-15);
      s -= weight[i] * (data[i].y ? std::log(q) : std::log(1.0 - q));
      total += weight[i];
    }
    rep.loss_curve.push_back(total > 0.0 ? s / total : 0.0);
  }
  return rep;
}

}  // namespace rtb
