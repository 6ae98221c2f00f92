#pragma once

#include <cmath>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/numeric.hpp"
#include "rtb/random.hpp"

namespace rtb {

/// Factorisation machine over binary features with K latent factors.
struct FmModel {
  double w0 = 0.0;
  std::vector<double> w;
  std::vector<double> v;  // row-major, dimension x factors
  std::size_t factors = 1;

  FmModel() = default;
  FmModel(std::size_t dimension, std::size_t k) : w(dimension, 0.0), v(dimension * k, 0.0), factors(k) {
    if (k < 1) throw Error("FmModel: need at least one factor");
  }

  void init_random(Rng& rng, double scale) {
    for (double& x : v) x = rng.gaussian(0.0, scale);
  }

  [[nodiscard]] std::size_t dimension() const { return w.size(); }
  [[nodiscard]] double latent(std::size_t i, std::size_t f) const { return v[i * factors + f]; }
  double& latent(std::size_t i, std::size_t f) { return v[i * factors + f]; }

  /// Raw score via the identity sum_{i<j} <v_i,v_j> = 1/2 sum_f [(sum_i v_if)^2 - sum_i v_if^2].
  [[nodiscard]] double score(const FeatureVector& x) const {
    if (x.dimension() != dimension()) throw Error("FmModel: feature dimension mismatch");
    double s = w0;
    for (auto i : x.indices()) s += w[i];
    for (std::size_t f = 0; f < factors; ++f) {
      double sum = 0.0;
      double sq = 0.0;
      for (auto i : x.indices()) {
        const double t = latent(i, f);
        sum += t;
        sq += t * t;
      }
      s += 0.5 * (sum * sum - sq);
    }
    return s;
  }
};

inline double fm_predict(const FmModel& m, const FeatureVector& x) { return num::sigmoid(m.score(x)); }

/// Gradient of the log-loss with respect to every parameter touched by x,
/// laid out as [w0, w_i for active i, v_if for active i and all f].
inline std::vector<double> fm_loss_gradient(const FmModel& m, const FeatureVector& x, int y) {
  const double err = fm_predict(m, x) - static_cast<double>(y);
  const auto idx = x.indices();
  std::vector<double> g;
  g.reserve(1 + idx.size() * (1 + m.factors));
  g.push_back(err);
  for (std::size_t a = 0; a < idx.size(); ++a) g.push_back(err);
  std::vector<double> sums(m.factors, 0.0);
  for (std::size_t f = 0; f < m.factors; ++f)
    for (auto i : idx) sums[f] += m.latent(i, f);
  for (auto i : idx)
    for (std::size_t f = 0; f < m.factors; ++f) g.push_back(err * (sums[f] - m.latent(i, f)));
  return g;
}

/// SGD step on the log-loss with L2 strength `lambda` on touched parameters.
inline void fm_sgd_step(FmModel& m, const FeatureVector& x, int y, double eta, double lambda = 0.0) {
  if (y != 0 && y != 1) throw Error("fm: label must be 0 or 1");
  const auto g = fm_loss_gradient(m, x, y);
  const auto idx = x.indices();
  std::size_t k = 0;
  m.w0 -= eta * g[k++];
  for (auto i : idx) {
    m.w[i] -= eta * (g[k++] + lambda * m.w[i]);
  }
  for (auto i : idx)
    for (std::size_t f = 0; f < m.factors; ++f) {
      m.latent(i, f) -= eta * (g[k++] + lambda * m.latent(i, f));
    }
}

}  // namespace rtb
