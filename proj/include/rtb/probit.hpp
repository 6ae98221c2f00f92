#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/numeric.hpp"

namespace rtb {

inline constexpr double kProbitVarianceFloor = 1e-8;

/// Gaussian belief over weights with diagonal covariance.
struct ProbitState {
  std::vector<double> mean;
  std::vector<double> variance;
  std::int64_t clamped = 0;  // variance updates that hit the floor

  ProbitState() = default;
  ProbitState(std::size_t dimension, double prior_variance = 1.0)
      : mean(dimension, 0.0), variance(dimension, prior_variance) {
    if (!(prior_variance > 0.0)) throw Error("ProbitState: prior variance must be positive");
  }
};

/// P(y = +1 | x) = Phi(x.mu / sqrt(x.Sigma.x + 1)).
inline double probit_predict(const ProbitState& s, const FeatureVector& x) {
  if (x.dimension() != s.mean.size()) throw Error("probit: feature dimension mismatch");
  double m = 0.0;
  double v = 0.0;
  for (auto i : x.indices()) {
    m += s.mean[i];
    v += s.variance[i];
  }
  return num::normal_cdf(m / std::sqrt(v + 1.0));
}

/// Moment-matching update for one labelled case, y in {-1, +1}:
///   theta = y x.mu / sqrt(x.Sigma.x + 1)
///   alpha = y / sqrt(x.Sigma.x + 1) * N(theta)/Phi(theta)
///   beta  = 1 / sqrt(x.Sigma.x + 1) * N(theta)/Phi(theta) * (N(theta)/Phi(theta) + theta)
///   mu += alpha Sigma x;  Sigma -= beta (Sigma x)^2
inline void probit_step(ProbitState& s, const FeatureVector& x, int y) {
  if (y != -1 && y != 1) throw Error("probit: label must be -1 or +1");
  if (x.dimension() != s.mean.size()) throw Error("probit: feature dimension mismatch");
  if (x.empty()) return;
  double m = 0.0;
  double v = 0.0;
  for (auto i : x.indices()) {
    m += s.mean[i];
    v += s.variance[i];
  }
  const double root = std::sqrt(v + 1.0);
  const double theta = y * m / root;
  const double ratio = num::inverse_mills(theta);
  const double alpha = y / root * ratio;
  const double beta = ratio * (ratio + theta) / root;
  for (auto i : x.indices()) {
    const double sx = s.variance[i];
    s.mean[i] += alpha * sx;
    double nv = sx - beta * sx * sx;
    if (!(nv >= kProbitVarianceFloor)) {
      nv = kProbitVarianceFloor;
      ++s.clamped;
    }
    s.variance[i] = nv;
  }
}

}  // namespace rtb
