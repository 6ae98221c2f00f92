#pragma once

#include <cmath>
#include <vector>

#include "rtb/core.hpp"
#include "rtb/numeric.hpp"

namespace rtb {

/// Per-coordinate FTRL-proximal state for logistic loss. The learning rate of
/// coordinate i is alpha / (beta + sqrt(n_i)).
struct FtrlState {
  std::vector<double> z;
  std::vector<double> n;
  std::vector<double> w;
  double alpha = 0.1;
  double beta = 1.0;
  double l1 = 0.0;
  double l2 = 0.0;

  FtrlState() = default;
  FtrlState(std::size_t dimension, double alpha_, double beta_, double l1_, double l2_ = 0.0)
      : z(dimension, 0.0), n(dimension, 0.0), w(dimension, 0.0), alpha(alpha_), beta(beta_), l1(l1_), l2(l2_) {
    if (!(alpha > 0.0) || beta < 0.0 || l1 < 0.0 || l2 < 0.0) throw Error("FtrlState: invalid hyper-parameters");
  }

  [[nodiscard]] double eta(std::size_t i) const { return alpha / (beta + std::sqrt(n[i])); }

  /// Closed-form weight for coordinate i from its stored (z, n).
  [[nodiscard]] double solve(std::size_t i) const {
    const double zi = z[i];
    if (std::fabs(zi) <= l1) return 0.0;
    const double sign = zi > 0.0 ? 1.0 : -1.0;
    return -(zi - sign * l1) / (1.0 / eta(i) + l2);
  }
};

inline double ftrl_predict(const FtrlState& s, const FeatureVector& x) {
  if (x.dimension() != s.w.size()) throw Error("ftrl: feature dimension mismatch");
  double t = 0.0;
  for (auto i : x.indices()) t += s.w[i];
  return num::sigmoid(t);
}

/// One online update; returns the current weight vector.
inline const std::vector<double>& ftrl_step(FtrlState& s, const FeatureVector& x, int y) {
  if (y != 0 && y != 1) throw Error("ftrl: label must be 0 or 1");
  if (x.dimension() != s.w.size()) throw Error("ftrl: feature dimension mismatch");
  for (auto i : x.indices()) s.w[i] = s.solve(i);
  const double g = ftrl_predict(s, x) - static_cast<double>(y);
  for (auto i : x.indices()) {
    const double n_new = s.n[i] + g * g;
    const double sigma = (std::sqrt(n_new) - std::sqrt(s.n[i])) / s.alpha;
    s.z[i] += g - sigma * s.w[i];
    s.n[i] = n_new;
    s.w[i] = s.solve(i);
  }
  return s.w;
}

}  // namespace rtb
