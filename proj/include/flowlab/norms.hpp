#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "flowlab/path.hpp"
#include "flowlab/quadrature.hpp"

namespace flowlab {

namespace detail {

inline void require_small_order(const FracOrder& alpha) {
  if (!(alpha.value() < 0.5))
    throw DomainError("norm needs 0 < alpha < 1/2, got " + std::to_string(alpha.value()));
}

// max over i of |f(i+lag) - f(i)|^2
inline double max_sq_increment(const GridPath& f, std::size_t lag) noexcept {
  const auto v = f.data();
  const std::size_t d = f.dim();
  const std::size_t count = f.points() - lag;
  double best = 0.0;
  if (d == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      const double diff = v[i + lag] - v[i];
      best = std::max(best, diff * diff);
    }
    return best;
  }
  for (std::size_t i = 0; i < count; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = v[(i + lag) * d + j] - v[i * d + j];
      s += diff * diff;
    }
    best = std::max(best, s);
  }
  return best;
}

}  // namespace detail

/// sup over grid pairs s < t of |f(t) - f(s)| / (t - s)^lambda.
inline double holder_seminorm(const GridPath& f, HolderOrder lambda) {
  const std::size_t n = f.steps();
  double best = 0.0;
  for (std::size_t lag = 1; lag <= n; ++lag) {
    const double inc = std::sqrt(detail::max_sq_increment(f, lag));
    best = std::max(best, inc / std::pow(static_cast<double>(lag) * f.step(), lambda.value()));
  }
  return best;
}

/// sup over the grid of |f(t)|.
inline double sup_norm(const GridPath& f) {
  double best = 0.0;
  for (std::size_t k = 0; k < f.points(); ++k) best = std::max(best, euclid(f.at(k)));
  return best;
}

/// For every grid time t_i, the singular integral
///   int_{start}^{t_i} |f(t_i) - f(s)| / (t_i - s)^{alpha+1} ds
/// with |f(t_i) - f(.)| interpolated linearly between grid points.
inline std::vector<double> increment_integral_profile(const GridPath& f, double alpha) {
  const std::size_t n = f.steps();
  const PowerKernelWeights w(-alpha - 1.0, f.step(), n);
  // interior lags share a cell on each side
  std::vector<double> inner_weight(n + 1, 0.0);
  for (std::size_t k = 1; k < n; ++k) inner_weight[k] = w.left(k) + w.right(k - 1);

  std::vector<double> profile(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 1; k < i; ++k) acc += inner_weight[k] * point_distance(f, i, i - k);
    acc += w.right(i - 1) * point_distance(f, i, 0);
    profile[i] = acc;
  }
  return profile;
}

/// ||f||_{alpha,inf} = sup_t ( |f(t)| + int_0^t |f(t)-f(s)| / (t-s)^{alpha+1} ds ).
inline double w_alpha_inf_norm(const GridPath& f, FracOrder alpha) {
  detail::require_small_order(alpha);
  const auto profile = increment_integral_profile(f, alpha.value());
  double best = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i)
    best = std::max(best, euclid(f.at(i)) + profile[i]);
  return best;
}

/// Exponentially weighted variant sup_t e^{-lambda t}(...), with t measured from the path start.
inline double w_alpha_lambda_norm(const GridPath& f, FracOrder alpha, double lambda_weight) {
  detail::require_small_order(alpha);
  if (!(lambda_weight >= 0.0)) throw DomainError("weight lambda must be nonnegative");
  const auto profile = increment_integral_profile(f, alpha.value());
  double best = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double t = static_cast<double>(i) * f.step();
    best = std::max(best, std::exp(-lambda_weight * t) * (euclid(f.at(i)) + profile[i]));
  }
  return best;
}

/// ||g||_{1-alpha,inf,T} = sup_{s<t} ( |g(t)-g(s)|/(t-s)^{1-alpha} + int_s^t |g(y)-g(s)|/(y-s)^{2-alpha} dy ).
inline double w_one_minus_alpha_norm(const GridPath& g, FracOrder alpha) {
  detail::require_small_order(alpha);
  const double a = alpha.value();
  const std::size_t n = g.steps();
  const PowerKernelWeights w(a - 2.0, g.step(), n);
  std::vector<double> lag_power(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k)
    lag_power[k] = std::pow(static_cast<double>(k) * g.step(), a - 1.0);

  std::vector<double> dist(n + 1);
  double best = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t span = n - s;
    for (std::size_t k = 0; k <= span; ++k) dist[k] = point_distance(g, s + k, s);
    double acc = 0.0;
    for (std::size_t k = 1; k <= span; ++k) {
      // cell [k-1, k]; dist[0] = 0 so the divergent left(0) weight never applies
      if (k > 1) acc += w.left(k - 1) * dist[k - 1];
      acc += w.right(k - 1) * dist[k];
      best = std::max(best, dist[k] * lag_power[k] + acc);
    }
  }
  return best;
}

/// ||f||_{alpha,1} = int_0^T |f(s)|/s^alpha ds + int_0^T int_0^s |f(s)-f(y)|/(s-y)^{alpha+1} dy ds.
inline double f_alpha_one_norm(const GridPath& f, FracOrder alpha) {
  detail::require_small_order(alpha);
  const std::size_t n = f.steps();
  const PowerKernelWeights w(-alpha.value(), f.step(), n);
  std::vector<double> magnitude(n + 1);
  for (std::size_t k = 0; k <= n; ++k) magnitude[k] = euclid(f.at(k));
  const double first = w.integrate(magnitude, n);

  const auto inner = increment_integral_profile(f, alpha.value());
  double second = 0.0;
  for (std::size_t k = 0; k < n; ++k) second += 0.5 * (inner[k] + inner[k + 1]) * f.step();
  return first + second;
}

}  // namespace flowlab
