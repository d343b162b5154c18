#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "flowlab/error.hpp"

namespace flowlab {

/// Product-integration weights for the power kernel u^p on a uniform grid.
///
/// The integrand is v(u) * u^p where v is known at u = k*h and interpolated
/// linearly on each cell [k h, (k+1) h]. The kernel is integrated exactly:
///
///   int_{kh}^{(k+1)h} v(u) u^p du = left(k) * v_k + right(k) * v_{k+1}.
///
/// For p <= -1 the cell next to the singularity is only integrable when
/// v_0 = 0; left(0) is then reported as infinity and callers must not use it.
/// Requires p > -2.
class PowerKernelWeights {
 public:
  PowerKernelWeights(double p, double h, std::size_t cells) : p_(p), left_(cells), right_(cells) {
    if (!(p > -2.0)) throw DomainError("power kernel exponent must exceed -2");
    if (std::abs(p + 1.0) < 1e-14 || std::abs(p + 2.0) < 1e-14)
      throw DomainError("logarithmic power kernels are not supported");
    const double scale = std::pow(h, p + 1.0);
    for (std::size_t k = 0; k < cells; ++k) {
      const auto [j0, j1] = unit_moments(static_cast<double>(k));
      right_[k] = scale * j1;
      left_[k] = scale * (j0 - j1);
    }
  }

  double exponent() const noexcept { return p_; }
  std::size_t cells() const noexcept { return left_.size(); }
  double left(std::size_t k) const noexcept { return left_[k]; }
  double right(std::size_t k) const noexcept { return right_[k]; }

  /// Weighted sum over cells 0..m-1 of values v[0..m]; v[0] is skipped when left(0) is not finite.
  template <typename Values>
  double integrate(const Values& v, std::size_t m) const noexcept {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k > 0 || std::isfinite(left_[0])) acc += left_[k] * v[k];
      acc += right_[k] * v[k + 1];
    }
    return acc;
  }

 private:
  // J0 = int_0^1 (k+x)^p dx, J1 = int_0^1 x (k+x)^p dx.
  std::pair<double, double> unit_moments(double k) const {
    const double p = p_;
    if (k == 0.0) {
      const double j0 = p > -1.0 ? 1.0 / (p + 1.0) : INFINITY;
      return {j0, 1.0 / (p + 2.0)};
    }
    if (k < 32.0) {
      const double j0 = power_difference(k, p + 1.0) / (p + 1.0);
      const double j1 = power_difference(k, p + 2.0) / (p + 2.0) - k * j0;
      return {j0, j1};
    }
    // Binomial series in 1/k avoids the cancellation in the closed form for large k.
    const double kp = std::pow(k, p);
    double coef = 1.0;
    double inv = 1.0;
    double j0 = 0.0;
    double j1 = 0.0;
    for (int j = 0; j < 16; ++j) {
      j0 += coef * inv / (j + 1.0);
      j1 += coef * inv / (j + 2.0);
      coef *= (p - j) / (j + 1.0);
      inv /= k;
    }
    return {kp * j0, kp * j1};
  }

  // (k+1)^q - k^q, computed without cancellation.
  static double power_difference(double k, double q) {
    return std::pow(k, q) * std::expm1(q * std::log1p(1.0 / k));
  }

  double p_;
  std::vector<double> left_;
  std::vector<double> right_;
};

}  // namespace flowlab
