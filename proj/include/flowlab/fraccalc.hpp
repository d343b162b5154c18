#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "flowlab/error.hpp"
#include "flowlab/path.hpp"
#include "flowlab/quadrature.hpp"

namespace flowlab::fraccalc {

// All operators are real-valued: the complex phases (-1)^{-alpha} of the right-sided
// integral and (-1)^{alpha} of the right-sided derivative are not applied.

namespace detail {

constexpr double kOverflowGuard = 1e300;

inline void guard(double v, const char* what) {
  if (!std::isfinite(v) || std::abs(v) > kOverflowGuard)
    throw RegularityError(std::string(what) +
                          ": singular integral diverged; the path is not regular enough");
}

// Left Riemann-Liouville integral of one component stored with stride `dim`.
inline void left_integral_component(const GridPath& f, std::size_t j, const PowerKernelWeights& w,
                                    double norm, std::vector<double>& out) {
  const std::size_t n = f.steps();
  const std::size_t d = f.dim();
  const auto v = f.data();
  for (std::size_t i = 1; i <= n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < i; ++k)
      acc += w.left(k) * v[(i - k) * d + j] + w.right(k) * v[(i - k - 1) * d + j];
    out[i * d + j] = acc * norm;
  }
}

// Left Weyl derivative at grid indices 1..n, written to out[(i-1)*dim + j].
inline std::vector<double> left_weyl_values(const GridPath& f, double alpha) {
  const std::size_t n = f.steps();
  const std::size_t d = f.dim();
  const PowerKernelWeights w(-alpha - 1.0, f.step(), n);
  std::vector<double> inner_weight(n + 1, 0.0);
  for (std::size_t k = 1; k < n; ++k) inner_weight[k] = w.left(k) + w.right(k - 1);
  const double norm = 1.0 / std::tgamma(1.0 - alpha);
  const auto v = f.data();
  std::vector<double> out(n * d);
  for (std::size_t i = 1; i <= n; ++i) {
    const double boundary_kernel = std::pow(static_cast<double>(i) * f.step(), -alpha);
    for (std::size_t j = 0; j < d; ++j) {
      const double fi = v[i * d + j];
      double acc = 0.0;
      for (std::size_t k = 1; k < i; ++k) acc += inner_weight[k] * (fi - v[(i - k) * d + j]);
      acc += w.right(i - 1) * (fi - v[j]);
      const double value = norm * (fi * boundary_kernel + alpha * acc);
      guard(value, "Weyl derivative");
      out[(i - 1) * d + j] = value;
    }
  }
  return out;
}

inline std::vector<double> reversed_points(std::span<const double> values, std::size_t dim) {
  const std::size_t points = values.size() / dim;
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < points; ++k)
    for (std::size_t j = 0; j < dim; ++j) out[k * dim + j] = values[(points - 1 - k) * dim + j];
  return out;
}

}  // namespace detail

/// I^alpha_{a+} f(x) = Gamma(alpha)^{-1} int_a^x (x-y)^{alpha-1} f(y) dy, componentwise.
/// Product integration, exact for piecewise-linear f; the value at the left end is 0.
inline GridPath left_frac_integral(const GridPath& f, FracOrder alpha) {
  const double a = alpha.value();
  const PowerKernelWeights w(a - 1.0, f.step(), f.steps());
  std::vector<double> out(f.data().size(), 0.0);
  const double norm = 1.0 / std::tgamma(a);
  for (std::size_t j = 0; j < f.dim(); ++j) detail::left_integral_component(f, j, w, norm, out);
  return GridPath(f.start(), f.step(), f.dim(), std::move(out));
}

/// I^alpha_{b-} f(x) = Gamma(alpha)^{-1} int_x^b (y-x)^{alpha-1} f(y) dy (phase dropped).
inline GridPath right_frac_integral(const GridPath& f, FracOrder alpha) {
  return left_frac_integral(f.reversed(), alpha).reversed();
}

/// D^alpha_{a+} f on the grid points (a, b]; the point x = a is excluded.
inline GridPath left_weyl_derivative(const GridPath& f, FracOrder alpha) {
  if (f.steps() < 2) throw InvalidInput("Weyl derivative needs n >= 2");
  auto values = detail::left_weyl_values(f, alpha.value());
  return GridPath(f.start() + f.step(), f.step(), f.dim(), std::move(values));
}

/// D^alpha_{b-} f on the grid points [a, b); the point x = b is excluded.
/// With pin_endpoint the derivative is applied to f - f(b).
inline GridPath right_weyl_derivative(const GridPath& f, FracOrder alpha, bool pin_endpoint) {
  if (f.steps() < 2) throw InvalidInput("Weyl derivative needs n >= 2");
  std::vector<double> rev = detail::reversed_points(f.data(), f.dim());
  if (pin_endpoint) {
    const std::size_t d = f.dim();
    for (std::size_t k = rev.size() / d; k-- > 0;)
      for (std::size_t j = 0; j < d; ++j) rev[k * d + j] -= rev[j];
  }
  const GridPath mirrored(f.start(), f.step(), f.dim(), std::move(rev));
  const auto values = detail::left_weyl_values(mirrored, alpha.value());
  return GridPath(f.start(), f.step(), f.dim(), detail::reversed_points(values, f.dim()));
}

enum class EndpointMode { exact, decimated };

inline const char* to_string(EndpointMode m) {
  return m == EndpointMode::exact ? "exact" : "decimated";
}

/// Result of the Lambda_alpha supremum, with the attaining grid pair for diagnostics.
struct LambdaEstimate {
  double value = 0.0;
  double s = 0.0;
  double t = 0.0;
  EndpointMode mode = EndpointMode::exact;
};

/// Lambda_alpha(g) = Gamma(1-alpha)^{-1} sup_{0<s<t<=T} |D^{1-alpha}_{t-} g_{t-}(s)|.
///
/// For each s the singular integral of the right derivative is accumulated cell by cell
/// while t moves right, so every (s, t) pair costs O(dim) and the exact supremum is O(n^2).
/// `decimated` restricts t to ceil(sqrt(n)) evenly spaced right endpoints plus T, which
/// gives a lower bound of the exact value.
inline LambdaEstimate lambda_alpha(const GridPath& g, FracOrder alpha,
                                   EndpointMode mode = EndpointMode::exact) {
  const double a = alpha.value();
  if (!(a < 0.5)) throw DomainError("Lambda_alpha needs 0 < alpha < 1/2");
  const std::size_t n = g.steps();
  const std::size_t d = g.dim();
  const double h = g.step();
  const PowerKernelWeights w(a - 2.0, h, n);
  std::vector<double> lag_power(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) lag_power[k] = std::pow(static_cast<double>(k) * h, a - 1.0);

  std::vector<char> endpoint(n + 1, mode == EndpointMode::exact ? 1 : 0);
  if (mode == EndpointMode::decimated) {
    const auto count = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (std::size_t k = 1; k <= count; ++k) endpoint[(k * n + count - 1) / count] = 1;
    endpoint[n] = 1;
  }

  const auto v = g.data();
  const double norm = 1.0 / std::tgamma(a);
  std::vector<double> acc(d);
  LambdaEstimate best{0.0, g.start(), g.start(), mode};
  double best_sq = 0.0;
  if (d == 1 && mode == EndpointMode::exact) {
    // Scalar fast path: the same recurrence on raw arrays, no per-pair branching.
    std::vector<double> wl(n);
    std::vector<double> wr(n);
    for (std::size_t k = 0; k < n; ++k) {
      wl[k] = k > 0 ? w.left(k) : 0.0;
      wr[k] = w.right(k);
    }
    const double* x = v.data();
    const double b = 1.0 - a;
    for (std::size_t s = 1; s + 1 <= n; ++s) {
      const double gs = x[s];
      auto sweep_t = [&](auto&& visit) {
        double run = 0.0;
        for (std::size_t t = s + 1; t <= n; ++t) {
          const std::size_t k = t - s - 1;
          run += wl[k] * (gs - x[t - 1]) + wr[k] * (gs - x[t]);
          const double deriv = (gs - x[t]) * lag_power[t - s] + b * run;
          visit(t, deriv * deriv);
        }
      };
      double local = 0.0;
      sweep_t([&](std::size_t, double sq) { local = std::max(local, sq); });
      if (local * norm * norm > best_sq) {
        best_sq = local * norm * norm;
        best.s = g.time(s);
        sweep_t([&](std::size_t t, double sq) {
          if (sq == local) best.t = g.time(t);
        });
      }
    }
    best.value = std::sqrt(best_sq) / std::tgamma(1.0 - a);
    detail::guard(best.value, "Lambda_alpha");
    return best;
  }
  for (std::size_t s = 1; s + 1 <= n; ++s) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t t = s + 1; t <= n; ++t) {
      const std::size_t k = t - s - 1;  // cell [s+k, s+k+1]; the k = 0 left value vanishes
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double gs = v[s * d + j];
        if (k > 0) acc[j] += w.left(k) * (gs - v[(t - 1) * d + j]);
        acc[j] += w.right(k) * (gs - v[t * d + j]);
        const double deriv = norm * ((gs - v[t * d + j]) * lag_power[t - s] + (1.0 - a) * acc[j]);
        sq += deriv * deriv;
      }
      if (endpoint[t] && sq > best_sq) {
        best_sq = sq;
        best.s = g.time(s);
        best.t = g.time(t);
      }
    }
  }
  best.value = std::sqrt(best_sq) / std::tgamma(1.0 - a);
  detail::guard(best.value, "Lambda_alpha");
  return best;
}

}  // namespace flowlab::fraccalc
