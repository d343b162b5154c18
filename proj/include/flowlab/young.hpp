#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "flowlab/fraccalc.hpp"
#include "flowlab/norms.hpp"
#include "flowlab/path.hpp"
#include "flowlab/quadrature.hpp"
#include "flowlab/stats.hpp"

namespace flowlab::young {

// Shapes: f has either one component (broadcast against every component of g) or
// d*m components laid out row-major as a d x m matrix, with m = g.dim(). The
// integral is the d-vector sum_j int f^{i,j} dg^j.

namespace detail {

struct Shape {
  std::size_t rows;
  std::size_t cols;
  bool broadcast;
};

inline Shape shape_of(const GridPath& f, const GridPath& g) {
  require_same_grid(f, g);
  if (f.dim() == 1) return {g.dim(), g.dim(), true};
  if (f.dim() % g.dim() != 0)
    throw InvalidInput("integrand dimension must be 1 or a multiple of the integrator dimension");
  return {f.dim() / g.dim(), g.dim(), false};
}

inline std::size_t f_index(const Shape& s, std::size_t row, std::size_t col) {
  return s.broadcast ? 0 : row * s.cols + col;
}

}  // namespace detail

/// Left-point Riemann-Stieltjes sum sum_k f(t_k) (g(t_{k+1}) - g(t_k)).
inline std::vector<double> rs_integral(const GridPath& f, const GridPath& g) {
  const auto shape = detail::shape_of(f, g);
  std::vector<double> out(shape.rows, 0.0);
  for (std::size_t k = 0; k < g.steps(); ++k) {
    for (std::size_t i = 0; i < shape.rows; ++i) {
      if (shape.broadcast) {
        out[i] += f(k) * (g(k + 1, i) - g(k, i));
        continue;
      }
      for (std::size_t j = 0; j < shape.cols; ++j)
        out[i] += f(k, detail::f_index(shape, i, j)) * (g(k + 1, j) - g(k, j));
    }
  }
  return out;
}

/// t -> int_0^t f dg as prefix sums of the left-point increments; value 0 at the start.
inline GridPath indefinite_integral(const GridPath& f, const GridPath& g) {
  const auto shape = detail::shape_of(f, g);
  const std::size_t n = g.steps();
  std::vector<double> out((n + 1) * shape.rows, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < shape.rows; ++i) {
      double inc = 0.0;
      for (std::size_t j = 0; j < shape.cols; ++j) {
        if (shape.broadcast && j != i) continue;
        inc += f(k, detail::f_index(shape, i, j)) * (g(k + 1, j) - g(k, j));
      }
      out[(k + 1) * shape.rows + i] = out[k * shape.rows + i] + inc;
    }
  }
  return GridPath(g.start(), g.step(), shape.rows, std::move(out));
}

/// Hölder exponent estimated from the log-log slope of the mean increment over dyadic lags,
/// clipped to [0.01, 1]. Constant paths report 1.
inline double estimate_holder_order(const GridPath& f) {
  const std::size_t n = f.steps();
  std::vector<double> lags;
  std::vector<double> means;
  for (std::size_t lag = 1; lag <= std::max<std::size_t>(1, n / 4); lag *= 2) {
    double mean = 0.0;
    for (std::size_t i = 0; i + lag <= n; ++i) mean += point_distance(f, i + lag, i);
    mean /= static_cast<double>(n + 1 - lag);
    if (mean <= 0.0) return 1.0;
    lags.push_back(static_cast<double>(lag));
    means.push_back(mean);
  }
  if (lags.size() < 2) return 1.0;
  return std::clamp(stats::log_log_slope(lags, means), 0.01, 1.0);
}

/// Warning text when the measured Hölder orders do not sum above 1.
inline std::optional<std::string> regularity_warning(const GridPath& f, const GridPath& g) {
  const double lf = estimate_holder_order(f);
  const double lg = estimate_holder_order(g);
  if (lf + lg > 1.0) return std::nullopt;
  return "measured Hölder orders " + std::to_string(lf) + " + " + std::to_string(lg) +
         " do not exceed 1; the Young integral may not converge";
}

/// Fractional order (1 - mu + lambda)/2 clipped into (1 - mu + eps, lambda - eps), where
/// lambda and mu are the measured Hölder orders of f and g.
inline double default_alpha(const GridPath& f, const GridPath& g) {
  constexpr double eps = 0.01;
  const double lf = estimate_holder_order(f);
  const double lg = estimate_holder_order(g);
  const double lo = 1.0 - lg + eps;
  const double hi = lf - eps;
  const double mid = 0.5 * (1.0 - lg + lf);
  if (lo >= hi) return std::clamp(mid, 0.02, 0.98);
  return std::clamp(mid, lo, hi);
}

namespace detail {

// -int_a^b D^alpha_{a+} f(t) D^{1-alpha}_{b-} g_{b-}(t) dt for scalar f and g.
// Df lives on grid indices 1..n, Dg on 0..n-1. Writing the integrand as
// (t-a)^{-alpha} phi(t), phi is integrated against the kernel by product integration;
// phi(a) is extrapolated linearly and phi(b) = 0 because D^{1-alpha} g_{b-} vanishes at b.
inline double zahle_pair(std::span<const double> df, std::span<const double> dg, std::size_t n,
                         double h, double alpha, const PowerKernelWeights& w) {
  std::vector<double> phi(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    phi[i] = std::pow(static_cast<double>(i) * h, alpha) * df[i - 1] * dg[i];
  phi[0] = n >= 3 ? 2.0 * phi[1] - phi[2] : phi[1];
  phi[n] = 0.0;
  return -w.integrate(phi, n);
}

}  // namespace detail

/// Default refinement of the outer quadrature grid in zahle_integral.
inline constexpr std::size_t kZahleRefine = 8;

/// int f dg through the fractional integration-by-parts representation
///   int_a^b f dg = -int_a^b D^alpha_{a+} f(t) D^{1-alpha}_{b-} g_{b-}(t) dt
/// with both derivatives real-valued (the two complex phases multiply to -1).
///
/// Both paths are read as their piecewise-linear interpolants and the formula is evaluated
/// on a grid `refine` times finer. D^{1-alpha} g has a cusp at every knot of a rough g, so
/// the outer quadrature on the knots alone converges very slowly; refine = 1 uses the knots.
inline std::vector<double> zahle_integral(const GridPath& f_in, const GridPath& g_in, FracOrder alpha,
                                          std::size_t refine = kZahleRefine) {
  detail::shape_of(f_in, g_in);
  const GridPath f = f_in.refined(refine);
  const GridPath g = g_in.refined(refine);
  const auto shape = detail::shape_of(f, g);
  const std::size_t n = g.steps();
  if (n < 2) throw InvalidInput("Zähle integral needs n >= 2");
  const double a = alpha.value();
  const GridPath df = fraccalc::left_weyl_derivative(f, alpha);
  const GridPath dg = fraccalc::right_weyl_derivative(g, alpha.complement(), true);
  const PowerKernelWeights w(-a, g.step(), n);

  std::vector<double> dg_col(n);
  std::vector<double> df_col(n);
  std::vector<double> out(shape.rows, 0.0);
  for (std::size_t j = 0; j < shape.cols; ++j) {
    for (std::size_t k = 0; k < n; ++k) dg_col[k] = dg(k, j);
    for (std::size_t i = 0; i < shape.rows; ++i) {
      if (shape.broadcast && i != j) continue;
      const std::size_t fi = detail::f_index(shape, i, j);
      for (std::size_t k = 0; k < n; ++k) df_col[k] = df(k, fi);
      out[i] += detail::zahle_pair(df_col, dg_col, n, g.step(), a, w);
    }
  }
  return out;
}

inline std::vector<double> zahle_integral(const GridPath& f, const GridPath& g) {
  return zahle_integral(f, g, FracOrder(default_alpha(f, g)));
}

struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double lambda = 0.0;
  double f_norm = 0.0;
};

/// |int_0^T f dg| <= Lambda_alpha(g) ||f||_{alpha,1}; lhs uses the Riemann-Stieltjes sum.
inline BoundReport young_bound_check(const GridPath& f, const GridPath& g, FracOrder alpha,
                                     fraccalc::EndpointMode mode = fraccalc::EndpointMode::exact) {
  BoundReport r;
  r.lhs = euclid(rs_integral(f, g));
  r.lambda = fraccalc::lambda_alpha(g, alpha, mode).value;
  r.f_norm = f_alpha_one_norm(f, alpha);
  r.rhs = r.lambda * r.f_norm;
  r.slack = r.rhs - r.lhs;
  return r;
}

}  // namespace flowlab::young
