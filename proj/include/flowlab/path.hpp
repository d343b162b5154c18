#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowlab/error.hpp"

namespace flowlab {

/// Hölder exponent in (0, 1].
class HolderOrder {
 public:
  explicit HolderOrder(double lambda) : value_(lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0))
      throw DomainError("Hölder order must lie in (0, 1], got " + std::to_string(lambda));
  }
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Fractional order in (0, 1), used both as integration and differentiation order.
class FracOrder {
 public:
  explicit FracOrder(double alpha) : value_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw DomainError("fractional order must lie in (0, 1), got " + std::to_string(alpha));
  }
  double value() const noexcept { return value_; }
  FracOrder complement() const { return FracOrder(1.0 - value_); }

 private:
  double value_;
};

/// Vector-valued function sampled on the uniform grid t_k = start + k * step,
/// k = 0..n. Values are stored point-major: component j of point k lives at
/// values[k * dim + j]. Immutable after construction.
class GridPath {
 public:
  GridPath(double start, double step, std::size_t dim, std::vector<double> values)
      : start_(start), step_(step), dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw InvalidInput("GridPath needs at least one component");
    if (!(step_ > 0.0) || !std::isfinite(step_))
      throw InvalidInput("GridPath step must be positive and finite");
    if (values_.size() % dim_ != 0)
      throw InvalidInput("GridPath value count is not a multiple of the dimension");
    if (values_.size() / dim_ < 2)
      throw InvalidInput("GridPath needs n >= 1 (at least two grid points)");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidInput("GridPath values must be finite");
  }

  /// Samples `fn(t, out)` on [0, horizon] with n steps.
  template <typename Fn>
  static GridPath sample(double horizon, std::size_t n, std::size_t dim, Fn&& fn) {
    if (n == 0) throw InvalidInput("GridPath needs n >= 1");
    if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
    std::vector<double> values((n + 1) * dim);
    const double step = horizon / static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k)
      fn(static_cast<double>(k) * step, std::span<double>(values.data() + k * dim, dim));
    return GridPath(0.0, step, dim, std::move(values));
  }

  /// Scalar convenience overload of sample().
  template <typename Fn>
  static GridPath scalar(double horizon, std::size_t n, Fn&& fn) {
    return sample(horizon, n, 1, [&](double t, std::span<double> out) { out[0] = fn(t); });
  }

  std::size_t steps() const noexcept { return values_.size() / dim_ - 1; }
  std::size_t points() const noexcept { return values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  double step() const noexcept { return step_; }
  double start() const noexcept { return start_; }
  double length() const noexcept { return step_ * static_cast<double>(steps()); }
  double end() const noexcept { return start_ + length(); }
  double time(std::size_t k) const noexcept { return start_ + static_cast<double>(k) * step_; }

  std::span<const double> at(std::size_t k) const noexcept {
    return {values_.data() + k * dim_, dim_};
  }
  double operator()(std::size_t k, std::size_t j = 0) const noexcept {
    return values_[k * dim_ + j];
  }
  std::span<const double> data() const noexcept { return values_; }

  /// Index of grid time t, or InvalidInput when t is not on the grid.
  std::size_t index_of(double t) const {
    const double pos = (t - start_) / step_;
    const double rounded = std::round(pos);
    if (rounded < 0.0 || rounded > static_cast<double>(steps()) ||
        std::abs(pos - rounded) > 1e-9 * std::max(1.0, std::abs(pos)))
      throw InvalidInput("time " + std::to_string(t) + " is not a grid point");
    return static_cast<std::size_t>(rounded);
  }

  /// Restriction to grid indices [first, last].
  GridPath slice(std::size_t first, std::size_t last) const {
    if (first >= last || last > steps()) throw InvalidInput("slice needs first < last <= n");
    std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                          values_.begin() + static_cast<std::ptrdiff_t>((last + 1) * dim_));
    return GridPath(time(first), step_, dim_, std::move(v));
  }

  GridPath component(std::size_t j) const {
    if (j >= dim_) throw InvalidInput("component index out of range");
    std::vector<double> v(points());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = (*this)(k, j);
    return GridPath(start_, step_, 1, std::move(v));
  }

  /// t -> f(start + end - t), on the same grid.
  GridPath reversed() const {
    std::vector<double> v(values_.size());
    const std::size_t n = steps();
    for (std::size_t k = 0; k <= n; ++k)
      std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>((n - k) * dim_), dim_,
                  v.begin() + static_cast<std::ptrdiff_t>(k * dim_));
    return GridPath(start_, step_, dim_, std::move(v));
  }

  /// Every `stride`-th point; the result has steps()/stride steps.
  GridPath subsample(std::size_t stride) const {
    if (stride == 0 || steps() % stride != 0)
      throw InvalidInput("subsample stride must divide the number of steps");
    const std::size_t n = steps() / stride;
    std::vector<double> v((n + 1) * dim_);
    for (std::size_t k = 0; k <= n; ++k)
      std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(k * stride * dim_), dim_,
                  v.begin() + static_cast<std::ptrdiff_t>(k * dim_));
    return GridPath(start_, step_ * static_cast<double>(stride), dim_, std::move(v));
  }

  /// Piecewise-linear interpolant on a grid `factor` times finer; the knots are kept exactly.
  GridPath refined(std::size_t factor) const {
    if (factor == 0) throw InvalidInput("refinement factor must be positive");
    if (factor == 1) return *this;
    const std::size_t n = steps() * factor;
    std::vector<double> v((n + 1) * dim_);
    for (std::size_t k = 0; k <= n; ++k) {
      const std::size_t c = std::min(k / factor, steps() - 1);
      const double w = static_cast<double>(k - c * factor) / static_cast<double>(factor);
      for (std::size_t j = 0; j < dim_; ++j) {
        const double a = (*this)(c, j);
        v[k * dim_ + j] = a + w * ((*this)(c + 1, j) - a);
      }
    }
    return GridPath(start_, step_ / static_cast<double>(factor), dim_, std::move(v));
  }

  bool same_grid(const GridPath& other) const noexcept {
    return steps() == other.steps() &&
           std::abs(step_ - other.step_) <= 1e-12 * step_ &&
           std::abs(start_ - other.start_) <= 1e-12 * std::max(1.0, std::abs(start_));
  }

  friend GridPath operator+(const GridPath& a, const GridPath& b) { return combine(a, b, 1.0); }
  friend GridPath operator-(const GridPath& a, const GridPath& b) { return combine(a, b, -1.0); }
  friend GridPath operator*(double c, const GridPath& a) {
    std::vector<double> v(a.values_);
    for (double& x : v) x *= c;
    return GridPath(a.start_, a.step_, a.dim_, std::move(v));
  }

 private:
  static GridPath combine(const GridPath& a, const GridPath& b, double sign) {
    if (!a.same_grid(b) || a.dim_ != b.dim_) throw InvalidInput("paths live on different grids");
    std::vector<double> v(a.values_);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += sign * b.values_[i];
    return GridPath(a.start_, a.step_, a.dim_, std::move(v));
  }

  double start_;
  double step_;
  std::size_t dim_;
  std::vector<double> values_;
};

inline void require_same_grid(const GridPath& a, const GridPath& b) {
  if (!a.same_grid(b)) throw InvalidInput("paths live on different grids");
}

/// Euclidean norm of a point.
inline double euclid(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// Euclidean distance between points k and l of a path.
inline double point_distance(const GridPath& f, std::size_t k, std::size_t l) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < f.dim(); ++j) {
    const double d = f(k, j) - f(l, j);
    s += d * d;
  }
  return std::sqrt(s);
}

// CSV: header `t,x1,...,xd`, one row per grid point, 17 significant digits.

inline void write_csv(std::ostream& out, const GridPath& f) {
  out << "t";
  for (std::size_t j = 0; j < f.dim(); ++j) out << ",x" << (j + 1);
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < f.points(); ++k) {
    out << f.time(k);
    for (std::size_t j = 0; j < f.dim(); ++j) out << ',' << f(k, j);
    out << '\n';
  }
}

inline void write_csv(const std::string& file, const GridPath& f) {
  std::ofstream out(file);
  if (!out) throw InvalidInput("cannot open " + file + " for writing");
  write_csv(out, f);
}

inline GridPath read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty path CSV");
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (dim == 0 || line.rfind("t,", 0) != 0) throw InvalidInput("path CSV header must be t,x1,...,xd");
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(row, cell, ',')) {
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidInput("bad number '" + cell + "' in path CSV");
      }
      (cols == 0 ? times : values).push_back(v);
      ++cols;
    }
    if (cols != dim + 1) throw InvalidInput("ragged row in path CSV");
  }
  if (times.size() < 2) throw InvalidInput("path CSV needs at least two rows");
  const double step = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double expected = times.front() + static_cast<double>(k) * step;
    if (std::abs(times[k] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw InvalidInput("path CSV times are not a uniform grid");
  }
  return GridPath(times.front(), step, dim, std::move(values));
}

inline GridPath read_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot open " + file);
  return read_csv(in);
}

}  // namespace flowlab
