#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flowlab/error.hpp"
#include "flowlab/expr.hpp"
#include "flowlab/norms.hpp"
#include "flowlab/path.hpp"
#include "flowlab/random.hpp"

namespace flowlab::sde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Regularity constants of the coefficient hypotheses:
///   |sigma(t,x) - sigma(t,y)| <= M1 |x-y|
///   |d_i sigma(t,x) - d_i sigma(t,y)| <= M2 |x-y|^delta
///   |sigma(t,x) - sigma(s,x)| + |d_i sigma(t,x) - d_i sigma(s,x)| <= M3 |t-s|^beta
///   |b(t,x) - b(t,y)| <= L1 |x-y|,   |b(t,x)| <= L2 (1 + |x|)
/// sigma_bound is sup |sigma| when sigma is bounded, and infinity otherwise.
struct HypothesisConstants {
  double M1 = 0.0;
  double M2 = 0.0;
  double M3 = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double beta = 1.0;
  double delta = 1.0;
  double sigma_bound = std::numeric_limits<double>::infinity();
};

/// Diffusion sigma: (t, x) -> d x m matrix, drift b: (t, x) -> d-vector.
struct CoefficientField {
  std::string name;
  std::size_t dim = 1;
  std::size_t noise_dim = 1;
  std::function<Matrix(double, const Vector&)> sigma;
  std::function<Vector(double, const Vector&)> drift;
  HypothesisConstants constants;

  void validate() const {
    if (dim == 0 || noise_dim == 0) throw InvalidInput("coefficient field needs positive dimensions");
    if (!sigma || !drift) throw InvalidInput("coefficient field is missing sigma or b");
    if (!(constants.beta > 0.0 && constants.beta <= 1.0) ||
        !(constants.delta > 0.0 && constants.delta <= 1.0))
      throw DomainError("beta and delta must lie in (0, 1]");
  }
};

inline CoefficientField zero_field(std::size_t dim = 1, std::size_t noise_dim = 1) {
  CoefficientField c;
  c.name = "zero";
  c.dim = dim;
  c.noise_dim = noise_dim;
  c.sigma = [dim, noise_dim](double, const Vector&) { return Matrix::Zero(dim, noise_dim).eval(); };
  c.drift = [dim](double, const Vector&) { return Vector::Zero(dim).eval(); };
  c.constants.sigma_bound = 0.0;
  return c;
}

/// sigma(t, x) = A, b = 0.
inline CoefficientField additive_field(const Matrix& a) {
  CoefficientField c;
  c.name = "additive";
  c.dim = static_cast<std::size_t>(a.rows());
  c.noise_dim = static_cast<std::size_t>(a.cols());
  c.sigma = [a](double, const Vector&) { return a; };
  const auto d = c.dim;
  c.drift = [d](double, const Vector&) { return Vector::Zero(d).eval(); };
  c.constants.sigma_bound = a.norm();
  return c;
}

/// Scalar sigma(x) = sigma0 * x, b = 0; solution x exp(sigma0 (B_t - B_r)).
inline CoefficientField geometric_field(double sigma0) {
  CoefficientField c;
  c.name = "geometric";
  c.sigma = [sigma0](double, const Vector& x) { return Matrix::Constant(1, 1, sigma0 * x[0]).eval(); };
  c.drift = [](double, const Vector&) { return Vector::Zero(1).eval(); };
  c.constants.M1 = std::abs(sigma0);
  return c;
}

/// Scalar sigma(x) = sin(x), b = 0.
inline CoefficientField sin_field() {
  CoefficientField c;
  c.name = "sin";
  c.sigma = [](double, const Vector& x) { return Matrix::Constant(1, 1, std::sin(x[0])).eval(); };
  c.drift = [](double, const Vector&) { return Vector::Zero(1).eval(); };
  c.constants.M1 = 1.0;
  c.constants.M2 = 1.0;
  c.constants.sigma_bound = 1.0;
  return c;
}

/// sigma(t, x) = A, b(t, x) = -x.
inline CoefficientField linear_drift_field(const Matrix& a) {
  CoefficientField c = additive_field(a);
  c.name = "linear-drift";
  c.drift = [](double, const Vector& x) { return (-x).eval(); };
  c.constants.L1 = 1.0;
  c.constants.L2 = 1.0;
  return c;
}

namespace detail {

inline Matrix parse_matrix(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput("cannot parse matrix '" + text + "'");
  }
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (j.is_array() && !j.empty() && j.front().is_number()) {
    Matrix m(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    return m;
  }
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw InvalidInput("matrix must be a number, a column list, or a list of rows");
  const auto rows = j.size();
  const auto cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw InvalidInput("ragged matrix '" + text + "'");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace detail

/// Builtin fields: zero, additive:<matrix>, geometric:<sigma0>, sin, linear-drift[:<matrix>].
/// Matrices are JSON: a number, a column list, or a list of rows.
inline CoefficientField builtin_field(const std::string& spec) {
  std::string name = spec;
  if (name.rfind("builtin:", 0) == 0) name = name.substr(8);
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
  if (head == "zero") return zero_field();
  if (head == "sin") return sin_field();
  if (head == "geometric") {
    if (arg.empty()) throw InvalidInput("geometric needs a value, e.g. geometric:0.5");
    return geometric_field(std::stod(arg));
  }
  if (head == "additive") return additive_field(detail::parse_matrix(arg.empty() ? "1" : arg));
  if (head == "linear-drift") return linear_drift_field(detail::parse_matrix(arg.empty() ? "1" : arg));
  throw InvalidInput("unknown builtin coefficient field '" + spec + "'");
}

/// Declarative coefficient file:
///   {"dim": d, "noise_dim": m, "sigma": [[expr, ...], ...], "drift": [expr, ...],
///    "constants": {"M1": .., "M2": .., "M3": .., "L1": .., "L2": .., "beta": .., "delta": ..}}
inline CoefficientField load_field(const nlohmann::json& j) {
  CoefficientField c;
  c.name = j.value("name", std::string("custom"));
  c.dim = j.at("dim").get<std::size_t>();
  c.noise_dim = j.at("noise_dim").get<std::size_t>();
  const auto& sig = j.at("sigma");
  if (sig.size() != c.dim) throw InvalidInput("sigma needs dim rows");
  std::vector<expr::Expression> sigma_expr;
  for (const auto& row : sig) {
    if (row.size() != c.noise_dim) throw InvalidInput("sigma rows need noise_dim entries");
    for (const auto& e : row) sigma_expr.push_back(expr::Expression::parse(e.get<std::string>(), c.dim));
  }
  std::vector<expr::Expression> drift_expr;
  if (j.contains("drift")) {
    if (j["drift"].size() != c.dim) throw InvalidInput("drift needs dim entries");
    for (const auto& e : j["drift"]) drift_expr.push_back(expr::Expression::parse(e.get<std::string>(), c.dim));
  } else {
    drift_expr.assign(c.dim, expr::Expression::parse("0", c.dim));
  }
  const auto d = c.dim;
  const auto m = c.noise_dim;
  c.sigma = [sigma_expr, d, m](double t, const Vector& x) {
    Matrix out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
    const std::span<const double> xs(x.data(), d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t q = 0; q < m; ++q)
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = sigma_expr[r * m + q](t, xs);
    return out;
  };
  c.drift = [drift_expr, d](double t, const Vector& x) {
    Vector out(static_cast<Eigen::Index>(d));
    const std::span<const double> xs(x.data(), d);
    for (std::size_t r = 0; r < d; ++r) out[static_cast<Eigen::Index>(r)] = drift_expr[r](t, xs);
    return out;
  };
  if (j.contains("constants")) {
    const auto& k = j["constants"];
    c.constants.M1 = k.value("M1", 0.0);
    c.constants.M2 = k.value("M2", 0.0);
    c.constants.M3 = k.value("M3", 0.0);
    c.constants.L1 = k.value("L1", 0.0);
    c.constants.L2 = k.value("L2", 0.0);
    c.constants.beta = k.value("beta", 1.0);
    c.constants.delta = k.value("delta", 1.0);
    if (k.contains("sigma_bound")) c.constants.sigma_bound = k["sigma_bound"].get<double>();
  }
  c.validate();
  return c;
}

inline CoefficientField load_field_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot open coefficient file " + file);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("coefficient file " + file + ": " + e.what());
  }
  return load_field(j);
}

/// Builtin name, "builtin:<name>", or a path to a JSON coefficient file.
inline CoefficientField resolve_field(const std::string& spec) {
  if (spec.rfind("builtin:", 0) == 0) return builtin_field(spec);
  if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") return load_field_file(spec);
  return builtin_field(spec);
}

/// alpha_0 = min{1/2, beta, delta / (1 + delta)}.
inline double alpha0(double beta, double delta) {
  if (!(beta > 0.0 && beta <= 1.0) || !(delta > 0.0 && delta <= 1.0))
    throw DomainError("beta and delta must lie in (0, 1]");
  return std::min({0.5, beta, delta / (1.0 + delta)});
}

/// Solver parameters; construction enforces alpha in (1 - H, alpha_0).
class SolverConfig {
 public:
  SolverConfig(double alpha, std::size_t steps, double hurst, double beta, double delta)
      : alpha_(alpha), steps_(steps), hurst_(hurst) {
    if (!(hurst > 0.5 && hurst < 1.0)) throw DomainError("solver needs 1/2 < H < 1");
    if (steps == 0) throw InvalidInput("solver needs at least one step");
    const double upper = alpha0(beta, delta);
    if (!(alpha > 1.0 - hurst && alpha < upper))
      throw DomainError("alpha = " + std::to_string(alpha) + " outside the admissible window (" +
                        std::to_string(1.0 - hurst) + ", " + std::to_string(upper) + ")");
  }
  SolverConfig(double alpha, std::size_t steps, double hurst, const CoefficientField& c)
      : SolverConfig(alpha, steps, hurst, c.constants.beta, c.constants.delta) {}

  FracOrder alpha() const { return alpha_; }
  std::size_t steps() const noexcept { return steps_; }
  double hurst() const noexcept { return hurst_; }

 private:
  FracOrder alpha_;
  std::size_t steps_;
  double hurst_;
};

enum class Scheme { euler, heun };

struct SolveOptions {
  Scheme scheme = Scheme::euler;
  /// Abort when |X| exceeds blowup_factor * (1 + |x|).
  double blowup_factor = 1e12;
};

namespace detail {

struct Grid {
  std::size_t stride;
  std::size_t steps;
  double h;
};

inline Grid solver_grid(const GridPath& driver, const SolverConfig& cfg, const CoefficientField& c,
                        std::size_t state_dim) {
  c.validate();
  if (driver.dim() != c.noise_dim)
    throw InvalidInput("driver has " + std::to_string(driver.dim()) + " components, field expects " +
                       std::to_string(c.noise_dim));
  if (state_dim != c.dim) throw InvalidInput("initial point has the wrong dimension");
  if (driver.steps() % cfg.steps() != 0)
    throw InvalidInput("solver steps must divide the driver grid size");
  const std::size_t stride = driver.steps() / cfg.steps();
  return {stride, cfg.steps(), driver.step() * static_cast<double>(stride)};
}

inline Vector increment(const GridPath& driver, std::size_t from, std::size_t to) {
  Vector db(static_cast<Eigen::Index>(driver.dim()));
  for (std::size_t j = 0; j < driver.dim(); ++j)
    db[static_cast<Eigen::Index>(j)] = driver(to, j) - driver(from, j);
  return db;
}

inline void check_guard(const Vector& x, double limit, double t) {
  if (!x.allFinite() || x.norm() > limit)
    throw BlowUpError("solution left the blow-up guard at t = " + std::to_string(t) +
                      "; the hypotheses are violated or the grid is too coarse");
}

inline std::vector<double> to_values(const std::vector<Vector>& states) {
  std::vector<double> out;
  out.reserve(states.size() * static_cast<std::size_t>(states.front().size()));
  for (const auto& s : states) out.insert(out.end(), s.data(), s.data() + s.size());
  return out;
}

}  // namespace detail

/// X_{r,.}(x): left-point scheme X_{k+1} = X_k + sigma(t_k, X_k) dB_k + b(t_k, X_k) dt on the
/// solver grid (every stride-th driver point), returned on the grid points >= r.
inline GridPath solve_forward(const Vector& x, double r, const CoefficientField& c,
                              const GridPath& driver, const SolverConfig& cfg,
                              const SolveOptions& opt = {}) {
  const auto grid = detail::solver_grid(driver, cfg, c, static_cast<std::size_t>(x.size()));
  const GridPath coarse_times(driver.start(), grid.h, 1, std::vector<double>(grid.steps + 1, 0.0));
  const std::size_t first = coarse_times.index_of(r);
  if (first == grid.steps) throw InvalidInput("forward solve needs r < T");
  const double limit = opt.blowup_factor * (1.0 + x.norm());

  std::vector<Vector> states{x};
  states.reserve(grid.steps - first + 1);
  Vector cur = x;
  for (std::size_t k = first; k < grid.steps; ++k) {
    const double t = coarse_times.time(k);
    const Vector db = detail::increment(driver, k * grid.stride, (k + 1) * grid.stride);
    Vector next = cur + c.sigma(t, cur) * db + c.drift(t, cur) * grid.h;
    if (opt.scheme == Scheme::heun) {
      const double t1 = coarse_times.time(k + 1);
      next = cur + 0.5 * (c.sigma(t, cur) + c.sigma(t1, next)) * db +
             0.5 * (c.drift(t, cur) + c.drift(t1, next)) * grid.h;
    }
    detail::check_guard(next, limit, coarse_times.time(k + 1));
    cur = next;
    states.push_back(cur);
  }
  return GridPath(coarse_times.time(first), grid.h, c.dim, detail::to_values(states));
}

/// r -> Y_{r,t}(x) for grid r in [0, t]: stepping backward from Y_{tt}(x) = x with
/// Y_k = Y_{k+1} - sigma(t_{k+1}, Y_{k+1}) dB_k - b(t_{k+1}, Y_{k+1}) dt, the right-point
/// mirror of the forward scheme. Returned on [start, t]; the last value is x.
inline GridPath solve_backward(const Vector& x, double t, const CoefficientField& c,
                               const GridPath& driver, const SolverConfig& cfg,
                               const SolveOptions& opt = {}) {
  const auto grid = detail::solver_grid(driver, cfg, c, static_cast<std::size_t>(x.size()));
  const GridPath coarse_times(driver.start(), grid.h, 1, std::vector<double>(grid.steps + 1, 0.0));
  const std::size_t last = coarse_times.index_of(t);
  if (last == 0) throw InvalidInput("backward solve needs t > start");
  const double limit = opt.blowup_factor * (1.0 + x.norm());

  std::vector<Vector> states(last + 1);
  states[last] = x;
  for (std::size_t k = last; k-- > 0;) {
    const Vector& cur = states[k + 1];
    const double t1 = coarse_times.time(k + 1);
    const Vector db = detail::increment(driver, k * grid.stride, (k + 1) * grid.stride);
    Vector prev = cur - c.sigma(t1, cur) * db - c.drift(t1, cur) * grid.h;
    if (opt.scheme == Scheme::heun) {
      const double t0 = coarse_times.time(k);
      prev = cur - 0.5 * (c.sigma(t1, cur) + c.sigma(t0, prev)) * db -
             0.5 * (c.drift(t1, cur) + c.drift(t0, prev)) * grid.h;
    }
    detail::check_guard(prev, limit, coarse_times.time(k));
    states[k] = std::move(prev);
  }
  return GridPath(driver.start(), grid.h, c.dim, detail::to_values(states));
}

inline Vector point_of(const GridPath& p, std::size_t k) {
  const auto v = p.at(k);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Realized two-parameter solution family for one driver. Solutions are computed on demand
/// and cached per (start or end index, initial point). Not thread-safe; use one per worker.
class FlowMap {
 public:
  FlowMap(GridPath driver, CoefficientField coefficients, SolverConfig config, SolveOptions options = {})
      : driver_(std::move(driver)),
        coefficients_(std::move(coefficients)),
        config_(config),
        options_(options),
        times_(driver_.start(), driver_.length() / static_cast<double>(config.steps()), 1,
               std::vector<double>(config.steps() + 1, 0.0)) {
    detail::solver_grid(driver_, config_, coefficients_, coefficients_.dim);
  }

  const GridPath& driver() const noexcept { return driver_; }
  const SolverConfig& config() const noexcept { return config_; }
  const CoefficientField& coefficients() const noexcept { return coefficients_; }
  std::size_t index_of(double t) const { return times_.index_of(t); }
  double time(std::size_t k) const { return times_.time(k); }

  /// X_{rt}(x).
  Vector forward(double r, double t, const Vector& x) {
    const std::size_t ri = index_of(r);
    const std::size_t ti = index_of(t);
    if (ti < ri) throw InvalidInput("forward flow needs r <= t");
    if (ri == ti) return x;
    return point_of(forward_path(ri, x), ti - ri);
  }

  /// Y_{rt}(x).
  Vector backward(double r, double t, const Vector& x) {
    const std::size_t ri = index_of(r);
    const std::size_t ti = index_of(t);
    if (ti < ri) throw InvalidInput("backward flow needs r <= t");
    if (ri == ti) return x;
    return point_of(backward_path(ti, x), ri);
  }

  const GridPath& forward_path(std::size_t r_index, const Vector& x) {
    Key key{r_index, std::vector<double>(x.data(), x.data() + x.size())};
    auto it = forward_cache_.find(key);
    if (it == forward_cache_.end())
      it = forward_cache_
               .emplace(std::move(key),
                        solve_forward(x, time(r_index), coefficients_, driver_, config_, options_))
               .first;
    return it->second;
  }

  const GridPath& backward_path(std::size_t t_index, const Vector& x) {
    Key key{t_index, std::vector<double>(x.data(), x.data() + x.size())};
    auto it = backward_cache_.find(key);
    if (it == backward_cache_.end())
      it = backward_cache_
               .emplace(std::move(key),
                        solve_backward(x, time(t_index), coefficients_, driver_, config_, options_))
               .first;
    return it->second;
  }

 private:
  using Key = std::pair<std::size_t, std::vector<double>>;

  GridPath driver_;
  CoefficientField coefficients_;
  SolverConfig config_;
  SolveOptions options_;
  GridPath times_;
  std::map<Key, GridPath> forward_cache_;
  std::map<Key, GridPath> backward_cache_;
};

/// (X_{tau t}(X_{r tau}(x)), X_{rt}(x)).
inline std::pair<Vector, Vector> flow_compose(FlowMap& map, double r, double tau, double t, const Vector& x) {
  if (!(r <= tau && tau <= t)) throw InvalidInput("flow composition needs r <= tau <= t");
  const Vector mid = map.forward(r, tau, x);
  return {map.forward(tau, t, mid), map.forward(r, t, x)};
}

/// (Y_{r tau}(Y_{tau t}(x)), Y_{rt}(x)).
inline std::pair<Vector, Vector> backward_compose(FlowMap& map, double r, double tau, double t,
                                                  const Vector& x) {
  if (!(r <= tau && tau <= t)) throw InvalidInput("flow composition needs r <= tau <= t");
  const Vector mid = map.backward(tau, t, x);
  return {map.backward(r, tau, mid), map.backward(r, t, x)};
}

/// Lattice for the empirical constant search: `points` base points uniform in the box
/// [-radius, radius]^d, each paired with neighbours at the given distances, and
/// `time_points` uniform times on [0, horizon].
struct Lattice {
  double radius = 4.0;
  double horizon = 1.0;
  std::size_t points = 400;
  std::size_t time_points = 9;
  std::vector<double> scales{1.0, 0.1, 1e-2, 1e-3};
  std::uint64_t seed = 1;
};

struct CoefficientReport {
  HypothesisConstants empirical;
  HypothesisConstants declared;
  std::vector<std::string> exceeded;
  /// Lattice maxima can only show the declared constants are consistent with the field.
  bool consistent() const noexcept { return exceeded.empty(); }
};

inline CoefficientReport validate_coefficients(const CoefficientField& c, const Lattice& lattice = {}) {
  c.validate();
  const auto d = static_cast<Eigen::Index>(c.dim);
  const double beta = c.constants.beta;
  const double delta = c.constants.delta;
  GaussianStream rng(lattice.seed);
  auto checked = [](const auto& v, const char* what) {
    if (!v.allFinite()) throw DomainError(std::string(what) + " returned a non-finite value on the lattice");
    return v;
  };
  auto sig = [&](double t, const Vector& x) { return checked(c.sigma(t, x), "sigma"); };
  auto drift = [&](double t, const Vector& x) { return checked(c.drift(t, x), "b"); };
  constexpr double fd = 1e-5;
  auto partial = [&](double t, const Vector& x, Eigen::Index i) {
    Vector up = x;
    Vector down = x;
    up[i] += fd;
    down[i] -= fd;
    return ((sig(t, up) - sig(t, down)) / (2.0 * fd)).eval();
  };

  std::vector<double> times(lattice.time_points);
  for (std::size_t k = 0; k < times.size(); ++k)
    times[k] = lattice.horizon * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(1, times.size() - 1));

  HypothesisConstants e;
  e.beta = beta;
  e.delta = delta;
  e.sigma_bound = 0.0;
  for (std::size_t p = 0; p < lattice.points; ++p) {
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = lattice.radius * (2.0 * rng.uniform_open() - 1.0);
    Vector dir(d);
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = rng();
    if (dir.norm() == 0.0) dir[0] = 1.0;
    dir.normalize();
    for (double t : times) {
      const Matrix sx = sig(t, x);
      const Vector bx = drift(t, x);
      e.sigma_bound = std::max(e.sigma_bound, sx.norm());
      e.L2 = std::max(e.L2, bx.norm() / (1.0 + x.norm()));
      for (double scale : lattice.scales) {
        const Vector y = x + scale * dir;
        const double dist = (x - y).norm();
        e.M1 = std::max(e.M1, (sx - sig(t, y)).norm() / dist);
        e.L1 = std::max(e.L1, (bx - drift(t, y)).norm() / dist);
        for (Eigen::Index i = 0; i < d; ++i)
          e.M2 = std::max(e.M2, (partial(t, x, i) - partial(t, y, i)).norm() / std::pow(dist, delta));
      }
      for (double s : times) {
        if (s == t) continue;
        double dpart = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) dpart = std::max(dpart, (partial(t, x, i) - partial(s, x, i)).norm());
        e.M3 = std::max(e.M3, ((sx - sig(s, x)).norm() + dpart) / std::pow(std::abs(t - s), beta));
      }
    }
  }

  CoefficientReport report{e, c.constants, {}};
  auto flag = [&](const char* name, double declared, double empirical) {
    if (empirical > declared * (1.0 + 1e-6) + 1e-6) report.exceeded.emplace_back(name);
  };
  flag("M1", c.constants.M1, e.M1);
  flag("M2", c.constants.M2, e.M2);
  flag("M3", c.constants.M3, e.M3);
  flag("L1", c.constants.L1, e.L1);
  flag("L2", c.constants.L2, e.L2);
  if (std::isfinite(c.constants.sigma_bound)) flag("sigma_bound", c.constants.sigma_bound, e.sigma_bound);
  return report;
}

struct SupEstimateReport {
  double sup_abs = 0.0;
  double initial_abs = 0.0;
  double driver_holder = 0.0;
  /// max(||sigma'||_inf, |sigma(0)|), with ||sigma'||_inf taken from the declared M1.
  double sigma_scale = 0.0;
  /// (log2(sup|X| / (|X0| + 1)) - 1) / (T sigma_scale ||B||_theta^{1/theta}); 0 when the
  /// denominator vanishes and the bound already holds.
  double implied_ratio = 0.0;
  /// Smallest k >= 0 for which the exponential bound holds on this path.
  double implied_k = 0.0;
  /// Same for the bounded-sigma estimate; NaN when sigma is unbounded or sigma' = 0.
  double implied_k_bounded = std::numeric_limits<double>::quiet_NaN();
};

inline SupEstimateReport sup_estimate_check(const GridPath& solution, const GridPath& driver,
                                            const CoefficientField& c, HolderOrder theta) {
  if (!(theta.value() > 0.5)) throw DomainError("theta must lie in (1/2, H)");
  SupEstimateReport r;
  r.sup_abs = sup_norm(solution);
  r.initial_abs = euclid(solution.at(0));
  r.driver_holder = holder_seminorm(driver, theta);
  const double horizon = driver.length();
  const Vector origin = Vector::Zero(static_cast<Eigen::Index>(c.dim));
  r.sigma_scale = std::max(c.constants.M1, c.sigma(driver.start(), origin).norm());
  const double holder_power = std::pow(r.driver_holder, 1.0 / theta.value());
  const double exponent = std::log2(r.sup_abs / (r.initial_abs + 1.0)) - 1.0;
  const double denom = horizon * r.sigma_scale * holder_power;
  if (denom > 0.0) {
    r.implied_ratio = exponent / denom;
  } else {
    r.implied_ratio = exponent <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  r.implied_k = std::max(0.0, r.implied_ratio);
  const double bound = c.constants.sigma_bound;
  if (std::isfinite(bound) && bound > 0.0 && c.constants.M1 > 0.0) {
    const double th = theta.value();
    const double scale = std::max(std::pow(horizon, th) * holder_power,
                                  horizon * std::pow(c.constants.M1, (1.0 - th) / th) * holder_power);
    r.implied_k_bounded = scale > 0.0 ? std::max(0.0, (r.sup_abs - r.initial_abs) / (bound * scale)) : 0.0;
  }
  return r;
}

}  // namespace flowlab::sde
