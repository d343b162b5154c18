#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flowlab/error.hpp"
#include "flowlab/fbm.hpp"
#include "flowlab/fraccalc.hpp"
#include "flowlab/norms.hpp"
#include "flowlab/path.hpp"
#include "flowlab/random.hpp"
#include "flowlab/sde.hpp"
#include "flowlab/stats.hpp"

namespace flowlab::experiment {

using nlohmann::json;

enum class Kind { flow, inverse, rate, init_continuity, driver_continuity, moments };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::flow: return "flow";
    case Kind::inverse: return "inverse";
    case Kind::rate: return "rate";
    case Kind::init_continuity: return "init-continuity";
    case Kind::driver_continuity: return "driver-continuity";
    case Kind::moments: return "moments";
  }
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  for (Kind k : {Kind::flow, Kind::inverse, Kind::rate, Kind::init_continuity, Kind::driver_continuity,
                 Kind::moments})
    if (s == to_string(k)) return k;
  throw InvalidInput("unknown experiment kind '" + s + "'");
}

struct ExperimentConfig {
  Kind kind = Kind::flow;
  double hurst = 0.75;
  double alpha = 0.3;
  double horizon = 1.0;
  std::size_t fine_n = 1024;
  std::vector<std::size_t> ladder{1024};
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::uint64_t> calibration_seeds{100001, 100002, 100003, 100004, 100005};
  std::string coefficients = "geometric:0.5";
  std::vector<std::vector<double>> initial_points{{1.0}};
  /// Times (fractions of the horizon) from which flow triples and inverse pairs are built.
  std::vector<double> time_points{0.0, 0.25, 0.5, 0.75, 1.0};
  /// Weight of the exponentially weighted norm; unset means (4 Lambda)^{1/(1-2 alpha)}.
  std::optional<double> lambda;
  double theta = 0.55;
  std::size_t pairs = 100;
  double radius = 2.0;
  std::size_t fan = 9;
  std::vector<double> moment_orders{2.0, 4.0, 8.0};
  double exp_lambda = 1.0;
  double exp_gamma = 1.4;
  /// "exact" for fields whose scheme is exact (zero, additive), "convergent" otherwise.
  std::string expect = "auto";
  std::string sampler = "circulant";
  std::map<std::string, double> tolerances;
  std::string output = "out";
  unsigned threads = 0;

  double tolerance(const std::string& key, double fallback) const {
    const auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
  }

  bool exact_expected() const {
    if (expect == "exact") return true;
    if (expect == "convergent") return false;
    return coefficients.rfind("zero", 0) == 0 || coefficients.rfind("additive", 0) == 0 ||
           coefficients.rfind("builtin:zero", 0) == 0 || coefficients.rfind("builtin:additive", 0) == 0;
  }

  bool uses_solver() const { return kind != Kind::rate; }

  void validate() const {
    if (seeds.empty()) throw InvalidInput("seed list must be nonempty");
    if (ladder.empty()) throw InvalidInput("ladder must be nonempty");
    for (std::size_t i = 1; i < ladder.size(); ++i)
      if (ladder[i] <= ladder[i - 1]) throw InvalidInput("ladder must be strictly increasing");
    for (auto n : ladder)
      if (n == 0 || fine_n % n != 0)
        throw InvalidInput("ladder entry " + std::to_string(n) + " does not divide fine_n " + std::to_string(fine_n));
    if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
    if (expect != "auto" && expect != "exact" && expect != "convergent")
      throw InvalidInput("expect must be auto, exact or convergent");
    if (sampler != "circulant" && sampler != "cholesky") throw InvalidInput("sampler must be circulant or cholesky");
    if (uses_solver()) {
      const auto c = sde::resolve_field(coefficients);
      for (auto n : ladder) sde::SolverConfig(alpha, n, hurst, c);
      if (initial_points.empty()) throw InvalidInput("initial point list must be nonempty");
      for (const auto& x : initial_points)
        if (x.size() != c.dim) throw InvalidInput("initial point dimension does not match the coefficient field");
    } else {
      sde::SolverConfig(alpha, fine_n, hurst, 1.0, 1.0);
      HolderOrder{theta};
      if (!(theta < hurst)) throw DomainError("theta must be below H");
    }
    if (kind == Kind::flow || kind == Kind::inverse) {
      if (time_points.size() < 2) throw InvalidInput("need at least two time points");
      for (double p : time_points) {
        if (p < 0.0 || p > 1.0) throw InvalidInput("time points are fractions of the horizon in [0, 1]");
        for (auto n : ladder) {
          const double k = p * static_cast<double>(n);
          if (std::abs(k - std::round(k)) > 1e-9) throw InvalidInput("time points must lie on every ladder grid");
        }
      }
      if (!std::is_sorted(time_points.begin(), time_points.end())) throw InvalidInput("time points must be sorted");
    }
    if (kind == Kind::init_continuity && (pairs == 0 || !(radius > 0.0)))
      throw InvalidInput("init-continuity needs pairs > 0 and radius > 0");
    if (kind == Kind::moments && seeds.size() < 4) throw InvalidInput("moments need at least four samples");
    if (lambda && !(*lambda >= 0.0)) throw InvalidInput("lambda must be nonnegative");
  }
};

namespace detail {

inline json seeds_to_json(const std::vector<std::uint64_t>& seeds) {
  bool contiguous = seeds.size() > 8;
  for (std::size_t i = 1; contiguous && i < seeds.size(); ++i) contiguous = seeds[i] == seeds[i - 1] + 1;
  if (contiguous) return json{{"first", seeds.front()}, {"count", seeds.size()}};
  return seeds;
}

inline std::vector<std::uint64_t> seeds_from_json(const json& j) {
  if (j.is_object()) {
    const auto first = j.at("first").get<std::uint64_t>();
    const auto count = j.at("count").get<std::size_t>();
    std::vector<std::uint64_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = first + i;
    return out;
  }
  return j.get<std::vector<std::uint64_t>>();
}

}  // namespace detail

inline json to_json(const ExperimentConfig& c) {
  json j{{"kind", to_string(c.kind)},
         {"hurst", c.hurst},
         {"alpha", c.alpha},
         {"horizon", c.horizon},
         {"fine_n", c.fine_n},
         {"ladder", c.ladder},
         {"seeds", detail::seeds_to_json(c.seeds)},
         {"calibration_seeds", c.calibration_seeds},
         {"coefficients", c.coefficients},
         {"initial_points", c.initial_points},
         {"time_points", c.time_points},
         {"theta", c.theta},
         {"pairs", c.pairs},
         {"radius", c.radius},
         {"fan", c.fan},
         {"moment_orders", c.moment_orders},
         {"exp_lambda", c.exp_lambda},
         {"exp_gamma", c.exp_gamma},
         {"expect", c.expect},
         {"sampler", c.sampler},
         {"tolerances", c.tolerances},
         {"output", c.output},
         {"threads", c.threads}};
  j["lambda"] = c.lambda ? json(*c.lambda) : json(nullptr);
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.kind = parse_kind(j.at("kind").get<std::string>());
    c.hurst = j.value("hurst", c.hurst);
    c.alpha = j.value("alpha", c.alpha);
    c.horizon = j.value("horizon", c.horizon);
    c.fine_n = j.value("fine_n", c.fine_n);
    c.ladder = j.value("ladder", std::vector<std::size_t>{c.fine_n});
    if (j.contains("seeds")) c.seeds = detail::seeds_from_json(j["seeds"]);
    if (j.contains("calibration_seeds")) c.calibration_seeds = detail::seeds_from_json(j["calibration_seeds"]);
    c.coefficients = j.value("coefficients", c.coefficients);
    c.initial_points = j.value("initial_points", c.initial_points);
    c.time_points = j.value("time_points", c.time_points);
    if (j.contains("lambda") && !j["lambda"].is_null()) c.lambda = j["lambda"].get<double>();
    c.theta = j.value("theta", c.theta);
    c.pairs = j.value("pairs", c.pairs);
    c.radius = j.value("radius", c.radius);
    c.fan = j.value("fan", c.fan);
    c.moment_orders = j.value("moment_orders", c.moment_orders);
    c.exp_lambda = j.value("exp_lambda", c.exp_lambda);
    c.exp_gamma = j.value("exp_gamma", c.exp_gamma);
    c.expect = j.value("expect", c.expect);
    c.sampler = j.value("sampler", c.sampler);
    c.tolerances = j.value("tolerances", c.tolerances);
    c.output = j.value("output", c.output);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot open config " + file);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("config " + file + ": " + e.what());
  }
  return config_from_json(j);
}

/// One cell of the (seed x level x probe) sweep.
struct Record {
  std::uint64_t seed = 0;
  std::size_t level = 0;
  std::string probe;
  std::vector<double> values;
  std::string status = "ok";
  std::string message;

  bool ok() const noexcept { return status == "ok"; }
};

inline std::vector<std::string> columns_for(Kind k) {
  switch (k) {
    case Kind::flow: return {"forward_discrepancy", "backward_discrepancy", "forward_defect", "backward_defect"};
    case Kind::inverse: return {"xy_discrepancy", "yx_discrepancy", "inversions"};
    case Kind::rate: return {"holder_error", "scaled_error", "lambda_polygonal", "lambda_gap"};
    case Kind::init_continuity: return {"distance", "difference_norm", "ratio", "lambda"};
    case Kind::driver_continuity: return {"lambda_gap", "difference_norm", "ratio", "lambda"};
    case Kind::moments: return {"sup_abs"};
  }
  return {};
}

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::string> columns;
  std::vector<Record> records;
  json summary;
  double wall_time = 0.0;

  bool all_pass() const { return summary.value("all_pass", false); }
};

namespace detail {

struct Triple {
  double r;
  double tau;
  double t;
};

inline std::vector<Triple> triples(const ExperimentConfig& c) {
  std::vector<Triple> out;
  const auto& p = c.time_points;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i; j < p.size(); ++j)
      for (std::size_t k = j; k < p.size(); ++k)
        out.push_back({p[i] * c.horizon, p[j] * c.horizon, p[k] * c.horizon});
  return out;
}

inline std::vector<std::pair<double, double>> time_pairs(const ExperimentConfig& c) {
  std::vector<std::pair<double, double>> out;
  const auto& p = c.time_points;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) out.emplace_back(p[i] * c.horizon, p[j] * c.horizon);
  return out;
}

inline std::size_t probes_per_level(const ExperimentConfig& c) {
  switch (c.kind) {
    case Kind::flow: return triples(c).size() * c.initial_points.size();
    case Kind::inverse: return time_pairs(c).size();
    case Kind::rate: return 1;
    case Kind::init_continuity: return c.pairs;
    case Kind::driver_continuity: return c.initial_points.size();
    case Kind::moments: return 1;
  }
  return 0;
}

inline std::string format_time(double t) {
  std::ostringstream s;
  s << t;
  return s.str();
}

inline GridPath sample_driver(const ExperimentConfig& c, std::size_t components, std::uint64_t seed) {
  fbm::FbmSpec spec;
  spec.hurst = c.hurst;
  spec.components = components;
  spec.horizon = c.horizon;
  spec.grid_size = c.fine_n;
  spec.seed = seed;
  return c.sampler == "cholesky" ? fbm::sample_cholesky(spec).path : fbm::sample_circulant(spec).path;
}

inline sde::Vector to_vector(const std::vector<double>& x) {
  return Eigen::Map<const sde::Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline double weight_for(const ExperimentConfig& c, const GridPath& driver) {
  if (c.lambda) return *c.lambda;
  const double lam = fraccalc::lambda_alpha(driver, FracOrder(c.alpha)).value;
  return std::pow(4.0 * lam, 1.0 / (1.0 - 2.0 * c.alpha));
}

inline std::vector<Record> error_records(const ExperimentConfig& c, std::uint64_t seed, std::size_t level,
                                         const std::string& message) {
  std::vector<Record> out;
  const auto width = columns_for(c.kind).size();
  for (std::size_t p = 0; p < probes_per_level(c); ++p) {
    Record r{seed, level, "probe" + std::to_string(p),
             std::vector<double>(width, std::numeric_limits<double>::quiet_NaN()), "error", message};
    out.push_back(std::move(r));
  }
  return out;
}

using LevelFn = std::function<std::vector<Record>(std::size_t level)>;

// Runs one level at a time so that a failing solve becomes error records for that level only.
inline std::vector<Record> per_level(const ExperimentConfig& c, std::uint64_t seed,
                                     const std::vector<std::size_t>& ladder, const LevelFn& fn) {
  std::vector<Record> out;
  for (auto n : ladder) {
    std::vector<Record> level;
    try {
      level = fn(n);
    } catch (const std::exception& e) {
      level = error_records(c, seed, n, e.what());
    }
    out.insert(out.end(), std::make_move_iterator(level.begin()), std::make_move_iterator(level.end()));
  }
  return out;
}

inline std::vector<Record> flow_seed(const ExperimentConfig& c, const sde::CoefficientField& field,
                                     std::uint64_t seed, const std::vector<std::size_t>& ladder) {
  std::optional<GridPath> driver;
  std::optional<sde::FlowMap> reference;
  try {
    driver = sample_driver(c, field.noise_dim, seed);
    reference.emplace(*driver, field, sde::SolverConfig(c.alpha, c.fine_n, c.hurst, field));
  } catch (const std::exception& e) {
    std::vector<Record> out;
    for (auto n : ladder) {
      auto part = error_records(c, seed, n, e.what());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  const auto trip = triples(c);
  return per_level(c, seed, ladder, [&](std::size_t n) {
    sde::FlowMap map(*driver, field, sde::SolverConfig(c.alpha, n, c.hurst, field));
    std::vector<Record> out;
    for (const auto& tr : trip) {
      for (std::size_t i = 0; i < c.initial_points.size(); ++i) {
        const auto x = to_vector(c.initial_points[i]);
        const auto [fcomp, fdirect] = sde::flow_compose(map, tr.r, tr.tau, tr.t, x);
        const auto [bcomp, bdirect] = sde::backward_compose(map, tr.r, tr.tau, tr.t, x);
        const double fwd = (fcomp - reference->forward(tr.r, tr.t, x)).norm();
        const double bwd = (bcomp - reference->backward(tr.r, tr.t, x)).norm();
        Record r{seed, n,
                 "r=" + format_time(tr.r) + ";tau=" + format_time(tr.tau) + ";t=" + format_time(tr.t) +
                     ";x=" + std::to_string(i),
                 {fwd, bwd, (fcomp - fdirect).norm(), (bcomp - bdirect).norm()}, "ok", {}};
        out.push_back(std::move(r));
      }
    }
    return out;
  });
}

inline std::size_t count_inversions(const std::vector<double>& ys) {
  std::size_t count = 0;
  for (std::size_t j = 1; j < ys.size(); ++j)
    if (!(ys[j] > ys[j - 1])) ++count;
  return count;
}

inline std::vector<Record> inverse_seed(const ExperimentConfig& c, const sde::CoefficientField& field,
                                        std::uint64_t seed, const std::vector<std::size_t>& ladder) {
  std::optional<GridPath> driver;
  try {
    driver = sample_driver(c, field.noise_dim, seed);
  } catch (const std::exception& e) {
    std::vector<Record> out;
    for (auto n : ladder) {
      auto part = error_records(c, seed, n, e.what());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  const auto tp = time_pairs(c);
  std::vector<double> fan(c.fan);
  for (std::size_t j = 0; j < fan.size(); ++j)
    fan[j] = fan.size() == 1 ? 0.0
                             : -c.radius + 2.0 * c.radius * static_cast<double>(j) / static_cast<double>(fan.size() - 1);
  return per_level(c, seed, ladder, [&](std::size_t n) {
    sde::FlowMap map(*driver, field, sde::SolverConfig(c.alpha, n, c.hurst, field));
    std::vector<Record> out;
    for (const auto& [r, t] : tp) {
      double xy = 0.0;
      double yx = 0.0;
      for (const auto& xi : c.initial_points) {
        const auto x = to_vector(xi);
        xy = std::max(xy, (map.forward(r, t, map.backward(r, t, x)) - x).norm());
        yx = std::max(yx, (map.backward(r, t, map.forward(r, t, x)) - x).norm());
      }
      double inversions = std::numeric_limits<double>::quiet_NaN();
      if (field.dim == 1 && fan.size() >= 2) {
        std::vector<double> fx;
        std::vector<double> fy;
        for (double x0 : fan) {
          const sde::Vector x = sde::Vector::Constant(1, x0);
          fx.push_back(map.forward(r, t, x)[0]);
          fy.push_back(map.backward(r, t, x)[0]);
        }
        inversions = static_cast<double>(count_inversions(fx) + count_inversions(fy));
      }
      out.push_back(Record{seed, n, "r=" + format_time(r) + ";t=" + format_time(t), {xy, yx, inversions}, "ok", {}});
    }
    return out;
  });
}

inline std::vector<Record> rate_seed(const ExperimentConfig& c, std::uint64_t seed) {
  std::optional<GridPath> fine;
  try {
    fine = sample_driver(c, 1, seed);
  } catch (const std::exception& e) {
    std::vector<Record> out;
    for (auto n : c.ladder) {
      auto part = error_records(c, seed, n, e.what());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  const FracOrder alpha(c.alpha);
  return per_level(c, seed, c.ladder, [&](std::size_t n) {
    const GridPath approx = fbm::polygonal(*fine, n);
    const double err = fbm::holder_error(*fine, approx, HolderOrder(c.theta));
    const double scaled = err / std::sqrt(std::log(static_cast<double>(n)));
    const double lp = fraccalc::lambda_alpha(approx, alpha).value;
    const double lg = fraccalc::lambda_alpha(approx - *fine, alpha).value;
    return std::vector<Record>{Record{seed, n, "path", {err, scaled, lp, lg}, "ok", {}}};
  });
}

inline std::vector<Record> init_continuity_seed(const ExperimentConfig& c, const sde::CoefficientField& field,
                                                std::uint64_t seed) {
  std::optional<GridPath> driver;
  double weight = 0.0;
  try {
    driver = sample_driver(c, field.noise_dim, seed);
    weight = weight_for(c, *driver);
  } catch (const std::exception& e) {
    std::vector<Record> out;
    for (auto n : c.ladder) {
      auto part = error_records(c, seed, n, e.what());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  // Pairs in the ball B(0, radius): x0 uniform, x1 = x0 + eps u with eps log-uniform
  // on [1e-3 radius, radius], reflected through x0 when it leaves the ball.
  const auto d = static_cast<Eigen::Index>(field.dim);
  std::vector<std::pair<sde::Vector, sde::Vector>> pts;
  GaussianStream rng(substream_seed(seed, 1));
  while (pts.size() < c.pairs) {
    sde::Vector dir(d);
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = rng();
    if (dir.norm() == 0.0) continue;
    dir.normalize();
    const double rad = c.radius * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(d));
    sde::Vector x0 = rad * dir;
    for (Eigen::Index i = 0; i < d; ++i) dir[i] = rng();
    if (dir.norm() == 0.0) continue;
    dir.normalize();
    const double eps = c.radius * std::pow(10.0, -3.0 * rng.uniform_open());
    sde::Vector x1 = x0 + eps * dir;
    if (x1.norm() > c.radius) x1 = x0 - eps * dir;
    if (x1.norm() > c.radius) continue;
    pts.emplace_back(std::move(x0), std::move(x1));
  }
  const FracOrder alpha(c.alpha);
  return per_level(c, seed, c.ladder, [&](std::size_t n) {
    const sde::SolverConfig cfg(c.alpha, n, c.hurst, field);
    std::vector<Record> out;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      const auto& [x0, x1] = pts[p];
      const GridPath diff = sde::solve_forward(x0, 0.0, field, *driver, cfg) -
                            sde::solve_forward(x1, 0.0, field, *driver, cfg);
      const double dist = (x0 - x1).norm();
      const double norm = w_alpha_lambda_norm(diff, alpha, weight);
      out.push_back(Record{seed, n, "pair" + std::to_string(p), {dist, norm, norm / dist, weight}, "ok", {}});
    }
    return out;
  });
}

inline std::vector<Record> driver_continuity_seed(const ExperimentConfig& c, const sde::CoefficientField& field,
                                                  std::uint64_t seed) {
  std::optional<GridPath> g;
  double weight = 0.0;
  std::vector<GridPath> xi_g;
  const sde::SolverConfig cfg(c.alpha, c.fine_n, c.hurst, field);
  try {
    g = sample_driver(c, field.noise_dim, seed);
    weight = weight_for(c, *g);
    for (const auto& x : c.initial_points) xi_g.push_back(sde::solve_forward(to_vector(x), 0.0, field, *g, cfg));
  } catch (const std::exception& e) {
    std::vector<Record> out;
    for (auto n : c.ladder) {
      auto part = error_records(c, seed, n, e.what());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  const FracOrder alpha(c.alpha);
  return per_level(c, seed, c.ladder, [&](std::size_t n) {
    const GridPath h = fbm::polygonal(*g, n);
    const double gap = fraccalc::lambda_alpha(*g - h, alpha).value;
    std::vector<Record> out;
    for (std::size_t i = 0; i < c.initial_points.size(); ++i) {
      const GridPath xi_h = sde::solve_forward(to_vector(c.initial_points[i]), 0.0, field, h, cfg);
      const double norm = w_alpha_lambda_norm(xi_g[i] - xi_h, alpha, weight);
      out.push_back(Record{seed, n, "x=" + std::to_string(i), {gap, norm, norm / gap, weight}, "ok", {}});
    }
    return out;
  });
}

inline std::vector<Record> moments_seed(const ExperimentConfig& c, const sde::CoefficientField& field,
                                        std::uint64_t seed) {
  std::optional<GridPath> driver;
  try {
    driver = sample_driver(c, field.noise_dim, seed);
  } catch (const std::exception& e) {
    std::vector<Record> out;
    for (auto n : c.ladder) {
      auto part = error_records(c, seed, n, e.what());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  return per_level(c, seed, c.ladder, [&](std::size_t n) {
    const GridPath x = sde::solve_forward(to_vector(c.initial_points.front()), 0.0, field, *driver,
                                          sde::SolverConfig(c.alpha, n, c.hurst, field));
    return std::vector<Record>{Record{seed, n, "sup", {sup_norm(x)}, "ok", {}}};
  });
}

inline std::vector<Record> seed_records(const ExperimentConfig& c, std::uint64_t seed,
                                        const std::vector<std::size_t>& ladder) {
  if (c.kind == Kind::rate) return rate_seed(c, seed);
  const auto field = sde::resolve_field(c.coefficients);
  switch (c.kind) {
    case Kind::flow: return flow_seed(c, field, seed, ladder);
    case Kind::inverse: return inverse_seed(c, field, seed, ladder);
    case Kind::init_continuity: return init_continuity_seed(c, field, seed);
    case Kind::driver_continuity: return driver_continuity_seed(c, field, seed);
    case Kind::moments: return moments_seed(c, field, seed);
    case Kind::rate: break;
  }
  return {};
}

inline std::vector<Record> sweep(const ExperimentConfig& c, const std::vector<std::uint64_t>& seeds,
                                 const std::vector<std::size_t>& ladder) {
  std::vector<std::vector<Record>> slots(seeds.size());
  stats::parallel_for(seeds.size(), c.threads, [&](std::size_t i) { slots[i] = seed_records(c, seeds[i], ladder); });
  std::vector<Record> out;
  for (auto& s : slots) out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  return out;
}

inline json describe(const std::vector<double>& xs) {
  if (xs.empty()) return json{{"count", 0}};
  return json{{"count", xs.size()},
              {"median", stats::median(xs)},
              {"q25", stats::quantile(xs, 0.25)},
              {"q75", stats::quantile(xs, 0.75)},
              {"max", stats::max_of(xs)}};
}

inline json criterion(bool pass, double value, double threshold, const std::string& rule) {
  return json{{"pass", pass}, {"value", value}, {"threshold", threshold}, {"rule", rule}};
}

// Values of column `col` over ok records, grouped by ladder level in ladder order.
inline std::vector<std::vector<double>> by_level(const ExperimentConfig& c, const std::vector<Record>& records,
                                                 std::size_t col) {
  std::vector<std::vector<double>> out(c.ladder.size());
  for (const auto& r : records) {
    if (!r.ok()) continue;
    const auto it = std::find(c.ladder.begin(), c.ladder.end(), r.level);
    if (it != c.ladder.end()) out[static_cast<std::size_t>(it - c.ladder.begin())].push_back(r.values[col]);
  }
  return out;
}

inline std::vector<double> medians(const std::vector<std::vector<double>>& groups) {
  std::vector<double> out;
  for (const auto& g : groups) out.push_back(stats::median(g));
  return out;
}

inline std::vector<double> ladder_doubles(const ExperimentConfig& c) {
  return std::vector<double>(c.ladder.begin(), c.ladder.end());
}

inline double min_successive_ratio(const std::vector<double>& med) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < med.size(); ++i) best = std::min(best, med[i - 1] / med[i]);
  return best;
}

// Discrepancy tolerance A n^{-(2H-1)/2}.
inline double flow_tolerance(const ExperimentConfig& c, double a, std::size_t n) {
  return a * std::pow(static_cast<double>(n), -(2.0 * c.hurst - 1.0) / 2.0);
}

inline void convergent_criteria(const ExperimentConfig& c, const std::vector<Record>& records,
                                const std::vector<std::size_t>& cols, const std::vector<std::string>& names,
                                const json& calibration, json& crit) {
  const double a = calibration.value("A", std::numeric_limits<double>::quiet_NaN());
  const double ratio_min = c.tolerance("decay_ratio", 1.3);
  for (std::size_t q = 0; q < cols.size(); ++q) {
    const auto groups = by_level(c, records, cols[q]);
    const auto med = medians(groups);
    if (med.size() >= 2) {
      const double ratio = min_successive_ratio(med);
      crit[names[q] + "_decay"] = criterion(ratio >= ratio_min, ratio, ratio_min,
                                            "median ratio between successive ladder levels >= threshold");
    }
    const double worst = stats::max_of(groups.back());
    const double tol = flow_tolerance(c, a, c.ladder.back());
    crit[names[q] + "_tolerance"] =
        criterion(worst <= tol, worst, tol, "max at the finest level <= A n^{-(2H-1)/2}");
  }
}

}  // namespace detail

/// Summary statistics and criteria recomputed from the records alone (plus the persisted
/// tolerance calibration, which is an input of the criteria rather than a statistic).
inline json summarize(const ExperimentConfig& c, const std::vector<Record>& records, const json& calibration) {
  using namespace detail;
  const auto cols = columns_for(c.kind);
  json s;
  s["kind"] = to_string(c.kind);
  std::size_t errors = 0;
  for (const auto& r : records) errors += r.ok() ? 0 : 1;
  s["records"] = records.size();
  s["errors"] = errors;
  json levels = json::array();
  for (std::size_t li = 0; li < c.ladder.size(); ++li) {
    json lv{{"n", c.ladder[li]}};
    for (std::size_t q = 0; q < cols.size(); ++q) {
      std::vector<double> xs;
      for (const auto& r : records)
        if (r.ok() && r.level == c.ladder[li] && std::isfinite(r.values[q])) xs.push_back(r.values[q]);
      lv[cols[q]] = describe(xs);
    }
    levels.push_back(lv);
  }
  s["levels"] = levels;

  json crit = json::object();
  const std::size_t expected = c.seeds.size() * c.ladder.size() * probes_per_level(c);
  crit["complete"] = criterion(records.size() == expected && errors == 0, static_cast<double>(errors),
                               0.0, "one ok record per seed, level and probe");
  json st = json::object();
  const double exact_tol = c.tolerance("exact", 1e-12);

  switch (c.kind) {
    case Kind::flow: {
      double defect = 0.0;
      double worst = 0.0;
      for (const auto& r : records) {
        if (!r.ok()) continue;
        defect = std::max({defect, r.values[2], r.values[3]});
        worst = std::max({worst, r.values[0], r.values[1]});
      }
      crit["discrete_flow_identity"] =
          criterion(defect <= exact_tol, defect, exact_tol, "max |X_tau,t(X_r,tau(x)) - X_r,t(x)| on the solver grid");
      if (c.exact_expected()) {
        crit["exact"] = criterion(worst <= exact_tol, worst, exact_tol, "max discrepancy over all cells");
      } else {
        convergent_criteria(c, records, {0, 1}, {"forward", "backward"}, calibration, crit);
      }
      break;
    }
    case Kind::inverse: {
      double worst = 0.0;
      double inversions = 0.0;
      for (const auto& r : records) {
        if (!r.ok()) continue;
        worst = std::max({worst, r.values[0], r.values[1]});
        if (std::isfinite(r.values[2])) inversions += r.values[2];
      }
      crit["sortedness"] = criterion(inversions == 0.0, inversions, 0.0, "order inversions of the 1-D fan");
      if (c.exact_expected()) {
        crit["exact"] = criterion(worst <= exact_tol, worst, exact_tol, "max identity discrepancy over all cells");
      } else {
        convergent_criteria(c, records, {0, 1}, {"xy", "yx"}, calibration, crit);
      }
      break;
    }
    case Kind::rate: {
      const auto err = medians(by_level(c, records, 0));
      const auto scaled = medians(by_level(c, records, 1));
      const auto gap = medians(by_level(c, records, 3));
      const double slope = stats::log_log_slope(ladder_doubles(c), scaled);
      const double target = c.theta - c.hurst;
      const double half = c.tolerance("slope_halfwidth", 0.1);
      st["slope"] = slope;
      st["target_slope"] = target;
      crit["slope"] = criterion(std::abs(slope - target) <= half, slope, half,
                                "|fitted slope of median scaled error - (theta - H)| <= threshold");
      crit["error_decreasing"] = criterion(stats::strictly_decreasing(err), err.back(), err.front(),
                                           "median Hölder error strictly decreasing along the ladder");
      crit["lambda_gap_decreasing"] = criterion(stats::strictly_decreasing(gap), gap.back(), gap.front(),
                                                "median Lambda_alpha(B^n - B) strictly decreasing");
      // Per path: Lambda_alpha(B^n) relative to the median over that path's ladder.
      std::map<std::uint64_t, std::vector<double>> per_seed;
      for (const auto& r : records)
        if (r.ok()) per_seed[r.seed].push_back(r.values[2]);
      double lo = std::numeric_limits<double>::infinity();
      double hi = 0.0;
      for (const auto& [seed, xs] : per_seed) {
        const double m = stats::median(xs);
        for (double x : xs) {
          lo = std::min(lo, x / m);
          hi = std::max(hi, x / m);
        }
      }
      st["lambda_polygonal_per_path_min_ratio"] = lo;
      st["lambda_polygonal_per_path_max_ratio"] = hi;
      const auto poly = medians(by_level(c, records, 2));
      const double ladder_median = stats::median(poly);
      const double plo = *std::min_element(poly.begin(), poly.end()) / ladder_median;
      const double phi = *std::max_element(poly.begin(), poly.end()) / ladder_median;
      st["lambda_polygonal_min_ratio"] = plo;
      st["lambda_polygonal_max_ratio"] = phi;
      crit["lambda_polygonal_bounded"] =
          criterion(plo >= 0.5 && phi <= 2.0, std::max(phi, 1.0 / plo), 2.0,
                    "per-level median Lambda_alpha(B^n) within [1/2, 2] of the ladder-wide median");
      break;
    }
    case Kind::init_continuity: {
      std::vector<double> ratios;
      for (const auto& r : records)
        if (r.ok()) ratios.push_back(r.values[2]);
      const double med = stats::median(ratios);
      const double mx = stats::max_of(ratios);
      st["ratio"] = describe(ratios);
      // Ratio stability as the pair distance shrinks: medians over distance terciles.
      std::vector<std::pair<double, double>> by_dist;
      for (const auto& r : records)
        if (r.ok()) by_dist.emplace_back(r.values[0], r.values[2]);
      std::sort(by_dist.begin(), by_dist.end());
      json bins = json::array();
      for (std::size_t b = 0; b < 3 && !by_dist.empty(); ++b) {
        std::vector<double> xs;
        for (std::size_t i = b * by_dist.size() / 3; i < (b + 1) * by_dist.size() / 3; ++i)
          xs.push_back(by_dist[i].second);
        bins.push_back(describe(xs));
      }
      st["ratio_by_distance_tercile"] = bins;
      const double bound = c.tolerance("bound_ratio", 10.0);
      crit["bounded"] = criterion(mx / med <= bound, mx / med, bound, "max ratio / median ratio over all pairs");
      if (c.exact_expected()) {
        double dev = 0.0;
        for (double x : ratios) dev = std::max(dev, std::abs(x - 1.0));
        crit["exact"] = criterion(dev <= exact_tol, dev, exact_tol, "max |ratio - 1|");
      }
      break;
    }
    case Kind::driver_continuity: {
      const auto gap = medians(by_level(c, records, 0));
      const auto diff = medians(by_level(c, records, 1));
      const auto ratio = medians(by_level(c, records, 2));
      const double mr = stats::median(ratio);
      const double xr = stats::max_of(ratio);
      std::vector<double> gx;
      std::vector<double> dy;
      for (const auto& r : records)
        if (r.ok()) {
          gx.push_back(r.values[0]);
          dy.push_back(r.values[1]);
        }
      const double slope = stats::slope_through_origin(gx, dy);
      st["slope_through_origin"] = slope;
      st["correlation"] = stats::correlation(gx, dy);
      const double bound = c.tolerance("bound_ratio", 10.0);
      crit["bounded"] = criterion(xr / mr <= bound, xr / mr, bound,
                                  "max / median of the per-level median ratios along the ladder");
      crit["positive_slope"] = criterion(slope > 0.0, slope, 0.0, "least-squares slope through the origin > 0");
      crit["lambda_gap_decreasing"] = criterion(stats::strictly_decreasing(gap), gap.back(), gap.front(),
                                                "median Lambda_alpha(g - h) strictly decreasing");
      crit["difference_decreasing"] = criterion(stats::strictly_decreasing(diff), diff.back(), diff.front(),
                                                "median solution difference strictly decreasing");
      break;
    }
    case Kind::moments: {
      const double zmax = c.tolerance("moment_z", 3.0);
      for (std::size_t li = 0; li < c.ladder.size(); ++li) {
        std::vector<double> sups;
        for (const auto& r : records)
          if (r.ok() && r.level == c.ladder[li]) sups.push_back(r.values[0]);
        if (sups.size() < 4) continue;
        auto check = [&](const std::string& name, auto&& fn) {
          std::vector<double> xs(sups.size());
          std::transform(sups.begin(), sups.end(), xs.begin(), fn);
          const std::span<const double> half(xs.data(), xs.size() / 2);
          const double full_mean = stats::mean(xs);
          const double half_mean = stats::mean(half);
          const double se = stats::standard_error(xs);
          const double z = se > 0.0 ? std::abs(full_mean - half_mean) / se : 0.0;
          const std::string key = name + "@n=" + std::to_string(c.ladder[li]);
          st[key] = json{{"mean_half", half_mean}, {"mean_full", full_mean}, {"standard_error", se}, {"z", z}};
          crit[key] = criterion(std::isfinite(full_mean) && z < zmax, z, zmax,
                                "|mean(N) - mean(N/2)| / SE(N) below threshold");
        };
        for (double p : c.moment_orders) {
          std::ostringstream nm;
          nm << "sup_pow_" << p;
          check(nm.str(), [p](double v) { return std::pow(v, p); });
        }
        if (c.exp_lambda > 0.0) {
          const double lam = c.exp_lambda;
          const double gam = c.exp_gamma;
          check("exp_sup", [lam, gam](double v) { return std::exp(lam * std::pow(v, gam)); });
        }
      }
      break;
    }
  }
  s["statistics"] = st;
  s["criteria"] = crit;
  bool all = true;
  for (const auto& [k, v] : crit.items()) all = all && v.at("pass").get<bool>();
  s["all_pass"] = all;
  s["calibration"] = calibration;
  return s;
}

/// Discrepancy scale A of the tolerance schedule: the configured value, or ten times the
/// largest discrepancy * n0^{(2H-1)/2} over the calibration seeds at the coarsest level n0.
inline json calibrate(const ExperimentConfig& c) {
  if (c.kind != Kind::flow && c.kind != Kind::inverse) return json::object();
  if (c.tolerances.count("flow_A")) return json{{"A", c.tolerances.at("flow_A")}, {"source", "config"}};
  if (c.exact_expected()) return json{{"A", 0.0}, {"source", "exact"}};
  const std::size_t n0 = c.ladder.front();
  const auto recs = detail::sweep(c, c.calibration_seeds, {n0});
  double worst = 0.0;
  for (const auto& r : recs)
    if (r.ok()) worst = std::max({worst, r.values[0], r.values[1]});
  const double scale = std::pow(static_cast<double>(n0), (2.0 * c.hurst - 1.0) / 2.0);
  return json{{"A", 10.0 * worst * scale},
              {"source", "calibration"},
              {"level", n0},
              {"seeds", c.calibration_seeds},
              {"max_discrepancy", worst},
              {"safety_factor", 10.0}};
}

inline ExperimentResult run(const ExperimentConfig& c) {
  c.validate();
  const auto begin = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.config = c;
  res.columns = columns_for(c.kind);
  const json calibration = calibrate(c);
  res.records = detail::sweep(c, c.seeds, c.ladder);
  res.summary = summarize(c, res.records, calibration);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  res.summary["wall_time_seconds"] = res.wall_time;
  return res;
}

// ---- persistence ----------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InvalidInput("bad number '" + s + "' in records");
  return v;
}

inline std::string clean(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_records(std::ostream& out, const std::vector<std::string>& columns, const std::vector<Record>& records) {
  out << "seed,n,probe";
  for (const auto& c : columns) out << ',' << c;
  out << ",status,message\n";
  for (const auto& r : records) {
    out << r.seed << ',' << r.level << ',' << detail::clean(r.probe);
    for (double v : r.values) out << ',' << detail::format_double(v);
    out << ',' << r.status << ',' << detail::clean(r.message) << '\n';
  }
}

inline std::vector<Record> read_records(std::istream& in, const std::vector<std::string>& columns) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("records file is empty");
  const auto header = detail::split(line);
  if (header.size() != columns.size() + 5) throw InvalidInput("records header does not match the experiment kind");
  std::vector<Record> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line);
    if (f.size() != columns.size() + 5) throw InvalidInput("malformed record row: " + line);
    Record r;
    r.seed = std::stoull(f[0]);
    r.level = std::stoull(f[1]);
    r.probe = f[2];
    for (std::size_t q = 0; q < columns.size(); ++q) r.values.push_back(detail::parse_double(f[3 + q]));
    r.status = f[3 + columns.size()];
    r.message = f[4 + columns.size()];
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw InvalidInput("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot open " + file.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw InvalidInput(file.string() + ": " + e.what());
  }
}

/// Writes config.json, records.csv, summary.json and one plot_<column>.csv per column
/// (x = ladder level, y = median, q25, q75).
inline void save(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json(dir / "config.json", to_json(res.config));
  {
    std::ofstream out(dir / "records.csv");
    if (!out) throw InvalidInput("cannot write records in " + dir.string());
    write_records(out, res.columns, res.records);
  }
  write_json(dir / "summary.json", res.summary);
  for (const auto& col : res.columns) {
    std::ofstream out(dir / ("plot_" + col + ".csv"));
    out << "x,y,q25,q75\n";
    for (const auto& lv : res.summary.at("levels")) {
      const auto& d = lv.at(col);
      if (d.value("count", 0) == 0) continue;
      out << lv.at("n").get<std::size_t>() << ',' << detail::format_double(d.at("median").get<double>()) << ','
          << detail::format_double(d.at("q25").get<double>()) << ','
          << detail::format_double(d.at("q75").get<double>()) << '\n';
    }
  }
}

struct LoadedResult {
  ExperimentConfig config;
  std::vector<Record> records;
  json summary;
};

inline LoadedResult load(const std::filesystem::path& dir) {
  LoadedResult out{config_from_json(read_json(dir / "config.json")), {}, read_json(dir / "summary.json")};
  std::ifstream in(dir / "records.csv");
  if (!in) throw InvalidInput("cannot open " + (dir / "records.csv").string());
  out.records = read_records(in, columns_for(out.config.kind));
  return out;
}

namespace detail {

inline void compare(const json& expected, const json& actual, const std::string& where, double rel,
                    std::vector<std::string>& problems) {
  // NaN is stored as null.
  if (expected.is_null() && actual.is_number() && std::isnan(actual.get<double>())) return;
  if (expected.is_number() && actual.is_number()) {
    const double a = expected.get<double>();
    const double b = actual.get<double>();
    if (a == b) return;
    if (!(std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b))))
      problems.push_back(where + ": stored " + format_double(a) + ", recomputed " + format_double(b));
    return;
  }
  if (expected.is_object() && actual.is_object()) {
    for (const auto& [k, v] : expected.items()) {
      if (k == "wall_time_seconds") continue;
      if (!actual.contains(k)) {
        problems.push_back(where + "/" + k + ": missing after recomputation");
        continue;
      }
      compare(v, actual.at(k), where + "/" + k, rel, problems);
    }
    for (const auto& [k, v] : actual.items())
      if (!expected.contains(k)) problems.push_back(where + "/" + k + ": not in the stored summary");
    return;
  }
  if (expected.is_array() && actual.is_array()) {
    if (expected.size() != actual.size()) {
      problems.push_back(where + ": array length differs");
      return;
    }
    for (std::size_t i = 0; i < expected.size(); ++i)
      compare(expected[i], actual[i], where + "/" + std::to_string(i), rel, problems);
    return;
  }
  if (expected != actual) problems.push_back(where + ": stored " + expected.dump() + ", recomputed " + actual.dump());
}

}  // namespace detail

struct VerifyReport {
  bool ok = true;
  bool all_pass = false;
  std::vector<std::string> problems;
};

/// Re-derives the summary from the persisted records and compares it with the stored one.
inline VerifyReport verify(const std::filesystem::path& dir, double rel = 1e-10) {
  const auto loaded = load(dir);
  VerifyReport rep;
  const std::size_t expected = loaded.config.seeds.size() * loaded.config.ladder.size() *
                               detail::probes_per_level(loaded.config);
  if (loaded.records.size() != expected)
    rep.problems.push_back("record count " + std::to_string(loaded.records.size()) + " != expected " +
                           std::to_string(expected));
  const json recomputed =
      summarize(loaded.config, loaded.records, loaded.summary.value("calibration", json::object()));
  detail::compare(loaded.summary, recomputed, "summary", rel, rep.problems);
  rep.ok = rep.problems.empty();
  rep.all_pass = recomputed.value("all_pass", false);
  return rep;
}

}  // namespace flowlab::experiment
