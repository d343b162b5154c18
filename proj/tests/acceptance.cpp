// Acceptance checks. Prints one PASS/FAIL line per criterion and exits 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "flowlab/experiment.hpp"
#include "flowlab/fbm.hpp"
#include "flowlab/fraccalc.hpp"
#include "flowlab/norms.hpp"
#include "flowlab/sde.hpp"
#include "flowlab/stats.hpp"
#include "flowlab/young.hpp"

using namespace flowlab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void line(int id, bool pass, const std::string& what, const std::string& detail) {
  std::cout << 'C' << id << ' ' << (pass ? "PASS" : "FAIL") << "  " << what << "  [" << detail << "]" << std::endl;
  if (!pass) ++failures;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GridPath fbm_path(std::uint64_t seed, std::size_t n, double hurst = 0.75, std::size_t m = 1) {
  return fbm::sample_circulant({hurst, m, 1.0, n, seed}).path;
}

// ---- 1: covariance and samplers

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t count = 10000;
  const std::size_t n = 256;
  const std::vector<std::size_t> knots{64, 128, 256};
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{64, 128}, {128, 256}, {64, 256}};
  double worst = 0.0;
  for (double h : {0.6, 0.75, 0.9}) {
    const fbm::CholeskySampler chol(h, 1.0, n);
    const fbm::CirculantSampler circ(h, 1.0, n);
    for (int which = 0; which < 2; ++which) {
      std::vector<std::vector<double>> sq(knots.size(), std::vector<double>(count));
      std::vector<std::vector<double>> cross(pairs.size(), std::vector<double>(count));
      for (std::size_t i = 0; i < count; ++i) {
        const fbm::FbmSpec spec{h, 1, 1.0, n, 1 + i};
        const auto p = which == 0 ? chol.sample(spec) : circ.sample(spec);
        for (std::size_t q = 0; q < knots.size(); ++q) sq[q][i] = p.path(knots[q]) * p.path(knots[q]);
        for (std::size_t q = 0; q < pairs.size(); ++q) cross[q][i] = p.path(pairs[q].first) * p.path(pairs[q].second);
      }
      auto z = [](const std::vector<double>& xs, double target) {
        return std::abs(stats::mean(xs) - target) / stats::standard_error(xs);
      };
      for (std::size_t q = 0; q < knots.size(); ++q) {
        const double t = double(knots[q]) / n;
        worst = std::max(worst, z(sq[q], std::pow(t, 2 * h)));
      }
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        const double s = double(pairs[q].first) / n;
        const double t = double(pairs[q].second) / n;
        worst = std::max(worst, z(cross[q], fbm::covariance(h, s, t)));
      }
    }
  }
  const double secs = seconds_since(t0);
  line(1, worst <= 3.0 && secs < 120.0, "fBm second moments within 3 sigma, both samplers, H in {0.6, 0.75, 0.9}",
       "max |z| " + num(worst) + " <= 3; " + num(secs) + " s < 120 s");
}

// ---- 4: fractional calculus oracles

void criterion4() {
  const std::size_t n = 4096;
  double worst_rel = 0.0;
  for (double a : {0.3, 0.5, 0.7}) {
    for (double p : {0.0, 0.5, 1.0, 2.0}) {
      const auto f = GridPath::scalar(1.0, n, [p](double t) { return std::pow(t, p); });
      const auto i = fraccalc::left_frac_integral(f, FracOrder(a));
      for (std::size_t k : {n / 4, n / 2, n}) {
        const double t = double(k) / n;
        const double exact = std::tgamma(p + 1) / std::tgamma(p + a + 1) * std::pow(t, p + a);
        worst_rel = std::max(worst_rel, std::abs(i(k) - exact) / exact);
      }
    }
  }
  const auto f = GridPath::scalar(1.0, 2048, [](double t) { return t * (1.0 - t); });
  double worst_inv = 0.0;
  for (double a : {0.2, 0.5, 0.8}) {
    const auto back = fraccalc::left_weyl_derivative(fraccalc::left_frac_integral(f, FracOrder(a)), FracOrder(a));
    for (std::size_t k = 1; k <= 2048; ++k) worst_inv = std::max(worst_inv, std::abs(back(k - 1) - f(k)));
  }
  const FracOrder a(0.3);
  const double c = std::tgamma(1.0 - 0.3) * std::tgamma(0.3);
  int violations = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto g = fbm_path(seed, 512);
    if (c * fraccalc::lambda_alpha(g, a).value > w_one_minus_alpha_norm(g, a) * (1 + 1e-12)) ++violations;
  }
  line(4, worst_rel <= 1e-4 && worst_inv <= 1e-3 && violations == 0, "fractional integral, inversion and Lambda bound",
       "I^a powers rel " + num(worst_rel) + " <= 1e-4; D(I f) sup " + num(worst_inv) + " <= 1e-3; bound violations " +
           std::to_string(violations) + "/100");
}

// ---- 5: Young integral cross-validation

void criterion5() {
  const std::size_t n = 4096;
  const FracOrder a(0.3);
  using Fn = double (*)(double);
  const std::vector<std::pair<Fn, Fn>> smooth{
      {[](double) { return 1.0; }, [](double t) { return t; }},
      {[](double t) { return t; }, [](double t) { return t; }},
      {[](double t) { return std::sin(3 * t); }, [](double t) { return std::exp(t) - 1.0; }},
      {[](double t) { return std::cos(t); }, [](double t) { return t * t; }}};
  double worst_smooth = 0.0;
  double worst_slack = 0.0;
  for (const auto& [fa, ga] : smooth) {
    const auto f = GridPath::scalar(1.0, n, fa);
    const auto g = GridPath::scalar(1.0, n, ga);
    const double rs = young::rs_integral(f, g)[0];
    worst_smooth = std::max(worst_smooth, std::abs(young::zahle_integral(f, g, a)[0] - rs) / (1 + std::abs(rs)));
    worst_slack = std::min(worst_slack, young::young_bound_check(f, g, a).slack);
  }

  const std::vector<std::size_t> ladder{128, 256, 512, 1024};
  const std::size_t fine = 4096;
  const FracOrder b(0.35);
  std::vector<std::vector<double>> gaps(ladder.size());
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g_fine = fbm_path(1000 + seed, fine);
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      const auto g = g_fine.subsample(fine / ladder[l]);
      const auto f = GridPath::scalar(1.0, ladder[l], [](double t) { return std::cos(2 * t); });
      gaps[l].push_back(std::abs(young::zahle_integral(f, g, b)[0] - young::rs_integral(f, g)[0]));
      const auto r = young::young_bound_check(f, g, b);
      worst_slack = std::min(worst_slack, r.slack / std::max(1.0, r.rhs));
    }
  }
  double worst_ratio = 1e300;
  for (std::size_t l = 1; l < ladder.size(); ++l)
    worst_ratio = std::min(worst_ratio, stats::median(gaps[l - 1]) / stats::median(gaps[l]));
  line(5, worst_smooth <= 1e-3 && worst_ratio >= 1.5 && worst_slack >= -1e-8, "Riemann-Stieltjes vs Zahle, Young bound",
       "smooth gap/(1+|rs|) " + num(worst_smooth) + " <= 1e-3; min median gap ratio per doubling " + num(worst_ratio) +
           " >= 1.5; min bound slack " + num(worst_slack) + " >= -1e-8");
}

// ---- 6: solver exactness and order

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  sde::Matrix m(2, 2);
  m << 1.0, -0.5, 0.25, 2.0;
  const auto additive = sde::additive_field(m);
  double exact_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto b = fbm_path(seed, 1024, 0.75, 2);
    sde::Vector x0(2);
    x0 << 0.3, -1.0;
    const auto x = sde::solve_forward(x0, 0.0, additive, b, sde::SolverConfig(0.35, 1024, 0.75, 1.0, 1.0));
    for (std::size_t k = 0; k <= 1024; ++k) {
      sde::Vector inc(2);
      inc << b(k, 0), b(k, 1);
      const sde::Vector expect = x0 + m * inc;
      exact_err = std::max({exact_err, std::abs(x(k, 0) - expect[0]), std::abs(x(k, 1) - expect[1])});
    }
  }

  const double s0 = 0.5;
  const auto geometric = sde::geometric_field(s0);
  const std::size_t fine = 8192;
  std::vector<double> ns;
  std::vector<std::vector<double>> errs;
  for (std::size_t n = 128; n <= 4096; n *= 2) ns.push_back(double(n));
  errs.resize(ns.size());
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto b = fbm_path(2000 + seed, fine);
    for (std::size_t l = 0; l < ns.size(); ++l) {
      const auto n = static_cast<std::size_t>(ns[l]);
      const auto x = sde::solve_forward(sde::Vector::Ones(1), 0.0, geometric, b, sde::SolverConfig(0.35, n, 0.75, 1.0, 1.0));
      double err = 0.0;
      for (std::size_t k = 0; k <= n; ++k) err = std::max(err, std::abs(x(k) - std::exp(s0 * b(k * (fine / n)))));
      errs[l].push_back(err);
    }
  }
  std::vector<double> med;
  for (const auto& e : errs) med.push_back(stats::median(e));
  const double order = -stats::log_log_slope(ns, med);
  const double secs = seconds_since(t0);
  line(6, exact_err <= 1e-12 && std::abs(order - 0.5) <= 0.3 && secs < 300.0, "solver exactness and convergence order",
       "additive max error " + num(exact_err) + " <= 1e-12; geometric order " + num(order) + " in 0.5 +- 0.3; " +
           num(secs) + " s < 300 s");
}

// ---- experiment-backed criteria

struct Shipped {
  experiment::ExperimentResult fresh;
  bool identical = false;
};

std::map<std::string, Shipped> rerun_all(const fs::path& root) {
  std::map<std::string, Shipped> out;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(root / "experiments"))
    if (e.path().extension() == ".json") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  for (const auto& file : configs) {
    const auto cfg = experiment::load_config(file.string());
    Shipped s{experiment::run(cfg), false};
    std::ostringstream fresh;
    experiment::write_records(fresh, s.fresh.columns, s.fresh.records);
    std::ifstream in(root / cfg.output / "records.csv");
    std::ostringstream stored;
    if (in) stored << in.rdbuf();
    s.identical = in && fresh.str() == stored.str();
    std::cout << "  reran " << file.filename().string() << " in " << num(s.fresh.wall_time) << " s"
              << (s.identical ? "" : " (records differ from shipped)") << std::endl;
    out.emplace(file.stem().string(), std::move(s));
  }
  return out;
}

// Criteria of the named experiments, e.g. "flow_geometric 6/6".
bool all_pass(const std::map<std::string, Shipped>& runs, const std::vector<std::string>& names, std::string& detail) {
  bool ok = true;
  for (const auto& name : names) {
    const auto it = runs.find(name);
    if (it == runs.end()) {
      detail += (detail.empty() ? "" : "; ") + name + " missing";
      ok = false;
      continue;
    }
    const auto& crit = it->second.fresh.summary.at("criteria");
    int pass = 0;
    std::string failed;
    for (const auto& [key, c] : crit.items()) {
      if (c.at("pass").get<bool>()) {
        ++pass;
      } else {
        failed += " " + key + "=" + num(c.at("value").get<double>()) + ">" + num(c.at("threshold").get<double>());
      }
    }
    detail += (detail.empty() ? "" : "; ") + name + " " + std::to_string(pass) + "/" + std::to_string(crit.size()) + failed;
    ok = ok && pass == static_cast<int>(crit.size());
  }
  return ok;
}

double criterion_value(const std::map<std::string, Shipped>& runs, const std::string& name, const std::string& key) {
  return runs.at(name).fresh.summary.at("criteria").at(key).at("value").get<double>();
}

bool criteria_pass(const std::map<std::string, Shipped>& runs, const std::string& name,
                   const std::vector<std::string>& keys) {
  const auto& crit = runs.at(name).fresh.summary.at("criteria");
  for (const auto& k : keys)
    if (!crit.contains(k) || !crit.at(k).at("pass").get<bool>()) return false;
  return true;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(FLOWLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  const fs::path root = FLOWLAB_SOURCE_DIR;
  criterion1();

  std::cout << "  rerunning shipped experiments" << std::endl;
  const auto runs = rerun_all(root);

  {
    const bool ok = criteria_pass(runs, "rate", {"slope", "error_decreasing"}) && runs.at("rate").fresh.wall_time < 300.0;
    line(2, ok, "polygonal approximation rate in the Holder norm",
         "slope " + num(criterion_value(runs, "rate", "slope")) + " in -0.2 +- 0.1; strictly decreasing medians; " +
             num(runs.at("rate").fresh.wall_time) + " s < 300 s");
  }
  {
    const bool ok = criteria_pass(runs, "rate", {"lambda_gap_decreasing", "lambda_polygonal_bounded"});
    line(3, ok, "Lambda of the polygonal error decreasing and Lambda of the polygon bounded",
         "min gap ratio " + num(criterion_value(runs, "rate", "lambda_gap_decreasing")) +
             "; spread of per-level medians " + num(criterion_value(runs, "rate", "lambda_polygonal_bounded")) +
             " <= 2");
  }
  criterion4();
  criterion5();
  criterion6();
  {
    std::string d;
    const bool ok = all_pass(runs, {"flow_additive", "flow_geometric"}, d);
    line(7, ok, "flow property", d);
  }
  {
    std::string d;
    const bool ok =
        all_pass(runs, {"inverse_additive", "inverse_geometric", "inverse_sin", "sortedness_geometric", "sortedness_sin"}, d);
    line(8, ok, "inverse flow and monotonicity", d);
  }
  {
    std::string d;
    const bool ok = all_pass(runs, {"init_continuity_additive", "init_continuity_sin", "driver_continuity_geometric"}, d);
    line(9, ok, "continuity in the initial value and in the driver", d);
  }
  {
    std::string d;
    const bool ok = all_pass(runs, {"moments_sin"}, d);
    line(10, ok, "moment estimates stable when the sample doubles", d);
  }
  {
    int same = 0;
    for (const auto& [name, s] : runs) same += s.identical;
    int verified = 0;
    int dirs = 0;
    for (const auto& e : fs::directory_iterator(root / "experiments" / "results")) {
      if (!e.is_directory()) continue;
      ++dirs;
      verified += cli("verify --result " + e.path().string()) == 0;
    }
    line(11, same == static_cast<int>(runs.size()) && verified == dirs && dirs == static_cast<int>(runs.size()),
         "reruns are bit-identical and shipped results verify",
         std::to_string(same) + "/" + std::to_string(runs.size()) + " record files identical; " +
             std::to_string(verified) + "/" + std::to_string(dirs) + " result directories verify");
  }
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
