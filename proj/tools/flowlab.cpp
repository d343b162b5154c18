#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "flowlab/experiment.hpp"
#include "flowlab/fbm.hpp"
#include "flowlab/fraccalc.hpp"
#include "flowlab/sde.hpp"
#include "flowlab/young.hpp"

namespace {

using namespace flowlab;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw InvalidInput("empty list '" + text + "'");
  return out;
}

void print_vector(const std::vector<double>& v) {
  std::cout << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) std::cout << (i ? "," : "") << v[i];
  std::cout << '\n';
}

int print_criteria(const nlohmann::json& summary) {
  bool all = true;
  for (const auto& [name, c] : summary.at("criteria").items()) {
    const bool pass = c.at("pass").get<bool>();
    all = all && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << name << "  value=" << c.at("value").dump()
              << " threshold=" << c.at("threshold").dump() << '\n';
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowlab: fBm sampling, fractional calculus, Young integrals and pathwise SDE flows"};
  app.require_subcommand(1);
  int code = 0;

  // fbm
  auto* fbm_cmd = app.add_subcommand("fbm", "sample fractional Brownian motion");
  fbm_cmd->require_subcommand(1);
  fbm::FbmSpec spec;
  std::string method = "circulant";
  std::string out_path;
  auto* sample = fbm_cmd->add_subcommand("sample", "write one sampled path as CSV");
  sample->add_option("--hurst", spec.hurst, "Hurst parameter")->required();
  sample->add_option("--n", spec.grid_size, "grid size")->required();
  sample->add_option("--m", spec.components, "number of components");
  sample->add_option("--seed", spec.seed, "seed");
  sample->add_option("--horizon", spec.horizon, "horizon T");
  sample->add_option("--method", method, "circulant or cholesky")->check(CLI::IsMember({"circulant", "cholesky"}));
  sample->add_option("--out", out_path, "output CSV")->required();
  sample->callback([&] {
    const auto path = method == "cholesky" ? fbm::sample_cholesky(spec) : fbm::sample_circulant(spec);
    write_csv(out_path, path.path);
  });

  double theta = 0.55;
  double alpha = 0.3;
  std::size_t fine = 8192;
  std::string coarse = "16,32,64,128,256,512";
  std::size_t seed_count = 50;
  auto* rate = fbm_cmd->add_subcommand("rate", "polygonal approximation error along a coarse ladder");
  rate->add_option("--hurst", spec.hurst, "Hurst parameter")->required();
  rate->add_option("--theta", theta, "Hölder order of the error norm")->required();
  rate->add_option("--fine", fine, "fine grid size");
  rate->add_option("--coarse", coarse, "comma-separated coarse grid sizes");
  rate->add_option("--seeds", seed_count, "number of seeds (1..N)");
  rate->add_option("--alpha", alpha, "order of Lambda_alpha along the ladder");
  rate->add_option("--out", out_path, "output CSV")->required();
  rate->callback([&] {
    experiment::ExperimentConfig c;
    c.kind = experiment::Kind::rate;
    c.hurst = spec.hurst;
    c.theta = theta;
    c.alpha = alpha;
    c.fine_n = fine;
    c.ladder.clear();
    for (double v : parse_list(coarse)) c.ladder.push_back(static_cast<std::size_t>(v));
    c.seeds.clear();
    for (std::size_t i = 1; i <= seed_count; ++i) c.seeds.push_back(i);
    const auto res = experiment::run(c);
    std::ofstream out(out_path);
    if (!out) throw InvalidInput("cannot write " + out_path);
    out << "coarse_n,median_error,q25,q75\n" << std::setprecision(17);
    for (const auto& lv : res.summary.at("levels")) {
      const auto& d = lv.at("holder_error");
      out << lv.at("n").get<std::size_t>() << ',' << d.at("median").get<double>() << ','
          << d.at("q25").get<double>() << ',' << d.at("q75").get<double>() << '\n';
    }
    std::cout << "fitted slope of median error / sqrt(log n): "
              << res.summary.at("statistics").at("slope").get<double>() << '\n';
  });

  // fraccalc
  auto* frac_cmd = app.add_subcommand("fraccalc", "fractional calculus on a path CSV");
  frac_cmd->require_subcommand(1);
  std::string path_file;
  std::string mode = "exact";
  auto* lambda_cmd = frac_cmd->add_subcommand("lambda", "Lambda_alpha(g)");
  lambda_cmd->add_option("--path", path_file, "path CSV")->required();
  lambda_cmd->add_option("--alpha", alpha, "order in (0, 1/2)")->required();
  lambda_cmd->add_option("--mode", mode, "exact or decimated")->check(CLI::IsMember({"exact", "decimated"}));
  lambda_cmd->callback([&] {
    const auto g = read_csv(path_file);
    const auto est = fraccalc::lambda_alpha(
        g, FracOrder(alpha), mode == "exact" ? fraccalc::EndpointMode::exact : fraccalc::EndpointMode::decimated);
    std::cout << std::setprecision(17) << est.value << "  (s=" << est.s << ", t=" << est.t << ", " << mode << ")\n";
  });

  // young
  auto* young_cmd = app.add_subcommand("young", "Young integrals of path CSVs");
  young_cmd->require_subcommand(1);
  std::string f_file;
  std::string g_file;
  std::string how = "both";
  bool alpha_given = false;
  std::size_t refine = young::kZahleRefine;
  auto* integrate = young_cmd->add_subcommand("integrate", "int f dg");
  integrate->add_option("--f", f_file, "integrand CSV")->required();
  integrate->add_option("--g", g_file, "integrator CSV")->required();
  integrate->add_option("--alpha", alpha, "Zähle order (default from measured Hölder orders)")
      ->each([&](const std::string&) { alpha_given = true; });
  integrate->add_option("--method", how, "rs, zahle or both")->check(CLI::IsMember({"rs", "zahle", "both"}));
  integrate->add_option("--refine", refine, "outer quadrature refinement of the Zähle formula")
      ->check(CLI::PositiveNumber);
  integrate->callback([&] {
    const auto f = read_csv(f_file);
    const auto g = read_csv(g_file);
    if (auto w = young::regularity_warning(f, g)) std::cerr << "warning: " << *w << '\n';
    if (how != "zahle") {
      std::cout << "rs: ";
      print_vector(young::rs_integral(f, g));
    }
    if (how != "rs") {
      std::cout << "zahle: ";
      const double a = alpha_given ? alpha : young::default_alpha(f, g);
      print_vector(young::zahle_integral(f, g, FracOrder(a), refine));
    }
  });
  auto* bound = young_cmd->add_subcommand("check-bound", "|int f dg| <= Lambda_alpha(g) ||f||_{alpha,1}");
  bound->add_option("--f", f_file, "integrand CSV")->required();
  bound->add_option("--g", g_file, "integrator CSV")->required();
  bound->add_option("--alpha", alpha, "order in (0, 1/2)")->required();
  bound->callback([&] {
    const auto r = young::young_bound_check(read_csv(f_file), read_csv(g_file), FracOrder(alpha));
    const nlohmann::json report{{"lhs", r.lhs}, {"rhs", r.rhs}, {"slack", r.slack},
                                {"lambda", r.lambda}, {"f_norm", r.f_norm}};
    std::cout << report.dump() << '\n';
    code = r.slack >= -1e-8 ? 0 : 1;
  });

  // sde
  auto* sde_cmd = app.add_subcommand("sde", "pathwise SDE solver");
  sde_cmd->require_subcommand(1);
  std::string coeffs = "builtin:geometric";
  double sigma0 = 0.5;
  std::string x0 = "1.0";
  std::size_t steps = 0;
  std::string driver_file;
  std::string scheme = "euler";
  double start = 0.0;
  auto* solve = sde_cmd->add_subcommand("solve", "forward solution X_{r,.}(x0) as CSV");
  solve->add_option("--coeffs", coeffs, "builtin field or coefficient JSON file");
  solve->add_option("--sigma0", sigma0, "parameter of builtin:geometric");
  solve->add_option("--x0", x0, "initial point, comma separated");
  solve->add_option("--hurst", spec.hurst, "Hurst parameter of the driver");
  solve->add_option("--n", spec.grid_size, "driver grid size");
  solve->add_option("--m", spec.components, "driver components (default: the field's noise dimension)");
  solve->add_option("--seed", spec.seed, "driver seed");
  solve->add_option("--steps", steps, "solver steps (default n; must divide n)");
  solve->add_option("--alpha", alpha, "fractional order in (1-H, alpha_0)");
  solve->add_option("--driver", driver_file, "read the driver from a path CSV instead of sampling");
  solve->add_option("--scheme", scheme, "euler or heun")->check(CLI::IsMember({"euler", "heun"}));
  solve->add_option("--r", start, "start time");
  solve->add_option("--out", out_path, "output CSV")->required();
  solve->callback([&] {
    std::string name = coeffs;
    if (name == "builtin:geometric" || name == "geometric") name = "geometric:" + std::to_string(sigma0);
    const auto field = sde::resolve_field(name);
    GridPath driver = driver_file.empty() ? GridPath(0.0, 1.0, 1, {0.0, 0.0}) : read_csv(driver_file);
    if (driver_file.empty()) {
      spec.components = field.noise_dim;
      driver = fbm::sample_circulant(spec).path;
    }
    const auto xs = parse_list(x0);
    const sde::Vector x = Eigen::Map<const sde::Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    const sde::SolverConfig cfg(alpha, steps == 0 ? driver.steps() : steps, spec.hurst, field);
    sde::SolveOptions opt;
    opt.scheme = scheme == "heun" ? sde::Scheme::heun : sde::Scheme::euler;
    write_csv(out_path, sde::solve_forward(x, start, field, driver, cfg, opt));
  });

  // experiments
  std::string config_file;
  std::string result_dir;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_file, "experiment config")->required();
  run->add_option("--out", result_dir, "output directory (default: the config's output)");
  run->callback([&] {
    auto cfg = experiment::load_config(config_file);
    if (!result_dir.empty()) cfg.output = result_dir;
    const auto res = experiment::run(cfg);
    experiment::save(res, cfg.output);
    std::cout << to_string(cfg.kind) << ": " << res.records.size() << " records in " << std::fixed
              << std::setprecision(1) << res.wall_time << " s -> " << cfg.output << '\n'
              << std::defaultfloat;
    code = print_criteria(res.summary);
  });

  bool strict = false;
  auto* verify = app.add_subcommand("verify", "recompute a result's summary from its records");
  verify->add_option("--result", result_dir, "result directory")->required();
  verify->add_flag("--strict", strict, "also fail when a stored criterion fails");
  verify->callback([&] {
    const auto rep = experiment::verify(result_dir);
    for (const auto& p : rep.problems) std::cout << "MISMATCH " << p << '\n';
    const int criteria = print_criteria(experiment::load(result_dir).summary);
    std::cout << (rep.ok ? "summary reproduced from records" : "summary does not match records")
              << "; criteria " << (rep.all_pass ? "pass" : "fail") << '\n';
    code = !rep.ok ? 1 : (strict ? criteria : 0);
  });

  std::string format = "csv";
  auto* report = app.add_subcommand("report", "print a result's records");
  report->add_option("--result", result_dir, "result directory")->required();
  report->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  report->callback([&] {
    const auto loaded = experiment::load(result_dir);
    const auto cols = experiment::columns_for(loaded.config.kind);
    if (format == "csv") {
      experiment::write_records(std::cout, cols, loaded.records);
      return;
    }
    for (const auto& r : loaded.records) {
      nlohmann::json j{{"seed", r.seed}, {"n", r.level}, {"probe", r.probe}, {"status", r.status}};
      for (std::size_t q = 0; q < cols.size(); ++q) j[cols[q]] = r.values[q];
      if (!r.message.empty()) j["message"] = r.message;
      std::cout << j.dump() << '\n';
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return code;
}
