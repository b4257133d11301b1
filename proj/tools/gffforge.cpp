// Command-line harness: field sampling, named experiments, excursion runs,
// lattice calibration and process paths.
//
// Exit codes: 0 success, 1 test failure, 2 configuration error,
// 3 resolution error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gffforge/gffforge.hpp"

namespace fs = std::filesystem;
using namespace gffforge;

namespace {

enum Exit { kPass = 0, kFail = 1, kConfig = 2, kResolution = 3 };

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_file(const fs::path &p, const std::string &contents) {
  std::ofstream os(p, std::ios::binary);
  if (!os)
    throw ConfigError("cannot write " + p.string());
  os << contents;
}

std::vector<double> parse_grid(const std::string &csv) {
  std::vector<double> g;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      g.push_back(std::stod(item, &used));
      if (used != item.size())
        throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw ConfigError("grid: cannot parse '" + item + "'");
    }
  }
  if (g.empty())
    throw ConfigError("grid: empty list");
  return g;
}

int run_verify(const std::string &experiment, const std::string &config_file) {
  nlohmann::json user = nlohmann::json::object();
  if (!config_file.empty()) {
    std::ifstream is(config_file);
    if (!is)
      throw ConfigError("cannot open config " + config_file);
    try {
      user = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error &e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!user.is_object())
      throw ConfigError("config: expected a JSON object");
  }
  if (!experiment.empty()) {
    if (user.contains("experiment") && user["experiment"] != experiment)
      throw ConfigError("--experiment disagrees with the config file");
    user["experiment"] = experiment;
  }
  const ExperimentConfig cfg = make_config(user);
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentOutcome out = run_experiment(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const auto reports = out.report_json();
  write_file(dir / "report.json", reports.dump(2) + "\n");
  write_file(dir / "data.json", out.data.dump(2) + "\n");
  for (const auto &[name, contents] : out.files)
    write_file(dir / name, contents);
  const nlohmann::json manifest{{"experiment", cfg.experiment}, {"config", config_json(cfg)},
                                {"version", kVersion},          {"started_at", started},
                                {"wall_seconds", wall},         {"reports", reports}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  for (const auto &r : out.reports)
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  statistic=" << r.statistic
              << (r.p_value ? "  p=" + std::to_string(*r.p_value) : std::string())
              << "  threshold=" << r.threshold << "\n";
  for (const auto &v : out.verdicts) {
    std::cout << "verdict: " << v.overall() << "  sigma_hat=" << v.sigma_hat;
    for (const auto &x : v.rejected)
      std::cout << " " << x;
    std::cout << "\n";
  }
  std::cout << "wrote " << dir.string() << "/report.json\n";
  return out.passed() ? kPass : kFail;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"gffforge: Gaussian free field characterization toolkit"};
  app.require_subcommand(1);

  auto *sample = app.add_subcommand("sample", "sample a lattice field on the unit disk");
  std::string law = "gff", out_file;
  double alpha = 1.5;
  int size = 64;
  std::uint64_t seed = 1;
  sample->add_option("--law", law, "gff or stable")->check(CLI::IsMember({"gff", "stable"}));
  sample->add_option("--alpha", alpha, "stable index in (1,2)");
  sample->add_option("--size", size, "lattice is size x size over the unit disk")
      ->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "random seed");
  sample->add_option("--out", out_file, "binary grid file")->required();

  auto *verify = app.add_subcommand("verify", "run a named experiment");
  std::string experiment, config_file;
  verify->add_option("--experiment", experiment, "experiment name");
  verify->add_option("--config", config_file, "JSON configuration file");

  auto *exc = app.add_subcommand("excursions", "Brownian excursion hit statistics");
  double r = 1.0, eps = 1e-3;
  std::size_t n = 200000;
  std::string hits_csv;
  exc->add_option("--r", r, "semicircle radius");
  exc->add_option("--eps", eps, "start height");
  exc->add_option("--n", n, "number of root paths");
  exc->add_option("--seed", seed, "random seed");
  exc->add_option("--csv", hits_csv, "optional hit-record CSV output");

  auto *cal = app.add_subcommand("calibrate", "re-derive the lattice constant");
  cal->add_option("--size", size, "disk lattice size")->check(CLI::PositiveNumber);

  auto *paths = app.add_subcommand("paths", "sample circle- or sine-average paths (CSV)");
  std::string kind = "sine", backend = "exact", grid;
  std::size_t n_paths = 1000;
  paths->add_option("--kind", kind, "circle or sine")->check(CLI::IsMember({"circle", "sine"}));
  paths->add_option("--backend", backend, "exact or lattice")
      ->check(CLI::IsMember({"exact", "lattice"}));
  paths->add_option("--grid", grid, "comma-separated grid")->required();
  paths->add_option("--n", n_paths, "number of replicas");
  paths->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfig;
  }

  try {
    if (*sample) {
      const auto L = LatticeDomain::disk(size);
      const auto s = law == "gff" ? sample_dgff(L, seed) : sample_stable_field(L, alpha, seed);
      std::ofstream os(out_file, std::ios::binary);
      if (!os)
        throw ConfigError("cannot write " + out_file);
      write_grid(os, s);
      std::cout << "wrote " << L.n_interior() << " interior sites to " << out_file << "\n";
      return kPass;
    }
    if (*verify) {
      if (experiment.empty() && config_file.empty())
        throw ConfigError("verify: need --experiment or --config");
      return run_verify(experiment, config_file);
    }
    if (*exc) {
      const auto res = sample_excursion_hits(r, eps, n, seed);
      const nlohmann::json j{{"r", r},
                             {"eps", eps},
                             {"n", n},
                             {"seed", seed},
                             {"mass_estimate", res.mass_estimate},
                             {"standard_error", res.standard_error},
                             {"target", total_excursion_mass(r)},
                             {"hits", res.hit_records()}};
      std::cout << j.dump(2) << "\n";
      if (!hits_csv.empty()) {
        std::ofstream os(hits_csv);
        write_hits_csv(os, res);
      }
      return kPass;
    }
    if (*cal) {
      auto cfg = make_config({{"experiment", "calibrate"}, {"lattice_size", size}});
      const auto out = run_experiment(cfg);
      std::cout << out.data.dump(2) << "\n";
      for (const auto &rep : out.reports)
        std::cout << (rep.passed ? "PASS " : "FAIL ") << rep.name << ": " << rep.notes << "\n";
      return out.passed() ? kPass : kFail;
    }
    if (*paths) {
      const auto g = parse_grid(grid);
      const Backend b = backend == "exact" ? Backend::Exact : Backend::Lattice;
      const auto p = kind == "sine" ? sine_average_path(g, n_paths, seed, b)
                                    : circle_average_path({0.0, 0.0}, g, n_paths, seed, b);
      p.write_csv(std::cout);
      return kPass;
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ResolutionError &e) {
    std::cerr << "resolution error: " << e.what() << "\n";
    return kResolution;
  } catch (const DomainError &e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kPass;
}
