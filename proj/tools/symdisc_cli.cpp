#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "symdisc/discover.hpp"
#include "symdisc/evalharness.hpp"
#include "symdisc/simulate.hpp"

using namespace symdisc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

int run_simulate(const std::string& system, const std::string& config, const std::string& out) {
  const auto sim = simulate_system(system, read_json(config));
  save_field_data(sim.train, out);
  if (sim.test) save_field_data(*sim.test, (fs::path(out) / "test").string());
  std::cout << "wrote " << out << (sim.test ? " (+ test/)" : "") << "\n";
  return 0;
}

int run_discover(const std::string& data, const std::string& symmetry, const std::string& backend,
                 const std::string& config, const std::string& out) {
  json j = read_json(config);
  if (!symmetry.empty()) j["symmetry"] = symmetry;
  if (!backend.empty()) j["backend"] = backend;
  const auto cfg = DiscoveryConfig::from_json(j);
  const auto eqs = discover(load_field_data(data), cfg);
  write_discovery(eqs, out);
  for (const auto& e : eqs) std::cout << print(e.lhs) << " = " << print(e.rhs) << "\n";
  return 0;
}

int run_evaluate(const std::string& results, const std::string& truth_name, std::uint64_t seed,
                 const std::string& system, const std::string& test) {
  const auto eqs = read_discovery(results);
  const auto truth = builtin_truth(truth_name);
  const auto m = match_system(eqs, truth, seed);
  std::cout << "correct: " << (m.correct ? "yes" : "no") << "\n";
  if (!m.detail.empty()) std::cout << "detail: " << m.detail << "\n";
  if (!system.empty()) {
    const double pe = prediction_error(eqs, system, load_field_data(test));
    std::cout << "prediction_error: " << (std::isfinite(pe) ? std::to_string(pe) : "nan") << "\n";
  }
  return m.correct ? 0 : 2;
}

int run_sweep(const std::string& spec_path, std::string out) {
  const auto spec = ExperimentSpec::from_json(read_json(spec_path));
  if (out.empty()) out = spec.name;
  const auto r = run_experiment(spec);
  write_experiment(r, out);
  for (const auto& s : r.summary)
    std::cout << s.method << " noise=" << s.noise << " eps=" << s.epsilon << " sp=" << s.sp
              << " complexity=" << s.complexity << " pe=" << s.pe_median << "\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symmetry-informed equation discovery"};
  app.require_subcommand(1);

  std::string system, config, out, data, symmetry, backend, results, truth, test, spec;
  std::uint64_t seed = 0;

  auto* sim = app.add_subcommand("simulate", "simulate a benchmark system");
  sim->add_option("--system", system, "boussinesq | rd-2d | rd-3d | darcy")->required();
  sim->add_option("--config", config, "simulation config (json)");
  sim->add_option("--out", out, "output directory")->required();

  auto* disc = app.add_subcommand("discover", "discover equations from field data");
  disc->add_option("--data", data, "field data directory")->required();
  disc->add_option("--symmetry", symmetry, "catalog name, symmetry json file or raw");
  disc->add_option("--backend", backend, "sindy | gp | sindy-constrained | ...");
  disc->add_option("--config", config, "discovery config (json)");
  disc->add_option("--out", out, "output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "compare discovered equations with a known system");
  ev->add_option("--results", results, "discovery output directory")->required();
  ev->add_option("--truth", truth, "ground truth name")->required();
  ev->add_option("--seed", seed, "seed for the matching points");
  ev->add_option("--system", system, "also report the prediction error for this system");
  ev->add_option("--test", test, "test field data for --system");

  auto* sw = app.add_subcommand("sweep", "run an experiment grid");
  sw->add_option("--spec", spec, "experiment spec (json)")->required();
  sw->add_option("--out", out, "output directory (default: the experiment name)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return run_simulate(system, config, out);
    if (*disc) return run_discover(data, symmetry, backend, config, out);
    if (*ev) {
      if (!system.empty() && test.empty()) throw std::invalid_argument("--system needs --test");
      return run_evaluate(results, truth, seed, system, test);
    }
    if (*sw) return run_sweep(spec, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
