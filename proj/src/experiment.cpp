#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "symdisc/evalharness.hpp"

namespace symdisc {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw std::invalid_argument(where + ": unknown key '" + k + "'");
}

std::string format_number(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

std::string substitute_eps(std::string s, double eps) {
  const std::string key = "{eps}";
  for (auto p = s.find(key); p != std::string::npos; p = s.find(key)) s.replace(p, key.size(), format_number(eps));
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string num(double x) { return std::isfinite(x) ? format_number(x) : "nan"; }

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  check_keys(j,
             {"name", "system", "simulation", "truth", "epsilon_mode", "epsilons", "noise_levels", "n_trials", "seed",
              "prediction_error", "prediction", "match", "methods"},
             "experiment");
  ExperimentSpec s;
  s.name = j.value("name", s.name);
  s.system = j.at("system").get<std::string>();
  s.simulation = j.value("simulation", json::object());
  s.truth = j.value("truth", "");
  s.epsilon_mode = j.value("epsilon_mode", "");
  if (j.contains("epsilons")) s.epsilons = j["epsilons"].get<std::vector<double>>();
  if (j.contains("noise_levels")) s.noise_levels = j["noise_levels"].get<std::vector<double>>();
  s.n_trials = j.value("n_trials", s.n_trials);
  s.seed = j.value("seed", s.seed);
  s.prediction_error = j.value("prediction_error", false);
  if (j.contains("prediction")) {
    const auto& p = j["prediction"];
    check_keys(p, {"dt", "horizon", "blowup"}, "prediction");
    s.prediction.dt = p.value("dt", s.prediction.dt);
    s.prediction.horizon = p.value("horizon", s.prediction.horizon);
    s.prediction.blowup = p.value("blowup", s.prediction.blowup);
  }
  if (j.contains("match")) {
    const auto& m = j["match"];
    check_keys(m, {"drop_ratio", "rel_tol", "n_points", "coefficient_tol"}, "match");
    s.match.drop_ratio = m.value("drop_ratio", s.match.drop_ratio);
    s.match.rel_tol = m.value("rel_tol", s.match.rel_tol);
    s.match.n_points = m.value("n_points", s.match.n_points);
    if (m.contains("coefficient_tol")) s.match.coefficient_tol = m["coefficient_tol"].get<double>();
  }
  for (const auto& mj : j.at("methods")) {
    check_keys(mj, {"name", "discovery", "truth"}, "method");
    ExperimentMethod m;
    m.discovery = mj.at("discovery");
    m.name = mj.value("name", m.discovery.value("backend", std::string("method")));
    m.truth = mj.value("truth", "");
    s.methods.push_back(std::move(m));
  }
  if (s.methods.empty()) throw std::invalid_argument("experiment: no methods");
  if (s.n_trials < 0) throw std::invalid_argument("experiment: n_trials must be >= 0");
  if (!s.epsilon_mode.empty() && s.epsilon_mode != "unequal" && s.epsilon_mode != "forcing")
    throw std::invalid_argument("experiment: epsilon_mode must be unequal or forcing");
  if (!s.epsilon_mode.empty() && s.system != "rd-2d")
    throw std::invalid_argument("experiment: epsilon_mode needs the rd-2d system");
  for (const auto& m : s.methods)
    if (m.truth.empty() && s.truth.empty()) throw std::invalid_argument("experiment: method '" + m.name + "' has no truth");
  return s;
}

std::array<double, 3> quartiles(std::vector<double> values) {
  std::erase_if(values, [](double x) { return !std::isfinite(x); });
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (values.empty()) return {nan, nan, nan};
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult out;
  for (std::size_t ei = 0; ei < spec.epsilons.size(); ++ei) {
    const double eps = spec.epsilons[ei];
    json simj = spec.simulation;
    if (spec.epsilon_mode == "unequal") simj["d2"] = simj.value("d1", 0.1) + eps;
    else if (spec.epsilon_mode == "forcing") simj["forcing"] = eps;
    std::optional<SimulationResult> sim;
    if (spec.n_trials > 0) sim = simulate_system(spec.system, simj);

    std::vector<GroundTruth> truths;
    for (const auto& m : spec.methods) truths.push_back(builtin_truth(substitute_eps(m.truth.empty() ? spec.truth : m.truth, eps)));

    for (double noise : spec.noise_levels) {
      const std::size_t first = out.trials.size();
      for (int trial = 0; trial < spec.n_trials; ++trial) {
        // paired design: every method sees the same noisy data and seed
        const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(trial));
        const FieldData data = noise > 0 ? add_noise(sim->train, noise, derive_seed(seed, 1)) : sim->train;
        for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
          const auto& method = spec.methods[mi];
          TrialResult tr;
          tr.method = method.name;
          tr.noise = noise;
          tr.epsilon = eps;
          tr.trial = trial;
          tr.seed = seed;
          const auto t0 = std::chrono::steady_clock::now();
          try {
            json dj = method.discovery;
            dj["seed"] = seed;
            const DiscoveryConfig cfg = DiscoveryConfig::from_json(dj);
            tr.discovered = discover(data, cfg);
            tr.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!tr.discovered.empty()) tr.complexity = tr.discovered.front().complexity;
            tr.correct = match_system(tr.discovered, truths[mi], derive_seed(seed, 2), spec.match).correct;
            if (spec.prediction_error) {
              const FieldData& test = sim->test ? *sim->test : sim->train;
              tr.prediction_error = prediction_error(tr.discovered, spec.system, test, spec.prediction);
            }
          } catch (const std::exception& e) {
            tr.error = e.what();
            tr.correct = false;
            tr.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          }
          out.trials.push_back(std::move(tr));
        }
      }
      for (const auto& method : spec.methods) {
        SummaryRow row;
        row.method = method.name;
        row.noise = noise;
        row.epsilon = eps;
        std::vector<double> pe;
        std::vector<int> complexities;
        int correct = 0;
        for (std::size_t k = first; k < out.trials.size(); ++k) {
          const auto& tr = out.trials[k];
          if (tr.method != method.name) continue;
          ++row.n_trials;
          if (tr.correct) ++correct;
          if (!tr.error.empty()) ++row.failures;
          else complexities.push_back(tr.complexity);
          pe.push_back(tr.prediction_error);
        }
        row.sp = row.n_trials ? static_cast<double>(correct) / row.n_trials : 0.0;
        if (!complexities.empty()) {
          std::nth_element(complexities.begin(), complexities.begin() + static_cast<std::ptrdiff_t>(complexities.size() / 2),
                           complexities.end());
          row.complexity = complexities[complexities.size() / 2];
        }
        const auto q = quartiles(pe);
        row.pe_q25 = q[0];
        row.pe_median = q[1];
        row.pe_q75 = q[2];
        if (row.n_trials) out.summary.push_back(row);
      }
    }
  }
  return out;
}

void write_experiment(const ExperimentResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  {
    std::ofstream f(d / "summary.csv");
    f << "method,noise,epsilon,n_trials,complexity,sp,pe_median,pe_q25,pe_q75,failures\n";
    for (const auto& s : r.summary)
      f << csv_field(s.method) << ',' << num(s.noise) << ',' << num(s.epsilon) << ',' << s.n_trials << ',' << s.complexity
        << ',' << num(s.sp) << ',' << num(s.pe_median) << ',' << num(s.pe_q25) << ',' << num(s.pe_q75) << ','
        << s.failures << '\n';
  }
  {
    std::ofstream f(d / "trials.csv");
    f << "method,noise,epsilon,trial,seed,correct,prediction_error,runtime_seconds,complexity,equations,error\n";
    for (const auto& t : r.trials) {
      std::string eqs;
      for (const auto& e : t.discovered) {
        if (!eqs.empty()) eqs += "; ";
        eqs += print(e.lhs) + " = " + print(e.rhs);
      }
      f << csv_field(t.method) << ',' << num(t.noise) << ',' << num(t.epsilon) << ',' << t.trial << ',' << t.seed << ','
        << (t.correct ? 1 : 0) << ',' << num(t.prediction_error) << ',' << num(t.runtime_seconds) << ',' << t.complexity
        << ',' << csv_field(eqs) << ',' << csv_field(t.error) << '\n';
    }
  }
  {
    std::ofstream f(d / "curves.csv");
    f << "method,noise,epsilon,sp\n";
    for (const auto& s : r.summary)
      f << csv_field(s.method) << ',' << num(s.noise) << ',' << num(s.epsilon) << ',' << num(s.sp) << '\n';
  }
  if (!std::filesystem::exists(d / "summary.csv")) throw std::runtime_error("cannot write experiment output to " + dir);
}

}  // namespace symdisc
