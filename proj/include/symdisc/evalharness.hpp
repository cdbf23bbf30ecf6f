#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "symdisc/discover.hpp"
#include "symdisc/jetexpr.hpp"
#include "symdisc/simulate.hpp"

namespace symdisc {

// Each equation reads sum_i c_i f_i = 0 with nonzero c_i.
struct GroundTruth {
  std::string name;
  std::vector<Expr> equations;
  std::vector<Expr> lhs;  // designated evolution term per equation (may be empty)
  bool in_invariants = false;
  std::vector<std::string> symbols;
};

// boussinesq, boussinesq-invariant, rd, rd-invariant, rd-unequal(eps), rd-forced(eps), darcy,
// darcy-invariant, rd-3d. eps defaults to 0.1.
GroundTruth builtin_truth(const std::string& name);

struct MatchOptions {
  double drop_ratio = 0.01;  // terms below this fraction of the largest |coefficient| are ignored
  double rel_tol = 0.05;     // term values must agree to this relative error at every point
  int n_points = 100;
  // When set, matched coefficients must also agree (after a common rescaling fixed by the truth's
  // largest term) to this relative tolerance.
  std::optional<double> coefficient_tol;
};

struct MatchResult {
  bool correct = false;
  bool expansion_failed = false;
  std::size_t discovered_terms = 0;  // after filtering
  std::size_t truth_terms = 0;
  std::size_t matched = 0;
  std::string detail;
};

MatchResult match_terms(const Expr& discovered, const Expr& truth, std::uint64_t seed, const MatchOptions& opt = {});
// Equation i against truth equation i; correct when all match. Picks the invariant or jet form of
// each discovered equation to suit the truth.
MatchResult match_system(const std::vector<DiscoveredEquation>& eqs, const GroundTruth& truth, std::uint64_t seed,
                         const MatchOptions& opt = {});

struct PredictionConfig {
  double dt = 0.0;       // 0: system default (boussinesq 1e-3, rd-2d 1e-2, rd-3d 1e-2)
  double horizon = 0.0;  // 0: the whole test record
  double blowup = 1e6;
};

// Evolution systems: solves the equations for the designated time derivatives, integrates with
// spectral space derivatives and RK4 from the first test snapshot and returns the RMSE against the
// last one. darcy: RMS of the equation residual on interior test points, normalized by the
// Laplacian coefficient. NaN when the equations cannot be solved or the run blows up.
double prediction_error(const std::vector<DiscoveredEquation>& eqs, const std::string& system, const FieldData& test,
                        const PredictionConfig& cfg = {});

struct TrialResult {
  std::string method;
  double noise = 0.0;
  double epsilon = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<DiscoveredEquation> discovered;
  bool correct = false;
  double prediction_error = std::numeric_limits<double>::quiet_NaN();
  double runtime_seconds = 0.0;
  int complexity = 0;
  std::string error;  // failure message; the trial counts as incorrect
};

struct SummaryRow {
  std::string method;
  double noise = 0.0;
  double epsilon = 0.0;
  int n_trials = 0;
  int complexity = 0;
  double sp = 0.0;
  double pe_median = std::numeric_limits<double>::quiet_NaN();
  double pe_q25 = std::numeric_limits<double>::quiet_NaN();
  double pe_q75 = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
};

struct ExperimentMethod {
  std::string name;
  nlohmann::json discovery;  // DiscoveryConfig json; "seed" is set per trial
  std::string truth;         // overrides the experiment truth when set
};

struct ExperimentSpec {
  std::string name = "experiment";
  std::string system;          // boussinesq | rd-2d | rd-3d | darcy
  nlohmann::json simulation = nlohmann::json::object();
  std::string truth;           // builtin_truth name; "{eps}" is replaced by the epsilon value
  std::string epsilon_mode;    // "", "unequal" (d2 = d1 + eps) or "forcing"
  std::vector<double> epsilons{0.0};
  std::vector<double> noise_levels{0.0};
  int n_trials = 20;
  std::uint64_t seed = 0;
  bool prediction_error = false;
  PredictionConfig prediction;
  MatchOptions match;
  std::vector<ExperimentMethod> methods;

  static ExperimentSpec from_json(const nlohmann::json& j);
};

struct ExperimentResult {
  std::vector<SummaryRow> summary;
  std::vector<TrialResult> trials;
};

// Median and quartiles of the finite values (linear interpolation); NaN when none are finite.
std::array<double, 3> quartiles(std::vector<double> values);

ExperimentResult run_experiment(const ExperimentSpec& spec);
// summary.csv, trials.csv and curves.csv (SP against noise and epsilon per method).
void write_experiment(const ExperimentResult& r, const std::string& dir);

}  // namespace symdisc
