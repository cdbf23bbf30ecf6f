#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "symdisc/jetexpr.hpp"
#include "symdisc/symmetry.hpp"

namespace symdisc {

struct GridAxis {
  std::string name;  // x, y, z or t
  int n = 0;
  double min = 0.0, max = 1.0;
  bool periodic = false;

  // Periodic axes exclude the right endpoint.
  double spacing() const { return periodic ? (max - min) / n : n > 1 ? (max - min) / (n - 1) : 0.0; }
  double coord(int i) const { return min + i * spacing(); }
  double length() const { return max - min; }
};

// Row-major over `axes`; time, when present, is conventionally the first axis.
struct Grid {
  std::vector<GridAxis> axes;

  std::size_t size() const;
  std::vector<int> shape() const;
  std::vector<std::size_t> strides() const;
  int axis_index(const std::string& name) const;  // -1 when absent
  // Jet independent index (x=0, y=1, z=2, t=3) of an axis.
  int jet_index(int axis) const;
  std::vector<int> unravel(std::size_t flat) const;
  void validate() const;
};

struct FieldData {
  Grid grid;
  std::map<std::string, std::vector<double>> fields;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();

  const std::vector<double>& field(const std::string& name) const;
  void validate() const;
  // Sub-range [begin, end) of the first axis.
  FieldData slice_first_axis(int begin, int end) const;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& msg, double time) : std::runtime_error(msg), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct SimulationResult {
  FieldData train;
  std::optional<FieldData> test;  // continuation over [T, 2T]
};

struct BoussinesqConfig {
  int n = 256;
  double xmin = -10.0, xmax = 10.0;
  double dt = 1e-3;
  double t_final = 20.0;
  double dt_store = 0.05;
  double amplitude = 0.5;  // u(x, 0) = amplitude * exp(-x^2), u_t(x, 0) = 0
  bool dealias = true;
  bool with_test = true;
  double blowup = 1e6;

  static BoussinesqConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Train field "u"; the test continuation also carries the solver's "u_t".
SimulationResult simulate_boussinesq(const BoussinesqConfig& cfg);

enum class DarcyBoundary { Dirichlet, Neumann };
enum class DarcyInit { Random, Constant };

struct DarcyConfig {
  int n = 128;
  double xmin = -0.5, xmax = 0.5;
  double t_final = 5.0;
  double cfl = 0.25;  // dt = cfl * h^2 / max(a)
  double decay = 4.0;  // a(x) = exp(-decay |x|^2)
  double forcing = 1.0;
  DarcyBoundary boundary = DarcyBoundary::Dirichlet;
  DarcyInit init = DarcyInit::Random;
  double init_value = 0.0;
  std::uint64_t seed = 0;
  double residual_tol = 1e-4;
  bool strict = false;  // throw when the final residual exceeds residual_tol

  static DarcyConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Final snapshot on an (x, y) node grid; config["residual_rms"] holds the steady-state residual.
SimulationResult simulate_darcy(const DarcyConfig& cfg);
// RMS over interior nodes (all nodes for Neumann) of div(a grad u) + f in the solver's discretization.
double darcy_residual(const FieldData& fd, const DarcyConfig& cfg);

enum class RdInit { Spiral, Zero };

struct ReactionDiffusion2DConfig {
  int n = 128;
  double xmin = -10.0, xmax = 10.0;
  double d1 = 0.1, d2 = 0.1;
  double forcing = 0.0;  // adds -eps v to u_t and -eps u to v_t
  double t_final = 10.0;
  double dt_store = 0.05;
  double rtol = 1e-6, atol = 1e-8;
  RdInit init = RdInit::Spiral;
  bool with_test = true;
  double blowup = 1e6;

  static ReactionDiffusion2DConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Fields u, v on (t, x, y).
SimulationResult simulate_reaction_diffusion_2d(const ReactionDiffusion2DConfig& cfg);

enum class Rd3Init { Random, Zero, One };

struct ReactionDiffusion3DConfig {
  int n = 32;
  double xmin = -10.0, xmax = 10.0;
  double d = 0.2;
  double t_final = 10.0;
  double dt_store = 0.1;
  double rtol = 1e-6, atol = 1e-8;
  Rd3Init init = Rd3Init::Random;
  double init_amplitude = 0.1;
  std::uint64_t seed = 0;
  bool with_test = false;
  double blowup = 1e6;

  static ReactionDiffusion3DConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Field u on (t, x, y, z).
SimulationResult simulate_reaction_diffusion_3d(const ReactionDiffusion3DConfig& cfg);

// Dispatch by name: boussinesq, darcy, rd-2d, rd-3d.
SimulationResult simulate_system(const std::string& name, const nlohmann::json& cfg);

// Adds level * RMS(field) * N(0,1) independently to every value of every field.
FieldData add_noise(const FieldData& fd, double level, std::uint64_t seed);

enum class DerivativeMethod { FiniteDifference, Spectral };

struct DerivativeOptions {
  // Spectral applies only on periodic axes; the rest always use finite differences.
  DerivativeMethod method = DerivativeMethod::Spectral;
  int border_trim = 0;  // points removed at each end of every non-periodic axis
  int fd_accuracy = 2;  // even order of the finite-difference stencils
};

// Finite-difference weights for the m-th derivative at x0 from the given nodes (Fornberg).
std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int m);

// Full-grid array of d^J field. Central differences of order fd_accuracy, one-sided near non-periodic edges.
std::vector<double> derivative_field(const FieldData& fd, const std::string& field, const MultiIndex& J,
                                     DerivativeMethod method, int fd_accuracy = 2);

struct JetDataset {
  std::vector<JetVar> variables;
  Eigen::MatrixXd samples;          // rows x variables
  std::vector<std::size_t> rows;    // flat grid index of each sample
  std::vector<bool> mask;           // false: trimmed border or guard violation

  int column(const JetVar& v) const;  // -1 when absent
  bool has(const JetVar& v) const { return column(v) >= 0; }
  std::size_t size() const { return rows.size(); }
  std::size_t count_valid() const;
  // Masked rows only.
  EvalTable table() const;
  JetDataset masked() const;
};

// Every independent coordinate of the grid plus every derivative of every field up to max_order.
std::vector<JetVar> jet_variables(const FieldData& fd, int max_order);

JetDataset estimate_derivatives(const FieldData& fd, const std::vector<JetVar>& vars, const DerivativeOptions& opt,
                                const std::vector<std::size_t>* rows = nullptr);
JetDataset estimate_derivatives(const FieldData& fd, int max_order, const DerivativeOptions& opt,
                                const std::vector<std::size_t>* rows = nullptr);

// Clears mask entries where a guard expression is below its threshold in magnitude or non-finite.
void apply_guards(JetDataset& data, const std::vector<Guard>& guards);

// meta.json plus one <field>.f64 per field (little-endian doubles, row-major).
void save_field_data(const FieldData& fd, const std::string& dir);
FieldData load_field_data(const std::string& dir);

}  // namespace symdisc
