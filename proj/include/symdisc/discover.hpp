#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "symdisc/gpsr.hpp"
#include "symdisc/jetexpr.hpp"
#include "symdisc/regress.hpp"
#include "symdisc/simulate.hpp"
#include "symdisc/symmetry.hpp"

namespace symdisc {

enum class Backend { Gp, Sindy, SindyConstrained, SindyRelaxed, Wsindy, WsindyConstrained, WsindyRelaxed };

Backend parse_backend(const std::string& name);
std::string backend_name(Backend b);
bool is_weak(Backend b);
bool is_constrained(Backend b);  // constrained or relaxed
bool is_relaxed(Backend b);

enum class LhsPolicy { EnumerateAll, Fixed };

// splitmix64 of base ^ golden * (k + 1); per-trial and per-candidate seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k);

// Raw-jet LHS and library used by the named presets.
struct LibraryPreset {
  std::vector<Expr> lhs;
  std::vector<Expr> library;
};

// boussinesq-pysindy: {1,u,u^2} x {1,u_x,..,u_xxxx} (no u_x^2); boussinesq-pysindy-star: monomials of
// degree <= 2 in u,u_x,..,u_xxxx; rd-19: cubic reaction terms plus first and second space derivatives.
LibraryPreset library_preset(const std::string& name);

// 1, atoms, then products with repetition up to `degree`, in index order.
std::vector<Expr> monomial_library(const std::vector<Expr>& atoms, int degree);

struct DiscoveryConfig {
  Backend backend = Backend::Sindy;
  std::optional<InvariantSet> invariants;  // empty: raw jet variables
  LhsPolicy lhs_policy = LhsPolicy::Fixed;
  // Invariant mode: invariant names. Raw / constrained modes: jet expressions.
  std::vector<std::string> lhs;
  // Raw-jet library (constrained, weak and raw sindy): preset name or expressions.
  std::string library_preset;
  std::vector<std::string> library;
  // Feature variables: invariant names (invariant mode) or jet variables (raw gp). Empty: all.
  std::vector<std::string> features;
  std::vector<std::string> exclude;
  int library_degree = 2;
  int jet_order = 4;  // raw gp features when none are listed

  double subsample_fraction = 1.0;
  std::size_t max_samples = 0;  // 0: no cap
  int border_trim = 0;
  double time_max = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  DerivativeMethod derivative_method = DerivativeMethod::Spectral;
  int fd_accuracy = 2;

  StlsqOptions stlsq;
  double gamma_ridge = -1.0;  // relaxed modes; negative means 100 x ridge
  WeakFormConfig weak;
  GpConfig gp;

  void validate() const;
  // "symmetry" is a catalog name, a JSON file path or "raw".
  static DiscoveryConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DiscoveredEquation {
  Expr lhs;
  Expr rhs;
  bool in_invariants = false;
  std::vector<std::string> symbols;  // invariant names used by lhs/rhs
  std::optional<Expr> expanded;      // lhs - rhs in jet variables, = 0
  bool cleared = false;              // a common denominator was cleared (or none was needed)
  double rel_l1_error = std::numeric_limits<double>::quiet_NaN();
  bool error_defined = false;
  std::string backend;
  double runtime_seconds = 0.0;
  int complexity = 0;  // q*m sparse, r constrained, variable count for gp
  // relaxed modes
  std::optional<Expr> rhs_symmetric;
  std::optional<Expr> rhs_breaking;

  Expr residual() const { return lhs - rhs; }
  // Jet-variable form when available, else the invariant form.
  Expr equation() const { return expanded ? *expanded : residual(); }
};

struct ExpansionResult {
  Expr expr;
  bool cleared = false;
};

// Substitutes invariant definitions into lhs - rhs, multiplies by the smallest monomial that removes
// every negative exponent and expands. Leaves the substituted form with cleared = false when
// fractional exponents remain or expansion fails.
ExpansionResult expand_to_original(const DiscoveredEquation& eq, const InvariantSet& iset);

// Jet variables that the configured pipeline reads from the data.
std::vector<JetVar> required_variables(const FieldData& fd, const DiscoveryConfig& cfg);

// Border trim, time cut, seeded subsample, derivative estimation, guards.
JetDataset prepare_dataset(const FieldData& fd, const DiscoveryConfig& cfg);

// General explicit regression: fit each candidate LHS on the remaining features with GP, keep the lowest
// ||y - f(X)||_1 / ||y||_1; ties go to lower complexity, then lower index.
DiscoveredEquation discover_general(const JetDataset& data, const DiscoveryConfig& cfg);

// Strong-form sparse backends: one equation per LHS row.
std::vector<DiscoveredEquation> discover_sparse(const JetDataset& data, const DiscoveryConfig& cfg);

// Weak-form sparse backends on the raw fields.
std::vector<DiscoveredEquation> discover_weak(const FieldData& fd, const DiscoveryConfig& cfg);

// Dispatch on the backend.
std::vector<DiscoveredEquation> discover(const FieldData& fd, const DiscoveryConfig& cfg);

void write_discovery(const std::vector<DiscoveredEquation>& eqs, const std::string& dir);
std::vector<DiscoveredEquation> read_discovery(const std::string& dir);

}  // namespace symdisc
