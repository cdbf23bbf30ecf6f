#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "symdisc/jetexpr.hpp"

namespace symdisc {

// Which coordinates make up the total space: indices into x,y,z,t and u,v,w.
struct JetSpace {
  std::vector<int> independents;
  std::vector<int> dependents;

  int p() const { return static_cast<int>(independents.size()); }
  int q() const { return static_cast<int>(dependents.size()); }
  // All multi-indices over the space's independents with |J| <= n, by increasing order.
  std::vector<MultiIndex> multi_indices(int n) const;
  bool contains(const JetVar& v) const;
  // Every coordinate of the n-th jet space.
  std::vector<JetVar> coordinates(int n) const;
};

struct VectorField {
  JetSpace space;
  std::vector<Expr> xi;   // coefficient of d/dx^i, aligned with space.independents
  std::vector<Expr> phi;  // coefficient of d/du^a, aligned with space.dependents

  // Throws if coefficients reference derivatives or lengths disagree with the space.
  void validate() const;
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator*(double c, const VectorField& v);

struct ProlongedField {
  VectorField base;
  int order = 0;
  std::map<JetVar, Expr> coeffs;  // independent coordinates carry xi, u^a_J carry phi^a_J
  std::map<JetVar, Expr> characteristic;  // Q^a keyed by u^a

  Expr coefficient(const JetVar& v) const;
};

ProlongedField prolong(const VectorField& v, int n);
// Throws std::invalid_argument when e needs a higher order than pv or leaves the jet space.
Expr apply(const ProlongedField& pv, const Expr& e);

struct NamedInvariant {
  std::string name;
  Expr expr;
};

struct Guard {
  Expr expr;
  double min_abs = 0.0;
};

struct InvariantSet {
  std::string name;
  JetSpace space;
  std::vector<VectorField> generators;
  std::vector<NamedInvariant> invariants;
  std::vector<Guard> guards;
  std::vector<std::string> lhs_candidates;

  const NamedInvariant& invariant(const std::string& name) const;
  bool has(const std::string& name) const;
  std::set<std::string> names() const;
  std::vector<Expr> symbols() const;  // Var(Symbol(name)) per invariant, in order
  std::map<JetVar, Expr> definitions() const;  // Symbol(name) -> defining expression
  int max_order() const;
};

// Standard-normal samples for each variable.
EvalTable sample_jet_points(const std::vector<JetVar>& vars, int n, std::mt19937_64& rng);

struct InvarianceEntry {
  int generator = 0;
  std::string invariant;
  double max_residual = 0.0;
  int valid_points = 0;
  bool passed = false;
};

struct InvarianceReport {
  std::vector<InvarianceEntry> entries;
  double tolerance = 1e-8;
  bool passed() const;
  double max_residual() const;
};

InvarianceReport verify_invariance(const InvariantSet& s, int n_points, std::uint64_t seed, double tol = 1e-8);

class DegenerateJacobianError : public std::runtime_error {
 public:
  DegenerateJacobianError(const std::string& msg, std::size_t point)
      : std::runtime_error(msg), point_(point) {}
  std::size_t point() const { return point_; }

 private:
  std::size_t point_;
};

// Symbolic determinant by cofactor expansion (intended for p <= 4).
Expr determinant(const std::vector<std::vector<Expr>>& m);

// Ratios det(J with column k replaced by D zeta) / det(J), J = [D_i eta^j]; output ordered
// zeta-major: for each zeta, k = 0..p-1. Without check points, 16 standard-normal points are used.
std::vector<Expr> higher_order_invariants(const JetSpace& space, const std::vector<Expr>& eta,
                                          const std::vector<Expr>& zeta,
                                          const std::optional<EvalTable>& check_points = std::nullopt);

// Clears denominators that are known invariants and subtracts multiples of known invariants
// while that lowers the monomial count.
Expr refine_invariant(const Expr& candidate, const std::vector<Expr>& known);

// Numerical rank of d(candidates)/d(jet coordinates), maximised over random points.
int invariant_rank(const std::vector<Expr>& candidates, int n_points, std::uint64_t seed);

// "so2-space", "scaling-translation" or "scaling-translation(a,b)" (order 4),
// "phase-rotation-2", "so3-space".
InvariantSet builtin_catalog(const std::string& name);
InvariantSet so2_space_catalog();
InvariantSet scaling_translation_catalog(Rational a, Rational b, int order, double guard = 0.1);
InvariantSet phase_rotation_catalog(int order = 2);
InvariantSet so3_space_catalog();

// Loads a catalog name or a JSON file describing generators, invariants, guards and LHS candidates.
InvariantSet load_symmetry(const std::string& catalog_or_path);
InvariantSet parse_symmetry_json(const std::string& json_text);

}  // namespace symdisc
