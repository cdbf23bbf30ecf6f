#include "symdisc/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace symdisc {

// ---------------------------------------------------------------- JetSpace

std::vector<MultiIndex> JetSpace::multi_indices(int n) const {
  std::vector<MultiIndex> out{MultiIndex{}};
  std::vector<MultiIndex> frontier{MultiIndex{}};
  for (int k = 1; k <= n; ++k) {
    std::set<MultiIndex> next;
    for (const auto& J : frontier)
      for (int i : independents) {
        MultiIndex K = J;
        K[i]++;
        next.insert(K);
      }
    std::vector<MultiIndex> level(next.begin(), next.end());
    // x-heavy first, matching JetVar ordering
    std::sort(level.begin(), level.end(), [](const MultiIndex& a, const MultiIndex& b) {
      for (int i = 0; i < kMaxIndependent; ++i)
        if (a[i] != b[i]) return a[i] > b[i];
      return false;
    });
    out.insert(out.end(), level.begin(), level.end());
    frontier = level;
  }
  return out;
}

bool JetSpace::contains(const JetVar& v) const {
  switch (v.kind()) {
    case JetVar::Kind::Independent:
      return std::find(independents.begin(), independents.end(), v.index()) != independents.end();
    case JetVar::Kind::Dependent: {
      if (std::find(dependents.begin(), dependents.end(), v.index()) == dependents.end()) return false;
      for (int i = 0; i < kMaxIndependent; ++i)
        if (v.multi_index()[i] > 0 && std::find(independents.begin(), independents.end(), i) == independents.end())
          return false;
      return true;
    }
    case JetVar::Kind::Symbol:
      return false;
  }
  return false;
}

std::vector<JetVar> JetSpace::coordinates(int n) const {
  std::vector<JetVar> out;
  for (int i : independents) out.push_back(JetVar::independent(i));
  for (const auto& J : multi_indices(n))
    for (int a : dependents) out.push_back(JetVar::dependent(a, J));
  return out;
}

// ---------------------------------------------------------------- vector fields

void VectorField::validate() const {
  if (xi.size() != space.independents.size() || phi.size() != space.dependents.size())
    throw std::invalid_argument("vector field coefficient count does not match its space");
  auto check = [&](const Expr& e) {
    for (const auto& v : e.free_vars()) {
      if (v.kind() == JetVar::Kind::Symbol || v.order() > 0 || !space.contains(v))
        throw std::invalid_argument("vector field coefficient '" + print(e) +
                                    "' must depend only on base coordinates of the space");
    }
  };
  for (const auto& e : xi) check(e);
  for (const auto& e : phi) check(e);
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  if (a.space.independents != b.space.independents || a.space.dependents != b.space.dependents)
    throw std::invalid_argument("vector fields live on different spaces");
  VectorField r = a;
  for (std::size_t i = 0; i < r.xi.size(); ++i) r.xi[i] = a.xi[i] + b.xi[i];
  for (std::size_t i = 0; i < r.phi.size(); ++i) r.phi[i] = a.phi[i] + b.phi[i];
  return r;
}

VectorField operator*(double c, const VectorField& v) {
  VectorField r = v;
  for (auto& e : r.xi) e = Expr::constant(c) * e;
  for (auto& e : r.phi) e = Expr::constant(c) * e;
  return r;
}

Expr ProlongedField::coefficient(const JetVar& v) const {
  auto it = coeffs.find(v);
  return it == coeffs.end() ? Expr::constant(0.0) : it->second;
}

ProlongedField prolong(const VectorField& v, int n) {
  if (n < 0) throw std::invalid_argument("prolongation order must be non-negative");
  v.validate();
  const JetSpace& sp = v.space;
  ProlongedField pv;
  pv.base = v;
  pv.order = n;
  for (std::size_t i = 0; i < sp.independents.size(); ++i)
    pv.coeffs[JetVar::independent(sp.independents[i])] = v.xi[i];

  const auto indices = sp.multi_indices(n);
  for (std::size_t a = 0; a < sp.dependents.size(); ++a) {
    const int alpha = sp.dependents[a];
    // Q = phi - sum_i xi^i u_i
    std::vector<Expr> q{v.phi[a]};
    for (std::size_t i = 0; i < sp.independents.size(); ++i) {
      MultiIndex e{};
      e[sp.independents[i]] = 1;
      q.push_back(-(v.xi[i] * Expr::var(JetVar::dependent(alpha, e))));
    }
    Expr Q = Expr::add(q);
    pv.characteristic[JetVar::dependent(alpha)] = Q;

    std::map<MultiIndex, Expr> DQ{{MultiIndex{}, Q}};
    for (const auto& J : indices) {
      if (multi_index_order(J) > 0) {
        // D_J Q from D_{J - e_i} Q for the first i present in J
        int first = -1;
        for (int i : sp.independents)
          if (J[i] > 0 && (first < 0 || i < first)) first = i;
        MultiIndex prev = J;
        prev[first]--;
        DQ[J] = total_derivative(DQ.at(prev), first);
      }
      std::vector<Expr> terms{DQ.at(J)};
      for (std::size_t i = 0; i < sp.independents.size(); ++i) {
        MultiIndex K = J;
        K[sp.independents[i]]++;
        terms.push_back(v.xi[i] * Expr::var(JetVar::dependent(alpha, K)));
      }
      pv.coeffs[JetVar::dependent(alpha, J)] = Expr::add(terms);
    }
  }
  return pv;
}

Expr apply(const ProlongedField& pv, const Expr& e) {
  std::vector<Expr> terms;
  for (const auto& v : e.free_vars()) {
    if (!pv.base.space.contains(v))
      throw std::invalid_argument("variable '" + v.name() + "' is outside the jet space of the vector field");
    if (v.order() > pv.order)
      throw std::invalid_argument("expression of order " + std::to_string(e.max_order()) +
                                  " needs a prolongation of at least that order (have " +
                                  std::to_string(pv.order) + ")");
    Expr c = pv.coefficient(v);
    if (c.is_const(0.0)) continue;
    terms.push_back(c * partial_derivative(e, v));
  }
  return Expr::add(std::move(terms));
}

// ---------------------------------------------------------------- invariant sets

const NamedInvariant& InvariantSet::invariant(const std::string& n) const {
  for (const auto& inv : invariants)
    if (inv.name == n) return inv;
  throw std::out_of_range("unknown invariant '" + n + "' in set '" + name + "'");
}

bool InvariantSet::has(const std::string& n) const {
  return std::any_of(invariants.begin(), invariants.end(), [&](const auto& i) { return i.name == n; });
}

std::set<std::string> InvariantSet::names() const {
  std::set<std::string> s;
  for (const auto& i : invariants) s.insert(i.name);
  return s;
}

std::vector<Expr> InvariantSet::symbols() const {
  std::vector<Expr> out;
  for (const auto& i : invariants) out.push_back(Expr::var(JetVar::symbol(i.name)));
  return out;
}

std::map<JetVar, Expr> InvariantSet::definitions() const {
  std::map<JetVar, Expr> m;
  for (const auto& i : invariants) m[JetVar::symbol(i.name)] = i.expr;
  return m;
}

int InvariantSet::max_order() const {
  int n = 0;
  for (const auto& i : invariants) n = std::max(n, i.expr.max_order());
  return n;
}

EvalTable sample_jet_points(const std::vector<JetVar>& vars, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  EvalTable t;
  t.variables = vars;
  t.values.resize(n, static_cast<Eigen::Index>(vars.size()));
  for (int r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) t.values(r, c) = nd(rng);
  return t;
}

namespace {

std::vector<JetVar> union_vars(std::initializer_list<const std::vector<JetVar>*> lists) {
  std::set<JetVar> s;
  for (const auto* l : lists) s.insert(l->begin(), l->end());
  return {s.begin(), s.end()};
}

// Draws standard-normal points where every guard holds and every expression is finite.
EvalTable sample_valid_points(const std::vector<JetVar>& vars, const std::vector<Expr>& must_be_finite,
                              const std::vector<Guard>& guards, int n, std::mt19937_64& rng) {
  EvalTable out;
  out.variables = vars;
  out.values.resize(n, static_cast<Eigen::Index>(vars.size()));
  int filled = 0;
  for (int attempt = 0; attempt < 50 && filled < n; ++attempt) {
    EvalTable batch = sample_jet_points(vars, std::max(2 * (n - filled), 16), rng);
    Eigen::Array<bool, Eigen::Dynamic, 1> ok = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(batch.rows(), true);
    for (const auto& g : guards) {
      bool applicable = std::all_of(g.expr.free_vars().begin(), g.expr.free_vars().end(),
                                    [&](const JetVar& v) { return batch.column(v) >= 0; });
      if (!applicable) continue;
      Eigen::VectorXd gv = evaluate(g.expr, batch);
      for (Eigen::Index r = 0; r < gv.size(); ++r)
        if (!(std::abs(gv[r]) >= g.min_abs)) ok[r] = false;
    }
    for (const auto& e : must_be_finite) {
      Eigen::VectorXd ev = evaluate(e, batch);
      for (Eigen::Index r = 0; r < ev.size(); ++r)
        if (!std::isfinite(ev[r])) ok[r] = false;
    }
    for (Eigen::Index r = 0; r < batch.rows() && filled < n; ++r)
      if (ok[r]) out.values.row(filled++) = batch.values.row(r);
  }
  out.values.conservativeResize(filled, Eigen::NoChange);
  return out;
}

}  // namespace

bool InvarianceReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double InvarianceReport::max_residual() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_residual);
  return m;
}

InvarianceReport verify_invariance(const InvariantSet& s, int n_points, std::uint64_t seed, double tol) {
  InvarianceReport rep;
  rep.tolerance = tol;
  std::mt19937_64 rng(seed);
  const int order = s.max_order();
  for (std::size_t g = 0; g < s.generators.size(); ++g) {
    ProlongedField pv = prolong(s.generators[g], order);
    for (const auto& inv : s.invariants) {
      InvarianceEntry entry;
      entry.generator = static_cast<int>(g);
      entry.invariant = inv.name;
      Expr r = apply(pv, inv.expr);
      std::vector<JetVar> vars = union_vars({&inv.expr.free_vars(), &r.free_vars()});
      for (const auto& gd : s.guards)
        for (const auto& v : gd.expr.free_vars())
          if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
      EvalTable pts = sample_valid_points(vars, {inv.expr, r}, s.guards, n_points, rng);
      entry.valid_points = static_cast<int>(pts.rows());
      if (pts.rows() > 0) {
        Eigen::VectorXd eta = evaluate(inv.expr, pts);
        Eigen::VectorXd res = evaluate(r, pts);
        for (Eigen::Index k = 0; k < pts.rows(); ++k)
          entry.max_residual = std::max(entry.max_residual, std::abs(res[k]) / (1.0 + std::abs(eta[k])));
      }
      entry.passed = entry.valid_points == n_points && entry.max_residual < tol;
      rep.entries.push_back(entry);
    }
  }
  return rep;
}

// ---------------------------------------------------------------- Prop. 4.3 recursion

Expr determinant(const std::vector<std::vector<Expr>>& m) {
  const std::size_t n = m.size();
  if (n == 0) return Expr::constant(1.0);
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  std::vector<Expr> terms;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].is_const(0.0)) continue;
    std::vector<std::vector<Expr>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Expr> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(row);
    }
    Expr t = m[0][c] * determinant(minor);
    terms.push_back(c % 2 == 0 ? t : -t);
  }
  return Expr::add(terms);
}

std::vector<Expr> higher_order_invariants(const JetSpace& space, const std::vector<Expr>& eta,
                                          const std::vector<Expr>& zeta,
                                          const std::optional<EvalTable>& check_points) {
  const std::size_t p = space.independents.size();
  if (eta.size() != p)
    throw std::invalid_argument("need exactly p = " + std::to_string(p) + " invariants eta, got " +
                                std::to_string(eta.size()));
  // J[i][j] = D_i eta^j
  std::vector<std::vector<Expr>> J(p, std::vector<Expr>(p));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) J[i][j] = total_derivative(eta[j], space.independents[i]);
  Expr den = expand(determinant(J));

  // non-degeneracy at the check points
  std::vector<JetVar> vars;
  {
    std::set<JetVar> s;
    for (const auto& row : J)
      for (const auto& e : row) s.insert(e.free_vars().begin(), e.free_vars().end());
    vars.assign(s.begin(), s.end());
  }
  EvalTable pts;
  if (check_points) {
    pts = *check_points;
  } else {
    std::mt19937_64 rng(0);
    pts = sample_jet_points(vars, 16, rng);
  }
  Eigen::VectorXd dv = evaluate(den, pts);
  std::vector<Eigen::VectorXd> entries;
  for (const auto& row : J)
    for (const auto& e : row) entries.push_back(evaluate(e, pts));
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    // Hadamard-style scale: product of column norms
    double scale = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      double s2 = 0.0;
      for (std::size_t i = 0; i < p; ++i) s2 += entries[i * p + j][k] * entries[i * p + j][k];
      scale *= std::max(std::sqrt(s2), 1e-300);
    }
    if (!(std::abs(dv[k]) > 1e-8 * scale))
      throw DegenerateJacobianError("horizontal Jacobian is degenerate at check point " + std::to_string(k),
                                    static_cast<std::size_t>(k));
  }

  std::vector<Expr> out;
  for (const auto& z : zeta) {
    std::vector<Expr> Dz(p);
    for (std::size_t i = 0; i < p; ++i) Dz[i] = total_derivative(z, space.independents[i]);
    for (std::size_t k = 0; k < p; ++k) {
      auto Jk = J;
      for (std::size_t i = 0; i < p; ++i) Jk[i][k] = Dz[i];
      Expr num = expand(determinant(Jk));
      out.push_back(num / den);
    }
  }
  return out;
}

namespace {

std::size_t monomial_count(const Expr& e) {
  try {
    return expand_to_monomials(e).size();
  } catch (const ExpansionError&) {
    return std::numeric_limits<std::size_t>::max();
  }
}

// c with a == c*b when a and b agree up to a constant factor.
std::optional<double> proportional(const Expr& a, const Expr& b) {
  std::vector<Term> ta, tb;
  try {
    ta = expand_to_monomials(a);
    tb = expand_to_monomials(b);
  } catch (const ExpansionError&) {
    return std::nullopt;
  }
  if (ta.empty() || ta.size() != tb.size()) return std::nullopt;
  double c = ta[0].coefficient / tb[0].coefficient;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(ta[i].monomial == tb[i].monomial)) return std::nullopt;
    if (std::abs(ta[i].coefficient - c * tb[i].coefficient) > 1e-12 * std::abs(ta[i].coefficient)) return std::nullopt;
  }
  return c;
}

}  // namespace

Expr refine_invariant(const Expr& candidate, const std::vector<Expr>& known) {
  Expr cur = candidate;
  // drop denominators that are themselves invariants: N/D invariant and D invariant => N invariant
  if (cur.kind() == Expr::Kind::Mul) {
    std::vector<Expr> kept;
    bool changed = false;
    for (const auto& f : cur.children()) {
      if (f.kind() == Expr::Kind::Pow && f.exponent() < Rational(0) && f.exponent().is_integer()) {
        bool is_known = std::any_of(known.begin(), known.end(),
                                    [&](const Expr& k) { return proportional(f.base(), k).has_value(); });
        if (is_known) {
          changed = true;
          continue;
        }
      }
      kept.push_back(f);
    }
    if (changed) cur = Expr::mul(kept);
  }
  cur = expand(cur);

  std::vector<std::vector<Term>> known_terms;
  for (const auto& k : known) {
    try {
      known_terms.push_back(expand_to_monomials(k));
    } catch (const ExpansionError&) {
      known_terms.emplace_back();
    }
  }
  std::size_t best = monomial_count(cur);
  for (bool improved = true; improved;) {
    improved = false;
    std::vector<Term> ct;
    try {
      ct = expand_to_monomials(cur);
    } catch (const ExpansionError&) {
      break;
    }
    Expr best_expr = cur;
    for (std::size_t k = 0; k < known.size(); ++k) {
      for (const auto& kt : known_terms[k]) {
        auto it = std::find_if(ct.begin(), ct.end(), [&](const Term& t) { return t.monomial == kt.monomial; });
        if (it == ct.end()) continue;
        double c = it->coefficient / kt.coefficient;
        Expr trial = expand(cur - Expr::constant(c) * known[k]);
        std::size_t n = monomial_count(trial);
        if (n < best) {
          best = n;
          best_expr = trial;
          improved = true;
        }
      }
    }
    cur = best_expr;
  }
  return cur;
}

int invariant_rank(const std::vector<Expr>& candidates, int n_points, std::uint64_t seed) {
  std::set<JetVar> s;
  for (const auto& c : candidates) s.insert(c.free_vars().begin(), c.free_vars().end());
  std::vector<JetVar> vars(s.begin(), s.end());
  if (vars.empty() || candidates.empty()) return 0;
  std::vector<std::vector<Expr>> grads(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (const auto& v : vars) grads[i].push_back(partial_derivative(candidates[i], v));
  std::mt19937_64 rng(seed);
  EvalTable pts = sample_jet_points(vars, n_points, rng);
  std::vector<std::vector<Eigen::VectorXd>> vals(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (const auto& g : grads[i]) vals[i].push_back(evaluate(g, pts));
  int rank = 0;
  for (Eigen::Index k = 0; k < pts.rows(); ++k) {
    Eigen::MatrixXd Jm(candidates.size(), vars.size());
    bool finite = true;
    for (std::size_t i = 0; i < candidates.size(); ++i)
      for (std::size_t j = 0; j < vars.size(); ++j) {
        Jm(i, j) = vals[i][j][k];
        finite = finite && std::isfinite(Jm(i, j));
      }
    if (!finite) continue;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Jm);
    const auto& sv = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-8 * std::max(1.0, sv[0])) ++r;
    rank = std::max(rank, r);
  }
  return rank;
}

}  // namespace symdisc
