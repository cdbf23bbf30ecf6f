#include "symdisc/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <regex>
#include <set>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/max_cardinality_matching.hpp>

#include "symdisc/spectral.hpp"

namespace symdisc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

GroundTruth rd_truth(const std::string& name, double d2_extra, double forcing) {
  GroundTruth g;
  g.name = name;
  const Expr d1 = Expr(0.1), d2 = Expr(0.1 + d2_extra), eps = Expr(forcing);
  const Expr A = parse("u^2 + v^2");
  const Expr u = parse("u"), v = parse("v");
  const Expr fu = d1 * parse("u_xx + u_yy") + (Expr(1.0) - A) * u + A * v - eps * v;
  const Expr fv = d2 * parse("v_xx + v_yy") - A * u + (Expr(1.0) - A) * v - eps * u;
  g.lhs = {parse("u_t"), parse("v_t")};
  g.equations = {expand(g.lhs[0] - fu), expand(g.lhs[1] - fv)};
  return g;
}

double parse_epsilon(const std::smatch& m) { return m[1].matched ? std::stod(m[1].str()) : 0.1; }

}  // namespace

GroundTruth builtin_truth(const std::string& name) {
  if (name == "boussinesq") {
    GroundTruth g;
    g.name = name;
    g.lhs = {parse("u_tt")};
    g.equations = {parse("u_tt + u*u_xx + u_x^2 + u_xxxx")};
    return g;
  }
  if (name == "boussinesq-invariant") {
    const auto syms = builtin_catalog("scaling-translation").names();
    GroundTruth g;
    g.name = name;
    g.in_invariants = true;
    g.symbols = {syms.begin(), syms.end()};
    g.lhs = {parse("eta_0_2", syms)};
    g.equations = {parse("eta_0_2 + eta_0_0*eta_2_0 + eta_4_0 + 1", syms)};
    return g;
  }
  if (name == "rd") return rd_truth(name, 0.0, 0.0);
  if (name == "rd-invariant") {
    const auto syms = builtin_catalog("phase-rotation-2").names();
    GroundTruth g;
    g.name = name;
    g.in_invariants = true;
    g.symbols = {syms.begin(), syms.end()};
    g.lhs = {parse("I_t", syms), parse("E_t", syms)};
    g.equations = {parse("I_t - 0.1*I_xx - 0.1*I_yy - A + A^2", syms), parse("E_t - 0.1*E_xx - 0.1*E_yy + A^2", syms)};
    return g;
  }
  static const std::regex unequal(R"(rd-unequal(?:\(\s*([-+0-9.eE]+)\s*\))?)"),
      forced(R"(rd-forced(?:\(\s*([-+0-9.eE]+)\s*\))?)");
  std::smatch m;
  if (std::regex_match(name, m, unequal)) return rd_truth(name, parse_epsilon(m), 0.0);
  if (std::regex_match(name, m, forced)) return rd_truth(name, 0.0, parse_epsilon(m));
  if (name == "darcy") {
    GroundTruth g;
    g.name = name;
    g.lhs = {parse("u_xx")};
    g.equations = {parse("u_xx + u_yy - 8*x*u_x - 8*y*u_y + exp(4*x^2 + 4*y^2)")};
    return g;
  }
  if (name == "darcy-invariant") {
    const auto syms = builtin_catalog("so2-space").names();
    GroundTruth g;
    g.name = name;
    g.in_invariants = true;
    g.symbols = {syms.begin(), syms.end()};
    g.lhs = {parse("lap", syms)};
    g.equations = {parse("lap - 8*zeta2 + exp(8*eta1)", syms)};
    return g;
  }
  if (name == "rd-3d") {
    GroundTruth g;
    g.name = name;
    g.lhs = {parse("u_t")};
    g.equations = {parse("u_t - 0.2*u_xx - 0.2*u_yy - 0.2*u_zz - u + u^3")};
    return g;
  }
  throw std::invalid_argument("unknown ground truth '" + name + "'");
}

MatchResult match_terms(const Expr& discovered, const Expr& truth, std::uint64_t seed, const MatchOptions& opt) {
  MatchResult r;
  std::vector<Term> dt, tt;
  try {
    dt = expand_to_monomials(discovered);
  } catch (const ExpansionError& e) {
    r.expansion_failed = true;
    r.detail = std::string("expansion failed: ") + e.what();
    return r;
  }
  tt = expand_to_monomials(truth);
  double cmax = 0.0;
  for (const auto& t : dt) cmax = std::max(cmax, std::abs(t.coefficient));
  std::erase_if(dt, [&](const Term& t) { return std::abs(t.coefficient) < opt.drop_ratio * cmax; });
  r.discovered_terms = dt.size();
  r.truth_terms = tt.size();
  if (dt.empty() || tt.empty()) {
    r.detail = "empty equation";
    return r;
  }

  std::set<JetVar> vars;
  for (const auto* terms : {&dt, &tt})
    for (const auto& t : *terms)
      for (const auto& v : t.monomial.free_vars()) vars.insert(v);
  EvalTable table;
  table.variables.assign(vars.begin(), vars.end());
  table.values.resize(opt.n_points, static_cast<Eigen::Index>(vars.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (Eigen::Index i = 0; i < table.values.rows(); ++i)
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) table.values(i, j) = n01(rng);
  auto values = [&](const std::vector<Term>& terms) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& t : terms) {
      Eigen::VectorXd v = evaluate(t.monomial, table);
      if (v.size() == 1) v = Eigen::VectorXd::Constant(opt.n_points, v[0]);
      out.push_back(std::move(v));
    }
    return out;
  };
  const auto dv = values(dt), tv = values(tt);
  auto agree = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const bool fa = std::isfinite(a[i]), fb = std::isfinite(b[i]);
      if (!fa && !fb) continue;
      if (fa != fb) return false;
      if (!(std::abs(a[i] - b[i]) <= opt.rel_tol * std::abs(b[i]))) return false;
    }
    return true;
  };

  const std::size_t nd = dt.size(), nt = tt.size();
  using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS>;
  Graph g(nd + nt);
  for (std::size_t i = 0; i < nd; ++i)
    for (std::size_t j = 0; j < nt; ++j)
      if (agree(dv[i], tv[j])) boost::add_edge(i, nd + j, g);
  std::vector<boost::graph_traits<Graph>::vertex_descriptor> mate(nd + nt);
  boost::edmonds_maximum_cardinality_matching(g, &mate[0]);
  r.matched = boost::matching_size(g, &mate[0]);
  if (nd != nt || r.matched != nt) {
    r.detail = std::to_string(r.matched) + " of " + std::to_string(nt) + " truth terms matched by " + std::to_string(nd) +
               " discovered terms";
    return r;
  }
  if (opt.coefficient_tol) {
    std::size_t k = 0;
    for (std::size_t j = 1; j < nt; ++j)
      if (std::abs(tt[j].coefficient) > std::abs(tt[k].coefficient)) k = j;
    const double lambda = dt[mate[nd + k]].coefficient / tt[k].coefficient;
    for (std::size_t j = 0; j < nt; ++j) {
      const double c = dt[mate[nd + j]].coefficient / lambda;
      if (std::abs(c - tt[j].coefficient) > *opt.coefficient_tol * std::abs(tt[j].coefficient)) {
        r.detail = "coefficient of " + print(tt[j].monomial) + " is " + std::to_string(c) + " against " +
                   std::to_string(tt[j].coefficient);
        return r;
      }
    }
  }
  r.correct = true;
  return r;
}

MatchResult match_system(const std::vector<DiscoveredEquation>& eqs, const GroundTruth& truth, std::uint64_t seed,
                         const MatchOptions& opt) {
  MatchResult total;
  if (eqs.size() != truth.equations.size()) {
    total.detail = std::to_string(eqs.size()) + " equations against " + std::to_string(truth.equations.size());
    return total;
  }
  total.correct = true;
  std::vector<bool> used(eqs.size(), false);
  for (std::size_t i = 0; i < truth.equations.size(); ++i) {
    std::size_t pick = eqs.size();
    if (i < truth.lhs.size())
      for (std::size_t k = 0; k < eqs.size(); ++k)
        if (!used[k] && eqs[k].lhs == truth.lhs[i]) pick = k;
    if (pick == eqs.size()) {
      if (eqs.size() == 1) pick = 0;
      else if (!used[i]) pick = i;
      else {
        total.correct = false;
        total.detail = "no equation for " + print(truth.lhs[i]);
        return total;
      }
    }
    used[pick] = true;
    const auto& eq = eqs[pick];
    if (truth.in_invariants && !eq.in_invariants) {
      total.correct = false;
      total.detail = "invariant truth against a jet-variable equation";
      return total;
    }
    const Expr form = truth.in_invariants ? eq.residual() : eq.equation();
    const MatchResult r = match_terms(form, truth.equations[i], derive_seed(seed, i), opt);
    total.discovered_terms += r.discovered_terms;
    total.truth_terms += r.truth_terms;
    total.matched += r.matched;
    total.expansion_failed = total.expansion_failed || r.expansion_failed;
    if (!r.correct) {
      total.correct = false;
      if (total.detail.empty()) total.detail = "equation " + std::to_string(i) + ": " + r.detail;
    }
  }
  return total;
}

// ---- prediction error ----

namespace {

struct EvolutionSystem {
  std::vector<std::string> fields;
  std::vector<JetVar> lhs;  // solved-for time derivatives
  int time_order = 1;
  bool dealias = false;
  double dt = 1e-2;
};

EvolutionSystem evolution_system(const std::string& system) {
  MultiIndex t1{}, t2{};
  t1[3] = 1;
  t2[3] = 2;
  if (system == "boussinesq") return {{"u"}, {JetVar::dependent(0, t2)}, 2, true, 1e-3};
  if (system == "rd-2d") return {{"u", "v"}, {JetVar::dependent(0, t1), JetVar::dependent(1, t1)}, 1, false, 1e-2};
  if (system == "rd-3d") return {{"u"}, {JetVar::dependent(0, t1)}, 1, false, 1e-2};
  throw std::invalid_argument("prediction_error: unknown system '" + system + "'");
}

// C(z) lhs' = -G(z) with C, G polynomial in the remaining variables.
struct LinearForm {
  std::vector<std::vector<Expr>> C;
  std::vector<Expr> G;
};

std::optional<LinearForm> solve_form(const std::vector<DiscoveredEquation>& eqs, const std::vector<JetVar>& lhs) {
  const std::size_t q = lhs.size();
  if (eqs.size() != q) return std::nullopt;
  LinearForm f;
  f.C.assign(q, std::vector<Expr>(q, Expr(0.0)));
  f.G.assign(q, Expr(0.0));
  for (std::size_t i = 0; i < q; ++i) {
    std::vector<Term> terms;
    try {
      terms = expand_to_monomials(eqs[i].equation());
    } catch (const ExpansionError&) {
      return std::nullopt;
    }
    std::vector<std::vector<Term>> c(q);
    std::vector<Term> g;
    for (const auto& t : terms) {
      int which = -1, hits = 0;
      for (std::size_t j = 0; j < q; ++j)
        if (t.monomial.contains(lhs[j])) {
          which = static_cast<int>(j);
          ++hits;
        }
      if (hits == 0) {
        g.push_back(t);
        continue;
      }
      if (hits > 1) return std::nullopt;
      const Expr rest = expand(t.monomial / Expr(lhs[which]));
      if (rest.contains(lhs[which])) return std::nullopt;
      c[which].push_back({t.coefficient, rest});
    }
    for (std::size_t j = 0; j < q; ++j) f.C[i][j] = resum(c[j]);
    f.G[i] = resum(g);
  }
  return f;
}

bool allowed_var(const JetVar& v, const std::vector<std::string>& fields, int time_order) {
  if (v.kind() == JetVar::Kind::Symbol) return false;
  if (v.kind() == JetVar::Kind::Independent) return true;
  const std::string f(1, kDependentNames[v.index()]);
  if (std::find(fields.begin(), fields.end(), f) == fields.end()) return false;
  const int tj = v.multi_index()[3];
  // second-order systems carry u_t as state, but not its space derivatives
  return tj == 0 || (time_order == 2 && tj == 1 && v.order() == 1);
}

double darcy_pe(const std::vector<DiscoveredEquation>& eqs, const FieldData& test) {
  if (eqs.size() != 1) return kNaN;
  std::vector<Term> terms;
  try {
    terms = expand_to_monomials(eqs[0].equation());
  } catch (const ExpansionError&) {
    return kNaN;
  }
  double lap = 0.0;
  for (const auto& t : terms)
    if (t.monomial == parse("u_xx")) lap = t.coefficient;
  if (lap == 0.0) return kNaN;
  const Expr F = resum(terms) / Expr(lap);
  std::vector<JetVar> vars;
  for (const auto& v : F.free_vars()) {
    if (v.kind() == JetVar::Kind::Symbol) return kNaN;
    vars.push_back(v);
  }
  JetDataset d = estimate_derivatives(test, vars, DerivativeOptions{DerivativeMethod::FiniteDifference, 2, 2});
  Eigen::VectorXd r = evaluate(F, d.table());
  if (!r.allFinite()) return kNaN;
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

}  // namespace

double prediction_error(const std::vector<DiscoveredEquation>& eqs, const std::string& system, const FieldData& test,
                        const PredictionConfig& cfg) {
  test.validate();
  if (system == "darcy") return darcy_pe(eqs, test);
  const EvolutionSystem sys = evolution_system(system);
  const auto form = solve_form(eqs, sys.lhs);
  if (!form) return kNaN;

  const Grid& grid = test.grid;
  if (grid.axes.empty() || grid.axes[0].name != "t") throw std::invalid_argument("prediction_error: test data needs t first");
  std::vector<int> shape;
  std::vector<double> lengths;
  for (std::size_t a = 1; a < grid.axes.size(); ++a) {
    if (!grid.axes[a].periodic) throw std::invalid_argument("prediction_error: spatial axes must be periodic");
    shape.push_back(grid.axes[a].n);
    lengths.push_back(grid.axes[a].length());
  }
  const std::size_t npts = grid.size() / static_cast<std::size_t>(grid.axes[0].n);
  const auto& tax = grid.axes[0];

  // variables the right-hand side reads
  std::set<JetVar> needed;
  bool any_c = false;
  for (std::size_t i = 0; i < form->G.size(); ++i) {
    for (const auto& v : form->G[i].free_vars()) needed.insert(v);
    for (const auto& c : form->C[i]) {
      any_c = any_c || !(c.kind() == Expr::Kind::Const && c.value() == 0.0);
      for (const auto& v : c.free_vars()) needed.insert(v);
    }
  }
  if (!any_c) return kNaN;
  for (const auto& v : needed)
    if (!allowed_var(v, sys.fields, sys.time_order)) return kNaN;
  const std::vector<JetVar> vars(needed.begin(), needed.end());

  // coordinates of the spatial grid points, per jet independent
  std::map<int, std::vector<double>> coords;
  for (std::size_t a = 1; a < grid.axes.size(); ++a) {
    std::vector<double> c(npts);
    std::size_t inner = 1;
    for (std::size_t b = a + 1; b < grid.axes.size(); ++b) inner *= static_cast<std::size_t>(grid.axes[b].n);
    for (std::size_t p = 0; p < npts; ++p) c[p] = grid.axes[a].coord(static_cast<int>((p / inner) % grid.axes[a].n));
    coords[grid.jet_index(static_cast<int>(a))] = std::move(c);
  }

  const std::size_t nf = sys.fields.size();
  const std::size_t state_size = nf * npts * static_cast<std::size_t>(sys.time_order);
  std::vector<double> state(state_size);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& src = test.field(sys.fields[f]);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(npts), state.begin() + f * npts);
  }
  if (sys.time_order == 2) {
    for (std::size_t f = 0; f < nf; ++f) {
      const std::string vel = sys.fields[f] + "_t";
      const auto& u = test.field(sys.fields[f]);
      double* dst = state.data() + (nf + f) * npts;
      if (test.fields.count(vel)) {
        const auto& w = test.field(vel);
        std::copy(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(npts), dst);
      } else {
        if (tax.n < 3) return kNaN;
        const double h = tax.spacing();
        for (std::size_t p = 0; p < npts; ++p) dst[p] = (-3.0 * u[p] + 4.0 * u[npts + p] - u[2 * npts + p]) / (2.0 * h);
      }
    }
  }

  // one forward transform per state block and stage; each derivative is a multiplier on it
  RealFFT fft(shape);
  const SpectralBox box(shape, lengths);
  const std::size_t nc = fft.complex_size();
  std::vector<std::vector<std::complex<double>>> mult(vars.size());
  std::vector<std::size_t> block_of(vars.size(), 0);
  std::vector<bool> block_used(state_size / npts, false);
  for (std::size_t c = 0; c < vars.size(); ++c) {
    const JetVar& v = vars[c];
    if (v.kind() != JetVar::Kind::Dependent) continue;
    const std::string fname(1, kDependentNames[v.index()]);
    const auto f = static_cast<std::size_t>(std::find(sys.fields.begin(), sys.fields.end(), fname) - sys.fields.begin());
    block_of[c] = v.multi_index()[3] == 1 ? nf + f : f;
    block_used[block_of[c]] = true;
    if (v.order() - v.multi_index()[3] == 0) continue;
    mult[c].assign(nc, 1.0);
    for (std::size_t a = 1; a < grid.axes.size(); ++a) {
      const int m = v.multi_index()[grid.jet_index(static_cast<int>(a))];
      if (!m) continue;
      const double kmax = M_PI * shape[a - 1] / lengths[a - 1];
      for (std::size_t k = 0; k < nc; ++k) {
        const double ka = box.k[a - 1][k];
        const bool nyquist = shape[a - 1] % 2 == 0 && std::abs(ka - kmax) <= 1e-12 * kmax;
        mult[c][k] *= nyquist && m % 2 == 1 ? 0.0 : std::pow(std::complex<double>(0.0, ka), m);
      }
    }
  }
  std::vector<std::vector<std::complex<double>>> spec_of(block_used.size());
  std::vector<std::complex<double>> spec(nc);
  std::vector<double> real(npts);

  EvalTable table;
  table.variables = vars;
  table.values.resize(static_cast<Eigen::Index>(npts), static_cast<Eigen::Index>(vars.size()));
  const std::size_t q = sys.lhs.size();
  auto accel = [&](const std::vector<double>& s, double t, std::vector<double>& out) -> bool {
    for (std::size_t b = 0; b < block_used.size(); ++b) {
      if (!block_used[b]) continue;
      spec_of[b].resize(nc);
      fft.forward(s.data() + b * npts, spec_of[b].data());
    }
    for (std::size_t c = 0; c < vars.size(); ++c) {
      const JetVar& v = vars[c];
      auto col = table.values.col(static_cast<Eigen::Index>(c));
      if (v.kind() == JetVar::Kind::Independent) {
        if (v.index() == 3) {
          col.setConstant(t);
        } else {
          auto it = coords.find(v.index());
          if (it == coords.end()) return false;
          for (std::size_t p = 0; p < npts; ++p) col[static_cast<Eigen::Index>(p)] = it->second[p];
        }
        continue;
      }
      const double* src = s.data() + block_of[c] * npts;
      if (!mult[c].empty()) {
        for (std::size_t k = 0; k < nc; ++k) spec[k] = spec_of[block_of[c]][k] * mult[c][k];
        fft.inverse(spec.data(), real.data());
        src = real.data();
      }
      for (std::size_t p = 0; p < npts; ++p) col[static_cast<Eigen::Index>(p)] = src[p];
    }
    auto ev = [&](const Expr& e) {
      Eigen::VectorXd r = evaluate(e, table);
      if (r.size() == 1 && npts != 1) r = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(npts), r[0]);
      return r;
    };
    std::vector<std::vector<Eigen::VectorXd>> C(q, std::vector<Eigen::VectorXd>(q));
    std::vector<Eigen::VectorXd> G(q);
    for (std::size_t i = 0; i < q; ++i) {
      G[i] = ev(form->G[i]);
      for (std::size_t j = 0; j < q; ++j) C[i][j] = ev(form->C[i][j]);
    }
    out.assign(q * npts, 0.0);
    Eigen::MatrixXd Cp(q, q);
    Eigen::VectorXd Gp(q);
    for (std::size_t p = 0; p < npts; ++p) {
      const auto pi = static_cast<Eigen::Index>(p);
      for (std::size_t i = 0; i < q; ++i) {
        Gp[static_cast<Eigen::Index>(i)] = G[i][pi];
        for (std::size_t j = 0; j < q; ++j) Cp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = C[i][j][pi];
      }
      Eigen::VectorXd x = q == 1 ? Eigen::VectorXd::Constant(1, -Gp[0] / Cp(0, 0)) : Eigen::VectorXd(Cp.partialPivLu().solve(-Gp));
      for (std::size_t i = 0; i < q; ++i) out[i * npts + p] = x[static_cast<Eigen::Index>(i)];
    }
    if (sys.dealias) {
      for (std::size_t i = 0; i < q; ++i) {
        fft.forward(out.data() + i * npts, spec.data());
        for (std::size_t k = 0; k < nc; ++k) spec[k] *= box.dealias[k];
        fft.inverse(spec.data(), out.data() + i * npts);
      }
    }
    for (double x : out)
      if (!std::isfinite(x)) return false;
    return true;
  };
  // full state derivative
  auto deriv = [&](const std::vector<double>& s, double t, std::vector<double>& ds) -> bool {
    std::vector<double> a;
    if (!accel(s, t, a)) return false;
    ds.resize(state_size);
    if (sys.time_order == 1) {
      ds = std::move(a);
    } else {
      std::copy(s.begin() + static_cast<std::ptrdiff_t>(nf * npts), s.end(), ds.begin());
      std::copy(a.begin(), a.end(), ds.begin() + static_cast<std::ptrdiff_t>(nf * npts));
    }
    return true;
  };

  const double horizon = cfg.horizon > 0 ? cfg.horizon : tax.max - tax.min;
  const int target = static_cast<int>(std::lround(horizon / tax.spacing()));
  if (target < 1 || target >= tax.n) throw std::invalid_argument("prediction_error: horizon outside the test record");
  const double dt0 = cfg.dt > 0 ? cfg.dt : sys.dt;
  const long steps = std::max(1L, std::lround(horizon / dt0));
  const double dt = horizon / static_cast<double>(steps);
  std::vector<double> k1, k2, k3, k4, tmp(state_size);
  double t = tax.min;
  for (long n = 0; n < steps; ++n) {
    if (!deriv(state, t, k1)) return kNaN;
    for (std::size_t i = 0; i < state_size; ++i) tmp[i] = state[i] + 0.5 * dt * k1[i];
    if (!deriv(tmp, t + 0.5 * dt, k2)) return kNaN;
    for (std::size_t i = 0; i < state_size; ++i) tmp[i] = state[i] + 0.5 * dt * k2[i];
    if (!deriv(tmp, t + 0.5 * dt, k3)) return kNaN;
    for (std::size_t i = 0; i < state_size; ++i) tmp[i] = state[i] + dt * k3[i];
    if (!deriv(tmp, t + dt, k4)) return kNaN;
    for (std::size_t i = 0; i < state_size; ++i) {
      state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(state[i]) || std::abs(state[i]) > cfg.blowup) return kNaN;
    }
    t = tax.min + static_cast<double>(n + 1) * dt;
  }
  double sq = 0.0;
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& ref = test.field(sys.fields[f]);
    for (std::size_t p = 0; p < npts; ++p) {
      const double d = state[f * npts + p] - ref[static_cast<std::size_t>(target) * npts + p];
      sq += d * d;
    }
  }
  return std::sqrt(sq / static_cast<double>(nf * npts));
}

}  // namespace symdisc
