#include "symdisc/discover.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace symdisc {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
  std::uint64_t z = base ^ (0x9E3779B97F4A7C15ULL * (k + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

const std::vector<std::pair<Backend, std::string>> kBackendNames = {
    {Backend::Gp, "gp"},
    {Backend::Sindy, "sindy"},
    {Backend::SindyConstrained, "sindy-constrained"},
    {Backend::SindyRelaxed, "sindy-relaxed"},
    {Backend::Wsindy, "wsindy"},
    {Backend::WsindyConstrained, "wsindy-constrained"},
    {Backend::WsindyRelaxed, "wsindy-relaxed"},
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Expr> parse_all(const std::vector<std::string>& texts) {
  std::vector<Expr> out;
  for (const auto& t : texts) out.push_back(parse(t));
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) { return std::find(v.begin(), v.end(), s) != v.end(); }

Expr combine(const Eigen::RowVectorXd& w, const std::vector<Expr>& library) {
  std::vector<Expr> terms;
  for (Eigen::Index l = 0; l < w.size(); ++l)
    if (w[l] != 0.0) terms.push_back(Expr::constant(w[l]) * library[static_cast<std::size_t>(l)]);
  return terms.empty() ? Expr(0.0) : Expr::add(std::move(terms));
}

int variable_count(const Expr& a, const Expr& b) {
  std::set<JetVar> vars;
  for (const auto& v : a.free_vars()) vars.insert(v);
  for (const auto& v : b.free_vars()) vars.insert(v);
  return static_cast<int>(vars.size());
}

void set_error(DiscoveredEquation& eq, const Eigen::VectorXd& y, const Eigen::VectorXd& f) {
  const double denom = y.lpNorm<1>();
  eq.rel_l1_error = denom > 0 ? (y - f).lpNorm<1>() / denom : std::numeric_limits<double>::quiet_NaN();
  eq.error_defined = std::isfinite(eq.rel_l1_error);
}

Eigen::VectorXd eval_rows(const Expr& e, const EvalTable& t) {
  Eigen::VectorXd v = evaluate(e, t);
  if (v.size() == 1 && t.rows() != 1) v = Eigen::VectorXd::Constant(t.rows(), v[0]);
  return v;
}

// (atom, exponent) factors of a monomial.
std::vector<std::pair<Expr, Rational>> factors(const Expr& mono) {
  std::vector<std::pair<Expr, Rational>> out;
  auto one = [&](const Expr& f) {
    if (f.is_const()) return;
    if (f.kind() == Expr::Kind::Pow) out.emplace_back(f.base(), f.exponent());
    else out.emplace_back(f, Rational(1));
  };
  if (mono.kind() == Expr::Kind::Mul) {
    for (const auto& c : mono.children()) one(c);
  } else {
    one(mono);
  }
  return out;
}

bool is_invariant_mode(const DiscoveryConfig& cfg) {
  return cfg.invariants && (cfg.backend == Backend::Gp || cfg.backend == Backend::Sindy);
}

// Invariant names usable as features (everything not excluded, or the listed features).
std::vector<std::string> feature_pool(const DiscoveryConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& inv : cfg.invariants->invariants) {
    if (contains(cfg.exclude, inv.name)) continue;
    if (!cfg.features.empty() && !contains(cfg.features, inv.name)) continue;
    out.push_back(inv.name);
  }
  return out;
}

std::vector<std::string> invariant_lhs(const DiscoveryConfig& cfg) {
  auto names = cfg.lhs.empty() ? cfg.invariants->lhs_candidates : cfg.lhs;
  if (names.empty()) throw std::invalid_argument("no LHS invariant given and the symmetry names no LHS candidates");
  for (const auto& n : names)
    if (!cfg.invariants->has(n)) throw std::invalid_argument("LHS '" + n + "' is not an invariant of " + cfg.invariants->name);
  return names;
}

std::vector<Expr> raw_library(const DiscoveryConfig& cfg) {
  if (!cfg.library.empty()) return parse_all(cfg.library);
  if (!cfg.library_preset.empty()) return library_preset(cfg.library_preset).library;
  throw std::invalid_argument("backend " + backend_name(cfg.backend) + " needs a library");
}

// Listed LHS, else the preset's, else first time derivatives of the given fields.
std::vector<Expr> raw_lhs(const DiscoveryConfig& cfg, const std::vector<int>& dependents) {
  if (!cfg.lhs.empty()) return parse_all(cfg.lhs);
  if (!cfg.library_preset.empty()) return library_preset(cfg.library_preset).lhs;
  std::vector<Expr> out;
  MultiIndex J{};
  J[3] = 1;
  for (int a : dependents) out.push_back(Expr(JetVar::dependent(a, J)));
  if (out.empty()) throw std::invalid_argument("no LHS given and no fields to default to");
  return out;
}

std::vector<int> field_dependents(const FieldData& fd) {
  std::vector<int> out;
  for (const auto& [name, values] : fd.fields)
    for (int i = 0; i < kMaxDependent; ++i)
      if (name.size() == 1 && name[0] == kDependentNames[i]) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> data_dependents(const JetDataset& data) {
  std::set<int> out;
  for (const auto& v : data.variables) {
    const auto& J = v.multi_index();
    if (v.kind() == JetVar::Kind::Dependent && v.order() == 1 && J[3] == 1) out.insert(v.index());
  }
  return {out.begin(), out.end()};
}

// Evaluates the named invariants on the masked rows into Symbol columns.
JetDataset invariant_dataset(const JetDataset& data, const InvariantSet& iset, const std::vector<std::string>& names) {
  const EvalTable t = data.table();
  JetDataset out;
  out.samples.resize(t.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    out.variables.push_back(JetVar::symbol(names[c]));
    out.samples.col(static_cast<Eigen::Index>(c)) = eval_rows(iset.invariant(names[c]).expr, t);
  }
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    if (data.mask[i]) out.rows.push_back(data.rows[i]);
  out.mask.assign(out.rows.size(), true);
  return out;
}

struct SparseSetup {
  std::vector<Expr> lhs, library;
  bool invariant = false;
  std::vector<std::string> symbols;
  std::optional<ConstraintBasis> basis;
};

SparseSetup sparse_setup(const DiscoveryConfig& cfg, const std::vector<int>& dependents) {
  SparseSetup s;
  if (is_invariant_mode(cfg)) {
    const auto lhs = invariant_lhs(cfg);
    std::vector<Expr> atoms;
    for (const auto& n : feature_pool(cfg)) {
      if (contains(lhs, n) || contains(cfg.invariants->lhs_candidates, n)) continue;
      atoms.push_back(Expr(JetVar::symbol(n)));
      s.symbols.push_back(n);
    }
    for (const auto& n : lhs) {
      s.lhs.push_back(Expr(JetVar::symbol(n)));
      s.symbols.push_back(n);
    }
    s.library = monomial_library(atoms, cfg.library_degree);
    s.invariant = true;
    return s;
  }
  s.lhs = raw_lhs(cfg, dependents);
  s.library = raw_library(cfg);
  if (is_constrained(cfg.backend)) {
    if (!cfg.invariants) throw std::invalid_argument(backend_name(cfg.backend) + " needs a symmetry");
    const InvariantSet& iset = *cfg.invariants;
    if (iset.lhs_candidates.empty()) throw std::invalid_argument("symmetry " + iset.name + " names no LHS invariants");
    std::vector<Expr> eta0, others;
    for (const auto& n : iset.lhs_candidates) eta0.push_back(iset.invariant(n).expr);
    for (const auto& n : feature_pool(cfg))
      if (!contains(iset.lhs_candidates, n)) others.push_back(iset.invariant(n).expr);
    const auto inv_library = expressible_products(others, cfg.library_degree, s.library);
    s.basis = derive_constraints(s.lhs, s.library, eta0, inv_library);
  }
  return s;
}

std::vector<DiscoveredEquation> solve_sparse(const RegressionData& rd, const SparseSetup& s, const DiscoveryConfig& cfg,
                                             std::chrono::steady_clock::time_point t0) {
  std::optional<RelaxedOptions> relaxed;
  if (is_relaxed(cfg.backend)) relaxed = RelaxedOptions{cfg.gamma_ridge < 0 ? 100.0 * cfg.stlsq.ridge : cfg.gamma_ridge};
  const StlsqResult res = stlsq(rd, cfg.stlsq, s.basis ? &*s.basis : nullptr, relaxed);
  const int q = static_cast<int>(s.lhs.size()), m = static_cast<int>(s.library.size());
  const int complexity = s.basis && !relaxed ? s.basis->rank() : q * m;
  std::vector<DiscoveredEquation> out;
  for (int i = 0; i < q; ++i) {
    DiscoveredEquation eq;
    eq.lhs = s.lhs[i];
    eq.rhs = combine(res.W.row(i), s.library);
    eq.in_invariants = s.invariant;
    eq.symbols = s.symbols;
    eq.backend = backend_name(cfg.backend);
    eq.complexity = complexity;
    set_error(eq, rd.B.col(i), rd.G * res.W.row(i).transpose());
    if (relaxed) {
      eq.rhs_symmetric = combine(res.W_sym.row(i), s.library);
      eq.rhs_breaking = combine(res.W_break.row(i), s.library);
    }
    if (s.invariant) {
      auto ex = expand_to_original(eq, *cfg.invariants);
      eq.expanded = ex.expr;
      eq.cleared = ex.cleared;
    } else {
      eq.expanded = eq.residual();
      eq.cleared = true;
    }
    out.push_back(std::move(eq));
  }
  const double rt = seconds_since(t0);
  for (auto& e : out) e.runtime_seconds = rt;
  return out;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

Backend parse_backend(const std::string& name) {
  for (const auto& [b, n] : kBackendNames)
    if (n == name) return b;
  throw std::invalid_argument("unknown backend '" + name + "'");
}

std::string backend_name(Backend b) {
  for (const auto& [bb, n] : kBackendNames)
    if (bb == b) return n;
  return "?";
}

bool is_weak(Backend b) { return b == Backend::Wsindy || b == Backend::WsindyConstrained || b == Backend::WsindyRelaxed; }
bool is_relaxed(Backend b) { return b == Backend::SindyRelaxed || b == Backend::WsindyRelaxed; }
bool is_constrained(Backend b) {
  return b == Backend::SindyConstrained || b == Backend::WsindyConstrained || is_relaxed(b);
}

std::vector<Expr> monomial_library(const std::vector<Expr>& atoms, int degree) {
  if (degree < 0) throw std::invalid_argument("library degree must be >= 0");
  std::vector<Expr> out{Expr(1.0)};
  const int n = static_cast<int>(atoms.size());
  for (int d = 1; d <= degree && n > 0; ++d) {
    std::vector<int> idx(d, 0);
    while (true) {
      std::vector<Expr> f;
      for (int i : idx) f.push_back(atoms[i]);
      out.push_back(Expr::mul(std::move(f)));
      int k = d - 1;
      while (k >= 0 && idx[k] == n - 1) --k;
      if (k < 0) break;
      ++idx[k];
      for (int j = k + 1; j < d; ++j) idx[j] = idx[k];
    }
  }
  return out;
}

LibraryPreset library_preset(const std::string& name) {
  if (name == "boussinesq-pysindy" || name == "boussinesq-pysindy-star") {
    std::vector<Expr> us = parse_all({"u_x", "u_xx", "u_xxx", "u_xxxx"});
    LibraryPreset p;
    p.lhs = {parse("u_tt")};
    if (name == "boussinesq-pysindy") {
      const Expr u = parse("u");
      for (const Expr& a : {Expr(1.0), u, u * u}) {
        p.library.push_back(a);
        for (const auto& b : us) p.library.push_back(a * b);
      }
    } else {
      us.insert(us.begin(), parse("u"));
      p.library = monomial_library(us, 2);
    }
    return p;
  }
  if (name == "rd-19") {
    return {parse_all({"u_t", "v_t"}),
            parse_all({"u", "v", "u^2", "u*v", "v^2", "u^3", "u^2*v", "u*v^2", "v^3", "u_x", "u_y", "u_xx", "u_xy", "u_yy",
                       "v_x", "v_y", "v_xx", "v_xy", "v_yy"})};
  }
  throw std::invalid_argument("unknown library preset '" + name + "'");
}

void DiscoveryConfig::validate() const {
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
    throw std::invalid_argument("subsample fraction must be in (0, 1]");
  if (border_trim < 0) throw std::invalid_argument("border_trim must be >= 0");
  if (library_degree < 0) throw std::invalid_argument("library_degree must be >= 0");
  if (fd_accuracy < 2 || fd_accuracy % 2) throw std::invalid_argument("fd_accuracy must be even and >= 2");
  if (jet_order < 0 || jet_order > 4) throw std::invalid_argument("jet_order must be in [0, 4]");
  if (stlsq.threshold < 0 || stlsq.ridge < 0 || stlsq.max_iters < 1)
    throw std::invalid_argument("threshold and ridge must be >= 0, max_iters >= 1");
  if (is_constrained(backend) && !invariants) throw std::invalid_argument(backend_name(backend) + " needs a symmetry");
  if (invariants) {
    for (const auto& n : lhs)
      if ((backend == Backend::Gp || backend == Backend::Sindy) && !invariants->has(n))
        throw std::invalid_argument("LHS '" + n + "' is not an invariant of " + invariants->name);
    for (const auto& n : features)
      if (!invariants->has(n)) throw std::invalid_argument("feature '" + n + "' is not an invariant of " + invariants->name);
  }
  if (lhs_policy == LhsPolicy::Fixed && backend == Backend::Gp && lhs.empty() &&
      (!invariants || invariants->lhs_candidates.empty()))
    throw std::invalid_argument("fixed LHS policy needs an LHS");
  if (backend == Backend::Gp) gp.validate();
}

DiscoveryConfig DiscoveryConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "backend", "symmetry", "lhs_policy", "lhs", "library", "features", "exclude", "library_degree", "jet_order",
      "subsample", "max_samples", "border_trim", "time_max", "seed", "derivatives", "fd_accuracy", "threshold", "ridge", "max_iters",
      "unbias", "gamma_ridge", "weak", "gp"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw std::invalid_argument("unknown discovery config key '" + k + "'");
  DiscoveryConfig c;
  if (j.contains("backend")) c.backend = parse_backend(j["backend"].get<std::string>());
  if (j.contains("symmetry")) {
    const auto s = j["symmetry"].get<std::string>();
    if (s != "raw") c.invariants = load_symmetry(s);
  }
  if (j.contains("lhs_policy")) {
    const auto p = j["lhs_policy"].get<std::string>();
    if (p == "enumerate-all") c.lhs_policy = LhsPolicy::EnumerateAll;
    else if (p == "fixed") c.lhs_policy = LhsPolicy::Fixed;
    else throw std::invalid_argument("lhs_policy must be enumerate-all or fixed");
  }
  if (j.contains("lhs")) c.lhs = j["lhs"].get<std::vector<std::string>>();
  if (j.contains("library")) {
    if (j["library"].is_string()) c.library_preset = j["library"].get<std::string>();
    else c.library = j["library"].get<std::vector<std::string>>();
  }
  if (j.contains("features")) c.features = j["features"].get<std::vector<std::string>>();
  if (j.contains("exclude")) c.exclude = j["exclude"].get<std::vector<std::string>>();
  c.library_degree = j.value("library_degree", c.library_degree);
  c.jet_order = j.value("jet_order", c.jet_order);
  c.subsample_fraction = j.value("subsample", c.subsample_fraction);
  c.max_samples = j.value("max_samples", c.max_samples);
  c.border_trim = j.value("border_trim", c.border_trim);
  if (j.contains("time_max") && !j["time_max"].is_null()) c.time_max = j["time_max"].get<double>();
  c.seed = j.value("seed", c.seed);
  if (j.contains("derivatives")) {
    const auto d = j["derivatives"].get<std::string>();
    if (d == "spectral") c.derivative_method = DerivativeMethod::Spectral;
    else if (d == "fd") c.derivative_method = DerivativeMethod::FiniteDifference;
    else throw std::invalid_argument("derivatives must be spectral or fd");
  }
  c.fd_accuracy = j.value("fd_accuracy", c.fd_accuracy);
  c.stlsq.threshold = j.value("threshold", c.stlsq.threshold);
  c.stlsq.ridge = j.value("ridge", c.stlsq.ridge);
  c.stlsq.max_iters = j.value("max_iters", c.stlsq.max_iters);
  c.stlsq.unbias = j.value("unbias", c.stlsq.unbias);
  c.gamma_ridge = j.value("gamma_ridge", c.gamma_ridge);
  if (j.contains("weak")) {
    const auto& w = j["weak"];
    c.weak.n_test_functions = w.value("n_test_functions", c.weak.n_test_functions);
    c.weak.half_width_fraction = w.value("half_width_fraction", c.weak.half_width_fraction);
    if (w.contains("half_widths")) c.weak.half_widths = w["half_widths"].get<std::vector<double>>();
    c.weak.poly_degree = w.value("poly_degree", c.weak.poly_degree);
    c.weak.seed = w.value("seed", c.weak.seed);
  }
  if (j.contains("gp")) c.gp = GpConfig::from_json(j["gp"]);
  c.validate();
  return c;
}

nlohmann::json DiscoveryConfig::to_json() const {
  nlohmann::json j;
  j["backend"] = backend_name(backend);
  j["symmetry"] = invariants ? invariants->name : "raw";
  j["lhs_policy"] = lhs_policy == LhsPolicy::EnumerateAll ? "enumerate-all" : "fixed";
  j["lhs"] = lhs;
  if (!library_preset.empty()) j["library"] = library_preset;
  else j["library"] = library;
  j["features"] = features;
  j["exclude"] = exclude;
  j["library_degree"] = library_degree;
  j["jet_order"] = jet_order;
  j["subsample"] = subsample_fraction;
  j["max_samples"] = max_samples;
  j["border_trim"] = border_trim;
  j["time_max"] = std::isfinite(time_max) ? nlohmann::json(time_max) : nlohmann::json(nullptr);
  j["seed"] = seed;
  j["derivatives"] = derivative_method == DerivativeMethod::Spectral ? "spectral" : "fd";
  j["fd_accuracy"] = fd_accuracy;
  j["threshold"] = stlsq.threshold;
  j["ridge"] = stlsq.ridge;
  j["max_iters"] = stlsq.max_iters;
  j["unbias"] = stlsq.unbias;
  j["gamma_ridge"] = gamma_ridge;
  j["weak"] = {{"n_test_functions", weak.n_test_functions},
               {"half_width_fraction", weak.half_width_fraction},
               {"half_widths", weak.half_widths},
               {"poly_degree", weak.poly_degree},
               {"seed", weak.seed}};
  j["gp"] = gp.to_json();
  return j;
}

ExpansionResult expand_to_original(const DiscoveredEquation& eq, const InvariantSet& iset) {
  const Expr sub = substitute(eq.residual(), iset.definitions());
  std::vector<Term> terms;
  try {
    terms = expand_to_monomials(sub);
  } catch (const ExpansionError&) {
    return {sub, false};
  }
  std::map<Expr, Rational> lowest;
  for (const auto& t : terms)
    for (const auto& [atom, e] : factors(t.monomial))
      if (e < Rational(0)) {
        auto it = lowest.find(atom);
        if (it == lowest.end() || e < it->second) lowest[atom] = e;
      }
  std::vector<Expr> mult;
  for (const auto& [atom, e] : lowest) mult.push_back(Expr::pow(atom, -e));
  std::vector<Term> cleared = terms;
  if (!mult.empty()) {
    const Expr m = Expr::mul(mult);
    try {
      cleared = expand_to_monomials(Expr::mul({m, resum(terms)}));
    } catch (const ExpansionError&) {
      return {sub, false};
    }
  }
  bool ok = true;
  for (const auto& t : cleared)
    for (const auto& [atom, e] : factors(t.monomial))
      if (!e.is_integer() || e < Rational(0)) ok = false;
  if (!ok) return {sub, false};
  return {resum(cleared), true};
}

std::vector<JetVar> required_variables(const FieldData& fd, const DiscoveryConfig& cfg) {
  std::set<JetVar> vars;
  auto add = [&](const Expr& e) {
    for (const auto& v : e.free_vars())
      if (v.kind() != JetVar::Kind::Symbol) vars.insert(v);
  };
  if (cfg.backend == Backend::Gp && !cfg.invariants) {
    if (!cfg.features.empty()) {
      for (const auto& f : cfg.features) add(parse(f));
    } else {
      for (const auto& v : jet_variables(fd, cfg.jet_order))
        if (!contains(cfg.exclude, v.name())) vars.insert(v);
    }
    for (const auto& l : cfg.lhs) add(parse(l));
  } else if (is_invariant_mode(cfg)) {
    const InvariantSet& iset = *cfg.invariants;
    std::vector<std::string> names = feature_pool(cfg);
    if (cfg.backend == Backend::Sindy || cfg.lhs_policy == LhsPolicy::Fixed)
      for (const auto& n : invariant_lhs(cfg)) names.push_back(n);
    for (const auto& n : names) add(iset.invariant(n).expr);
    for (const auto& g : iset.guards) add(g.expr);
  } else {
    for (const auto& e : raw_lhs(cfg, field_dependents(fd))) add(e);
    for (const auto& e : raw_library(cfg)) add(e);
  }
  return {vars.begin(), vars.end()};
}

JetDataset prepare_dataset(const FieldData& fd, const DiscoveryConfig& cfg) {
  fd.validate();
  cfg.validate();
  const auto vars = required_variables(fd, cfg);
  const Grid& g = fd.grid;
  const int t_axis = g.axis_index("t");
  std::vector<std::size_t> candidates;
  candidates.reserve(g.size());
  const auto shape = g.shape();
  std::vector<int> idx(shape.size(), 0);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    bool keep = true;
    for (std::size_t a = 0; a < shape.size() && keep; ++a) {
      const auto& ax = g.axes[a];
      if (!ax.periodic && (idx[a] < cfg.border_trim || idx[a] >= ax.n - cfg.border_trim)) keep = false;
    }
    if (keep && t_axis >= 0 && g.axes[t_axis].coord(idx[t_axis]) > cfg.time_max) keep = false;
    if (keep) candidates.push_back(flat);
    for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  auto count = static_cast<std::size_t>(std::llround(cfg.subsample_fraction * static_cast<double>(candidates.size())));
  if (cfg.max_samples > 0) count = std::min(count, cfg.max_samples);
  std::vector<std::size_t> rows;
  rows.reserve(count);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(rows), count, rng);
  JetDataset d = estimate_derivatives(fd, vars, DerivativeOptions{cfg.derivative_method, cfg.border_trim, cfg.fd_accuracy}, &rows);
  if (is_invariant_mode(cfg)) apply_guards(d, cfg.invariants->guards);
  return d;
}

DiscoveredEquation discover_general(const JetDataset& data, const DiscoveryConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (cfg.backend != Backend::Gp) throw std::invalid_argument("discover_general needs the gp backend");
  std::vector<std::string> names;
  std::vector<Expr> defs;
  if (cfg.invariants) {
    names = feature_pool(cfg);
    if (cfg.lhs_policy == LhsPolicy::Fixed)
      for (const auto& n : invariant_lhs(cfg))
        if (!contains(names, n)) names.push_back(n);
    for (const auto& n : names) defs.push_back(cfg.invariants->invariant(n).expr);
  } else {
    std::vector<JetVar> vars;
    if (!cfg.features.empty()) {
      for (const auto& f : cfg.features) vars.push_back(parse(f).var());
    } else {
      for (const auto& v : data.variables)
        if (!contains(cfg.exclude, v.name())) vars.push_back(v);
    }
    for (const auto& l : cfg.lhs) {
      const JetVar v = parse(l).var();
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
    for (const auto& v : vars) {
      names.push_back(v.name());
      defs.push_back(Expr(v));
    }
  }
  if (names.size() < 2) throw std::invalid_argument("discover_general: no features remain once the LHS is removed");

  std::vector<std::size_t> candidates;
  if (cfg.lhs_policy == LhsPolicy::EnumerateAll) {
    for (std::size_t k = 0; k < names.size(); ++k) candidates.push_back(k);
  } else {
    const auto lhs = cfg.invariants ? invariant_lhs(cfg) : cfg.lhs;
    if (lhs.empty()) throw std::invalid_argument("fixed LHS policy needs an LHS");
    for (const auto& l : lhs) {
      const std::string n = cfg.invariants ? l : parse(l).var().name();
      candidates.push_back(static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin()));
    }
  }

  // feature matrix on finite rows
  const EvalTable t = data.table();
  Eigen::MatrixXd Z(t.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) Z.col(static_cast<Eigen::Index>(c)) = eval_rows(defs[c], t);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < Z.rows(); ++r)
    if (Z.row(r).allFinite()) keep.push_back(r);
  Z = Eigen::MatrixXd(Z(keep, Eigen::all));

  struct Fit {
    std::size_t k;
    Expr rhs;
    double score;
    int complexity;
  };
  std::optional<Fit> best;
  for (std::size_t k : candidates) {
    std::vector<std::string> xn;
    std::vector<Eigen::Index> cols;
    for (std::size_t c = 0; c < names.size(); ++c)
      if (c != k) {
        xn.push_back(names[c]);
        cols.push_back(static_cast<Eigen::Index>(c));
      }
    const Eigen::MatrixXd X = Z(Eigen::all, cols);
    const Eigen::VectorXd y = Z.col(static_cast<Eigen::Index>(k));
    GpConfig gc = cfg.gp;
    gc.seed = derive_seed(derive_seed(cfg.gp.seed, cfg.seed), k);
    double score = std::numeric_limits<double>::quiet_NaN();
    Candidate cand;
    if (Z.rows() > 0) {
      cand = select_best(gp_fit(X, y, xn, gc));
      EvalTable xt;
      for (const auto& n : xn) xt.variables.push_back(JetVar::symbol(n));
      xt.values = X;
      const Eigen::VectorXd f = eval_rows(cand.tree, xt);
      const double denom = y.lpNorm<1>();
      if (denom > 0) score = (y - f).lpNorm<1>() / denom;
    }
    if (!std::isfinite(score)) continue;
    const bool better = !best || score < best->score - 1e-12 ||
                        (std::abs(score - best->score) <= 1e-12 && cand.complexity < best->complexity);
    if (better) best = Fit{k, cand.tree, score, cand.complexity};
  }
  if (!best)
    throw std::runtime_error("discover_general: every LHS fit is degenerate on the dataset (" + std::to_string(Z.rows()) +
                             " finite rows of " + std::to_string(t.rows()) + ")");

  DiscoveredEquation eq;
  eq.backend = backend_name(cfg.backend);
  eq.rel_l1_error = best->score;
  eq.error_defined = true;
  if (cfg.invariants) {
    eq.lhs = Expr(JetVar::symbol(names[best->k]));
    eq.rhs = best->rhs;
    eq.in_invariants = true;
    eq.symbols = names;
    auto ex = expand_to_original(eq, *cfg.invariants);
    eq.expanded = ex.expr;
    eq.cleared = ex.cleared;
  } else {
    std::map<JetVar, Expr> back;
    for (std::size_t c = 0; c < names.size(); ++c) back[JetVar::symbol(names[c])] = defs[c];
    eq.lhs = defs[best->k];
    eq.rhs = substitute(best->rhs, back);
    eq.expanded = eq.residual();
    eq.cleared = true;
  }
  eq.complexity = variable_count(eq.lhs, eq.rhs);
  eq.runtime_seconds = seconds_since(t0);
  return eq;
}

std::vector<DiscoveredEquation> discover_sparse(const JetDataset& data, const DiscoveryConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (cfg.backend == Backend::Gp || is_weak(cfg.backend))
    throw std::invalid_argument("discover_sparse handles strong-form sparse backends, not " + backend_name(cfg.backend));
  const SparseSetup s = sparse_setup(cfg, data_dependents(data));
  RegressionData rd;
  if (s.invariant) {
    std::vector<std::string> names;
    for (const auto& n : s.symbols) names.push_back(n);
    rd = build_regression(s.lhs, s.library, invariant_dataset(data, *cfg.invariants, names));
  } else {
    rd = build_regression(s.lhs, s.library, data);
  }
  return solve_sparse(rd, s, cfg, t0);
}

std::vector<DiscoveredEquation> discover_weak(const FieldData& fd, const DiscoveryConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (!is_weak(cfg.backend)) throw std::invalid_argument("discover_weak needs a wsindy backend");
  FieldData f = fd;
  if (std::isfinite(cfg.time_max) && !fd.grid.axes.empty() && fd.grid.axes[0].name == "t") {
    const auto& ax = fd.grid.axes[0];
    int end = 0;
    while (end < ax.n && ax.coord(end) <= cfg.time_max) ++end;
    f = fd.slice_first_axis(0, end);
  }
  SparseSetup s = sparse_setup(cfg, field_dependents(f));
  WeakFormConfig w = cfg.weak;
  w.seed = derive_seed(cfg.weak.seed, cfg.seed);
  return solve_sparse(build_weak_problem(s.lhs, s.library, f, w), s, cfg, t0);
}

std::vector<DiscoveredEquation> discover(const FieldData& fd, const DiscoveryConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<DiscoveredEquation> out;
  if (is_weak(cfg.backend)) out = discover_weak(fd, cfg);
  else if (cfg.backend == Backend::Gp) out = {discover_general(prepare_dataset(fd, cfg), cfg)};
  else out = discover_sparse(prepare_dataset(fd, cfg), cfg);
  const double rt = seconds_since(t0);
  for (auto& e : out) e.runtime_seconds = rt;
  return out;
}

void write_discovery(const std::vector<DiscoveredEquation>& eqs, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream csv(fs::path(dir) / "results.csv");
  csv << "index,backend,lhs,rhs,in_invariants,symbols,expanded,cleared,rel_l1_error,complexity,runtime_seconds,"
         "rhs_symmetric,rhs_breaking\n";
  std::ofstream txt(fs::path(dir) / "equations.txt");
  csv.precision(17);
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    const auto& e = eqs[i];
    csv << i << ',' << e.backend << ',' << csv_quote(print(e.lhs)) << ',' << csv_quote(print(e.rhs)) << ','
        << (e.in_invariants ? 1 : 0) << ',' << csv_quote(join(e.symbols, ' ')) << ','
        << csv_quote(e.expanded ? print(*e.expanded) : "") << ',' << (e.cleared ? 1 : 0) << ',';
    if (e.error_defined) csv << e.rel_l1_error;
    else csv << "nan";
    csv << ',' << e.complexity << ',' << e.runtime_seconds << ','
        << csv_quote(e.rhs_symmetric ? print(*e.rhs_symmetric) : "") << ','
        << csv_quote(e.rhs_breaking ? print(*e.rhs_breaking) : "") << '\n';
    txt << print(e.lhs) << " = " << print(e.rhs) << '\n';
    if (e.in_invariants && e.expanded) txt << print(*e.expanded) << " = 0\n";
  }
}

std::vector<DiscoveredEquation> read_discovery(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "results.csv");
  if (!in) throw std::runtime_error("cannot open " + (fs::path(dir) / "results.csv").string());
  std::string line;
  std::getline(in, line);
  const auto header = csv_split(line);
  auto col = [&](const std::string& n) {
    auto it = std::find(header.begin(), header.end(), n);
    if (it == header.end()) throw std::runtime_error("results.csv lacks column " + n);
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<DiscoveredEquation> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != header.size()) throw std::runtime_error("malformed results.csv row: " + line);
    DiscoveredEquation e;
    e.backend = f[col("backend")];
    e.in_invariants = f[col("in_invariants")] == "1";
    std::set<std::string> syms;
    std::istringstream ss(f[col("symbols")]);
    for (std::string s; ss >> s;) {
      e.symbols.push_back(s);
      syms.insert(s);
    }
    e.lhs = parse(f[col("lhs")], syms);
    e.rhs = parse(f[col("rhs")], syms);
    if (!f[col("expanded")].empty()) e.expanded = parse(f[col("expanded")]);
    e.cleared = f[col("cleared")] == "1";
    e.rel_l1_error = f[col("rel_l1_error")] == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                                     : std::stod(f[col("rel_l1_error")]);
    e.error_defined = std::isfinite(e.rel_l1_error);
    e.complexity = std::stoi(f[col("complexity")]);
    e.runtime_seconds = std::stod(f[col("runtime_seconds")]);
    if (!f[col("rhs_symmetric")].empty()) e.rhs_symmetric = parse(f[col("rhs_symmetric")], syms);
    if (!f[col("rhs_breaking")].empty()) e.rhs_breaking = parse(f[col("rhs_breaking")], syms);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace symdisc
