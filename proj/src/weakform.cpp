#include <algorithm>
#include <cmath>
#include <random>

#include "symdisc/regress.hpp"

namespace symdisc {

std::vector<double> bump_derivative_poly(int p, int n) {
  if (p < 0 || n < 0) throw std::invalid_argument("bump_derivative_poly: negative degree");
  // (1 - s^2)^p = sum_k C(p,k) (-1)^k s^{2k}
  std::vector<double> c(2 * p + 1, 0.0);
  double binom = 1.0;
  for (int k = 0; k <= p; ++k) {
    c[2 * k] = (k % 2 ? -1.0 : 1.0) * binom;
    binom = binom * (p - k) / (k + 1);
  }
  for (int d = 0; d < n; ++d) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> next(c.size() - 1);
    for (std::size_t j = 1; j < c.size(); ++j) next[j - 1] = static_cast<double>(j) * c[j];
    c = std::move(next);
  }
  return c;
}

double TestFunction::factor_derivative(int axis, double s, int n) const {
  if (std::abs(s) > 1.0) return 0.0;
  const auto c = bump_derivative_poly(p, n);
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
  return v * std::pow(half_widths.at(axis), -n);
}

std::vector<TestFunction> make_test_functions(const WeakFormConfig& cfg, const Grid& grid) {
  grid.validate();
  if (cfg.n_test_functions < 0) throw std::invalid_argument("n_test_functions must be >= 0");
  if (cfg.poly_degree < 1) throw std::invalid_argument("poly_degree must be >= 1");
  const std::size_t na = grid.axes.size();
  if (!cfg.half_widths.empty() && cfg.half_widths.size() != na)
    throw std::invalid_argument("half_widths needs one entry per grid axis");
  std::vector<int> hp(na);
  std::vector<double> hw(na);
  for (std::size_t a = 0; a < na; ++a) {
    const auto& ax = grid.axes[a];
    const double h = cfg.half_widths.empty() ? cfg.half_width_fraction * ax.length() : cfg.half_widths[a];
    if (!(h > 0) || ax.spacing() <= 0) throw std::invalid_argument("test function half-width must be positive");
    hp[a] = std::max(1, static_cast<int>(std::lround(h / ax.spacing())));
    if (2 * hp[a] + 1 > ax.n) throw std::invalid_argument("test function subdomain out of bounds on axis " + ax.name);
    hw[a] = hp[a] * ax.spacing();
  }
  std::mt19937_64 rng(cfg.seed);
  std::vector<TestFunction> out;
  for (int k = 0; k < cfg.n_test_functions; ++k) {
    TestFunction tf;
    tf.p = cfg.poly_degree;
    tf.half_points = hp;
    tf.half_widths = hw;
    for (std::size_t a = 0; a < na; ++a) {
      std::uniform_int_distribution<int> pick(hp[a], grid.axes[a].n - 1 - hp[a]);
      tf.center.push_back(pick(rng));
    }
    out.push_back(std::move(tf));
  }
  return out;
}

namespace {

bool derivative_free(const Expr& e) {
  for (const auto& v : e.free_vars())
    if (v.kind() == JetVar::Kind::Dependent && v.order() > 0) return false;
  return true;
}

}  // namespace

WeakTerm factor_weak_term(const Expr& term) {
  if (derivative_free(term)) return WeakTerm{1.0, term, MultiIndex{}};
  std::vector<Term> terms;
  try {
    terms = expand_to_monomials(term);
  } catch (const ExpansionError&) {
  }
  if (terms.size() == 1) {
    const Expr& mono = terms[0].monomial;
    if (mono.kind() == Expr::Kind::Var && mono.var().kind() == JetVar::Kind::Dependent) {
      const JetVar& v = mono.var();
      return WeakTerm{terms[0].coefficient, Expr(JetVar::dependent(v.index())), v.multi_index()};
    }
  }
  throw std::invalid_argument("term '" + print(term) + "' is not a constant times a single derivative and not derivative-free");
}

RegressionData build_weak_problem(const std::vector<Expr>& lhs, const std::vector<Expr>& library, const FieldData& fd,
                                  const WeakFormConfig& cfg) {
  return build_weak_problem(lhs, library, fd, make_test_functions(cfg, fd.grid));
}

RegressionData build_weak_problem(const std::vector<Expr>& lhs, const std::vector<Expr>& library, const FieldData& fd,
                                  const std::vector<TestFunction>& tests) {
  fd.validate();
  if (tests.empty()) throw std::invalid_argument("weak form: empty system (no test functions)");
  const Grid& grid = fd.grid;
  const int na = static_cast<int>(grid.axes.size());

  std::vector<WeakTerm> terms;
  for (const auto& e : lhs) terms.push_back(factor_weak_term(e));
  for (const auto& e : library) terms.push_back(factor_weak_term(e));

  // axis for each jet independent index
  std::array<int, kMaxIndependent> axis_of;
  axis_of.fill(-1);
  for (int a = 0; a < na; ++a) axis_of[grid.jet_index(a)] = a;
  int max_n = 0;
  for (const auto& t : terms)
    for (int i = 0; i < kMaxIndependent; ++i) {
      if (t.J[i] && axis_of[i] < 0) throw std::invalid_argument("weak form: derivative along a missing axis");
      max_n = std::max(max_n, static_cast<int>(t.J[i]));
    }

  // distinct functions to evaluate, and the variables they need
  std::vector<Expr> funcs;
  std::vector<int> func_of(terms.size());
  std::vector<JetVar> vars;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    auto it = std::find(funcs.begin(), funcs.end(), terms[j].function);
    func_of[j] = static_cast<int>(it - funcs.begin());
    if (it == funcs.end()) funcs.push_back(terms[j].function);
    for (const auto& v : terms[j].function.free_vars()) {
      if (v.kind() == JetVar::Kind::Symbol) throw std::invalid_argument("weak form: cannot evaluate symbol " + v.name());
      if (v.kind() == JetVar::Kind::Independent && axis_of[v.index()] < 0)
        throw std::invalid_argument("weak form: grid has no axis " + v.name());
      if (v.kind() == JetVar::Kind::Dependent && !fd.fields.count(std::string(1, kDependentNames[v.index()])))
        throw std::invalid_argument("weak form: dataset has no field " + v.name());
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
  }

  const auto strides = grid.strides();
  const int q = static_cast<int>(lhs.size()), m = static_cast<int>(library.size());
  Eigen::MatrixXd G(static_cast<Eigen::Index>(tests.size()), m), B(static_cast<Eigen::Index>(tests.size()), q);

  for (std::size_t k = 0; k < tests.size(); ++k) {
    const TestFunction& tf = tests[k];
    // per axis: quadrature weight and phi derivatives at each box offset
    std::vector<int> len(na);
    std::vector<std::vector<double>> w(na);
    std::vector<std::vector<std::vector<double>>> dphi(na);
    std::size_t npts = 1;
    for (int a = 0; a < na; ++a) {
      const auto& ax = grid.axes[a];
      const int h = tf.half_points.at(a);
      if (tf.center.at(a) - h < 0 || tf.center[a] + h >= ax.n)
        throw std::invalid_argument("test function subdomain out of bounds on axis " + ax.name);
      len[a] = 2 * h + 1;
      npts *= static_cast<std::size_t>(len[a]);
      w[a].assign(len[a], ax.spacing());
      w[a].front() *= 0.5;
      w[a].back() *= 0.5;
      dphi[a].resize(max_n + 1);
      for (int n = 0; n <= max_n; ++n)
        for (int o = 0; o < len[a]; ++o) dphi[a][n].push_back(tf.factor_derivative(a, static_cast<double>(o - h) / h, n));
    }

    EvalTable table;
    table.variables = vars;
    table.values.resize(static_cast<Eigen::Index>(npts), static_cast<Eigen::Index>(vars.size()));
    std::vector<std::vector<int>> offs(npts, std::vector<int>(na));
    std::vector<int> o(na, 0);
    for (std::size_t p = 0; p < npts; ++p) {
      std::size_t flat = 0;
      for (int a = 0; a < na; ++a) flat += static_cast<std::size_t>(tf.center[a] - tf.half_points[a] + o[a]) * strides[a];
      offs[p] = o;
      for (std::size_t c = 0; c < vars.size(); ++c) {
        const JetVar& v = vars[c];
        double val;
        if (v.kind() == JetVar::Kind::Independent) {
          const int a = axis_of[v.index()];
          val = grid.axes[a].coord(tf.center[a] - tf.half_points[a] + o[a]);
        } else {
          val = fd.field(std::string(1, kDependentNames[v.index()]))[flat];
        }
        table.values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = val;
      }
      for (int a = na - 1; a >= 0; --a) {
        if (++o[a] < len[a]) break;
        o[a] = 0;
      }
    }
    std::vector<Eigen::VectorXd> fvals;
    for (const auto& f : funcs) {
      Eigen::VectorXd v = evaluate(f, table);
      if (v.size() == 1 && npts != 1) v = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(npts), v[0]);
      fvals.push_back(std::move(v));
    }

    double mass = 0.0;
    std::vector<double> acc(terms.size(), 0.0);
    for (std::size_t p = 0; p < npts; ++p) {
      double wp = 1.0, phi = 1.0;
      for (int a = 0; a < na; ++a) {
        wp *= w[a][offs[p][a]];
        phi *= dphi[a][0][offs[p][a]];
      }
      mass += wp * phi;
      for (std::size_t j = 0; j < terms.size(); ++j) {
        double d = 1.0;
        for (int a = 0; a < na; ++a) d *= dphi[a][terms[j].J[grid.jet_index(a)]][offs[p][a]];
        acc[j] += wp * d * fvals[func_of[j]][static_cast<Eigen::Index>(p)];
      }
    }
    for (std::size_t j = 0; j < terms.size(); ++j) {
      const double sign = multi_index_order(terms[j].J) % 2 ? -1.0 : 1.0;
      const double val = sign * terms[j].coefficient * acc[j] / mass;
      if (static_cast<int>(j) < q)
        B(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = val;
      else
        G(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j) - q) = val;
    }
  }

  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < G.rows(); ++r)
    if (G.row(r).allFinite() && B.row(r).allFinite()) keep.push_back(r);
  RegressionData out;
  out.dropped_rows = static_cast<std::size_t>(G.rows()) - keep.size();
  out.G = G(keep, Eigen::all);
  out.B = B(keep, Eigen::all);
  return out;
}

}  // namespace symdisc
