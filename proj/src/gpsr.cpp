#include "symdisc/gpsr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace symdisc {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Kind = GpNode::Kind;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* op_name(GpOp op) {
  switch (op) {
    case GpOp::Add: return "+";
    case GpOp::Mul: return "*";
    case GpOp::Pow: return "pow";
    case GpOp::Exp: return "exp";
  }
  return "?";
}

GpOp op_from_name(const std::string& s) {
  if (s == "+" || s == "add") return GpOp::Add;
  if (s == "*" || s == "mul") return GpOp::Mul;
  if (s == "pow" || s == "pow-int") return GpOp::Pow;
  if (s == "exp") return GpOp::Exp;
  throw std::invalid_argument("unknown GP operator '" + s + "'");
}

bool has_op(const GpConfig& cfg, GpOp op) {
  return std::find(cfg.operators.begin(), cfg.operators.end(), op) != cfg.operators.end();
}

Kind kind_of(GpOp op) {
  switch (op) {
    case GpOp::Add: return Kind::Add;
    case GpOp::Mul: return Kind::Mul;
    case GpOp::Pow: return Kind::Pow;
    case GpOp::Exp: return Kind::Exp;
  }
  return Kind::Add;
}

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
int uniform_int(std::mt19937_64& rng, int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

GpNode random_leaf(std::mt19937_64& rng, const GpConfig& cfg, int n_vars) {
  GpNode n;
  if (n_vars > 0 && uniform(rng, 0, 1) < 0.7) {
    n.kind = Kind::Var;
    n.var = uniform_int(rng, 0, n_vars - 1);
  } else {
    n.kind = Kind::Const;
    n.value = uniform(rng, cfg.const_min, cfg.const_max);
  }
  return n;
}

GpNode random_op(std::mt19937_64& rng, const GpConfig& cfg, bool unary) {
  std::vector<GpOp> ops;
  for (auto op : cfg.operators)
    if ((op == GpOp::Pow || op == GpOp::Exp) == unary) ops.push_back(op);
  GpNode n;
  if (ops.empty()) return n;
  n.kind = kind_of(ops[uniform_int(rng, 0, static_cast<int>(ops.size()) - 1)]);
  if (n.kind == Kind::Pow) n.exponent = cfg.pow_exponents[uniform_int(rng, 0, static_cast<int>(cfg.pow_exponents.size()) - 1)];
  return n;
}

bool has_unary(const GpConfig& cfg) { return has_op(cfg, GpOp::Pow) || has_op(cfg, GpOp::Exp); }
bool has_binary(const GpConfig& cfg) { return has_op(cfg, GpOp::Add) || has_op(cfg, GpOp::Mul); }

void grow(GpTree& t, std::mt19937_64& rng, const GpConfig& cfg, int n_vars, int size) {
  const bool can_unary = has_unary(cfg) && size >= 2;
  const bool can_binary = has_binary(cfg) && size >= 3;
  if (size <= 1 || (!can_unary && !can_binary)) {
    t.push_back(random_leaf(rng, cfg, n_vars));
    return;
  }
  const bool unary = can_unary && (!can_binary || uniform(rng, 0, 1) < 0.2);
  t.push_back(random_op(rng, cfg, unary));
  if (unary) {
    grow(t, rng, cfg, n_vars, size - 1);
  } else {
    const int left = uniform_int(rng, 1, size - 2);
    grow(t, rng, cfg, n_vars, left);
    grow(t, rng, cfg, n_vars, size - 1 - left);
  }
}

GpTree splice(const GpTree& t, std::size_t begin, std::size_t end, const GpTree& sub) {
  GpTree out(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(begin));
  out.insert(out.end(), sub.begin(), sub.end());
  out.insert(out.end(), t.begin() + static_cast<std::ptrdiff_t>(end), t.end());
  return out;
}

struct ScaledFit {
  double loss = kInf;
  double a = 0.0, b = 1.0;
};

ScaledFit scaled_fit(const ArrayXd& f, const VectorXd& y, bool linear) {
  ScaledFit s;
  if (!f.allFinite()) return s;
  const ArrayXd ya = y.array();
  if (!linear) {
    s.loss = (ya - f).square().mean();
    return s;
  }
  const double mf = f.mean(), my = ya.mean();
  const double vf = (f - mf).square().mean();
  if (vf <= 1e-12 * (1.0 + mf * mf)) {
    s.b = 0.0;
    s.a = my;
  } else {
    s.b = ((f - mf) * (ya - my)).mean() / vf;
    s.a = my - s.b * mf;
  }
  s.loss = (ya - s.a - s.b * f).square().mean();
  if (!std::isfinite(s.loss)) s.loss = kInf;
  return s;
}

std::vector<std::size_t> const_positions(const GpTree& t) {
  std::vector<std::size_t> p;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].kind == Kind::Const) p.push_back(i);
  return p;
}

// Levenberg-damped Gauss-Newton with a forward-difference Jacobian.
template <class Residual>
std::pair<VectorXd, double> gauss_newton(const Residual& residual, VectorXd c, int max_iters = 30) {
  VectorXd r = residual(c);
  double cost = r.allFinite() ? r.squaredNorm() : kInf;
  if (!std::isfinite(cost)) return {c, cost};
  double mu = 1e-3;
  for (int it = 0; it < max_iters; ++it) {
    MatrixXd J(r.size(), c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      VectorXd cj = c;
      const double h = 1e-7 * std::max(1.0, std::abs(c[j]));
      cj[j] += h;
      J.col(j) = (residual(cj) - r) / h;
    }
    if (!J.allFinite()) break;
    const MatrixXd A = J.transpose() * J;
    const VectorXd g = J.transpose() * r;
    bool improved = false;
    while (mu < 1e10) {
      MatrixXd Ad = A;
      Ad.diagonal() += mu * (A.diagonal().array() + 1e-12).matrix();
      VectorXd c2 = c + Ad.ldlt().solve(-g);
      VectorXd r2 = residual(c2);
      const double cost2 = r2.allFinite() ? r2.squaredNorm() : kInf;
      if (cost2 < cost) {
        const double rel = (cost - cost2) / std::max(cost, 1e-300);
        c = c2;
        r = r2;
        cost = cost2;
        mu = std::max(mu / 3.0, 1e-12);
        improved = rel > 1e-12;
        break;
      }
      mu *= 10.0;
    }
    if (!improved) break;
  }
  return {c, cost};
}

GpTree with_constants(GpTree t, const std::vector<std::size_t>& pos, const VectorXd& c) {
  for (std::size_t k = 0; k < pos.size(); ++k) t[pos[k]].value = c[static_cast<Eigen::Index>(k)];
  return t;
}

}  // namespace

int GpNode::arity() const {
  switch (kind) {
    case Kind::Const:
    case Kind::Var: return 0;
    case Kind::Pow:
    case Kind::Exp: return 1;
    default: return 2;
  }
}

void GpConfig::validate() const {
  if (population_size < 2 || tournament_size < 2 || tournament_size > population_size)
    throw std::invalid_argument("GP config needs population_size >= tournament_size >= 2");
  if (n_populations < 1 || n_iterations < 0 || cycles_per_iteration < 0)
    throw std::invalid_argument("GP config has a non-positive population count or negative iteration count");
  if (max_tree_size < 1) throw std::invalid_argument("max_tree_size must be >= 1");
  if (operators.empty()) throw std::invalid_argument("GP operator set is empty");
  if (has_op(*this, GpOp::Pow) && pow_exponents.empty()) throw std::invalid_argument("pow operator without exponents");
  if (!(const_max > const_min)) throw std::invalid_argument("empty GP constant range");
  if (fraction_replaced < 0 || fraction_replaced > 1) throw std::invalid_argument("fraction_replaced must be in [0, 1]");
}

GpConfig GpConfig::from_json(const nlohmann::json& j) {
  GpConfig c;
  c.population_size = j.value("population_size", c.population_size);
  c.n_populations = j.value("n_populations", c.n_populations);
  c.n_iterations = j.value("n_iterations", c.n_iterations);
  c.cycles_per_iteration = j.value("cycles_per_iteration", c.cycles_per_iteration);
  c.tournament_size = j.value("tournament_size", c.tournament_size);
  if (j.contains("operators")) {
    c.operators.clear();
    for (const auto& o : j.at("operators")) c.operators.push_back(op_from_name(o.get<std::string>()));
  }
  c.pow_exponents = j.value("pow_exponents", c.pow_exponents);
  c.max_tree_size = j.value("max_tree_size", c.max_tree_size);
  c.fraction_replaced = j.value("fraction_replaced", c.fraction_replaced);
  c.const_min = j.value("const_min", c.const_min);
  c.const_max = j.value("const_max", c.const_max);
  c.crossover_probability = j.value("crossover_probability", c.crossover_probability);
  c.parsimony = j.value("parsimony", c.parsimony);
  c.max_rows = j.value("max_rows", c.max_rows);
  c.nested_exp = j.value("nested_exp", c.nested_exp);
  c.linear_scaling = j.value("linear_scaling", c.linear_scaling);
  c.const_restarts = j.value("const_restarts", c.const_restarts);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json GpConfig::to_json() const {
  nlohmann::json ops = nlohmann::json::array();
  for (auto op : operators) ops.push_back(op_name(op));
  return {{"population_size", population_size}, {"n_populations", n_populations}, {"n_iterations", n_iterations},
          {"cycles_per_iteration", cycles_per_iteration}, {"tournament_size", tournament_size}, {"operators", ops},
          {"pow_exponents", pow_exponents}, {"max_tree_size", max_tree_size}, {"fraction_replaced", fraction_replaced},
          {"const_min", const_min}, {"const_max", const_max}, {"crossover_probability", crossover_probability},
          {"parsimony", parsimony}, {"max_rows", max_rows}, {"nested_exp", nested_exp},
          {"linear_scaling", linear_scaling}, {"const_restarts", const_restarts}, {"seed", seed}};
}

std::size_t gp_subtree_end(const GpTree& t, std::size_t i) {
  int need = 1;
  while (need > 0) {
    if (i >= t.size()) throw std::invalid_argument("malformed GP tree");
    need += t[i].arity() - 1;
    ++i;
  }
  return i;
}

bool gp_valid(const GpTree& t, const GpConfig& cfg) {
  if (t.empty() || static_cast<int>(t.size()) > cfg.max_tree_size) return false;
  try {
    if (gp_subtree_end(t, 0) != t.size()) return false;
  } catch (const std::invalid_argument&) {
    return false;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    switch (t[i].kind) {
      case Kind::Add: if (!has_op(cfg, GpOp::Add)) return false; break;
      case Kind::Mul: if (!has_op(cfg, GpOp::Mul)) return false; break;
      case Kind::Pow: if (!has_op(cfg, GpOp::Pow)) return false; break;
      case Kind::Exp:
        if (!has_op(cfg, GpOp::Exp)) return false;
        if (!cfg.nested_exp) {
          const std::size_t end = gp_subtree_end(t, i);
          for (std::size_t j = i + 1; j < end; ++j)
            if (t[j].kind == Kind::Exp) return false;
        }
        break;
      default: break;
    }
  }
  return true;
}

GpTree gp_random_tree(std::mt19937_64& rng, const GpConfig& cfg, int n_vars, int target_size) {
  target_size = std::clamp(target_size, 1, cfg.max_tree_size);
  for (int attempt = 0; attempt < 10; ++attempt) {
    GpTree t;
    grow(t, rng, cfg, n_vars, target_size);
    if (gp_valid(t, cfg)) return t;
  }
  return GpTree{random_leaf(rng, cfg, n_vars)};
}

GpTree gp_mutate(const GpTree& t, std::mt19937_64& rng, const GpConfig& cfg, int n_vars) {
  static const std::discrete_distribution<int>::param_type weights{3, 2, 2, 2, 2, 1};
  std::discrete_distribution<int> pick_kind(weights);
  for (int attempt = 0; attempt < 20; ++attempt) {
    GpTree out = t;
    const int n = static_cast<int>(t.size());
    const std::size_t i = static_cast<std::size_t>(uniform_int(rng, 0, n - 1));
    switch (pick_kind(rng)) {
      case 0: {  // perturb a constant
        auto pos = const_positions(t);
        if (pos.empty()) continue;
        auto& c = out[pos[uniform_int(rng, 0, static_cast<int>(pos.size()) - 1)]].value;
        c = uniform(rng, 0, 1) < 0.5 ? c * (1.0 + 0.5 * std::normal_distribution<double>()(rng))
                                     : c + std::normal_distribution<double>()(rng);
        break;
      }
      case 1: {  // swap an operator for one of equal arity
        if (t[i].arity() == 0) continue;
        GpNode op = random_op(rng, cfg, t[i].arity() == 1);
        if (op.arity() != t[i].arity()) continue;
        out[i] = op;
        break;
      }
      case 2: {  // replace a leaf
        if (t[i].arity() != 0) continue;
        out[i] = random_leaf(rng, cfg, n_vars);
        break;
      }
      case 3: {  // wrap a subtree in a new operator
        const std::size_t end = gp_subtree_end(t, i);
        GpTree sub(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(end));
        const bool unary = has_unary(cfg) && (!has_binary(cfg) || uniform(rng, 0, 1) < 0.2);
        GpTree wrapped{random_op(rng, cfg, unary)};
        if (unary) {
          wrapped.insert(wrapped.end(), sub.begin(), sub.end());
        } else {
          GpNode leaf = random_leaf(rng, cfg, n_vars);
          if (uniform(rng, 0, 1) < 0.5) {
            wrapped.insert(wrapped.end(), sub.begin(), sub.end());
            wrapped.push_back(leaf);
          } else {
            wrapped.push_back(leaf);
            wrapped.insert(wrapped.end(), sub.begin(), sub.end());
          }
        }
        out = splice(t, i, end, wrapped);
        break;
      }
      case 4: {  // replace an operator by one of its children
        if (t[i].arity() == 0) continue;
        const std::size_t end = gp_subtree_end(t, i);
        std::size_t child = i + 1;
        if (t[i].arity() == 2 && uniform(rng, 0, 1) < 0.5) child = gp_subtree_end(t, child);
        const std::size_t child_end = gp_subtree_end(t, child);
        out = splice(t, i, end, GpTree(t.begin() + static_cast<std::ptrdiff_t>(child), t.begin() + static_cast<std::ptrdiff_t>(child_end)));
        break;
      }
      default: {  // regrow a subtree
        const std::size_t end = gp_subtree_end(t, i);
        out = splice(t, i, end, gp_random_tree(rng, cfg, n_vars, uniform_int(rng, 1, 5)));
        break;
      }
    }
    if (gp_valid(out, cfg)) return out;
  }
  return t;
}

std::pair<GpTree, GpTree> gp_crossover(const GpTree& a, const GpTree& b, std::mt19937_64& rng, const GpConfig& cfg) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    const std::size_t i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(a.size()) - 1));
    const std::size_t j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(b.size()) - 1));
    const std::size_t ie = gp_subtree_end(a, i), je = gp_subtree_end(b, j);
    GpTree sa(a.begin() + static_cast<std::ptrdiff_t>(i), a.begin() + static_cast<std::ptrdiff_t>(ie));
    GpTree sb(b.begin() + static_cast<std::ptrdiff_t>(j), b.begin() + static_cast<std::ptrdiff_t>(je));
    GpTree ca = splice(a, i, ie, sb), cb = splice(b, j, je, sa);
    if (gp_valid(ca, cfg) && gp_valid(cb, cfg)) return {ca, cb};
  }
  return {a, b};
}

ArrayXd gp_evaluate(const GpTree& t, const MatrixXd& X) {
  std::vector<ArrayXd> st;
  const Eigen::Index n = X.rows();
  for (std::size_t k = t.size(); k-- > 0;) {
    const GpNode& nd = t[k];
    switch (nd.kind) {
      case Kind::Const: st.push_back(ArrayXd::Constant(n, nd.value)); break;
      case Kind::Var: st.push_back(X.col(nd.var).array()); break;
      case Kind::Exp: st.back() = st.back().exp(); break;
      case Kind::Pow: {
        ArrayXd& a = st.back();
        if (nd.exponent == 2) a = a.square();
        else if (nd.exponent == -1) a = a.inverse();
        else a = a.pow(static_cast<double>(nd.exponent));
        break;
      }
      default: {
        ArrayXd first = std::move(st.back());
        st.pop_back();
        if (nd.kind == Kind::Add) first += st.back();
        else first *= st.back();
        st.back() = std::move(first);
      }
    }
  }
  if (st.size() != 1) throw std::invalid_argument("malformed GP tree");
  return st.back();
}

namespace {

Expr to_expr_at(const GpTree& t, std::size_t& i, const std::vector<std::string>& names) {
  const GpNode& nd = t[i++];
  switch (nd.kind) {
    case Kind::Const: return Expr(nd.value);
    case Kind::Var: return Expr(JetVar::symbol(names.at(nd.var)));
    case Kind::Exp: return exp(to_expr_at(t, i, names));
    case Kind::Pow: return pow(to_expr_at(t, i, names), Rational(nd.exponent));
    default: {
      Expr a = to_expr_at(t, i, names);
      Expr b = to_expr_at(t, i, names);
      return nd.kind == Kind::Add ? a + b : a * b;
    }
  }
}

void from_expr_into(const Expr& e, const std::vector<std::string>& names, GpTree& out) {
  GpNode n;
  switch (e.kind()) {
    case Expr::Kind::Const:
      n.kind = Kind::Const;
      n.value = e.value();
      out.push_back(n);
      return;
    case Expr::Kind::Var: {
      const std::string nm = e.var().kind() == JetVar::Kind::Symbol ? e.var().symbol_name() : e.var().name();
      auto it = std::find(names.begin(), names.end(), nm);
      if (it == names.end()) throw std::invalid_argument("variable '" + nm + "' is not a feature");
      n.kind = Kind::Var;
      n.var = static_cast<int>(it - names.begin());
      out.push_back(n);
      return;
    }
    case Expr::Kind::Add:
    case Expr::Kind::Mul: {
      const auto& ch = e.children();
      n.kind = e.kind() == Expr::Kind::Add ? Kind::Add : Kind::Mul;
      for (std::size_t k = 0; k + 1 < ch.size(); ++k) out.push_back(n);
      for (const auto& c : ch) from_expr_into(c, names, out);
      return;
    }
    case Expr::Kind::Pow:
      if (!e.exponent().is_integer()) throw std::invalid_argument("non-integer power outside the GP grammar");
      n.kind = Kind::Pow;
      n.exponent = static_cast<int>(e.exponent().num);
      out.push_back(n);
      from_expr_into(e.base(), names, out);
      return;
    case Expr::Kind::Exp:
      n.kind = Kind::Exp;
      out.push_back(n);
      from_expr_into(e.base(), names, out);
      return;
  }
}

}  // namespace

Expr gp_to_expr(const GpTree& t, const std::vector<std::string>& names) {
  std::size_t i = 0;
  return to_expr_at(t, i, names);
}

GpTree gp_from_expr(const Expr& e, const std::vector<std::string>& names) {
  GpTree t;
  from_expr_into(e, names, t);
  return t;
}

Expr optimize_constants(const Expr& tree, const MatrixXd& X, const VectorXd& y, const std::vector<std::string>& names,
                        int n_restarts, std::uint64_t seed, double const_min, double const_max) {
  GpTree t;
  try {
    t = gp_from_expr(tree, names);
  } catch (const std::invalid_argument&) {
    return tree;
  }
  const auto pos = const_positions(t);
  if (pos.empty()) return tree;
  auto residual = [&](const VectorXd& c) -> VectorXd {
    return (gp_evaluate(with_constants(t, pos, c), X) - y.array()).matrix();
  };
  VectorXd c0(static_cast<Eigen::Index>(pos.size()));
  for (std::size_t k = 0; k < pos.size(); ++k) c0[static_cast<Eigen::Index>(k)] = t[pos[k]].value;
  const VectorXd r0 = residual(c0);
  const double cost0 = r0.allFinite() ? r0.squaredNorm() : kInf;

  std::mt19937_64 rng(seed);
  auto best = gauss_newton(residual, c0);
  for (int r = 0; r < n_restarts; ++r) {
    VectorXd c(c0.size());
    for (auto& v : c) v = uniform(rng, const_min, const_max);
    auto cand = gauss_newton(residual, c);
    if (cand.second < best.second) best = cand;
  }
  const double significant = 1e-14 * std::max(y.squaredNorm(), 1e-300);
  if (!(best.second < cost0 - significant)) return tree;
  return gp_to_expr(with_constants(t, pos, best.first), names);
}

namespace {

struct Individual {
  GpTree tree;
  double loss = kInf;
  double score = kInf;
  long birth = 0;
};

struct HallEntry {
  GpTree tree;
  double loss = kInf;
};

class Engine {
 public:
  Engine(const MatrixXd& X, const VectorXd& y, const GpConfig& cfg) : X_(X), y_(y), cfg_(cfg) {
    const double m = y.mean();
    vy_ = (y.array() - m).square().mean();
    if (!(vy_ > 0)) vy_ = 1.0;
  }

  ScaledFit fit(const GpTree& t) const { return scaled_fit(gp_evaluate(t, X_), y_, cfg_.linear_scaling); }

  void score(Individual& ind) {
    ind.loss = fit(ind.tree).loss;
    ind.score = std::isfinite(ind.loss) ? ind.loss / vy_ + cfg_.parsimony * static_cast<double>(ind.tree.size()) : kInf;
    if (std::isfinite(ind.loss)) {
      auto& h = hall_[static_cast<int>(ind.tree.size())];
      if (ind.loss < h.loss) h = HallEntry{ind.tree, ind.loss};
    }
  }

  // Constant refinement with the linear scaling profiled out.
  void refine(Individual& ind, std::mt19937_64& rng) {
    const auto pos = const_positions(ind.tree);
    if (pos.empty()) return;
    auto residual = [&](const VectorXd& c) -> VectorXd {
      ArrayXd f = gp_evaluate(with_constants(ind.tree, pos, c), X_);
      ScaledFit s = scaled_fit(f, y_, cfg_.linear_scaling);
      if (!std::isfinite(s.loss)) return VectorXd::Constant(y_.size(), kInf);
      return (y_.array() - s.a - s.b * f).matrix();
    };
    VectorXd c0(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t k = 0; k < pos.size(); ++k) c0[static_cast<Eigen::Index>(k)] = ind.tree[pos[k]].value;
    auto best = gauss_newton(residual, c0, 10);
    for (int r = 0; r < cfg_.const_restarts; ++r) {
      VectorXd c(c0.size());
      for (auto& v : c) v = uniform(rng, cfg_.const_min, cfg_.const_max);
      auto cand = gauss_newton(residual, c, 10);
      if (cand.second < best.second) best = cand;
    }
    Individual trial{with_constants(ind.tree, pos, best.first), kInf, kInf, ind.birth};
    score(trial);
    if (trial.score < ind.score) ind = trial;
  }

  double best_loss() const {
    double b = kInf;
    for (const auto& [size, h] : hall_) b = std::min(b, h.loss);
    return b;
  }

  const std::map<int, HallEntry>& hall() const { return hall_; }

 private:
  const MatrixXd& X_;
  const VectorXd& y_;
  const GpConfig& cfg_;
  double vy_ = 1.0;
  std::map<int, HallEntry> hall_;
};

std::size_t tournament(const std::vector<Individual>& pop, std::mt19937_64& rng, int k) {
  std::vector<std::size_t> idx(pop.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::size_t best = pop.size();
  for (int s = 0; s < k; ++s) {
    const std::size_t j = static_cast<std::size_t>(uniform_int(rng, s, static_cast<int>(idx.size()) - 1));
    std::swap(idx[s], idx[j]);
    const std::size_t cand = idx[s];
    if (best == pop.size() || pop[cand].score < pop[best].score) best = cand;
  }
  return best;
}

}  // namespace

std::vector<Candidate> gp_fit(const MatrixXd& X_full, const VectorXd& y_full, const std::vector<std::string>& names,
                              const GpConfig& cfg, std::vector<double>* history) {
  cfg.validate();
  if (X_full.rows() != y_full.size()) throw std::invalid_argument("gp_fit: feature and label row counts differ");
  if (static_cast<Eigen::Index>(names.size()) != X_full.cols()) throw std::invalid_argument("gp_fit: one name per feature column");
  if (X_full.rows() == 0) throw std::invalid_argument("gp_fit: no data");
  const int n_vars = static_cast<int>(names.size());

  std::mt19937_64 master(cfg.seed);
  MatrixXd X;
  VectorXd y;
  if (X_full.rows() > cfg.max_rows) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(X_full.rows()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    std::shuffle(idx.begin(), idx.end(), master);
    idx.resize(static_cast<std::size_t>(cfg.max_rows));
    std::sort(idx.begin(), idx.end());
    X = X_full(idx, Eigen::all);
    y = y_full(idx);
  } else {
    X = X_full;
    y = y_full;
  }

  Engine engine(X, y, cfg);
  std::vector<std::mt19937_64> rngs;
  std::vector<std::vector<Individual>> pops(static_cast<std::size_t>(cfg.n_populations));
  long clock = 0;
  for (int p = 0; p < cfg.n_populations; ++p) {
    rngs.emplace_back(master());
    for (int i = 0; i < cfg.population_size; ++i) {
      Individual ind{gp_random_tree(rngs[p], cfg, n_vars, uniform_int(rngs[p], 1, std::min(7, cfg.max_tree_size))), kInf, kInf, clock++};
      engine.score(ind);
      pops[p].push_back(std::move(ind));
    }
  }

  for (int it = 0; it < cfg.n_iterations; ++it) {
    for (int p = 0; p < cfg.n_populations; ++p) {
      auto& pop = pops[p];
      auto& rng = rngs[p];
      for (int c = 0; c < cfg.cycles_per_iteration; ++c) {
        Individual child;
        if (uniform(rng, 0, 1) < cfg.crossover_probability) {
          const auto a = tournament(pop, rng, cfg.tournament_size), b = tournament(pop, rng, cfg.tournament_size);
          child.tree = gp_crossover(pop[a].tree, pop[b].tree, rng, cfg).first;
        } else {
          child.tree = gp_mutate(pop[tournament(pop, rng, cfg.tournament_size)].tree, rng, cfg, n_vars);
        }
        child.birth = clock++;
        engine.score(child);
        auto oldest = std::min_element(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.birth < b.birth; });
        *oldest = std::move(child);
      }
      auto best = std::min_element(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.score < b.score; });
      engine.refine(*best, rng);
    }
    // migration from the hall of fame
    const auto& hall = engine.hall();
    if (!hall.empty()) {
      std::vector<const HallEntry*> entries;
      for (const auto& [size, h] : hall) entries.push_back(&h);
      const int n_rep = static_cast<int>(std::lround(cfg.fraction_replaced * cfg.population_size));
      for (int p = 0; p < cfg.n_populations; ++p)
        for (int r = 0; r < n_rep; ++r) {
          auto& slot = pops[p][static_cast<std::size_t>(uniform_int(rngs[p], 0, cfg.population_size - 1))];
          Individual ind{entries[static_cast<std::size_t>(uniform_int(rngs[p], 0, static_cast<int>(entries.size()) - 1))]->tree, kInf, kInf, clock++};
          engine.score(ind);
          slot = std::move(ind);
        }
    }
    if (history) history->push_back(engine.best_loss());
  }

  // re-score the hall of fame on the full data
  std::vector<Candidate> all;
  for (const auto& [size, h] : engine.hall()) {
    ArrayXd f = gp_evaluate(h.tree, X_full);
    ScaledFit s = scaled_fit(f, y_full, cfg.linear_scaling);
    if (!std::isfinite(s.loss)) continue;
    Expr body = gp_to_expr(h.tree, names);
    Expr e = s.b == 0.0 ? Expr(s.a) : (s.a == 0.0 ? Expr(s.b) * body : Expr(s.a) + Expr(s.b) * body);
    if (!cfg.linear_scaling) e = body;
    all.push_back(Candidate{e, s.loss, static_cast<int>(e.node_count())});
  }
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    return a.complexity != b.complexity ? a.complexity < b.complexity : a.fitness < b.fitness;
  });
  std::vector<Candidate> front;
  for (auto& c : all)
    if (front.empty() || c.fitness < front.back().fitness) front.push_back(std::move(c));
  return front;
}

Candidate select_best(const std::vector<Candidate>& front) {
  if (front.empty()) throw std::invalid_argument("select_best: empty front");
  std::vector<Candidate> sorted = front;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Candidate& a, const Candidate& b) { return a.complexity < b.complexity; });
  double min_loss = kInf, max_loss = 0.0;
  for (const auto& c : sorted) {
    min_loss = std::min(min_loss, c.fitness);
    max_loss = std::max(max_loss, c.fitness);
  }
  // losses below this floor are indistinguishable from an exact fit
  const double floor = std::max(1e-12 * max_loss, 1e-300);
  auto clamp = [&](double l) { return std::max(l, floor); };
  const double cutoff = 1.5 * clamp(min_loss);
  double prev_loss = clamp(max_loss), best_score = -kInf;
  int prev_c = 0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double l = clamp(sorted[i].fitness);
    const int dc = std::max(1, sorted[i].complexity - prev_c);
    const double s = (std::log(prev_loss) - std::log(l)) / dc;
    // a bigger tree has to buy more than a 2% loss reduction over the best simpler one
    const bool meaningful = i == 0 || l < prev_loss / 1.02;
    if (meaningful && l <= cutoff && s > best_score * (1 + 1e-9) + 1e-12) {
      best_score = s;
      best = i;
    }
    if (meaningful && l < prev_loss) {
      prev_loss = l;
      prev_c = sorted[i].complexity;
    }
  }
  return sorted[best];
}

}  // namespace symdisc
