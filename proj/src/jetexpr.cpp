#include "symdisc/jetexpr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace symdisc {

int multi_index_order(const MultiIndex& J) {
  int n = 0;
  for (auto c : J) n += c;
  return n;
}

// ---------------------------------------------------------------- JetVar

JetVar JetVar::independent(int i) {
  if (i < 0 || i >= kMaxIndependent) throw std::out_of_range("independent index out of range");
  JetVar v;
  v.kind_ = Kind::Independent;
  v.index_ = i;
  return v;
}

JetVar JetVar::dependent(int alpha, MultiIndex J) {
  if (alpha < 0 || alpha >= kMaxDependent) throw std::out_of_range("dependent index out of range");
  JetVar v;
  v.kind_ = Kind::Dependent;
  v.index_ = alpha;
  v.J_ = J;
  return v;
}

JetVar JetVar::symbol(std::string name) {
  JetVar v;
  v.kind_ = Kind::Symbol;
  v.name_ = std::move(name);
  return v;
}

JetVar JetVar::differentiated(int i) const {
  if (kind_ != Kind::Dependent) throw std::invalid_argument("only dependent variables carry derivatives");
  JetVar r = *this;
  r.J_[i]++;
  return r;
}

std::string JetVar::name() const {
  switch (kind_) {
    case Kind::Independent:
      return std::string(1, kIndependentNames[index_]);
    case Kind::Symbol:
      return name_;
    case Kind::Dependent: {
      std::string s(1, kDependentNames[index_]);
      if (multi_index_order(J_) == 0) return s;
      s += '_';
      for (int i = 0; i < kMaxIndependent; ++i) s.append(J_[i], kIndependentNames[i]);
      return s;
    }
  }
  return {};
}

std::string to_string(const JetVar& v) { return v.name(); }

std::strong_ordering operator<=>(const JetVar& a, const JetVar& b) {
  if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
  if (a.kind_ == JetVar::Kind::Symbol) return a.name_ <=> b.name_;
  if (a.index_ != b.index_) return a.index_ <=> b.index_;
  int oa = a.order(), ob = b.order();
  if (oa != ob) return oa <=> ob;
  // higher x-count first so u_xx < u_xy < u_yy
  for (int i = 0; i < kMaxIndependent; ++i)
    if (a.J_[i] != b.J_[i]) return b.J_[i] <=> a.J_[i];
  return std::strong_ordering::equal;
}

// ---------------------------------------------------------------- Rational

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d == 0) throw std::domain_error("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  auto g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational Rational::from_double(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite exponent");
  // Stern-Brocot / continued fractions
  double a = x;
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(a);
    if (std::abs(fl) > 1e15) break;
    auto ai = static_cast<std::int64_t>(fl);
    std::int64_t h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) <= 1e-12 * std::max(1.0, std::abs(x)))
      return Rational(h1, k1);
    double frac = a - fl;
    if (frac < 1e-15) break;
    a = 1.0 / frac;
  }
  if (k1 != 0 && std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) <= 1e-12 * std::max(1.0, std::abs(x)))
    return Rational(h1, k1);
  throw std::invalid_argument("exponent is not a small rational: " + std::to_string(x));
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(Rational a, Rational b) { return Rational(a.num * b.den + b.num * a.den, a.den * b.den); }
Rational operator-(Rational a, Rational b) { return Rational(a.num * b.den - b.num * a.den, a.den * b.den); }
Rational operator*(Rational a, Rational b) { return Rational(a.num * b.num, a.den * b.den); }
std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num) * b.den <=> static_cast<__int128>(b.num) * a.den;
}

// ---------------------------------------------------------------- nodes

struct ExprNode {
  Expr::Kind kind = Expr::Kind::Const;
  double value = 0.0;
  JetVar var;
  Rational exponent;
  std::vector<Expr> children;
  std::size_t hash = 0;
  std::size_t count = 1;
  double degree = 0.0;
  int max_order = 0;
  std::vector<JetVar> vars;
};

namespace {

std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

std::size_t hash_var(const JetVar& v) {
  std::size_t h = std::hash<int>()(static_cast<int>(v.kind()));
  h = mix(h, std::hash<int>()(v.index()));
  for (auto c : v.multi_index()) h = mix(h, c);
  h = mix(h, std::hash<std::string>()(v.symbol_name()));
  return h;
}

double clean_zero(double c) { return c == 0.0 ? 0.0 : c; }

}  // namespace

struct ExprBuilder {
  static Expr make(ExprNode n) {
    n.hash = std::hash<int>()(static_cast<int>(n.kind));
    n.count = 1;
    n.max_order = 0;
    switch (n.kind) {
      case Expr::Kind::Const:
        n.hash = mix(n.hash, std::hash<double>()(n.value));
        n.degree = 0.0;
        break;
      case Expr::Kind::Var:
        n.hash = mix(n.hash, hash_var(n.var));
        n.vars = {n.var};
        n.degree = 1.0;
        n.max_order = n.var.order();
        break;
      default: {
        std::vector<JetVar> vars;
        for (const auto& c : n.children) {
          const auto& cn = *c.node_;
          n.hash = mix(n.hash, cn.hash);
          n.count += cn.count;
          n.max_order = std::max(n.max_order, cn.max_order);
          std::vector<JetVar> merged;
          merged.reserve(vars.size() + cn.vars.size());
          std::set_union(vars.begin(), vars.end(), cn.vars.begin(), cn.vars.end(), std::back_inserter(merged));
          vars.swap(merged);
        }
        n.vars = std::move(vars);
        if (n.kind == Expr::Kind::Pow) {
          n.hash = mix(n.hash, std::hash<std::int64_t>()(n.exponent.num));
          n.hash = mix(n.hash, std::hash<std::int64_t>()(n.exponent.den));
          n.degree = n.children[0].node_->degree * n.exponent.to_double();
        } else if (n.kind == Expr::Kind::Mul) {
          n.degree = 0.0;
          for (const auto& c : n.children) n.degree += c.node_->degree;
        } else if (n.kind == Expr::Kind::Add) {
          n.degree = 0.0;
          for (const auto& c : n.children) n.degree = std::max(n.degree, c.node_->degree);
        } else {
          n.degree = 1.0;
        }
      }
    }
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
  }
  static const ExprNode& node(const Expr& e) { return *e.node_; }
  static bool same(const Expr& a, const Expr& b) { return a.node_ == b.node_; }
};

namespace {

int kind_rank(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Const: return 0;
    case Expr::Kind::Var: return 1;
    case Expr::Kind::Pow: return 2;
    case Expr::Kind::Exp: return 3;
    case Expr::Kind::Mul: return 4;
    case Expr::Kind::Add: return 5;
  }
  return 6;
}

std::strong_ordering structural(const Expr& a, const Expr& b) {
  if (ExprBuilder::same(a, b)) return std::strong_ordering::equal;
  const auto& na = ExprBuilder::node(a);
  const auto& nb = ExprBuilder::node(b);
  if (na.kind != nb.kind) return kind_rank(na.kind) <=> kind_rank(nb.kind);
  switch (na.kind) {
    case Expr::Kind::Const:
      if (na.value < nb.value) return std::strong_ordering::less;
      if (na.value > nb.value) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    case Expr::Kind::Var:
      return na.var <=> nb.var;
    case Expr::Kind::Pow: {
      auto c = structural(na.children[0], nb.children[0]);
      if (c != 0) return c;
      return na.exponent <=> nb.exponent;
    }
    default: {
      if (na.kind == Expr::Kind::Add && na.degree != nb.degree)
        return na.degree < nb.degree ? std::strong_ordering::less : std::strong_ordering::greater;
      std::size_t n = std::min(na.children.size(), nb.children.size());
      for (std::size_t i = 0; i < n; ++i) {
        auto c = structural(na.children[i], nb.children[i]);
        if (c != 0) return c;
      }
      return na.children.size() <=> nb.children.size();
    }
  }
}

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return structural(a, b) < 0; }
};

std::pair<double, Expr> split_coefficient(const Expr& term) {
  if (term.kind() == Expr::Kind::Mul && term.children().front().is_const()) {
    const auto& ch = term.children();
    double c = ch.front().value();
    if (ch.size() == 2) return {c, ch[1]};
    ExprNode n;
    n.kind = Expr::Kind::Mul;
    n.children.assign(ch.begin() + 1, ch.end());
    return {c, ExprBuilder::make(std::move(n))};
  }
  return {1.0, term};
}

// Order of Add terms: by degree first, then structure.
bool term_less(const Expr& a, const Expr& b) {
  auto [ca, ra] = split_coefficient(a);
  auto [cb, rb] = split_coefficient(b);
  bool a_const = a.is_const(), b_const = b.is_const();
  if (a_const != b_const) return a_const;
  double da = ExprBuilder::node(ra).degree, db = ExprBuilder::node(rb).degree;
  if (da != db) return da < db;
  auto c = structural(ra, rb);
  if (c != 0) return c < 0;
  return ca < cb;
}

}  // namespace

// ---------------------------------------------------------------- Expr

Expr::Expr() : Expr(constant(0.0)) {}
Expr::Expr(double c) : Expr(constant(c)) {}
Expr::Expr(const JetVar& v) : Expr(var(v)) {}

Expr Expr::constant(double c) {
  ExprNode n;
  n.kind = Kind::Const;
  n.value = clean_zero(c);
  return ExprBuilder::make(std::move(n));
}

Expr Expr::var(const JetVar& v) {
  ExprNode n;
  n.kind = Kind::Var;
  n.var = v;
  return ExprBuilder::make(std::move(n));
}

Expr Expr::add(std::vector<Expr> terms) {
  double constant_sum = 0.0, constant_scale = 0.0;
  // rest -> (coefficient sum, largest |contribution|)
  std::map<Expr, std::pair<double, double>, ExprLess> collected;
  std::function<void(const Expr&)> visit = [&](const Expr& t) {
    if (t.kind() == Kind::Add) {
      for (const auto& c : t.children()) visit(c);
      return;
    }
    if (t.is_const()) {
      constant_sum += t.value();
      constant_scale = std::max(constant_scale, std::abs(t.value()));
      return;
    }
    auto [c, rest] = split_coefficient(t);
    auto& slot = collected[rest];
    slot.first += c;
    slot.second = std::max(slot.second, std::abs(c));
  };
  for (const auto& t : terms) visit(t);

  // Floating-point cancellation below this relative level is treated as exact.
  constexpr double kCancel = 1e-13;
  std::vector<Expr> out;
  if (constant_sum != 0.0 && std::abs(constant_sum) > kCancel * constant_scale) out.push_back(constant(constant_sum));
  for (const auto& [rest, cs] : collected) {
    if (cs.first == 0.0 || std::abs(cs.first) <= kCancel * cs.second) continue;
    out.push_back(cs.first == 1.0 ? rest : mul({constant(cs.first), rest}));
  }
  if (out.empty()) return constant(0.0);
  if (out.size() == 1) return out.front();
  std::sort(out.begin(), out.end(), term_less);
  ExprNode n;
  n.kind = Kind::Add;
  n.children = std::move(out);
  return ExprBuilder::make(std::move(n));
}

Expr Expr::mul(std::vector<Expr> factors) {
  double coef = 1.0;
  std::map<Expr, Rational, ExprLess> powers;
  std::function<void(const Expr&)> visit = [&](const Expr& f) {
    switch (f.kind()) {
      case Kind::Mul:
        for (const auto& c : f.children()) visit(c);
        return;
      case Kind::Const:
        coef *= f.value();
        return;
      case Kind::Pow: {
        auto it = powers.find(f.base());
        if (it == powers.end()) powers.emplace(f.base(), f.exponent());
        else it->second = it->second + f.exponent();
        return;
      }
      default: {
        auto it = powers.find(f);
        if (it == powers.end()) powers.emplace(f, Rational(1));
        else it->second = it->second + Rational(1);
      }
    }
  };
  for (const auto& f : factors) visit(f);
  if (coef == 0.0) return constant(0.0);

  std::vector<Expr> out;
  for (const auto& [b, e] : powers) {
    if (e.num == 0) continue;
    if (e == Rational(1)) {
      out.push_back(b);
    } else {
      Expr p = pow(b, e);
      if (p.is_const()) coef *= p.value();
      else if (p.kind() == Kind::Mul) {
        for (const auto& c : p.children()) {
          if (c.is_const()) coef *= c.value();
          else out.push_back(c);
        }
      } else {
        out.push_back(p);
      }
    }
  }
  if (out.empty()) return constant(coef);
  if (out.size() == 1 && coef == 1.0) return out.front();
  std::sort(out.begin(), out.end(), ExprLess{});
  ExprNode n;
  n.kind = Kind::Mul;
  if (coef != 1.0) n.children.push_back(constant(coef));
  for (auto& f : out) n.children.push_back(std::move(f));
  if (n.children.size() == 1) return n.children.front();
  return ExprBuilder::make(std::move(n));
}

Expr Expr::pow(const Expr& base, Rational e) {
  if (e.num == 0) return constant(1.0);
  if (e == Rational(1)) return base;
  switch (base.kind()) {
    case Kind::Const: {
      double v = std::pow(base.value(), e.to_double());
      if (std::isfinite(v)) return constant(v);
      break;
    }
    case Kind::Pow:
      if (e.is_integer()) return pow(base.base(), base.exponent() * e);
      break;
    case Kind::Mul:
      if (e.is_integer()) {
        std::vector<Expr> fs;
        for (const auto& c : base.children()) fs.push_back(pow(c, e));
        return mul(std::move(fs));
      }
      break;
    default:
      break;
  }
  ExprNode n;
  n.kind = Kind::Pow;
  n.exponent = e;
  n.children = {base};
  return ExprBuilder::make(std::move(n));
}

Expr Expr::exp(const Expr& arg) {
  if (arg.is_const()) {
    double v = std::exp(arg.value());
    if (std::isfinite(v)) return constant(v);
  }
  ExprNode n;
  n.kind = Kind::Exp;
  n.children = {arg};
  return ExprBuilder::make(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const JetVar& Expr::var() const { return node_->var; }
const std::vector<Expr>& Expr::children() const { return node_->children; }
const Expr& Expr::base() const { return node_->children.front(); }
Rational Expr::exponent() const { return node_->exponent; }
std::size_t Expr::node_count() const { return node_->count; }
std::size_t Expr::hash() const { return node_->hash; }
const std::vector<JetVar>& Expr::free_vars() const { return node_->vars; }
bool Expr::contains(const JetVar& v) const { return std::binary_search(node_->vars.begin(), node_->vars.end(), v); }
int Expr::max_order() const { return node_->max_order; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::add({a, Expr::mul({Expr::constant(-1.0), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::mul({a, Expr::pow(b, Rational(-1))}); }
Expr operator-(const Expr& a) { return Expr::mul({Expr::constant(-1.0), a}); }

bool operator==(const Expr& a, const Expr& b) {
  if (ExprBuilder::same(a, b)) return true;
  if (a.hash() != b.hash()) return false;
  return structural(a, b) == 0;
}
std::strong_ordering operator<=>(const Expr& a, const Expr& b) { return structural(a, b); }

Expr pow(const Expr& base, Rational e) { return Expr::pow(base, e); }
Expr exp(const Expr& arg) { return Expr::exp(arg); }

// ---------------------------------------------------------------- printing

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// 1 = sum, 2 = product, 3 = power base / atom
int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Add: return 1;
    case Expr::Kind::Mul: return 2;
    case Expr::Kind::Const: return e.value() < 0 ? 1 : 3;
    case Expr::Kind::Pow: return 2;
    default: return 3;
  }
}

bool is_negative_term(const Expr& t) {
  if (t.is_const()) return t.value() < 0;
  return t.kind() == Expr::Kind::Mul && t.children().front().is_const() && t.children().front().value() < 0;
}

void print_into(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print_into(e, out);
    out += ')';
  } else {
    print_into(e, out);
  }
}

void print_into(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Const:
      out += format_number(e.value());
      return;
    case Expr::Kind::Var:
      out += e.var().name();
      return;
    case Expr::Kind::Exp:
      out += "exp(";
      print_into(e.base(), out);
      out += ')';
      return;
    case Expr::Kind::Pow: {
      const Expr& b = e.base();
      bool atomic = b.kind() == Expr::Kind::Var || b.kind() == Expr::Kind::Exp || (b.is_const() && b.value() >= 0);
      if (atomic) print_into(b, out);
      else {
        out += '(';
        print_into(b, out);
        out += ')';
      }
      Rational r = e.exponent();
      out += '^';
      if (r.is_integer() && r.num > 0) out += r.str();
      else out += "(" + r.str() + ")";
      return;
    }
    case Expr::Kind::Mul: {
      const auto& ch = e.children();
      std::size_t start = 0;
      if (ch.front().is_const()) {
        double c = ch.front().value();
        if (c == -1.0) out += '-';
        else {
          out += format_number(c);
          out += '*';
        }
        start = 1;
      }
      for (std::size_t i = start; i < ch.size(); ++i) {
        if (i > start) out += '*';
        print_wrapped(ch[i], 2, out);
      }
      return;
    }
    case Expr::Kind::Add: {
      const auto& ch = e.children();
      for (std::size_t i = 0; i < ch.size(); ++i) {
        if (i == 0) {
          print_into(ch[i], out);
          continue;
        }
        if (is_negative_term(ch[i])) {
          out += " - ";
          print_wrapped(-ch[i], 2, out);
        } else {
          out += " + ";
          print_into(ch[i], out);
        }
      }
      return;
    }
  }
}

}  // namespace

std::string print(const Expr& e) {
  std::string s;
  print_into(e, s);
  return s;
}

// ---------------------------------------------------------------- calculus

Expr partial_derivative(const Expr& e, const JetVar& v) {
  if (!e.contains(v)) return Expr::constant(0.0);
  switch (e.kind()) {
    case Expr::Kind::Const:
      return Expr::constant(0.0);
    case Expr::Kind::Var:
      return Expr::constant(e.var() == v ? 1.0 : 0.0);
    case Expr::Kind::Add: {
      std::vector<Expr> ts;
      for (const auto& c : e.children()) ts.push_back(partial_derivative(c, v));
      return Expr::add(std::move(ts));
    }
    case Expr::Kind::Mul: {
      const auto& ch = e.children();
      std::vector<Expr> ts;
      for (std::size_t i = 0; i < ch.size(); ++i) {
        if (!ch[i].contains(v)) continue;
        std::vector<Expr> fs;
        fs.reserve(ch.size());
        for (std::size_t j = 0; j < ch.size(); ++j) fs.push_back(j == i ? partial_derivative(ch[i], v) : ch[j]);
        ts.push_back(Expr::mul(std::move(fs)));
      }
      return Expr::add(std::move(ts));
    }
    case Expr::Kind::Pow: {
      Rational r = e.exponent();
      return Expr::mul({Expr::constant(r.to_double()), Expr::pow(e.base(), r - Rational(1)),
                        partial_derivative(e.base(), v)});
    }
    case Expr::Kind::Exp:
      return Expr::mul({e, partial_derivative(e.base(), v)});
  }
  return Expr::constant(0.0);
}

Expr total_derivative(const Expr& e, int i) {
  if (i < 0 || i >= kMaxIndependent) throw std::out_of_range("independent index out of range");
  std::vector<Expr> ts;
  for (const auto& v : e.free_vars()) {
    switch (v.kind()) {
      case JetVar::Kind::Symbol:
        throw std::invalid_argument("total derivative of opaque symbol '" + v.name() + "'");
      case JetVar::Kind::Independent:
        if (v.index() == i) ts.push_back(partial_derivative(e, v));
        break;
      case JetVar::Kind::Dependent:
        ts.push_back(Expr::mul({Expr::var(v.differentiated(i)), partial_derivative(e, v)}));
        break;
    }
  }
  return Expr::add(std::move(ts));
}

Expr substitute(const Expr& e, const std::map<JetVar, Expr>& repl) {
  bool touched = false;
  for (const auto& v : e.free_vars())
    if (repl.count(v)) {
      touched = true;
      break;
    }
  if (!touched) return e;
  switch (e.kind()) {
    case Expr::Kind::Const:
      return e;
    case Expr::Kind::Var:
      return repl.at(e.var());
    case Expr::Kind::Add:
    case Expr::Kind::Mul: {
      std::vector<Expr> ch;
      for (const auto& c : e.children()) ch.push_back(substitute(c, repl));
      return e.kind() == Expr::Kind::Add ? Expr::add(std::move(ch)) : Expr::mul(std::move(ch));
    }
    case Expr::Kind::Pow:
      return Expr::pow(substitute(e.base(), repl), e.exponent());
    case Expr::Kind::Exp:
      return Expr::exp(substitute(e.base(), repl));
  }
  return e;
}

// ---------------------------------------------------------------- evaluation

int EvalTable::column(const JetVar& v) const {
  auto it = std::find(variables.begin(), variables.end(), v);
  return it == variables.end() ? -1 : static_cast<int>(it - variables.begin());
}

namespace {

using Arr = Eigen::ArrayXd;

Arr eval_rec(const Expr& e, const EvalTable& t, const std::map<JetVar, int>& cols) {
  const Eigen::Index n = t.rows();
  switch (e.kind()) {
    case Expr::Kind::Const:
      return Arr::Constant(n, e.value());
    case Expr::Kind::Var: {
      auto it = cols.find(e.var());
      if (it == cols.end()) throw std::invalid_argument("variable '" + e.var().name() + "' missing from table");
      return t.values.col(it->second).array();
    }
    case Expr::Kind::Add: {
      Arr acc = eval_rec(e.children()[0], t, cols);
      for (std::size_t i = 1; i < e.children().size(); ++i) acc += eval_rec(e.children()[i], t, cols);
      return acc;
    }
    case Expr::Kind::Mul: {
      Arr acc = eval_rec(e.children()[0], t, cols);
      for (std::size_t i = 1; i < e.children().size(); ++i) acc *= eval_rec(e.children()[i], t, cols);
      return acc;
    }
    case Expr::Kind::Pow: {
      Arr b = eval_rec(e.base(), t, cols);
      Rational r = e.exponent();
      if (r.is_integer()) {
        if (r.num == 2) return b * b;
        if (r.num == -1) return b.inverse();
        auto k = static_cast<int>(r.num);
        return b.unaryExpr([k](double x) { return std::pow(x, k); });
      }
      double p = r.to_double();
      return b.unaryExpr([p](double x) {
        return x < 0 ? std::numeric_limits<double>::quiet_NaN() : std::pow(x, p);
      });
    }
    case Expr::Kind::Exp:
      return eval_rec(e.base(), t, cols).exp();
  }
  return Arr::Zero(n);
}

}  // namespace

Eigen::VectorXd evaluate(const Expr& e, const EvalTable& table) {
  std::map<JetVar, int> cols;
  for (const auto& v : e.free_vars()) {
    int c = table.column(v);
    if (c < 0) throw std::invalid_argument("variable '" + v.name() + "' missing from table");
    cols.emplace(v, c);
  }
  Arr r = eval_rec(e, table, cols);
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (!std::isfinite(r[i])) r[i] = std::numeric_limits<double>::quiet_NaN();
  return r.matrix();
}

double evaluate_at(const Expr& e, const std::map<JetVar, double>& point) {
  EvalTable t;
  t.values.resize(1, static_cast<Eigen::Index>(e.free_vars().size()));
  for (const auto& v : e.free_vars()) {
    auto it = point.find(v);
    if (it == point.end()) throw std::invalid_argument("variable '" + v.name() + "' missing from point");
    t.values(0, static_cast<Eigen::Index>(t.variables.size())) = it->second;
    t.variables.push_back(v);
  }
  return evaluate(e, t)[0];
}

}  // namespace symdisc
