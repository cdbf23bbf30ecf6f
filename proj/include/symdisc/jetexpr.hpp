#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace symdisc {

// Independent variables use the fixed alphabet x, y, z, t; dependent ones u, v, w.
inline constexpr int kMaxIndependent = 4;
inline constexpr int kMaxDependent = 3;
inline constexpr char kIndependentNames[kMaxIndependent] = {'x', 'y', 'z', 't'};
inline constexpr char kDependentNames[kMaxDependent] = {'u', 'v', 'w'};

// Derivative counts per independent variable, so u_xy and u_yx coincide.
using MultiIndex = std::array<std::uint8_t, kMaxIndependent>;

int multi_index_order(const MultiIndex& J);

class JetVar {
 public:
  enum class Kind : std::uint8_t { Independent, Dependent, Symbol };

  static JetVar independent(int i);
  static JetVar dependent(int alpha, MultiIndex J = {});
  // Opaque named symbol (invariant names, GP feature names). Not a jet coordinate.
  static JetVar symbol(std::string name);

  Kind kind() const { return kind_; }
  int index() const { return index_; }
  const MultiIndex& multi_index() const { return J_; }
  int order() const { return kind_ == Kind::Dependent ? multi_index_order(J_) : 0; }
  const std::string& symbol_name() const { return name_; }

  // u_J -> u_{J+e_i}
  JetVar differentiated(int i) const;
  std::string name() const;

  friend bool operator==(const JetVar&, const JetVar&) = default;
  friend std::strong_ordering operator<=>(const JetVar& a, const JetVar& b);

 private:
  Kind kind_ = Kind::Independent;
  int index_ = 0;
  MultiIndex J_{};
  std::string name_;
};

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);
  // Continued-fraction reconstruction; throws if no small-denominator match.
  static Rational from_double(double x, std::int64_t max_den = 1000000);

  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator*(Rational a, Rational b);
  friend Rational operator-(Rational a) { return Rational(-a.num, a.den); }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);
};

class Expr;
struct ExprNode;

class Expr {
 public:
  enum class Kind : std::uint8_t { Const, Var, Add, Mul, Pow, Exp };

  Expr();  // Const(0)
  Expr(double c);  // NOLINT implicit constants read naturally in formulas
  Expr(const JetVar& v);  // NOLINT

  static Expr constant(double c);
  static Expr var(const JetVar& v);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  static Expr pow(const Expr& base, Rational e);
  static Expr exp(const Expr& arg);

  Kind kind() const;
  double value() const;
  const JetVar& var() const;
  const std::vector<Expr>& children() const;
  const Expr& base() const;  // Pow base or Exp argument
  Rational exponent() const;

  bool is_const() const { return kind() == Kind::Const; }
  bool is_const(double c) const { return is_const() && value() == c; }
  std::size_t node_count() const;
  std::size_t hash() const;
  // Sorted, unique JetVars appearing anywhere in the tree.
  const std::vector<JetVar>& free_vars() const;
  bool contains(const JetVar& v) const;
  // Highest derivative order over Dependent vars (0 if none).
  int max_order() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

  friend bool operator==(const Expr& a, const Expr& b);
  friend std::strong_ordering operator<=>(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  friend struct ExprBuilder;
  std::shared_ptr<const ExprNode> node_;
};

Expr pow(const Expr& base, Rational e);
Expr exp(const Expr& arg);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos);
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

class ExpansionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `symbols` names take priority over jet-variable names.
Expr parse(const std::string& text, const std::set<std::string>& symbols = {});
std::string print(const Expr& e);
std::string to_string(const JetVar& v);

Expr partial_derivative(const Expr& e, const JetVar& v);
// Throws std::invalid_argument on Symbol vars (no jet structure to differentiate through).
Expr total_derivative(const Expr& e, int i);

struct Term {
  double coefficient;
  Expr monomial;
};
std::vector<Term> expand_to_monomials(const Expr& e);
// Sum of coefficient*monomial, normalized.
Expr resum(const std::vector<Term>& terms);
// Expands when possible, otherwise returns e unchanged.
Expr expand(const Expr& e);

Expr substitute(const Expr& e, const std::map<JetVar, Expr>& repl);

struct EvalTable {
  std::vector<JetVar> variables;
  Eigen::MatrixXd values;  // N x |variables|

  int column(const JetVar& v) const;  // -1 if absent
  Eigen::Index rows() const { return values.rows(); }
};

Eigen::VectorXd evaluate(const Expr& e, const EvalTable& table);
double evaluate_at(const Expr& e, const std::map<JetVar, double>& point);

}  // namespace symdisc
