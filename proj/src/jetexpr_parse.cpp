#include <cctype>
#include <charconv>
#include <cmath>

#include "symdisc/jetexpr.hpp"

namespace symdisc {

ParseError::ParseError(const std::string& msg, std::size_t pos)
    : std::runtime_error(msg + " at position " + std::to_string(pos)), pos_(pos) {}

namespace {

int independent_from_char(char c) {
  for (int i = 0; i < kMaxIndependent; ++i)
    if (kIndependentNames[i] == c) return i;
  return -1;
}

int dependent_from_char(char c) {
  for (int i = 0; i < kMaxDependent; ++i)
    if (kDependentNames[i] == c) return i;
  return -1;
}

class Parser {
 public:
  Parser(const std::string& s, const std::set<std::string>& symbols) : s_(s), symbols_(symbols) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    std::vector<Expr> terms{term()};
    for (;;) {
      if (accept('+')) terms.push_back(term());
      else if (accept('-')) terms.push_back(-term());
      else break;
    }
    return terms.size() == 1 ? terms.front() : Expr::add(std::move(terms));
  }

  Expr term() {
    std::vector<Expr> fs{unary()};
    for (;;) {
      if (accept('*')) fs.push_back(unary());
      else if (accept('/')) fs.push_back(Expr::pow(unary(), Rational(-1)));
      else break;
    }
    return fs.size() == 1 ? fs.front() : Expr::mul(std::move(fs));
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr b = primary();
    if (accept('^')) {
      std::size_t at = pos_;
      Expr ex = unary_exponent();
      if (!ex.is_const()) throw ParseError("exponent must be a constant", at);
      Rational r;
      try {
        r = Rational::from_double(ex.value());
      } catch (const std::invalid_argument&) {
        throw ParseError("exponent must be rational", at);
      }
      return Expr::pow(b, r);
    }
    return b;
  }

  Expr unary_exponent() {
    if (accept('-')) return -unary_exponent();
    if (accept('+')) return unary_exponent();
    return primary();
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_) throw ParseError("malformed number", start);
    return Expr::constant(v);
  }

  Expr identifier() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    std::string id = s_.substr(start, pos_ - start);
    if (symbols_.count(id)) return Expr::var(JetVar::symbol(id));
    if (id == "exp") {
      if (!accept('(')) fail("expected '(' after exp");
      Expr a = expr();
      if (!accept(')')) fail("expected ')'");
      return Expr::exp(a);
    }
    if (id.size() == 1) {
      if (int i = independent_from_char(id[0]); i >= 0) return Expr::var(JetVar::independent(i));
      if (int a = dependent_from_char(id[0]); a >= 0) return Expr::var(JetVar::dependent(a));
    }
    if (id.size() >= 3 && id[1] == '_') {
      int a = dependent_from_char(id[0]);
      if (a >= 0) {
        MultiIndex J{};
        bool ok = true;
        for (std::size_t k = 2; k < id.size(); ++k) {
          int i = independent_from_char(id[k]);
          if (i < 0) {
            ok = false;
            break;
          }
          J[i]++;
        }
        if (ok) return Expr::var(JetVar::dependent(a, J));
      }
    }
    throw ParseError("unknown identifier '" + id + "'", start);
  }

  const std::string& s_;
  const std::set<std::string>& symbols_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(const std::string& text, const std::set<std::string>& symbols) { return Parser(text, symbols).run(); }

}  // namespace symdisc
