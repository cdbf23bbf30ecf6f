#include <cmath>
#include <random>

#include "doctest.h"
#include "symdisc/jetexpr.hpp"

using namespace symdisc;

namespace {

JetVar dep(const char* name) { return parse(name).var(); }

// Random expression trees over a small jet alphabet.
struct RandomExpr {
  std::mt19937_64 rng;
  std::vector<Expr> atoms;
  bool allow_exp = true;
  bool allow_fractional = true;

  explicit RandomExpr(std::uint64_t seed, std::vector<std::string> names) : rng(seed) {
    for (const auto& n : names) atoms.push_back(parse(n));
  }

  Expr constant() {
    std::uniform_int_distribution<int> d(-6, 6);
    int k = d(rng);
    if (k == 0) k = 3;
    return Expr::constant(std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? k / 4.0 : k);
  }

  Expr gen(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
    switch (pick(rng)) {
      case 0:
        return constant();
      case 1:
        return atoms[std::uniform_int_distribution<std::size_t>(0, atoms.size() - 1)(rng)];
      case 2:
      case 3: {
        int n = std::uniform_int_distribution<int>(2, 3)(rng);
        std::vector<Expr> ts;
        for (int i = 0; i < n; ++i) ts.push_back(gen(depth - 1));
        return Expr::add(ts);
      }
      case 4:
      case 5: {
        int n = std::uniform_int_distribution<int>(2, 3)(rng);
        std::vector<Expr> fs;
        for (int i = 0; i < n; ++i) fs.push_back(gen(depth - 1));
        return Expr::mul(fs);
      }
      default: {
        if (allow_exp && std::uniform_int_distribution<int>(0, 4)(rng) == 0)
          return Expr::exp(Expr::constant(0.25) * gen(depth - 2));
        static const Rational exps[] = {Rational(2), Rational(3), Rational(-1), Rational(1, 2), Rational(-5, 3)};
        int hi = allow_fractional ? 4 : 2;
        return Expr::pow(gen(depth - 1), exps[std::uniform_int_distribution<int>(0, hi)(rng)]);
      }
    }
  }
};

std::map<JetVar, double> random_point(const Expr& e, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::map<JetVar, double> p;
  for (const auto& v : e.free_vars()) p[v] = n(rng);
  return p;
}

}  // namespace

TEST_CASE("parse boussinesq expression") {
  Expr e = parse("u_tt + u*u_xx + u_x^2 + u_xxxx");
  REQUIRE(e.kind() == Expr::Kind::Add);
  CHECK(e.children().size() == 4);
  CHECK(parse("0") == Expr::constant(0));
  CHECK(parse("0").is_const(0.0));
  CHECK(parse("u_xy - u_yx").is_const(0.0));
  CHECK(parse("u_ty") == parse("u_yt"));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse("u_x +"), ParseError);
  CHECK_THROWS_AS(parse("foo + 1"), ParseError);
  CHECK_THROWS_AS(parse("u_q"), ParseError);
  CHECK_THROWS_AS(parse("(u + v"), ParseError);
  CHECK_THROWS_AS(parse("u^x"), ParseError);
  try {
    parse("u + $");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("parse division, rationals and symbols") {
  CHECK(parse("u/u_x") == Expr::mul({parse("u"), Expr::pow(parse("u_x"), Rational(-1))}));
  Expr e = parse("u_xx*u_x^(-(2+2+0)/3)");
  REQUIRE(e.kind() == Expr::Kind::Mul);
  CHECK(e.children()[1].exponent() == Rational(-4, 3));
  Expr s = parse("eta_0_2 + 2*eta_4_0", {"eta_0_2", "eta_4_0"});
  CHECK(s.free_vars().size() == 2);
  CHECK(s.free_vars()[0].kind() == JetVar::Kind::Symbol);
  // a symbol shadows the jet name
  CHECK(parse("u", {"u"}).var().kind() == JetVar::Kind::Symbol);
}

TEST_CASE("normalization invariants") {
  Expr u = parse("u");
  CHECK(u * u == Expr::pow(u, Rational(2)));
  CHECK((u + u) == Expr::mul({Expr::constant(2), u}));
  CHECK(Expr::pow(u, Rational(1)) == u);
  CHECK(Expr::pow(u, Rational(0)).is_const(1.0));
  CHECK(Expr::add({u}) == u);
  CHECK(Expr::mul({u}) == u);
  CHECK(Expr::exp(Expr::constant(0)).is_const(1.0));
  CHECK(Expr::pow(Expr::pow(u, Rational(1, 3)), Rational(3)) == u);
  CHECK(print(parse("2*(u*v)^2")) == "2*u^2*v^2");
}

TEST_CASE("printing") {
  CHECK(print(parse("u_tt + u*u_xx + u_x^2 + u_xxxx")) == "u_tt + u_xxxx + u_x^2 + u*u_xx");
  CHECK(print(parse("-1 - u")) == "-1 - u");
  CHECK(print(parse("u_x^(-5/3)")) == "u_x^(-5/3)");
  CHECK(print(parse("exp(4*(x^2+y^2))")) == "exp(4*(x^2 + y^2))");
  CHECK(print(parse("0.1*u")) == "0.1*u");
}

TEST_CASE("partial derivatives") {
  CHECK(partial_derivative(parse("u_x^2"), dep("u_x")) == parse("2*u_x"));
  CHECK(partial_derivative(parse("x*u_y"), dep("u_x")).is_const(0.0));
  CHECK(partial_derivative(parse("exp(4*(x^2+y^2))"), JetVar::independent(0)) == parse("8*x*exp(4*(x^2+y^2))"));
  CHECK(partial_derivative(parse("u_x^(-1)"), dep("u_x")) == parse("-u_x^(-2)"));
}

TEST_CASE("total derivatives") {
  CHECK(total_derivative(parse("u"), 0) == parse("u_x"));
  CHECK(total_derivative(parse("x*u_y"), 0) == parse("u_y + x*u_xy"));
  CHECK(total_derivative(parse("x*u_y - y*u_x"), 1) == parse("x*u_yy - u_x - y*u_xy"));
  CHECK(total_derivative(parse("u_t*v"), 3) == parse("u_tt*v + u_t*v_t"));
  CHECK_THROWS_AS(total_derivative(parse("a", {"a"}), 0), std::invalid_argument);
}

TEST_CASE("expand to monomials") {
  auto t = expand_to_monomials(parse("(u+v)^2"));
  REQUIRE(t.size() == 3);
  CHECK(t[0].coefficient == 1.0);
  CHECK(t[0].monomial == parse("u^2"));
  CHECK(t[1].coefficient == 2.0);
  CHECK(t[1].monomial == parse("u*v"));
  CHECK(t[2].monomial == parse("v^2"));

  auto b = expand_to_monomials(parse("u_tt + u*u_xx + u_x^2 + u_xxxx"));
  REQUIRE(b.size() == 4);
  for (const auto& term : b) CHECK(term.coefficient == 1.0);

  CHECK(expand_to_monomials(parse("2*u - 2*u")).empty());
  CHECK_THROWS_AS(expand_to_monomials(parse("(u+v)^(1/2)")), ExpansionError);
  CHECK_THROWS_AS(expand_to_monomials(parse("(u+v)^(-1)")), ExpansionError);

  // rational exponents combine exactly
  auto r = expand_to_monomials(parse("u*u_x^(-2/3)*u_xx*u_x^(-4/3)*u_x^2"));
  REQUIRE(r.size() == 1);
  CHECK(r[0].monomial == parse("u*u_xx"));

  // exp atoms are opaque and not merged
  auto ex = expand_to_monomials(parse("exp(u)*exp(v)*(1 + u)"));
  CHECK(ex.size() == 2);
  // exp arguments are canonicalized so equal exponents compare equal
  CHECK(expand(parse("exp(4*(x^2+y^2))")) == expand(parse("exp(4*x^2+4*y^2)")));
}

TEST_CASE("evaluate") {
  EvalTable t;
  t.variables = {dep("u_x")};
  t.values = Eigen::MatrixXd(3, 1);
  t.values << 1, 2, 3;
  auto r = evaluate(parse("u_x^2"), t);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 4.0);
  CHECK(r[2] == 9.0);

  EvalTable z;
  z.variables = {dep("u_x")};
  z.values = Eigen::MatrixXd::Zero(1, 1);
  CHECK(std::isnan(evaluate(parse("u_x^(-1)"), z)[0]));

  EvalTable xy;
  xy.variables = {JetVar::independent(0), JetVar::independent(1)};
  xy.values = Eigen::MatrixXd(1, 2);
  xy.values << 3, 4;
  CHECK(evaluate(parse("(x^2+y^2)/2"), xy)[0] == doctest::Approx(12.5));

  EvalTable neg;
  neg.variables = {dep("u_x")};
  neg.values = Eigen::MatrixXd::Constant(1, 1, -8.0);
  CHECK(std::isnan(evaluate(parse("u_x^(1/3)"), neg)[0]));
  CHECK(evaluate(parse("u_x^3"), neg)[0] == -512.0);

  CHECK_THROWS_AS(evaluate(parse("u"), t), std::invalid_argument);
}

TEST_CASE("property: parse(print(e)) round trip") {
  RandomExpr g(7, {"x", "y", "t", "u", "v", "u_x", "u_xy", "v_tt"});
  for (int i = 0; i < 2000; ++i) {
    Expr e = g.gen(6);
    std::string s = print(e);
    Expr back = parse(s);
    INFO(s);
    REQUIRE(back == e);
  }
}

TEST_CASE("property: total derivatives commute") {
  RandomExpr g(11, {"x", "y", "u", "v", "u_x", "u_y", "u_xy", "v_yy"});
  g.allow_fractional = false;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    Expr e = g.gen(4);
    Expr a = total_derivative(total_derivative(e, 0), 1);
    Expr b = total_derivative(total_derivative(e, 1), 0);
    INFO(print(e));
    Expr diff = a - b;
    if (!diff.is_const(0.0)) {
      // structural forms may differ (e.g. unexpanded powers); compare expanded or numerically
      Expr d = expand(diff);
      if (!d.is_const(0.0)) {
        for (int k = 0; k < 5; ++k) {
          auto p = random_point(diff, rng);
          double va = evaluate_at(a, p), vb = evaluate_at(b, p);
          if (std::isfinite(va) && std::isfinite(vb))
            CHECK(std::abs(va - vb) <= 1e-9 * (1.0 + std::abs(va)));
        }
      }
    }
  }
}

TEST_CASE("property: partial derivative agrees with central differences") {
  RandomExpr g(23, {"x", "u", "u_x", "u_xx", "v"});
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    Expr e = g.gen(5);
    if (e.free_vars().empty()) continue;
    auto p = random_point(e, rng);
    const JetVar v = e.free_vars()[i % e.free_vars().size()];
    Expr d = partial_derivative(e, v);
    double h = 1e-5;
    auto pp = p, pm = p;
    pp[v] += h;
    pm[v] -= h;
    double fp = evaluate_at(e, pp), fm = evaluate_at(e, pm);
    std::map<JetVar, double> dp;
    for (const auto& w : d.free_vars()) dp[w] = p[w];
    double dv = evaluate_at(d, dp);
    if (!std::isfinite(fp) || !std::isfinite(fm) || !std::isfinite(dv)) continue;
    double f0 = evaluate_at(e, p);
    double fd = (fp - fm) / (2 * h);
    double scale = std::max({1.0, std::abs(dv), std::abs(f0)});
    // near a singularity the quotient has not converged at this h; skip those points
    auto pp2 = p, pm2 = p;
    pp2[v] += 2 * h;
    pm2[v] -= 2 * h;
    double fd2 = (evaluate_at(e, pp2) - evaluate_at(e, pm2)) / (4 * h);
    if (!(std::abs(fd2 - fd) < 1e-7 * scale)) continue;
    INFO(print(e), " wrt ", v.name());
    CHECK(std::abs(fd - dv) <= 1e-6 * scale);
    ++checked;
  }
  CHECK(checked > 200);
}

TEST_CASE("property: expansion re-sums identically") {
  RandomExpr g(31, {"x", "y", "u", "u_x", "v"});
  g.allow_fractional = false;
  std::mt19937_64 rng(9);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    Expr e = g.gen(4);
    std::vector<Term> terms;
    try {
      terms = expand_to_monomials(e);
    } catch (const ExpansionError&) {
      continue;
    }
    for (int k = 0; k < 100; ++k) {
      auto p = random_point(e, rng);
      double ve = evaluate_at(e, p);
      if (!std::isfinite(ve)) continue;
      double vr = 0.0, scale = 0.0;
      for (const auto& t : terms) {
        std::map<JetVar, double> q;
        for (const auto& w : t.monomial.free_vars()) q[w] = p[w];
        double m = t.coefficient * evaluate_at(t.monomial, q);
        vr += m;
        scale += std::abs(m);
      }
      CHECK(std::abs(ve - vr) <= 1e-12 * std::max(1.0, scale));
    }
    ++checked;
  }
  CHECK(checked > 100);
}
