#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "symdisc/symmetry.hpp"

using namespace symdisc;

namespace {

JetVar jv(const char* name) { return parse(name).var(); }

const JetSpace kXY{{0, 1}, {0}};
const JetSpace kXT{{0, 3}, {0}};

double eval_point(const Expr& e, const std::map<std::string, double>& vals) {
  std::map<JetVar, double> p;
  for (const auto& v : e.free_vars()) p[v] = vals.at(v.name());
  return evaluate_at(e, p);
}

}  // namespace

TEST_CASE("prolongation examples") {
  // v = -u d_x + x d_u on (x; u)
  JetSpace x_only{{0}, {0}};
  VectorField v{x_only, {-parse("u")}, {parse("x")}};
  auto pv = prolong(v, 1);
  CHECK(pv.coefficient(jv("u_x")) == parse("1 + u_x^2"));
  CHECK(pv.coefficient(jv("u")) == parse("x"));

  VectorField rot{kXY, {parse("y"), parse("-x")}, {parse("0")}};
  auto pr = prolong(rot, 1);
  CHECK(pr.coefficient(jv("u_x")) == parse("u_y"));
  CHECK(pr.coefficient(jv("u_y")) == parse("-u_x"));
  CHECK(pr.coefficient(jv("u")).is_const(0.0));

  VectorField dt{kXT, {parse("0"), parse("1")}, {parse("0")}};
  auto pt = prolong(dt, 4);
  for (const auto& [var, c] : pt.coeffs)
    if (var.kind() == JetVar::Kind::Dependent) CHECK(c.is_const(0.0));
}

TEST_CASE("vector field validation") {
  VectorField bad{kXY, {parse("u_x"), parse("0")}, {parse("0")}};
  CHECK_THROWS_AS(prolong(bad, 1), std::invalid_argument);
  VectorField short_xi{kXY, {parse("1")}, {parse("0")}};
  CHECK_THROWS_AS(prolong(short_xi, 1), std::invalid_argument);
}

TEST_CASE("apply prolonged field") {
  VectorField rot{kXY, {parse("y"), parse("-x")}, {parse("0")}};
  auto pr = prolong(rot, 1);
  CHECK(apply(pr, parse("u")).is_const(0.0));
  CHECK(apply(pr, parse("(x^2+y^2)/2")).is_const(0.0));
  CHECK(apply(pr, parse("x*u_y - y*u_x")).is_const(0.0));
  CHECK_THROWS_AS(apply(pr, parse("u_xx")), std::invalid_argument);
  CHECK_THROWS_AS(apply(pr, parse("u_t")), std::invalid_argument);

  VectorField sc{kXT, {parse("x"), parse("2*t")}, {parse("-2*u")}};
  auto ps = prolong(sc, 2);
  CHECK(apply(ps, parse("u_tt")) == parse("-6*u_tt"));
}

TEST_CASE("scaling prolongation matches finite-difference group action") {
  // flow of v = x d_x + 2t d_t - 2u d_u: x -> e^s x, t -> e^{2s} t, u -> e^{-2s} u.
  auto u = [](double x, double t) { return std::sin(x) * std::exp(0.3 * t) + x * t * t; };
  auto utt = [](double x, double t) { return 0.09 * std::sin(x) * std::exp(0.3 * t) + 2 * x; };
  const double x0 = 0.7, t0 = 0.4;
  // transformed solution u~(X,T) = e^{-2s} u(e^{-s} X, e^{-2s} T); its T-derivative numerically
  auto transformed_utt = [&](double s) {
    double X = std::exp(s) * x0, T = std::exp(2 * s) * t0, h = 1e-3;
    auto ut = [&](double TT) { return std::exp(-2 * s) * u(std::exp(-s) * X, std::exp(-2 * s) * TT); };
    return (ut(T + h) - 2 * ut(T) + ut(T - h)) / (h * h);
  };
  double ds = 1e-3;
  double numeric = (transformed_utt(ds) - transformed_utt(-ds)) / (2 * ds);

  VectorField sc{kXT, {parse("x"), parse("2*t")}, {parse("-2*u")}};
  Expr coeff = prolong(sc, 2).coefficient(jv("u_tt"));
  double symbolic = eval_point(coeff, {{"u_tt", utt(x0, t0)}});
  CHECK(symbolic == doctest::Approx(numeric).epsilon(1e-4));
}

TEST_CASE("builtin catalogs pass invariance at 1000 points") {
  for (const char* name : {"so2-space", "scaling-translation(1/2,-1)", "phase-rotation-2", "so3-space"}) {
    InvariantSet s = builtin_catalog(name);
    auto rep = verify_invariance(s, 1000, 42);
    INFO(name, " max residual ", rep.max_residual());
    CHECK(rep.passed());
    CHECK(rep.max_residual() < 1e-8);
  }
}

TEST_CASE("catalog contents") {
  CHECK(builtin_catalog("so2-space").invariants.size() == 7);
  auto st = scaling_translation_catalog(Rational(1, 2), Rational(-1), 4);
  CHECK(st.invariants.size() == 14);
  CHECK(!st.has("eta_1_0"));
  CHECK(st.invariant("eta_0_2").expr == parse("u_tt*u_x^(-2)"));
  CHECK(st.invariant("eta_2_0").expr == parse("u_xx*u_x^(-4/3)"));
  CHECK(st.invariant("eta_0_0").expr == parse("u*u_x^(-2/3)"));
  REQUIRE(st.guards.size() == 1);
  CHECK(st.guards[0].min_abs == 0.1);
  CHECK(builtin_catalog("scaling-translation").invariants.size() == 14);

  auto pr = builtin_catalog("phase-rotation-2");
  CHECK(pr.invariants.size() == 22);
  CHECK(pr.invariant("I_t").expr == parse("u*u_t + v*v_t"));
  CHECK(pr.invariant("E_t").expr == parse("-v*u_t + u*v_t"));
  CHECK(pr.lhs_candidates == std::vector<std::string>{"I_t", "E_t"});

  CHECK(builtin_catalog("so3-space").invariants.size() == 6);
  CHECK_THROWS_AS(builtin_catalog("lorentz"), std::invalid_argument);
}

TEST_CASE("perturbed invariant fails verification") {
  InvariantSet s = so2_space_catalog();
  s.invariants = {{"bad", parse("(x^2+y^2)/2 + 0.01*x")}};
  auto rep = verify_invariance(s, 200, 1);
  CHECK_FALSE(rep.passed());
  CHECK(rep.max_residual() > 1e-4);
}

TEST_CASE("higher order invariants, p = 1") {
  JetSpace x_only{{0}, {0}};
  auto r = higher_order_invariants(x_only, {parse("x")}, {parse("u_x")});
  REQUIRE(r.size() == 1);
  CHECK(r[0] == parse("u_xx"));
  auto dw = higher_order_invariants(x_only, {parse("u")}, {parse("u_x^2")});
  REQUIRE(dw.size() == 1);
  CHECK(dw[0] == parse("2*u_x*u_xx/u_x"));
  CHECK_THROWS_AS(higher_order_invariants(x_only, {parse("u"), parse("x")}, {parse("u_x")}), std::invalid_argument);
}

TEST_CASE("degenerate horizontal Jacobian is reported") {
  JetSpace x_only{{0}, {0}};
  EvalTable pts;
  pts.variables = {jv("u_x")};
  pts.values = Eigen::MatrixXd(3, 1);
  pts.values << 1.0, 0.0, 2.0;
  try {
    higher_order_invariants(x_only, {parse("u")}, {parse("u_x")}, pts);
    FAIL("expected degenerate Jacobian");
  } catch (const DegenerateJacobianError& e) {
    CHECK(e.point() == 1);
  }
}

TEST_CASE("SO(2) example: second-order invariants and the Laplacian identity") {
  const Expr eta1 = parse("(x^2+y^2)/2"), eta2 = parse("u");
  const Expr zeta1 = parse("x*u_y - y*u_x"), zeta2 = parse("x*u_x + y*u_y");
  auto r1 = higher_order_invariants(kXY, {eta1, eta2}, {zeta1});
  auto r2 = higher_order_invariants(kXY, {eta1, eta2}, {zeta2});
  REQUIRE(r1.size() == 2);
  // column of eta2 replaced gives O_1 zeta / zeta1; numerator from the worked example
  CHECK(expand(r1[1] * zeta1) == expand(parse("x^2*u_yy + y^2*u_xx - x*u_x - y*u_y - 2*x*y*u_xy")));

  std::vector<Expr> known{eta1, eta2, zeta1, zeta2};
  Expr theta1 = refine_invariant(r1[1], known);
  CHECK(theta1 == expand(parse("x^2*u_yy + y^2*u_xx - 2*x*y*u_xy")));
  Expr theta2 = refine_invariant(r2[1], known);
  CHECK(theta2 == expand(parse("x*y*(u_yy - u_xx) + (x^2 - y^2)*u_xy")));

  // O~_2 = (zeta2/zeta1) O_1 + (2 eta1/zeta1) O_2, applied to zeta1 and zeta2
  Expr tilde_zeta1 = zeta2 * r1[1] + Expr::constant(2.0) * eta1 * r1[0];
  Expr tilde_zeta2 = zeta2 * r2[1] + Expr::constant(2.0) * eta1 * r2[0];
  Expr theta3 = tilde_zeta1;             // equals theta2 + zeta1
  Expr theta4 = tilde_zeta2 - zeta2;     // strictly second order part
  Expr theta4_paper = parse("x^2*u_xx + y^2*u_yy + 2*x*y*u_xy");
  Expr lap = parse("u_xx + u_yy");

  std::mt19937_64 rng(17);
  std::vector<JetVar> vars{JetVar::independent(0), JetVar::independent(1), jv("u"), jv("u_x"), jv("u_y"),
                           jv("u_xx"), jv("u_xy"), jv("u_yy")};
  EvalTable pts = sample_jet_points(vars, 100, rng);
  Eigen::VectorXd t1 = evaluate(theta1, pts), t4 = evaluate(theta4, pts), t4p = evaluate(theta4_paper, pts);
  Eigen::VectorXd e1 = evaluate(eta1, pts), l = evaluate(lap, pts);
  Eigen::VectorXd t3 = evaluate(theta3, pts), t2 = evaluate(theta2 + zeta1, pts);
  for (Eigen::Index k = 0; k < 100; ++k) {
    double scale = 1.0 + std::abs(t1[k]) + std::abs(t4[k]) + std::abs(e1[k]);
    CHECK(std::abs(t4[k] - t4p[k]) < 1e-10 * scale);
    CHECK(std::abs(t3[k] - t2[k]) < 1e-10 * scale);
    CHECK(std::abs((t1[k] + t4[k]) / (2 * e1[k]) - l[k]) < 1e-10 * (scale + std::abs(l[k])));
  }

  // the recursion outputs are invariants of the generating group
  InvariantSet outs;
  outs.space = kXY;
  outs.generators = so2_space_catalog().generators;
  for (std::size_t i = 0; i < r1.size(); ++i) outs.invariants.push_back({"r1_" + std::to_string(i), r1[i]});
  for (std::size_t i = 0; i < r2.size(); ++i) outs.invariants.push_back({"r2_" + std::to_string(i), r2[i]});
  outs.invariants.push_back({"theta1", theta1});
  outs.invariants.push_back({"theta4", theta4});
  CHECK(verify_invariance(outs, 200, 3).passed());

  // four candidates but only three independent strictly second-order directions
  CHECK(invariant_rank({theta1, theta2, theta3 - zeta1, theta4_paper}, 8, 5) == 3);
}

TEST_CASE("prolongation is linear in the vector field") {
  VectorField a{kXT, {parse("x"), parse("2*t")}, {parse("-2*u")}};
  VectorField b{kXT, {parse("t*u"), parse("x^2")}, {parse("u*x")}};
  auto pa = prolong(a, 3), pb = prolong(b, 3);
  auto pab = prolong(2.5 * a + (-1.5) * b, 3);
  for (const auto& [var, c] : pab.coeffs) {
    Expr expected = Expr::constant(2.5) * pa.coefficient(var) - Expr::constant(1.5) * pb.coefficient(var);
    CHECK(expand(c - expected).is_const(0.0));
  }
}

TEST_CASE("symmetry config from JSON") {
  const char* text = R"({
    "name": "rot",
    "independent": ["x", "y"], "dependent": ["u"],
    "generators": [{"xi": ["y", "-x"], "phi": ["0"]}],
    "invariants": [{"name": "r2", "expr": "x^2 + y^2"}, {"name": "g", "expr": "u_x^2 + u_y^2"}],
    "guards": [{"expr": "u_x", "min_abs": 0.05}],
    "lhs": ["g"]
  })";
  InvariantSet s = parse_symmetry_json(text);
  CHECK(s.invariants.size() == 2);
  CHECK(s.guards[0].min_abs == 0.05);
  CHECK(verify_invariance(s, 100, 2).passed());
  CHECK_THROWS(parse_symmetry_json(R"({"independent": ["q"], "dependent": ["u"], "invariants": []})"));

  std::string path = "symmetry_test_config.json";
  std::ofstream(path) << text;
  CHECK(load_symmetry(path).name == "rot");
  CHECK(load_symmetry("so2-space").name == "so2-space");
}
