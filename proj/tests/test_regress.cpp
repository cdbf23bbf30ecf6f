#include <cmath>
#include <random>

#include "doctest.h"
#include "symdisc/regress.hpp"

using namespace symdisc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n01(rng);
  return m;
}

std::vector<Expr> parse_all(const std::vector<std::string>& s) {
  std::vector<Expr> out;
  for (const auto& t : s) out.push_back(parse(t));
  return out;
}

struct RdSetup {
  std::vector<Expr> lhs, library, eta0, inv_library;
};

// u_t, v_t against cubic monomials of (u, v) and spatial derivatives up to order 2.
RdSetup rd_setup() {
  RdSetup s;
  s.lhs = parse_all({"u_t", "v_t"});
  s.library = parse_all({"u", "v", "u^2", "u*v", "v^2", "u^3", "u^2*v", "u*v^2", "v^3", "u_x", "u_y", "u_xx", "u_xy",
                         "u_yy", "v_x", "v_y", "v_xx", "v_xy", "v_yy"});
  auto cat = phase_rotation_catalog(2);
  s.eta0 = {cat.invariant("I_t").expr, cat.invariant("E_t").expr};
  std::vector<Expr> rhs;
  for (const auto& inv : cat.invariants)
    if (inv.name != "I_t" && inv.name != "E_t") rhs.push_back(inv.expr);
  s.inv_library = expressible_products(rhs, 2, s.library);
  return s;
}

double max_abs(const MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

VectorXd vec(const MatrixXd& W) {
  VectorXd v(W.size());
  for (int i = 0; i < W.rows(); ++i)
    for (int l = 0; l < W.cols(); ++l) v[i * W.cols() + l] = W(i, l);
  return v;
}

}  // namespace

TEST_CASE("stlsq recovers an exact sparse model") {
  RegressionData d;
  d.G = gaussian(200, 3, 1);
  MatrixXd Wt(1, 3);
  Wt << 1, 0, -2;
  d.B = d.G * Wt.transpose();
  StlsqOptions opt;
  auto r = stlsq(d, opt);
  CHECK(max_abs(r.W - Wt) < 1e-10);
  CHECK(r.W(0, 1) == 0.0);
  CHECK(r.converged);
  CHECK_FALSE(r.all_zero);

  opt.threshold = 5.0;
  r = stlsq(d, opt);
  CHECK(r.all_zero);
  CHECK(max_abs(r.W) == 0.0);
}

TEST_CASE("refit never leaves coefficients under the threshold") {
  // nearly collinear columns: the ridge splits the weight, the unbiased refit puts it back on one
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RegressionData d;
    d.G = gaussian(100, 3, seed);
    d.G.col(1) = d.G.col(0) + 0.05 * d.G.col(1);
    d.B = d.G.col(0) + 0.5 * d.G.col(2);
    StlsqOptions opt;
    opt.ridge = 50.0;
    auto r = stlsq(d, opt);
    for (int l = 0; l < 3; ++l) CHECK((r.W(0, l) == 0.0 || std::abs(r.W(0, l)) >= opt.threshold));
    CHECK(std::abs(r.W(0, 0) - 1.0) < 1e-10);
    CHECK(std::abs(r.W(0, 2) - 0.5) < 1e-10);
  }
}

TEST_CASE("threshold-free stlsq equals the least-squares oracle") {
  RegressionData d;
  d.G = gaussian(300, 6, 2);
  d.B = gaussian(300, 2, 3);
  StlsqOptions opt;
  opt.threshold = 0.0;
  opt.ridge = 0.0;
  auto r = stlsq(d, opt);
  MatrixXd oracle = d.G.colPivHouseholderQr().solve(d.B).transpose();
  CHECK(max_abs(r.W - oracle) < 1e-8);

  // ridge without unbias is the ridge normal-equation oracle
  opt.ridge = 3.0;
  opt.unbias = false;
  r = stlsq(d, opt);
  MatrixXd A = d.G.transpose() * d.G + 3.0 * MatrixXd::Identity(6, 6);
  MatrixXd ridge_oracle = A.ldlt().solve(d.G.transpose() * d.B).transpose();
  CHECK(max_abs(r.W - ridge_oracle) < 1e-10);
}

TEST_CASE("column scaling rescales the coefficient by 1/c") {
  RegressionData d;
  d.G = gaussian(150, 4, 4);
  d.B = gaussian(150, 1, 5) + d.G * VectorXd::LinSpaced(4, 1, 4);
  StlsqOptions opt;
  opt.threshold = 0.0;
  opt.ridge = 0.0;
  auto base = stlsq(d, opt);
  const double c = 7.5;
  d.G.col(2) *= c;
  auto scaled = stlsq(d, opt);
  CHECK(std::abs(scaled.W(0, 2) - base.W(0, 2) / c) < 1e-10);
  CHECK(std::abs(scaled.W(0, 0) - base.W(0, 0)) < 1e-10);
}

TEST_CASE("degenerate and rank-deficient libraries") {
  RegressionData d;
  d.G = gaussian(100, 4, 6);
  d.G.col(3).setZero();
  d.B = d.G.col(0) * 2.0;
  StlsqOptions opt;
  auto r = stlsq(d, opt);
  REQUIRE(r.dropped_columns.size() == 1);
  CHECK(r.dropped_columns[0] == 3);
  CHECK(std::abs(r.W(0, 0) - 2.0) < 1e-10);

  d.G.col(3) = d.G.col(1);
  opt.threshold = 0.0;
  opt.ridge = 0.0;
  r = stlsq(d, opt);
  CHECK(r.rank_deficient);
  CHECK(r.W.allFinite());
  // minimum-norm split across the duplicated pair
  CHECK(std::abs(r.W(0, 1) - r.W(0, 3)) < 1e-8);

  RegressionData bad = d;
  bad.G(0, 0) = NAN;
  CHECK_THROWS_AS(stlsq(bad, opt), std::invalid_argument);
}

TEST_CASE("rref and sparsification keep the span") {
  MatrixXd A(2, 4);
  A << 2, 4, 0, 2, 1, 2, 1, 0;
  MatrixXd R = rref(A);
  MatrixXd expect(2, 4);
  expect << 1, 2, 0, 1, 0, 0, 1, -1;
  CHECK(max_abs(R - expect) < 1e-14);

  Eigen::HouseholderQR<MatrixXd> qr(gaussian(12, 5, 7));
  MatrixXd Q = MatrixXd(qr.householderQ()).leftCols(5).transpose();
  MatrixXd S = sparsify_basis(Q);
  CHECK(S.rows() == 5);
  CHECK(max_abs(S * S.transpose() - MatrixXd::Identity(5, 5)) < 1e-12);
  CHECK(projection_residual(Q, S) < 1e-8);
  CHECK(projection_residual(S, Q) < 1e-8);
}

TEST_CASE("expressible products filter by the prolonged library") {
  auto lib = parse_all({"u", "u_x"});
  auto out = expressible_products(parse_all({"u", "u_x", "x"}), 2, lib);
  CHECK(out.size() == 5);
  for (const auto& e : out) CHECK_FALSE(e.contains(JetVar::independent(0)));
}

TEST_CASE("trivial group leaves the parameter space unconstrained") {
  auto lhs = parse_all({"u_t"});
  auto lib = parse_all({"u", "u_x", "u_xx", "u*u_x"});
  auto cb = derive_constraints(lhs, lib, lhs, lib);
  CHECK(cb.rank() == 4);
  CHECK(cb.P.rows() == 0);
  CHECK(max_abs(cb.Q * cb.Q.transpose() - MatrixXd::Identity(4, 4)) < 1e-12);
  auto id = identity_basis(2, 3);
  CHECK(id.rank() == 6);
}

TEST_CASE("constraint errors name the offending invariant") {
  auto lhs = parse_all({"u_t"});
  auto lib = parse_all({"u", "u_x"});
  try {
    derive_constraints(lhs, lib, lhs, parse_all({"x*u"}));
    FAIL("expected a constraint error");
  } catch (const ConstraintError& e) {
    CHECK(std::string(e.what()).find("x*u") != std::string::npos);
  }
  CHECK_THROWS_AS(derive_constraints(lhs, lib, parse_all({"u_x^2"}), lib), ConstraintError);
  CHECK_THROWS_AS(derive_constraints(lhs, parse_all({"u", "2*u"}), lhs, lib), ConstraintError);
}

TEST_CASE("phase-rotation constraint basis for reaction-diffusion") {
  const auto s = rd_setup();
  auto cb = derive_constraints(s.lhs, s.library, s.eta0, s.inv_library);
  CHECK(cb.q == 2);
  CHECK(cb.m == 19);
  CHECK(cb.rank() == 14);
  CHECK(cb.P.rows() == 38 - 14);
  for (int k = 0; k < cb.rank(); ++k) {
    const VectorXd w = vec(cb.slice(k));
    CHECK((cb.M * w).norm() < 1e-8 * w.norm());
  }
  CHECK(max_abs(cb.Q_raw * cb.Q_raw.transpose() - MatrixXd::Identity(14, 14)) < 1e-10);
  CHECK(max_abs(cb.Q * cb.Q.transpose() - MatrixXd::Identity(14, 14)) < 1e-10);
  CHECK(projection_residual(cb.Q, cb.Q_raw) < 1e-8);
  CHECK(projection_residual(cb.Q_raw, cb.Q) < 1e-8);
  CHECK(max_abs(cb.P * cb.Q.transpose()) < 1e-10);

  // the true model is symmetric: u_t = 0.1 lap u + (1 - A) u + A v, v_t = 0.1 lap v - A u + (1 - A) v
  MatrixXd W = MatrixXd::Zero(2, 19);
  W(0, 0) = 1; W(0, 5) = -1; W(0, 7) = -1; W(0, 6) = 1; W(0, 8) = 1; W(0, 11) = 0.1; W(0, 13) = 0.1;
  W(1, 1) = 1; W(1, 8) = -1; W(1, 6) = -1; W(1, 5) = -1; W(1, 7) = -1; W(1, 16) = 0.1; W(1, 18) = 0.1;
  CHECK((cb.M * vec(W)).norm() < 1e-10);
  // a lone u^2 term is not
  MatrixXd bad = MatrixXd::Zero(2, 19);
  bad(0, 2) = 1;
  CHECK((cb.M * vec(bad)).norm() > 1e-3);

  std::string text = cb.to_text();
  CHECK(text.rfind("14 2 19\n", 0) == 0);

  SUBCASE("hard mode always satisfies the constraint") {
    RegressionData d;
    d.G = gaussian(400, 19, 11);
    d.B = gaussian(400, 2, 12);
    StlsqOptions opt;
    opt.threshold = 0.05;
    opt.ridge = 0.1;
    auto r = stlsq(d, opt, &cb);
    CHECK((cb.M * vec(r.W)).norm() <= 1e-8 * std::max(1.0, r.W.norm()));
    CHECK(r.beta.size() == 14);
  }
  SUBCASE("relaxed mode approaches hard mode as the gamma ridge grows") {
    RegressionData d;
    d.G = gaussian(400, 19, 13);
    d.B = d.G * W.transpose() + 0.1 * gaussian(400, 2, 14);
    StlsqOptions opt;
    opt.threshold = 0.0;
    opt.ridge = 0.1;
    auto hard = stlsq(d, opt, &cb);
    auto soft = stlsq(d, opt, &cb, RelaxedOptions{1e6});
    CHECK(max_abs(hard.W - soft.W) < 1e-4);
    CHECK(max_abs(soft.W - soft.W_sym - soft.W_break) < 1e-12);
    CHECK_THROWS_AS(stlsq(d, opt, &cb, RelaxedOptions{0.05}), std::invalid_argument);
  }
  SUBCASE("constrained recovery on exact symmetric data") {
    RegressionData d;
    d.G = gaussian(400, 19, 15);
    d.B = d.G * W.transpose();
    StlsqOptions opt;
    opt.threshold = 0.05;
    opt.ridge = 0.1;
    auto r = stlsq(d, opt, &cb);
    CHECK(max_abs(r.W - W) < 1e-8);
  }
}

TEST_CASE("bump test functions") {
  TestFunction tf;
  tf.p = 2;
  tf.half_widths = {1.0};
  CHECK(tf.factor_derivative(0, 0.0, 0) == doctest::Approx(1.0));
  CHECK(tf.factor_derivative(0, 1.0, 0) == 0.0);
  CHECK(tf.factor_derivative(0, -1.0, 0) == 0.0);
  CHECK(tf.factor_derivative(0, 1.0, 1) == 0.0);
  CHECK(tf.factor_derivative(0, -1.0, 1) == 0.0);
  auto c = bump_derivative_poly(2, 1);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == -4.0);
  CHECK(c[2] == 0.0);
  CHECK(c[3] == 4.0);
  CHECK(bump_derivative_poly(2, 5) == std::vector<double>{0.0});
  tf.half_widths = {0.5};
  CHECK(tf.factor_derivative(0, 0.5, 1) == doctest::Approx((-4 * 0.5 + 4 * 0.125) / 0.5));
}

TEST_CASE("weak-form problem construction") {
  Grid g;
  g.axes = {{"t", 41, 0.0, 2.0, false}, {"x", 64, 0.0, 2 * M_PI, true}};
  FieldData fd;
  fd.grid = g;
  std::vector<double> c(g.size(), 3.0);
  fd.fields["u"] = c;

  WeakFormConfig cfg;
  cfg.n_test_functions = 10;
  auto sys = build_weak_problem(parse_all({"u_t"}), parse_all({"u", "u_x", "u^2"}), fd, cfg);
  CHECK(sys.G.rows() == 10);
  CHECK(max_abs(sys.B) < 1e-12);
  CHECK(max_abs(sys.G.col(0).array() - 3.0) < 1e-12);
  CHECK(max_abs(sys.G.col(1)) < 1e-12);

  cfg.n_test_functions = 0;
  CHECK_THROWS_AS(build_weak_problem(parse_all({"u_t"}), parse_all({"u"}), fd, cfg), std::invalid_argument);
  cfg.n_test_functions = 5;
  CHECK_THROWS_AS(build_weak_problem(parse_all({"u_t"}), parse_all({"u*u_x"}), fd, cfg), std::invalid_argument);
  cfg.half_width_fraction = 0.6;
  CHECK_THROWS_AS(make_test_functions(cfg, g), std::invalid_argument);

  auto wt = factor_weak_term(parse("-3*u_xx"));
  CHECK(wt.coefficient == -3.0);
  CHECK(wt.J[0] == 2);
}

TEST_CASE("integration by parts matches direct quadrature") {
  // u = sin(x) + x^2 / 10 on a non-periodic line; u_x is known analytically
  Grid g;
  g.axes = {{"x", 2001, -3.0, 3.0, false}};
  FieldData fd;
  fd.grid = g;
  std::vector<double> u(g.size()), ux(g.size());
  for (int i = 0; i < g.axes[0].n; ++i) {
    const double x = g.axes[0].coord(i);
    u[i] = std::sin(x) + x * x / 10;
    ux[i] = std::cos(x) + x / 5;
  }
  fd.fields["u"] = u;
  fd.fields["v"] = ux;
  WeakFormConfig cfg;
  cfg.n_test_functions = 8;
  cfg.half_width_fraction = 0.2;
  cfg.seed = 3;
  auto sys = build_weak_problem(parse_all({"v"}), parse_all({"u_x"}), fd, cfg);
  for (Eigen::Index k = 0; k < sys.G.rows(); ++k)
    CHECK(std::abs(sys.G(k, 0) - sys.B(k, 0)) < 1e-6 * std::abs(sys.B(k, 0)));
}

TEST_CASE("weak and strong recovery agree on clean reaction-diffusion") {
  ReactionDiffusion2DConfig rc;
  rc.n = 64;
  rc.t_final = 5.0;
  rc.dt_store = 0.02;  // keeps the strong-form time differences well inside the tolerance
  rc.with_test = false;
  auto fd = simulate_reaction_diffusion_2d(rc).train;
  const auto s = rd_setup();

  StlsqOptions opt;
  opt.threshold = 0.05;
  opt.ridge = 0.0;
  JetDataset jd = estimate_derivatives(fd, 2, DerivativeOptions{});
  auto strong = stlsq(build_regression(s.lhs, s.library, jd), opt);
  WeakFormConfig cfg;
  cfg.seed = 1;
  auto weak = stlsq(build_weak_problem(s.lhs, s.library, fd, cfg), opt);
  MESSAGE("strong W row 0: " << strong.W.row(0));
  MESSAGE("weak W row 0: " << weak.W.row(0));
  CHECK(max_abs(strong.W - weak.W) < 1e-2);
  CHECK(std::abs(strong.W(0, 11) - 0.1) < 5e-3);
  CHECK(std::abs(weak.W(0, 11) - 0.1) < 5e-3);
}
