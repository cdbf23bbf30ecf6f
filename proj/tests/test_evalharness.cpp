#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "symdisc/evalharness.hpp"

using namespace symdisc;

namespace {

DiscoveredEquation jet_equation(const std::string& lhs, const std::string& rhs) {
  DiscoveredEquation e;
  e.lhs = parse(lhs);
  e.rhs = parse(rhs);
  return e;
}

DiscoveredEquation invariant_equation(const std::string& lhs, const std::string& rhs, const InvariantSet& iset) {
  DiscoveredEquation e;
  const auto names = iset.names();
  e.lhs = parse(lhs, names);
  e.rhs = parse(rhs, names);
  e.in_invariants = true;
  e.symbols = {names.begin(), names.end()};
  const auto ex = expand_to_original(e, iset);
  e.expanded = ex.expr;
  e.cleared = ex.cleared;
  return e;
}

bool verdict(const DiscoveredEquation& e, const std::string& truth) {
  return match_system({e}, builtin_truth(truth), 7).correct;
}

FieldData small_rd(bool test) {
  ReactionDiffusion2DConfig c;
  c.n = 64;
  c.t_final = 10.0;
  c.dt_store = 0.1;
  auto r = simulate_reaction_diffusion_2d(c);
  return test ? *r.test : r.train;
}

}  // namespace

TEST_CASE("boussinesq equation samples get the published verdicts") {
  const auto iset = builtin_catalog("scaling-translation");
  const auto si = invariant_equation("eta_0_2", "-1.00 - 1.00*eta_4_0 - 1.00*eta_0_0*eta_2_0", iset);
  CHECK(si.cleared);
  CHECK(verdict(si, "boussinesq"));
  CHECK(verdict(si, "boussinesq-invariant"));

  auto si_gp = invariant_equation("eta_0_2", "-(1.00*eta_0_0*eta_2_0 + 1.00*eta_4_0 + 1)", iset);
  CHECK(verdict(si_gp, "boussinesq"));

  CHECK(verdict(jet_equation("u_tt", "-1.01*u_xxxx - 0.99*u_x^2 - 0.98*u*u_xx"), "boussinesq"));
  CHECK_FALSE(verdict(jet_equation("u_tt", "-1.01*u_xxxx - 0.79*u*u_xx"), "boussinesq"));

  // a few more rows of the same table
  CHECK_FALSE(verdict(jet_equation("u_tt", "-u*u_xx - u_xxxx"), "boussinesq"));
  CHECK(verdict(jet_equation("u_tt", "-u*u_xx - u_x^2 - 1.00*u_xxxx"), "boussinesq"));
  CHECK(verdict(invariant_equation("eta_0_2", "-1.05*eta_0_0*eta_2_0 - 1.00*eta_4_0 - 0.96", iset), "boussinesq"));
  CHECK_FALSE(verdict(
      invariant_equation("eta_0_2", "-0.81*eta_0_0*eta_2_0 - 0.40*eta_0_0 - 0.98*eta_4_0 - 0.90", iset), "boussinesq"));
}

TEST_CASE("every builtin truth matches itself") {
  for (const std::string name : {"boussinesq", "boussinesq-invariant", "rd", "rd-invariant", "rd-unequal(0.1)",
                                 "rd-forced(0.05)", "darcy", "darcy-invariant", "rd-3d"}) {
    CAPTURE(name);
    const auto g = builtin_truth(name);
    REQUIRE(g.equations.size() == (name.rfind("rd", 0) == 0 && name != "rd-3d" ? 2u : 1u));
    for (std::size_t i = 0; i < g.equations.size(); ++i) {
      const auto r = match_terms(g.equations[i], g.equations[i], 11);
      CHECK(r.correct);
      CHECK(r.matched == r.truth_terms);
      for (const auto& t : expand_to_monomials(g.equations[i])) CHECK(t.coefficient != 0.0);
    }
  }
  CHECK(expand_to_monomials(builtin_truth("rd-forced(0.05)").equations[0]).size() == 9);
  CHECK(expand_to_monomials(builtin_truth("rd").equations[0]).size() == 8);
  CHECK_THROWS_AS(builtin_truth("kdv"), std::invalid_argument);
}

TEST_CASE("matching ignores a global rescaling") {
  const auto truth = builtin_truth("boussinesq").equations[0];
  const Expr e = parse("u_tt + 0.98*u*u_xx + 1.02*u_x^2 + u_xxxx");
  for (double s : {1.0, -1.0, 3.7, -0.002, 1e4}) {
    CAPTURE(s);
    MatchOptions o;
    o.coefficient_tol = 0.05;
    CHECK(match_terms(Expr(s) * e, truth, 3, o).correct);
  }
}

TEST_CASE("small terms are filtered, larger ones are not") {
  const auto truth = builtin_truth("boussinesq").equations[0];
  CHECK(match_terms(truth + parse("0.005*u^2"), truth, 1).correct);
  CHECK_FALSE(match_terms(truth + parse("0.02*u^2"), truth, 1).correct);
  const auto r = match_terms(parse("u_tt + u*u_xx + u_xxxx"), truth, 1);
  CHECK_FALSE(r.correct);
  CHECK(r.matched == 3);
  CHECK(r.discovered_terms == 3);
  CHECK(r.truth_terms == 4);
}

TEST_CASE("coefficient tolerance") {
  const auto truth = builtin_truth("rd-unequal(0.1)").equations[1];  // d2 = 0.2
  const Expr near = parse("v_t - 0.2*v_xx - 0.19*v_yy") + (truth - parse("v_t - 0.2*v_xx - 0.2*v_yy"));
  const Expr far = parse("v_t - 0.1*v_xx - 0.1*v_yy") + (truth - parse("v_t - 0.2*v_xx - 0.2*v_yy"));
  MatchOptions o;
  CHECK(match_terms(far, truth, 2, o).correct);  // terms alone agree
  o.coefficient_tol = 0.25;
  CHECK(match_terms(near, truth, 2, o).correct);
  CHECK_FALSE(match_terms(far, truth, 2, o).correct);
}

TEST_CASE("expansion failure is flagged") {
  const auto truth = builtin_truth("boussinesq").equations[0];
  const auto r = match_terms(parse("u_tt + (u + u_x)^(1/2)"), truth, 1);
  CHECK_FALSE(r.correct);
  CHECK(r.expansion_failed);
}

TEST_CASE("system matching uses the designated left-hand sides") {
  std::vector<DiscoveredEquation> eqs = {
      jet_equation("v_t", "0.1*v_xx + 0.1*v_yy - u^3 - u*v^2 + v - u^2*v - v^3"),
      jet_equation("u_t", "0.1*u_xx + 0.1*u_yy + u - u^3 - u*v^2 + u^2*v + v^3")};
  for (auto& e : eqs) e.expanded = expand(e.residual());
  CHECK(match_system(eqs, builtin_truth("rd"), 5).correct);
  eqs.pop_back();
  CHECK_FALSE(match_system(eqs, builtin_truth("rd"), 5).correct);

  const auto rd = builtin_catalog("phase-rotation-2");
  std::vector<DiscoveredEquation> inv = {invariant_equation("I_t", "0.1*I_xx + 0.1*I_yy + A - A^2", rd),
                                         invariant_equation("E_t", "0.1*E_xx + 0.1*E_yy - A^2", rd)};
  CHECK(match_system(inv, builtin_truth("rd-invariant"), 5).correct);
  CHECK_FALSE(match_system(eqs, builtin_truth("rd-invariant"), 5).correct);
}

TEST_CASE("prediction error of the true reaction-diffusion system is small") {
  const auto test = small_rd(true);
  std::vector<DiscoveredEquation> truth = {
      jet_equation("u_t", "0.1*u_xx + 0.1*u_yy + u - u^3 - u*v^2 + u^2*v + v^3"),
      jet_equation("v_t", "0.1*v_xx + 0.1*v_yy - u^3 - u*v^2 + v - u^2*v - v^3")};
  const double pe = prediction_error(truth, "rd-2d", test);
  CHECK(pe <= 0.01);

  auto off = truth;
  off[0].rhs = parse("0.12*u_xx + 0.12*u_yy + u - u^3 - u*v^2 + u^2*v + v^3");
  CHECK(prediction_error(off, "rd-2d", test) > pe);

  // the implicit form C(z) u_t = ... is solved pointwise
  auto scaled = truth;
  scaled[1].lhs = parse("2*v_t");
  scaled[1].rhs = Expr(2.0) * scaled[1].rhs;
  CHECK(prediction_error(scaled, "rd-2d", test) == doctest::Approx(pe).epsilon(1e-6));
}

TEST_CASE("unsolvable or empty equations give NaN") {
  const auto test = small_rd(true);
  std::vector<DiscoveredEquation> empty = {jet_equation("0", "0"), jet_equation("0", "0")};
  CHECK(std::isnan(prediction_error(empty, "rd-2d", test)));
  std::vector<DiscoveredEquation> one = {jet_equation("u_t", "u")};
  CHECK(std::isnan(prediction_error(one, "rd-2d", test)));
  std::vector<DiscoveredEquation> nonlinear = {jet_equation("u_t^2", "u"), jet_equation("v_t", "v")};
  CHECK(std::isnan(prediction_error(nonlinear, "rd-2d", test)));
  std::vector<DiscoveredEquation> blowup = {jet_equation("u_t", "u^3 + v^3"), jet_equation("v_t", "u^3 + v^3")};
  CHECK(std::isnan(prediction_error(blowup, "rd-2d", test)));
  CHECK_THROWS_AS(prediction_error(one, "kdv", test), std::invalid_argument);
}

TEST_CASE("boussinesq prediction from the true equation") {
  BoussinesqConfig c;
  c.n = 128;
  c.t_final = 4.0;
  c.dt_store = 0.1;
  const auto r = simulate_boussinesq(c);
  std::vector<DiscoveredEquation> eq = {jet_equation("u_tt", "-u*u_xx - u_x^2 - u_xxxx")};
  CHECK(prediction_error(eq, "boussinesq", *r.test) < 1e-3);
  eq[0].rhs = parse("-u*u_xx - 0.9*u_x^2 - u_xxxx");
  CHECK(prediction_error(eq, "boussinesq", *r.test) > 1e-3);
}

TEST_CASE("darcy residual mode") {
  DarcyConfig c;
  c.n = 32;
  c.init = DarcyInit::Constant;
  const auto fd = simulate_darcy(c).train;
  std::vector<DiscoveredEquation> eq = {jet_equation("u_xx", "-u_yy + 8*x*u_x + 8*y*u_y - exp(4*x^2 + 4*y^2)")};
  eq[0].expanded = eq[0].residual();
  const double good = prediction_error(eq, "darcy", fd);
  eq[0].rhs = parse("-u_yy");
  eq[0].expanded.reset();
  const double bad = prediction_error(eq, "darcy", fd);
  CHECK(good < 0.1 * bad);
  eq[0].lhs = parse("u_yy");  // no u_xx coefficient to normalize by
  eq[0].rhs = parse("u");
  CHECK(std::isnan(prediction_error(eq, "darcy", fd)));
}

TEST_CASE("quartiles skip non-finite values") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto q = quartiles({4.0, nan, 1.0, 3.0, 2.0, 5.0});
  CHECK(q[0] == doctest::Approx(2.0));
  CHECK(q[1] == doctest::Approx(3.0));
  CHECK(q[2] == doctest::Approx(4.0));
  q = quartiles({nan});
  CHECK(std::isnan(q[1]));
}

TEST_CASE("experiment spec parsing") {
  nlohmann::json j = {{"system", "rd-2d"},
                      {"truth", "rd-unequal({eps})"},
                      {"epsilon_mode", "unequal"},
                      {"methods", {{{"name", "a"}, {"discovery", {{"backend", "sindy"}}}}}}};
  const auto s = ExperimentSpec::from_json(j);
  CHECK(s.n_trials == 20);
  CHECK(s.methods[0].name == "a");
  j["bogus"] = 1;
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), std::invalid_argument);
  j.erase("bogus");
  j["epsilon_mode"] = "sideways";
  CHECK_THROWS_AS(ExperimentSpec::from_json(j), std::invalid_argument);
}

TEST_CASE("experiments are reproducible and zero trials give an empty table") {
  nlohmann::json j = {
      {"system", "boussinesq"},
      {"truth", "boussinesq"},
      {"noise_levels", {0.0, 0.01}},
      {"n_trials", 2},
      {"seed", 42},
      {"prediction_error", true},
      {"methods",
       {{{"name", "si"},
         {"discovery", {{"backend", "sindy"}, {"symmetry", "scaling-translation"}, {"subsample", 0.02}, {"fd_accuracy", 6}}}},
        {{"name", "raw"},
         {"discovery", {{"backend", "sindy"}, {"library", "boussinesq-pysindy"}, {"subsample", 0.02}, {"fd_accuracy", 6}}}}}}};
  auto spec = ExperimentSpec::from_json(j);
  const auto a = run_experiment(spec);
  const auto b = run_experiment(spec);
  REQUIRE(a.trials.size() == 8);
  REQUIRE(a.summary.size() == 4);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].correct == b.trials[i].correct);
    CHECK(a.trials[i].seed == b.trials[i].seed);
    REQUIRE(a.trials[i].discovered.size() == b.trials[i].discovered.size());
    for (std::size_t k = 0; k < a.trials[i].discovered.size(); ++k)
      CHECK(print(a.trials[i].discovered[k].rhs) == print(b.trials[i].discovered[k].rhs));
    CHECK(a.trials[i].error.empty());
  }
  for (const auto& row : a.summary) {
    CAPTURE(row.method);
    CHECK(row.n_trials == 2);
    if (row.method == "si") {
      if (row.noise == 0.0) CHECK(row.sp == 1.0);
      CHECK(row.complexity == 105);
    } else {
      CHECK(row.sp == 0.0);
      CHECK(row.complexity == 15);
    }
  }

  const auto dir = std::filesystem::temp_directory_path() / "symdisc_experiment_test";
  write_experiment(a, dir.string());
  for (const char* f : {"summary.csv", "trials.csv", "curves.csv"}) {
    std::ifstream in(dir / f);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("method,", 0) == 0);
  }
  std::filesystem::remove_all(dir);

  spec.n_trials = 0;
  const auto none = run_experiment(spec);
  CHECK(none.summary.empty());
  CHECK(none.trials.empty());
}
