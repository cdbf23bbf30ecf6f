#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "symdisc/symmetry.hpp"

namespace symdisc {

namespace {

constexpr int X = 0, Y = 1, Z = 2, T = 3;

Expr ind(int i) { return Expr::var(JetVar::independent(i)); }

Expr dep(int a, std::initializer_list<int> axes = {}) {
  MultiIndex J{};
  for (int i : axes) J[i]++;
  return Expr::var(JetVar::dependent(a, J));
}

Expr dep(int a, const MultiIndex& J) { return Expr::var(JetVar::dependent(a, J)); }

std::string suffix(const MultiIndex& J) {
  std::string s;
  for (int i = 0; i < kMaxIndependent; ++i) s.append(J[i], kIndependentNames[i]);
  return s;
}

}  // namespace

InvariantSet so2_space_catalog() {
  InvariantSet s;
  s.name = "so2-space";
  s.space = {{X, Y}, {0}};
  // v = y d_x - x d_y
  s.generators.push_back(VectorField{s.space, {ind(Y), -ind(X)}, {Expr::constant(0.0)}});
  const Expr x = ind(X), y = ind(Y), u = dep(0);
  const Expr ux = dep(0, {X}), uy = dep(0, {Y});
  const Expr uxx = dep(0, {X, X}), uxy = dep(0, {X, Y}), uyy = dep(0, {Y, Y});
  s.invariants = {
      {"eta1", Expr::constant(0.5) * (x * x + y * y)},
      {"eta2", u},
      {"zeta1", x * uy - y * ux},
      {"zeta2", x * ux + y * uy},
      {"lap", uxx + uyy},
      {"hess2", uxx * uxx + Expr::constant(2.0) * uxy * uxy + uyy * uyy},
      {"theta", x * x * uxx + y * y * uyy + Expr::constant(2.0) * x * y * uxy},
  };
  return s;
}

InvariantSet scaling_translation_catalog(Rational a, Rational b, int order, double guard) {
  if (a == b) throw std::invalid_argument("scaling weights a and b must differ");
  InvariantSet s;
  std::ostringstream nm;
  nm << "scaling-translation(" << a.str() << "," << b.str() << ")";
  s.name = nm.str();
  s.space = {{X, T}, {0}};
  const Expr x = ind(X), t = ind(T), u = dep(0);
  // t d_t + a x d_x + b u d_u, d_x, d_t   (xi ordered as x, t)
  s.generators.push_back(VectorField{s.space, {Expr::constant(a.to_double()) * x, t}, {Expr::constant(b.to_double()) * u}});
  s.generators.push_back(VectorField{s.space, {Expr::constant(1.0), Expr::constant(0.0)}, {Expr::constant(0.0)}});
  s.generators.push_back(VectorField{s.space, {Expr::constant(0.0), Expr::constant(1.0)}, {Expr::constant(0.0)}});
  const Expr ux = dep(0, {X});
  for (int n = 0; n <= order; ++n) {
    for (int alpha = n; alpha >= 0; --alpha) {
      const int beta = n - alpha;
      if (alpha == 1 && beta == 0) continue;
      MultiIndex J{};
      J[X] = static_cast<std::uint8_t>(alpha);
      J[T] = static_cast<std::uint8_t>(beta);
      Rational e = (b - a * Rational(alpha) - Rational(beta)) * Rational((a - b).den, (a - b).num);
      s.invariants.push_back({"eta_" + std::to_string(alpha) + "_" + std::to_string(beta), dep(0, J) * Expr::pow(ux, e)});
    }
  }
  s.guards.push_back({ux, guard});
  s.lhs_candidates = {"eta_0_2"};
  return s;
}

InvariantSet phase_rotation_catalog(int order) {
  InvariantSet s;
  s.name = "phase-rotation-2";
  s.space = {{X, Y, T}, {0, 1}};
  const Expr u = dep(0), v = dep(1);
  // u d_v - v d_u
  s.generators.push_back(VectorField{s.space, {Expr::constant(0.0), Expr::constant(0.0), Expr::constant(0.0)}, {-v, u}});
  s.invariants = {{"t", ind(T)}, {"x", ind(X)}, {"y", ind(Y)}, {"A", u * u + v * v}};
  std::vector<NamedInvariant> I, E;
  for (const auto& J : s.space.multi_indices(order)) {
    if (multi_index_order(J) == 0) continue;
    I.push_back({"I_" + suffix(J), u * dep(0, J) + v * dep(1, J)});
    E.push_back({"E_" + suffix(J), -(v * dep(0, J)) + u * dep(1, J)});
  }
  s.invariants.insert(s.invariants.end(), I.begin(), I.end());
  s.invariants.insert(s.invariants.end(), E.begin(), E.end());
  s.lhs_candidates = {"I_t", "E_t"};
  return s;
}

InvariantSet so3_space_catalog() {
  InvariantSet s;
  s.name = "so3-space";
  s.space = {{X, Y, Z, T}, {0}};
  const Expr x = ind(X), y = ind(Y), z = ind(Z), zero = Expr::constant(0.0);
  // rotations about x, y, z axes; time untouched
  s.generators.push_back(VectorField{s.space, {zero, -z, y, zero}, {zero}});
  s.generators.push_back(VectorField{s.space, {z, zero, -x, zero}, {zero}});
  s.generators.push_back(VectorField{s.space, {-y, x, zero, zero}, {zero}});
  const int ax[3] = {X, Y, Z};
  Expr g[3];
  Expr H[3][3];
  for (int i = 0; i < 3; ++i) {
    g[i] = dep(0, {ax[i]});
    for (int j = 0; j < 3; ++j) H[i][j] = dep(0, {ax[i], ax[j]});
  }
  std::vector<Expr> grad2, lap, gHg, trH2;
  for (int i = 0; i < 3; ++i) {
    grad2.push_back(g[i] * g[i]);
    lap.push_back(H[i][i]);
    for (int j = 0; j < 3; ++j) {
      gHg.push_back(g[i] * H[i][j] * g[j]);
      trH2.push_back(H[i][j] * H[j][i]);
    }
  }
  std::vector<std::vector<Expr>> Hm(3, std::vector<Expr>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) Hm[i][j] = H[i][j];
  s.invariants = {
      {"u", dep(0)},
      {"grad2", Expr::add(grad2)},
      {"lap", Expr::add(lap)},
      {"gHg", Expr::add(gHg)},
      {"trH2", Expr::add(trH2)},
      {"detH", expand(determinant(Hm))},
  };
  return s;
}

InvariantSet builtin_catalog(const std::string& name) {
  if (name == "so2-space") return so2_space_catalog();
  if (name == "phase-rotation-2") return phase_rotation_catalog(2);
  if (name == "so3-space") return so3_space_catalog();
  if (name == "scaling-translation") return scaling_translation_catalog(Rational(1, 2), Rational(-1), 4);
  static const std::regex re(R"(scaling-translation\(\s*([^,]+?)\s*,\s*([^)]+?)\s*\)(?::(\d+))?)");
  std::smatch m;
  if (std::regex_match(name, m, re)) {
    auto to_rat = [](const std::string& s) {
      Expr e = parse(s);
      if (!e.is_const()) throw std::invalid_argument("scaling weight must be a constant: " + s);
      return Rational::from_double(e.value());
    };
    int order = m[3].matched ? std::stoi(m[3].str()) : 4;
    return scaling_translation_catalog(to_rat(m[1].str()), to_rat(m[2].str()), order);
  }
  throw std::invalid_argument("unknown symmetry catalog '" + name + "'");
}

InvariantSet parse_symmetry_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  InvariantSet s;
  s.name = j.value("name", std::string("custom"));
  auto axis_index = [](const std::string& n, bool independent) {
    if (n.size() == 1) {
      const char* names = independent ? kIndependentNames : kDependentNames;
      int count = independent ? kMaxIndependent : kMaxDependent;
      for (int i = 0; i < count; ++i)
        if (names[i] == n[0]) return i;
    }
    throw std::invalid_argument("unknown " + std::string(independent ? "independent" : "dependent") +
                                " variable '" + n + "'");
  };
  for (const auto& n : j.at("independent")) s.space.independents.push_back(axis_index(n.get<std::string>(), true));
  for (const auto& n : j.at("dependent")) s.space.dependents.push_back(axis_index(n.get<std::string>(), false));
  for (const auto& g : j.value("generators", nlohmann::json::array())) {
    VectorField v;
    v.space = s.space;
    for (const auto& e : g.at("xi")) v.xi.push_back(parse(e.get<std::string>()));
    for (const auto& e : g.at("phi")) v.phi.push_back(parse(e.get<std::string>()));
    v.validate();
    s.generators.push_back(v);
  }
  for (const auto& inv : j.at("invariants"))
    s.invariants.push_back({inv.at("name").get<std::string>(), parse(inv.at("expr").get<std::string>())});
  for (const auto& g : j.value("guards", nlohmann::json::array()))
    s.guards.push_back({parse(g.at("expr").get<std::string>()), g.at("min_abs").get<double>()});
  for (const auto& l : j.value("lhs", nlohmann::json::array())) {
    std::string n = l.get<std::string>();
    if (!s.has(n)) throw std::invalid_argument("LHS candidate '" + n + "' is not a listed invariant");
    s.lhs_candidates.push_back(n);
  }
  return s;
}

InvariantSet load_symmetry(const std::string& catalog_or_path) {
  if (std::filesystem::is_regular_file(catalog_or_path)) {
    std::ifstream in(catalog_or_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_symmetry_json(ss.str());
  }
  return builtin_catalog(catalog_or_path);
}

}  // namespace symdisc
