#include <algorithm>
#include <cmath>

#include "symdisc/jetexpr.hpp"

namespace symdisc {

namespace {

using Mono = std::vector<std::pair<Expr, Rational>>;  // sorted by atom

struct Coef {
  double value = 0.0;
  double scale = 0.0;  // largest |contribution|, for cancellation detection
};

using Poly = std::map<Mono, Coef>;

Mono mono_mul(const Mono& a, const Mono& b) {
  Mono out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      Rational e = a[i].second + b[j].second;
      if (e.num != 0) out.emplace_back(a[i].first, e);
      ++i;
      ++j;
    }
  }
  return out;
}

void accumulate(Poly& p, const Mono& m, double c) {
  auto& slot = p[m];
  slot.value += c;
  slot.scale = std::max(slot.scale, std::abs(c));
}

void prune(Poly& p) {
  for (auto it = p.begin(); it != p.end();) {
    if (it->second.value == 0.0 || std::abs(it->second.value) <= 1e-13 * it->second.scale) it = p.erase(it);
    else ++it;
  }
}

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ma, ca] : a)
    for (const auto& [mb, cb] : b) accumulate(out, mono_mul(ma, mb), ca.value * cb.value);
  prune(out);
  return out;
}

Expr canonical_atom(const Expr& e);

Poly expand_poly(const Expr& e) {
  Poly p;
  switch (e.kind()) {
    case Expr::Kind::Const:
      if (e.value() != 0.0) accumulate(p, {}, e.value());
      return p;
    case Expr::Kind::Var:
    case Expr::Kind::Exp:
      accumulate(p, {{canonical_atom(e), Rational(1)}}, 1.0);
      return p;
    case Expr::Kind::Add:
      for (const auto& c : e.children())
        for (const auto& [m, cf] : expand_poly(c)) accumulate(p, m, cf.value);
      prune(p);
      return p;
    case Expr::Kind::Mul: {
      accumulate(p, {}, 1.0);
      for (const auto& c : e.children()) p = poly_mul(p, expand_poly(c));
      return p;
    }
    case Expr::Kind::Pow: {
      const Expr& b = e.base();
      Rational r = e.exponent();
      if (b.kind() == Expr::Kind::Var || b.kind() == Expr::Kind::Exp) {
        accumulate(p, {{canonical_atom(b), r}}, 1.0);
        return p;
      }
      Poly pb = expand_poly(b);
      if (r.is_integer() && r.num > 0) {
        Poly acc;
        accumulate(acc, {}, 1.0);
        Poly sq = pb;
        for (auto k = r.num; k > 0; k >>= 1) {
          if (k & 1) acc = poly_mul(acc, sq);
          if (k > 1) sq = poly_mul(sq, sq);
        }
        return acc;
      }
      if (pb.size() == 1) {
        const auto& [m, c] = *pb.begin();
        if (!r.is_integer() && c.value < 0)
          throw ExpansionError("non-integer power of negative coefficient in " + print(e));
        Mono mm;
        for (const auto& [a, ex] : m) mm.emplace_back(a, ex * r);
        accumulate(p, mm, std::pow(c.value, r.to_double()));
        return p;
      }
      throw ExpansionError("cannot expand power of compound base: " + print(e));
    }
  }
  return p;
}

Expr mono_expr(const Mono& m) {
  std::vector<Expr> fs;
  for (const auto& [a, ex] : m) fs.push_back(Expr::pow(a, ex));
  return Expr::mul(std::move(fs));
}

Expr canonical_atom(const Expr& e) {
  if (e.kind() != Expr::Kind::Exp) return e;
  return Expr::exp(expand(e.base()));
}

struct MonoKey {
  Rational degree;
  std::vector<std::pair<std::string, Rational>> names;
};

MonoKey key_of(const Mono& m) {
  MonoKey k;
  for (const auto& [a, ex] : m) {
    k.degree = k.degree + ex;
    k.names.emplace_back(print(a), ex);
  }
  std::sort(k.names.begin(), k.names.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  return k;
}

bool key_less(const MonoKey& a, const MonoKey& b) {
  if (a.degree != b.degree) return a.degree < b.degree;
  std::size_t n = std::min(a.names.size(), b.names.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.names[i].first != b.names[i].first) return a.names[i].first < b.names[i].first;
    if (a.names[i].second != b.names[i].second) return a.names[i].second > b.names[i].second;
  }
  return a.names.size() < b.names.size();
}

}  // namespace

std::vector<Term> expand_to_monomials(const Expr& e) {
  Poly p = expand_poly(e);
  prune(p);
  std::vector<std::pair<MonoKey, Term>> items;
  for (const auto& [m, c] : p) items.push_back({key_of(m), Term{c.value, mono_expr(m)}});
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return key_less(a.first, b.first); });
  std::vector<Term> out;
  out.reserve(items.size());
  for (auto& it : items) out.push_back(std::move(it.second));
  return out;
}

Expr resum(const std::vector<Term>& terms) {
  std::vector<Expr> ts;
  ts.reserve(terms.size());
  for (const auto& t : terms) ts.push_back(Expr::constant(t.coefficient) * t.monomial);
  return Expr::add(std::move(ts));
}

Expr expand(const Expr& e) {
  try {
    return resum(expand_to_monomials(e));
  } catch (const ExpansionError&) {
    return e;
  }
}

}  // namespace symdisc
