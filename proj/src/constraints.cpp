#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "symdisc/regress.hpp"

namespace symdisc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kExpressTol = 1e-9;

// Polynomial coordinates: each distinct monomial gets one axis.
class MonomialSpace {
 public:
  int id(const Expr& mono) {
    auto [it, inserted] = index_.try_emplace(mono, static_cast<int>(index_.size()));
    return it->second;
  }
  std::optional<int> find(const Expr& mono) const {
    auto it = index_.find(mono);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  int size() const { return static_cast<int>(index_.size()); }

 private:
  std::map<Expr, int> index_;
};

using Sparse = std::vector<std::pair<int, double>>;

Sparse register_terms(MonomialSpace& space, const Expr& e) {
  Sparse s;
  for (const auto& t : expand_to_monomials(e)) s.emplace_back(space.id(t.monomial), t.coefficient);
  return s;
}

VectorXd densify(const Sparse& s, int n) {
  VectorXd v = VectorXd::Zero(n);
  for (auto [i, c] : s) v[i] += c;
  return v;
}

std::vector<Expr> with_constant(const std::vector<Expr>& library) {
  std::vector<Expr> hat = library;
  if (std::none_of(library.begin(), library.end(), [](const Expr& e) { return e.is_const(); })) hat.emplace_back(1.0);
  return hat;
}

// span(library) extended with pairwise products that increase the rank.
struct TildeSpace {
  MonomialSpace monos;
  std::vector<Expr> exprs;
  std::vector<Sparse> coords;
  MatrixXd basis;  // monomials x |exprs|
  Eigen::ColPivHouseholderQR<MatrixXd> qr;

  explicit TildeSpace(const std::vector<Expr>& library) {
    std::vector<std::pair<Expr, Sparse>> cands;
    for (const auto& e : library) cands.emplace_back(e, register_terms(monos, e));
    const std::size_t m = library.size();
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = k; l < m; ++l) {
        Expr p = library[k] * library[l];
        try {
          cands.emplace_back(p, register_terms(monos, p));
        } catch (const ExpansionError&) {
        }
      }
    // incremental Gram-Schmidt in monomial coordinates
    const int n = monos.size();
    std::vector<VectorXd> ortho;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      VectorXd v = densify(cands[c].second, n);
      const double norm0 = v.norm();
      for (const auto& o : ortho) v -= o.dot(v) * o;
      for (const auto& o : ortho) v -= o.dot(v) * o;
      const bool independent = norm0 > 0 && v.norm() > kExpressTol * norm0;
      if (c < m && !independent)
        throw ConstraintError("library term '" + print(cands[c].first) + "' is linearly dependent on the others");
      if (!independent) continue;
      ortho.push_back(v / v.norm());
      exprs.push_back(cands[c].first);
      coords.push_back(cands[c].second);
    }
    basis.resize(n, static_cast<Eigen::Index>(exprs.size()));
    for (std::size_t j = 0; j < exprs.size(); ++j) basis.col(static_cast<Eigen::Index>(j)) = densify(coords[j], n);
    qr.compute(basis);
  }

  // Coordinates of e in span(exprs), or nullopt when e is not in the span.
  std::optional<VectorXd> express(const Expr& e) const {
    std::vector<Term> terms;
    try {
      terms = expand_to_monomials(e);
    } catch (const ExpansionError&) {
      return std::nullopt;
    }
    VectorXd v = VectorXd::Zero(basis.rows());
    for (const auto& t : terms) {
      auto i = monos.find(t.monomial);
      if (!i) {
        if (t.coefficient != 0.0) return std::nullopt;
        continue;
      }
      v[*i] += t.coefficient;
    }
    VectorXd c = qr.solve(v);
    if ((basis * c - v).norm() > kExpressTol * std::max(1.0, v.norm())) return std::nullopt;
    return c;
  }
};

MatrixXd null_space(const MatrixXd& A, double rel_tol) {
  const Eigen::Index n = A.cols();
  if (A.rows() == 0) return MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s[rank] > rel_tol * std::max(smax, 1e-300)) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

}  // namespace

MatrixXd rref(const MatrixXd& A, double tol) {
  MatrixXd R = A;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < R.cols() && row < R.rows(); ++col) {
    Eigen::Index piv;
    const double best = R.col(col).tail(R.rows() - row).cwiseAbs().maxCoeff(&piv);
    if (best < tol) continue;
    piv += row;
    R.row(row).swap(R.row(piv));
    R.row(row) /= R(row, col);
    for (Eigen::Index i = 0; i < R.rows(); ++i)
      if (i != row && R(i, col) != 0.0) R.row(i) -= R(i, col) * R.row(row);
    ++row;
  }
  MatrixXd out = R.topRows(row);
  out = out.unaryExpr([tol](double x) { return std::abs(x) < tol ? 0.0 : x; });
  return out;
}

MatrixXd sparsify_basis(const MatrixXd& Q, double tol) {
  MatrixXd R = rref(Q, tol);
  std::vector<VectorXd> rows;
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    VectorXd v = R.row(i).transpose();
    for (const auto& o : rows) v -= o.dot(v) * o;
    const double n = v.norm();
    if (n < tol) continue;
    rows.push_back(v / n);
  }
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), Q.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

double projection_residual(const MatrixXd& A, const MatrixXd& B) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    VectorXd a = A.row(i).transpose();
    VectorXd r = B.rows() ? VectorXd(a - B.transpose() * (B * a)) : a;
    worst = std::max(worst, r.norm());
  }
  return worst;
}

ConstraintBasis identity_basis(int q, int m) {
  ConstraintBasis cb;
  cb.q = q;
  cb.m = m;
  cb.Q = MatrixXd::Identity(q * m, q * m);
  cb.Q_raw = cb.Q;
  cb.P = MatrixXd(0, q * m);
  cb.M = MatrixXd(0, q * m);
  cb.description = "trivial group: unconstrained";
  return cb;
}

std::vector<Expr> expressible_products(const std::vector<Expr>& invariants, int degree,
                                       const std::vector<Expr>& library) {
  if (degree < 0) throw std::invalid_argument("expressible_products: negative degree");
  const TildeSpace tilde(library);
  std::vector<Expr> out;
  // multisets of invariant indices, nondecreasing
  std::vector<std::pair<Expr, int>> frontier{{Expr(1.0), 0}};
  for (int d = 0; d <= degree; ++d) {
    std::vector<std::pair<Expr, int>> next;
    for (const auto& [e, start] : frontier) {
      if (tilde.express(e)) out.push_back(e);
      if (d == degree) continue;
      for (int j = start; j < static_cast<int>(invariants.size()); ++j)
        next.emplace_back(d == 0 ? invariants[j] : e * invariants[j], j);
    }
    frontier = std::move(next);
  }
  return out;
}

ConstraintBasis derive_constraints(const std::vector<Expr>& lhs, const std::vector<Expr>& library,
                                   const std::vector<Expr>& eta0, const std::vector<Expr>& inv_library,
                                   double sv_threshold) {
  const int q = static_cast<int>(lhs.size()), m = static_cast<int>(library.size());
  if (q == 0 || m == 0) throw ConstraintError("empty lhs or library");
  if (static_cast<int>(eta0.size()) != q) throw ConstraintError("need one LHS invariant per lhs term");

  ConstraintBasis cb;
  cb.q = q;
  cb.m = m;
  cb.library_hat = with_constant(library);
  const int mh = static_cast<int>(cb.library_hat.size());

  const TildeSpace tilde(library);
  cb.library_tilde = tilde.exprs;
  const int mt = static_cast<int>(cb.library_tilde.size());

  auto express = [&](const Expr& e, const std::string& what) {
    auto c = tilde.express(e);
    if (!c) throw ConstraintError(what + " '" + print(e) + "' is not in the span of the library and its products");
    return *c;
  };

  cb.Gamma.resize(mh);
  for (int k = 0; k < mh; ++k) {
    cb.Gamma[k].resize(m, mt);
    for (int l = 0; l < m; ++l)
      cb.Gamma[k].row(l) = express(cb.library_hat[k] * library[l], "product").transpose();
  }
  cb.S_tilde.resize(static_cast<Eigen::Index>(inv_library.size()), mt);
  for (std::size_t j = 0; j < inv_library.size(); ++j)
    cb.S_tilde.row(static_cast<Eigen::Index>(j)) = express(inv_library[j], "invariant library entry").transpose();

  // T: eta0_i = sum_{j,k} T_i(j,k) library_hat_k lhs_j, solved in monomial coordinates
  {
    MonomialSpace space;
    std::vector<Sparse> cols;
    try {
      for (int j = 0; j < q; ++j)
        for (int k = 0; k < mh; ++k) cols.push_back(register_terms(space, cb.library_hat[k] * lhs[j]));
    } catch (const ExpansionError& e) {
      throw ConstraintError(std::string("cannot expand lhs products: ") + e.what());
    }
    std::vector<Sparse> targets;
    for (int i = 0; i < q; ++i) {
      try {
        targets.push_back(register_terms(space, eta0[i]));
      } catch (const ExpansionError& e) {
        throw ConstraintError("LHS invariant '" + print(eta0[i]) + "' is not polynomial: " + e.what());
      }
    }
    const int n = space.size();
    MatrixXd A(n, q * mh);
    for (int c = 0; c < q * mh; ++c) A.col(c) = densify(cols[c], n);
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    cb.T.resize(q);
    for (int i = 0; i < q; ++i) {
      VectorXd b = densify(targets[i], n);
      VectorXd t = cod.solve(b);
      if ((A * t - b).norm() > kExpressTol * std::max(1.0, b.norm()))
        throw ConstraintError("LHS invariant '" + print(eta0[i]) + "' is not linear in the lhs terms");
      cb.T[i].resize(q, mh);
      for (int j = 0; j < q; ++j)
        for (int k = 0; k < mh; ++k) cb.T[i](j, k) = t[j * mh + k];
    }
  }

  const MatrixXd N = null_space(cb.S_tilde, 1e-10);
  const int d = static_cast<int>(N.cols());
  std::vector<MatrixXd> GN(mh);
  for (int k = 0; k < mh; ++k) GN[k] = cb.Gamma[k] * N;  // m x d
  cb.M = MatrixXd::Zero(q * d, q * m);
  for (int i = 0; i < q; ++i)
    for (int s = 0; s < d; ++s)
      for (int r = 0; r < q; ++r)
        for (int l = 0; l < m; ++l) {
          double acc = 0.0;
          for (int k = 0; k < mh; ++k) acc += cb.T[i](r, k) * GN[k](l, s);
          cb.M(i * d + s, r * m + l) = acc;
        }

  const int n = q * m;
  if (cb.M.rows() == 0) {
    cb.Q_raw = MatrixXd::Identity(n, n);
    cb.singular_values = VectorXd(0);
  } else {
    Eigen::JacobiSVD<MatrixXd> svd(cb.M, Eigen::ComputeFullV);
    cb.singular_values = svd.singularValues();
    std::vector<int> qi, pi;
    for (int j = 0; j < n; ++j)
      (j >= cb.singular_values.size() || cb.singular_values[j] < sv_threshold ? qi : pi).push_back(j);
    cb.Q_raw = svd.matrixV()(Eigen::all, qi).transpose();
    cb.P = svd.matrixV()(Eigen::all, pi).transpose();
  }
  if (cb.P.size() == 0) cb.P = MatrixXd(0, n);
  cb.Q = cb.Q_raw.rows() ? sparsify_basis(cb.Q_raw) : cb.Q_raw;

  std::ostringstream desc;
  desc << "symmetric subspace of dimension " << cb.Q.rows() << " out of " << n << " (|library_tilde| = " << mt
       << ", invariant-library null space " << d << ")";
  cb.description = desc.str();
  return cb;
}

}  // namespace symdisc
