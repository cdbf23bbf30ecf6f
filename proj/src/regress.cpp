#include "symdisc/regress.hpp"

#include <cmath>
#include <sstream>

namespace symdisc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

RegressionData build_regression(const std::vector<Expr>& lhs, const std::vector<Expr>& library,
                                const JetDataset& data) {
  const EvalTable t = data.table();
  const Eigen::Index n = t.rows();
  MatrixXd G(n, static_cast<Eigen::Index>(library.size()));
  MatrixXd B(n, static_cast<Eigen::Index>(lhs.size()));
  for (std::size_t j = 0; j < library.size(); ++j) G.col(static_cast<Eigen::Index>(j)) = evaluate(library[j], t);
  for (std::size_t i = 0; i < lhs.size(); ++i) B.col(static_cast<Eigen::Index>(i)) = evaluate(lhs[i], t);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < n; ++r)
    if (G.row(r).allFinite() && B.row(r).allFinite()) keep.push_back(r);
  RegressionData out;
  out.dropped_rows = static_cast<std::size_t>(n) - keep.size();
  out.G = G(keep, Eigen::all);
  out.B = B(keep, Eigen::all);
  return out;
}

Eigen::MatrixXd ConstraintBasis::slice(int k) const {
  MatrixXd w(q, m);
  for (int i = 0; i < q; ++i)
    for (int l = 0; l < m; ++l) w(i, l) = Q(k, i * m + l);
  return w;
}

std::string ConstraintBasis::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << rank() << " " << q << " " << m << "\n";
  for (int k = 0; k < rank(); ++k) {
    for (Eigen::Index c = 0; c < Q.cols(); ++c) out << (c ? " " : "") << Q(k, c);
    out << "\n";
  }
  return out.str();
}

namespace {

struct LoopResult {
  VectorXd coef;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
};

// Solves min |D_A x - z|^2 + |Pen_A x|^2 restricted to the active columns.
VectorXd solve_active(const MatrixXd& D, const VectorXd& z, const MatrixXd& pen, const std::vector<int>& active,
                      bool& deficient) {
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  const Eigen::Index rows = D.rows() + pen.rows();
  MatrixXd A(rows, k);
  A.topRows(D.rows()) = D(Eigen::all, active);
  if (pen.rows() > 0) A.bottomRows(pen.rows()) = pen(Eigen::all, active);
  VectorXd rhs = VectorXd::Zero(rows);
  rhs.head(D.rows()) = z;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  if (cod.rank() < k) deficient = true;
  return cod.solve(rhs);
}

LoopResult threshold_loop(const MatrixXd& D, const VectorXd& z, const MatrixXd& pen, const MatrixXd& pen_unbias,
                          std::vector<int> active, const StlsqOptions& opt) {
  LoopResult res;
  res.coef = VectorXd::Zero(D.cols());
  for (int it = 1; it <= std::max(1, opt.max_iters) && !active.empty(); ++it) {
    VectorXd x = solve_active(D, z, pen, active, res.rank_deficient);
    res.iterations = it;
    std::vector<int> kept;
    res.coef.setZero();
    for (std::size_t a = 0; a < active.size(); ++a)
      if (std::abs(x[static_cast<Eigen::Index>(a)]) >= opt.threshold) {
        kept.push_back(active[a]);
        res.coef[active[a]] = x[static_cast<Eigen::Index>(a)];
      }
    if (kept.size() == active.size()) {
      res.converged = true;
      break;
    }
    active = std::move(kept);
  }
  if (active.empty()) {
    res.coef.setZero();
    res.converged = true;
  } else if (opt.unbias) {
    // the refit can push coefficients under the threshold; drop those and refit the rest
    for (int it = 0; it < std::max(1, opt.max_iters) && !active.empty(); ++it) {
      VectorXd x = solve_active(D, z, pen_unbias, active, res.rank_deficient);
      std::vector<int> kept;
      res.coef.setZero();
      for (std::size_t a = 0; a < active.size(); ++a)
        if (std::abs(x[static_cast<Eigen::Index>(a)]) >= opt.threshold) {
          kept.push_back(active[a]);
          res.coef[active[a]] = x[static_cast<Eigen::Index>(a)];
        }
      if (kept.size() == active.size()) break;
      active = std::move(kept);
    }
  }
  return res;
}

MatrixXd unvec(const VectorXd& v, int q, int m) {
  MatrixXd W(q, m);
  for (int i = 0; i < q; ++i)
    for (int l = 0; l < m; ++l) W(i, l) = v[i * m + l];
  return W;
}

}  // namespace

StlsqResult stlsq(const RegressionData& data, const StlsqOptions& opt, const ConstraintBasis* constraint,
                  const std::optional<RelaxedOptions>& relaxed) {
  const MatrixXd& G = data.G;
  const MatrixXd& B = data.B;
  const int m = static_cast<int>(G.cols()), q = static_cast<int>(B.cols());
  if (G.rows() != B.rows()) throw std::invalid_argument("stlsq: feature and target row counts differ");
  if (G.rows() == 0) throw std::invalid_argument("stlsq: empty regression system");
  if (!G.allFinite() || !B.allFinite()) throw std::invalid_argument("stlsq: non-finite data");
  if (opt.ridge < 0 || opt.threshold < 0) throw std::invalid_argument("stlsq: ridge and threshold must be >= 0");
  if (relaxed && !constraint) throw std::invalid_argument("stlsq: relaxed mode needs a constraint basis");
  if (constraint && (constraint->q != q || constraint->m != m))
    throw std::invalid_argument("stlsq: constraint basis shape does not match the problem");

  // thin QR: |y - G w| = |Q^T y - R w| up to a constant
  Eigen::HouseholderQR<MatrixXd> qr(G);
  const Eigen::Index k = std::min<Eigen::Index>(G.rows(), m);
  MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  MatrixXd Z = (qr.householderQ().transpose() * B).topRows(k);

  StlsqResult res;
  std::vector<bool> degenerate(m, false);
  const double colmax = G.colwise().norm().maxCoeff();
  for (int l = 0; l < m; ++l)
    if (G.col(l).norm() <= 1e-14 * std::max(colmax, 1e-300)) {
      degenerate[l] = true;
      res.dropped_columns.push_back(l);
    }
  const double sr = std::sqrt(opt.ridge);

  if (!constraint) {
    res.W = MatrixXd::Zero(q, m);
    std::vector<int> init;
    for (int l = 0; l < m; ++l)
      if (!degenerate[l]) init.push_back(l);
    const MatrixXd pen = sr * MatrixXd::Identity(m, m);
    const MatrixXd none(0, m);
    res.converged = true;
    for (int i = 0; i < q; ++i) {
      auto lr = threshold_loop(R, Z.col(i), opt.ridge > 0 ? pen : none, none, init, opt);
      res.W.row(i) = lr.coef.transpose();
      res.iterations = std::max(res.iterations, lr.iterations);
      res.converged = res.converged && lr.converged;
      res.rank_deficient = res.rank_deficient || lr.rank_deficient;
    }
  } else if (!relaxed) {
    const MatrixXd& Qb = constraint->Q;
    const int r = static_cast<int>(Qb.rows());
    MatrixXd D(q * k, r);
    VectorXd z(q * k);
    for (int i = 0; i < q; ++i) {
      D.middleRows(i * k, k) = R * Qb.middleCols(i * m, m).transpose();
      z.segment(i * k, k) = Z.col(i);
    }
    std::vector<int> init(r);
    for (int j = 0; j < r; ++j) init[j] = j;
    const MatrixXd pen = opt.ridge > 0 ? MatrixXd(sr * MatrixXd::Identity(r, r)) : MatrixXd(0, r);
    auto lr = r > 0 ? threshold_loop(D, z, pen, MatrixXd(0, r), init, opt) : LoopResult{VectorXd(0), 0, true, false};
    res.beta = lr.coef;
    res.iterations = lr.iterations;
    res.converged = lr.converged;
    res.rank_deficient = lr.rank_deficient;
    res.W = unvec(Qb.transpose() * res.beta, q, m);
    res.W_sym = res.W;
    res.W_break = MatrixXd::Zero(q, m);
  } else {
    if (!(relaxed->gamma_ridge > opt.ridge))
      throw std::invalid_argument("stlsq: relaxed mode needs gamma_ridge larger than the beta ridge");
    const MatrixXd& Qb = constraint->Q;
    const MatrixXd& Pb = constraint->P;
    const int n = q * m;
    MatrixXd D = MatrixXd::Zero(q * k, n);
    VectorXd z(q * k);
    for (int i = 0; i < q; ++i) {
      D.block(i * k, i * m, k, m) = R;
      z.segment(i * k, k) = Z.col(i);
    }
    const MatrixXd projQ = Qb.transpose() * Qb, projP = Pb.transpose() * Pb;
    const MatrixXd pen = sr * projQ + std::sqrt(relaxed->gamma_ridge) * projP;
    const MatrixXd pen_unbias = std::sqrt(relaxed->gamma_ridge) * projP;
    std::vector<int> init;
    for (int i = 0; i < q; ++i)
      for (int l = 0; l < m; ++l)
        if (!degenerate[l]) init.push_back(i * m + l);
    auto lr = threshold_loop(D, z, pen, pen_unbias, init, opt);
    res.iterations = lr.iterations;
    res.converged = lr.converged;
    res.rank_deficient = lr.rank_deficient;
    res.W = unvec(lr.coef, q, m);
    res.beta = Qb * lr.coef;
    res.gamma = Pb * lr.coef;
    res.W_sym = unvec(Qb.transpose() * res.beta, q, m);
    res.W_break = unvec(Pb.transpose() * res.gamma, q, m);
  }
  res.all_zero = (res.W.array() == 0.0).all();
  return res;
}

}  // namespace symdisc
