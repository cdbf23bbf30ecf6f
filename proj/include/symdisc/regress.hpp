#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symdisc/jetexpr.hpp"
#include "symdisc/simulate.hpp"

namespace symdisc {

// Features G (rows x m) and targets B (rows x q); strong form rows are data points,
// weak form rows are test functions.
struct RegressionData {
  Eigen::MatrixXd G;
  Eigen::MatrixXd B;
  std::size_t dropped_rows = 0;  // non-finite rows removed during assembly
};

struct SindyProblem {
  std::vector<Expr> lhs;      // q
  std::vector<Expr> library;  // m
  JetDataset data;
  double ridge = 0.05;
  double threshold = 0.25;
  int max_iters = 20;
};

// Evaluates lhs and library on the masked rows, dropping rows with any non-finite value.
RegressionData build_regression(const std::vector<Expr>& lhs, const std::vector<Expr>& library, const JetDataset& data);

// vec(W) is row-major: entry (i, l) sits at i * m + l.
struct ConstraintBasis {
  int q = 0, m = 0;
  Eigen::MatrixXd Q;      // r x (q m), orthonormal rows, sparsified
  Eigen::MatrixXd Q_raw;  // right singular vectors before sparsification
  Eigen::MatrixXd P;      // complement, (q m - r) x (q m)
  Eigen::MatrixXd M;      // M vec(W) = 0 on the symmetric subspace
  Eigen::VectorXd singular_values;
  // intermediates of the invariant decomposition
  std::vector<Expr> library_hat;      // library plus the constant
  std::vector<Expr> library_tilde;    // library plus independent pairwise products
  std::vector<Eigen::MatrixXd> T;     // per LHS invariant i: (q x |library_hat|)
  std::vector<Eigen::MatrixXd> Gamma; // per k in library_hat: (m x |library_tilde|)
  Eigen::MatrixXd S_tilde;            // inv-library rows in library_tilde coordinates
  std::string description;

  int rank() const { return static_cast<int>(Q.rows()); }
  // Slice k of Q reshaped to q x m.
  Eigen::MatrixXd slice(int k) const;
  // Text dump: "r q m" then r lines of q*m values.
  std::string to_text() const;
};

class ConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builds the symmetric parameter subspace for lhs = W library. Each eta0[i] must decompose as
// sum_jk T_ijk library_hat_k lhs_j; each inv_library entry must lie in span(library_tilde).
ConstraintBasis derive_constraints(const std::vector<Expr>& lhs, const std::vector<Expr>& library,
                                   const std::vector<Expr>& eta0, const std::vector<Expr>& inv_library,
                                   double sv_threshold = 1e-6);

// Unconstrained basis (Q = identity) for the trivial group.
ConstraintBasis identity_basis(int q, int m);

// Reduced row echelon form with partial pivoting, rows below tol dropped.
Eigen::MatrixXd rref(const Eigen::MatrixXd& A, double tol = 1e-10);
// RREF followed by modified Gram-Schmidt on the rows.
Eigen::MatrixXd sparsify_basis(const Eigen::MatrixXd& Q, double tol = 1e-10);
// Max over rows of A of the distance to span(rows of B) (B orthonormal rows).
double projection_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// Products up to `degree` of the given invariants (degree 0 is the constant), keeping only those
// that decompose in span(library_tilde) of `library`.
std::vector<Expr> expressible_products(const std::vector<Expr>& invariants, int degree,
                                       const std::vector<Expr>& library);

struct StlsqOptions {
  double threshold = 0.25;
  double ridge = 0.05;
  int max_iters = 20;
  bool unbias = true;  // final least-squares refit on the support without the ridge
};

struct RelaxedOptions {
  double gamma_ridge = 0.0;  // must exceed the beta ridge
};

struct StlsqResult {
  Eigen::MatrixXd W;        // q x m
  Eigen::VectorXd beta;     // constrained / relaxed modes
  Eigen::VectorXd gamma;    // relaxed mode
  Eigen::MatrixXd W_sym;    // Q^T beta reshaped
  Eigen::MatrixXd W_break;  // P^T gamma reshaped
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
  bool all_zero = false;
  std::vector<int> dropped_columns;  // constant-zero library columns
};

StlsqResult stlsq(const RegressionData& data, const StlsqOptions& opt, const ConstraintBasis* constraint = nullptr,
                  const std::optional<RelaxedOptions>& relaxed = std::nullopt);

// ---- weak form ----

struct WeakFormConfig {
  int n_test_functions = 100;
  // Half-width per grid axis as a fraction of that axis' length (used when half_widths is empty).
  double half_width_fraction = 1.0 / 8.0;
  std::vector<double> half_widths;  // per grid axis, in coordinate units
  int poly_degree = 4;
  std::uint64_t seed = 0;
};

// Separable bump prod_a (1 - ((x_a - c_a)/h_a)^2)^p on a grid-aligned box.
struct TestFunction {
  std::vector<int> center;      // grid index per axis
  std::vector<int> half_points; // half-width in grid points per axis
  std::vector<double> half_widths;
  int p = 4;

  // d^n/dx^n of the 1D factor along `axis` at offset s = (x - c)/h.
  double factor_derivative(int axis, double s, int n) const;
};

// Coefficients of d^n/ds^n (1 - s^2)^p in ascending powers of s.
std::vector<double> bump_derivative_poly(int p, int n);

std::vector<TestFunction> make_test_functions(const WeakFormConfig& cfg, const Grid& grid);

// Each term must be c * u^a_J (a single derivative atom) or free of derivatives.
struct WeakTerm {
  double coefficient = 1.0;
  Expr function;   // derivative-free
  MultiIndex J{};  // derivative moved onto the test function
};
WeakTerm factor_weak_term(const Expr& term);

// One row per test function: b = (-1)^|a0| int u phi_a0, G_j = (-1)^|J| int f_j D_J phi,
// each divided by int phi. Trapezoidal quadrature over the box.
RegressionData build_weak_problem(const std::vector<Expr>& lhs, const std::vector<Expr>& library,
                                  const FieldData& fd, const WeakFormConfig& cfg);
RegressionData build_weak_problem(const std::vector<Expr>& lhs, const std::vector<Expr>& library,
                                  const FieldData& fd, const std::vector<TestFunction>& tests);

}  // namespace symdisc
