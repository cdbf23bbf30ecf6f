#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "symdisc/jetexpr.hpp"

namespace symdisc {

enum class GpOp { Add, Mul, Pow, Exp };

struct GpConfig {
  int population_size = 27;
  int n_populations = 127;
  int n_iterations = 5;
  int cycles_per_iteration = 27;  // tournament/mutate/replace events per population per iteration
  int tournament_size = 8;
  std::vector<GpOp> operators{GpOp::Add, GpOp::Mul};
  std::vector<int> pow_exponents{-1, 2, 3};
  int max_tree_size = 20;
  double fraction_replaced = 0.1;  // migrated from the hall of fame after each iteration
  double const_min = -2.0, const_max = 2.0;
  double crossover_probability = 0.1;
  double parsimony = 1e-3;  // per node, on the variance-normalized loss
  int max_rows = 10000;
  bool nested_exp = false;
  bool linear_scaling = true;  // fit y ~ a + b f(X) in closed form
  int const_restarts = 2;
  std::uint64_t seed = 0;

  void validate() const;
  static GpConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Candidate {
  Expr tree;
  double fitness = 0.0;  // mean-squared error on the full data
  int complexity = 0;    // node count
};

// Prefix-encoded expression tree used by the evolutionary loop.
struct GpNode {
  enum class Kind : std::uint8_t { Const, Var, Add, Mul, Pow, Exp } kind = Kind::Const;
  double value = 0.0;
  int var = 0;
  int exponent = 1;
  int arity() const;
};
using GpTree = std::vector<GpNode>;

// Returns the end (exclusive) of the subtree starting at i.
std::size_t gp_subtree_end(const GpTree& t, std::size_t i);
bool gp_valid(const GpTree& t, const GpConfig& cfg);
GpTree gp_random_tree(std::mt19937_64& rng, const GpConfig& cfg, int n_vars, int target_size);
GpTree gp_mutate(const GpTree& t, std::mt19937_64& rng, const GpConfig& cfg, int n_vars);
std::pair<GpTree, GpTree> gp_crossover(const GpTree& a, const GpTree& b, std::mt19937_64& rng, const GpConfig& cfg);
Eigen::ArrayXd gp_evaluate(const GpTree& t, const Eigen::MatrixXd& X);
Expr gp_to_expr(const GpTree& t, const std::vector<std::string>& names);
// Throws std::invalid_argument for nodes outside the GP grammar.
GpTree gp_from_expr(const Expr& e, const std::vector<std::string>& names);

// Pareto front over (complexity, fitness), sorted by complexity. `history`, when given, receives the
// best hall-of-fame loss after each iteration.
std::vector<Candidate> gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                              const GpConfig& cfg, std::vector<double>* history = nullptr);

// Largest log-loss decrease per added node among candidates within 1.5x of the best loss; a larger
// tree only counts when it cuts the loss by more than 2% over the best simpler candidate.
Candidate select_best(const std::vector<Candidate>& front);

// Gauss-Newton (Levenberg damped) on the tree's constants, from the current values and from
// n_restarts random starts in [const_min, const_max].
Expr optimize_constants(const Expr& tree, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const std::vector<std::string>& names, int n_restarts, std::uint64_t seed = 0,
                        double const_min = -2.0, double const_max = 2.0);

}  // namespace symdisc
