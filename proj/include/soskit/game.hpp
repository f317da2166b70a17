#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"
#include "soskit/moments.hpp"

namespace soskit {

// Zero-sum game with payoff P(x, y) = sum_ij p(i, j) x^i y^j paid to player 1,
// both actions in `domain`.
struct PolyGame {
  Eigen::MatrixXd p;  // (n + 1) x (m + 1)
  Interval domain = Interval::closed(-1, 1);

  int deg_x() const { return static_cast<int>(p.rows()) - 1; }
  int deg_y() const { return static_cast<int>(p.cols()) - 1; }
  void validate() const;
  // From a polynomial in the two variables (x, y).
  static PolyGame from_polynomial(const Polynomial& P, Interval domain = Interval::closed(-1, 1));
  Polynomial payoff() const;
  double operator()(double x, double y) const;
};

// Moments (y_0..y_K) of the truncated moment cone of a bounded interval:
// Hankel and localizing matrices appended to prog. y_0 is taken as given.
void add_interval_moment_cone(SosProgram& prog, const std::vector<AffineExpr>& y, const Interval& domain);

struct GameOptions {
  double extraction_tol = 1e-4;
  int saddle_grid = 50;
  double saddle_tol = 1e-3;
  SolverSettings solver = [] {
    SolverSettings s;
    s.eps = 1e-9;
    return s;
  }();
};

struct GameSolution {
  double value_primal = 0;  // max over mu (lambda*)
  double value_dual = 0;    // min over nu (gamma*)
  std::vector<double> mu_moments, nu_moments;
  std::optional<AtomicMeasure> mu, nu;
  std::string mu_note, nu_note;
  // max over grid x of E_nu[P(x, y)] - value, and value - min over grid y of E_mu[P(x, y)].
  double saddle_gap_x = 0, saddle_gap_y = 0;
  bool saddle_ok = false;
};

GameSolution solve_polynomial_game(const PolyGame& g, const GameOptions& opts = {});

// Single-controller discounted stochastic game on actions [0, 1]. Transition
// probability from state t to state u under player 1's action x is the
// polynomial with coefficients transition[t][u] (ascending powers of x).
struct StochasticGame {
  std::vector<Eigen::MatrixXd> payoff;  // per state, as in PolyGame::p
  std::vector<std::vector<std::vector<double>>> transition;
  double beta = 0.5;

  int states() const { return static_cast<int>(payoff.size()); }
  int deg_x() const;
  int deg_y() const;
  // Rows of transitions must sum to 1 and be >= 0 on a 100-point grid of [0, 1].
  void validate() const;
};

struct StochasticSolution {
  Eigen::VectorXd values;  // v_t
  double primal_objective = 0, dual_objective = 0;
  std::vector<std::vector<double>> nu_moments, xi_moments;
  std::vector<std::optional<AtomicMeasure>> M, N;  // player 1 and player 2 strategies per state
};

StochasticSolution solve_stochastic_game(const StochasticGame& sg, const GameOptions& opts = {});

}  // namespace soskit
