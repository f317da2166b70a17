#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"
#include "soskit/moments.hpp"

namespace soskit {

struct Dataset {
  Eigen::MatrixXd X;  // m x n
  Eigen::VectorXd y;
  std::vector<Interval> box;

  int dim() const { return static_cast<int>(X.cols()); }
  int size() const { return static_cast<int>(X.rows()); }
  void validate() const;
  // Rows of numbers separated by commas, whitespace or semicolons; the last
  // column is the response. Lines starting with '#' are skipped. The box is
  // the bounding box of the inputs.
  static Dataset read(const std::string& path);
  static Dataset with_bounding_box(Eigen::MatrixXd X, Eigen::VectorXd y);
};

struct ShapeSpec {
  std::vector<int> monotone;  // rho_j in {-1, 0, +1}; empty means all 0
  bool convex = false;
  int degree = 1;
};

struct FitOptions {
  // Extra degree for the box certificates when n >= 2.
  int relaxation_degree = 0;
  // Post-check grid; capped at 2e5 points in total.
  int grid_per_axis = 50;
  SolverSettings solver = [] {
    SolverSettings s;
    s.eps = 1e-9;
    return s;
  }();
};

struct ShapeFit {
  Polynomial f;
  double rmse = 0;
  double rmse_unconstrained = 0;
  // Smallest rho_j df/dx_j and smallest Hessian eigenvalue on the check grid.
  double min_monotone = 0;
  double min_convex = 0;
  // Solver tolerance finally met (looser than requested after a stall).
  double solver_eps = 0;
};

// Least-squares fit of degree d by normal equations (independent of the
// conic solver).
Polynomial least_squares_fit(const Dataset& data, int degree);
double rmse(const Polynomial& f, const Dataset& data);

ShapeFit fit_shape_constrained(const Dataset& data, const ShapeSpec& spec, const FitOptions& opts = {});

struct DesignOptions {
  double extraction_tol = 1e-3;
  SolverSettings solver = [] {
    SolverSettings s;
    s.eps = 1e-9;
    return s;
  }();
};

struct EDesign {
  double gamma_primal = 0;  // max gamma with M(y) >= gamma I
  double gamma_dual = 0;    // min lambda with lambda - z'Qz >= 0 on the domain
  MomentSequence moments;
  Eigen::MatrixXd Q;
  // n = 1 only: atoms and weights of the design and lambda_min of its Fisher matrix.
  std::optional<AtomicMeasure> design;
  double fisher_min_eig = 0;
  std::string extraction_note;
};

// E-optimal design for polynomial regression of degree d on a box domain.
EDesign e_optimal_design(const std::vector<Interval>& domain, int d, const DesignOptions& opts = {});

}  // namespace soskit
