#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"

namespace soskit {

struct MomentSequence {
  int n = 1;
  std::map<Exponent, double, GradedLex> values;

  static MomentSequence univariate(const std::vector<double>& y);
  // Throws std::invalid_argument if the moment is missing.
  double at(const Exponent& alpha) const;
  // Largest k with every moment of degree <= k present.
  int complete_order() const;
  // (y_0, ..., y_K) of a univariate sequence.
  std::vector<double> univariate_values() const;
};

struct AtomicMeasure {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> weights;
  // max |moment of the measure - input moment| after extraction.
  double moment_residual = 0;

  double total_mass() const;
  MomentSequence moments(int order) const;
};

// Rows and columns follow monomial_basis(n, d); entry (a, b) is y_{a+b}.
Eigen::MatrixXd moment_matrix(const MomentSequence& y, int d);

enum class MeasureVerdict { kYes, kBoundary, kNo };
std::string to_string(MeasureVerdict v);

// Existence of a representing probability measure on the real line.
MeasureVerdict univariate_has_measure(const MomentSequence& y, double tol = 1e-8);

// Atoms and weights of a finitely atomic univariate measure from its moments.
AtomicMeasure extract_atoms(const MomentSequence& y, double rank_tol = 1e-7);

// Nonnegative least squares min |Ax - b| s.t. x >= 0 (Lawson-Hanson).
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// Grid-and-refine local minimizers of a univariate p on a bounded interval
// whose value is <= tol (e.g. the touching points of a dual certificate).
std::vector<double> near_zero_minimizers(const Polynomial& p, const Interval& domain, double tol, int grid = 4001);

// Nonnegative weights on fixed support points that best match (y_0..y_K).
AtomicMeasure measure_on_support(const std::vector<double>& support, const std::vector<double>& y);

struct MomentBound {
  double bound = 0;
  Polynomial lambda;  // dual polynomial, univariate
  // Smallest value of the dual constraints on the verification grids.
  double min_slack = 0;
  SolveStatus status = SolveStatus::kMaxIterations;
};

// Upper bound on P(X in S) given (y_0, ..., y_K) of X supported on E. S is a
// union of at most two disjoint intervals inside E.
MomentBound probability_bound(const std::vector<double>& y, const Interval& E, const std::vector<Interval>& S,
                              const SolverSettings& settings = {});

// Upper bound on E[(X - k)_+] for X >= 0 with moments (1, y1, y2).
MomentBound option_price_bound(double y0, double y1, double y2, double strike, const SolverSettings& settings = {});

}  // namespace soskit
