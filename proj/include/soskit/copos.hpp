#pragma once

#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"

namespace soskit {

// Symmetric matrix tested for copositivity at level r of the K_r hierarchy.
struct CoposQuery {
  CoposQuery(Eigen::MatrixXd M, int r);
  Eigen::MatrixXd M;
  int r = 0;
};

struct KrResult {
  bool member = false;
  SolveStatus status = SolveStatus::kMaxIterations;
  // Certificate of (sum x_i^2)^r * sum_ij m_ij x_i^2 x_j^2 over degree-(r + 2) monomials.
  Eigen::MatrixXd gram;
  std::vector<Exponent> basis;
  double min_eigenvalue = 0;
  double residual = 0;
};

// sum_ij m_ij x_i^2 x_j^2 times (sum_i x_i^2)^r.
Polynomial kr_polynomial(const Eigen::MatrixXd& M, int r);

// r <= 3. Non-membership is a verdict at this level only. Throws SolverFailure
// when the solver stalls.
KrResult in_Kr(const CoposQuery& q, const SolverSettings& settings = {});
KrResult in_Kr(const Eigen::MatrixXd& M, int r, const SolverSettings& settings = {});

// Graph given by a symmetric 0/1 adjacency matrix with zero diagonal.
void validate_adjacency(const Eigen::MatrixXd& A);
// Adjacency from an edge list (0-based vertex pairs).
Eigen::MatrixXd adjacency_from_edges(int n, const std::vector<std::pair<int, int>>& edges);

struct StabilityBound {
  double bound = 0;  // min lambda with lambda (I + A) - J in K_r
  SolveStatus status = SolveStatus::kMaxIterations;
  double residual = 0;
  double min_eigenvalue = 0;
};

StabilityBound stability_number_ub(const Eigen::MatrixXd& A, int r, const SolverSettings& settings = {});

// Maximum size of an independent set by enumeration (n <= 20).
int stability_number(const Eigen::MatrixXd& A);

}  // namespace soskit
