#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"

namespace soskit {

struct PopResult {
  double lower_bound = 0;
  // p - lower_bound = z' gram z over `basis`.
  Eigen::MatrixXd gram;
  std::vector<Exponent> basis;
  double min_eig_gram = 0;
  double residual = 0;
  std::optional<Eigen::VectorXd> minimizer;
  // Two largest eigenvalues of the moment matrix Z*, largest first.
  double top_eig1 = 0, top_eig2 = 0;
};

// Largest lambda with p - lambda sos. Throws std::domain_error when no lambda
// works (p unbounded below or not sos-boundable), SolverFailure on stalls.
PopResult sos_lower_bound(const Polynomial& p, const SolverSettings& settings = {});

struct MinimizerExtraction {
  std::optional<Eigen::VectorXd> point;
  double relaxation_value = 0;  // min tr(PZ)
  Eigen::MatrixXd Z;            // indexed by monomial_basis(n, deg p / 2)
  double top_eig1 = 0, top_eig2 = 0;
};

// Rank-relaxed lifting: min tr(PZ) over Z PSD with Z_00 = 1 and the
// monomial-product identities z_a z_b = z_c z_d (a + b = c + d). A point is
// returned only if lambda_2(Z) / lambda_1(Z) <= rank_gap_tol.
MinimizerExtraction extract_minimizer(const Polynomial& p, double rank_gap_tol = 1e-5,
                                      const SolverSettings& settings = {});

// sos_lower_bound plus extract_minimizer in one result.
PopResult minimize_polynomial(const Polynomial& p, double rank_gap_tol = 1e-5, const SolverSettings& settings = {});

}  // namespace soskit
