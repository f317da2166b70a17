#pragma once

#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"

namespace soskit {

struct MatrixFamily {
  std::vector<Eigen::MatrixXd> mats;

  MatrixFamily() = default;
  explicit MatrixFamily(std::vector<Eigen::MatrixXd> m);
  int dim() const { return mats.empty() ? 0 : static_cast<int>(mats.front().rows()); }
  int size() const { return static_cast<int>(mats.size()); }
  void validate() const;
  MatrixFamily scaled(double c) const;
};

// Integral of x^alpha over the unit sphere S^{n-1} (surface measure).
double sphere_integral(const Exponent& alpha, int n);

// Largest singular value by power iteration on B'B.
double spectral_norm(const Eigen::MatrixXd& B, int iterations = 200);

struct JsrOptions {
  double bisect_tol = 1e-4;
  // Share of the unit sphere mass of p carried by eps * |x|^{2d}, which keeps
  // p positive definite. Without it a rank-one p = (l'x)^2 built from a left
  // eigenvector certifies gamma = |smallest eigenvalue| for a single matrix.
  double pd_fraction = 1e-2;
  SolverSettings solver = [] {
    SolverSettings s;
    s.max_iters = 50000;
    return s;
  }();
};

struct JsrBound {
  int two_d = 0;
  // Certified level: includes the floating-point slack of the witness.
  double gamma_upper = 0;
  // gamma_upper / C(n+d-1, d)^{1/2d}
  double lower_bound = 0;
  // Homogeneous form of degree 2d with unit sphere integral.
  Polynomial witness;
  double normalization_error = 0;
  double min_eig_p = 0;  // smallest eigenvalue of the Gram matrix of p
  // Reconstruction residual of p sos, then of each gamma^{2d} p - p(A_i x).
  std::vector<double> residuals;
  std::vector<BisectStep> steps;
};

JsrBound jsr_upper_bound(const MatrixFamily& fam, int two_d, const JsrOptions& opts = {});

struct SwitchingSequence {
  std::vector<int> sigma;  // 0-based matrix indices, sigma[0] applied first
  double growth = 0;       // ||A_sigma(k-1) ... A_sigma(0)||_2^{1/k}
  double lambda = 0;       // dual bisection value
  double guarantee = 0;    // lambda / m^{1/2d}
  double gamma_upper = 0;  // primal bracket used for the dual bisection
};

// Dual-guided greedy switching rule; k_steps matrices are multiplied.
SwitchingSequence generate_unstable_sequence(const MatrixFamily& fam, int two_d, int k_steps,
                                             const JsrOptions& opts = {});

}  // namespace soskit
