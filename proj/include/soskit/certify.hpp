#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"

namespace soskit {

struct VectorField {
  std::vector<Polynomial> components;

  VectorField() = default;
  explicit VectorField(std::vector<Polynomial> c);
  static VectorField parse(const std::vector<std::string>& exprs, const std::vector<std::string>& vars);

  int dim() const { return static_cast<int>(components.size()); }
  int degree() const;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  bool vanishes_at_origin() const;
};

// grad(V) . f
ParamPolynomial lie_derivative(const ParamPolynomial& V, const VectorField& f);
Polynomial lie_derivative(const Polynomial& V, const VectorField& f);

// Fixed-step RK4; returns every `stride`-th state including the start.
std::vector<Eigen::VectorXd> integrate_rk4(const VectorField& f, const Eigen::VectorXd& x0, double step,
                                           double horizon, int stride = 1);

struct LyapunovOptions {
  // Weight of the homogeneous-top strengthening sum_i x_i^{2d}.
  double phi_eps_gamma = 1e-4;
  double check_tol = 1e-6;
  // V and -dV/dt are certified with Gram matrices >= margin * I.
  double gram_margin = 1.0;
  // Farkas certificates for high-degree searches converge slowly.
  SolverSettings solver = [] {
    SolverSettings s;
    s.eps_infeasible = 1e-6;
    return s;
  }();
};

struct LyapunovCertificate {
  int degree = 0;
  Polynomial V;
  Polynomial neg_vdot;
  Eigen::MatrixXd gram_V, gram_negVdot, gram_top;
  std::vector<Exponent> basis_V, basis_negVdot, basis_top;
  double min_eig_V = 0, min_eig_negVdot = 0, min_eig_top = 0;
  double residual_V = 0, residual_negVdot = 0, residual_top = 0;
  double strengthening = 0;
};

struct LyapunovSearch {
  std::optional<LyapunovCertificate> certificate;
  SolveStatus status = SolveStatus::kMaxIterations;
  std::string reason;
};

// Global asymptotic stability certificate of degree two_d. Throws
// SolverFailure when the solver gives no verdict.
LyapunovSearch find_lyapunov(const VectorField& f, int two_d, const LyapunovOptions& opts = {});
// Tries 2, 4, 6 (up to max_degree) and stops at the first success.
LyapunovSearch find_lyapunov_auto(const VectorField& f, int max_degree = 6, const LyapunovOptions& opts = {});

struct LinearLyapunov {
  std::optional<Eigen::MatrixXd> P;
  double min_eig_P = 0;
  double min_eig_decrease = 0;  // of -(A'P + PA)
};
LinearLyapunov find_lyapunov_linear(const Eigen::MatrixXd& A, double check_tol = 1e-6, const SolverSettings& st = {});

struct BarrierOptions {
  double eps = 1e-3;
  // Multiplier degree; defaults to the barrier degree rounded up to even.
  std::optional<int> multiplier_degree;
  // Sampling box for the post-checks, per coordinate.
  double sample_radius = 3.0;
  int samples = 500;
  std::uint64_t seed = 1;
  SolverSettings solver;
};

struct BarrierCertificate {
  Polynomial B;
  std::vector<Polynomial> sigma;  // sigma_0, then one per unsafe constraint
  std::vector<Polynomial> tau;    // tau_0, then one per initial-set constraint
  double eps = 0;
  double residual_unsafe = 0, residual_initial = 0, residual_decrease = 0;
  double min_eig = 0;  // smallest Gram eigenvalue over all multipliers
  double min_B_unsafe = 0, max_B_initial = 0, max_Bdot = 0;
};

struct BarrierSearch {
  std::optional<BarrierCertificate> certificate;
  SolveStatus status = SolveStatus::kMaxIterations;
  std::string reason;
};

// Initial set {initial_i >= 0 for all i}, unsafe set {unsafe_i >= 0 for all i}.
BarrierSearch find_barrier(const VectorField& f, const std::vector<Polynomial>& initial,
                           const std::vector<Polynomial>& unsafe, int degree, const BarrierOptions& opts = {});

struct RoaOptions {
  int v_degree = 2;
  int u_degree = 1;
  int l_degree = 2;
  int iterations = 3;
  double rho_bisect_tol = 1e-3;
  double rho_max = 100.0;
  // Point where V is normalized to 1; defaults to the all-ones vector.
  std::optional<Eigen::VectorXd> normalization_point;
  SolverSettings solver;
};

struct RoaResult {
  Polynomial V, u, L;
  double rho = 0;
  std::vector<double> rho_history;
  double residual_V = 0, residual_decrease = 0;
};

// Alternating search for the largest certified sublevel set {V <= rho} of
// xdot = f + g u. Throws std::runtime_error if the first alternation fails.
RoaResult maximize_roa(const VectorField& f, const VectorField& g, const RoaOptions& opts = {});

}  // namespace soskit
