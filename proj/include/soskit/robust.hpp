#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "soskit/gram.hpp"

namespace soskit {

// (A, B)_p = tr_p(A' (I_p kron B)) for A of size pq x pq and B of size q x q:
// entry (i, j) is <A_ji, B> over the q x q blocks of A.
Eigen::MatrixXd trace_p(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int p);

// min c'y  s.t.  F(x, y) = F0(x) + sum_j y_j Fy[j](x) > 0 for all x with G(x) <= 0.
struct RobustSdp {
  Eigen::VectorXd c;
  PolyMatrix F0;
  std::vector<PolyMatrix> Fy;
  PolyMatrix G;
  double eps = 1e-3;
  // Entry degree of the multiplier S (even).
  int multiplier_degree = 0;
  // Box containing {x : G(x) <= 0}, used for sampling checks.
  std::vector<Interval> sampling_box;

  int num_x() const { return G.num_vars(); }
  int p() const { return F0.side(); }
  int q() const { return G.side(); }
  void validate() const;
  Eigen::MatrixXd F(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  bool admissible(const Eigen::VectorXd& x) const;  // G(x) <= 0
};

struct RobustCertificate {
  Eigen::VectorXd y;
  double v_opt = 0;
  PolyMatrix S;
  double min_eig_S = 0, min_eig_composite = 0;
  double residual_S = 0, residual_composite = 0;
  // Over the sampled admissible x.
  double min_sampled_eig = 0;
  int samples = 0;
};

struct RobustResult {
  std::optional<RobustCertificate> certificate;
  SolveStatus status = SolveStatus::kMaxIterations;
};

// Rejection sampling in the box; throws runtime_error if no admissible point
// turns up within max_tries.
std::vector<Eigen::VectorXd> sample_uncertainty(const RobustSdp& prob, int count, std::uint64_t seed,
                                                int max_tries = 200000);

// No certificate at this multiplier degree is reported through `status`;
// unboundedness throws domain_error, stalls throw SolverFailure.
RobustResult solve_robust_sdp(const RobustSdp& prob, const SolverSettings& settings = {}, int samples = 200,
                              std::uint64_t seed = 1);

// min c'y s.t. F(x_k, y) >= 0 at the given points: a lower bound on the
// robust value.
double sampled_robust_value(const RobustSdp& prob, const std::vector<Eigen::VectorXd>& points,
                            const SolverSettings& settings = {});

}  // namespace soskit
