#include "soskit/robust.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace soskit {
namespace {

std::span<const double> as_span(const Eigen::VectorXd& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

bool symmetric_values(const Eigen::MatrixXd& m) { return m.isApprox(m.transpose()) || m.isZero(); }

}  // namespace

Eigen::MatrixXd trace_p(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int p) {
  if (p <= 0) throw std::invalid_argument("trace_p: p must be positive");
  if (B.rows() != B.cols()) throw std::invalid_argument("trace_p: B must be square");
  const Eigen::Index q = B.rows();
  if (A.rows() != p * q || A.cols() != p * q) throw std::invalid_argument("trace_p: A must be pq x pq");
  Eigen::MatrixXd out(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) out(i, j) = A.block(j * q, i * q, q, q).cwiseProduct(B).sum();
  return out;
}

void RobustSdp::validate() const {
  const int m = num_x();
  if (m <= 0) throw std::invalid_argument("RobustSdp: G must have at least one variable");
  if (q() <= 0 || p() <= 0) throw std::invalid_argument("RobustSdp: empty F or G");
  if (F0.num_vars() != m) throw std::invalid_argument("RobustSdp: F0 and G use different variable counts");
  if (static_cast<std::size_t>(c.size()) != Fy.size() || Fy.empty())
    throw std::invalid_argument("RobustSdp: need one F_j per entry of c");
  for (const auto& f : Fy)
    if (f.side() != p() || f.num_vars() != m) throw std::invalid_argument("RobustSdp: F_j shape mismatch");
  if (!(eps > 0)) throw std::invalid_argument("RobustSdp: eps must be positive");
  if (multiplier_degree < 0 || multiplier_degree % 2 != 0)
    throw std::invalid_argument("RobustSdp: multiplier degree must be even and nonnegative");
  if (!sampling_box.empty()) {
    if (static_cast<int>(sampling_box.size()) != m) throw std::invalid_argument("RobustSdp: box dimension mismatch");
    for (const auto& iv : sampling_box)
      if (!iv.bounded_below() || !iv.bounded_above() || iv.lo > iv.hi)
        throw std::invalid_argument("RobustSdp: sampling box must be bounded");
  }
}

Eigen::MatrixXd RobustSdp::F(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  Eigen::MatrixXd out = evaluate(F0, as_span(x));
  for (std::size_t j = 0; j < Fy.size(); ++j) out += y(static_cast<Eigen::Index>(j)) * evaluate(Fy[j], as_span(x));
  return out;
}

bool RobustSdp::admissible(const Eigen::VectorXd& x) const {
  const Eigen::MatrixXd g = evaluate(G, as_span(x));
  return symmetric_values(g) && min_eigenvalue(-g) >= 0.0;
}

std::vector<Eigen::VectorXd> sample_uncertainty(const RobustSdp& prob, int count, std::uint64_t seed, int max_tries) {
  prob.validate();
  if (prob.sampling_box.empty()) throw std::invalid_argument("sample_uncertainty: no sampling box");
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> U;
  for (const auto& iv : prob.sampling_box) U.emplace_back(iv.lo, iv.hi);
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd x(prob.num_x());
  for (int t = 0; t < max_tries && static_cast<int>(out.size()) < count; ++t) {
    for (int i = 0; i < x.size(); ++i) x(i) = U[static_cast<std::size_t>(i)](rng);
    if (prob.admissible(x)) out.push_back(x);
  }
  if (out.empty()) throw std::runtime_error("sample_uncertainty: no admissible point found in the box");
  return out;
}

RobustResult solve_robust_sdp(const RobustSdp& prob, const SolverSettings& settings, int samples, std::uint64_t seed) {
  prob.validate();
  const int m = prob.num_x(), p = prob.p(), q = prob.q();
  SosProgram prog;
  std::vector<AffineExpr> y;
  for (Eigen::Index j = 0; j < prob.c.size(); ++j) y.push_back(prog.new_var());

  const auto mono = monomials_in_range(m, 0, prob.multiplier_degree);
  ParamPolyMatrix S(p * q, m);
  for (int i = 0; i < p * q; ++i)
    for (int j = 0; j <= i; ++j) S.set(i, j, prog.new_free_poly(m, mono));
  const SosHandle hS = prog.add_sos_matrix(S, prob.multiplier_degree);

  ParamPolyMatrix composite(p, m);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j <= i; ++j) {
      ParamPolynomial e = lift(prob.F0(i, j));
      for (std::size_t k = 0; k < y.size(); ++k) e += ParamPolynomial::constant(m, y[k]) * prob.Fy[k](i, j);
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) e += S(i * q + a, j * q + b) * prob.G(a, b);
      if (i == j) e -= ParamPolynomial::constant(m, AffineExpr(prob.eps));
      composite.set(i, j, e);
    }
  int deg = composite.degree();
  deg += deg % 2;
  const SosHandle hC = prog.add_sos_matrix(composite, deg);

  AffineExpr obj;
  for (std::size_t k = 0; k < y.size(); ++k) obj += prob.c(static_cast<Eigen::Index>(k)) * y[k];
  prog.minimize(obj);
  const SosSolution sol = prog.solve(settings);

  RobustResult out;
  out.status = sol.status();
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure("solve_robust_sdp: iteration limit");
  if (sol.status() == SolveStatus::kDualInfeasible) throw std::domain_error("solve_robust_sdp: objective unbounded");
  if (!sol.optimal()) return out;

  RobustCertificate cert;
  cert.y.resize(prob.c.size());
  for (std::size_t k = 0; k < y.size(); ++k) cert.y(static_cast<Eigen::Index>(k)) = sol.value(y[k]);
  cert.v_opt = sol.objective();
  cert.S = PolyMatrix(p * q, m);
  for (int i = 0; i < p * q; ++i)
    for (int j = 0; j <= i; ++j) cert.S.set(i, j, sol.value(S(i, j)));
  cert.min_eig_S = sol.min_eigenvalue(hS);
  cert.min_eig_composite = sol.min_eigenvalue(hC);
  cert.residual_S = sol.reconstruction_error(hS);
  cert.residual_composite = sol.reconstruction_error(hC);
  cert.min_sampled_eig = std::numeric_limits<double>::infinity();
  if (samples > 0 && !prob.sampling_box.empty()) {
    const auto xs = sample_uncertainty(prob, samples, seed);
    cert.samples = static_cast<int>(xs.size());
    for (const auto& x : xs) cert.min_sampled_eig = std::min(cert.min_sampled_eig, min_eigenvalue(prob.F(x, cert.y)));
  }
  out.certificate = std::move(cert);
  return out;
}

double sampled_robust_value(const RobustSdp& prob, const std::vector<Eigen::VectorXd>& points,
                            const SolverSettings& settings) {
  prob.validate();
  if (points.empty()) throw std::invalid_argument("sampled_robust_value: no points");
  const int p = prob.p();
  SosProgram prog;
  std::vector<AffineExpr> y;
  for (Eigen::Index j = 0; j < prob.c.size(); ++j) y.push_back(prog.new_var());
  for (const auto& x : points) {
    if (x.size() != prob.num_x()) throw std::invalid_argument("sampled_robust_value: point dimension mismatch");
    const Eigen::MatrixXd f0 = evaluate(prob.F0, as_span(x));
    std::vector<Eigen::MatrixXd> fy;
    for (const auto& f : prob.Fy) fy.push_back(evaluate(f, as_span(x)));
    std::vector<std::vector<AffineExpr>> M(static_cast<std::size_t>(p), std::vector<AffineExpr>(static_cast<std::size_t>(p)));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        AffineExpr e(f0(i, j));
        for (std::size_t k = 0; k < y.size(); ++k) e += fy[k](i, j) * y[k];
        M[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = e;
      }
    if (p == 1)
      prog.add_ge(M[0][0]);
    else
      prog.add_psd(M);
  }
  AffineExpr obj;
  for (std::size_t k = 0; k < y.size(); ++k) obj += prob.c(static_cast<Eigen::Index>(k)) * y[k];
  prog.minimize(obj);
  const SosSolution sol = prog.solve(settings);
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure("sampled_robust_value: iteration limit");
  if (sol.status() == SolveStatus::kDualInfeasible) throw std::domain_error("sampled_robust_value: unbounded");
  if (!sol.optimal()) throw std::domain_error("sampled_robust_value: infeasible at the sample points");
  return sol.objective();
}

}  // namespace soskit
