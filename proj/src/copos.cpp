#include "soskit/copos.hpp"

#include <bit>
#include <stdexcept>

namespace soskit {
namespace {

constexpr int kMaxLevel = 3;

void check_level(int r) {
  if (r < 0 || r > kMaxLevel) throw std::invalid_argument("copos: level r must be in [0, 3]");
}

Polynomial sum_of_squares_power(int n, int r) {
  Polynomial s(n);
  for (int i = 0; i < n; ++i) {
    Exponent e(n);
    e.set(i, 2);
    s.add_term(e, 1.0);
  }
  Polynomial out = Polynomial::constant(n, 1.0);
  for (int k = 0; k < r; ++k) out = out * s;
  return out;
}

Polynomial quartic_form(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  Polynomial m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (M(i, j) == 0.0) continue;
      Exponent e(n);
      e.set(i, e[i] + 2);
      e.set(j, e[j] + 2);
      m.add_term(e, M(i, j));
    }
  return m;
}

}  // namespace

CoposQuery::CoposQuery(Eigen::MatrixXd m, int level) : M(std::move(m)), r(level) {
  if (M.rows() != M.cols() || M.rows() == 0) throw std::invalid_argument("CoposQuery: matrix must be square");
  if (!M.allFinite()) throw std::invalid_argument("CoposQuery: non-finite entry");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("CoposQuery: matrix must be symmetric");
  check_level(r);
}

Polynomial kr_polynomial(const Eigen::MatrixXd& M, int r) {
  return quartic_form(M) * sum_of_squares_power(static_cast<int>(M.rows()), r);
}

KrResult in_Kr(const CoposQuery& q, const SolverSettings& settings) {
  const int n = static_cast<int>(q.M.rows());
  SosOptions opts;
  opts.basis = monomials_in_range(n, q.r + 2, q.r + 2);
  const SosCheck c = check_sos(kr_polynomial(q.M, q.r), settings, opts);
  if (c.status == SolveStatus::kMaxIterations) throw SolverFailure("in_Kr: solver hit the iteration limit");
  KrResult out;
  out.member = c.feasible;
  out.status = c.status;
  out.gram = c.gram;
  out.basis = c.basis;
  out.min_eigenvalue = c.min_eigenvalue;
  out.residual = c.residual;
  return out;
}

KrResult in_Kr(const Eigen::MatrixXd& M, int r, const SolverSettings& settings) {
  return in_Kr(CoposQuery(M, r), settings);
}

void validate_adjacency(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw std::invalid_argument("adjacency: matrix must be square");
  for (int i = 0; i < A.rows(); ++i) {
    if (A(i, i) != 0.0) throw std::invalid_argument("adjacency: nonzero diagonal");
    for (int j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0 && A(i, j) != 1.0) throw std::invalid_argument("adjacency: entries must be 0 or 1");
      if (A(i, j) != A(j, i)) throw std::invalid_argument("adjacency: not symmetric");
    }
  }
}

Eigen::MatrixXd adjacency_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n <= 0) throw std::invalid_argument("adjacency_from_edges: n must be positive");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("adjacency_from_edges: vertex out of range");
    if (a == b) throw std::invalid_argument("adjacency_from_edges: self-loop");
    A(a, b) = A(b, a) = 1.0;
  }
  return A;
}

StabilityBound stability_number_ub(const Eigen::MatrixXd& A, int r, const SolverSettings& settings) {
  validate_adjacency(A);
  check_level(r);
  const int n = static_cast<int>(A.rows());
  SosProgram prog;
  const AffineExpr lambda = prog.new_var();
  const Eigen::MatrixXd IA = Eigen::MatrixXd::Identity(n, n) + A;
  const Polynomial s = sum_of_squares_power(n, r);
  const ParamPolynomial target =
      ParamPolynomial::constant(n, lambda) * (quartic_form(IA) * s) -
      lift(quartic_form(Eigen::MatrixXd::Ones(n, n)) * s);
  SosOptions opts;
  opts.basis = monomials_in_range(n, r + 2, r + 2);
  const SosHandle h = prog.add_sos(target, 2 * r + 4, opts);
  prog.minimize(lambda);
  const SosSolution sol = prog.solve(settings);
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure("stability_number_ub: iteration limit");
  if (!sol.optimal()) throw std::runtime_error("stability_number_ub: unexpected status " + to_string(sol.status()));
  StabilityBound out;
  out.status = sol.status();
  out.bound = sol.value(lambda);
  out.residual = sol.reconstruction_error(h);
  out.min_eigenvalue = sol.min_eigenvalue(h);
  return out;
}

int stability_number(const Eigen::MatrixXd& A) {
  validate_adjacency(A);
  const int n = static_cast<int>(A.rows());
  if (n > 20) throw std::invalid_argument("stability_number: enumeration limited to 20 vertices");
  int best = 0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int size = std::popcount(mask);
    if (size <= best) continue;
    bool independent = true;
    for (int i = 0; i < n && independent; ++i)
      if (mask >> i & 1u)
        for (int j = i + 1; j < n; ++j)
          if ((mask >> j & 1u) && A(i, j) != 0.0) {
            independent = false;
            break;
          }
    if (independent) best = size;
  }
  return best;
}

}  // namespace soskit
