#include "soskit/pop.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace soskit {

namespace {

void check_even(const Polynomial& p, const char* who) {
  if (p.num_vars() < 1) throw std::invalid_argument(std::string(who) + ": no variables");
  if (p.degree() % 2 != 0) throw std::invalid_argument(std::string(who) + ": odd degree");
}

// Drops basis monomials m whose Gram diagonal entry is forced to zero: p has no
// x^{2m} term and 2m is not a + b for two distinct kept monomials. A zero
// diagonal forces a zero row, so this only removes identically vanishing
// entries; it turns the weak infeasibility of unbounded p into a plain one.
std::vector<Exponent> forced_basis(const Polynomial& p, int d) {
  std::vector<Exponent> basis = monomial_basis(p.num_vars(), d);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Exponent twice = basis[k] + basis[k];
      if (k == 0 || p.terms().count(twice)) continue;  // constant row pairs with lambda
      bool produced = false;
      for (std::size_t a = 0; a < basis.size() && !produced; ++a)
        for (std::size_t b = a + 1; b < basis.size() && !produced; ++b)
          produced = basis[a] + basis[b] == twice;
      if (!produced) {
        basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(k));
        changed = true;
        break;
      }
    }
  }
  return basis;
}

}  // namespace

PopResult sos_lower_bound(const Polynomial& p, const SolverSettings& settings) {
  check_even(p, "sos_lower_bound");
  const int n = p.num_vars();
  SosProgram prog;
  const AffineExpr lambda = prog.new_var();
  SosOptions opts;
  opts.basis = forced_basis(p, std::max(p.degree() / 2, 1));
  const SosHandle h = prog.add_sos(lift(p) - ParamPolynomial::constant(n, lambda), std::max(p.degree(), 2), opts);
  prog.maximize(lambda);
  const SosSolution sol = prog.solve(settings);
  if (sol.status() == SolveStatus::kPrimalInfeasible)
    throw std::domain_error("sos_lower_bound: p - lambda is sos for no lambda (p unbounded below or not sos-boundable)");
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure("sos_lower_bound: solver reached its iteration limit");
  if (!sol.optimal()) throw std::runtime_error("sos_lower_bound: unexpected solver status " + to_string(sol.status()));

  PopResult out;
  out.lower_bound = sol.value(lambda);
  out.gram = sol.gram(h);
  out.basis = sol.basis(h);
  out.min_eig_gram = sol.min_eigenvalue(h);
  out.residual = sol.reconstruction_error(h);
  return out;
}

MinimizerExtraction extract_minimizer(const Polynomial& p, double rank_gap_tol, const SolverSettings& settings) {
  check_even(p, "extract_minimizer");
  const int n = p.num_vars();
  const int d = std::max(p.degree() / 2, 1);
  const std::vector<Exponent> basis = monomial_basis(n, d);
  const int s = static_cast<int>(basis.size());

  // One moment variable per distinct product z_a z_b: this imposes every
  // identity z_a z_b = z_c z_d, and Z_00 = 1 fixes the constant moment.
  SosProgram prog;
  std::map<Exponent, AffineExpr, GradedLex> moment;
  moment.emplace(Exponent(n), AffineExpr(1.0));
  std::vector<std::vector<AffineExpr>> Z(static_cast<std::size_t>(s), std::vector<AffineExpr>(static_cast<std::size_t>(s)));
  for (int i = 0; i < s; ++i)
    for (int j = 0; j <= i; ++j) {
      const Exponent g = basis[static_cast<std::size_t>(i)] + basis[static_cast<std::size_t>(j)];
      auto it = moment.find(g);
      if (it == moment.end()) it = moment.emplace(g, prog.new_var()).first;
      Z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = Z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = it->second;
    }
  prog.add_psd(Z);
  // tr(PZ) with the minimum-Frobenius Gram P of p equals sum_g p_g y_g.
  AffineExpr obj;
  for (const auto& [e, c] : p.terms()) obj += c * moment.at(e);
  prog.minimize(obj);

  const SosSolution sol = prog.solve(settings);
  if (sol.status() == SolveStatus::kDualInfeasible) throw std::domain_error("extract_minimizer: relaxation unbounded below");
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure("extract_minimizer: solver reached its iteration limit");
  if (!sol.optimal()) throw std::runtime_error("extract_minimizer: unexpected solver status " + to_string(sol.status()));

  MinimizerExtraction out;
  out.relaxation_value = sol.objective();
  out.Z.resize(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) out.Z(i, j) = sol.value(Z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.Z);
  out.top_eig1 = es.eigenvalues()(s - 1);
  out.top_eig2 = s > 1 ? es.eigenvalues()(s - 2) : 0.0;
  if (out.top_eig1 <= 0 || out.top_eig2 / out.top_eig1 > rank_gap_tol) return out;
  const Eigen::VectorXd v = es.eigenvectors().col(s - 1);
  if (std::abs(v(0)) < 1e-8) return out;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    const auto it = std::find(basis.begin(), basis.end(), Exponent::unit(n, i));
    x(i) = v(it - basis.begin()) / v(0);
  }
  out.point = x;
  return out;
}

PopResult minimize_polynomial(const Polynomial& p, double rank_gap_tol, const SolverSettings& settings) {
  PopResult out = sos_lower_bound(p, settings);
  const MinimizerExtraction m = extract_minimizer(p, rank_gap_tol, settings);
  out.minimizer = m.point;
  out.top_eig1 = m.top_eig1;
  out.top_eig2 = m.top_eig2;
  return out;
}

}  // namespace soskit
