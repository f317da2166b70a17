#include "soskit/moments.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace soskit {

MomentSequence MomentSequence::univariate(const std::vector<double>& y) {
  if (y.empty()) throw std::invalid_argument("moment sequence: empty");
  MomentSequence m;
  m.n = 1;
  for (std::size_t k = 0; k < y.size(); ++k) m.values[Exponent({static_cast<int>(k)})] = y[k];
  return m;
}

double MomentSequence::at(const Exponent& alpha) const {
  const auto it = values.find(alpha);
  if (it == values.end()) throw std::invalid_argument("moment sequence: missing moment of degree " + std::to_string(alpha.degree()));
  return it->second;
}

int MomentSequence::complete_order() const {
  int k = -1;
  for (;; ++k) {
    for (const auto& e : monomials_in_range(n, k + 1, k + 1))
      if (!values.count(e)) return k;
  }
}

std::vector<double> MomentSequence::univariate_values() const {
  if (n != 1) throw std::invalid_argument("moment sequence: expected a univariate sequence");
  const int K = complete_order();
  if (K < 0 || static_cast<int>(values.size()) != K + 1) throw std::invalid_argument("moment sequence: gaps in the univariate sequence");
  std::vector<double> y;
  for (int k = 0; k <= K; ++k) y.push_back(at(Exponent({k})));
  return y;
}

double AtomicMeasure::total_mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

MomentSequence AtomicMeasure::moments(int order) const {
  if (atoms.empty()) throw std::invalid_argument("atomic measure: no atoms");
  if (atoms.size() != weights.size()) throw std::invalid_argument("atomic measure: atoms and weights differ in length");
  MomentSequence m;
  m.n = static_cast<int>(atoms.front().size());
  for (const auto& e : monomials_in_range(m.n, 0, order)) {
    double v = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      double mono = 1.0;
      for (int i = 0; i < m.n; ++i) mono *= std::pow(atoms[j](i), e[i]);
      v += weights[j] * mono;
    }
    m.values[e] = v;
  }
  return m;
}

Eigen::MatrixXd moment_matrix(const MomentSequence& y, int d) {
  if (d < 0) throw std::invalid_argument("moment_matrix: negative order");
  const auto basis = monomial_basis(y.n, d);
  const auto s = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd M(s, s);
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      M(i, j) = M(j, i) = y.at(basis[static_cast<std::size_t>(i)] + basis[static_cast<std::size_t>(j)]);
  return M;
}

std::string to_string(MeasureVerdict v) {
  switch (v) {
    case MeasureVerdict::kYes: return "yes";
    case MeasureVerdict::kBoundary: return "boundary";
    case MeasureVerdict::kNo: return "no";
  }
  return "?";
}

MeasureVerdict univariate_has_measure(const MomentSequence& y, double tol) {
  const std::vector<double> v = y.univariate_values();
  if (std::abs(v[0] - 1.0) > 1e-9) throw std::invalid_argument("univariate_has_measure: y_0 must be 1");
  const int d = static_cast<int>(v.size() - 1) / 2;
  const double lmin = min_eigenvalue(moment_matrix(y, d));
  if (lmin > tol) return MeasureVerdict::kYes;
  if (lmin < -tol) return MeasureVerdict::kNo;
  return MeasureVerdict::kBoundary;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff());
  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
    const Eigen::VectorXd zp = Ap.completeOrthogonalDecomposition().solve(b);
    z.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  };
  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    Eigen::Index best = -1;
    double wmax = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      Eigen::VectorXd z;
      solve_passive(z);
      bool ok = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) ok = false;
      if (ok) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
    }
  }
  return x;
}

AtomicMeasure extract_atoms(const MomentSequence& y, double rank_tol) {
  const std::vector<double> v = y.univariate_values();
  const int K = static_cast<int>(v.size()) - 1;
  const int d = K / 2;
  const Eigen::MatrixXd M = moment_matrix(y, d);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues();
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0)) throw std::invalid_argument("extract_atoms: moment matrix is zero or negative");
  if (ev.minCoeff() < -std::max(rank_tol, 1e-9) * lmax) throw std::invalid_argument("extract_atoms: moment matrix is not PSD");
  int r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > rank_tol * lmax) ++r;
  // Full rank is only usable when an odd top moment closes the recursion.
  if (r == d + 1 && K < 2 * r - 1) throw std::runtime_error("extract_atoms: moment matrix has full rank; no flat extension");

  // Hankel recursion sum_{i<r} c_i y_{k+i} = -y_{k+r}, k = 0..K-r.
  const int rows = K - r + 1;
  Eigen::MatrixXd H(rows, r);
  Eigen::VectorXd rhs(rows);
  for (int k = 0; k < rows; ++k) {
    for (int i = 0; i < r; ++i) H(k, i) = v[static_cast<std::size_t>(k + i)];
    rhs(k) = -v[static_cast<std::size_t>(k + r)];
  }
  const Eigen::VectorXd c = H.completeOrthogonalDecomposition().solve(rhs);

  Eigen::VectorXd atoms_v(r);
  if (r == 1) {
    atoms_v(0) = -c(0);
  } else {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(r, r);
    for (int i = 1; i < r; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < r; ++i) C(i, r - 1) = -c(i);
    const Eigen::VectorXcd roots = C.eigenvalues();
    for (int i = 0; i < r; ++i) {
      if (std::abs(roots(i).imag()) > 1e-6 * (1.0 + std::abs(roots(i)))) throw std::runtime_error("extract_atoms: complex atom (flat extension fails)");
      atoms_v(i) = roots(i).real();
    }
    std::sort(atoms_v.data(), atoms_v.data() + r);
  }

  Eigen::MatrixXd V(K + 1, r);
  Eigen::VectorXd b(K + 1);
  for (int k = 0; k <= K; ++k) {
    b(k) = v[static_cast<std::size_t>(k)];
    for (int j = 0; j < r; ++j) V(k, j) = std::pow(atoms_v(j), k);
  }
  const Eigen::VectorXd ls = V.completeOrthogonalDecomposition().solve(b);
  if (ls.minCoeff() < -1e-6 * std::max(1.0, std::abs(v[0]))) throw std::runtime_error("extract_atoms: negative weight");
  const Eigen::VectorXd w = nnls(V, b);

  AtomicMeasure out;
  for (int j = 0; j < r; ++j) {
    if (w(j) <= 0) continue;
    out.atoms.push_back(Eigen::VectorXd::Constant(1, atoms_v(j)));
    out.weights.push_back(w(j));
  }
  out.moment_residual = (V * w - b).cwiseAbs().maxCoeff();
  return out;
}

std::vector<double> near_zero_minimizers(const Polynomial& p, const Interval& domain, double tol, int grid) {
  if (p.num_vars() != 1) throw std::invalid_argument("near_zero_minimizers: polynomial must be univariate");
  if (!domain.bounded_below() || !domain.bounded_above() || domain.lo > domain.hi)
    throw std::invalid_argument("near_zero_minimizers: bounded interval required");
  const double lo = domain.lo, hi = domain.hi;
  const int N = std::max(grid, 3);
  std::vector<double> xs(static_cast<std::size_t>(N)), vs(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    xs[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (N - 1);
    vs[static_cast<std::size_t>(k)] = evaluate(p, {xs[static_cast<std::size_t>(k)]});
  }
  std::vector<double> out;
  for (int k = 0; k < N; ++k) {
    const double v = vs[static_cast<std::size_t>(k)];
    const bool left_ok = k == 0 || v <= vs[static_cast<std::size_t>(k - 1)];
    const bool right_ok = k == N - 1 || v < vs[static_cast<std::size_t>(k + 1)];
    if (!left_ok || !right_ok || v > tol) continue;
    // Golden-section refinement between the grid neighbours.
    double a = xs[static_cast<std::size_t>(std::max(k - 1, 0))], b = xs[static_cast<std::size_t>(std::min(k + 1, N - 1))];
    const double phi = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 60; ++it) {
      const double c = b - phi * (b - a), d = a + phi * (b - a);
      if (evaluate(p, {c}) < evaluate(p, {d}))
        b = d;
      else
        a = c;
    }
    double x = (a + b) / 2;
    if (k == 0 && evaluate(p, {lo}) <= evaluate(p, {x})) x = lo;
    if (k == N - 1 && evaluate(p, {hi}) <= evaluate(p, {x})) x = hi;
    if (out.empty() || x - out.back() > 1e-6 * std::max(hi - lo, 1e-12)) out.push_back(x);
  }
  return out;
}

AtomicMeasure measure_on_support(const std::vector<double>& support, const std::vector<double>& y) {
  if (support.empty() || y.empty()) throw std::invalid_argument("measure_on_support: empty input");
  const auto K = static_cast<Eigen::Index>(y.size());
  const auto s = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd V(K, s);
  Eigen::VectorXd b(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    b(k) = y[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < s; ++j) V(k, j) = std::pow(support[static_cast<std::size_t>(j)], static_cast<double>(k));
  }
  const Eigen::VectorXd w = nnls(V, b);
  AtomicMeasure mu;
  for (Eigen::Index j = 0; j < s; ++j)
    if (w(j) > 1e-9) {
      mu.atoms.push_back(Eigen::VectorXd::Constant(1, support[static_cast<std::size_t>(j)]));
      mu.weights.push_back(w(j));
    }
  mu.moment_residual = (V * w - b).cwiseAbs().maxCoeff();
  return mu;
}

namespace {

void check_interval(const Interval& I, const char* what) {
  if (std::isnan(I.lo) || std::isnan(I.hi) || I.lo > I.hi) throw std::invalid_argument(std::string(what) + ": malformed interval");
}

// Finite window of an interval for grid checks.
std::pair<double, double> window(const Interval& I, double width) {
  double lo = I.lo, hi = I.hi;
  if (!I.bounded_below() && !I.bounded_above()) return {-width, width};
  if (!I.bounded_below()) lo = hi - width;
  if (!I.bounded_above()) hi = lo + width;
  return {lo, hi};
}

double grid_min(const Polynomial& p, const Interval& I, double width) {
  const auto [lo, hi] = window(I, width);
  double m = std::numeric_limits<double>::infinity();
  const int K = 2000;
  for (int k = 0; k < K; ++k) {
    const double x = lo + (hi - lo) * k / (K - 1);
    m = std::min(m, evaluate(p, {x}));
  }
  return m;
}

double grid_width(std::initializer_list<Interval> is) {
  double w = 10.0;
  for (const auto& I : is) {
    if (I.bounded_below()) w = std::max(w, 10.0 * std::abs(I.lo));
    if (I.bounded_above()) w = std::max(w, 10.0 * std::abs(I.hi));
  }
  return w;
}

MomentBound finish(const SosProgram& prog, const ParamPolynomial& lambda, const SolverSettings& settings) {
  const SosSolution sol = prog.solve(settings);
  MomentBound out;
  out.status = sol.status();
  if (sol.status() == SolveStatus::kDualInfeasible)
    throw std::domain_error("moment bound: the moments have no representing measure (dual unbounded)");
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure("moment bound: solver reached its iteration limit");
  if (!sol.optimal()) throw std::runtime_error("moment bound: dual problem reported infeasible");
  out.bound = sol.objective();
  out.lambda = sol.value(lambda);
  return out;
}

}  // namespace

MomentBound probability_bound(const std::vector<double>& y, const Interval& E, const std::vector<Interval>& S,
                              const SolverSettings& settings) {
  if (y.empty() || std::abs(y[0] - 1.0) > 1e-9) throw std::invalid_argument("probability_bound: y_0 must be 1");
  check_interval(E, "probability_bound");
  if (S.empty() || S.size() > 2) throw std::invalid_argument("probability_bound: S must have one or two intervals");
  for (const auto& I : S) {
    check_interval(I, "probability_bound");
    if (I.lo < E.lo || I.hi > E.hi) throw std::invalid_argument("probability_bound: S must lie inside E");
  }
  if (S.size() == 2 && !(S[0].hi < S[1].lo || S[1].hi < S[0].lo))
    throw std::invalid_argument("probability_bound: intervals of S must be disjoint");
  const int K = static_cast<int>(y.size()) - 1;

  SosProgram prog;
  const ParamPolynomial lambda = prog.new_free_poly(1, monomial_basis(1, K));
  const ParamPolynomial one = lift(Polynomial::constant(1, 1.0));
  for (const auto& I : S) prog.add_univariate_nonneg(lambda - one, I, K);
  prog.add_univariate_nonneg(lambda, E, K);
  AffineExpr obj;
  for (int k = 0; k <= K; ++k) obj += y[static_cast<std::size_t>(k)] * lambda.coefficient(Exponent({k}));
  prog.minimize(obj);

  MomentBound out = finish(prog, lambda, settings);
  const double width = grid_width({E, S[0], S.back()});
  out.min_slack = grid_min(out.lambda, E, width);
  for (const auto& I : S) out.min_slack = std::min(out.min_slack, grid_min(out.lambda - Polynomial::constant(1, 1.0), I, width));
  return out;
}

MomentBound option_price_bound(double y0, double y1, double y2, double strike, const SolverSettings& settings) {
  if (std::abs(y0 - 1.0) > 1e-9) throw std::invalid_argument("option_price_bound: y_0 must be 1");
  if (strike < 0) throw std::invalid_argument("option_price_bound: negative strike");
  if (y1 < 0 || y2 < y1 * y1 - 1e-9)
    throw std::domain_error("option_price_bound: the moments have no representing measure on [0, inf)");

  SosProgram prog;
  const ParamPolynomial lambda = prog.new_free_poly(1, monomial_basis(1, 2));
  const Polynomial payoff = parse("x", {"x"}) - Polynomial::constant(1, strike);
  // At k = 0 the first piece is the point {0}, already covered by the second.
  if (strike > 0) prog.add_univariate_nonneg(lambda, Interval::closed(0.0, strike), 2);
  prog.add_univariate_nonneg(lambda - lift(payoff), Interval::at_least(strike), 2);
  prog.minimize(y0 * lambda.coefficient(Exponent({0})) + y1 * lambda.coefficient(Exponent({1})) +
                y2 * lambda.coefficient(Exponent({2})));

  MomentBound out = finish(prog, lambda, settings);
  const double width = grid_width({Interval::at_least(strike)});
  out.min_slack = std::min(strike > 0 ? grid_min(out.lambda, Interval::closed(0.0, strike), width) : evaluate(out.lambda, {0.0}),
                           grid_min(out.lambda - payoff, Interval::at_least(strike), width));
  return out;
}

}  // namespace soskit
