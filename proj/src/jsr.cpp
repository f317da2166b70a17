#include "soskit/jsr.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace soskit {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Polynomial sum_of_squares_power(int n, int d) {
  Polynomial s(n);
  for (int i = 0; i < n; ++i) {
    Exponent e(n);
    e.set(i, 2);
    s.add_term(e, 1.0);
  }
  return pow(s, d);
}

struct Primal {
  SosProgram prog;
  ParamPolynomial p;
  int p_gram = -1;
  double eps = 0;
  std::vector<Exponent> half;
  std::vector<SosHandle> handles;
  AffineExpr normalization;
};

double multinomial(const Exponent& beta) {
  double r = 0.0;
  int total = 0;
  for (int i = 0; i < beta.size(); ++i) {
    total += beta[i];
    r -= std::lgamma(beta[i] + 1.0);
  }
  return std::exp(r + std::lgamma(total + 1.0));
}

Primal build_primal(const MatrixFamily& fam, int two_d, double gamma, double pd_fraction) {
  const int n = fam.dim(), d = two_d / 2;
  Primal out;
  const std::vector<Exponent> half = monomials_in_range(n, d, d);
  out.half = half;
  out.eps = pd_fraction / sphere_integral(Exponent(n), n);
  out.p = out.prog.new_sos_poly(n, half, &out.p_gram) + lift(out.eps * sum_of_squares_power(n, d));
  SosOptions so;
  so.basis = half;
  const double g2d = std::pow(gamma, two_d);
  for (const auto& A : fam.mats) out.handles.push_back(out.prog.add_sos(g2d * out.p - compose_linear(out.p, A), two_d, so));
  for (const auto& [e, c] : out.p.terms()) out.normalization += sphere_integral(e, n) * c;
  out.prog.add_eq(out.normalization - 1.0);
  return out;
}

}  // namespace

MatrixFamily::MatrixFamily(std::vector<Eigen::MatrixXd> m) : mats(std::move(m)) { validate(); }

void MatrixFamily::validate() const {
  if (mats.empty()) throw std::invalid_argument("matrix family: no matrices");
  const Eigen::Index n = mats.front().rows();
  if (n == 0) throw std::invalid_argument("matrix family: empty matrices");
  for (const auto& A : mats) {
    if (A.rows() != n || A.cols() != n) throw std::invalid_argument("matrix family: matrices must be square and of equal size");
    if (!A.allFinite()) throw std::invalid_argument("matrix family: non-finite entry");
  }
}

MatrixFamily MatrixFamily::scaled(double c) const {
  MatrixFamily out = *this;
  for (auto& A : out.mats) A *= c;
  return out;
}

double sphere_integral(const Exponent& alpha, int n) {
  if (n < 1 || alpha.size() != n) throw std::invalid_argument("sphere_integral: exponent length must equal n >= 1");
  double log_num = 0.0, beta_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (alpha[i] % 2 != 0) return 0.0;
    const double b = (alpha[i] + 1) / 2.0;
    log_num += std::lgamma(b);
    beta_sum += b;
  }
  return 2.0 * std::exp(log_num - std::lgamma(beta_sum));
}

double spectral_norm(const Eigen::MatrixXd& B, int iterations) {
  if (B.size() == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(B.cols()) / std::sqrt(static_cast<double>(B.cols()));
  // A fixed, non-symmetric start avoids landing exactly in a null space.
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-3 * static_cast<double>(i + 1);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = B.transpose() * (B * v);
    const double nw = w.norm();
    if (nw == 0.0) {
      // v is in the null space; fall back to the largest column.
      Eigen::Index j;
      B.colwise().norm().maxCoeff(&j);
      v = Eigen::VectorXd::Unit(B.cols(), j);
      w = B.transpose() * (B * v);
      if (w.norm() == 0.0) return 0.0;
      continue;
    }
    v = w / nw;
    sigma = std::sqrt(nw);
  }
  return (B * v).norm() > 0 ? std::max(sigma, (B * v).norm()) : sigma;
}

JsrBound jsr_upper_bound(const MatrixFamily& fam, int two_d, const JsrOptions& opts) {
  fam.validate();
  if (two_d < 2 || two_d % 2 != 0) throw std::invalid_argument("jsr_upper_bound: degree must be even and >= 2");
  if (!(opts.bisect_tol > 0)) throw std::invalid_argument("jsr_upper_bound: bisection tolerance must be positive");
  if (!(opts.pd_fraction > 0 && opts.pd_fraction < 1)) throw std::invalid_argument("jsr_upper_bound: pd_fraction must lie in (0, 1)");
  const int n = fam.dim(), d = two_d / 2;

  // (g^2 |x|^2)^d - |Ax|^{2d} factors into sos terms once g >= ||A||_2, so
  // this end of the bracket is feasible.
  double hi = 0.0;
  for (const auto& A : fam.mats) hi = std::max({hi, A.cwiseAbs().rowwise().sum().maxCoeff(), spectral_norm(A)});
  hi = std::max(1.01 * hi, opts.bisect_tol);

  JsrBound out;
  out.two_d = two_d;
  double best = std::numeric_limits<double>::infinity();
  bool any_verdict = false;
  auto oracle = [&](double gamma) {
    Primal pr = build_primal(fam, two_d, gamma, opts.pd_fraction);
    const SosSolution sol = pr.prog.solve(opts.solver);
    if (sol.status() != SolveStatus::kMaxIterations) any_verdict = true;
    if (!sol.optimal()) return sol.status();
    // Turn the floating-point solution into a certified bound: with
    // Gram(p) >= e I and Gram(g^{2d} p - p(Ax)) >= -delta I, the level
    // (g^{2d} + delta / e)^{1/2d} is certified exactly.
    Eigen::MatrixXd gp = sol.gram(pr.p_gram);
    for (std::size_t k = 0; k < pr.half.size(); ++k)
      gp(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += pr.eps * multinomial(pr.half[k]);
    const double e = min_eigenvalue(gp);
    double delta = 0.0;
    std::vector<double> res{0.0};
    for (const auto& h : pr.handles) {
      const double r = sol.reconstruction_error(h);
      res.push_back(r);
      const double slack = std::max(0.0, -sol.min_eigenvalue(h)) + r * static_cast<double>(sol.record(h).target.terms().size());
      delta = std::max(delta, slack);
    }
    if (!(e > 0)) return SolveStatus::kMaxIterations;
    const double certified = std::pow(std::pow(gamma, two_d) + delta / e, 1.0 / two_d);
    if (certified > gamma + 0.25 * opts.bisect_tol) return SolveStatus::kMaxIterations;
    if (certified < best) {
      best = certified;
      out.witness = sol.value(pr.p);
      out.normalization_error = std::abs(sol.value(pr.normalization) - 1.0);
      out.residuals = res;
      out.min_eig_p = e;
    }
    return SolveStatus::kOptimal;
  };
  BisectResult br;
  try {
    br = bisect(oracle, 0.0, hi, opts.bisect_tol, BisectSense::kSmallestFeasible);
  } catch (const std::runtime_error&) {
    if (!any_verdict) throw SolverFailure("jsr_upper_bound: solver failed at every bisection step");
    throw;
  }
  out.gamma_upper = std::isfinite(best) ? std::max(best, br.gamma) : br.gamma;
  out.steps = br.steps;
  out.lower_bound = out.gamma_upper / std::pow(binomial(n + d - 1, d), 1.0 / two_d);
  return out;
}

SwitchingSequence generate_unstable_sequence(const MatrixFamily& fam, int two_d, int k_steps, const JsrOptions& opts) {
  fam.validate();
  if (k_steps < 1) throw std::invalid_argument("generate_unstable_sequence: need at least one step");
  const int n = fam.dim(), m = fam.size(), d = two_d / 2;
  const JsrBound primal = jsr_upper_bound(fam, two_d, opts);

  const std::vector<Exponent> forms = monomials_in_range(n, two_d, two_d);
  const std::vector<Exponent> half = monomials_in_range(n, d, d);
  std::map<Exponent, int, GradedLex> index;
  for (std::size_t k = 0; k < forms.size(); ++k) index[forms[k]] = static_cast<int>(k);
  const int N = static_cast<int>(forms.size());

  // T_A maps coefficients of p to those of p(Ax); mu^A = T_A' mu.
  std::vector<Eigen::MatrixXd> T;
  for (const auto& A : fam.mats) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(N, N);
    for (int a = 0; a < N; ++a) {
      const Polynomial image = compose_linear(Polynomial::monomial(forms[static_cast<std::size_t>(a)], 1.0), A);
      for (const auto& [e, c] : image.terms()) t(index.at(e), a) += c;
    }
    T.push_back(std::move(t));
  }
  const Polynomial s = sum_of_squares_power(n, d);
  Eigen::VectorXd svec_coeffs = Eigen::VectorXd::Zero(N);
  for (const auto& [e, c] : s.terms()) svec_coeffs(index.at(e)) = c;

  auto moment_matrix = [&](const std::vector<AffineExpr>& mu) {
    std::vector<std::vector<AffineExpr>> M(half.size(), std::vector<AffineExpr>(half.size()));
    for (std::size_t i = 0; i < half.size(); ++i)
      for (std::size_t j = 0; j < half.size(); ++j) M[i][j] = mu[static_cast<std::size_t>(index.at(half[i] + half[j]))];
    return M;
  };

  std::vector<Eigen::VectorXd> mu_star;
  auto oracle = [&](double lambda) {
    SosProgram prog;
    std::vector<std::vector<AffineExpr>> mu(static_cast<std::size_t>(m));
    for (auto& v : mu) v = prog.new_vars(N);
    std::vector<AffineExpr> combo(static_cast<std::size_t>(N));
    const double l2d = std::pow(lambda, two_d);
    AffineExpr norm;
    for (int i = 0; i < m; ++i) {
      const auto& mi = mu[static_cast<std::size_t>(i)];
      for (int b = 0; b < N; ++b) {
        AffineExpr e = -l2d * mi[static_cast<std::size_t>(b)];
        for (int a = 0; a < N; ++a)
          if (T[static_cast<std::size_t>(i)](a, b) != 0.0) e += T[static_cast<std::size_t>(i)](a, b) * mi[static_cast<std::size_t>(a)];
        combo[static_cast<std::size_t>(b)] += e;
        norm += svec_coeffs(b) * mi[static_cast<std::size_t>(b)];
      }
      prog.add_psd(moment_matrix(mi));
    }
    prog.add_psd(moment_matrix(combo));
    prog.add_eq(norm - 1.0);
    const SosSolution sol = prog.solve(opts.solver);
    if (sol.optimal()) {
      mu_star.clear();
      for (const auto& mi : mu) {
        Eigen::VectorXd v(N);
        for (int b = 0; b < N; ++b) v(b) = sol.value(mi[static_cast<std::size_t>(b)]);
        mu_star.push_back(std::move(v));
      }
    }
    return sol.status();
  };
  // The last feasible probe is the largest lambda seen (monotone bisection).
  const BisectResult br = bisect(oracle, 0.0, std::max(primal.gamma_upper, opts.bisect_tol), opts.bisect_tol,
                                 BisectSense::kLargestFeasible);
  if (mu_star.empty()) throw std::runtime_error("generate_unstable_sequence: dual problem has no solution");

  SwitchingSequence out;
  out.lambda = br.gamma;
  out.guarantee = br.gamma / std::pow(static_cast<double>(m), 1.0 / two_d);
  out.gamma_upper = primal.gamma_upper;

  auto pairing = [&](int i, const Eigen::MatrixXd& B) {
    double v = 0.0;
    const Polynomial image = compose_linear(s, B);
    for (const auto& [e, c] : image.terms()) v += mu_star[static_cast<std::size_t>(i)](index.at(e)) * c;
    return v;
  };
  int first = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double v = svec_coeffs.dot(mu_star[static_cast<std::size_t>(i)]);
    if (v > best) {
      best = v;
      first = i;
    }
  }
  if (!(best > 0)) throw std::runtime_error("generate_unstable_sequence: no index with positive initial pairing");
  out.sigma.push_back(first);
  // Product kept normalized; its log-scale is tracked separately.
  Eigen::MatrixXd P = fam.mats[static_cast<std::size_t>(first)];
  double log_scale = 0.0;
  auto renormalize = [&] {
    const double nrm = P.norm();
    if (nrm > 0) {
      P /= nrm;
      log_scale += std::log(nrm);
    }
  };
  renormalize();
  for (int k = 1; k < k_steps; ++k) {
    int pick = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double v = pairing(i, fam.mats[static_cast<std::size_t>(i)] * P);
      if (v > top) {
        top = v;
        pick = i;
      }
    }
    out.sigma.push_back(pick);
    P = fam.mats[static_cast<std::size_t>(pick)] * P;
    renormalize();
  }
  const double sn = spectral_norm(P);
  out.growth = sn > 0 ? std::exp((log_scale + std::log(sn)) / k_steps) : 0.0;
  return out;
}

}  // namespace soskit
