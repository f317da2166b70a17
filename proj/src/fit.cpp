#include "soskit/fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace soskit {

namespace {

double monomial_value(const Exponent& e, const Eigen::VectorXd& x) {
  double v = 1.0;
  for (int i = 0; i < e.size(); ++i) v *= std::pow(x(i), e[i]);
  return v;
}

Eigen::MatrixXd design_matrix(const Dataset& data, const std::vector<Exponent>& basis) {
  Eigen::MatrixXd V(data.size(), static_cast<Eigen::Index>(basis.size()));
  for (int i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.X.row(i).transpose();
    for (std::size_t k = 0; k < basis.size(); ++k) V(i, static_cast<Eigen::Index>(k)) = monomial_value(basis[k], x);
  }
  return V;
}

// Calls visit(x) on a tensor grid over the box, at most ~2e5 points.
template <class F>
void for_each_grid_point(const std::vector<Interval>& box, int per_axis, F&& visit) {
  const int n = static_cast<int>(box.size());
  const int cap = std::max(2, static_cast<int>(std::floor(std::pow(2e5, 1.0 / n))));
  const int g = std::max(2, std::min(per_axis, cap));
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd x(n);
  for (;;) {
    for (int i = 0; i < n; ++i) {
      const auto& iv = box[static_cast<std::size_t>(i)];
      x(i) = iv.lo + (iv.hi - iv.lo) * idx[static_cast<std::size_t>(i)] / (g - 1);
    }
    visit(x);
    int i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] == g) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) return;
  }
}

// Copy of p in a space of `total` variables (p's variables first).
ParamPolynomial widen(const ParamPolynomial& p, int total) {
  ParamPolynomial out(total);
  for (const auto& [e, c] : p.terms()) {
    Exponent w(total);
    for (int i = 0; i < e.size(); ++i) w.set(i, e[i]);
    out.add_term(w, c);
  }
  return out;
}

void require_solved(const SosSolution& sol, const char* who) {
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure(std::string(who) + ": solver reached its iteration limit");
  if (sol.status() == SolveStatus::kPrimalInfeasible) throw std::domain_error(std::string(who) + ": infeasible");
  if (!sol.optimal()) throw std::runtime_error(std::string(who) + ": unexpected solver status " + to_string(sol.status()));
}

}  // namespace

void Dataset::validate() const {
  if (X.rows() < 1) throw std::invalid_argument("dataset: no observations");
  if (y.size() != X.rows()) throw std::invalid_argument("dataset: response length differs from the number of rows");
  if (static_cast<int>(box.size()) != dim()) throw std::invalid_argument("dataset: box dimension differs from the inputs");
  for (const auto& iv : box)
    if (!iv.bounded_below() || !iv.bounded_above() || !(iv.lo < iv.hi)) throw std::invalid_argument("dataset: box must be bounded and nonempty");
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < dim(); ++j)
      if (!box[static_cast<std::size_t>(j)].contains(X(i, j))) throw std::invalid_argument("dataset: point outside the box");
}

Dataset Dataset::with_bounding_box(Eigen::MatrixXd X, Eigen::VectorXd y) {
  Dataset d;
  d.X = std::move(X);
  d.y = std::move(y);
  for (int j = 0; j < d.dim(); ++j) {
    double lo = d.X.col(j).minCoeff(), hi = d.X.col(j).maxCoeff();
    if (!(lo < hi)) {
      lo -= 0.5;
      hi += 0.5;
    }
    d.box.push_back(Interval::closed(lo, hi));
  }
  return d;
}

Dataset Dataset::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == ';'; }, ' ');
    std::istringstream ss(line);
    std::vector<double> r;
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        // A non-numeric first line is a header.
        if (rows.empty() && r.empty()) break;
        throw std::runtime_error("dataset: bad number '" + tok + "'");
      }
      r.push_back(v);
    }
    if (r.empty()) continue;
    if (!rows.empty() && r.size() != rows.front().size()) throw std::runtime_error("dataset: ragged rows");
    rows.push_back(std::move(r));
  }
  if (rows.empty() || rows.front().size() < 2) throw std::runtime_error("dataset: need at least one input column and a response");
  const auto m = static_cast<Eigen::Index>(rows.size()), n = static_cast<Eigen::Index>(rows.front().size()) - 1;
  Eigen::MatrixXd X(m, n);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y(i) = rows[static_cast<std::size_t>(i)].back();
  }
  return with_bounding_box(std::move(X), std::move(y));
}

Polynomial least_squares_fit(const Dataset& data, int degree) {
  data.validate();
  if (degree < 0) throw std::invalid_argument("least_squares_fit: negative degree");
  const auto basis = monomial_basis(data.dim(), degree);
  const Eigen::MatrixXd V = design_matrix(data, basis);
  const Eigen::VectorXd c = V.completeOrthogonalDecomposition().solve(data.y);
  Polynomial f(data.dim());
  for (std::size_t k = 0; k < basis.size(); ++k) f.add_term(basis[k], c(static_cast<Eigen::Index>(k)));
  return f;
}

double rmse(const Polynomial& f, const Dataset& data) {
  double s = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const double r = evaluate(f, Eigen::VectorXd(data.X.row(i).transpose())) - data.y(i);
    s += r * r;
  }
  return std::sqrt(s / data.size());
}

ShapeFit fit_shape_constrained(const Dataset& data, const ShapeSpec& spec, const FitOptions& opts) {
  data.validate();
  const int n = data.dim();
  if (spec.degree < 1) throw std::invalid_argument("fit: degree must be at least 1");
  std::vector<int> rho = spec.monotone.empty() ? std::vector<int>(static_cast<std::size_t>(n), 0) : spec.monotone;
  if (static_cast<int>(rho.size()) != n) throw std::invalid_argument("fit: monotonicity profile has the wrong length");
  for (int r : rho)
    if (r < -1 || r > 1) throw std::invalid_argument("fit: monotonicity entries must be -1, 0 or +1");

  const auto basis = monomial_basis(n, spec.degree);
  const Eigen::MatrixXd V = design_matrix(data, basis);
  SosProgram prog;
  const ParamPolynomial f = prog.new_free_poly(n, basis);
  std::vector<AffineExpr> coeff;
  for (const auto& e : basis) coeff.push_back(f.coefficient(e));

  // ||V c - y|| <= t.
  const AffineExpr t = prog.new_var(0.0);
  std::vector<AffineExpr> cone = {t};
  for (int i = 0; i < data.size(); ++i) {
    AffineExpr r = -data.y(i);
    for (std::size_t k = 0; k < basis.size(); ++k) r += V(i, static_cast<Eigen::Index>(k)) * coeff[k];
    cone.push_back(r);
  }
  prog.add_soc(cone);
  prog.minimize(t);

  for (int j = 0; j < n; ++j) {
    if (rho[static_cast<std::size_t>(j)] == 0) continue;
    const ParamPolynomial q = static_cast<double>(rho[static_cast<std::size_t>(j)]) * differentiate(f, j);
    if (n == 1) {
      prog.add_univariate_nonneg(q, data.box[0]);
    } else {
      prog.add_box_nonneg(q, data.box, 0, spec.degree - 1 + opts.relaxation_degree);
    }
  }
  if (spec.convex && spec.degree >= 2) {
    if (n == 1) {
      prog.add_univariate_nonneg(differentiate(differentiate(f, 0), 0), data.box[0]);
    } else {
      // z' H_f(x) z over (x, z); z enters quadratically.
      const int total = 2 * n;
      ParamPolynomial q(total);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          Exponent zz(total);
          zz.set(n + a, zz[n + a] + 1);
          zz.set(n + b, zz[n + b] + 1);
          q += widen(differentiate(differentiate(f, a), b), total).multiply(Polynomial::monomial(zz, 1.0));
        }
      prog.add_box_nonneg(q, data.box, n, spec.degree - 2 + opts.relaxation_degree);
    }
  }

  // When the best fit is linear along some direction the Hessian certificate is
  // singular and ADMM plateaus above tight tolerances. Relax towards 1e-6,
  // resuming from the last iterate; the grid post-checks below still apply.
  constexpr double kLoosestEps = 1e-6;
  SolverSettings settings = opts.solver;
  SosSolution sol = prog.solve(settings);
  while (sol.status() == SolveStatus::kMaxIterations && settings.eps < kLoosestEps) {
    settings.eps = std::min(10 * settings.eps, kLoosestEps);
    const SolveResult& last = sol.solver();
    sol = prog.solve(settings, WarmStart{last.x, last.y, last.s});
  }
  require_solved(sol, "fit_shape_constrained");

  ShapeFit out;
  out.solver_eps = settings.eps;
  out.f = sol.value(f);
  out.rmse = rmse(out.f, data);
  out.rmse_unconstrained = rmse(least_squares_fit(data, spec.degree), data);

  std::vector<Polynomial> grad = gradient(out.f);
  std::vector<std::vector<Polynomial>> hess;
  for (const auto& g : grad) hess.push_back(gradient(g));
  out.min_monotone = std::numeric_limits<double>::infinity();
  out.min_convex = std::numeric_limits<double>::infinity();
  for_each_grid_point(data.box, opts.grid_per_axis, [&](const Eigen::VectorXd& x) {
    for (int j = 0; j < n; ++j)
      if (rho[static_cast<std::size_t>(j)] != 0)
        out.min_monotone = std::min(out.min_monotone, rho[static_cast<std::size_t>(j)] * evaluate(grad[static_cast<std::size_t>(j)], x));
    if (spec.convex) {
      Eigen::MatrixXd H(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) H(a, b) = evaluate(hess[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], x);
      out.min_convex = std::min(out.min_convex, min_eigenvalue(H));
    }
  });
  const double tol = 1e-6 * std::max(1.0, max_abs_coeff(out.f));
  if (out.min_monotone < -tol) throw std::runtime_error("fit_shape_constrained: monotonicity post-check failed");
  if (out.min_convex < -tol) throw std::runtime_error("fit_shape_constrained: convexity post-check failed");
  return out;
}

namespace {

double fisher_min_eig(const AtomicMeasure& mu, int d) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (std::size_t k = 0; k < mu.atoms.size(); ++k) {
    Eigen::VectorXd z(d + 1);
    for (int i = 0; i <= d; ++i) z(i) = std::pow(mu.atoms[k](0), i);
    F += mu.weights[k] * z * z.transpose();
  }
  return min_eigenvalue(F);
}

}  // namespace

EDesign e_optimal_design(const std::vector<Interval>& domain, int d, const DesignOptions& opts) {
  const int n = static_cast<int>(domain.size());
  if (n < 1) throw std::invalid_argument("e_optimal_design: empty domain");
  if (d < 0) throw std::invalid_argument("e_optimal_design: negative degree");
  for (const auto& iv : domain)
    if (!iv.bounded_below() || !iv.bounded_above() || !(iv.lo < iv.hi)) throw std::invalid_argument("e_optimal_design: domain must be a bounded nonempty box");

  const auto basis = monomial_basis(n, d);
  const int s = static_cast<int>(basis.size());
  EDesign out;

  // Moment side: max gamma, M_d(y) - gamma I PSD, localizing matrices of the
  // generators (hi_i - x_i)(x_i - lo_i) PSD, y_0 = 1.
  {
    SosProgram prog;
    std::map<Exponent, AffineExpr, GradedLex> y;
    y.emplace(Exponent(n), AffineExpr(1.0));
    for (const auto& e : monomial_basis(n, 2 * d))
      if (e.degree() > 0) y.emplace(e, prog.new_var());
    const AffineExpr gamma = prog.new_var();
    std::vector<std::vector<AffineExpr>> M(static_cast<std::size_t>(s), std::vector<AffineExpr>(static_cast<std::size_t>(s)));
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        M[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = y.at(basis[static_cast<std::size_t>(i)] + basis[static_cast<std::size_t>(j)]);
        if (i == j) M[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -= gamma;
      }
    prog.add_psd(M);
    if (d >= 1) {
      const auto lb = monomial_basis(n, d - 1);
      const auto ls = lb.size();
      for (int v = 0; v < n; ++v) {
        const double lo = domain[static_cast<std::size_t>(v)].lo, hi = domain[static_cast<std::size_t>(v)].hi;
        const Exponent ev = Exponent::unit(n, v);
        std::vector<std::vector<AffineExpr>> L(ls, std::vector<AffineExpr>(ls));
        for (std::size_t i = 0; i < ls; ++i)
          for (std::size_t j = 0; j < ls; ++j) {
            const Exponent g = lb[i] + lb[j];
            L[i][j] = (hi + lo) * y.at(g + ev) - y.at(g + ev + ev) - lo * hi * y.at(g);
          }
        prog.add_psd(L);
      }
    }
    prog.maximize(gamma);
    const SosSolution sol = prog.solve(opts.solver);
    require_solved(sol, "e_optimal_design (moments)");
    out.gamma_primal = sol.value(gamma);
    out.moments.n = n;
    for (const auto& [e, v] : y) out.moments.values[e] = sol.value(v);
  }

  // Polynomial side: min lambda, lambda - z'Qz >= 0 on the domain, tr Q = 1.
  Polynomial slack;
  {
    SosProgram prog;
    int qid = -1;
    const ParamPolynomial zQz = prog.new_sos_poly(n, basis, &qid);
    const AffineExpr lambda = prog.new_var();
    const ParamPolynomial q = ParamPolynomial::constant(n, lambda) - zQz;
    if (n == 1)
      prog.add_univariate_nonneg(q, domain[0], 2 * d);
    else
      prog.add_box_nonneg(q, domain, 0, 2 * d);
    prog.add_eq(prog.gram_trace(qid) - 1.0);
    prog.minimize(lambda);
    const SosSolution sol = prog.solve(opts.solver);
    require_solved(sol, "e_optimal_design (polynomial)");
    out.gamma_dual = sol.value(lambda);
    out.Q = sol.gram(qid);
    slack = sol.value(q);
  }

  if (n != 1) return out;

  const double lo = domain[0].lo, hi = domain[0].hi;
  auto accept = [&](AtomicMeasure mu, const std::string& note) {
    for (const auto& a : mu.atoms)
      if (a(0) < lo - 1e-6 * (hi - lo) || a(0) > hi + 1e-6 * (hi - lo)) return false;
    const double f = fisher_min_eig(mu, d);
    if (std::abs(f - out.gamma_primal) > opts.extraction_tol) return false;
    out.design = std::move(mu);
    out.fisher_min_eig = f;
    out.extraction_note = note;
    return true;
  };

  if (d == 0) {
    AtomicMeasure mu;
    mu.atoms = {Eigen::VectorXd::Constant(1, (lo + hi) / 2)};
    mu.weights = {1.0};
    accept(std::move(mu), "constant model: any single point");
    return out;
  }
  try {
    if (accept(extract_atoms(out.moments), "moment atoms")) return out;
  } catch (const std::exception&) {
    // Full-rank optimal moments are common here; fall through.
  }
  // The support lies where the dual certificate touches zero; weights match
  // the optimal moments in the nonnegative least-squares sense.
  const std::vector<double> support = near_zero_minimizers(slack, domain[0], 1e-4 * std::max(1.0, out.gamma_dual));
  if (!support.empty()) {
    AtomicMeasure mu = measure_on_support(support, out.moments.univariate_values());
    if (!mu.atoms.empty() && accept(std::move(mu), "touching points of the dual certificate")) return out;
  }
  out.extraction_note = "design extraction failed; moments returned";
  return out;
}

}  // namespace soskit
