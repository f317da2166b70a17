#include "soskit/certify.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace soskit {

namespace {

int round_up_even(int d) { return d % 2 == 0 ? d : d + 1; }

Polynomial sum_of_powers(int n, int p) {
  Polynomial out(n);
  for (int i = 0; i < n; ++i) {
    Exponent e(n);
    e.set(i, p);
    out.add_term(e, 1.0);
  }
  return out;
}

// Every variable must appear as a pure power in the basis, otherwise z'Qz > 0
// does not imply positivity away from the origin.
bool covers_all_axes(const std::vector<Exponent>& basis, int n) {
  for (int i = 0; i < n; ++i) {
    bool hit = false;
    for (const auto& m : basis)
      if (m[i] > 0 && m.degree() == m[i]) hit = true;
    if (!hit) return false;
  }
  return true;
}

void check_field(const VectorField& f) {
  const int n = f.dim();
  if (n == 0) throw std::invalid_argument("vector field: no components");
  for (const auto& c : f.components)
    if (c.num_vars() != n) throw std::invalid_argument("vector field: component count does not match variable count");
}

SolveStatus require_verdict(const SosSolution& sol, const char* what) {
  if (sol.status() == SolveStatus::kMaxIterations)
    throw SolverFailure(std::string(what) + ": solver reached its iteration limit without a verdict");
  return sol.status();
}

Polynomial gram_poly(const SosSolution& sol, const SosProgram& prog, int block, int n) {
  const auto& z = prog.gram_block(block).basis;
  const Eigen::MatrixXd q = sol.gram(block);
  Polynomial p(n);
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < z.size(); ++j)
      p.add_term(z[i] + z[j], q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  return p;
}

}  // namespace

VectorField::VectorField(std::vector<Polynomial> c) : components(std::move(c)) { check_field(*this); }

VectorField VectorField::parse(const std::vector<std::string>& exprs, const std::vector<std::string>& vars) {
  std::vector<Polynomial> c;
  for (const auto& e : exprs) c.push_back(soskit::parse(e, vars));
  return VectorField(std::move(c));
}

int VectorField::degree() const {
  int d = 0;
  for (const auto& c : components) d = std::max(d, c.degree());
  return d;
}

Eigen::VectorXd VectorField::operator()(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(dim());
  for (int i = 0; i < dim(); ++i) out(i) = evaluate(components[static_cast<std::size_t>(i)], x);
  return out;
}

bool VectorField::vanishes_at_origin() const {
  for (const auto& c : components)
    if (!negligible(c.coefficient(Exponent(c.num_vars())))) return false;
  return true;
}

ParamPolynomial lie_derivative(const ParamPolynomial& V, const VectorField& f) {
  ParamPolynomial out(V.num_vars());
  for (int i = 0; i < f.dim(); ++i) out += differentiate(V, i) * f.components[static_cast<std::size_t>(i)];
  return out;
}

Polynomial lie_derivative(const Polynomial& V, const VectorField& f) {
  Polynomial out(V.num_vars());
  for (int i = 0; i < f.dim(); ++i) out += differentiate(V, i) * f.components[static_cast<std::size_t>(i)];
  return out;
}

std::vector<Eigen::VectorXd> integrate_rk4(const VectorField& f, const Eigen::VectorXd& x0, double step,
                                           double horizon, int stride) {
  if (step <= 0 || stride < 1) throw std::invalid_argument("integrate_rk4: step and stride must be positive");
  const int steps = static_cast<int>(std::ceil(horizon / step));
  std::vector<Eigen::VectorXd> out{x0};
  Eigen::VectorXd x = x0;
  for (int k = 1; k <= steps; ++k) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * step * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * step * k2);
    const Eigen::VectorXd k4 = f(x + step * k3);
    x += step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!x.allFinite()) break;
    if (k % stride == 0) out.push_back(x);
  }
  return out;
}

LyapunovSearch find_lyapunov(const VectorField& f, int two_d, const LyapunovOptions& opts) {
  check_field(f);
  if (two_d < 2 || two_d % 2 != 0) throw std::invalid_argument("find_lyapunov: degree must be even and >= 2");
  if (!f.vanishes_at_origin()) throw std::invalid_argument("find_lyapunov: the origin is not an equilibrium");
  const int n = f.dim();

  SosProgram prog;
  const ParamPolynomial V = prog.new_free_poly(n, monomials_in_range(n, 2, two_d));
  SosOptions strict;
  strict.gram_margin = opts.gram_margin;
  strict.prune_basis = true;
  const SosHandle hV = prog.add_sos(V, two_d, strict);
  const ParamPolynomial negVdot = -lie_derivative(V, f);
  const SosHandle hD = prog.add_sos(negVdot, round_up_even(std::max(negVdot.degree(), 2)), strict);
  const Polynomial phi = sum_of_powers(n, two_d);
  SosOptions top_opts;
  top_opts.prune_basis = true;
  prog.add_sos(top_component(V) - lift(opts.phi_eps_gamma * phi), two_d, top_opts);
  prog.minimize(prog.gram_trace(prog.gram_of(hV)) + prog.gram_trace(prog.gram_of(hD)));

  const SosSolution sol = prog.solve(opts.solver);
  LyapunovSearch out;
  out.status = require_verdict(sol, "find_lyapunov");
  if (!sol.optimal()) {
    out.reason = "no certificate of degree " + std::to_string(two_d) + " (" + to_string(out.status) + ")";
    return out;
  }

  LyapunovCertificate c;
  c.degree = two_d;
  c.V = sol.value(V);
  c.neg_vdot = -lie_derivative(c.V, f);
  c.gram_V = sol.gram(hV);
  c.gram_negVdot = sol.gram(hD);
  c.basis_V = sol.basis(hV);
  c.basis_negVdot = sol.basis(hD);
  c.min_eig_V = sol.min_eigenvalue(hV);
  c.min_eig_negVdot = sol.min_eigenvalue(hD);
  c.residual_V = sol.reconstruction_error(hV);
  c.residual_negVdot = sol.reconstruction_error(hD);
  c.strengthening = opts.phi_eps_gamma;

  // Independent re-check of the top component with a fresh solve.
  const SosCheck top = check_sos(top_component(c.V) - opts.phi_eps_gamma * phi, opts.solver, top_opts);
  c.gram_top = top.gram;
  c.basis_top = top.basis;
  c.min_eig_top = top.min_eigenvalue;
  c.residual_top = top.residual;

  const double scale = std::max(1.0, max_abs_coeff(c.V));
  const double res_tol = 1e-6 * scale;
  if (c.min_eig_V <= opts.check_tol) {
    out.reason = "Gram matrix of V is not positive definite";
  } else if (c.min_eig_negVdot <= opts.check_tol) {
    out.reason = "Gram matrix of -dV/dt is not positive definite";
  } else if (!top.feasible) {
    out.reason = "top component of V is not certified positive definite";
  } else if (c.residual_V > res_tol || c.residual_negVdot > res_tol) {
    out.reason = "Gram reconstruction residual too large";
  } else if (!covers_all_axes(c.basis_V, n) || !covers_all_axes(c.basis_negVdot, n)) {
    out.reason = "certificate basis misses a coordinate direction";
  } else {
    out.certificate = std::move(c);
  }
  return out;
}

LyapunovSearch find_lyapunov_auto(const VectorField& f, int max_degree, const LyapunovOptions& opts) {
  LyapunovSearch last;
  for (int d = 2; d <= max_degree; d += 2) {
    last = find_lyapunov(f, d, opts);
    if (last.certificate) return last;
  }
  return last;
}

LinearLyapunov find_lyapunov_linear(const Eigen::MatrixXd& A, double check_tol, const SolverSettings& st) {
  if (A.rows() != A.cols() || A.rows() == 0) throw std::invalid_argument("find_lyapunov_linear: A must be square");
  const int n = static_cast<int>(A.rows());
  SosProgram prog;
  std::vector<std::vector<AffineExpr>> P(static_cast<std::size_t>(n), std::vector<AffineExpr>(static_cast<std::size_t>(n)));
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) P[i][j] = P[j][i] = prog.new_var();
  auto shifted = P;
  for (int i = 0; i < n; ++i) shifted[i][i] -= 1.0;
  // -(A'P + PA) - I >= 0
  std::vector<std::vector<AffineExpr>> D(static_cast<std::size_t>(n), std::vector<AffineExpr>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      AffineExpr e;
      for (int k = 0; k < n; ++k) {
        e -= A(k, i) * P[k][j];
        e -= P[i][k] * A(k, j);
      }
      if (i == j) e -= 1.0;
      D[i][j] = e;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) D[i][j] = D[j][i];
  prog.add_psd(shifted);
  prog.add_psd(D);
  AffineExpr tr;
  for (int i = 0; i < n; ++i) tr += P[i][i];
  prog.minimize(tr);
  const SosSolution sol = prog.solve(st);
  require_verdict(sol, "find_lyapunov_linear");
  LinearLyapunov out;
  if (!sol.optimal()) return out;
  Eigen::MatrixXd Pm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Pm(i, j) = sol.value(P[i][j]);
  out.min_eig_P = min_eigenvalue(Pm);
  out.min_eig_decrease = min_eigenvalue(-(A.transpose() * Pm + Pm * A));
  if (out.min_eig_P > check_tol && out.min_eig_decrease > check_tol) out.P = Pm;
  return out;
}

BarrierSearch find_barrier(const VectorField& f, const std::vector<Polynomial>& initial,
                           const std::vector<Polynomial>& unsafe, int degree, const BarrierOptions& opts) {
  check_field(f);
  const int n = f.dim();
  if (degree < 1) throw std::invalid_argument("find_barrier: degree must be positive");
  if (initial.empty() || unsafe.empty()) throw std::invalid_argument("find_barrier: initial and unsafe sets are required");
  for (const auto& g : initial)
    if (g.num_vars() != n) throw std::invalid_argument("find_barrier: initial-set polynomial has the wrong variable count");
  for (const auto& g : unsafe)
    if (g.num_vars() != n) throw std::invalid_argument("find_barrier: unsafe-set polynomial has the wrong variable count");

  SosProgram prog;
  const ParamPolynomial B = prog.new_free_poly(n, monomial_basis(n, degree));
  const int D = opts.multiplier_degree.value_or(round_up_even(degree));
  std::vector<int> blocks;

  // Representation target = s0 + sum_i s_i g_i with degree budget D.
  auto represent = [&](const ParamPolynomial& target, const std::vector<Polynomial>& gs) {
    std::vector<int> ids;
    int id = -1;
    ParamPolynomial rhs = prog.new_sos_poly(n, monomial_basis(n, D / 2), &id);
    ids.push_back(id);
    for (const auto& g : gs) {
      const int room = std::max(0, D - g.degree());
      rhs += prog.new_sos_poly(n, monomial_basis(n, room / 2), &id) * g;
      ids.push_back(id);
    }
    prog.add_identity(target - rhs);
    blocks.insert(blocks.end(), ids.begin(), ids.end());
    return ids;
  };
  const std::vector<int> sig = represent(B - lift(Polynomial::constant(n, opts.eps)), unsafe);
  const std::vector<int> tau = represent(-B, initial);
  const ParamPolynomial negBdot = -lie_derivative(B, f);
  SosOptions dec;
  dec.prune_basis = true;
  const SosHandle hD = prog.add_sos(negBdot, round_up_even(std::max(negBdot.degree(), 2)), dec);
  blocks.push_back(prog.gram_of(hD));

  const SosSolution sol = prog.solve(opts.solver);
  BarrierSearch out;
  out.status = require_verdict(sol, "find_barrier");
  if (!sol.optimal()) {
    out.reason = "no barrier of degree " + std::to_string(degree) + " (" + to_string(out.status) + ")";
    return out;
  }

  BarrierCertificate c;
  c.eps = opts.eps;
  c.B = sol.value(B);
  for (int id : sig) c.sigma.push_back(gram_poly(sol, prog, id, n));
  for (int id : tau) c.tau.push_back(gram_poly(sol, prog, id, n));
  Polynomial ru = c.B - Polynomial::constant(n, opts.eps) - c.sigma[0];
  for (std::size_t i = 0; i < unsafe.size(); ++i) ru -= c.sigma[i + 1] * unsafe[i];
  Polynomial ri = -c.B - c.tau[0];
  for (std::size_t i = 0; i < initial.size(); ++i) ri -= c.tau[i + 1] * initial[i];
  c.residual_unsafe = max_abs_coeff(ru);
  c.residual_initial = max_abs_coeff(ri);
  c.residual_decrease = sol.reconstruction_error(hD);
  c.min_eig = std::numeric_limits<double>::infinity();
  for (int id : blocks) c.min_eig = std::min(c.min_eig, min_eigenvalue(sol.gram(id)));

  // Sampled sanity checks on the sets and on a state-space grid.
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> U(-opts.sample_radius, opts.sample_radius);
  auto sample_set = [&](const std::vector<Polynomial>& gs) {
    std::vector<Eigen::VectorXd> pts;
    for (long tries = 0; tries < 400L * opts.samples && static_cast<int>(pts.size()) < opts.samples; ++tries) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) x(i) = U(rng);
      bool in = true;
      for (const auto& g : gs) in = in && evaluate(g, x) >= 0;
      if (in) pts.push_back(x);
    }
    return pts;
  };
  c.min_B_unsafe = std::numeric_limits<double>::infinity();
  for (const auto& x : sample_set(unsafe)) c.min_B_unsafe = std::min(c.min_B_unsafe, evaluate(c.B, x));
  c.max_B_initial = -std::numeric_limits<double>::infinity();
  for (const auto& x : sample_set(initial)) c.max_B_initial = std::max(c.max_B_initial, evaluate(c.B, x));
  const Polynomial Bdot = lie_derivative(c.B, f);
  const int per_axis = std::max(3, static_cast<int>(std::round(std::pow(2500.0, 1.0 / n))));
  c.max_Bdot = -std::numeric_limits<double>::infinity();
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(n);
  for (;;) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = -opts.sample_radius + 2 * opts.sample_radius * idx(i) / (per_axis - 1);
    c.max_Bdot = std::max(c.max_Bdot, evaluate(Bdot, x));
    int k = 0;
    while (k < n && ++idx(k) == per_axis) idx(k++) = 0;
    if (k == n) break;
  }

  if (!(c.min_B_unsafe > 0)) {
    out.reason = "sampled check failed: B <= 0 somewhere in the unsafe set";
  } else if (c.max_B_initial > 1e-6) {
    out.reason = "sampled check failed: B > 0 somewhere in the initial set";
  } else if (c.max_Bdot > 1e-6) {
    out.reason = "sampled check failed: dB/dt > 0 on the grid";
  } else {
    out.certificate = std::move(c);
  }
  return out;
}

namespace {

struct RoaStepA {
  Polynomial u, L;
};

// (V, rho) fixed: search u and L. Returns nullopt when infeasible.
std::optional<RoaStepA> roa_controller_step(const VectorField& f, const VectorField& g, const Polynomial& V, double rho,
                                            const RoaOptions& o, SolveStatus* status) {
  const int n = f.dim();
  SosProgram prog;
  const ParamPolynomial u = prog.new_free_poly(n, monomials_in_range(n, 1, o.u_degree));
  const ParamPolynomial L = prog.new_sos_poly(n, monomials_in_range(n, 1, std::max(1, o.l_degree / 2)));
  const ParamPolynomial target = -lift(lie_derivative(V, f)) - u * lie_derivative(V, g) +
                                 L * (V - Polynomial::constant(n, rho));
  SosOptions so;
  so.prune_basis = true;
  prog.add_sos(target, round_up_even(std::max(target.degree(), 2)), so);
  const SosSolution sol = prog.solve(o.solver);
  *status = sol.status();
  if (!sol.optimal()) return std::nullopt;
  return RoaStepA{sol.value(u), sol.value(L)};
}

}  // namespace

RoaResult maximize_roa(const VectorField& f, const VectorField& g, const RoaOptions& o) {
  check_field(f);
  check_field(g);
  const int n = f.dim();
  if (g.dim() != n) throw std::invalid_argument("maximize_roa: f and g have different dimensions");
  if (!f.vanishes_at_origin()) throw std::invalid_argument("maximize_roa: the origin is not an equilibrium");
  if (o.v_degree < 2 || o.v_degree % 2 != 0) throw std::invalid_argument("maximize_roa: V degree must be even and >= 2");
  if (o.iterations < 1) throw std::invalid_argument("maximize_roa: need at least one iteration");
  const Eigen::VectorXd anchor = o.normalization_point.value_or(Eigen::VectorXd::Ones(n));
  if (anchor.size() != n) throw std::invalid_argument("maximize_roa: normalization point has the wrong dimension");
  if (anchor.isZero()) throw std::invalid_argument("maximize_roa: normalization point must be nonzero");

  // Seed: quadratic Lyapunov function of the linearization, else |x|^2.
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Exponent e(n);
      e.set(j, 1);
      A(i, j) = f.components[static_cast<std::size_t>(i)].coefficient(e);
    }
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  if (const LinearLyapunov lin = find_lyapunov_linear(A, 1e-6, o.solver); lin.P) P = *lin.P;
  Polynomial V(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Exponent e(n);
      e.set(i, e[i] + 1);
      e.set(j, e[j] + 1);
      V.add_term(e, P(i, j));
    }
  V *= 1.0 / evaluate(V, anchor);

  RoaResult out;
  for (int it = 0; it < o.iterations; ++it) {
    SolveStatus st{};
    BisectResult br;
    try {
      br = bisect(
          [&](double rho) {
            roa_controller_step(f, g, V, rho, o, &st);
            return st;
          },
          0.0, o.rho_max, o.rho_bisect_tol, BisectSense::kLargestFeasible);
    } catch (const std::runtime_error&) {
      if (it == 0) throw std::runtime_error("maximize_roa: no certified sublevel set for the initial V");
      break;
    }
    const auto ctrl = roa_controller_step(f, g, V, br.gamma, o, &st);
    if (!ctrl) {
      if (it == 0) throw std::runtime_error("maximize_roa: no certified sublevel set for the initial V");
      break;
    }

    // (u, L) fixed: V and rho are jointly linear.
    SosProgram prog;
    const ParamPolynomial Vp = prog.new_free_poly(n, monomials_in_range(n, 2, o.v_degree));
    const AffineExpr rho = prog.new_var(0.0);
    prog.add_ge(o.rho_max - rho);
    AffineExpr at_anchor;
    for (const auto& [e, c] : Vp.terms()) {
      double m = 1.0;
      for (int i = 0; i < n; ++i) m *= std::pow(anchor(i), e[i]);
      at_anchor += m * c;
    }
    prog.add_eq(at_anchor - 1.0);
    SosOptions pd;
    pd.positive_definite = true;
    const SosHandle hV = prog.add_sos(Vp, o.v_degree, pd);
    VectorField closed = f;
    for (int i = 0; i < n; ++i) closed.components[static_cast<std::size_t>(i)] += g.components[static_cast<std::size_t>(i)] * ctrl->u;
    ParamPolynomial lrho(n);
    for (const auto& [e, c] : ctrl->L.terms()) lrho.add_term(e, c * rho);
    const ParamPolynomial target = -lie_derivative(Vp, closed) + Vp * ctrl->L - lrho;
    SosOptions so;
    so.prune_basis = true;
    const SosHandle hD = prog.add_sos(target, round_up_even(std::max(target.degree(), 2)), so);
    prog.maximize(rho);
    const SosSolution sol = prog.solve(o.solver);
    require_verdict(sol, "maximize_roa");
    if (!sol.optimal()) {
      // Keep the controller step's certificate.
      out.V = V;
      out.u = ctrl->u;
      out.L = ctrl->L;
      out.rho = br.gamma;
      out.rho_history.push_back(br.gamma);
      continue;
    }
    V = sol.value(Vp);
    out.V = V;
    out.u = ctrl->u;
    out.L = ctrl->L;
    out.rho = sol.value(rho);
    out.rho_history.push_back(out.rho);
    out.residual_V = sol.reconstruction_error(hV);
    out.residual_decrease = sol.reconstruction_error(hD);
  }
  return out;
}

}  // namespace soskit
