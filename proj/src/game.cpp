#include "soskit/game.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace soskit {

namespace {

using Matrix = std::vector<std::vector<AffineExpr>>;

Matrix square(std::size_t s) { return Matrix(s, std::vector<AffineExpr>(s)); }

void require_solved(const SosSolution& sol, const char* who) {
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure(std::string(who) + ": solver reached its iteration limit");
  if (!sol.optimal()) throw std::runtime_error(std::string(who) + ": unexpected solver status " + to_string(sol.status()));
}

void check_domain(const Interval& d, const char* who) {
  if (!d.bounded_below() || !d.bounded_above() || !(d.lo < d.hi)) throw std::invalid_argument(std::string(who) + ": action set must be a bounded interval");
}

// Univariate polynomial with affine coefficients c_0..c_k.
ParamPolynomial param_univariate(const std::vector<AffineExpr>& c) {
  ParamPolynomial p(1);
  for (std::size_t k = 0; k < c.size(); ++k) p.add_term(Exponent({static_cast<int>(k)}), c[k]);
  return p;
}

std::vector<double> values_of(const SosSolution& sol, const std::vector<AffineExpr>& v) {
  std::vector<double> out;
  for (const auto& e : v) out.push_back(sol.value(e));
  return out;
}

// Atoms from the moments; if they fail (full rank, atoms outside the action
// set), the support is read off where the opponent's certificate touches zero.
std::optional<AtomicMeasure> strategy(const std::vector<double>& y, const Interval& domain, const Polynomial& slack,
                                      double tol, std::string& note) {
  const double width = domain.hi - domain.lo;
  double scale = 1.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  auto inside = [&](const AtomicMeasure& mu) {
    for (const auto& a : mu.atoms)
      if (a(0) < domain.lo - 1e-6 * width || a(0) > domain.hi + 1e-6 * width) return false;
    return !mu.atoms.empty() && mu.moment_residual <= tol * scale;
  };
  try {
    AtomicMeasure mu = extract_atoms(MomentSequence::univariate(y));
    if (inside(mu)) {
      note = "moment atoms";
      return mu;
    }
  } catch (const std::exception&) {
    // Fall through to the certificate support.
  }
  const std::vector<double> support = near_zero_minimizers(slack, domain, 1e-5 * std::max(1.0, max_abs_coeff(slack)));
  if (!support.empty()) {
    AtomicMeasure mu = measure_on_support(support, y);
    if (inside(mu)) {
      note = "certificate support";
      return mu;
    }
  }
  note = "extraction failed; moments returned";
  return std::nullopt;
}

double expect(const AtomicMeasure& mu, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < mu.atoms.size(); ++k) s += mu.weights[k] * f(mu.atoms[k](0));
  return s;
}

}  // namespace

void add_interval_moment_cone(SosProgram& prog, const std::vector<AffineExpr>& y, const Interval& domain) {
  check_domain(domain, "moment cone");
  if (y.empty()) throw std::invalid_argument("moment cone: no moments");
  const int K = static_cast<int>(y.size()) - 1;
  const double a = domain.lo, b = domain.hi;
  auto at = [&](int k) { return y[static_cast<std::size_t>(k)]; };
  if (K == 0) {
    if (!y[0].is_constant()) prog.add_ge(y[0]);
    return;
  }
  if (K % 2 == 0) {
    const int k = K / 2;
    Matrix H = square(static_cast<std::size_t>(k + 1));
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) H[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = at(i + j);
    prog.add_psd(H);
    Matrix L = square(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        L[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = (a + b) * at(i + j + 1) - at(i + j + 2) - a * b * at(i + j);
    prog.add_psd(L);
  } else {
    const int k = (K - 1) / 2;
    Matrix La = square(static_cast<std::size_t>(k + 1)), Lb = square(static_cast<std::size_t>(k + 1));
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) {
        La[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = at(i + j + 1) - a * at(i + j);
        Lb[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = b * at(i + j) - at(i + j + 1);
      }
    prog.add_psd(La);
    prog.add_psd(Lb);
  }
}

void PolyGame::validate() const {
  if (p.rows() < 1 || p.cols() < 1) throw std::invalid_argument("polynomial game: empty payoff");
  if (!p.allFinite()) throw std::invalid_argument("polynomial game: non-finite payoff coefficient");
  check_domain(domain, "polynomial game");
}

PolyGame PolyGame::from_polynomial(const Polynomial& P, Interval domain) {
  if (P.num_vars() != 2) throw std::invalid_argument("polynomial game: payoff must be a polynomial in (x, y)");
  int n = 0, m = 0;
  for (const auto& [e, c] : P.terms()) {
    n = std::max(n, e[0]);
    m = std::max(m, e[1]);
  }
  PolyGame g;
  g.p = Eigen::MatrixXd::Zero(n + 1, m + 1);
  for (const auto& [e, c] : P.terms()) g.p(e[0], e[1]) += c;
  g.domain = domain;
  return g;
}

Polynomial PolyGame::payoff() const {
  Polynomial P(2);
  for (int i = 0; i <= deg_x(); ++i)
    for (int j = 0; j <= deg_y(); ++j)
      if (p(i, j) != 0.0) P.add_term(Exponent({i, j}), p(i, j));
  return P;
}

double PolyGame::operator()(double x, double y) const {
  double s = 0.0;
  for (int i = 0; i <= deg_x(); ++i)
    for (int j = 0; j <= deg_y(); ++j) s += p(i, j) * std::pow(x, i) * std::pow(y, j);
  return s;
}

GameSolution solve_polynomial_game(const PolyGame& g, const GameOptions& opts) {
  g.validate();
  const int n = g.deg_x(), m = g.deg_y();
  GameSolution out;

  // max lambda: E_mu[P(x, y)] - lambda >= 0 for all y, mu a measure on the domain.
  Polynomial slack_y;
  {
    SosProgram prog;
    std::vector<AffineExpr> mu = {AffineExpr(1.0)};
    for (int i = 1; i <= n; ++i) mu.push_back(prog.new_var());
    add_interval_moment_cone(prog, mu, g.domain);
    const AffineExpr lambda = prog.new_var();
    std::vector<AffineExpr> c(static_cast<std::size_t>(m + 1));
    for (int j = 0; j <= m; ++j)
      for (int i = 0; i <= n; ++i) c[static_cast<std::size_t>(j)] += g.p(i, j) * mu[static_cast<std::size_t>(i)];
    c[0] -= lambda;
    const ParamPolynomial q = param_univariate(c);
    prog.add_univariate_nonneg(q, g.domain, m);
    prog.maximize(lambda);
    const SosSolution sol = prog.solve(opts.solver);
    require_solved(sol, "solve_polynomial_game (maximin)");
    out.value_primal = sol.value(lambda);
    out.mu_moments = values_of(sol, mu);
    slack_y = sol.value(q);
  }
  // min gamma: gamma - E_nu[P(x, y)] >= 0 for all x.
  Polynomial slack_x;
  {
    SosProgram prog;
    std::vector<AffineExpr> nu = {AffineExpr(1.0)};
    for (int j = 1; j <= m; ++j) nu.push_back(prog.new_var());
    add_interval_moment_cone(prog, nu, g.domain);
    const AffineExpr gamma = prog.new_var();
    std::vector<AffineExpr> c(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= m; ++j) c[static_cast<std::size_t>(i)] -= g.p(i, j) * nu[static_cast<std::size_t>(j)];
    c[0] += gamma;
    const ParamPolynomial q = param_univariate(c);
    prog.add_univariate_nonneg(q, g.domain, n);
    prog.minimize(gamma);
    const SosSolution sol = prog.solve(opts.solver);
    require_solved(sol, "solve_polynomial_game (minimax)");
    out.value_dual = sol.value(gamma);
    out.nu_moments = values_of(sol, nu);
    slack_x = sol.value(q);
  }

  // mu lives where player 2's certificate is tight in x, and vice versa.
  out.mu = strategy(out.mu_moments, g.domain, slack_x, opts.extraction_tol, out.mu_note);
  out.nu = strategy(out.nu_moments, g.domain, slack_y, opts.extraction_tol, out.nu_note);

  // Saddle check against pure deviations on a grid.
  auto pow_vec = [](double t, int k) {
    std::vector<double> v;
    for (int i = 0; i <= k; ++i) v.push_back(std::pow(t, i));
    return v;
  };
  const int G = std::max(opts.saddle_grid, 2);
  out.saddle_gap_x = out.saddle_gap_y = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < G; ++k) {
    const double t = g.domain.lo + (g.domain.hi - g.domain.lo) * k / (G - 1);
    // E_nu[P(t, y)] and E_mu[P(x, t)].
    double ex = 0.0, ey = 0.0;
    if (out.nu) {
      ex = expect(*out.nu, [&](double y) { return g(t, y); });
    } else {
      const auto xt = pow_vec(t, n);
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= m; ++j) ex += g.p(i, j) * xt[static_cast<std::size_t>(i)] * out.nu_moments[static_cast<std::size_t>(j)];
    }
    if (out.mu) {
      ey = expect(*out.mu, [&](double x) { return g(x, t); });
    } else {
      const auto yt = pow_vec(t, m);
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= m; ++j) ey += g.p(i, j) * out.mu_moments[static_cast<std::size_t>(i)] * yt[static_cast<std::size_t>(j)];
    }
    out.saddle_gap_x = std::max(out.saddle_gap_x, ex - out.value_primal);
    out.saddle_gap_y = std::max(out.saddle_gap_y, out.value_primal - ey);
  }
  out.saddle_ok = out.saddle_gap_x <= opts.saddle_tol && out.saddle_gap_y <= opts.saddle_tol;
  return out;
}

int StochasticGame::deg_x() const {
  int n = 0;
  for (const auto& P : payoff) n = std::max(n, static_cast<int>(P.rows()) - 1);
  for (const auto& row : transition)
    for (const auto& c : row) n = std::max(n, static_cast<int>(c.size()) - 1);
  return n;
}

int StochasticGame::deg_y() const {
  int m = 0;
  for (const auto& P : payoff) m = std::max(m, static_cast<int>(P.cols()) - 1);
  return m;
}

void StochasticGame::validate() const {
  const int T = states();
  if (T < 1) throw std::invalid_argument("stochastic game: no states");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("stochastic game: discount must lie in [0, 1)");
  if (static_cast<int>(transition.size()) != T) throw std::invalid_argument("stochastic game: transition table has the wrong number of rows");
  for (const auto& P : payoff)
    if (P.rows() < 1 || P.cols() < 1 || !P.allFinite()) throw std::invalid_argument("stochastic game: bad payoff matrix");
  for (int t = 0; t < T; ++t) {
    if (static_cast<int>(transition[static_cast<std::size_t>(t)].size()) != T)
      throw std::invalid_argument("stochastic game: transition table has the wrong number of columns");
    for (int k = 0; k < 100; ++k) {
      const double x = k / 99.0;
      double total = 0.0;
      for (const auto& c : transition[static_cast<std::size_t>(t)]) {
        double v = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * std::pow(x, static_cast<double>(i));
        if (v < -1e-8) throw std::invalid_argument("stochastic game: negative transition probability");
        total += v;
      }
      if (std::abs(total - 1.0) > 1e-8) throw std::invalid_argument("stochastic game: transition probabilities do not sum to 1");
    }
  }
}

StochasticSolution solve_stochastic_game(const StochasticGame& sg, const GameOptions& opts) {
  sg.validate();
  const int T = sg.states(), n = sg.deg_x(), m = sg.deg_y();
  const Interval unit = Interval::closed(0, 1);
  auto p = [&](int t, int i, int j) {
    const auto& P = sg.payoff[static_cast<std::size_t>(t)];
    return i < P.rows() && j < P.cols() ? P(i, j) : 0.0;
  };
  auto pi = [&](int t, int u, int i) {
    const auto& c = sg.transition[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)];
    return i < static_cast<int>(c.size()) ? c[static_cast<std::size_t>(i)] : 0.0;
  };
  StochasticSolution out;
  std::vector<Polynomial> slack_x(static_cast<std::size_t>(T)), slack_y(static_cast<std::size_t>(T));

  // Player 2's program: min sum v_t with
  //   v_t - E_nu_t[P(t, x, y)] - beta sum_u pi(t -> u | x) v_u >= 0 on [0, 1].
  {
    SosProgram prog;
    std::vector<AffineExpr> v;
    for (int t = 0; t < T; ++t) v.push_back(prog.new_var());
    std::vector<std::vector<AffineExpr>> nu(static_cast<std::size_t>(T));
    std::vector<ParamPolynomial> q;
    for (int t = 0; t < T; ++t) {
      auto& nt = nu[static_cast<std::size_t>(t)];
      nt.push_back(AffineExpr(1.0));
      for (int j = 1; j <= m; ++j) nt.push_back(prog.new_var());
      add_interval_moment_cone(prog, nt, unit);
      std::vector<AffineExpr> c(static_cast<std::size_t>(n + 1));
      c[0] += v[static_cast<std::size_t>(t)];
      for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= m; ++j) c[static_cast<std::size_t>(i)] -= p(t, i, j) * nt[static_cast<std::size_t>(j)];
        for (int u = 0; u < T; ++u) c[static_cast<std::size_t>(i)] -= sg.beta * pi(t, u, i) * v[static_cast<std::size_t>(u)];
      }
      q.push_back(param_univariate(c));
      prog.add_univariate_nonneg(q.back(), unit, n);
    }
    AffineExpr obj;
    for (const auto& e : v) obj += e;
    prog.minimize(obj);
    const SosSolution sol = prog.solve(opts.solver);
    require_solved(sol, "solve_stochastic_game (primal)");
    out.primal_objective = sol.objective();
    out.values.resize(T);
    for (int t = 0; t < T; ++t) {
      out.values(t) = sol.value(v[static_cast<std::size_t>(t)]);
      out.nu_moments.push_back(values_of(sol, nu[static_cast<std::size_t>(t)]));
      slack_x[static_cast<std::size_t>(t)] = sol.value(q[static_cast<std::size_t>(t)]);
    }
  }
  // Player 1's program: max sum alpha_t with unnormalized xi_t on [0, 1],
  //   E_xi_t[P(t, x, y)] - alpha_t >= 0 on [0, 1] in y, and the flow balance
  //   xi_0^u - beta sum_t sum_i pi_i(t -> u) xi_i^t = 1 for every state u.
  {
    SosProgram prog;
    std::vector<AffineExpr> alpha;
    std::vector<std::vector<AffineExpr>> xi(static_cast<std::size_t>(T));
    std::vector<ParamPolynomial> q;
    for (int t = 0; t < T; ++t) {
      alpha.push_back(prog.new_var());
      auto& xt = xi[static_cast<std::size_t>(t)];
      for (int i = 0; i <= n; ++i) xt.push_back(prog.new_var());
      add_interval_moment_cone(prog, xt, unit);
      std::vector<AffineExpr> c(static_cast<std::size_t>(m + 1));
      for (int j = 0; j <= m; ++j)
        for (int i = 0; i <= n; ++i) c[static_cast<std::size_t>(j)] += p(t, i, j) * xt[static_cast<std::size_t>(i)];
      c[0] -= alpha.back();
      q.push_back(param_univariate(c));
      prog.add_univariate_nonneg(q.back(), unit, m);
    }
    for (int u = 0; u < T; ++u) {
      AffineExpr flow = xi[static_cast<std::size_t>(u)][0] - 1.0;
      for (int t = 0; t < T; ++t)
        for (int i = 0; i <= n; ++i) flow -= sg.beta * pi(t, u, i) * xi[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
      prog.add_eq(flow);
    }
    AffineExpr obj;
    for (const auto& e : alpha) obj += e;
    prog.maximize(obj);
    const SosSolution sol = prog.solve(opts.solver);
    require_solved(sol, "solve_stochastic_game (dual)");
    out.dual_objective = sol.objective();
    for (int t = 0; t < T; ++t) {
      out.xi_moments.push_back(values_of(sol, xi[static_cast<std::size_t>(t)]));
      slack_y[static_cast<std::size_t>(t)] = sol.value(q[static_cast<std::size_t>(t)]);
    }
  }

  for (int t = 0; t < T; ++t) {
    std::string note;
    std::vector<double> normalized = out.xi_moments[static_cast<std::size_t>(t)];
    const double mass = normalized[0];
    for (double& v : normalized) v /= mass;
    out.M.push_back(strategy(normalized, unit, slack_x[static_cast<std::size_t>(t)], opts.extraction_tol, note));
    out.N.push_back(strategy(out.nu_moments[static_cast<std::size_t>(t)], unit, slack_y[static_cast<std::size_t>(t)],
                             opts.extraction_tol, note));
  }
  return out;
}

}  // namespace soskit
