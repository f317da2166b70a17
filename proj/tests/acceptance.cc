// Acceptance run: one PASS/FAIL line per criterion. Oracles (grids,
// enumeration, closed forms) are computed here, independent of the code under test.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "soskit/certify.hpp"
#include "soskit/copos.hpp"
#include "soskit/fit.hpp"
#include "soskit/game.hpp"
#include "soskit/jsr.hpp"
#include "soskit/moments.hpp"
#include "soskit/pop.hpp"
#include "soskit/robust.hpp"

namespace soskit {
namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Residuals of every feasible sos constraint met during the run.
std::vector<std::pair<std::string, double>> g_residuals;
// Every optimal conic solve seen directly.
std::vector<SolveResult> g_solves;

double SpectralRadius(const Eigen::MatrixXd& A) { return A.eigenvalues().cwiseAbs().maxCoeff(); }
double Norm2(const Eigen::MatrixXd& A) { return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0); }

const std::vector<std::string> kXY{"x", "y"};

// 1. Jet engine.
void JetEngine(Verdict& v) {
  const VectorField f = VectorField::parse({"-y - 1.5*x^2 - 0.5*x^3", "3*x - y"}, kXY);
  const LyapunovSearch d2 = find_lyapunov(f, 2);
  v.check(!d2.certificate, "degree 2 should fail");
  const LyapunovSearch d4 = find_lyapunov(f, 4);
  v.check(d4.certificate.has_value(), "degree 4 should succeed");
  if (!d4.certificate) return;
  const LyapunovCertificate& c = *d4.certificate;
  v.check(c.min_eig_V > 0 && c.min_eig_negVdot > 0 && c.min_eig_top > 0, "positive-definiteness post-checks");
  g_residuals.emplace_back("jet V", c.residual_V);
  g_residuals.emplace_back("jet -Vdot", c.residual_negVdot);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2, 2);
  double worst_increase = -1e9;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector2d x0(U(rng), U(rng));
    const auto traj = integrate_rk4(f, x0, 1e-3, 20.0, 10);
    for (std::size_t i = 1; i < traj.size(); ++i)
      worst_increase = std::max(worst_increase, evaluate(c.V, traj[i]) - evaluate(c.V, traj[i - 1]));
  }
  v.check(worst_increase <= 1e-4, "V increased along a trajectory");
  v.detail << "degree 2: " << to_string(d2.status) << "; degree 4: V found, min eigs (" << c.min_eig_V << ", "
           << c.min_eig_negVdot << ", " << c.min_eig_top << "); max V increase over 20 RK4 runs " << worst_increase;
}

// 2. No polynomial Lyapunov function.
void NoPolynomialLyapunov(Verdict& v) {
  const VectorField f = VectorField::parse({"-x + x*y", "-y"}, kXY);
  v.detail << "statuses:";
  for (int d : {2, 4, 6, 8}) {
    const LyapunovSearch r = find_lyapunov(f, d);
    v.check(!r.certificate && r.status == SolveStatus::kPrimalInfeasible, "degree " + std::to_string(d));
    v.detail << " " << d << "=" << to_string(r.status);
  }
}

// 3. Barrier certificate.
void Barrier(Verdict& v) {
  const VectorField f = VectorField::parse({"y", "-x + x^3/3 - y"}, kXY);
  const Polynomial x0 = parse("0.25 - (x-1.5)^2 - y^2", kXY);
  const Polynomial xu = parse("0.16 - (x+1)^2 - (y+1)^2", kXY);
  const BarrierSearch r = find_barrier(f, {x0}, {xu}, 4);
  v.check(r.certificate.has_value(), "degree-4 barrier");
  if (!r.certificate) return;
  const BarrierCertificate& c = *r.certificate;
  const double res = std::max({c.residual_unsafe, c.residual_initial, c.residual_decrease});
  v.check(res <= 1e-6, "identities");
  g_residuals.emplace_back("barrier", res);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  int started = 0, entered = 0;
  while (started < 50) {
    const Eigen::Vector2d p(1.5 + U(rng), U(rng));
    if (evaluate(x0, p) < 0) continue;
    ++started;
    for (const auto& x : integrate_rk4(f, p, 1e-3, 20.0, 10))
      if (evaluate(xu, x) >= 0) {
        ++entered;
        break;
      }
  }
  v.check(entered == 0, "a trajectory entered the unsafe set");
  v.detail << "B found, max identity residual " << res << "; " << entered << "/" << started
           << " RK4 trajectories entered the unsafe set";
}

MatrixFamily ScaledPair() {
  Eigen::MatrixXd A1(2, 2), A2(2, 2);
  A1 << -1, -1, 4, 0;
  A2 << 3, 3, -2, 1;
  return MatrixFamily({A1 / 3.92, A2 / 3.92});
}

MatrixFamily NilpotentPair() {
  Eigen::MatrixXd A1(2, 2), A2(2, 2);
  A1 << 0, 2, 0, 0;
  A2 << 0, 0, 2, 0;
  return MatrixFamily({A1, A2});
}

// 4. JSR of the scaled pair (divided by 3.92).
void JsrScaled(Verdict& v) {
  const JsrBound b = jsr_upper_bound(ScaledPair(), 6);
  v.check(b.gamma_upper <= 0.9999, "rho_SOS,6 <= 0.9999");
  v.check(b.lower_bound <= b.gamma_upper, "sandwich ordering");
  for (double r : b.residuals) g_residuals.emplace_back("jsr", r);
  // Lower anchor: spectral radii of products up to length 6.
  const auto& M = ScaledPair().mats;
  double rho_lo = 0;
  for (int k = 1; k <= 6; ++k)
    for (int mask = 0; mask < (1 << k); ++mask) {
      Eigen::MatrixXd P = Eigen::MatrixXd::Identity(2, 2);
      for (int j = 0; j < k; ++j) P = M[static_cast<std::size_t>((mask >> j) & 1)] * P;
      rho_lo = std::max(rho_lo, std::pow(SpectralRadius(P), 1.0 / k));
    }
  v.check(b.gamma_upper >= rho_lo - 1e-6, "upper bound below a product spectral radius");
  v.detail << "rho_SOS,6 = " << b.gamma_upper << " (stable); sandwich lower bound " << b.lower_bound
           << "; products give rho >= " << rho_lo;
}

// 5. Nilpotent pair.
void JsrNilpotent(Verdict& v) {
  const JsrBound b = jsr_upper_bound(NilpotentPair(), 2);
  v.check(b.gamma_upper >= 2 - 1e-3, "upper bound >= 2");
  const SwitchingSequence s = generate_unstable_sequence(NilpotentPair(), 2, 20);
  v.check(std::abs(s.growth - 2) <= 1e-2, "sequence growth 2");
  const auto& M = NilpotentPair().mats;
  double best = 0;
  for (int k = 1; k <= 12; ++k)
    for (int mask = 0; mask < (1 << k); ++mask) {
      Eigen::MatrixXd P = Eigen::MatrixXd::Identity(2, 2);
      for (int j = 0; j < k; ++j) P = M[static_cast<std::size_t>((mask >> j) & 1)] * P;
      best = std::max(best, std::pow(Norm2(P), 1.0 / k));
    }
  v.check(std::abs(best - 2) <= 1e-9 && s.growth >= best - 1e-2, "exhaustive oracle");
  v.detail << "upper " << b.gamma_upper << "; sequence growth at k=20 " << s.growth
           << "; exhaustive best to k=12 " << best;
}

// 6. Moment matrix golden.
void MomentGolden(Verdict& v) {
  const MomentSequence y = MomentSequence::univariate({1, 0, 1, 0, 3});
  const Eigen::MatrixXd M = moment_matrix(y, 2);
  Eigen::Matrix3d expected;
  expected << 1, 0, 1, 0, 1, 0, 1, 0, 3;
  v.check(M == expected, "matrix entries");
  v.check(univariate_has_measure(y) == MeasureVerdict::kYes, "verdict Yes");
  const double m1 = M(0, 0), m2 = M.topLeftCorner(2, 2).determinant(), m3 = M.determinant();
  v.check(m1 == 1 && std::abs(m2 - 1) < 1e-14 && std::abs(m3 - 2) < 1e-12, "minors 1, 1, 2");
  v.detail << "M = [[1,0,1],[0,1,0],[1,0,3]] exact; minors " << m1 << ", " << m2 << ", " << m3 << "; verdict "
           << to_string(univariate_has_measure(y));
}

// 7. Probability bounds.
void ProbabilityBounds(Verdict& v) {
  const double inf = std::numeric_limits<double>::infinity();
  const MomentBound a = probability_bound({1, 1}, Interval::at_least(0), {Interval::at_least(2)});
  const MomentBound b = probability_bound({1, 3}, Interval::at_least(0), {Interval::at_least(2)});
  const MomentBound c = probability_bound({1, 0, 1}, Interval::real(), {Interval{-inf, -2}, Interval::at_least(2)});
  v.check(std::abs(a.bound - 0.5) <= 1e-4, "Markov 0.5");
  v.check(std::abs(b.bound - 1.0) <= 1e-4, "Markov 1");
  v.check(std::abs(c.bound - 0.25) <= 1e-4, "Chebyshev 0.25");
  // Independent grid check of the dual polynomials.
  auto grid_min = [](const Polynomial& p, double lo, double hi) {
    double m = 1e300;
    for (int k = 0; k <= 20000; ++k) m = std::min(m, evaluate(p, {lo + (hi - lo) * k / 20000.0}));
    return m;
  };
  const Polynomial one = Polynomial::constant(1, 1.0);
  const double slack = std::min({grid_min(a.lambda, 0, 100), grid_min(a.lambda - one, 2, 100),
                                 grid_min(b.lambda, 0, 100), grid_min(b.lambda - one, 2, 100),
                                 grid_min(c.lambda, -100, 100), grid_min(c.lambda - one, 2, 100),
                                 grid_min(c.lambda - one, -100, -2)});
  v.check(slack >= -1e-6, "dual polynomial grid check");
  v.detail << "Markov " << a.bound << ", Markov(E=3) " << b.bound << ", Chebyshev " << c.bound
           << "; min dual slack on grids " << slack;
}

// 8. Polynomial optimization.
void PopQuartic(Verdict& v) {
  const Polynomial p = parse("2 + x1 + x1^4 + 1.5*x2^4 - x1^3*x2 + 2*x1^2*x2^2", {"x1", "x2"});
  const PopResult r = minimize_polynomial(p);
  g_residuals.emplace_back("pop", r.residual);
  // Oracle: 1e-3 grid on [-3, 3]^2 with the polynomial written out by hand.
  double best = 1e300, bx = 0, by = 0;
  for (int i = 0; i <= 6000; ++i) {
    const double x = -3 + i * 1e-3, x2 = x * x;
    for (int j = 0; j <= 6000; ++j) {
      const double y = -3 + j * 1e-3, y2 = y * y;
      const double val = 2 + x + x2 * x2 + 1.5 * y2 * y2 - x2 * x * y + 2 * x2 * y2;
      if (val < best) best = val, bx = x, by = y;
    }
  }
  v.check(std::abs(r.lower_bound - best) <= 1e-3, "lower bound vs grid");
  v.check(r.minimizer.has_value(), "minimizer extracted");
  double dist = 1e9;
  if (r.minimizer) dist = std::hypot((*r.minimizer)(0) - bx, (*r.minimizer)(1) - by);
  v.check(dist <= 1e-2, "minimizer vs grid");
  v.detail << "sos bound " << r.lower_bound << " vs grid " << best << "; minimizer distance " << dist;
}

// 9. Dating game.
void DatingGame(Verdict& v) {
  const PolyGame g = PolyGame::from_polynomial(parse("-(x - y)^3/3 + x - y", kXY));
  const GameSolution s = solve_polynomial_game(g);
  const std::vector<double> mu_ref = {1, 0.1547, 0.6906, -0.0718}, nu_ref = {1, -0.223, 0.7407, -0.3951};
  double mu_err = 0, nu_err = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    mu_err = std::max(mu_err, std::abs(s.mu_moments[k] - mu_ref[k]));
    nu_err = std::max(nu_err, std::abs(s.nu_moments[k] - nu_ref[k]));
  }
  v.check(mu_err <= 1e-2, "mu moments");
  bool mu_atoms = s.mu && s.mu->atoms.size() == 2 && std::abs(s.mu->atoms[0](0) + 1) <= 1e-2 &&
                  std::abs(s.mu->weights[0] - 0.3334) <= 1e-2 && std::abs(s.mu->atoms[1](0) - 0.7321) <= 1e-2 &&
                  std::abs(s.mu->weights[1] - 0.6666) <= 1e-2;
  v.check(mu_atoms, "mu atoms");
  v.check(s.saddle_ok, "saddle grid check");
  v.check(nu_err <= 1e-2, "reference nu moments");
  bool nu_atoms = s.nu && s.nu->atoms.size() == 2 && std::abs(s.nu->atoms[0](0) + 1) <= 1e-2 &&
                  std::abs(s.nu->weights[0] - 0.5334) <= 1e-2 && std::abs(s.nu->atoms[1](0) - 2.0 / 3) <= 1e-2;
  v.check(nu_atoms, "reference nu atoms");
  // Why the reference nu cannot come out: against it a pure reply beats the value.
  double exploit = -1e9;
  for (int k = 0; k <= 2000; ++k) {
    const double x = -1 + k / 1000.0;
    exploit = std::max(exploit, 0.5334 * g(x, -1.0) + 0.4666 * g(x, 2.0 / 3.0));
  }
  v.detail << "mu moment error " << mu_err << ", mu atoms " << (mu_atoms ? "match" : "differ") << ", saddle gaps ("
           << s.saddle_gap_x << ", " << s.saddle_gap_y << "); nu moment error vs reference " << nu_err
           << ": P(y,x) = -P(x,y) so nu* = mu*, value " << s.value_primal
           << ", and the reference nu concedes " << exploit << " to a pure reply";
}

// Lovasz theta: max <J, X> with tr X = 1, X_ij = 0 on edges, X PSD.
double LovaszTheta(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  SosProgram prog;
  std::vector<std::vector<AffineExpr>> X(static_cast<std::size_t>(n), std::vector<AffineExpr>(static_cast<std::size_t>(n)));
  AffineExpr trace, total;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const AffineExpr e = A(i, j) != 0.0 ? AffineExpr(0.0) : prog.new_var();
      X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = X[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = e;
      total += (i == j ? 1.0 : 2.0) * e;
      if (i == j) trace += e;
    }
  prog.add_eq(trace - 1.0);
  prog.add_psd(X);
  prog.maximize(total);
  SolverSettings s;
  s.eps = 1e-9;
  const SosSolution sol = prog.solve(s);
  if (sol.optimal()) g_solves.push_back(sol.solver());
  return sol.objective();
}

// 10. Copositivity.
void Copositive(Verdict& v) {
  Eigen::MatrixXd H(5, 5);
  H << 1, -1, 1, 1, -1, -1, 1, -1, 1, 1, 1, -1, 1, -1, 1, 1, 1, -1, 1, -1, -1, 1, 1, -1, 1;
  const KrResult horn = in_Kr(H, 0);
  v.check(!horn.member, "Horn matrix outside K_0");
  double worst_complete = 0;
  for (int n = 2; n <= 6; ++n) {
    const Eigen::MatrixXd K = Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
    const StabilityBound b = stability_number_ub(K, 0);
    g_residuals.emplace_back("theta' complete", b.residual);
    worst_complete = std::max(worst_complete, std::abs(b.bound - 1));
  }
  v.check(worst_complete <= 1e-6, "theta'_0(K_n) = 1");
  const Eigen::MatrixXd C5 = adjacency_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
  const int alpha = stability_number(C5);
  const double theta = LovaszTheta(C5);
  const StabilityBound b = stability_number_ub(C5, 0);
  g_residuals.emplace_back("theta' C5", b.residual);
  v.check(alpha == 2 && b.bound >= alpha - 1e-4 && b.bound <= theta + 1e-3, "C5 sandwich");
  v.check(std::abs(theta - std::sqrt(5.0)) <= 1e-4, "Lovasz theta oracle");
  v.detail << "Horn in K_0: " << (horn.member ? "yes" : "no") << " (" << to_string(horn.status)
           << "); max |theta'_0(K_n) - 1| for n=2..6: " << worst_complete << "; theta'_0(C5) = " << b.bound
           << " in [alpha=" << alpha << ", theta=" << theta << "]";
}

PolyMatrix Scalar(const std::string& s) {
  PolyMatrix m(1, 1);
  m.set(0, 0, parse(s, {"x"}));
  return m;
}

// 11. Robust SDP.
void Robust(Verdict& v) {
  RobustSdp r;
  r.c = Eigen::VectorXd::Ones(1);
  r.F0 = Scalar("-x^2");
  r.Fy = {Scalar("1")};
  r.G = Scalar("x^2 - 1");
  r.eps = 1e-3;
  r.sampling_box = {Interval::closed(-2, 2)};
  const RobustResult res = solve_robust_sdp(r);
  v.check(res.certificate.has_value(), "scalar certificate");
  if (!res.certificate) return;
  v.check(std::abs(res.certificate->v_opt - (1 + r.eps)) <= 1e-4, "v_opt = 1 + eps");
  g_residuals.emplace_back("robust composite", res.certificate->residual_composite);
  v.detail << "scalar v_opt " << res.certificate->v_opt << " (hand certificate 1.001); random u_hat - v_opt:";
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int t = 0; t < 5; ++t) {
    auto rand_poly = [&]() {
      Polynomial f(1);
      for (const auto& e : monomials_in_range(1, 0, 2)) f.add_term(e, U(rng));
      return f;
    };
    RobustSdp q;
    q.c = Eigen::Vector2d(1, 0);
    q.F0 = PolyMatrix(2, 1);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j <= i; ++j) q.F0.set(i, j, rand_poly());
    PolyMatrix I(2, 1), B(2, 1);
    I.set(0, 0, Polynomial::constant(1, 1.0));
    I.set(1, 1, Polynomial::constant(1, 1.0));
    const Polynomial b = rand_poly() + Polynomial::constant(1, 2.0);
    B.set(0, 0, b);
    B.set(1, 1, -b);
    B.set(1, 0, rand_poly());
    q.Fy = {I, B};
    q.G = Scalar("x^2 - 1");
    q.eps = 1e-4;
    q.multiplier_degree = 2;
    q.sampling_box = {Interval::closed(-1.5, 1.5)};
    const RobustResult qr = solve_robust_sdp(q);
    v.check(qr.certificate.has_value(), "random instance certificate");
    if (!qr.certificate) continue;
    // Oracle for c = (1, 0): for fixed y2 the best y1 is max_x lambda_max(-F0 - y2 B),
    // a convex function of y2, minimized by ternary search over a 401-point grid.
    std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> pts;
    for (int k = 0; k <= 400; ++k) {
      const double x[] = {-1 + k / 200.0};
      pts.emplace_back(evaluate(q.F0, std::span<const double>(x)), evaluate(B, std::span<const double>(x)));
    }
    auto phi = [&](double y2) {
      double worst = -1e300;
      for (const auto& [f0, bx] : pts)
        worst = std::max(worst, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(-f0 - y2 * bx).eigenvalues().maxCoeff());
      return worst;
    };
    double lo = -1e3, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
      const double a = lo + (hi - lo) / 3, b2 = hi - (hi - lo) / 3;
      (phi(a) < phi(b2) ? hi : lo) = phi(a) < phi(b2) ? b2 : a;
    }
    const double u = phi(0.5 * (lo + hi));
    v.check(u <= qr.certificate->v_opt + 1e-6, "u_opt <= v_opt");
    v.detail << " " << u - qr.certificate->v_opt;
  }
}

// 12. Property suites.
void Properties(Verdict& v) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> G;

  // Random sos polynomials: sums of squares of random polynomials.
  double worst_res = 0, worst_gap = 0;
  int feasible = 0;
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + t % 3, d = 1 + t % 3;
    Polynomial p(n);
    for (int k = 0; k < 3; ++k) {
      Polynomial q(n);
      for (const auto& e : monomial_basis(n, d)) q.add_term(e, G(rng));
      p += q * q;
    }
    SosProgram prog;
    const SosHandle h = prog.add_sos(lift(p), 2 * d);
    const SosSolution sol = prog.solve();
    if (!sol.optimal()) continue;
    ++feasible;
    g_residuals.emplace_back("random sos", sol.reconstruction_error(h));
    g_solves.push_back(sol.solver());
  }
  for (const auto& [name, r] : g_residuals) worst_res = std::max(worst_res, r);
  v.check(feasible == 20, "random sums of squares certified");
  v.check(worst_res <= 1e-6, "Gram reconstruction");

  // Random SDPs: min <C, X> s.t. <A_i, X> = b_i, X PSD, feasible by construction.
  for (int t = 0; t < 6; ++t) {
    const int side = 3 + t % 3, m = 2 + t % 3;
    SosProgram prog;
    std::vector<std::vector<AffineExpr>> X(static_cast<std::size_t>(side), std::vector<AffineExpr>(static_cast<std::size_t>(side)));
    for (int i = 0; i < side; ++i)
      for (int j = 0; j <= i; ++j) X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = X[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = prog.new_var();
    auto inner = [&](const Eigen::MatrixXd& C) {
      AffineExpr e;
      for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) e += C(i, j) * X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      return e;
    };
    auto rand_sym = [&]() {
      Eigen::MatrixXd A(side, side);
      for (int i = 0; i < side; ++i)
        for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = G(rng);
      return A;
    };
    const Eigen::MatrixXd X0 = Eigen::MatrixXd::Identity(side, side);
    for (int k = 0; k < m; ++k) {
      const Eigen::MatrixXd A = rand_sym();
      prog.add_eq(inner(A) - (A.cwiseProduct(X0)).sum());
    }
    prog.add_psd(X);
    Eigen::MatrixXd B(side, side);
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) B(i, j) = G(rng);
    prog.minimize(inner(B * B.transpose() + rand_sym()));
    const SosSolution sol = prog.solve();
    if (sol.optimal()) g_solves.push_back(sol.solver());
  }
  int weak_violations = 0;
  for (const SolveResult& r : g_solves) {
    const double scale = 1 + std::abs(r.primal_objective) + std::abs(r.dual_objective);
    if (r.primal_objective < r.dual_objective - 1e-5 * scale) ++weak_violations;
  }
  v.check(weak_violations == 0, "weak duality");

  // extract_atoms round trip.
  std::uniform_real_distribution<double> U(-2, 2), W(0.1, 1);
  double worst_atoms = 0;
  for (int t = 0; t < 30; ++t) {
    const int r = 1 + t % 3;
    AtomicMeasure mu;
    std::vector<double> pts;
    while (static_cast<int>(pts.size()) < r) {
      const double a = U(rng);
      bool far = true;
      for (double b : pts) far = far && std::abs(a - b) > 0.3;
      if (far) pts.push_back(a);
    }
    std::sort(pts.begin(), pts.end());
    double total = 0;
    for (double a : pts) {
      mu.atoms.push_back(Eigen::VectorXd::Constant(1, a));
      mu.weights.push_back(W(rng));
      total += mu.weights.back();
    }
    for (double& w : mu.weights) w /= total;
    const AtomicMeasure back = extract_atoms(mu.moments(2 * r));
    if (back.atoms.size() != pts.size()) {
      worst_atoms = 1e9;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k)
      worst_atoms = std::max({worst_atoms, std::abs(back.atoms[k](0) - pts[k]), std::abs(back.weights[k] - mu.weights[k])});
  }
  v.check(worst_atoms <= 1e-4, "atom round trip");

  // Shape constraints never lower the RMSE.
  const int m = 60;
  Eigen::MatrixXd Xd(m, 2);
  Eigen::VectorXd yd(m);
  std::uniform_real_distribution<double> U01(0, 1);
  for (int i = 0; i < m; ++i) {
    Xd(i, 0) = U01(rng);
    Xd(i, 1) = U01(rng);
    yd(i) = std::exp(Xd(i, 0)) - Xd(i, 1) * Xd(i, 1) + 0.3 * std::sin(8 * Xd(i, 0));
  }
  Dataset data;
  data.X = Xd;
  data.y = yd;
  data.box = {Interval::closed(0, 1), Interval::closed(0, 1)};
  ShapeSpec free_spec;
  free_spec.degree = 3;
  ShapeSpec mono = free_spec;
  mono.monotone = {1, -1};
  ShapeSpec both = mono;
  both.convex = true;
  const double r_free = fit_shape_constrained(data, free_spec).rmse;
  const double r_mono = fit_shape_constrained(data, mono).rmse;
  const double r_both = fit_shape_constrained(data, both).rmse;
  v.check(r_free <= r_mono + 1e-8 && r_mono <= r_both + 1e-8, "RMSE dominance");

  // E-optimal design, n = 1, d = 1, against two-point designs on a grid.
  const EDesign e = e_optimal_design({Interval::closed(-1, 1)}, 1);
  double best = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = i + 1; j < 100; ++j)
      for (int k = 1; k < 100; ++k) {
        const double a = -1 + 2.0 * i / 99, b = -1 + 2.0 * j / 99, w = k / 100.0;
        Eigen::Matrix2d F;
        F << 1, w * a + (1 - w) * b, w * a + (1 - w) * b, w * a * a + (1 - w) * b * b;
        best = std::max(best, min_eigenvalue(F));
      }
  const bool design_ok = e.design && e.design->atoms.size() == 2 && std::abs(e.design->atoms[0](0) + 1) <= 1e-3 &&
                         std::abs(e.design->atoms[1](0) - 1) <= 1e-3 && std::abs(e.design->weights[0] - 0.5) <= 1e-3 &&
                         std::abs(e.gamma_primal - best) <= 1e-4;
  v.check(design_ok, "E-optimal design");

  // Stochastic games: beta = 0 gives one-shot values, a self-loop a geometric series.
  const char* P = "(x - y)^2 + 0.2*x - 0.1*y";
  const PolyGame g01 = PolyGame::from_polynomial(parse(P, kXY), Interval::closed(0, 1));
  const double oneshot = solve_polynomial_game(g01).value_primal;
  double worst_sg = 0;
  for (double beta : {0.0, 0.5, 0.9}) {
    StochasticGame sg;
    sg.payoff = {g01.p};
    sg.transition = {{{1.0}}};
    sg.beta = beta;
    const StochasticSolution s = solve_stochastic_game(sg);
    worst_sg = std::max(worst_sg, std::abs(s.values(0) - oneshot / (1 - beta)));
  }
  v.check(worst_sg <= 1e-4, "stochastic game consistency");

  v.detail << g_residuals.size() << " sos constraints, max Gram residual " << worst_res << "; " << g_solves.size()
           << " optimal solves, " << weak_violations << " weak-duality violations; atom round trip error "
           << worst_atoms << "; RMSE free/mono/both " << r_free << "/" << r_mono << "/" << r_both
           << "; design gamma " << e.gamma_primal << " vs grid " << best << "; stochastic error " << worst_sg;
}

}  // namespace
}  // namespace soskit

int main() {
  using namespace soskit;
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"jet engine Lyapunov", JetEngine},
      {"no polynomial Lyapunov function", NoPolynomialLyapunov},
      {"barrier certificate", Barrier},
      {"JSR scaled pair", JsrScaled},
      {"JSR nilpotent pair", JsrNilpotent},
      {"moment matrix golden", MomentGolden},
      {"probability bounds", ProbabilityBounds},
      {"POP quartic", PopQuartic},
      {"dating game", DatingGame},
      {"copositivity", Copositive},
      {"robust SDP", Robust},
      {"property suites", Properties}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::printf("%s %2zu %s (%.1fs): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
