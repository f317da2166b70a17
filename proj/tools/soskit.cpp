#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "json_io.hpp"
#include "soskit/certify.hpp"
#include "soskit/copos.hpp"
#include "soskit/fit.hpp"
#include "soskit/game.hpp"
#include "soskit/jsr.hpp"
#include "soskit/moments.hpp"
#include "soskit/pop.hpp"
#include "soskit/robust.hpp"

namespace soskit::cli {
namespace {

constexpr int kSchemaVersion = 1;
enum Exit { kSuccess = 0, kNoCertificate = 1, kSolverFailure = 2, kInputError = 3 };

// A certificate that fails its re-check is treated like a solver failure.
class CertificateCheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void verify(bool ok, const std::string& what) {
  if (!ok) throw CertificateCheckFailure("certificate re-check failed: " + what);
}

constexpr double kResidualTol = 1e-5;
constexpr double kEigTol = -1e-6;

struct Args {
  std::string kind, in, out, csv;
  std::optional<int> degree, max_iters;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  bool report = false;
};

struct Context {
  const Args& args;
  const json& problem;
  std::filesystem::path base_dir;

  SolverSettings settings(SolverSettings s = {}) const {
    if (args.tol) s.eps = *args.tol;
    if (args.max_iters) s.max_iters = *args.max_iters;
    if (args.seed) s.seed = *args.seed;
    return s;
  }
  std::uint64_t seed(std::uint64_t fallback = 1) const {
    if (args.seed) return *args.seed;
    if (problem.contains("seed")) return static_cast<std::uint64_t>(integer(problem.at("seed"), "seed"));
    return fallback;
  }
  int degree(const std::string& key, int fallback) const {
    if (args.degree) return *args.degree;
    return problem.contains(key) ? integer(problem.at(key), key) : fallback;
  }
  double num(const std::string& key, double fallback) const {
    return problem.contains(key) ? number(problem.at(key), key) : fallback;
  }
  int integer_or(const std::string& key, int fallback) const {
    return problem.contains(key) ? integer(problem.at(key), key) : fallback;
  }
  std::vector<std::string> vars() const { return strings(need(problem, "variables"), "variables"); }
  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

struct Outcome {
  int code = kSuccess;
  json result;
  std::string report;
  std::string csv;
};

const std::set<std::string> kCommon = {"schema_version", "kind", "seed"};

std::set<std::string> keys(std::initializer_list<std::string> extra) {
  std::set<std::string> s = kCommon;
  s.insert(extra);
  return s;
}

json polys_json(const std::vector<Polynomial>& ps, const std::vector<std::string>& vars) {
  json out = json::array();
  for (const auto& p : ps) out.push_back(to_string(p, vars));
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(8);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- dynamics

Outcome run_lyapunov(const Context& c) {
  check_keys(c.problem, keys({"variables", "field", "degree", "auto", "gram_margin", "phi_eps_gamma"}));
  const auto vars = c.vars();
  const VectorField f = VectorField::parse(strings(need(c.problem, "field"), "field"), vars);
  LyapunovOptions o;
  o.gram_margin = c.num("gram_margin", o.gram_margin);
  o.phi_eps_gamma = c.num("phi_eps_gamma", o.phi_eps_gamma);
  o.solver = c.settings(o.solver);
  const int degree = c.degree("degree", 2);
  const bool automatic = c.problem.value("auto", false);
  const LyapunovSearch s = automatic ? find_lyapunov_auto(f, degree, o) : find_lyapunov(f, degree, o);
  Outcome out;
  out.result["solver_status"] = to_string(s.status);
  out.result["requested_degree"] = degree;
  if (!s.certificate) {
    out.code = kNoCertificate;
    out.result["reason"] = s.reason;
    out.report = "No sos Lyapunov function of degree <= " + std::to_string(degree) + " (" + s.reason + ").\n";
    return out;
  }
  const LyapunovCertificate& L = *s.certificate;
  verify(L.residual_V <= kResidualTol && L.residual_negVdot <= kResidualTol, "Lyapunov identities");
  verify(L.min_eig_V >= kEigTol && L.min_eig_negVdot >= kEigTol, "Lyapunov Gram matrices");
  out.result["degree"] = L.degree;
  out.result["V"] = to_string(L.V, vars);
  out.result["neg_vdot"] = to_string(L.neg_vdot, vars);
  out.result["min_eig"] = {{"V", L.min_eig_V}, {"neg_vdot", L.min_eig_negVdot}, {"top", L.min_eig_top}};
  out.result["residual"] = {{"V", L.residual_V}, {"neg_vdot", L.residual_negVdot}, {"top", L.residual_top}};
  out.result["gram_V"] = to_json(L.gram_V);
  out.result["basis_V"] = monomials(L.basis_V, vars);
  out.report = "Found a degree-" + std::to_string(L.degree) + " sos Lyapunov function:\n  V = " +
               to_string(L.V, vars) + "\nV and -dV/dt are certified sos with Gram eigenvalues >= " +
               fmt(std::min(L.min_eig_V, L.min_eig_negVdot)) + "; the origin is globally asymptotically stable.\n";
  // Trajectory samples with V along them, for plotting.
  std::ostringstream csv;
  csv << "trajectory,t";
  for (const auto& v : vars) csv << "," << v;
  csv << ",V\n";
  const int n = f.dim();
  for (int k = 0; k < 8; ++k) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    x0(k % n) = (k % 2 == 0 ? 1.0 : -1.0);
    if (n > 1) x0((k + 1) % n) += 0.5 * (k / 2 % 2 == 0 ? 1.0 : -1.0);
    const auto traj = integrate_rk4(f, x0, 0.01, 10.0, 10);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      csv << k << "," << fmt(0.1 * static_cast<double>(i));
      for (int d = 0; d < n; ++d) csv << "," << fmt(traj[i](d));
      csv << "," << fmt(evaluate(L.V, traj[i])) << "\n";
    }
  }
  out.csv = csv.str();
  return out;
}

Outcome run_barrier(const Context& c) {
  check_keys(c.problem, keys({"variables", "field", "initial", "unsafe", "degree", "eps", "multiplier_degree",
                               "samples", "sample_radius"}));
  const auto vars = c.vars();
  const VectorField f = VectorField::parse(strings(need(c.problem, "field"), "field"), vars);
  const auto initial = polynomials(need(c.problem, "initial"), vars, "initial");
  const auto unsafe = polynomials(need(c.problem, "unsafe"), vars, "unsafe");
  BarrierOptions o;
  o.eps = c.num("eps", o.eps);
  if (c.problem.contains("multiplier_degree")) o.multiplier_degree = integer(c.problem.at("multiplier_degree"), "multiplier_degree");
  o.samples = c.integer_or("samples", o.samples);
  o.sample_radius = c.num("sample_radius", o.sample_radius);
  o.seed = c.seed(o.seed);
  o.solver = c.settings(o.solver);
  const int degree = c.degree("degree", 4);
  const BarrierSearch s = find_barrier(f, initial, unsafe, degree, o);
  Outcome out;
  out.result["solver_status"] = to_string(s.status);
  if (!s.certificate) {
    out.code = kNoCertificate;
    out.result["reason"] = s.reason;
    out.report = "No degree-" + std::to_string(degree) + " sos barrier certificate (" + s.reason + ").\n";
    return out;
  }
  const BarrierCertificate& B = *s.certificate;
  verify(std::max({B.residual_unsafe, B.residual_initial, B.residual_decrease}) <= kResidualTol, "barrier identities");
  verify(B.min_eig >= kEigTol, "barrier multipliers");
  out.result["degree"] = degree;
  out.result["B"] = to_string(B.B, vars);
  out.result["sigma"] = polys_json(B.sigma, vars);
  out.result["tau"] = polys_json(B.tau, vars);
  out.result["eps"] = B.eps;
  out.result["residual"] = {{"unsafe", B.residual_unsafe}, {"initial", B.residual_initial}, {"decrease", B.residual_decrease}};
  out.result["min_eig"] = B.min_eig;
  out.result["samples"] = {{"min_B_unsafe", B.min_B_unsafe}, {"max_B_initial", B.max_B_initial}, {"max_Bdot", B.max_Bdot}};
  out.report = "Barrier B = " + to_string(B.B, vars) + "\nB > 0 on the unsafe set, B <= 0 on the initial set and dB/dt <= 0:\n" +
               "no trajectory starting in the initial set reaches the unsafe set.\n";
  return out;
}

Outcome run_roa(const Context& c) {
  check_keys(c.problem, keys({"variables", "field", "input", "v_degree", "u_degree", "l_degree", "iterations",
                               "normalization_point"}));
  const auto vars = c.vars();
  const VectorField f = VectorField::parse(strings(need(c.problem, "field"), "field"), vars);
  const VectorField g = VectorField::parse(strings(need(c.problem, "input"), "input"), vars);
  RoaOptions o;
  o.v_degree = c.degree("v_degree", o.v_degree);
  o.u_degree = c.integer_or("u_degree", o.u_degree);
  o.l_degree = c.integer_or("l_degree", o.l_degree);
  o.iterations = c.integer_or("iterations", o.iterations);
  if (c.problem.contains("normalization_point")) {
    const auto p = numbers(c.problem.at("normalization_point"), "normalization_point");
    o.normalization_point = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  }
  o.solver = c.settings(o.solver);
  Outcome out;
  RoaResult r;
  try {
    r = maximize_roa(f, g, o);
  } catch (const SolverFailure&) {
    throw;
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::runtime_error& e) {
    out.code = kNoCertificate;
    out.result["reason"] = e.what();
    return out;
  }
  verify(r.residual_V <= kResidualTol && r.residual_decrease <= kResidualTol, "region-of-attraction identities");
  out.result["V"] = to_string(r.V, vars);
  out.result["u"] = to_string(r.u, vars);
  out.result["L"] = to_string(r.L, vars);
  out.result["rho"] = r.rho;
  out.result["rho_history"] = to_json(r.rho_history);
  out.report = "Certified region of attraction {V <= " + fmt(r.rho) + "} with controller u = " + to_string(r.u, vars) + ".\n";
  return out;
}

// ---------------------------------------------------------------- JSR

MatrixFamily family(const Context& c) {
  const json& m = need(c.problem, "matrices");
  if (!m.is_array() || m.empty()) throw InputError("matrices: expected a nonempty array");
  std::vector<Eigen::MatrixXd> mats;
  for (const auto& a : m) mats.push_back(matrix(a, "matrices"));
  try {
    MatrixFamily fam(std::move(mats));
    fam.validate();
    return fam;
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

Outcome run_jsr(const Context& c) {
  check_keys(c.problem, keys({"matrices", "degree", "bisect_tol"}));
  const MatrixFamily fam = family(c);
  JsrOptions o;
  o.bisect_tol = c.num("bisect_tol", o.bisect_tol);
  o.solver = c.settings(o.solver);
  const int two_d = c.degree("degree", 2);
  const JsrBound b = jsr_upper_bound(fam, two_d, o);
  const std::vector<std::string> vars = default_names(fam.dim());
  for (double r : b.residuals) verify(r <= kResidualTol, "JSR sos identities");
  Outcome out;
  out.result["degree"] = b.two_d;
  out.result["upper_bound"] = b.gamma_upper;
  out.result["lower_bound"] = b.lower_bound;
  out.result["witness"] = to_string(b.witness, vars);
  out.result["residuals"] = to_json(b.residuals);
  out.result["min_eig_witness"] = b.min_eig_p;
  out.result["bisection_steps"] = static_cast<int>(b.steps.size());
  out.result["stable"] = b.gamma_upper < 1.0;
  out.report = "Degree-" + std::to_string(b.two_d) + " sos bound: " + fmt(b.lower_bound) + " <= rho <= " +
               fmt(b.gamma_upper) + "\n(lower end: upper bound divided by C(n+d-1, d)^(1/2d))\n" +
               (b.gamma_upper < 1.0 ? "rho < 1: the switched system is stable under arbitrary switching.\n"
                                    : "The bound does not certify stability.\n");
  return out;
}

Outcome run_jsr_trajectory(const Context& c) {
  check_keys(c.problem, keys({"matrices", "degree", "steps"}));
  const MatrixFamily fam = family(c);
  JsrOptions o;
  o.solver = c.settings(o.solver);
  const int two_d = c.degree("degree", 2);
  const int steps = c.integer_or("steps", 20);
  const SwitchingSequence s = generate_unstable_sequence(fam, two_d, steps, o);
  Outcome out;
  json seq = json::array();
  for (int i : s.sigma) seq.push_back(i + 1);  // 1-based matrix labels
  out.result["sequence"] = seq;
  out.result["growth"] = s.growth;
  out.result["lambda"] = s.lambda;
  out.result["guarantee"] = s.guarantee;
  out.result["upper_bound"] = s.gamma_upper;
  out.report = "Switching sequence of length " + std::to_string(steps) + " reaches growth " + fmt(s.growth) +
               " (dual guarantee " + fmt(s.guarantee) + ", primal bound " + fmt(s.gamma_upper) + ").\n";
  std::ostringstream csv;
  csv << "k,matrix,growth\n";
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(fam.dim(), fam.dim());
  for (std::size_t k = 0; k < s.sigma.size(); ++k) {
    P = fam.mats[static_cast<std::size_t>(s.sigma[k])] * P;
    csv << k + 1 << "," << s.sigma[k] + 1 << ","
        << fmt(std::pow(spectral_norm(P), 1.0 / static_cast<double>(k + 1))) << "\n";
  }
  out.csv = csv.str();
  return out;
}

// ---------------------------------------------------------------- moments

Outcome run_moment_check(const Context& c) {
  check_keys(c.problem, keys({"moments", "tol"}));
  const auto y = numbers(need(c.problem, "moments"), "moments");
  if (y.empty()) throw InputError("moments: empty");
  const MomentSequence ms = MomentSequence::univariate(y);
  const int d = ms.complete_order() / 2;
  const Eigen::MatrixXd M = moment_matrix(ms, d);
  const MeasureVerdict v = univariate_has_measure(ms, c.num("tol", 1e-8));
  Outcome out;
  out.result["moment_matrix"] = to_json(M);
  out.result["verdict"] = to_string(v);
  json minors = json::array();
  for (Eigen::Index k = 1; k <= M.rows(); ++k) minors.push_back(M.topLeftCorner(k, k).determinant());
  out.result["leading_minors"] = minors;
  out.result["min_eigenvalue"] = min_eigenvalue(M);
  if (v != MeasureVerdict::kNo) {
    try {
      out.result["measure"] = to_json(extract_atoms(ms));
    } catch (const std::exception& e) {
      out.result["extraction_note"] = e.what();
    }
  } else {
    out.code = kNoCertificate;
  }
  out.report = "Moment matrix of order " + std::to_string(d) + " has smallest eigenvalue " + fmt(min_eigenvalue(M)) +
               "; representing measure: " + to_string(v) + ".\n";
  return out;
}

json bound_result(const MomentBound& b) {
  return {{"bound", b.bound}, {"dual_polynomial", to_string(b.lambda, {"x"})}, {"min_slack", b.min_slack},
          {"solver_status", to_string(b.status)}};
}

Outcome run_bound(const Context& c) {
  check_keys(c.problem, keys({"moments", "support", "event"}));
  const auto y = numbers(need(c.problem, "moments"), "moments");
  const Interval E = c.problem.contains("support") ? interval(c.problem.at("support"), "support") : Interval::real();
  std::vector<Interval> S;
  const json& ev = need(c.problem, "event");
  if (!ev.is_array() || ev.empty()) throw InputError("event: expected an array of intervals");
  if (ev.at(0).is_array())
    for (const auto& iv : ev) S.push_back(interval(iv, "event"));
  else
    S.push_back(interval(ev, "event"));
  const MomentBound b = probability_bound(y, E, S, c.settings());
  verify(b.min_slack >= -1e-6, "dual polynomial nonnegativity");
  Outcome out;
  out.result = bound_result(b);
  out.report = "P(X in S) <= " + fmt(b.bound) + " for every distribution with the given moments, certified by\n  " +
               to_string(b.lambda, {"x"}) + " >= 1 on S and >= 0 on the support.\n";
  return out;
}

Outcome run_option(const Context& c) {
  check_keys(c.problem, keys({"moments", "strike"}));
  const auto y = numbers(need(c.problem, "moments"), "moments");
  if (y.size() != 3) throw InputError("moments: expected [y0, y1, y2]");
  const MomentBound b = option_price_bound(y[0], y[1], y[2], number(need(c.problem, "strike"), "strike"), c.settings());
  verify(b.min_slack >= -1e-6, "dual polynomial nonnegativity");
  Outcome out;
  out.result = bound_result(b);
  out.report = "Upper bound on E[(X - k)^+]: " + fmt(b.bound) + ".\n";
  return out;
}

// ---------------------------------------------------------------- optimization

Outcome run_pop(const Context& c) {
  check_keys(c.problem, keys({"variables", "objective", "rank_gap_tol"}));
  const auto vars = c.vars();
  const Polynomial p = polynomial(need(c.problem, "objective"), vars, "objective");
  const PopResult r = minimize_polynomial(p, c.num("rank_gap_tol", 1e-5), c.settings());
  verify(r.residual <= kResidualTol && r.min_eig_gram >= kEigTol, "lower-bound certificate");
  Outcome out;
  out.result["lower_bound"] = r.lower_bound;
  out.result["residual"] = r.residual;
  out.result["min_eig_gram"] = r.min_eig_gram;
  out.result["gram"] = to_json(r.gram);
  out.result["basis"] = monomials(r.basis, vars);
  out.result["minimizer"] = r.minimizer ? to_json(*r.minimizer) : json(nullptr);
  out.result["rank_gap"] = r.top_eig1 > 0 ? r.top_eig2 / r.top_eig1 : 1.0;
  out.report = "p - " + fmt(r.lower_bound) + " is sos" +
               (r.minimizer ? "; the relaxation is rank one and the extracted point attains the bound.\n"
                            : "; no minimizer extracted (relaxation not rank one).\n");
  return out;
}

Dataset dataset(const Context& c) {
  const json& d = need(c.problem, "data");
  Dataset data;
  if (d.is_string()) {
    data = Dataset::read(c.resolve(d.get<std::string>()).string());
  } else if (d.is_object()) {
    check_keys(d, {"X", "y"});
    const Eigen::MatrixXd X = matrix(need(d, "X"), "data.X");
    const auto y = numbers(need(d, "y"), "data.y");
    data = Dataset::with_bounding_box(X, Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
  } else {
    throw InputError("data: expected a file path or {X, y}");
  }
  if (c.problem.contains("box")) {
    data.box.clear();
    for (const auto& iv : c.problem.at("box")) data.box.push_back(interval(iv, "box"));
  }
  return data;
}

Outcome run_fit(const Context& c) {
  check_keys(c.problem, keys({"data", "degree", "monotone", "convex", "box", "relaxation_degree", "grid_per_axis"}));
  const Dataset data = dataset(c);
  ShapeSpec s;
  s.degree = c.degree("degree", 3);
  s.convex = c.problem.value("convex", false);
  if (c.problem.contains("monotone"))
    for (double v : numbers(c.problem.at("monotone"), "monotone")) s.monotone.push_back(static_cast<int>(v));
  FitOptions o;
  o.relaxation_degree = c.integer_or("relaxation_degree", o.relaxation_degree);
  o.grid_per_axis = c.integer_or("grid_per_axis", o.grid_per_axis);
  o.solver = c.settings(o.solver);
  const ShapeFit r = fit_shape_constrained(data, s, o);
  const auto vars = default_names(data.dim());
  Outcome out;
  out.result["f"] = to_string(r.f, vars);
  out.result["variables"] = vars;
  out.result["rmse"] = r.rmse;
  out.result["rmse_unconstrained"] = r.rmse_unconstrained;
  out.result["min_monotone"] = to_json(r.min_monotone);
  out.result["min_convex"] = to_json(r.min_convex);
  out.result["solver_eps"] = r.solver_eps;
  out.report = "Shape-constrained fit of degree " + std::to_string(s.degree) + ": RMSE " + fmt(r.rmse) +
               " (unconstrained " + fmt(r.rmse_unconstrained) + ").\n";
  return out;
}

Outcome run_design(const Context& c) {
  check_keys(c.problem, keys({"domain", "degree", "extraction_tol"}));
  std::vector<Interval> dom;
  const json& d = need(c.problem, "domain");
  if (!d.is_array() || d.empty()) throw InputError("domain: expected intervals");
  if (d.at(0).is_array())
    for (const auto& iv : d) dom.push_back(interval(iv, "domain"));
  else
    dom.push_back(interval(d, "domain"));
  DesignOptions o;
  o.extraction_tol = c.num("extraction_tol", o.extraction_tol);
  o.solver = c.settings(o.solver);
  const EDesign e = e_optimal_design(dom, c.degree("degree", 1), o);
  Outcome out;
  out.result["gamma_primal"] = e.gamma_primal;
  out.result["gamma_dual"] = e.gamma_dual;
  out.result["Q"] = to_json(e.Q);
  out.result["design"] = e.design ? to_json(*e.design) : json(nullptr);
  out.result["fisher_min_eig"] = e.fisher_min_eig;
  out.result["extraction_note"] = e.extraction_note;
  out.report = "E-optimal value " + fmt(e.gamma_primal) + " (dual " + fmt(e.gamma_dual) + ")" +
               (e.design ? ", design extracted.\n" : ", no design extracted.\n");
  return out;
}

// ---------------------------------------------------------------- games

GameOptions game_options(const Context& c) {
  GameOptions o;
  o.extraction_tol = c.num("extraction_tol", o.extraction_tol);
  o.solver = c.settings(o.solver);
  return o;
}

Outcome run_game(const Context& c) {
  check_keys(c.problem, keys({"variables", "payoff", "domain", "extraction_tol"}));
  const auto vars = c.problem.contains("variables") ? c.vars() : std::vector<std::string>{"x", "y"};
  if (vars.size() != 2) throw InputError("variables: a game has exactly two actions");
  const Interval dom = c.problem.contains("domain") ? interval(c.problem.at("domain"), "domain") : Interval::closed(-1, 1);
  const PolyGame g = PolyGame::from_polynomial(polynomial(need(c.problem, "payoff"), vars, "payoff"), dom);
  const GameSolution s = solve_polynomial_game(g, game_options(c));
  Outcome out;
  out.result["value_primal"] = s.value_primal;
  out.result["value_dual"] = s.value_dual;
  out.result["mu_moments"] = to_json(s.mu_moments);
  out.result["nu_moments"] = to_json(s.nu_moments);
  out.result["mu"] = s.mu ? to_json(*s.mu) : json(nullptr);
  out.result["nu"] = s.nu ? to_json(*s.nu) : json(nullptr);
  out.result["mu_note"] = s.mu_note;
  out.result["nu_note"] = s.nu_note;
  out.result["saddle_gap"] = {{"x", s.saddle_gap_x}, {"y", s.saddle_gap_y}};
  out.result["saddle_ok"] = s.saddle_ok;
  out.report = "Game value " + fmt(s.value_primal) + " (minimax side " + fmt(s.value_dual) + "); saddle check " +
               (s.saddle_ok ? "passed" : "failed") + ".\n";
  return out;
}

Outcome run_stochastic_game(const Context& c) {
  check_keys(c.problem, keys({"variables", "payoffs", "transitions", "beta", "extraction_tol"}));
  const auto vars = c.problem.contains("variables") ? c.vars() : std::vector<std::string>{"x", "y"};
  if (vars.size() != 2) throw InputError("variables: a game has exactly two actions");
  StochasticGame sg;
  for (const auto& p : polynomials(need(c.problem, "payoffs"), vars, "payoffs"))
    sg.payoff.push_back(PolyGame::from_polynomial(p, Interval::closed(0, 1)).p);
  const json& tr = need(c.problem, "transitions");
  if (!tr.is_array()) throw InputError("transitions: expected a matrix of polynomials in the first action");
  for (const auto& row : tr) {
    if (!row.is_array()) throw InputError("transitions: expected rows");
    std::vector<std::vector<double>> r;
    for (const auto& e : row) {
      const Polynomial p = polynomial(e, {vars[0]}, "transitions");
      std::vector<double> coeffs(static_cast<std::size_t>(p.degree() + 1), 0.0);
      for (const auto& [ex, v] : p.terms()) coeffs[static_cast<std::size_t>(ex[0])] = v;
      r.push_back(coeffs);
    }
    sg.transition.push_back(r);
  }
  sg.beta = number(need(c.problem, "beta"), "beta");
  const StochasticSolution s = solve_stochastic_game(sg, game_options(c));
  Outcome out;
  out.result["values"] = to_json(s.values);
  out.result["primal_objective"] = s.primal_objective;
  out.result["dual_objective"] = s.dual_objective;
  json M = json::array(), N = json::array();
  for (const auto& m : s.M) M.push_back(m ? to_json(*m) : json(nullptr));
  for (const auto& n : s.N) N.push_back(n ? to_json(*n) : json(nullptr));
  out.result["player1_strategies"] = M;
  out.result["player2_strategies"] = N;
  out.report = "Discounted values per state computed; primal " + fmt(s.primal_objective) + ", dual " +
               fmt(s.dual_objective) + ".\n";
  return out;
}

// ---------------------------------------------------------------- copositivity

Outcome run_copositive(const Context& c) {
  check_keys(c.problem, keys({"matrix", "level"}));
  const Eigen::MatrixXd M = matrix(need(c.problem, "matrix"), "matrix");
  const int r = c.degree("level", 0);
  const KrResult k = in_Kr(M, r, c.settings());
  Outcome out;
  out.result["level"] = r;
  out.result["member"] = k.member;
  out.result["solver_status"] = to_string(k.status);
  if (k.member) {
    verify(k.residual <= kResidualTol && k.min_eigenvalue >= kEigTol, "K_r Gram certificate");
    out.result["gram"] = to_json(k.gram);
    out.result["basis"] = monomials(k.basis, default_names(static_cast<int>(M.rows())));
    out.result["residual"] = k.residual;
    out.result["min_eigenvalue"] = k.min_eigenvalue;
    out.report = "M is in K_" + std::to_string(r) + ", hence copositive.\n";
  } else {
    out.code = kNoCertificate;
    out.report = "M is not in K_" + std::to_string(r) + " (a higher level may still certify copositivity).\n";
  }
  return out;
}

// Edge-list text: first non-comment line is the vertex count, then one
// 0-based "u v" pair per line.
Eigen::MatrixXd read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list " + path.string());
  std::string line;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream s(line);
    if (n < 0) {
      if (!(s >> n)) continue;
      continue;
    }
    int a, b;
    if (!(s >> a)) continue;
    if (!(s >> b)) throw InputError("edge list: incomplete edge '" + line + "'");
    edges.emplace_back(a, b);
  }
  if (n <= 0) throw InputError("edge list: missing vertex count");
  return adjacency_from_edges(n, edges);
}

Outcome run_stability(const Context& c) {
  check_keys(c.problem, keys({"vertices", "edges", "edge_list", "level"}));
  Eigen::MatrixXd A;
  if (c.problem.contains("edge_list")) {
    A = read_edge_list(c.resolve(need(c.problem, "edge_list").get<std::string>()));
  } else {
    const int n = integer(need(c.problem, "vertices"), "vertices");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : need(c.problem, "edges")) {
      if (!e.is_array() || e.size() != 2) throw InputError("edges: expected [u, v] pairs");
      edges.emplace_back(integer(e.at(0), "edges"), integer(e.at(1), "edges"));
    }
    A = adjacency_from_edges(n, edges);
  }
  const int r = c.degree("level", 0);
  const StabilityBound b = stability_number_ub(A, r, c.settings());
  verify(b.residual <= kResidualTol && b.min_eigenvalue >= kEigTol, "K_r Gram certificate");
  Outcome out;
  out.result["level"] = r;
  out.result["upper_bound"] = b.bound;
  out.result["residual"] = b.residual;
  if (A.rows() <= 20) out.result["stability_number"] = stability_number(A);
  out.report = "alpha(G) <= " + fmt(b.bound) + " (level " + std::to_string(r) + ")" +
               (A.rows() <= 20 ? "; enumeration gives alpha = " + std::to_string(stability_number(A)) : std::string()) +
               ".\n";
  return out;
}

// ---------------------------------------------------------------- robust SDP, raw sos

Outcome run_robust(const Context& c) {
  check_keys(c.problem, keys({"variables", "c", "F0", "Fy", "G", "eps", "multiplier_degree", "box", "samples"}));
  const auto vars = c.vars();
  RobustSdp p;
  const auto cv = numbers(need(c.problem, "c"), "c");
  p.c = Eigen::Map<const Eigen::VectorXd>(cv.data(), static_cast<Eigen::Index>(cv.size()));
  p.F0 = poly_matrix(need(c.problem, "F0"), vars, "F0");
  for (const auto& f : need(c.problem, "Fy")) p.Fy.push_back(poly_matrix(f, vars, "Fy"));
  p.G = poly_matrix(need(c.problem, "G"), vars, "G");
  p.eps = c.num("eps", p.eps);
  p.multiplier_degree = c.degree("multiplier_degree", 0);
  if (c.problem.contains("box"))
    for (const auto& iv : c.problem.at("box")) p.sampling_box.push_back(interval(iv, "box"));
  const RobustResult r = solve_robust_sdp(p, c.settings(), c.integer_or("samples", 200), c.seed());
  Outcome out;
  out.result["solver_status"] = to_string(r.status);
  if (!r.certificate) {
    out.code = kNoCertificate;
    out.report = "No sos-matrix certificate at multiplier degree " + std::to_string(p.multiplier_degree) + ".\n";
    return out;
  }
  const RobustCertificate& k = *r.certificate;
  verify(k.residual_S <= kResidualTol && k.residual_composite <= kResidualTol, "sos-matrix identities");
  verify(k.min_eig_S >= kEigTol && k.min_eig_composite >= kEigTol, "sos-matrix Gram blocks");
  verify(k.samples == 0 || k.min_sampled_eig > 0, "sampled feasibility");
  out.result["y"] = to_json(k.y);
  out.result["v_opt"] = k.v_opt;
  json S = json::array();
  for (int i = 0; i < k.S.side(); ++i) {
    json row = json::array();
    for (int j = 0; j < k.S.side(); ++j) row.push_back(to_string(k.S(i, j), vars));
    S.push_back(row);
  }
  out.result["S"] = S;
  out.result["residual"] = {{"S", k.residual_S}, {"composite", k.residual_composite}};
  out.result["samples"] = k.samples;
  out.result["min_sampled_eig"] = to_json(k.min_sampled_eig);
  out.report = "Robust optimum v_opt = " + fmt(k.v_opt) + "; F(x, y*) > 0 at all " + std::to_string(k.samples) +
               " sampled admissible x.\n";
  return out;
}

Outcome run_raw_sos(const Context& c) {
  check_keys(c.problem, keys({"variables", "polynomial", "conic_dump", "gram_margin"}));
  const auto vars = c.vars();
  const Polynomial p = polynomial(need(c.problem, "polynomial"), vars, "polynomial");
  if (p.degree() % 2 != 0) throw InputError("polynomial: odd degree cannot be sos");
  SosProgram prog;
  SosOptions o;
  o.gram_margin = c.num("gram_margin", 0.0);
  const SosHandle h = prog.add_sos(lift(p), p.degree(), o);
  if (c.problem.contains("conic_dump")) {
    std::ofstream dump(c.resolve(c.problem.at("conic_dump").get<std::string>()));
    if (!dump) throw InputError("cannot write conic dump");
    write_conic(dump, prog.compile().conic);
  }
  const SosSolution sol = prog.solve(c.settings());
  if (sol.status() == SolveStatus::kMaxIterations) throw SolverFailure("raw-sos: iteration limit");
  Outcome out;
  out.result["solver_status"] = to_string(sol.status());
  out.result["solver"] = {{"iterations", sol.solver().iterations},
                          {"primal_residual", sol.solver().primal_residual},
                          {"dual_residual", sol.solver().dual_residual}};
  out.result["basis"] = monomials(sol.basis(h), vars);
  out.result["sos"] = sol.optimal();
  if (!sol.optimal()) {
    out.code = kNoCertificate;
    out.report = "Not a sum of squares (infeasibility certificate found).\n";
    return out;
  }
  verify(sol.reconstruction_error(h) <= kResidualTol && sol.min_eigenvalue(h) >= kEigTol, "Gram certificate");
  out.result["gram"] = to_json(sol.gram(h));
  out.result["residual"] = sol.reconstruction_error(h);
  out.result["min_eigenvalue"] = sol.min_eigenvalue(h);
  out.report = "p = z' Q z with Q PSD over the listed basis.\n";
  return out;
}

const std::map<std::string, std::function<Outcome(const Context&)>>& handlers() {
  static const std::map<std::string, std::function<Outcome(const Context&)>> h = {
      {"lyapunov", run_lyapunov},       {"barrier", run_barrier},
      {"roa", run_roa},                 {"jsr", run_jsr},
      {"jsr-trajectory", run_jsr_trajectory}, {"moment-check", run_moment_check},
      {"bound", run_bound},             {"option", run_option},
      {"pop", run_pop},                 {"fit", run_fit},
      {"design", run_design},           {"game", run_game},
      {"stochastic-game", run_stochastic_game}, {"copositive", run_copositive},
      {"stability", run_stability},     {"robust", run_robust},
      {"raw-sos", run_raw_sos}};
  return h;
}

json read_problem(const Args& args) {
  std::ifstream in(args.in);
  if (!in) throw InputError("cannot open " + args.in);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("problem file must be a JSON object");
  if (integer(need(j, "schema_version"), "schema_version") != kSchemaVersion)
    throw InputError("unsupported schema_version");
  const auto kind = need(j, "kind");
  if (!kind.is_string() || kind.get<std::string>() != args.kind)
    throw InputError("problem kind does not match the command '" + args.kind + "'");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

void emit(const Args& args, const json& result) {
  const std::string text = result.dump(2) + "\n";
  if (args.out.empty())
    std::cout << text;
  else
    write_text(args.out, text);
}

json envelope(const Args& args, const std::string& status) {
  json r;
  r["schema_version"] = kSchemaVersion;
  r["kind"] = args.kind;
  r["status"] = status;
  r["soskit_version"] = SOSKIT_VERSION;
  return r;
}

int run(const Args& args) {
  const auto start = std::chrono::steady_clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  try {
    const json problem = read_problem(args);
    const Context ctx{args, problem, std::filesystem::path(args.in).parent_path()};
    Outcome o = handlers().at(args.kind)(ctx);
    json r = envelope(args, o.code == kSuccess ? "success" : "no_certificate");
    r["result"] = o.result;
    r["diagnostics"] = {{"wall_seconds", seconds()}};
    if (args.report) {
      r["report"] = o.report;
      std::cerr << o.report;
    }
    if (!args.csv.empty()) {
      if (o.csv.empty()) throw InputError("--csv is not supported for kind " + args.kind);
      write_text(args.csv, o.csv);
    }
    emit(args, r);
    return o.code;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::domain_error& e) {
    // Sound negative verdicts raised by the modules (unbounded, infeasible data).
    json r = envelope(args, "no_certificate");
    r["result"] = {{"reason", e.what()}};
    r["diagnostics"] = {{"wall_seconds", seconds()}};
    emit(args, r);
    std::cerr << e.what() << "\n";
    return kNoCertificate;
  } catch (const std::exception& e) {
    json r = envelope(args, "solver_failure");
    r["result"] = {{"reason", e.what()}};
    r["diagnostics"] = {{"wall_seconds", seconds()}};
    emit(args, r);
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
}

}  // namespace
}  // namespace soskit::cli

int main(int argc, char** argv) {
  using soskit::cli::Args;
  Args args;
  CLI::App app{"soskit: sum-of-squares certificates, moment bounds and polynomial games"};
  app.set_version_flag("--version", std::string(SOSKIT_VERSION));
  std::vector<std::string> kinds;
  for (const auto& [k, v] : soskit::cli::handlers()) kinds.push_back(k);
  app.add_option("kind", args.kind, "problem kind")->required()->check(CLI::IsMember(kinds));
  app.add_option("--in", args.in, "problem file (JSON)")->required();
  app.add_option("--out", args.out, "result file (JSON); standard output if omitted");
  app.add_option("--degree", args.degree, "degree or hierarchy level, overriding the problem file");
  app.add_option("--tol", args.tol, "solver tolerance");
  app.add_option("--max-iters", args.max_iters, "solver iteration limit");
  app.add_option("--seed", args.seed, "seed for sampling checks and the solver");
  app.add_flag("--report", args.report, "add a plain-text narrative");
  app.add_option("--csv", args.csv, "write trajectory samples as CSV (lyapunov, jsr-trajectory)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : soskit::cli::kInputError;
  }
  return soskit::cli::run(args);
}
