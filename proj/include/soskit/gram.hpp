#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soskit/conic.hpp"
#include "soskit/poly.hpp"

namespace soskit {

// constant + sum_k coeff_k * v_k over decision variables v_k.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(double c) : constant_(c) {}  // NOLINT: numbers are affine expressions
  static AffineExpr variable(int id, double coeff = 1.0);

  double constant() const { return constant_; }
  const std::map<int, double>& coeffs() const { return coeffs_; }
  bool is_constant() const { return coeffs_.empty(); }
  // Id of a bare variable expression (1 * v + 0); throws otherwise.
  int id() const;

  double evaluate(const Eigen::VectorXd& values) const;

  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(double s);
  bool operator==(const AffineExpr& o) const = default;

 private:
  double constant_ = 0.0;
  std::map<int, double> coeffs_;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a);
AffineExpr operator*(AffineExpr a, double s);
AffineExpr operator*(double s, AffineExpr a);

bool negligible(const AffineExpr& e);

using ParamPolynomial = BasicPolynomial<AffineExpr>;
using ParamPolyMatrix = BasicPolyMatrix<AffineExpr>;

ParamPolynomial lift(const Polynomial& p);
inline ParamPolynomial operator*(const ParamPolynomial& a, const Polynomial& b) { return a.multiply(b); }
inline ParamPolynomial operator*(const Polynomial& b, const ParamPolynomial& a) { return a.multiply(b); }
// Fixes every decision variable.
Polynomial evaluate(const ParamPolynomial& p, const Eigen::VectorXd& values);

// All exponents of degree <= d in graded-lex order; length C(n+d, d).
std::vector<Exponent> monomial_basis(int n, int d);

// Degree of a polynomial restricted to its first k variables.
template <class Coeff>
int partial_degree(const BasicPolynomial<Coeff>& p, int k) {
  int d = 0;
  for (const auto& [e, c] : p.terms()) {
    int s = 0;
    for (int i = 0; i < k; ++i) s += e[i];
    d = std::max(d, s);
  }
  return d;
}

struct SosOptions {
  // Require Q - margin * I to be PSD (interior certificate).
  double gram_margin = 0.0;
  // Certify q - pd_gamma * sum_i sum_{j<=d} x_i^{2j} instead of q.
  bool positive_definite = false;
  double pd_gamma = 1e-4;
  // Drop basis monomials m whose square m^2 has an identically zero coefficient.
  bool prune_basis = false;
  // Replace the default half-degree basis.
  std::optional<std::vector<Exponent>> basis;
};

// One-sided or two-sided real interval; infinite ends allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  static Interval real() { return {}; }
  static Interval at_least(double a) { return {a, std::numeric_limits<double>::infinity()}; }
  static Interval at_most(double a) { return {-std::numeric_limits<double>::infinity(), a}; }
  static Interval closed(double a, double b) { return {a, b}; }
  bool bounded_below() const { return lo > -std::numeric_limits<double>::infinity(); }
  bool bounded_above() const { return hi < std::numeric_limits<double>::infinity(); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct GramBlock {
  int first_var = 0;
  std::vector<Exponent> basis;
  double margin = 0.0;
  int side() const { return static_cast<int>(basis.size()); }
};

// target = sum_k multiplier_k * (z_k' Q_k z_k)
struct CertificateTerm {
  int gram;
  Polynomial multiplier;
};

struct SosRecord {
  std::string kind;
  ParamPolynomial target;
  std::vector<CertificateTerm> terms;
};

struct SosHandle {
  int index = -1;
};

struct CompiledProblem {
  ConicProblem conic;
  std::vector<GramBlock> grams;
  std::vector<SosRecord> records;
  // PSD cone position of each Gram block, then each declared PSD block.
  std::vector<int> psd_cone_index;
  double objective_sign = 1.0;
  double objective_constant = 0.0;
  int num_vars = 0;
};

class SosSolution {
 public:
  SosSolution(std::shared_ptr<const CompiledProblem> compiled, SolveResult result);

  SolveStatus status() const { return result_.status; }
  bool optimal() const { return result_.status == SolveStatus::kOptimal; }
  const SolveResult& solver() const { return result_; }
  // Objective in the caller's sense (max problems report the max).
  double objective() const;

  const Eigen::VectorXd& values() const { return result_.x; }
  double value(const AffineExpr& e) const { return e.evaluate(result_.x); }
  Polynomial value(const ParamPolynomial& p) const { return evaluate(p, result_.x); }

  Eigen::MatrixXd gram(int block) const;
  Eigen::MatrixXd gram(SosHandle h, int term = 0) const;
  const std::vector<Exponent>& basis(SosHandle h, int term = 0) const;
  double min_eigenvalue(SosHandle h, int term = 0) const;
  // z'Qz for one certificate term.
  Polynomial square_part(SosHandle h, int term = 0) const;
  // max |coefficient| of target - sum multiplier * z'Qz.
  double reconstruction_error(SosHandle h) const;
  const SosRecord& record(SosHandle h) const;
  const CompiledProblem& compiled() const { return *compiled_; }

 private:
  std::shared_ptr<const CompiledProblem> compiled_;
  SolveResult result_;
};

class SosProgram {
 public:
  enum class Sense { kMinimize, kMaximize };

  AffineExpr new_var(std::optional<double> lower_bound = std::nullopt);
  std::vector<AffineExpr> new_vars(int k);
  int num_vars() const { return num_vars_; }

  // Polynomial with one free coefficient per listed monomial.
  ParamPolynomial new_free_poly(int n, const std::vector<Exponent>& monomials);
  // z'Qz over `basis` with a fresh PSD Gram block; returns the block id.
  ParamPolynomial new_sos_poly(int n, const std::vector<Exponent>& basis, int* gram_id = nullptr,
                               double margin = 0.0);

  SosHandle add_sos(const ParamPolynomial& q, int two_d, const SosOptions& opts = {});
  SosHandle add_sos(const ParamPolynomial& q, const SosOptions& opts = {});
  SosHandle add_sos_matrix(const ParamPolyMatrix& S, int two_d, const SosOptions& opts = {});
  // Nonnegativity of a univariate q on an interval. target_degree overrides deg q.
  SosHandle add_univariate_nonneg(const ParamPolynomial& q, const Interval& domain,
                                  std::optional<int> target_degree = std::nullopt);
  // Nonnegativity of q on a box over its first box.size() variables; the
  // remaining `aux` variables enter q quadratically and are left free.
  SosHandle add_box_nonneg(const ParamPolynomial& q, const std::vector<Interval>& box, int aux = 0,
                           std::optional<int> target_degree = std::nullopt);

  void add_eq(const AffineExpr& e);
  void add_ge(const AffineExpr& e);
  // Coefficientwise polynomial identity p = 0.
  void add_identity(const ParamPolynomial& p);
  // Symmetric matrix of affine expressions constrained PSD.
  void add_psd(const std::vector<std::vector<AffineExpr>>& m);
  // (t, x) with t >= ||x||.
  void add_soc(const std::vector<AffineExpr>& tx);

  void set_objective(const AffineExpr& e, Sense sense);
  void minimize(const AffineExpr& e) { set_objective(e, Sense::kMinimize); }
  void maximize(const AffineExpr& e) { set_objective(e, Sense::kMaximize); }

  AffineExpr gram_trace(int gram_id) const;
  const GramBlock& gram_block(int gram_id) const { return grams_.at(static_cast<std::size_t>(gram_id)); }
  int num_grams() const { return static_cast<int>(grams_.size()); }
  int gram_of(SosHandle h, int term = 0) const {
    return records_.at(static_cast<std::size_t>(h.index)).terms.at(static_cast<std::size_t>(term)).gram;
  }

  CompiledProblem compile() const;
  SosSolution solve(const SolverSettings& settings = {}, const std::optional<WarmStart>& warm = std::nullopt) const;

 private:
  void check_vars(const AffineExpr& e) const;
  SosHandle record(std::string kind, const ParamPolynomial& target, std::vector<CertificateTerm> terms);

  int num_vars_ = 0;
  std::vector<std::pair<int, double>> lower_bounds_;
  std::vector<AffineExpr> eqs_, ges_;
  std::vector<std::vector<std::vector<AffineExpr>>> psds_;
  std::vector<std::vector<AffineExpr>> socs_;
  std::vector<GramBlock> grams_;
  std::vector<SosRecord> records_;
  AffineExpr objective_;
  Sense sense_ = Sense::kMinimize;
};

struct SosCheck {
  bool feasible = false;
  SolveStatus status = SolveStatus::kMaxIterations;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd factor;  // gram = factor * factor'
  std::vector<Exponent> basis;
  double min_eigenvalue = 0.0;
  double residual = 0.0;
};

// Standalone SOS test of a numeric polynomial of even degree.
SosCheck check_sos(const Polynomial& p, const SolverSettings& settings = {}, const SosOptions& opts = {});

double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace soskit
