#include "soskit/gram.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

namespace soskit {

AffineExpr AffineExpr::variable(int id, double coeff) {
  if (id < 0) throw std::invalid_argument("AffineExpr: negative variable id");
  AffineExpr e;
  if (coeff != 0.0) e.coeffs_[id] = coeff;
  return e;
}

int AffineExpr::id() const {
  if (coeffs_.size() != 1 || coeffs_.begin()->second != 1.0 || constant_ != 0.0)
    throw std::logic_error("AffineExpr: not a bare variable");
  return coeffs_.begin()->first;
}

double AffineExpr::evaluate(const Eigen::VectorXd& values) const {
  double v = constant_;
  for (const auto& [k, c] : coeffs_) {
    if (k >= values.size()) throw std::out_of_range("AffineExpr: variable without a value");
    v += c * values(k);
  }
  return v;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  constant_ += o.constant_;
  for (const auto& [k, c] : o.coeffs_) {
    auto it = coeffs_.find(k);
    if (it == coeffs_.end()) {
      coeffs_.emplace(k, c);
    } else {
      it->second += c;
      if (it->second == 0.0) coeffs_.erase(it);
    }
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) { return *this += o * -1.0; }

AffineExpr& AffineExpr::operator*=(double s) {
  constant_ *= s;
  if (s == 0.0) {
    coeffs_.clear();
    return *this;
  }
  for (auto& [k, c] : coeffs_) c *= s;
  return *this;
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator-(AffineExpr a) { return a *= -1.0; }
AffineExpr operator*(AffineExpr a, double s) { return a *= s; }
AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

bool negligible(const AffineExpr& e) {
  if (!negligible(e.constant())) return false;
  for (const auto& [k, c] : e.coeffs())
    if (!negligible(c)) return false;
  return true;
}

ParamPolynomial lift(const Polynomial& p) {
  ParamPolynomial out(p.num_vars());
  for (const auto& [e, c] : p.terms()) out.add_term(e, AffineExpr(c));
  return out;
}

Polynomial evaluate(const ParamPolynomial& p, const Eigen::VectorXd& values) {
  Polynomial out(p.num_vars());
  for (const auto& [e, c] : p.terms()) out.add_term(e, c.evaluate(values));
  return out;
}

std::vector<Exponent> monomial_basis(int n, int d) {
  if (n < 1 || d < 0) throw std::invalid_argument("monomial_basis: need n >= 1 and d >= 0");
  return monomials_in_range(n, 0, d);
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

namespace {

Exponent extend(const Exponent& e, int total, int hot = -1) {
  Exponent out(total);
  for (int i = 0; i < e.size(); ++i) out.set(i, e[i]);
  if (hot >= 0) out.set(hot, 1);
  return out;
}

Polynomial univariate(std::initializer_list<double> coeffs) {
  Polynomial p(1);
  int k = 0;
  for (double c : coeffs) p.add_term(Exponent({k++}), c);
  return p;
}

int round_up_even(int d) { return d % 2 == 0 ? d : d + 1; }

}  // namespace

AffineExpr SosProgram::new_var(std::optional<double> lower_bound) {
  const int id = num_vars_++;
  if (lower_bound) lower_bounds_.emplace_back(id, *lower_bound);
  return AffineExpr::variable(id);
}

std::vector<AffineExpr> SosProgram::new_vars(int k) {
  std::vector<AffineExpr> v;
  for (int i = 0; i < k; ++i) v.push_back(new_var());
  return v;
}

ParamPolynomial SosProgram::new_free_poly(int n, const std::vector<Exponent>& monomials) {
  ParamPolynomial p(n);
  for (const auto& e : monomials) p.add_term(e, new_var());
  return p;
}

ParamPolynomial SosProgram::new_sos_poly(int n, const std::vector<Exponent>& basis, int* gram_id, double margin) {
  GramBlock g;
  g.basis = basis;
  g.margin = margin;
  const int s = g.side();
  g.first_var = num_vars_;
  num_vars_ += s * (s + 1) / 2;
  ParamPolynomial p(n);
  for (int j = 0; j < s; ++j)
    for (int i = j; i < s; ++i) {
      if (basis[static_cast<std::size_t>(i)].size() != n) throw std::invalid_argument("sos basis: wrong exponent length");
      const int v = g.first_var + tri_index(s, i, j);
      p.add_term(basis[static_cast<std::size_t>(i)] + basis[static_cast<std::size_t>(j)],
                 AffineExpr::variable(v, i == j ? 1.0 : 2.0));
    }
  grams_.push_back(std::move(g));
  if (gram_id) *gram_id = static_cast<int>(grams_.size()) - 1;
  return p;
}

AffineExpr SosProgram::gram_trace(int gram_id) const {
  const GramBlock& g = gram_block(gram_id);
  AffineExpr t;
  for (int i = 0; i < g.side(); ++i) t += AffineExpr::variable(g.first_var + tri_index(g.side(), i, i));
  return t;
}

void SosProgram::check_vars(const AffineExpr& e) const {
  for (const auto& [k, c] : e.coeffs())
    if (k >= num_vars_) throw std::invalid_argument("SosProgram: undeclared decision variable");
}

SosHandle SosProgram::record(std::string kind, const ParamPolynomial& target, std::vector<CertificateTerm> terms) {
  records_.push_back({std::move(kind), target, std::move(terms)});
  return {static_cast<int>(records_.size()) - 1};
}

void SosProgram::add_eq(const AffineExpr& e) {
  check_vars(e);
  eqs_.push_back(e);
}

void SosProgram::add_ge(const AffineExpr& e) {
  check_vars(e);
  ges_.push_back(e);
}

void SosProgram::add_identity(const ParamPolynomial& p) {
  for (const auto& [e, c] : p.terms()) add_eq(c);
}

void SosProgram::add_psd(const std::vector<std::vector<AffineExpr>>& m) {
  const std::size_t s = m.size();
  for (std::size_t i = 0; i < s; ++i) {
    if (m[i].size() != s) throw std::invalid_argument("add_psd: matrix is not square");
    for (std::size_t j = 0; j < s; ++j) {
      check_vars(m[i][j]);
      if (!(m[i][j] == m[j][i])) throw std::invalid_argument("add_psd: matrix is not symmetric");
    }
  }
  psds_.push_back(m);
}

void SosProgram::add_soc(const std::vector<AffineExpr>& tx) {
  if (tx.empty()) throw std::invalid_argument("add_soc: empty cone");
  for (const auto& e : tx) check_vars(e);
  socs_.push_back(tx);
}

void SosProgram::set_objective(const AffineExpr& e, Sense sense) {
  check_vars(e);
  objective_ = e;
  sense_ = sense;
}

SosHandle SosProgram::add_sos(const ParamPolynomial& q, int two_d, const SosOptions& opts) {
  if (two_d < 0 || two_d % 2 != 0) throw std::invalid_argument("add_sos: degree must be even and nonnegative");
  if (q.degree() > two_d) throw std::invalid_argument("add_sos: polynomial degree exceeds the declared degree");
  const int n = q.num_vars();
  const int d = two_d / 2;
  ParamPolynomial target = q;
  if (opts.positive_definite) {
    for (int i = 0; i < n; ++i)
      for (int j = 1; j <= d; ++j) {
        Exponent e(n);
        e.set(i, 2 * j);
        target.add_term(e, AffineExpr(-opts.pd_gamma));
      }
  }
  std::vector<Exponent> basis;
  if (opts.basis) {
    basis = *opts.basis;
  } else if (opts.prune_basis) {
    const int lo = (target.min_degree() + 1) / 2;
    for (const auto& m : monomials_in_range(n, lo, d))
      if (target.terms().count(m + m)) basis.push_back(m);
  } else {
    basis = monomial_basis(n, d);
  }
  int id = -1;
  const ParamPolynomial gram = new_sos_poly(n, basis, &id, opts.gram_margin);
  add_identity(target - gram);
  return record("sos", target, {{id, Polynomial::constant(n, 1.0)}});
}

SosHandle SosProgram::add_sos(const ParamPolynomial& q, const SosOptions& opts) {
  return add_sos(q, round_up_even(q.degree()), opts);
}

SosHandle SosProgram::add_sos_matrix(const ParamPolyMatrix& S, int two_d, const SosOptions& opts) {
  if (two_d < 0 || two_d % 2 != 0) throw std::invalid_argument("add_sos_matrix: degree must be even");
  if (S.degree() > two_d) throw std::invalid_argument("add_sos_matrix: entry degree exceeds the declared degree");
  const int n = S.num_vars(), p = S.side(), total = n + p;
  ParamPolynomial form(total);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (const auto& [e, c] : S(i, j).terms()) {
        Exponent ey = extend(e, total, n + i);
        ey.set(n + j, ey[n + j] + 1);
        form.add_term(ey, c);
      }
  std::vector<Exponent> basis;
  for (const auto& m : monomials_in_range(n, 0, two_d / 2))
    for (int k = 0; k < p; ++k) basis.push_back(extend(m, total, n + k));
  int id = -1;
  const ParamPolynomial gram = new_sos_poly(total, basis, &id, opts.gram_margin);
  add_identity(form - gram);
  return record("sos_matrix", form, {{id, Polynomial::constant(total, 1.0)}});
}

SosHandle SosProgram::add_univariate_nonneg(const ParamPolynomial& q, const Interval& dom,
                                            std::optional<int> target_degree) {
  if (q.num_vars() != 1) throw std::invalid_argument("add_univariate_nonneg: polynomial must be univariate");
  if (dom.lo > dom.hi) throw std::invalid_argument("add_univariate_nonneg: empty interval");
  const int D = std::max(target_degree.value_or(q.degree()), q.degree());
  std::vector<CertificateTerm> terms;
  ParamPolynomial rhs(1);
  auto multiplier = [&](int deg, const Polynomial& g) {
    if (deg < 0) return;
    int id = -1;
    rhs += new_sos_poly(1, monomials_in_range(1, 0, deg / 2), &id).multiply(g);
    terms.push_back({id, g});
  };
  const Polynomial one = Polynomial::constant(1, 1.0);
  const double a = dom.lo, b = dom.hi;
  if (!dom.bounded_below() && !dom.bounded_above()) {
    multiplier(round_up_even(D), one);
  } else if (dom.bounded_below() && !dom.bounded_above()) {
    multiplier(round_up_even(D), one);
    multiplier(round_up_even(D - 1), univariate({-a, 1.0}));
  } else if (!dom.bounded_below()) {
    multiplier(round_up_even(D), one);
    multiplier(round_up_even(D - 1), univariate({b, -1.0}));
  } else if (D % 2 == 0) {
    multiplier(D, one);
    if (D >= 2) multiplier(D - 2, univariate({-a * b, a + b, -1.0}));
  } else {
    multiplier(D - 1, univariate({-a, 1.0}));
    multiplier(D - 1, univariate({b, -1.0}));
  }
  add_identity(q - rhs);
  return record("univariate_nonneg", q, std::move(terms));
}

SosHandle SosProgram::add_box_nonneg(const ParamPolynomial& q, const std::vector<Interval>& box, int aux,
                                     std::optional<int> target_degree) {
  const int n = q.num_vars();
  const int k = static_cast<int>(box.size());
  if (aux < 0 || k + aux != n) throw std::invalid_argument("add_box_nonneg: box size plus aux must equal n");
  for (const auto& iv : box) {
    if (!iv.bounded_below() || !iv.bounded_above()) throw std::invalid_argument("add_box_nonneg: unbounded box");
    if (!(iv.lo < iv.hi)) throw std::invalid_argument("add_box_nonneg: empty box");
  }
  const int D = round_up_even(std::max(target_degree.value_or(0), partial_degree(q, k)));
  auto basis_for = [&](int deg) {
    std::vector<Exponent> out;
    for (const auto& m : monomials_in_range(k, 0, deg / 2)) {
      if (aux == 0) {
        out.push_back(extend(m, n));
      } else {
        for (int z = 0; z < aux; ++z) out.push_back(extend(m, n, k + z));
      }
    }
    return out;
  };
  std::vector<CertificateTerm> terms;
  ParamPolynomial rhs(n);
  int id = -1;
  rhs += new_sos_poly(n, basis_for(D), &id);
  terms.push_back({id, Polynomial::constant(n, 1.0)});
  if (D >= 2) {
    for (int i = 0; i < k; ++i) {
      const auto& iv = box[static_cast<std::size_t>(i)];
      const Polynomial xi = Polynomial::variable(n, i);
      const Polynomial g = (Polynomial::constant(n, iv.hi) - xi) * (xi - Polynomial::constant(n, iv.lo));
      rhs += new_sos_poly(n, basis_for(D - 2), &id).multiply(g);
      terms.push_back({id, g});
    }
  }
  add_identity(q - rhs);
  return record("box_nonneg", q, std::move(terms));
}

CompiledProblem SosProgram::compile() const {
  CompiledProblem out;
  out.grams = grams_;
  out.records = records_;
  out.num_vars = num_vars_;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> b;
  auto row_of = [&](const AffineExpr& e, double sign) {
    const int r = static_cast<int>(b.size());
    for (const auto& [k, c] : e.coeffs()) trip.emplace_back(r, k, sign * c);
    b.push_back(sign == 1.0 ? -e.constant() : e.constant());
  };
  auto& cones = out.conic.cones;

  // A x = b rows for equalities: e = 0  <=>  a'x = -const.
  for (const auto& e : eqs_) row_of(e, 1.0);
  if (!eqs_.empty()) cones.push_back({ConeKind::kZero, static_cast<int>(eqs_.size())});

  // s = b - A x = e for cone rows.
  const int nn = static_cast<int>(lower_bounds_.size() + ges_.size());
  for (const auto& [id, lb] : lower_bounds_) row_of(AffineExpr::variable(id) - AffineExpr(lb), -1.0);
  for (const auto& e : ges_) row_of(e, -1.0);
  if (nn > 0) cones.push_back({ConeKind::kNonneg, nn});

  for (const auto& tx : socs_) {
    for (const auto& e : tx) row_of(e, -1.0);
    cones.push_back({ConeKind::kSecondOrder, static_cast<int>(tx.size())});
  }

  const double r2 = std::sqrt(2.0);
  for (const auto& g : grams_) {
    const int s = g.side();
    for (int j = 0; j < s; ++j)
      for (int i = j; i < s; ++i) {
        const int r = static_cast<int>(b.size());
        trip.emplace_back(r, g.first_var + tri_index(s, i, j), i == j ? -1.0 : -r2);
        b.push_back(i == j ? -g.margin : 0.0);
      }
    out.psd_cone_index.push_back(static_cast<int>(cones.size()));
    cones.push_back({ConeKind::kPsd, s});
  }
  for (const auto& m : psds_) {
    const int s = static_cast<int>(m.size());
    for (int j = 0; j < s; ++j)
      for (int i = j; i < s; ++i) {
        const double w = i == j ? 1.0 : r2;
        row_of(m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * w, -1.0);
      }
    out.psd_cone_index.push_back(static_cast<int>(cones.size()));
    cones.push_back({ConeKind::kPsd, s});
  }

  const int m = static_cast<int>(b.size());
  out.conic.A.resize(m, num_vars_);
  out.conic.A.setFromTriplets(trip.begin(), trip.end());
  out.conic.A.makeCompressed();
  out.conic.b = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
  out.objective_sign = sense_ == Sense::kMinimize ? 1.0 : -1.0;
  out.objective_constant = objective_.constant();
  out.conic.c = Eigen::VectorXd::Zero(num_vars_);
  for (const auto& [k, c] : objective_.coeffs()) out.conic.c(k) = out.objective_sign * c;
  return out;
}

SosSolution SosProgram::solve(const SolverSettings& settings, const std::optional<WarmStart>& warm) const {
  auto compiled = std::make_shared<const CompiledProblem>(compile());
  SolveResult r = soskit::solve(compiled->conic, settings, warm);
  return SosSolution(std::move(compiled), std::move(r));
}

SosSolution::SosSolution(std::shared_ptr<const CompiledProblem> compiled, SolveResult result)
    : compiled_(std::move(compiled)), result_(std::move(result)) {}

double SosSolution::objective() const {
  return compiled_->objective_sign * result_.primal_objective + compiled_->objective_constant;
}

Eigen::MatrixXd SosSolution::gram(int block) const {
  const GramBlock& g = compiled_->grams.at(static_cast<std::size_t>(block));
  const int s = g.side();
  Eigen::MatrixXd q(s, s);
  for (int j = 0; j < s; ++j)
    for (int i = j; i < s; ++i) q(i, j) = q(j, i) = result_.x(g.first_var + tri_index(s, i, j));
  return q;
}

const SosRecord& SosSolution::record(SosHandle h) const { return compiled_->records.at(static_cast<std::size_t>(h.index)); }

Eigen::MatrixXd SosSolution::gram(SosHandle h, int term) const {
  return gram(record(h).terms.at(static_cast<std::size_t>(term)).gram);
}

const std::vector<Exponent>& SosSolution::basis(SosHandle h, int term) const {
  return compiled_->grams.at(static_cast<std::size_t>(record(h).terms.at(static_cast<std::size_t>(term)).gram)).basis;
}

double SosSolution::min_eigenvalue(SosHandle h, int term) const { return soskit::min_eigenvalue(gram(h, term)); }

Polynomial SosSolution::square_part(SosHandle h, int term) const {
  const auto& z = basis(h, term);
  const Eigen::MatrixXd q = gram(h, term);
  Polynomial p(record(h).target.num_vars());
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < z.size(); ++j)
      p.add_term(z[i] + z[j], q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  return p;
}

double SosSolution::reconstruction_error(SosHandle h) const {
  const SosRecord& rec = record(h);
  Polynomial diff = evaluate(rec.target, result_.x);
  for (std::size_t t = 0; t < rec.terms.size(); ++t)
    diff -= rec.terms[t].multiplier * square_part(h, static_cast<int>(t));
  return max_abs_coeff(diff);
}

SosCheck check_sos(const Polynomial& p, const SolverSettings& settings, const SosOptions& opts) {
  if (p.degree() % 2 != 0) throw std::invalid_argument("check_sos: odd degree");
  SosProgram prog;
  const SosHandle h = prog.add_sos(lift(p), p.degree(), opts);
  const SosSolution sol = prog.solve(settings);
  SosCheck out;
  out.status = sol.status();
  out.basis = sol.basis(h);
  if (!sol.optimal()) return out;
  out.feasible = true;
  out.gram = sol.gram(h);
  out.residual = sol.reconstruction_error(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.gram);
  out.min_eigenvalue = es.eigenvalues()(0);
  out.factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return out;
}

}  // namespace soskit
