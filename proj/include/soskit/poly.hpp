#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace soskit {

// Coefficients smaller than this are treated as float cancellation noise.
inline constexpr double kDropTolerance = 1e-14;

class Exponent {
 public:
  Exponent() = default;
  explicit Exponent(int n) : e_(static_cast<std::size_t>(n), 0) {
    if (n < 0) throw std::invalid_argument("Exponent: negative length");
  }
  Exponent(std::initializer_list<int> entries) : Exponent(std::vector<int>(entries)) {}
  explicit Exponent(std::vector<int> entries);

  static Exponent unit(int n, int i);

  int size() const { return static_cast<int>(e_.size()); }
  int operator[](int i) const { return e_[static_cast<std::size_t>(i)]; }
  void set(int i, int value);
  int degree() const;
  const std::vector<int>& entries() const { return e_; }

  Exponent operator+(const Exponent& other) const;
  bool operator==(const Exponent& other) const = default;
  bool divides(const Exponent& other) const;

 private:
  std::vector<int> e_;
};

// Graded lexicographic: lower degree first, then x1-heavy monomials first, so
// the degree-2 basis in two variables reads {1, x1, x2, x1^2, x1*x2, x2^2}.
struct GradedLex {
  bool operator()(const Exponent& a, const Exponent& b) const;
};

inline bool negligible(double c) { return std::abs(c) < kDropTolerance; }

template <class Coeff>
class BasicPolynomial {
 public:
  using Terms = std::map<Exponent, Coeff, GradedLex>;

  BasicPolynomial() = default;
  explicit BasicPolynomial(int n) : n_(n) {
    if (n < 0) throw std::invalid_argument("Polynomial: negative variable count");
  }
  BasicPolynomial(int n, const Terms& terms) : BasicPolynomial(n) {
    for (const auto& [e, c] : terms) add_term(e, c);
  }

  static BasicPolynomial constant(int n, const Coeff& c) {
    BasicPolynomial p(n);
    p.add_term(Exponent(n), c);
    return p;
  }
  static BasicPolynomial variable(int n, int i) {
    BasicPolynomial p(n);
    p.add_term(Exponent::unit(n, i), Coeff(1.0));
    return p;
  }
  static BasicPolynomial monomial(const Exponent& e, const Coeff& c) {
    BasicPolynomial p(e.size());
    p.add_term(e, c);
    return p;
  }

  int num_vars() const { return n_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t num_terms() const { return terms_.size(); }

  int degree() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
  }
  int min_degree() const {
    return terms_.empty() ? 0 : terms_.begin()->first.degree();
  }

  Coeff coefficient(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Coeff() : it->second;
  }

  // Accumulates c into the coefficient of x^e; used by builders only.
  void add_term(const Exponent& e, const Coeff& c) {
    if (e.size() != n_) throw std::invalid_argument("Polynomial: exponent length mismatch");
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (!negligible(c)) terms_.emplace(e, c);
      return;
    }
    it->second += c;
    if (negligible(it->second)) terms_.erase(it);
  }

  BasicPolynomial& operator+=(const BasicPolynomial& o) {
    check_same(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  BasicPolynomial& operator-=(const BasicPolynomial& o) {
    check_same(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  BasicPolynomial& operator*=(double s) {
    Terms out;
    for (const auto& [e, c] : terms_) {
      Coeff v = c * s;
      if (!negligible(v)) out.emplace(e, v);
    }
    terms_ = std::move(out);
    return *this;
  }

  friend BasicPolynomial operator+(BasicPolynomial a, const BasicPolynomial& b) { return a += b; }
  friend BasicPolynomial operator-(BasicPolynomial a, const BasicPolynomial& b) { return a -= b; }
  friend BasicPolynomial operator-(BasicPolynomial a) { return a *= -1.0; }
  friend BasicPolynomial operator*(BasicPolynomial a, double s) { return a *= s; }
  friend BasicPolynomial operator*(double s, BasicPolynomial a) { return a *= s; }

  // Product with a numeric polynomial; keeps the result affine in Coeff.
  template <class Other>
  BasicPolynomial multiply(const BasicPolynomial<Other>& o) const {
    check_same_n(o.num_vars());
    BasicPolynomial out(n_);
    for (const auto& [e1, c1] : terms_)
      for (const auto& [e2, c2] : o.terms()) out.add_term(e1 + e2, c1 * c2);
    return out;
  }

  void check_same(const BasicPolynomial& o) const { check_same_n(o.n_); }
  void check_same_n(int n) const {
    if (n != n_) throw std::invalid_argument("Polynomial: variable count mismatch");
  }

 private:
  int n_ = 0;
  Terms terms_;
};

using Polynomial = BasicPolynomial<double>;

inline Polynomial operator*(const Polynomial& a, const Polynomial& b) { return a.multiply(b); }
Polynomial pow(const Polynomial& p, int k);
inline bool operator==(const Polynomial& a, const Polynomial& b) {
  return a.num_vars() == b.num_vars() && a.terms() == b.terms();
}

// Largest absolute coefficient.
double max_abs_coeff(const Polynomial& p);

double evaluate(const Polynomial& p, std::span<const double> point);
inline double evaluate(const Polynomial& p, const Eigen::VectorXd& point) {
  return evaluate(p, std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
}
inline double evaluate(const Polynomial& p, std::initializer_list<double> point) {
  return evaluate(p, std::span<const double>(point.begin(), point.size()));
}

template <class Coeff>
BasicPolynomial<Coeff> differentiate(const BasicPolynomial<Coeff>& p, int j) {
  if (j < 0 || j >= p.num_vars()) throw std::out_of_range("differentiate: variable index");
  BasicPolynomial<Coeff> out(p.num_vars());
  for (const auto& [e, c] : p.terms()) {
    if (e[j] == 0) continue;
    Exponent d = e;
    d.set(j, e[j] - 1);
    out.add_term(d, c * static_cast<double>(e[j]));
  }
  return out;
}

template <class Coeff>
std::vector<BasicPolynomial<Coeff>> gradient(const BasicPolynomial<Coeff>& p) {
  std::vector<BasicPolynomial<Coeff>> g;
  for (int j = 0; j < p.num_vars(); ++j) g.push_back(differentiate(p, j));
  return g;
}

// Expands every monomial of p under x -> A x.
template <class Coeff>
BasicPolynomial<Coeff> compose_linear(const BasicPolynomial<Coeff>& p, const Eigen::MatrixXd& A) {
  const int n = p.num_vars();
  if (A.rows() != n || A.cols() != n)
    throw std::invalid_argument("compose_linear: matrix must be square of side n");
  std::vector<Polynomial> rows;
  for (int i = 0; i < n; ++i) {
    Polynomial r(n);
    for (int k = 0; k < n; ++k)
      if (A(i, k) != 0.0) r.add_term(Exponent::unit(n, k), A(i, k));
    rows.push_back(r);
  }
  // Powers of each row are reused across terms.
  std::vector<std::vector<Polynomial>> powers(static_cast<std::size_t>(n));
  BasicPolynomial<Coeff> out(n);
  for (const auto& [e, c] : p.terms()) {
    Polynomial m = Polynomial::constant(n, 1.0);
    for (int i = 0; i < n; ++i) {
      auto& pw = powers[static_cast<std::size_t>(i)];
      if (pw.empty()) pw.push_back(Polynomial::constant(n, 1.0));
      while (static_cast<int>(pw.size()) <= e[i]) pw.push_back(pw.back() * rows[static_cast<std::size_t>(i)]);
      if (e[i] > 0) m = m * pw[static_cast<std::size_t>(e[i])];
    }
    for (const auto& [me, mc] : m.terms()) out.add_term(me, c * mc);
  }
  return out;
}

template <class Coeff>
BasicPolynomial<Coeff> top_component(const BasicPolynomial<Coeff>& p) {
  if (p.is_zero()) throw std::invalid_argument("top_component: zero polynomial");
  const int d = p.degree();
  BasicPolynomial<Coeff> out(p.num_vars());
  for (const auto& [e, c] : p.terms())
    if (e.degree() == d) out.add_term(e, c);
  return out;
}

// Symmetric p x p matrix of polynomials; only the lower triangle is stored.
template <class Coeff>
class BasicPolyMatrix {
 public:
  BasicPolyMatrix() = default;
  BasicPolyMatrix(int side, int n)
      : side_(side), n_(n), lower_(static_cast<std::size_t>(side * (side + 1) / 2), BasicPolynomial<Coeff>(n)) {}

  int side() const { return side_; }
  int num_vars() const { return n_; }
  const BasicPolynomial<Coeff>& operator()(int i, int j) const { return lower_[index(i, j)]; }
  void set(int i, int j, BasicPolynomial<Coeff> value) {
    value.check_same_n(n_);
    lower_[index(i, j)] = std::move(value);
  }
  int degree() const {
    int d = 0;
    for (const auto& e : lower_) d = std::max(d, e.degree());
    return d;
  }

  // Builds from a full grid, rejecting asymmetric input.
  static BasicPolyMatrix from_grid(const std::vector<std::vector<BasicPolynomial<Coeff>>>& grid, int n) {
    BasicPolyMatrix m(static_cast<int>(grid.size()), n);
    for (int i = 0; i < m.side_; ++i) {
      if (static_cast<int>(grid[static_cast<std::size_t>(i)].size()) != m.side_)
        throw std::invalid_argument("PolyMatrix: grid is not square");
      for (int j = 0; j <= i; ++j) {
        const auto& a = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const auto& b = grid[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        if (!(a.terms() == b.terms())) throw std::invalid_argument("PolyMatrix: asymmetric input");
        m.set(i, j, a);
      }
    }
    return m;
  }

 private:
  std::size_t index(int i, int j) const {
    if (i < 0 || j < 0 || i >= side_ || j >= side_) throw std::out_of_range("PolyMatrix index");
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i * (i + 1) / 2 + j);
  }
  int side_ = 0;
  int n_ = 0;
  std::vector<BasicPolynomial<Coeff>> lower_;
};

using PolyMatrix = BasicPolyMatrix<double>;

template <class Coeff>
BasicPolyMatrix<Coeff> hessian(const BasicPolynomial<Coeff>& p) {
  const int n = p.num_vars();
  BasicPolyMatrix<Coeff> h(n, n);
  for (int i = 0; i < n; ++i) {
    auto di = differentiate(p, i);
    for (int j = 0; j <= i; ++j) h.set(i, j, differentiate(di, j));
  }
  return h;
}
Eigen::MatrixXd evaluate(const PolyMatrix& m, std::span<const double> point);

// All exponents of total degree lo..hi in graded-lex order.
std::vector<Exponent> monomials_in_range(int n, int lo, int hi);

// Default variable names: x (n = 1), x, y (n = 2), x, y, z (n = 3), x1..xn otherwise.
std::vector<std::string> default_names(int n);

// Canonical printer: graded-lex order, explicit '*', shortest round-trip coefficients.
std::string to_string(const Polynomial& p, const std::vector<std::string>& names);
inline std::string to_string(const Polynomial& p) { return to_string(p, default_names(p.num_vars())); }

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

Polynomial parse(const std::string& text, const std::vector<std::string>& variables);

}  // namespace soskit
