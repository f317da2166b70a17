#include "soskit/poly.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <numeric>

namespace soskit {

Exponent::Exponent(std::vector<int> entries) : e_(std::move(entries)) {
  for (int v : e_)
    if (v < 0) throw std::invalid_argument("Exponent: negative entry");
}

Exponent Exponent::unit(int n, int i) {
  if (i < 0 || i >= n) throw std::out_of_range("Exponent::unit: index");
  Exponent e(n);
  e.e_[static_cast<std::size_t>(i)] = 1;
  return e;
}

void Exponent::set(int i, int value) {
  if (value < 0) throw std::invalid_argument("Exponent: negative entry");
  e_.at(static_cast<std::size_t>(i)) = value;
}

int Exponent::degree() const { return std::accumulate(e_.begin(), e_.end(), 0); }

Exponent Exponent::operator+(const Exponent& other) const {
  if (other.size() != size()) throw std::invalid_argument("Exponent: length mismatch");
  Exponent r = *this;
  for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] += other.e_[i];
  return r;
}

bool Exponent::divides(const Exponent& other) const {
  for (std::size_t i = 0; i < e_.size(); ++i)
    if (e_[i] > other.e_[i]) return false;
  return true;
}

bool GradedLex::operator()(const Exponent& a, const Exponent& b) const {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Within a degree, larger leading exponents come first.
  return std::lexicographical_compare(b.entries().begin(), b.entries().end(), a.entries().begin(),
                                      a.entries().end());
}

Polynomial pow(const Polynomial& p, int k) {
  if (k < 0) throw std::invalid_argument("pow: negative exponent");
  Polynomial r = Polynomial::constant(p.num_vars(), 1.0);
  Polynomial base = p;
  while (k > 0) {
    if (k & 1) r = r * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return r;
}

double max_abs_coeff(const Polynomial& p) {
  double m = 0.0;
  for (const auto& [e, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

double evaluate(const Polynomial& p, std::span<const double> point) {
  if (static_cast<int>(point.size()) != p.num_vars())
    throw std::invalid_argument("evaluate: point dimension mismatch");
  double total = 0.0;
  for (const auto& [e, c] : p.terms()) {
    double m = c;
    for (int i = 0; i < e.size(); ++i)
      for (int k = 0; k < e[i]; ++k) m *= point[static_cast<std::size_t>(i)];
    total += m;
  }
  return total;
}

Eigen::MatrixXd evaluate(const PolyMatrix& m, std::span<const double> point) {
  Eigen::MatrixXd out(m.side(), m.side());
  for (int i = 0; i < m.side(); ++i)
    for (int j = 0; j <= i; ++j) out(i, j) = out(j, i) = evaluate(m(i, j), point);
  return out;
}

namespace {

void monomials_of_degree(int n, int d, int var, Exponent& cur, std::vector<Exponent>& out) {
  if (var == n - 1) {
    cur.set(var, d);
    out.push_back(cur);
    cur.set(var, 0);
    return;
  }
  for (int k = d; k >= 0; --k) {
    cur.set(var, k);
    monomials_of_degree(n, d - k, var + 1, cur, out);
  }
  cur.set(var, 0);
}

}  // namespace

std::vector<Exponent> monomials_in_range(int n, int lo, int hi) {
  if (n < 1) throw std::invalid_argument("monomials: need at least one variable");
  std::vector<Exponent> out;
  Exponent cur(n);
  for (int d = std::max(lo, 0); d <= hi; ++d) monomials_of_degree(n, d, 0, cur, out);
  return out;
}

std::vector<std::string> default_names(int n) {
  if (n == 1) return {"x"};
  if (n == 2) return {"x", "y"};
  if (n == 3) return {"x", "y", "z"};
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(const Polynomial& p, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != p.num_vars())
    throw std::invalid_argument("to_string: name count mismatch");
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    const bool neg = c < 0;
    if (first) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    first = false;
    const double mag = std::abs(c);
    std::string mono;
    for (int i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += names[static_cast<std::size_t>(i)];
      if (e[i] > 1) mono += "^" + std::to_string(e[i]);
    }
    if (mono.empty()) {
      out += shortest(mag);
    } else if (mag == 1.0) {
      out += mono;
    } else {
      out += shortest(mag) + "*" + mono;
    }
  }
  return out;
}

namespace {

// expr    := [sign] term { sign term }
// term    := factor { ['*'] factor | '/' number }
// factor  := primary [ '^' uint ]
// primary := number | name | '(' expr ')' | sign primary
class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  Polynomial run() {
    skip();
    if (pos_ == s_.size()) throw ParseError("empty expression", pos_);
    Polynomial p = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return p;
  }

 private:
  int n() const { return static_cast<int>(vars_.size()); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool starts_primary() {
    skip();
    if (pos_ >= s_.size()) return false;
    const char c = s_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '(' || c == '_' ||
           std::isalpha(static_cast<unsigned char>(c));
  }

  Polynomial expr() {
    Polynomial acc(n());
    bool first = true;
    while (true) {
      double sign = 1.0;
      if (peek('+') || peek('-')) {
        sign = s_[pos_] == '-' ? -1.0 : 1.0;
        ++pos_;
      } else if (!first) {
        break;
      }
      first = false;
      acc += term() * sign;
    }
    return acc;
  }

  Polynomial term() {
    Polynomial acc = factor();
    while (true) {
      if (peek('*')) {
        ++pos_;
        acc = acc * factor();
      } else if (peek('/')) {
        ++pos_;
        skip();
        const std::size_t at = pos_;
        const double d = number();
        if (d == 0.0) throw ParseError("division by zero", at);
        acc *= 1.0 / d;
      } else if (starts_primary()) {
        acc = acc * factor();
      } else {
        break;
      }
    }
    return acc;
  }

  Polynomial factor() {
    Polynomial base = primary();
    if (peek('^')) {
      ++pos_;
      skip();
      const std::size_t at = pos_;
      std::size_t end = pos_;
      while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
      if (end == pos_) throw ParseError("expected nonnegative integer exponent", at);
      const int k = std::stoi(s_.substr(pos_, end - pos_));
      pos_ = end;
      return pow(base, k);
    }
    return base;
  }

  Polynomial primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (c == '-' || c == '+') {
      ++pos_;
      Polynomial p = primary();
      return c == '-' ? -p : p;
    }
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!peek(')')) throw ParseError("expected ')'", pos_);
      ++pos_;
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Polynomial::constant(n(), number());
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t at = pos_;
      std::size_t end = pos_;
      while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) ++end;
      const std::string name = s_.substr(pos_, end - pos_);
      pos_ = end;
      auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it == vars_.end()) throw ParseError("unknown variable '" + name + "'", at);
      return Polynomial::variable(n(), static_cast<int>(it - vars_.begin()));
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  double number() {
    skip();
    const std::size_t at = pos_;
    std::size_t end = pos_;
    auto digits = [&] {
      while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
    };
    digits();
    if (end < s_.size() && s_[end] == '.') {
      ++end;
      digits();
    }
    // Only consume an exponent marker when digits follow, so "2e" stays ambiguous-free.
    if (end < s_.size() && (s_[end] == 'e' || s_[end] == 'E')) {
      std::size_t k = end + 1;
      if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
      if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
        end = k;
        digits();
      }
    }
    double v = 0.0;
    auto res = std::from_chars(s_.data() + at, s_.data() + end, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + end || end == at)
      throw ParseError("malformed number", at);
    pos_ = end;
    return v;
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse(const std::string& text, const std::vector<std::string>& variables) {
  if (variables.empty()) throw std::invalid_argument("parse: empty variable list");
  return Parser(text, variables).run();
}

}  // namespace soskit
