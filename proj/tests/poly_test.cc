#include "soskit/poly.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace soskit {
namespace {

const std::vector<std::string> kXY{"x", "y"};

Polynomial Quartic() {
  return parse("x^2*y^2 + 4*x^2*y + 5*x^2 + x*y^2 + 2*x*y + 0.25*y^2", kXY);
}

Polynomial RandomPolynomial(std::mt19937& rng, int n, int deg, int terms) {
  std::uniform_int_distribution<int> pick(0, deg);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  Polynomial p(n);
  for (int t = 0; t < terms; ++t) {
    Exponent e(n);
    int budget = pick(rng);
    for (int i = 0; i < n && budget > 0; ++i) {
      std::uniform_int_distribution<int> take(0, budget);
      const int k = take(rng);
      e.set(i, k);
      budget -= k;
    }
    p.add_term(e, coeff(rng));
  }
  return p;
}

Eigen::VectorXd RandomPoint(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

TEST(ExponentTest, GradedLexOrder) {
  const auto basis = monomials_in_range(2, 0, 2);
  ASSERT_EQ(basis.size(), 6u);
  EXPECT_EQ(basis[0], Exponent({0, 0}));
  EXPECT_EQ(basis[1], Exponent({1, 0}));
  EXPECT_EQ(basis[2], Exponent({0, 1}));
  EXPECT_EQ(basis[3], Exponent({2, 0}));
  EXPECT_EQ(basis[4], Exponent({1, 1}));
  EXPECT_EQ(basis[5], Exponent({0, 2}));
  EXPECT_EQ(monomials_in_range(3, 0, 4).size(), 35u);
  EXPECT_THROW(Exponent({1, -1}), std::invalid_argument);
}

TEST(ParseTest, Zero) {
  const Polynomial p = parse("0", {"x"});
  EXPECT_TRUE(p.is_zero());
  EXPECT_EQ(p.degree(), 0);
}

TEST(ParseTest, JetComponent) {
  const Polynomial p = parse("-y - 1.5*x^2 - 0.5*x^3", kXY);
  EXPECT_EQ(p.num_terms(), 3u);
  EXPECT_EQ(p.degree(), 3);
  EXPECT_EQ(p.coefficient(Exponent({3, 0})), -0.5);
  EXPECT_EQ(p.coefficient(Exponent({2, 0})), -1.5);
  EXPECT_EQ(p.coefficient(Exponent({0, 1})), -1.0);
  EXPECT_EQ(to_string(p, kXY), "-y - 1.5*x^2 - 0.5*x^3");
}

TEST(ParseTest, Quartic) {
  const Polynomial p = Quartic();
  EXPECT_EQ(p.num_terms(), 6u);
  EXPECT_EQ(p.degree(), 4);
}

TEST(ParseTest, GrammarFeatures) {
  const Polynomial p = parse("2 x y - (x + 1)^2 / 4 + 3e-2*y", kXY);
  for (double x : {-1.0, 0.3, 2.0})
    for (double y : {-2.0, 0.5}) {
      const double expected = 2 * x * y - (x + 1) * (x + 1) / 4 + 0.03 * y;
      EXPECT_NEAR(evaluate(p, {x, y}), expected, 1e-14);
    }
}

TEST(ParseTest, Errors) {
  try {
    parse("x + * y", kXY);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  EXPECT_THROW(parse("x + w", kXY), ParseError);
  EXPECT_THROW(parse("x^-1", kXY), ParseError);
  EXPECT_THROW(parse("(x + y", kXY), ParseError);
  EXPECT_THROW(parse("", kXY), ParseError);
}

TEST(ParseTest, RoundTripIsExact) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    Polynomial p = RandomPolynomial(rng, n, 6, 8);
    p *= std::pow(10.0, (trial % 9) - 4);
    const auto names = default_names(n);
    const Polynomial q = parse(to_string(p, names), names);
    EXPECT_TRUE(p == q) << to_string(p, names);
  }
}

TEST(EvaluateTest, Basics) {
  EXPECT_EQ(evaluate(Polynomial(2), {7.0, -3.0}), 0.0);
  EXPECT_EQ(evaluate(Quartic(), {0.0, 0.0}), 0.0);
  EXPECT_EQ(evaluate(parse("x^2 + y^2", kXY), {3.0, 4.0}), 25.0);
  EXPECT_THROW(evaluate(Quartic(), {1.0}), std::invalid_argument);
}

TEST(CalculusTest, Derivatives) {
  const Polynomial d = differentiate(parse("x^3", {"x"}), 0);
  EXPECT_TRUE(d == parse("3*x^2", {"x"}));
  const auto g = gradient(parse("x^2 + y^2", kXY));
  EXPECT_TRUE(g[0] == parse("2*x", kXY));
  EXPECT_TRUE(g[1] == parse("2*y", kXY));
  EXPECT_THROW(differentiate(Quartic(), 2), std::out_of_range);

  const Polynomial q = Quartic();
  const double symbolic = evaluate(differentiate(q, 1), {1.0, 1.0});
  const double h = 1e-5;
  const double fd = (evaluate(q, {1.0, 1.0 + h}) - evaluate(q, {1.0, 1.0 - h})) / (2 * h);
  EXPECT_NEAR(fd, 10.5, 1e-6);
  EXPECT_DOUBLE_EQ(symbolic, 10.5);
}

TEST(CalculusTest, FiniteDifferenceAgreement) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    const Polynomial p = RandomPolynomial(rng, n, 8, 10);
    const Eigen::VectorXd x = RandomPoint(rng, n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-5;
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const double fd = (evaluate(p, xp) - evaluate(p, xm)) / (2 * h);
      const double sym = evaluate(differentiate(p, j), x);
      EXPECT_NEAR(fd, sym, 1e-5 * (1.0 + std::abs(sym)));
    }
  }
}

TEST(CalculusTest, Hessian) {
  const PolyMatrix h = hessian(parse("x^2 + y^2", kXY));
  EXPECT_TRUE(h(0, 0) == Polynomial::constant(2, 2.0));
  EXPECT_TRUE(h(0, 1).is_zero());
  EXPECT_TRUE(hessian(parse("x^3", {"x"}))(0, 0) == parse("6*x", {"x"}));

  const Polynomial p = parse("x^4 + y^4", kXY);
  const std::vector<double> pt{1.0, 1.0};
  const Eigen::MatrixXd H = evaluate(hessian(p), pt);
  // Finite-difference Hessian oracle.
  const double step = 1e-4;
  Eigen::MatrixXd fd(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      auto f = [&](double a, double b) {
        std::vector<double> q = pt;
        q[i] += a;
        q[j] += b;
        return evaluate(p, std::span<const double>(q));
      };
      fd(i, j) = (f(step, step) - f(step, -step) - f(-step, step) + f(-step, -step)) / (4 * step * step);
    }
  EXPECT_LT((H - fd).norm(), 1e-4);
  EXPECT_NEAR(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues()(0), 12.0, 1e-12);
}

TEST(ComposeTest, Examples) {
  const Polynomial p = parse("x^2", kXY);
  EXPECT_TRUE(compose_linear(p, Eigen::MatrixXd::Identity(2, 2)) == p);
  Eigen::MatrixXd A(2, 2);
  A << 0, 2, 0, 0;
  EXPECT_TRUE(compose_linear(p, A) == parse("4*y^2", kXY));

  const double th = 0.7;
  Eigen::MatrixXd R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Polynomial r = compose_linear(parse("x^2 + y^2", kXY), R);
  EXPECT_NEAR(r.coefficient(Exponent({2, 0})), 1.0, 1e-12);
  EXPECT_NEAR(r.coefficient(Exponent({0, 2})), 1.0, 1e-12);
  EXPECT_NEAR(r.coefficient(Exponent({1, 1})), 0.0, 1e-12);
  EXPECT_THROW(compose_linear(p, Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST(ComposeTest, CompositionLaw) {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 2;
    const Polynomial p = RandomPolynomial(rng, n, 5, 8);
    Eigen::MatrixXd A(n, n), B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        A(i, j) = g(rng);
        B(i, j) = g(rng);
      }
    const Polynomial lhs = compose_linear(compose_linear(p, A), B);
    const Polynomial rhs = compose_linear(p, A * B);
    const Polynomial diff = lhs - rhs;
    EXPECT_LT(max_abs_coeff(diff), 1e-10 * (1.0 + max_abs_coeff(rhs)));
    const Eigen::VectorXd x = RandomPoint(rng, n);
    const Eigen::VectorXd ax = A * x;
    EXPECT_NEAR(evaluate(compose_linear(p, A), x), evaluate(p, ax), 1e-9 * (1 + std::abs(evaluate(p, ax))));
  }
}

TEST(TopComponentTest, Examples) {
  EXPECT_TRUE(top_component(parse("x^4 + x^2", {"x"})) == parse("x^4", {"x"}));
  EXPECT_TRUE(top_component(Quartic()) == parse("x^2*y^2", kXY));
  const Polynomial h = parse("x^3 - 2*x*y^2", kXY);
  EXPECT_TRUE(top_component(h) == h);
  EXPECT_THROW(top_component(Polynomial(2)), std::invalid_argument);
}

TEST(RingTest, Axioms) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 3;
    const Polynomial a = RandomPolynomial(rng, n, 4, 6), b = RandomPolynomial(rng, n, 4, 6),
                     c = RandomPolynomial(rng, n, 4, 6);
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd x = RandomPoint(rng, n);
      auto rel = [](double u, double v) { return std::abs(u - v) <= 1e-9 * (1 + std::abs(u) + std::abs(v)); };
      EXPECT_TRUE(rel(evaluate((a * b) * c, x), evaluate(a * (b * c), x)));
      EXPECT_TRUE(rel(evaluate((a + b) + c, x), evaluate(a + (b + c), x)));
      EXPECT_TRUE(rel(evaluate(a * (b + c), x), evaluate(a * b + a * c, x)));
    }
  }
}

TEST(RingTest, DropsCancellationNoise) {
  Polynomial p = parse("x + 1", {"x"});
  p.add_term(Exponent({1}), -1.0 + 1e-16);
  EXPECT_EQ(p.num_terms(), 1u);
  EXPECT_EQ((p - p).num_terms(), 0u);
}

}  // namespace
}  // namespace soskit
