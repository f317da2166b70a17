#include "soskit/fit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>

#include <gtest/gtest.h>

namespace soskit {
namespace {

Dataset OnUnitInterval(const std::function<double(double)>& f, int m = 40, double noise = 0.0, int seed = 1) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::normal_distribution<double> N(0.0, noise > 0 ? noise : 1.0);
  Dataset d;
  d.X.resize(m, 1);
  d.y.resize(m);
  for (int i = 0; i < m; ++i) {
    const double x = i / (m - 1.0);
    d.X(i, 0) = x;
    d.y(i) = f(x) + (noise > 0 ? N(rng) : 0.0);
  }
  d.box = {Interval::closed(0, 1)};
  return d;
}

double PopulationStd(const Eigen::VectorXd& y) {
  const double mean = y.mean();
  return std::sqrt((y.array() - mean).square().mean());
}

TEST(FitTest, RealizableMonotone) {
  ShapeSpec s;
  s.monotone = {1};
  s.degree = 3;
  const ShapeFit r = fit_shape_constrained(OnUnitInterval([](double x) { return x; }), s);
  EXPECT_LE(r.rmse, 1e-4);
  EXPECT_GE(r.min_monotone, -1e-6);
}

TEST(FitTest, DecreasingDataWithIncreasingShape) {
  const Dataset d = OnUnitInterval([](double x) { return -x; });
  ShapeSpec s;
  s.monotone = {1};
  s.degree = 3;
  const ShapeFit r = fit_shape_constrained(d, s);
  EXPECT_GE(r.min_monotone, -1e-6);
  EXPECT_NEAR(r.rmse, PopulationStd(d.y), 1e-4);

  // Brute force at degree 1: f = a + b x with b >= 0 on a slope grid, a optimal.
  s.degree = 1;
  const double fitted = fit_shape_constrained(d, s).rmse;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 20000; ++k) {
    const double b = k * 1e-4;
    const Eigen::VectorXd resid = d.y - b * d.X.col(0);
    best = std::min(best, PopulationStd(resid));
  }
  EXPECT_NEAR(fitted, best, 1e-6);
}

TEST(FitTest, RealizableConvex) {
  ShapeSpec s;
  s.convex = true;
  s.degree = 2;
  const ShapeFit r = fit_shape_constrained(OnUnitInterval([](double x) { return x * x; }), s);
  EXPECT_LE(r.rmse, 1e-4);
  EXPECT_GE(r.min_convex, -1e-6);
}

TEST(FitTest, UnconstrainedMatchesNormalEquations) {
  const Dataset d = OnUnitInterval([](double x) { return std::sin(3 * x); }, 30, 0.05, 4);
  ShapeSpec s;
  s.degree = 4;
  const ShapeFit r = fit_shape_constrained(d, s);
  // Oracle: normal equations solved directly.
  const auto basis = monomial_basis(1, 4);
  Eigen::MatrixXd V(d.size(), 5);
  for (int i = 0; i < d.size(); ++i)
    for (int k = 0; k < 5; ++k) V(i, k) = std::pow(d.X(i, 0), k);
  const Eigen::VectorXd c = (V.transpose() * V).ldlt().solve(V.transpose() * d.y);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(r.f.coefficient(basis[static_cast<std::size_t>(k)]), c(k), 1e-6) << k;
  EXPECT_NEAR(r.rmse, r.rmse_unconstrained, 1e-8);
}

TEST(FitTest, ShapeConstraintsNeverLowerRmse) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0, 1);
  const int m = 60;
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    X(i, 0) = U(rng);
    X(i, 1) = U(rng);
    y(i) = std::exp(X(i, 0)) - X(i, 1) * X(i, 1) + 0.3 * std::sin(8 * X(i, 0)) + 0.05 * (U(rng) - 0.5);
  }
  Dataset d;
  d.X = X;
  d.y = y;
  d.box = {Interval::closed(0, 1), Interval::closed(0, 1)};

  ShapeSpec free_spec;
  free_spec.degree = 3;
  const double base = fit_shape_constrained(d, free_spec).rmse;
  ShapeSpec mono = free_spec;
  mono.monotone = {1, -1};
  const ShapeFit rm = fit_shape_constrained(d, mono);
  ShapeSpec both = mono;
  both.convex = true;
  const ShapeFit rb = fit_shape_constrained(d, both);
  EXPECT_GE(rm.rmse, base - 1e-8);
  EXPECT_GE(rb.rmse, rm.rmse - 1e-8);
  EXPECT_GE(rm.min_monotone, -1e-6);
  EXPECT_GE(rb.min_monotone, -1e-6);
  EXPECT_GE(rb.min_convex, -1e-6);
  EXPECT_NEAR(base, rmse(least_squares_fit(d, 3), d), 1e-6);
}

// Best convex fit is linear in x2, so the Hessian certificate is singular:
// the solver stalls at tight tolerances and the fit must relax, not fail.
TEST(FitTest, ConvexFitWithFlatDirection) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  std::normal_distribution<double> N(0, 0.1);
  const int m = 100;
  Dataset d;
  d.X.resize(m, 2);
  d.y.resize(m);
  for (int i = 0; i < m; ++i) {
    d.X(i, 0) = U(rng);
    d.X(i, 1) = U(rng);
    d.y(i) = d.X(i, 0) * d.X(i, 0) + d.X(i, 1) + N(rng);
  }
  d.box = {Interval::closed(0, 1), Interval::closed(0, 1)};
  ShapeSpec s;
  s.degree = 3;
  s.convex = true;
  FitOptions o;
  o.solver.max_iters = 20000;
  const ShapeFit r = fit_shape_constrained(d, s, o);
  EXPECT_LE(r.solver_eps, 1e-6);
  EXPECT_GT(r.solver_eps, o.solver.eps);  // the stall did happen
  EXPECT_GE(r.min_convex, -1e-6);
  EXPECT_GE(r.rmse, r.rmse_unconstrained - 1e-8);
  EXPECT_LE(r.rmse, 0.12);
}

TEST(FitTest, Errors) {
  Dataset d = OnUnitInterval([](double x) { return x; });
  ShapeSpec s;
  s.monotone = {2};
  EXPECT_THROW(fit_shape_constrained(d, s), std::invalid_argument);
  s.monotone = {1, 1};
  EXPECT_THROW(fit_shape_constrained(d, s), std::invalid_argument);
  s.monotone = {};
  s.degree = 0;
  EXPECT_THROW(fit_shape_constrained(d, s), std::invalid_argument);
  d.X(0, 0) = 2.0;
  s.degree = 1;
  EXPECT_THROW(fit_shape_constrained(d, s), std::invalid_argument);
}

TEST(DatasetTest, ReadsDelimitedText) {
  const std::string path = ::testing::TempDir() + "/soskit_fit_data.csv";
  {
    std::ofstream out(path);
    out << "x1,x2,y\n# comment\n0,1,2\n0.5, 0.25, 3\n1 0 4\n";
  }
  const Dataset d = Dataset::read(path);
  ASSERT_EQ(d.size(), 3);
  ASSERT_EQ(d.dim(), 2);
  EXPECT_EQ(d.y(2), 4.0);
  EXPECT_EQ(d.X(1, 1), 0.25);
  EXPECT_EQ(d.box[0].lo, 0.0);
  EXPECT_EQ(d.box[0].hi, 1.0);
  std::remove(path.c_str());
  EXPECT_THROW(Dataset::read(path), std::runtime_error);
}

// Brute force: best lambda_min of the Fisher matrix over designs on a grid.
double FisherMinEig(const std::vector<double>& pts, const std::vector<double>& w, int d) {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    Eigen::VectorXd z(d + 1);
    for (int i = 0; i <= d; ++i) z(i) = std::pow(pts[k], i);
    F += w[k] * z * z.transpose();
  }
  return min_eigenvalue(F);
}

TEST(DesignTest, LinearOnSymmetricInterval) {
  const EDesign e = e_optimal_design({Interval::closed(-1, 1)}, 1);
  EXPECT_NEAR(e.gamma_primal, 1.0, 1e-4);
  EXPECT_NEAR(e.gamma_dual, e.gamma_primal, 1e-4);
  ASSERT_TRUE(e.design.has_value());
  ASSERT_EQ(e.design->atoms.size(), 2u);
  EXPECT_NEAR(e.design->atoms[0](0), -1.0, 1e-3);
  EXPECT_NEAR(e.design->atoms[1](0), 1.0, 1e-3);
  EXPECT_NEAR(e.design->weights[0], 0.5, 1e-3);
  EXPECT_NEAR(e.fisher_min_eig, e.gamma_primal, 1e-3);

  // Two-point designs on a 200-point grid.
  double best = 0.0;
  for (int i = 0; i < 200; ++i)
    for (int j = i + 1; j < 200; ++j)
      for (int k = 1; k < 100; ++k) {
        const double a = -1 + 2.0 * i / 199, b = -1 + 2.0 * j / 199, w = k / 100.0;
        best = std::max(best, FisherMinEig({a, b}, {w, 1 - w}, 1));
      }
  EXPECT_NEAR(e.gamma_primal, best, 1e-4);
}

TEST(DesignTest, ConstantModel) {
  const EDesign e = e_optimal_design({Interval::closed(2, 5)}, 0);
  EXPECT_NEAR(e.gamma_primal, 1.0, 1e-6);
  ASSERT_TRUE(e.design.has_value());
  EXPECT_EQ(e.design->atoms.size(), 1u);
}

TEST(DesignTest, QuadraticMatchesSymmetricGrid) {
  const EDesign e = e_optimal_design({Interval::closed(-1, 1)}, 2);
  EXPECT_NEAR(e.gamma_dual, e.gamma_primal, 1e-4);
  double best = 0.0;
  // Support {-1, -t, 0, t, 1} with symmetric weights.
  for (int it = 1; it < 50; ++it)
    for (int a = 0; a <= 100; ++a)
      for (int b = 0; a + b <= 100; ++b) {
        const double t = it / 50.0, wa = a / 200.0, wb = b / 200.0, w0 = 1 - 2 * wa - 2 * wb;
        best = std::max(best, FisherMinEig({-1, -t, 0, t, 1}, {wa, wb, w0, wb, wa}, 2));
      }
  EXPECT_NEAR(e.gamma_primal, best, 1e-3);
  ASSERT_TRUE(e.design.has_value());
  EXPECT_NEAR(e.fisher_min_eig, e.gamma_primal, 1e-3);
  EXPECT_NEAR(e.design->total_mass(), 1.0, 1e-6);
}

TEST(DesignTest, ReflectionInvariance) {
  // An interval and its mirror image share the value.
  for (int d : {1, 2, 3}) {
    const double ga = e_optimal_design({Interval::closed(0, 2)}, d).gamma_primal;
    const double gb = e_optimal_design({Interval::closed(-2, 0)}, d).gamma_primal;
    EXPECT_NEAR(ga, gb, 1e-6) << d;
  }
}

TEST(DesignTest, SquareDomainBoundOnly) {
  const EDesign e = e_optimal_design({Interval::closed(-1, 1), Interval::closed(-1, 1)}, 1);
  EXPECT_NEAR(e.gamma_primal, 1.0, 1e-4);
  EXPECT_NEAR(e.gamma_dual, e.gamma_primal, 1e-4);
  EXPECT_FALSE(e.design.has_value());
}

TEST(DesignTest, Errors) {
  EXPECT_THROW(e_optimal_design({}, 1), std::invalid_argument);
  EXPECT_THROW(e_optimal_design({Interval::at_least(0)}, 1), std::invalid_argument);
  EXPECT_THROW(e_optimal_design({Interval::closed(-1, 1)}, -1), std::invalid_argument);
}

}  // namespace
}  // namespace soskit
