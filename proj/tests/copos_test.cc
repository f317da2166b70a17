#include "soskit/copos.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace soskit {
namespace {

Eigen::MatrixXd Horn() {
  Eigen::MatrixXd H(5, 5);
  H << 1, -1, 1, 1, -1,
      -1, 1, -1, 1, 1,
      1, -1, 1, -1, 1,
      1, 1, -1, 1, -1,
      -1, 1, 1, -1, 1;
  return H;
}

Eigen::MatrixXd Cycle(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return adjacency_from_edges(n, e);
}

Eigen::MatrixXd Complete(int n) { return Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n); }

// P + N with P PSD and N elementwise nonnegative.
Eigen::MatrixXd RandomPlusN(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> G;
  std::uniform_real_distribution<double> U(0, 1);
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = G(rng);
  Eigen::MatrixXd N(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) N(i, j) = N(j, i) = U(rng);
  return B * B.transpose() / n + N;
}

// Lovasz theta: max <J, X> with tr X = 1, X_ij = 0 on edges, X PSD.
double LovaszTheta(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  SosProgram prog;
  std::vector<std::vector<AffineExpr>> X(static_cast<std::size_t>(n), std::vector<AffineExpr>(static_cast<std::size_t>(n)));
  AffineExpr trace, total;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const AffineExpr v = A(i, j) != 0.0 ? AffineExpr(0.0) : prog.new_var();
      X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = X[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
      total += (i == j ? 1.0 : 2.0) * v;
      if (i == j) trace += v;
    }
  prog.add_eq(trace - 1.0);
  prog.add_psd(X);
  prog.maximize(total);
  SolverSettings s;
  s.eps = 1e-9;
  const SosSolution sol = prog.solve(s);
  EXPECT_TRUE(sol.optimal());
  return sol.objective();
}

void ExpectValidCertificate(const KrResult& r) {
  ASSERT_TRUE(r.member);
  EXPECT_LE(r.residual, 1e-6);
  EXPECT_GE(r.min_eigenvalue, -1e-7);
}

TEST(CoposTest, IdentityAndNonnegativeAreInK0) {
  ExpectValidCertificate(in_Kr(Eigen::MatrixXd::Identity(4, 4), 0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 2);
  Eigen::MatrixXd N(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) N(i, j) = N(j, i) = U(rng);
  N(0, 0) = 0.0;  // not PSD-dominated
  ExpectValidCertificate(in_Kr(N, 0));
}

TEST(CoposTest, HornMatrixNotInK0) {
  const KrResult r = in_Kr(Horn(), 0);
  EXPECT_FALSE(r.member);
  EXPECT_EQ(r.status, SolveStatus::kPrimalInfeasible);
}

TEST(CoposTest, HornMatrixInK1) {
  // Multiplying by sum x_i^2 once is enough for the Horn form.
  ExpectValidCertificate(in_Kr(Horn(), 1));
}

TEST(CoposTest, NonCopositiveRejectedAtEveryLevel) {
  Eigen::MatrixXd M(2, 2);
  M << 1, -2, -2, 1;  // x = (1, 1) gives -2
  for (int r = 0; r <= 2; ++r) EXPECT_FALSE(in_Kr(M, r).member) << r;
}

TEST(CoposTest, HierarchyIsMonotone) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    Eigen::MatrixXd M = RandomPlusN(rng, 4);
    // Push some off-diagonal entries negative so not every instance is trivial.
    M(0, 1) = M(1, 0) = M(0, 1) - 1.0;
    const bool r0 = in_Kr(M, 0).member;
    const bool r1 = in_Kr(M, 1).member;
    if (r0) EXPECT_TRUE(r1) << k;
  }
  for (int k = 0; k < 5; ++k) {
    const Eigen::MatrixXd M = RandomPlusN(rng, 4);
    EXPECT_TRUE(in_Kr(M, 0).member);
    EXPECT_TRUE(in_Kr(M, 1).member);
  }
}

TEST(CoposTest, DiagonalScalingPreservesVerdict) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.3, 3);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd d(5);
    for (int i = 0; i < 5; ++i) d(i) = U(rng);
    const Eigen::MatrixXd D = d.asDiagonal();
    EXPECT_FALSE(in_Kr(D * Horn() * D, 0).member);
    const Eigen::MatrixXd M = RandomPlusN(rng, 5);
    EXPECT_TRUE(in_Kr(D * M * D, 0).member);
  }
}

TEST(CoposTest, QueryValidation) {
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 3, 1;
  EXPECT_THROW(CoposQuery(A, 0), std::invalid_argument);
  EXPECT_THROW(CoposQuery(Eigen::MatrixXd::Identity(2, 2), 4), std::invalid_argument);
  EXPECT_THROW(CoposQuery(Eigen::MatrixXd::Identity(2, 2), -1), std::invalid_argument);
  EXPECT_THROW(CoposQuery(Eigen::MatrixXd(2, 3), 0), std::invalid_argument);
}

TEST(CoposTest, KrPolynomial) {
  Eigen::MatrixXd M(2, 2);
  M << 1, 2, 2, 3;
  EXPECT_TRUE(kr_polynomial(M, 0) == parse("x^4 + 4*x^2*y^2 + 3*y^4", {"x", "y"}));
  EXPECT_TRUE(kr_polynomial(M, 1) == parse("(x^2 + y^2)*(x^4 + 4*x^2*y^2 + 3*y^4)", {"x", "y"}));
}

TEST(StabilityTest, CompleteGraphIsOne) {
  for (int n : {2, 3, 5}) {
    EXPECT_EQ(stability_number(Complete(n)), 1);
    EXPECT_NEAR(stability_number_ub(Complete(n), 0).bound, 1.0, 1e-5) << n;
  }
  EXPECT_NEAR(stability_number_ub(Complete(4), 1).bound, 1.0, 1e-5);
}

TEST(StabilityTest, EmptyGraph) {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  EXPECT_EQ(stability_number(A), 4);
  EXPECT_NEAR(LovaszTheta(A), 4.0, 1e-5);
  EXPECT_NEAR(stability_number_ub(A, 0).bound, 4.0, 1e-4);
}

TEST(StabilityTest, FiveCycleBetweenAlphaAndTheta) {
  const Eigen::MatrixXd A = Cycle(5);
  EXPECT_EQ(stability_number(A), 2);
  const double theta = LovaszTheta(A);
  EXPECT_NEAR(theta, std::sqrt(5.0), 1e-4);
  const StabilityBound b = stability_number_ub(A, 0);
  EXPECT_GE(b.bound, 2.0 - 1e-4);
  EXPECT_LE(b.bound, theta + 1e-3);
  EXPECT_LE(b.residual, 1e-6);
  // One level up the bound already reaches alpha.
  EXPECT_NEAR(stability_number_ub(A, 1).bound, 2.0, 1e-4);
}

TEST(StabilityTest, BoundsAreSandwichedAndMonotone) {
  std::vector<Eigen::MatrixXd> graphs = {Cycle(4), Cycle(5),
                                         adjacency_from_edges(4, {{0, 1}, {1, 2}, {2, 3}}),
                                         adjacency_from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}})};
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const int alpha = stability_number(graphs[g]);
    const double theta = LovaszTheta(graphs[g]);
    const double b0 = stability_number_ub(graphs[g], 0).bound;
    const double b1 = stability_number_ub(graphs[g], 1).bound;
    EXPECT_GE(b0, alpha - 1e-4) << g;
    EXPECT_GE(b1, alpha - 1e-4) << g;
    EXPECT_LE(b0, theta + 1e-4) << g;
    EXPECT_LE(b1, b0 + 1e-5) << g;
  }
}

TEST(StabilityTest, Errors) {
  Eigen::MatrixXd A = Cycle(4);
  A(0, 0) = 1;
  EXPECT_THROW(stability_number_ub(A, 0), std::invalid_argument);
  A = Cycle(4);
  A(0, 1) = 0.5;
  EXPECT_THROW(stability_number(A), std::invalid_argument);
  EXPECT_THROW(stability_number_ub(Cycle(4), 5), std::invalid_argument);
  EXPECT_THROW(adjacency_from_edges(3, {{0, 3}}), std::invalid_argument);
  EXPECT_THROW(adjacency_from_edges(3, {{1, 1}}), std::invalid_argument);
}

}  // namespace
}  // namespace soskit
