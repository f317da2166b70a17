#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace soskit {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

enum class ConeKind { kZero, kNonneg, kSecondOrder, kPsd };

// For kPsd, `size` is the matrix side s; the block occupies s(s+1)/2 rows.
struct Cone {
  ConeKind kind;
  int size;
  int rows() const { return kind == ConeKind::kPsd ? size * (size + 1) / 2 : size; }
  bool operator==(const Cone&) const = default;
};

// min c'x  s.t.  A x + s = b,  s in K (cones in listed order).
struct ConicProblem {
  Eigen::VectorXd c;
  SparseMatrix A;
  Eigen::VectorXd b;
  std::vector<Cone> cones;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
  void validate() const;
};

enum class SolveStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kMaxIterations };
std::string to_string(SolveStatus s);

// Raised by application layers when the solver stops without a verdict.
class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

struct SolverSettings {
  double eps = 1e-7;
  double eps_infeasible = 1e-7;
  int max_iters = 200000;
  std::uint64_t seed = 0;
  double alpha = 1.5;
  double rho_x = 1e-6;
  double scale = 0.1;
  int ruiz_passes = 10;
  int check_every = 10;
  int anderson_memory = 10;
  bool verbose = false;
  // Serial kernels are the reference implementation; parallel ones are the default.
  bool parallel = true;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kMaxIterations;
  Eigen::VectorXd x, y, s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  // Farkas residual for the infeasibility certificate (0 otherwise).
  double certificate_residual = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
};

struct WarmStart {
  Eigen::VectorXd x, y, s;
};

SolveResult solve(const ConicProblem& problem, const SolverSettings& settings = {},
                  const std::optional<WarmStart>& warm = std::nullopt);

// Index of entry (i, j), i >= j, inside a vectorized PSD block of side s.
inline int tri_index(int s, int i, int j) { return j * s - j * (j - 1) / 2 + (i - j); }

Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int side);

// Euclidean projection of a symmetric matrix onto the PSD cone.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m);

enum class BisectSense { kSmallestFeasible, kLargestFeasible };

struct BisectStep {
  double gamma;
  SolveStatus status;
  bool feasible;
};

struct BisectResult {
  double gamma = 0.0;
  std::vector<BisectStep> steps;
};

// Generic bisection on a monotone feasibility oracle. The oracle reports the
// status of one solve; only kOptimal counts as feasible.
BisectResult bisect(const std::function<SolveStatus(double)>& oracle, double lo, double hi, double tol,
                    BisectSense sense = BisectSense::kSmallestFeasible);

BisectResult bisect(const std::function<ConicProblem(double)>& family, double lo, double hi, double tol,
                    const SolverSettings& settings, BisectSense sense = BisectSense::kSmallestFeasible);

// Sparse text dump for cross-checking with external solvers.
void write_conic(std::ostream& out, const ConicProblem& p);
ConicProblem read_conic(std::istream& in);

}  // namespace soskit
