#include "soskit/kernels.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace soskit::kernels {

ConeLayout::ConeLayout(const std::vector<Cone>& c) : cones(c) {
  for (const auto& cone : cones) {
    offsets.push_back(rows);
    rows += cone.rows();
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void project_soc(double* v, int k) {
  if (k == 0) return;
  const double t = v[0];
  double nx = 0.0;
  for (int i = 1; i < k; ++i) nx += v[i] * v[i];
  nx = std::sqrt(nx);
  if (nx <= t) return;
  if (nx <= -t) {
    for (int i = 0; i < k; ++i) v[i] = 0.0;
    return;
  }
  const double a = 0.5 * (t + nx);
  v[0] = a;
  for (int i = 1; i < k; ++i) v[i] *= a / nx;
}

void project_psd_vec(double* v, int side) {
  if (side <= 0) return;
  if (side == 1) {
    v[0] = std::max(v[0], 0.0);
    return;
  }
  static const double kSqrt2 = std::sqrt(2.0);
  Eigen::MatrixXd m(side, side);
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      const double val = v[tri_index(side, i, j)];
      m(i, j) = i == j ? val : val / kSqrt2;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd& w = es.eigenvalues();
  if (w(0) >= 0.0) return;
  if (w(side - 1) <= 0.0) {
    for (int k = 0; k < side * (side + 1) / 2; ++k) v[k] = 0.0;
    return;
  }
  const Eigen::MatrixXd& V = es.eigenvectors();
  int first = 0;
  while (w(first) <= 0.0) ++first;
  const Eigen::MatrixXd Vp = V.rightCols(side - first);
  const Eigen::MatrixXd p = Vp * w.tail(side - first).asDiagonal() * Vp.transpose();
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) v[tri_index(side, i, j)] = i == j ? p(i, j) : p(i, j) * kSqrt2;
}

namespace {

void project_block(const Cone& cone, double* v, bool dual) {
  switch (cone.kind) {
    case ConeKind::kZero:
      if (!dual)
        for (int i = 0; i < cone.size; ++i) v[i] = 0.0;
      break;
    case ConeKind::kNonneg:
      for (int i = 0; i < cone.size; ++i) v[i] = std::max(v[i], 0.0);
      break;
    case ConeKind::kSecondOrder:
      project_soc(v, cone.size);
      break;
    case ConeKind::kPsd:
      project_psd_vec(v, cone.size);
      break;
  }
}

double monomial_value(const std::vector<int>& e, const Eigen::MatrixXd& points, Eigen::Index k) {
  double m = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int r = 0; r < e[i]; ++r) m *= points(k, static_cast<Eigen::Index>(i));
  return m;
}

}  // namespace

namespace serial {

void spmv(const RowMajorSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.resize(A.rows());
  for (int r = 0; r < A.outerSize(); ++r) {
    double acc = 0.0;
    for (RowMajorSparse::InnerIterator it(A, r); it; ++it) acc += it.value() * x(it.col());
    y(r) = acc;
  }
}

void spmv_transpose(const SparseMatrix& A, const Eigen::VectorXd& y, Eigen::VectorXd& x) {
  x.resize(A.cols());
  for (int c = 0; c < A.outerSize(); ++c) {
    double acc = 0.0;
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) acc += it.value() * y(it.row());
    x(c) = acc;
  }
}

void project_dual_cone(const ConeLayout& layout, Eigen::VectorXd& v) {
  for (std::size_t k = 0; k < layout.cones.size(); ++k)
    project_block(layout.cones[k], v.data() + layout.offsets[k], true);
}

void project_cone(const ConeLayout& layout, Eigen::VectorXd& v) {
  for (std::size_t k = 0; k < layout.cones.size(); ++k)
    project_block(layout.cones[k], v.data() + layout.offsets[k], false);
}

void evaluate_grid(const std::vector<std::vector<int>>& exps, const std::vector<double>& coeffs,
                   const Eigen::MatrixXd& points, Eigen::VectorXd& values) {
  values.setZero(points.rows());
  for (Eigen::Index k = 0; k < points.rows(); ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t < exps.size(); ++t) acc += coeffs[t] * monomial_value(exps[t], points, k);
    values(k) = acc;
  }
}

}  // namespace serial

namespace parallel {

void spmv(const RowMajorSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.resize(A.rows());
  const int rows = static_cast<int>(A.outerSize());
#pragma omp parallel for schedule(static) if (rows > 2048)
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (RowMajorSparse::InnerIterator it(A, r); it; ++it) acc += it.value() * x(it.col());
    y(r) = acc;
  }
}

void spmv_transpose(const SparseMatrix& A, const Eigen::VectorXd& y, Eigen::VectorXd& x) {
  x.resize(A.cols());
  const int cols = static_cast<int>(A.outerSize());
#pragma omp parallel for schedule(static) if (cols > 2048)
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) acc += it.value() * y(it.row());
    x(c) = acc;
  }
}

// Cone blocks are independent; PSD eigendecompositions dominate, so blocks are
// handed out dynamically.
void project_dual_cone(const ConeLayout& layout, Eigen::VectorXd& v) {
  const int nb = static_cast<int>(layout.cones.size());
#pragma omp parallel for schedule(dynamic) if (nb > 1)
  for (int k = 0; k < nb; ++k) project_block(layout.cones[static_cast<std::size_t>(k)], v.data() + layout.offsets[static_cast<std::size_t>(k)], true);
}

void project_cone(const ConeLayout& layout, Eigen::VectorXd& v) {
  const int nb = static_cast<int>(layout.cones.size());
#pragma omp parallel for schedule(dynamic) if (nb > 1)
  for (int k = 0; k < nb; ++k) project_block(layout.cones[static_cast<std::size_t>(k)], v.data() + layout.offsets[static_cast<std::size_t>(k)], false);
}

void evaluate_grid(const std::vector<std::vector<int>>& exps, const std::vector<double>& coeffs,
                   const Eigen::MatrixXd& points, Eigen::VectorXd& values) {
  values.setZero(points.rows());
  const Eigen::Index np = points.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < np; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t < exps.size(); ++t) acc += coeffs[t] * monomial_value(exps[t], points, k);
    values(k) = acc;
  }
}

}  // namespace parallel

}  // namespace soskit::kernels
