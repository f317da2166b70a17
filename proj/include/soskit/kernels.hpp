#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "soskit/conic.hpp"

// Hot loops of the conic solver. Each kernel exists in a plain serial form,
// kept as the reference for tests, and an OpenMP form used by default.
namespace soskit::kernels {

using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct ConeLayout {
  std::vector<Cone> cones;
  std::vector<int> offsets;  // first row of each cone
  int rows = 0;

  explicit ConeLayout(const std::vector<Cone>& c);
};

namespace serial {
// y = A x, A stored by rows.
void spmv(const RowMajorSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y);
// x = A' y, A stored by columns.
void spmv_transpose(const SparseMatrix& A, const Eigen::VectorXd& y, Eigen::VectorXd& x);
// In-place projection onto the dual cone K* (zero cone rows are left free).
void project_dual_cone(const ConeLayout& layout, Eigen::VectorXd& v);
// In-place projection onto K.
void project_cone(const ConeLayout& layout, Eigen::VectorXd& v);
// values[k] = sum_t coeff[t] * prod_i points(k, i)^exps[t][i]
void evaluate_grid(const std::vector<std::vector<int>>& exps, const std::vector<double>& coeffs,
                   const Eigen::MatrixXd& points, Eigen::VectorXd& values);
}  // namespace serial

namespace parallel {
void spmv(const RowMajorSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y);
void spmv_transpose(const SparseMatrix& A, const Eigen::VectorXd& y, Eigen::VectorXd& x);
void project_dual_cone(const ConeLayout& layout, Eigen::VectorXd& v);
void project_cone(const ConeLayout& layout, Eigen::VectorXd& v);
void evaluate_grid(const std::vector<std::vector<int>>& exps, const std::vector<double>& coeffs,
                   const Eigen::MatrixXd& points, Eigen::VectorXd& values);
}  // namespace parallel

// Single-block projections shared by both variants.
void project_soc(double* v, int k);
void project_psd_vec(double* v, int side);

int max_threads();

}  // namespace soskit::kernels
