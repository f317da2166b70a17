#include "soskit/conic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "soskit/kernels.hpp"

namespace soskit {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kPrimalInfeasible: return "primal_infeasible";
    case SolveStatus::kDualInfeasible: return "dual_infeasible";
    case SolveStatus::kMaxIterations: return "max_iterations";
  }
  return "unknown";
}

void ConicProblem::validate() const {
  if (A.cols() != c.size()) throw std::invalid_argument("conic: A has " + std::to_string(A.cols()) +
                                                        " columns but c has " + std::to_string(c.size()));
  if (A.rows() != b.size()) throw std::invalid_argument("conic: A and b row counts differ");
  long total = 0;
  for (const auto& cone : cones) {
    if (cone.size < 0) throw std::invalid_argument("conic: negative cone size");
    if (cone.kind == ConeKind::kSecondOrder && cone.size < 1)
      throw std::invalid_argument("conic: second-order cone needs size >= 1");
    total += cone.rows();
  }
  if (total != b.size()) throw std::invalid_argument("conic: cone dimensions do not sum to row count");
  if (!c.allFinite() || !b.allFinite()) throw std::invalid_argument("conic: non-finite data");
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
      if (!std::isfinite(it.value())) throw std::invalid_argument("conic: non-finite entry in A");
}

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  const int s = static_cast<int>(m.rows());
  Eigen::VectorXd v(s * (s + 1) / 2);
  const double r2 = std::sqrt(2.0);
  for (int j = 0; j < s; ++j)
    for (int i = j; i < s; ++i) v(tri_index(s, i, j)) = i == j ? m(i, j) : r2 * 0.5 * (m(i, j) + m(j, i));
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, int side) {
  if (v.size() != side * (side + 1) / 2) throw std::invalid_argument("smat: length mismatch");
  Eigen::MatrixXd m(side, side);
  const double r2 = std::sqrt(2.0);
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) m(i, j) = m(j, i) = i == j ? v(tri_index(side, i, j)) : v(tri_index(side, i, j)) / r2;
  return m;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v = svec(0.5 * (m + m.transpose()));
  kernels::project_psd_vec(v.data(), static_cast<int>(m.rows()));
  return smat(v, static_cast<int>(m.rows()));
}

namespace {

using Vec = Eigen::VectorXd;

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Ruiz equilibration keeping each second-order and PSD block uniformly scaled.
void equilibrate(SparseMatrix& A, const std::vector<Cone>& cones, int passes, Vec& D, Vec& E) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  D = Vec::Ones(m);
  E = Vec::Ones(n);
  auto clamp = [](double v) { return v < 1e-4 ? 1.0 : std::min(v, 1e4); };
  for (int pass = 0; pass < passes; ++pass) {
    Vec rn = Vec::Zero(m), cn = Vec::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
        const double a = std::abs(it.value());
        rn(it.row()) = std::max(rn(it.row()), a);
        cn(it.col()) = std::max(cn(it.col()), a);
      }
    int off = 0;
    for (const auto& cone : cones) {
      const int r = cone.rows();
      if ((cone.kind == ConeKind::kSecondOrder || cone.kind == ConeKind::kPsd) && r > 0) {
        const double mx = rn.segment(off, r).maxCoeff();
        rn.segment(off, r).setConstant(mx);
      }
      off += r;
    }
    Vec d(m), e(n);
    for (int i = 0; i < m; ++i) d(i) = 1.0 / std::sqrt(clamp(rn(i)));
    for (int j = 0; j < n; ++j) e(j) = 1.0 / std::sqrt(clamp(cn(j)));
    A = d.asDiagonal() * A * e.asDiagonal();
    D.array() *= d.array();
    E.array() *= e.array();
  }
}

struct Residuals {
  double pres, dres, gap, pobj, dobj;
  bool converged;
  double merit;  // worst relative residual, for best-iterate tracking
};

class Workspace {
 public:
  Workspace(const ConicProblem& p, const SolverSettings& st)
      : st_(st), n_(p.num_vars()), m_(p.num_rows()), layout_(p.cones), orig_(p) {
    A_ = p.A;
    A_.makeCompressed();
    equilibrate(A_, p.cones, st.ruiz_passes, D_, E_);
    Ar_ = A_;
    b_ = D_.cwiseProduct(p.b);
    c_ = E_.cwiseProduct(p.c);
    Ao_ = p.A;
    Aor_ = p.A;
    scale_ = st.scale;
    set_r();
    factor();
  }

  SolveResult run(const std::optional<WarmStart>& warm);

 private:
  void set_r() {
    const int L = n_ + m_ + 1;
    r_ = Vec(L);
    r_.head(n_).setConstant(st_.rho_x);
    int off = n_;
    for (const auto& cone : layout_.cones) {
      const double v = cone.kind == ConeKind::kZero ? 1.0 / (1000.0 * scale_) : 1.0 / scale_;
      r_.segment(off, cone.rows()).setConstant(v);
      off += cone.rows();
    }
    r_(L - 1) = 1.0;
  }

  void factor() {
    const Vec ry_inv = r_.segment(n_, m_).cwiseInverse();
    SparseMatrix K = SparseMatrix(A_.transpose()) * ry_inv.asDiagonal() * A_;
    for (int j = 0; j < n_; ++j) K.coeffRef(j, j) += r_(j);
    K.makeCompressed();
    ldlt_.compute(K);
    if (ldlt_.info() != Eigen::Success) throw std::runtime_error("conic: factorization failed");
    Vec h(n_ + m_);
    h << c_, b_;
    g_ = solve_n(h);
    hg_ = h.dot(g_);
  }

  // Solves [[Rx, A'], [-A, Ry]] z = rhs.
  Vec solve_n(const Vec& rhs) {
    const Vec ry_inv = r_.segment(n_, m_).cwiseInverse();
    Vec aty;
    spmv_t(A_, ry_inv.cwiseProduct(rhs.tail(m_)), aty);
    Vec zx = ldlt_.solve(rhs.head(n_) - aty);
    Vec az;
    spmv(Ar_, zx, az);
    Vec z(n_ + m_);
    z.head(n_) = zx;
    z.tail(m_) = ry_inv.cwiseProduct(rhs.tail(m_) + az);
    return z;
  }

  void spmv(const kernels::RowMajorSparse& A, const Vec& x, Vec& y) const {
    if (st_.parallel) kernels::parallel::spmv(A, x, y);
    else kernels::serial::spmv(A, x, y);
  }
  void spmv_t(const SparseMatrix& A, const Vec& y, Vec& x) const {
    if (st_.parallel) kernels::parallel::spmv_transpose(A, y, x);
    else kernels::serial::spmv_transpose(A, y, x);
  }
  void project(Vec& v) const {
    if (st_.parallel) kernels::parallel::project_dual_cone(layout_, v);
    else kernels::serial::project_dual_cone(layout_, v);
  }

  // One Douglas-Rachford step: u_tilde, u (in C), v (in C*).
  void step(const Vec& w, Vec& ut, Vec& u, Vec& v) {
    const int L = n_ + m_ + 1;
    const Vec rw = r_.cwiseProduct(w);
    const Vec p = solve_n(rw.head(n_ + m_));
    Vec h(n_ + m_);
    h << c_, b_;
    const double tau = (rw(L - 1) + h.dot(p)) / (r_(L - 1) + hg_);
    ut.resize(L);
    ut.head(n_ + m_) = p - tau * g_;
    ut(L - 1) = tau;
    const Vec z = 2.0 * ut - w;
    u = z;
    Vec yblock = u.segment(n_, m_);
    project(yblock);
    u.segment(n_, m_) = yblock;
    u(L - 1) = std::max(z(L - 1), 0.0);
    v = r_.cwiseProduct(u - z);
  }

  Residuals residuals(const Vec& u, const Vec& v, Vec& x, Vec& y, Vec& s) {
    const int L = n_ + m_ + 1;
    const double tau = u(L - 1);
    x = E_.cwiseProduct(u.head(n_)) / tau;
    y = D_.cwiseProduct(u.segment(n_, m_)) / tau;
    s = v.segment(n_, m_).cwiseQuotient(D_) / tau;
    Vec ax, aty;
    spmv(Aor_, x, ax);
    spmv_t(Ao_, y, aty);
    Residuals r{};
    r.pres = inf_norm(ax + s - orig_.b);
    r.dres = inf_norm(aty + orig_.c);
    r.pobj = orig_.c.dot(x);
    r.dobj = -orig_.b.dot(y);
    r.gap = std::abs(r.pobj - r.dobj);
    const double sp = 1.0 + std::max({inf_norm(ax), inf_norm(s), inf_norm(orig_.b)});
    const double sd = 1.0 + std::max(inf_norm(aty), inf_norm(orig_.c));
    const double sg = 1.0 + std::max(std::abs(r.pobj), std::abs(r.dobj));
    r.converged = r.pres <= st_.eps * sp && r.dres <= st_.eps * sd && r.gap <= st_.eps * sg;
    r.merit = std::max({r.pres / sp, r.dres / sd, r.gap / sg});
    last_rel_pri_ = r.pres / sp;
    last_rel_dual_ = r.dres / sd;
    return r;
  }

  double farkas_ratio(const Vec& u) const {
    const Vec y = D_.cwiseProduct(u.segment(n_, m_));
    const double by = orig_.b.dot(y);
    if (!(by < 0.0)) return std::numeric_limits<double>::infinity();
    Vec aty;
    spmv_t(Ao_, y, aty);
    return inf_norm(aty) / -by;
  }

  // Farkas checks on the unnormalized iterate.
  bool primal_infeasible(const Vec& u, SolveResult& out) {
    const Vec y = D_.cwiseProduct(u.segment(n_, m_));
    const double by = orig_.b.dot(y);
    if (!(by < 0.0)) return false;
    Vec aty;
    spmv_t(Ao_, y, aty);
    const double res = inf_norm(aty) / -by;
    if (res > st_.eps_infeasible) return false;
    out.y = y / -by;
    out.x = Vec::Constant(n_, std::nan(""));
    out.s = Vec::Constant(m_, std::nan(""));
    out.certificate_residual = res;
    return true;
  }
  bool dual_infeasible(const Vec& u, const Vec& v, SolveResult& out) {
    const Vec x = E_.cwiseProduct(u.head(n_));
    const double cx = orig_.c.dot(x);
    if (!(cx < 0.0)) return false;
    const Vec s = v.segment(n_, m_).cwiseQuotient(D_);
    Vec ax;
    spmv(Aor_, x, ax);
    const double res = inf_norm(ax + s) / -cx;
    if (res > st_.eps_infeasible) return false;
    out.x = x / -cx;
    out.s = s / -cx;
    out.y = Vec::Constant(m_, std::nan(""));
    out.certificate_residual = res;
    return true;
  }

  const SolverSettings& st_;
  int n_, m_;
  kernels::ConeLayout layout_;
  const ConicProblem& orig_;
  SparseMatrix A_, Ao_;
  kernels::RowMajorSparse Ar_, Aor_;
  Vec D_, E_, b_, c_, r_, g_;
  double hg_ = 0.0;
  double scale_ = 0.1;
  double last_rel_pri_ = 0.0, last_rel_dual_ = 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

// Type-II Anderson acceleration with a residual-decrease safeguard.
class Anderson {
 public:
  Anderson(int mem, int dim) : mem_(mem), dim_(dim) {}
  void reset() {
    dx_.clear();
    df_.clear();
    have_prev_ = false;
  }
  // Given iterate w and residual f = T(w) - w, returns the next iterate.
  Vec next(const Vec& w, const Vec& f) {
    if (have_prev_) {
      dx_.push_back(w - w_prev_);
      df_.push_back(f - f_prev_);
      if (static_cast<int>(dx_.size()) > mem_) {
        dx_.erase(dx_.begin());
        df_.erase(df_.begin());
      }
    }
    w_prev_ = w;
    f_prev_ = f;
    have_prev_ = true;
    const int k = static_cast<int>(df_.size());
    if (k == 0) return w + f;
    Eigen::MatrixXd F(dim_, k), X(dim_, k);
    for (int i = 0; i < k; ++i) {
      F.col(i) = df_[static_cast<std::size_t>(i)];
      X.col(i) = dx_[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd G = F.transpose() * F;
    const double reg = 1e-10 * std::max(1.0, G.diagonal().maxCoeff());
    G.diagonal().array() += reg;
    const Vec gamma = G.ldlt().solve(F.transpose() * f);
    if (!gamma.allFinite()) {
      reset();
      return w + f;
    }
    return w + f - (X + F) * gamma;
  }

 private:
  int mem_, dim_;
  std::vector<Vec> dx_, df_;
  Vec w_prev_, f_prev_;
  bool have_prev_ = false;
};

SolveResult Workspace::run(const std::optional<WarmStart>& warm) {
  const int L = n_ + m_ + 1;
  Vec w = Vec::Zero(L);
  w(L - 1) = 1.0;
  if (warm) {
    Vec u(L), v = Vec::Zero(L);
    u << E_.cwiseInverse().cwiseProduct(warm->x), D_.cwiseInverse().cwiseProduct(warm->y), 1.0;
    v.segment(n_, m_) = D_.cwiseProduct(warm->s);
    w = u + v.cwiseQuotient(r_);
  } else if (st_.seed != 0) {
    std::mt19937_64 rng(st_.seed);
    std::uniform_real_distribution<double> unif(-1e-3, 1e-3);
    for (int i = 0; i < L - 1; ++i) w(i) = unif(rng);
  }

  SolveResult best;
  best.x = Vec::Zero(n_);
  best.y = Vec::Zero(m_);
  best.s = Vec::Zero(m_);
  double best_merit = std::numeric_limits<double>::infinity();

  Anderson aa(st_.anderson_memory, L);
  Vec ut, u, v, x, y, s;
  double last_fnorm = std::numeric_limits<double>::infinity();
  Vec w_plain;  // the unaccelerated successor of the previous iterate
  bool last_was_aa = false;
  double log_ratio_sum = 0.0;
  int ratio_count = 0;
  int last_scale_update = 0;

  for (int it = 1; it <= st_.max_iters; ++it) {
    step(w, ut, u, v);
    const Vec f = st_.alpha * (u - ut);
    const double fnorm = f.norm();

    if (it % st_.check_every == 0 || it == st_.max_iters) {
      const double tau = u(L - 1), kappa = v(L - 1);
      if (tau > 1e-13 * std::max(1.0, kappa)) {
        const Residuals r = residuals(u, v, x, y, s);
        if (r.merit < best_merit) {
          best_merit = r.merit;
          best.x = x;
          best.y = y;
          best.s = s;
          best.primal_residual = r.pres;
          best.dual_residual = r.dres;
          best.gap = r.gap;
          best.primal_objective = r.pobj;
          best.dual_objective = r.dobj;
        }
        if (st_.verbose && it % (st_.check_every * 100) == 0)
          std::cerr << "iter " << it << " pres " << r.pres << " dres " << r.dres << " gap " << r.gap
                    << " scale " << scale_ << " farkas " << farkas_ratio(u) << "\n";
        if (r.converged) {
          SolveResult out = best;
          out.x = x;
          out.y = y;
          out.s = s;
          out.primal_residual = r.pres;
          out.dual_residual = r.dres;
          out.gap = r.gap;
          out.primal_objective = r.pobj;
          out.dual_objective = r.dobj;
          out.status = SolveStatus::kOptimal;
          out.iterations = it;
          return out;
        }
        if (last_rel_pri_ > 0 && last_rel_dual_ > 0) {
          log_ratio_sum += std::log(last_rel_pri_ / last_rel_dual_);
          ++ratio_count;
        }
      }
      SolveResult cert;
      if (primal_infeasible(u, cert)) {
        cert.status = SolveStatus::kPrimalInfeasible;
        cert.iterations = it;
        cert.dual_objective = std::numeric_limits<double>::infinity();
        cert.primal_objective = std::numeric_limits<double>::infinity();
        return cert;
      }
      if (dual_infeasible(u, v, cert)) {
        cert.status = SolveStatus::kDualInfeasible;
        cert.iterations = it;
        cert.primal_objective = -std::numeric_limits<double>::infinity();
        cert.dual_objective = -std::numeric_limits<double>::infinity();
        return cert;
      }
      // Rebalance primal and dual progress by adapting the y-block weight.
      if (ratio_count >= 10 && it - last_scale_update >= 100) {
        const double ratio = std::sqrt(std::exp(log_ratio_sum / ratio_count));
        log_ratio_sum = 0.0;
        ratio_count = 0;
        if (ratio > 3.0 || ratio < 1.0 / 3.0) {
          scale_ = std::clamp(scale_ * ratio, 1e-6, 1e6);
          set_r();
          factor();
          // Keep (u, v) and re-express the iterate in the new metric.
          Vec vv = v;
          vv.head(n_).setZero();
          w = u + vv.cwiseQuotient(r_);
          aa.reset();
          last_was_aa = false;
          last_fnorm = std::numeric_limits<double>::infinity();
          last_scale_update = it;
          continue;
        }
      }
    }

    if (st_.anderson_memory > 0) {
      if (last_was_aa && fnorm > last_fnorm) {
        // Safeguard: the accelerated point did worse; fall back to the plain step.
        w = w_plain;
        aa.reset();
        last_was_aa = false;
        last_fnorm = std::numeric_limits<double>::infinity();
        continue;
      }
      w_plain = w + f;
      Vec wn = aa.next(w, f);
      // The embedding is homogeneous, so w = 0 is a spurious fixed point that
      // extrapolation can jump onto; never let it shrink the iterate that far.
      if (!wn.allFinite() || wn.norm() < 0.1 * w_plain.norm()) {
        aa.reset();
        w = w_plain;
        last_was_aa = false;
        last_fnorm = std::numeric_limits<double>::infinity();
        continue;
      }
      last_was_aa = true;
      last_fnorm = fnorm;
      w = std::move(wn);
    } else {
      w += f;
    }
  }
  best.status = SolveStatus::kMaxIterations;
  best.iterations = st_.max_iters;
  return best;
}

SolveResult solve_trivial(const ConicProblem& p, const SolverSettings& st) {
  SolveResult r;
  const int n = p.num_vars(), m = p.num_rows();
  r.x = Vec::Zero(n);
  r.y = Vec::Zero(m);
  r.s = p.b;
  if (n > 0 && m == 0) {
    if (inf_norm(p.c) > 0.0) {
      r.status = SolveStatus::kDualInfeasible;
      r.x = -p.c / p.c.squaredNorm();
      return r;
    }
  }
  if (m > 0) {
    Vec proj = p.b;
    kernels::serial::project_cone(kernels::ConeLayout(p.cones), proj);
    if (inf_norm(proj - p.b) > st.eps * (1.0 + inf_norm(p.b))) {
      r.status = SolveStatus::kPrimalInfeasible;
      return r;
    }
  }
  r.status = SolveStatus::kOptimal;
  return r;
}

}  // namespace

SolveResult solve(const ConicProblem& problem, const SolverSettings& settings, const std::optional<WarmStart>& warm) {
  problem.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult r;
  if (problem.num_vars() == 0 || problem.num_rows() == 0) {
    r = solve_trivial(problem, settings);
  } else {
    Workspace ws(problem, settings);
    r = ws.run(warm);
  }
  r.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

BisectResult bisect(const std::function<SolveStatus(double)>& oracle, double lo, double hi, double tol,
                    BisectSense sense) {
  if (!(lo < hi) || !(tol > 0)) throw std::invalid_argument("bisect: need lo < hi and tol > 0");
  BisectResult out;
  auto probe = [&](double g) {
    const SolveStatus s = oracle(g);
    const bool ok = s == SolveStatus::kOptimal;
    out.steps.push_back({g, s, ok});
    return ok;
  };
  const bool smallest = sense == BisectSense::kSmallestFeasible;
  double good = smallest ? hi : lo;
  double bad = smallest ? lo : hi;
  if (!probe(good)) throw std::runtime_error("bisect: bracket never feasible");
  if (probe(bad)) {
    out.gamma = bad;
    return out;
  }
  while (std::abs(good - bad) > tol) {
    const double mid = 0.5 * (good + bad);
    if (probe(mid)) good = mid;
    else bad = mid;
  }
  out.gamma = good;
  return out;
}

BisectResult bisect(const std::function<ConicProblem(double)>& family, double lo, double hi, double tol,
                    const SolverSettings& settings, BisectSense sense) {
  return bisect([&](double g) { return solve(family(g), settings).status; }, lo, hi, tol, sense);
}

}  // namespace soskit
