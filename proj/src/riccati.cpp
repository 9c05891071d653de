#include "hlqr/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <string>

#include "hlqr/errors.hpp"

namespace hlqr {
namespace {

constexpr double kHurwitzMargin = 1e-9;

void require_square(const Mat& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(name) + ": matrix must be square");
  }
}

// Diagonal block sizes (1 or 2) of a real Schur form.
std::vector<int> schur_block_sizes(const Mat& t) {
  std::vector<int> sizes;
  const Eigen::Index n = t.rows();
  Eigen::Index i = 0;
  while (i < n) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > 0.0) {
      sizes.push_back(2);
      i += 2;
    } else {
      sizes.push_back(1);
      i += 1;
    }
  }
  return sizes;
}

double lyap_residual(const Mat& a, const Mat& q, const Mat& x) {
  return (a.transpose() * x + x * a + q).norm();
}

// One Bartels-Stewart sweep given the Schur factors of A.
Mat lyap_from_schur(const Mat& t, const Mat& u, const Mat& q) {
  const Mat c = u.transpose() * q * u;
  const std::vector<int> sizes = schur_block_sizes(t);
  std::vector<Eigen::Index> offsets(sizes.size());
  Eigen::Index off = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    offsets[k] = off;
    off += sizes[k];
  }

  // Solve T^T Y + Y T + C = 0 block by block. Column blocks advance left to
  // right, row blocks top to bottom, so every subtracted term is available.
  Mat y = Mat::Zero(t.rows(), t.cols());
  for (std::size_t jj = 0; jj < sizes.size(); ++jj) {
    const Eigen::Index cj = offsets[jj];
    const int nj = sizes[jj];
    for (std::size_t ii = 0; ii < sizes.size(); ++ii) {
      const Eigen::Index ri = offsets[ii];
      const int ni = sizes[ii];
      Mat rhs = -c.block(ri, cj, ni, nj);
      if (ri > 0) {
        rhs.noalias() -= t.block(0, ri, ri, ni).transpose() * y.block(0, cj, ri, nj);
      }
      if (cj > 0) {
        rhs.noalias() -= y.block(ri, 0, ni, cj) * t.block(0, cj, cj, nj);
      }
      const Mat tii = t.block(ri, ri, ni, ni);
      const Mat tjj = t.block(cj, cj, nj, nj);
      // Small Sylvester block: (I (x) Tii^T + Tjj^T (x) I) vec(Yij) = vec(rhs).
      Mat sys = kron(Mat::Identity(nj, nj), tii.transpose()) +
                kron(tjj.transpose(), Mat::Identity(ni, ni));
      Eigen::Map<const Vec> rhs_vec(rhs.data(), rhs.size());
      Vec sol = sys.partialPivLu().solve(rhs_vec);
      y.block(ri, cj, ni, nj) = Eigen::Map<const Mat>(sol.data(), ni, nj);
    }
  }
  return u * y * u.transpose();
}

}  // namespace

Mat solve_lyapunov(const Mat& a, const Mat& q) {
  require_square(a, "solve_lyapunov");
  if (q.rows() != a.rows() || q.cols() != a.cols()) {
    throw DimensionError("solve_lyapunov: Q dims must match A");
  }
  if (!is_hurwitz(a, 0.0)) {
    throw NumericalError("solve_lyapunov: A is not Hurwitz");
  }
  Eigen::RealSchur<Mat> schur(a);
  const Mat& t = schur.matrixT();
  const Mat& u = schur.matrixU();

  Mat x = lyap_from_schur(t, u, q);
  // One refinement pass on the residual; reuses the factorization.
  const Mat err = a.transpose() * x + x * a + q;
  x += lyap_from_schur(t, u, err);

  if (q.isApprox(q.transpose(), 1e-12)) {
    x = symmetrize(x);
  }
  const double res = lyap_residual(a, q, x);
  if (res > 1e-9 * std::max(1.0, x.norm())) {
    throw NumericalError("solve_lyapunov: residual " + std::to_string(res) +
                         " above tolerance (ill-conditioned spectrum?)");
  }
  return x;
}

Mat solve_lyapunov_kron(const Mat& a, const Mat& q) {
  require_square(a, "solve_lyapunov_kron");
  if (!is_hurwitz(a, 0.0)) {
    throw NumericalError("solve_lyapunov_kron: A is not Hurwitz");
  }
  const Eigen::Index n = a.rows();
  const Mat eye = Mat::Identity(n, n);
  Mat sys = kron(eye, a.transpose()) + kron(a.transpose(), eye);
  Mat neg_q = -q;
  Eigen::Map<const Vec> rhs(neg_q.data(), neg_q.size());
  Vec sol = sys.partialPivLu().solve(rhs);
  Mat x = Eigen::Map<const Mat>(sol.data(), n, n);
  if (q.isApprox(q.transpose(), 1e-12)) {
    x = symmetrize(x);
  }
  return x;
}

CareSolution solve_care(const Mat& a, const Mat& b, const Mat& q, const Mat& r, double tol) {
  require_square(a, "solve_care");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m) {
    throw DimensionError("solve_care: inconsistent dimensions");
  }
  Eigen::LLT<Mat> r_llt(symmetrize(r));
  if (r_llt.info() != Eigen::Success) {
    throw NumericalError("solve_care: R is not positive definite");
  }
  const Mat g = b * r_llt.solve(b.transpose());

  // Matrix sign iteration (Roberts' method with Byers determinant scaling) on
  // the Hamiltonian. The stable invariant subspace satisfies W [I; P] = -[I; P].
  Mat h(2 * n, 2 * n);
  h << a, -g, -symmetrize(q), -a.transpose();

  Mat z = h;
  const double dim = static_cast<double>(2 * n);
  for (int iter = 0; iter < 120; ++iter) {
    Eigen::PartialPivLU<Mat> lu(z);
    // log|det| from the LU diagonal avoids overflow at larger sizes.
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      log_det += std::log(std::abs(lu.matrixLU()(i, i)));
    }
    if (!std::isfinite(log_det)) {
      throw NumericalError("solve_care: Hamiltonian sign iteration hit a singular iterate");
    }
    const double c = std::exp(-log_det / dim);
    Mat z_next = 0.5 * (c * z + lu.inverse() / c);
    const double step = (z_next - z).norm();
    z = std::move(z_next);
    if (step <= 1e-13 * std::max(1.0, z.norm())) break;
  }

  Mat lhs(2 * n, n), rhs(2 * n, n);
  lhs.topRows(n) = z.topRightCorner(n, n);
  lhs.bottomRows(n) = z.bottomRightCorner(n, n) + Mat::Identity(n, n);
  rhs.topRows(n) = -(z.topLeftCorner(n, n) + Mat::Identity(n, n));
  rhs.bottomRows(n) = -z.bottomLeftCorner(n, n);
  Mat p = symmetrize(lhs.colPivHouseholderQr().solve(rhs));

  // Newton polish: each Kleinman step roughly squares the residual.
  auto residual = [&](const Mat& pp) {
    return (pp * a + a.transpose() * pp + q - pp * g * pp).norm();
  };
  double res = residual(p);
  for (int step = 0; step < 6 && res > tol * std::max(1.0, p.norm()); ++step) {
    const Mat k = r_llt.solve(b.transpose() * p);
    const Mat a_cl = a - b * k;
    if (!is_hurwitz(a_cl, 0.0)) break;
    p = symmetrize(solve_lyapunov(a_cl, symmetrize(q + k.transpose() * r * k)));
    res = residual(p);
  }

  CareSolution sol;
  sol.p = p;
  sol.k = r_llt.solve(b.transpose() * p);
  sol.residual_norm = res;
  if (!is_hurwitz(a - b * sol.k, kHurwitzMargin)) {
    throw NumericalError("solve_care: closed loop A - B K is not Hurwitz "
                         "(no stabilizing solution found)");
  }
  if (res > tol * std::max(1.0, p.norm())) {
    throw NumericalError("solve_care: ARE residual " + std::to_string(res) +
                         " above tolerance");
  }
  const double min_eig = min_symmetric_eigenvalue(p);
  if (min_eig < -1e-8 * std::max(1.0, p.norm())) {
    throw NumericalError("solve_care: solution is indefinite");
  }
  sol.positive_definite = min_eig > 1e-12 * std::max(1.0, p.norm());
  return sol;
}

CareSolution kleinman_iterate(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                              const Mat& k0, double eps, int max_iters,
                              std::vector<Mat>* p_history) {
  require_square(a, "kleinman_iterate");
  if (k0.rows() != b.cols() || k0.cols() != a.rows()) {
    throw DimensionError("kleinman_iterate: k0 dims must be m x n");
  }
  if (!is_hurwitz(a - b * k0, 0.0)) {
    throw NumericalError("kleinman_iterate: initial gain is not stabilizing");
  }
  Eigen::LLT<Mat> r_llt(symmetrize(r));
  if (r_llt.info() != Eigen::Success) {
    throw NumericalError("kleinman_iterate: R is not positive definite");
  }

  Mat k = k0;
  Mat p_prev;
  std::vector<double> history;
  for (int iter = 0; iter < max_iters; ++iter) {
    const Mat a_cl = a - b * k;
    if (!is_hurwitz(a_cl, 0.0)) {
      throw NumericalError("kleinman_iterate: iterate " + std::to_string(iter) +
                           " lost stability");
    }
    const Mat p = symmetrize(solve_lyapunov(a_cl, symmetrize(q + k.transpose() * r * k)));
    if (p_history != nullptr) p_history->push_back(p);
    k = r_llt.solve(b.transpose() * p);
    if (iter > 0) {
      const double diff = (p - p_prev).norm();
      history.push_back(diff);
      if (diff < eps) {
        CareSolution sol;
        sol.p = p;
        sol.k = k;
        sol.residual_norm = (p * a + a.transpose() * p + q -
                             p * b * r_llt.solve(b.transpose() * p)).norm();
        sol.positive_definite = min_symmetric_eigenvalue(p) > 1e-12 * std::max(1.0, p.norm());
        return sol;
      }
    }
    p_prev = p;
  }
  throw ConvergenceError("kleinman_iterate: no convergence within " +
                         std::to_string(max_iters) + " iterations",
                         std::move(history));
}

double closed_loop_cost(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                        const Mat& k, const Vec& x0) {
  const Mat a_cl = a - b * k;
  if (!is_hurwitz(a_cl, kHurwitzMargin)) {
    throw NumericalError("closed_loop_cost: closed loop is not Hurwitz");
  }
  if (x0.size() != a.rows()) {
    throw DimensionError("closed_loop_cost: x0 length must match state dimension");
  }
  const Mat x = solve_lyapunov(a_cl, symmetrize(q + k.transpose() * r * k));
  return x0.dot(x * x0);
}

}  // namespace hlqr
