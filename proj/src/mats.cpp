#include "hlqr/mats.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "hlqr/errors.hpp"

namespace hlqr {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Mat block_diag(const std::vector<Mat>& blocks) {
  if (blocks.empty()) {
    throw DimensionError("block_diag: empty block list");
  }
  Eigen::Index rows = 0, cols = 0;
  for (const Mat& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Mat out = Mat::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const Mat& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Mat incidence_from_edges(int num_nodes, const std::vector<std::pair<int, int>>& edges) {
  Mat d = Mat::Zero(num_nodes, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
      throw DimensionError("incidence_from_edges: node index out of range in edge " +
                           std::to_string(e));
    }
    if (u == v) {
      throw DimensionError("incidence_from_edges: self-loop at node " + std::to_string(u));
    }
    d(u, static_cast<Eigen::Index>(e)) = 1.0;
    d(v, static_cast<Eigen::Index>(e)) = -1.0;
  }
  return d;
}

Vec vecs(const Mat& sym) {
  if (sym.rows() != sym.cols()) {
    throw DimensionError("vecs: matrix must be square");
  }
  const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
  if ((sym - sym.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw NumericalError("vecs: input not symmetric within tolerance");
  }
  const Mat s = symmetrize(sym);
  const int n = static_cast<int>(s.rows());
  Vec v(vecs_length(n));
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      v(idx++) = s(i, j);
    }
  }
  return v;
}

Mat unvecs(const Vec& v, int n) {
  if (v.size() != vecs_length(n)) {
    throw DimensionError("unvecs: vector length does not match n(n+1)/2");
  }
  Mat s(n, n);
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      s(i, j) = v(idx);
      s(j, i) = v(idx);
      ++idx;
    }
  }
  return s;
}

double spectral_abscissa(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("spectral_abscissa: matrix must be square");
  }
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Mat& a, double margin) {
  return spectral_abscissa(a) < -margin;
}

double min_symmetric_eigenvalue(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("min_symmetric_eigenvalue: matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_spd(const Mat& a, double tol) {
  if (a.rows() != a.cols()) {
    throw DimensionError("is_spd: matrix must be square");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > std::max(tol, 1e-12) * scale) {
    return false;
  }
  return min_symmetric_eigenvalue(a) > tol;
}

}  // namespace hlqr
