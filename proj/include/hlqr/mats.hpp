#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace hlqr {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Kronecker product, dims (a.rows*b.rows) x (a.cols*b.cols).
Mat kron(const Mat& a, const Mat& b);

// Block-diagonal concatenation with zero fill. Throws DimensionError on an
// empty list.
Mat block_diag(const std::vector<Mat>& blocks);

// Oriented incidence matrix of an undirected graph: one column per edge,
// +1 at the first endpoint, -1 at the second. D * D^T is the graph
// Laplacian. Throws on self-loops or out-of-range nodes.
Mat incidence_from_edges(int num_nodes, const std::vector<std::pair<int, int>>& edges);

// Half-vectorization of a symmetric matrix: upper triangle stacked row by
// row, each off-diagonal entry appearing once (no doubling; quadratic-form
// regressors carry the factor of 2 instead). Input must be symmetric to
// within 1e-9; it is symmetrized before extraction.
Vec vecs(const Mat& sym);

// Inverse of vecs: rebuilds the full symmetric n x n matrix.
Mat unvecs(const Vec& v, int n);

inline int vecs_length(int n) { return n * (n + 1) / 2; }

// True iff every eigenvalue of a has real part < -margin.
bool is_hurwitz(const Mat& a, double margin = 0.0);

// True iff a is symmetric (within tol) with smallest eigenvalue > tol.
bool is_spd(const Mat& a, double tol = 1e-10);

// Largest real part over the spectrum.
double spectral_abscissa(const Mat& a);

// Smallest eigenvalue of the symmetrized input.
double min_symmetric_eigenvalue(const Mat& a);

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

}  // namespace hlqr
