#pragma once

#include <vector>

#include "hlqr/mats.hpp"

namespace hlqr {

struct CareSolution {
  Mat p;                      // stabilizing ARE solution, symmetric
  Mat k;                      // gain R^{-1} B^T P, for u = -K x
  double residual_norm = 0.0; // Frobenius norm of the ARE residual
  bool positive_definite = true;  // false when P is only PSD (unobservable cost)
};

// Stabilizing solution of P A + A^T P + Q - P B R^{-1} B^T P = 0 via the
// matrix sign function of the Hamiltonian, polished with Newton (Kleinman)
// steps until the residual is below tol * max(1, ||P||_F). Throws
// NumericalError when no stabilizing solution is found.
CareSolution solve_care(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                        double tol = 1e-9);

// Unique solution X of A^T X + X A + Q = 0 for Hurwitz A (Bartels-Stewart on
// the real Schur form). X is symmetric whenever Q is.
Mat solve_lyapunov(const Mat& a, const Mat& q);

// Kronecker-linearization route for the same equation: solves
// (I (x) A^T + A^T (x) I) vec(X) = -vec(Q) directly. O(n^6); kept as an
// independent cross-check of solve_lyapunov at small sizes.
Mat solve_lyapunov_kron(const Mat& a, const Mat& q);

// Newton/Kleinman policy iteration from a stabilizing initial gain k0:
// alternates P_k = lyap(A - B K_k, Q + K_k^T R K_k) with K_{k+1} = R^{-1} B^T P_k
// until ||P_k - P_{k-1}||_F < eps. If p_history is given, the per-iteration
// P_k are appended to it. Throws when k0 does not stabilize or max_iters is
// exceeded.
CareSolution kleinman_iterate(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                              const Mat& k0, double eps, int max_iters,
                              std::vector<Mat>* p_history = nullptr);

// Infinite-horizon quadratic cost of u = -K x from x0: x0^T X x0 with
// X = lyap(A - B K, Q + K^T R K). Throws when the closed loop is not Hurwitz.
double closed_loop_cost(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                        const Mat& k, const Vec& x0);

}  // namespace hlqr
