#pragma once

// Closed-form score, expected Hessian, and score second moment for the
// Gaussian mixed-effects model under the full likelihood and the pairwise
// composite likelihood, written directly in vec/vech operator algebra
// (duplication, elimination, commutation matrices).  Parameterization is
// (beta, vech C, kappa) with Psi = C C^T and phi = kappa^2.
//
// These explicit assemblies mirror the generic margin engine and serve as its
// independent cross-check; the engine is the production path.

#include <vector>

#include "clic/models.hpp"
#include "clic/types.hpp"

namespace clic::cl::lmm_exact {

struct Inputs {
  Matrix z;      // d x r
  Matrix c;      // r x r lower triangular
  double kappa;  // residual scale
};

Matrix omega(const Inputs& in);

// A_{a} = sum_{margins} e_S (e_S' Omega e_S)^{-a} e_S', pairwise margins.
Matrix a_matrix(const Matrix& omega, int power, bool pairwise);
// B = sum_{margins} P_S (x) P_S with P_S = e_S (e_S' Omega e_S)^{-1} e_S'.
Matrix b_matrix(const Matrix& omega, bool pairwise);

// Score of one subject: blocks (beta, vech C, kappa).
Vector score(const Inputs& in, const Matrix& x_i, const Vector& y_i,
             const Vector& beta, bool pairwise);

// Expected Hessian H_i = -E d2 l_i (at the model law) for one subject.
Matrix expected_hessian(const Inputs& in, const Matrix& x_i, bool pairwise);

// Expected score second moment J_i = E (dl_i)' (dl_i) for one subject.
Matrix expected_score_moment(const Inputs& in, const Matrix& x_i,
                             bool pairwise);

}  // namespace clic::cl::lmm_exact
