#pragma once

// Structured matrix calculus: vec/vech stacking, Kronecker products, and the
// duplication/elimination/commutation operators used by the closed-form
// derivative expressions of Gaussian models.
//
// Conventions: vec stacks columns.  vech stacks the lower triangle including
// the diagonal in column-major order, i.e. rows (1,1),(2,1),...,(r,1),(2,2),...
// The elimination matrix operates on the lower triangle, so for
// lower-triangular C, vec C = E_r^T vech C.

#include "clic/types.hpp"

namespace clic::matops {

enum class OperatorKind { Duplication, Elimination, Commutation, Identity };

// Number of free entries of a symmetric/lower-triangular r x r matrix.
inline int vech_size(int r) { return r * (r + 1) / 2; }

// Position of entry (a,b), a >= b (0-based), in the vech ordering.
int vech_index(int a, int b, int r);

Vector vec(const Matrix& m);
Vector vech(const Matrix& m);  // throws std::invalid_argument if not square

// Inverse maps.
Matrix unvec(const Vector& v, int rows, int cols);
Matrix unvech_symmetric(const Vector& v, int r);
Matrix unvech_lower(const Vector& v, int r);

// D_r (r^2 x r(r+1)/2), E_r (r(r+1)/2 x r^2), T_rr (r^2 x r^2), I_r.
Matrix build_operator(OperatorKind kind, int r);

Matrix duplication(int r);
Matrix elimination(int r);
Matrix commutation(int r);

Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace clic::matops
