#include "clic/matops.hpp"

namespace clic::matops {

int vech_index(int a, int b, int r) {
  // column b contributes r-b entries, rows b..r-1
  return b * r - b * (b - 1) / 2 + (a - b);
}

Vector vec(const Matrix& m) {
  Vector out(m.size());
  int k = 0;
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) out[k++] = m(i, j);
  return out;
}

Vector vech(const Matrix& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("vech: matrix must be square");
  const int r = static_cast<int>(m.rows());
  Vector out(vech_size(r));
  int k = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i) out[k++] = m(i, j);
  return out;
}

Matrix unvec(const Vector& v, int rows, int cols) {
  if (v.size() != static_cast<long>(rows) * cols)
    throw std::invalid_argument("unvec: size mismatch");
  Matrix m(rows, cols);
  int k = 0;
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = v[k++];
  return m;
}

Matrix unvech_symmetric(const Vector& v, int r) {
  if (v.size() != vech_size(r))
    throw std::invalid_argument("unvech: size mismatch");
  Matrix m(r, r);
  int k = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i) {
      m(i, j) = v[k];
      m(j, i) = v[k];
      ++k;
    }
  return m;
}

Matrix unvech_lower(const Vector& v, int r) {
  if (v.size() != vech_size(r))
    throw std::invalid_argument("unvech: size mismatch");
  Matrix m = Matrix::Zero(r, r);
  int k = 0;
  for (int j = 0; j < r; ++j)
    for (int i = j; i < r; ++i) m(i, j) = v[k++];
  return m;
}

Matrix duplication(int r) {
  Matrix d = Matrix::Zero(r * r, vech_size(r));
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) {
      const int a = std::max(i, j), b = std::min(i, j);
      d(j * r + i, vech_index(a, b, r)) = 1.0;
    }
  return d;
}

Matrix elimination(int r) {
  Matrix e = Matrix::Zero(vech_size(r), r * r);
  for (int b = 0; b < r; ++b)
    for (int a = b; a < r; ++a) e(vech_index(a, b, r), b * r + a) = 1.0;
  return e;
}

Matrix commutation(int r) {
  Matrix t = Matrix::Zero(r * r, r * r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) t(i + j * r, j + i * r) = 1.0;
  return t;
}

Matrix build_operator(OperatorKind kind, int r) {
  if (r < 1) throw std::invalid_argument("build_operator: r must be >= 1");
  switch (kind) {
    case OperatorKind::Duplication: return duplication(r);
    case OperatorKind::Elimination: return elimination(r);
    case OperatorKind::Commutation: return commutation(r);
    case OperatorKind::Identity: return Matrix::Identity(r, r);
  }
  throw std::invalid_argument("build_operator: unknown kind");
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace clic::matops
