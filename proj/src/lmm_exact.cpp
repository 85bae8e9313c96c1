#include "clic/lmm_exact.hpp"

#include "clic/matops.hpp"

namespace clic::cl::lmm_exact {

namespace {

using matops::commutation;
using matops::elimination;
using matops::kron;
using matops::vec;

std::vector<Matrix> selectors(int d, bool pairwise) {
  std::vector<Matrix> out;
  if (!pairwise) {
    out.push_back(Matrix::Identity(d, d));
    return out;
  }
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      Matrix e = Matrix::Zero(d, 2);
      e(j, 0) = 1.0;
      e(k, 1) = 1.0;
      out.push_back(e);
    }
  return out;
}

}  // namespace

Matrix omega(const Inputs& in) {
  const int d = static_cast<int>(in.z.rows());
  return in.z * in.c * in.c.transpose() * in.z.transpose() +
         in.kappa * in.kappa * Matrix::Identity(d, d);
}

Matrix a_matrix(const Matrix& om, int power, bool pairwise) {
  const int d = static_cast<int>(om.rows());
  Matrix a = Matrix::Zero(d, d);
  for (const Matrix& e : selectors(d, pairwise)) {
    const Matrix sub = e.transpose() * om * e;
    Matrix inv = sub.inverse();
    Matrix acc = inv;
    for (int t = 1; t < power; ++t) acc = acc * inv;
    a += e * acc * e.transpose();
  }
  return a;
}

Matrix b_matrix(const Matrix& om, bool pairwise) {
  const int d = static_cast<int>(om.rows());
  Matrix b = Matrix::Zero(d * d, d * d);
  for (const Matrix& e : selectors(d, pairwise)) {
    const Matrix p = e * (e.transpose() * om * e).inverse() * e.transpose();
    b += kron(p, p);
  }
  return b;
}

Vector score(const Inputs& in, const Matrix& x_i, const Vector& y_i,
             const Vector& beta, bool pairwise) {
  const int r = static_cast<int>(in.c.rows());
  const Matrix om = omega(in);
  const Matrix a1 = a_matrix(om, 1, pairwise);
  const Matrix a2 = a_matrix(om, 2, pairwise);
  const Matrix b = b_matrix(om, pairwise);
  const Matrix er = elimination(r);

  const Vector u = y_i - x_i * beta;
  const Matrix s = u * u.transpose();
  const int nb = static_cast<int>(x_i.cols());
  const int nvech = matops::vech_size(r);

  Vector out(nb + nvech + 1);
  out.head(nb) = x_i.transpose() * a1 * u;
  const Matrix zz = kron(in.z, in.z);
  const Matrix ci = kron(in.c, Matrix::Identity(r, r));
  out.segment(nb, nvech) =
      (vec(s - om).transpose() * b * zz * ci * er.transpose()).transpose();
  out[nb + nvech] = in.kappa * (a2 * (s - om)).trace();
  return out;
}

Matrix expected_hessian(const Inputs& in, const Matrix& x_i, bool pairwise) {
  const int r = static_cast<int>(in.c.rows());
  const Matrix om = omega(in);
  const Matrix a1 = a_matrix(om, 1, pairwise);
  const Matrix a2 = a_matrix(om, 2, pairwise);
  const Matrix b = b_matrix(om, pairwise);
  const Matrix er = elimination(r);
  const Matrix trr = commutation(r);
  const Matrix ir2 = Matrix::Identity(r * r, r * r);

  const int nb = static_cast<int>(x_i.cols());
  const int nvech = matops::vech_size(r);
  const Matrix zz = kron(in.z, in.z);
  const Matrix ci = kron(in.c, Matrix::Identity(r, r));
  const Matrix cti = kron(in.c.transpose(), Matrix::Identity(r, r));

  Matrix h = Matrix::Zero(nb + nvech + 1, nb + nvech + 1);
  h.topLeftCorner(nb, nb) = x_i.transpose() * a1 * x_i;
  h.block(nb, nb, nvech, nvech) = er * cti * zz.transpose() * b * zz *
                                  (ir2 + trr) * ci * er.transpose();
  const Vector hck =
      2.0 * in.kappa * er * cti * vec(in.z.transpose() * a2 * in.z);
  h.block(nb, nb + nvech, nvech, 1) = hck;
  h.block(nb + nvech, nb, 1, nvech) = hck.transpose();
  h(nb + nvech, nb + nvech) = 2.0 * in.kappa * in.kappa * a2.trace();
  return h;
}

Matrix expected_score_moment(const Inputs& in, const Matrix& x_i,
                             bool pairwise) {
  const int r = static_cast<int>(in.c.rows());
  const Matrix om = omega(in);
  const Matrix a1 = a_matrix(om, 1, pairwise);
  const Matrix a2 = a_matrix(om, 2, pairwise);
  const Matrix b = b_matrix(om, pairwise);
  const Matrix er = elimination(r);
  const Matrix trr = commutation(r);
  const Matrix ir2 = Matrix::Identity(r * r, r * r);

  const int nb = static_cast<int>(x_i.cols());
  const int nvech = matops::vech_size(r);
  const Matrix zz = kron(in.z, in.z);
  const Matrix ci = kron(in.c, Matrix::Identity(r, r));
  const Matrix cti = kron(in.c.transpose(), Matrix::Identity(r, r));
  const Matrix omom = kron(om, om);

  Matrix j = Matrix::Zero(nb + nvech + 1, nb + nvech + 1);
  j.topLeftCorner(nb, nb) = x_i.transpose() * a1 * om * a1 * x_i;
  j.block(nb, nb, nvech, nvech) = er * cti * zz.transpose() * b * omom * b *
                                  zz * (ir2 + trr) * ci * er.transpose();
  const Vector jck =
      2.0 * in.kappa * er * cti * zz.transpose() * b * omom * vec(a2);
  j.block(nb, nb + nvech, nvech, 1) = jck;
  j.block(nb + nvech, nb, 1, nvech) = jck.transpose();
  j(nb + nvech, nb + nvech) =
      2.0 * in.kappa * in.kappa * (a2 * om * a2 * om).trace();
  return j;
}

}  // namespace clic::cl::lmm_exact
