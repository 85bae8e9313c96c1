#include "clic/families.hpp"

#include <cmath>

#include "clic/matops.hpp"

namespace clic::cl {

namespace {

// Lower-triangle (column-major) index pairs for an r x r matrix.
std::vector<std::pair<int, int>> lower_pairs(int r) {
  std::vector<std::pair<int, int>> out;
  out.reserve(r * (r + 1) / 2);
  for (int b = 0; b < r; ++b)
    for (int a = b; a < r; ++a) out.emplace_back(a, b);
  return out;
}

Matrix clip_psd(const Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  Vector ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

int GaussianFamily::hess_index(int k, int l) const {
  const int q = n_cov();
  if (k > l) std::swap(k, l);
  return k * q - k * (k - 1) / 2 + (l - k);
}

bool GaussianFamily::near_boundary(const Vector&) const { return false; }

std::vector<std::pair<std::string, double>> GaussianFamily::natural_params(
    const Vector&) const {
  return {};
}

// ---------------------------------------------------------------------------
// LmmCholFamily
// ---------------------------------------------------------------------------

LmmCholFamily::LmmCholFamily(Matrix z, std::string name)
    : z_(std::move(z)), name_(std::move(name)) {
  if (z_.rows() < 1 || z_.cols() < 1)
    throw std::invalid_argument("LmmCholFamily: z must be d x r with r >= 1");
}

int LmmCholFamily::n_cov() const { return r() * (r() + 1) / 2 + 1; }

std::vector<std::string> LmmCholFamily::cov_param_names() const {
  std::vector<std::string> out;
  for (auto [a, b] : lower_pairs(r()))
    out.push_back("c" + std::to_string(a + 1) + std::to_string(b + 1));
  out.push_back("kappa");
  return out;
}

Matrix LmmCholFamily::chol_c(const Vector& tc) const {
  return matops::unvech_lower(tc.head(tc.size() - 1), r());
}

Matrix LmmCholFamily::omega(const Vector& tc) const {
  const Matrix c = chol_c(tc);
  const double k = kappa(tc);
  const int d = dim();
  return z_ * (c * c.transpose()) * z_.transpose() +
         k * k * Matrix::Identity(d, d);
}

std::vector<Matrix> LmmCholFamily::omega_grad(const Vector& tc) const {
  const Matrix c = chol_c(tc);
  const int d = dim(), rr = r();
  std::vector<Matrix> out;
  out.reserve(n_cov());
  for (auto [a, b] : lower_pairs(rr)) {
    Matrix delta = Matrix::Zero(rr, rr);
    delta(a, b) = 1.0;
    Matrix dpsi = delta * c.transpose() + c * delta.transpose();
    out.push_back(z_ * dpsi * z_.transpose());
  }
  out.push_back(2.0 * kappa(tc) * Matrix::Identity(d, d));
  return out;
}

std::vector<Matrix> LmmCholFamily::omega_hess(const Vector& tc) const {
  const int d = dim(), rr = r(), q = n_cov();
  const auto pairs = lower_pairs(rr);
  std::vector<Matrix> out(q * (q + 1) / 2, Matrix::Zero(d, d));
  const int nc = static_cast<int>(pairs.size());
  for (int k = 0; k < nc; ++k) {
    for (int l = k; l < nc; ++l) {
      Matrix da = Matrix::Zero(rr, rr), db = Matrix::Zero(rr, rr);
      da(pairs[k].first, pairs[k].second) = 1.0;
      db(pairs[l].first, pairs[l].second) = 1.0;
      Matrix dpsi = da * db.transpose() + db * da.transpose();
      out[hess_index(k, l)] = z_ * dpsi * z_.transpose();
    }
  }
  out[hess_index(q - 1, q - 1)] = 2.0 * Matrix::Identity(d, d);
  (void)tc;
  return out;
}

Vector LmmCholFamily::start_cov(const Matrix& resid_cov) const {
  // Least squares of vec(resid_cov) on [vec(z Delta_ab z^T), vec(I)], then
  // PSD clipping of Psi-hat.
  const int d = dim(), rr = r();
  const auto pairs_sym = lower_pairs(rr);
  const int q = static_cast<int>(pairs_sym.size());
  Matrix a(d * d, q + 1);
  for (int j = 0; j < q; ++j) {
    Matrix delta = Matrix::Zero(rr, rr);
    delta(pairs_sym[j].first, pairs_sym[j].second) = 1.0;
    delta(pairs_sym[j].second, pairs_sym[j].first) = 1.0;
    a.col(j) = matops::vec(z_ * delta * z_.transpose());
  }
  a.col(q) = matops::vec(Matrix::Identity(d, d));
  Vector sol =
      a.colPivHouseholderQr().solve(matops::vec(resid_cov));
  Matrix psi = matops::unvech_symmetric(sol.head(q), rr);
  const double scale = std::max(resid_cov.trace() / d, 1e-8);
  psi = clip_psd(psi, 1e-6 * scale);
  double phi = std::max(sol[q], 1e-3 * scale);
  Eigen::LLT<Matrix> llt(psi);
  Matrix c = llt.matrixL();
  Vector tc(n_cov());
  tc.head(q) = matops::vech(Matrix(c));
  tc[q] = std::sqrt(phi);
  return tc;
}

Vector LmmCholFamily::canonicalize(const Vector& tc) const {
  Matrix c = chol_c(tc);
  for (int j = 0; j < r(); ++j)
    if (c(j, j) < 0.0) c.col(j) = -c.col(j);
  Vector out(tc.size());
  out.head(tc.size() - 1) = matops::vech(c);
  out[tc.size() - 1] = std::abs(kappa(tc));
  return out;
}

bool LmmCholFamily::near_boundary(const Vector& tc) const {
  const Matrix om = omega(tc);
  const double scale = std::sqrt(om.trace() / dim());
  if (std::abs(kappa(tc)) < 1e-4 * scale) return true;
  const Matrix c = chol_c(tc);
  for (int j = 0; j < r(); ++j)
    if (std::abs(c(j, j)) < 1e-4 * scale) return true;
  return false;
}

std::vector<std::pair<std::string, double>> LmmCholFamily::natural_params(
    const Vector& tc) const {
  const Matrix c = chol_c(tc);
  const Matrix psi = c * c.transpose();
  const double phi = kappa(tc) * kappa(tc);
  std::vector<std::pair<std::string, double>> out;
  if (r() == 1 && (z_.array() == 1.0).all()) {
    const double sigma2 = psi(0, 0) + phi;
    out.emplace_back("sigma2", sigma2);
    out.emplace_back("rho", psi(0, 0) / sigma2);
  }
  for (int j = 0; j < r(); ++j)
    out.emplace_back("sd_b" + std::to_string(j), std::sqrt(psi(j, j)));
  out.emplace_back("resid_sd", std::sqrt(phi));
  for (int b = 0; b < r(); ++b)
    for (int a = b + 1; a < r(); ++a)
      out.emplace_back(
          "psi" + std::to_string(a + 1) + std::to_string(b + 1), psi(a, b));
  return out;
}

// ---------------------------------------------------------------------------
// MvnCholFamily
// ---------------------------------------------------------------------------

MvnCholFamily::MvnCholFamily(int d) : d_(d) {
  if (d < 1) throw std::invalid_argument("MvnCholFamily: d >= 1");
}

std::vector<std::string> MvnCholFamily::cov_param_names() const {
  std::vector<std::string> out;
  for (auto [a, b] : lower_pairs(d_))
    out.push_back("l" + std::to_string(a + 1) + std::to_string(b + 1));
  return out;
}

Matrix MvnCholFamily::omega(const Vector& tc) const {
  const Matrix l = matops::unvech_lower(tc, d_);
  return l * l.transpose();
}

std::vector<Matrix> MvnCholFamily::omega_grad(const Vector& tc) const {
  const Matrix l = matops::unvech_lower(tc, d_);
  std::vector<Matrix> out;
  out.reserve(n_cov());
  for (auto [a, b] : lower_pairs(d_)) {
    Matrix g = Matrix::Zero(d_, d_);
    g.row(a) += l.row(b);
    g.col(a) += l.row(b).transpose();
    out.push_back(g);
  }
  return out;
}

std::vector<Matrix> MvnCholFamily::omega_hess(const Vector&) const {
  const int q = n_cov();
  const auto pairs = lower_pairs(d_);
  std::vector<Matrix> out(q * (q + 1) / 2, Matrix::Zero(d_, d_));
  for (int k = 0; k < q; ++k) {
    for (int l = k; l < q; ++l) {
      // d2 Sigma = Delta_k Delta_l^T + Delta_l Delta_k^T: nonzero only when
      // the two parameters share a column.
      if (pairs[k].second != pairs[l].second) continue;
      Matrix h = Matrix::Zero(d_, d_);
      h(pairs[k].first, pairs[l].first) += 1.0;
      h(pairs[l].first, pairs[k].first) += 1.0;
      out[hess_index(k, l)] = h;
    }
  }
  return out;
}

Vector MvnCholFamily::start_cov(const Matrix& resid_cov) const {
  const double scale = std::max(resid_cov.trace() / d_, 1e-8);
  Matrix s = clip_psd(resid_cov, 1e-4 * scale);
  Eigen::LLT<Matrix> llt(s);
  return matops::vech(Matrix(llt.matrixL()));
}

Vector MvnCholFamily::canonicalize(const Vector& tc) const {
  Matrix l = matops::unvech_lower(tc, d_);
  for (int j = 0; j < d_; ++j)
    if (l(j, j) < 0.0) l.col(j) = -l.col(j);
  return matops::vech(l);
}

std::vector<std::pair<std::string, double>> MvnCholFamily::natural_params(
    const Vector& tc) const {
  const Matrix sigma = omega(tc);
  std::vector<std::pair<std::string, double>> out;
  for (int b = 0; b < d_; ++b)
    for (int a = b; a < d_; ++a)
      out.emplace_back(
          "sigma" + std::to_string(a + 1) + std::to_string(b + 1), sigma(a, b));
  return out;
}

// ---------------------------------------------------------------------------

MvnFixedFamily::MvnFixedFamily(Matrix sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols())
    throw std::invalid_argument("MvnFixedFamily: sigma must be square");
}

std::unique_ptr<GaussianFamily> exchangeable_family(int d) {
  return std::make_unique<LmmCholFamily>(Matrix::Ones(d, 1), "exch");
}

std::unique_ptr<GaussianFamily> make_family(const std::string& name, int d,
                                            const Matrix& z) {
  if (name == "exch" || name == "mvn-exch" || name == "lmm-exch")
    return exchangeable_family(d);
  if (name == "unstr" || name == "mvn-unstr")
    return std::make_unique<MvnCholFamily>(d);
  if (name == "lmm") {
    if (z.size() == 0)
      throw std::invalid_argument("make_family: lmm needs a z design");
    return std::make_unique<LmmCholFamily>(z);
  }
  throw std::invalid_argument("unknown model family: " + name);
}

Vector exchangeable_cov_params(double sigma2, double rho) {
  if (sigma2 <= 0.0 || rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument(
        "exchangeable_cov_params: need sigma2 > 0, rho in [0,1)");
  Vector tc(2);
  tc << std::sqrt(sigma2 * rho), std::sqrt(sigma2 * (1.0 - rho));
  return tc;
}

}  // namespace clic::cl
