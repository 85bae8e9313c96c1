#include "clic/models.hpp"

#include <cmath>

namespace clic::models {

void DesignSet::validate() const {
  if (x.empty()) throw std::invalid_argument("DesignSet: no subjects");
  const int dd = static_cast<int>(x[0].rows());
  const int nb = static_cast<int>(x[0].cols());
  for (const auto& xi : x) {
    if (xi.rows() != dd || xi.cols() != nb)
      throw std::invalid_argument("DesignSet: non-uniform design shapes");
    if ((xi.col(0).array() != 1.0).any())
      throw std::invalid_argument("DesignSet: first column of x must be ones");
  }
  if (z.size() > 0 && z.rows() != dd)
    throw std::invalid_argument("DesignSet: z row count != d");
}

DesignSet DesignSet::first_covariates(int k) const {
  if (k < 0 || k + 1 > n_beta())
    throw std::invalid_argument("first_covariates: too many covariates requested");
  DesignSet out;
  out.z = z;
  out.x.reserve(x.size());
  for (const auto& xi : x) out.x.push_back(xi.leftCols(k + 1));
  return out;
}

DesignSet DesignSet::without_subject(int i) const {
  if (i < 0 || i >= n()) throw std::invalid_argument("without_subject: index");
  DesignSet out;
  out.z = z;
  out.x.reserve(x.size() - 1);
  for (int j = 0; j < n(); ++j)
    if (j != i) out.x.push_back(x[j]);
  return out;
}

void LmmSpec::validate() const {
  if (phi <= 0.0) throw std::invalid_argument("LmmSpec: phi must be positive");
  if (psi.rows() != psi.cols())
    throw std::invalid_argument("LmmSpec: psi must be square");
  if (!psi.isApprox(psi.transpose(), 1e-10))
    throw std::invalid_argument("LmmSpec: psi not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(psi);
  if (psi.size() > 0 &&
      es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw std::invalid_argument("LmmSpec: psi not PSD");
}

Matrix TrueLaw::implied_cov() const {
  const int dd = static_cast<int>(resid_cov.rows());
  Matrix cov = resid_cov;
  if (z.size() > 0) cov += z * psi * z.transpose();
  if (cov.rows() != dd) throw std::invalid_argument("TrueLaw: shape mismatch");
  return cov;
}

Vector TrueLaw::mean(const Matrix& x_i) const {
  Vector m = x_i * beta;
  if (mean_shift.size() > 0) m += mean_shift;
  return m;
}

void TrueLaw::validate() const {
  if (resid_cov.rows() != resid_cov.cols())
    throw std::invalid_argument("TrueLaw: resid_cov must be square");
  Eigen::LLT<Matrix> llt(resid_cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("TrueLaw: resid_cov not PD");
  if (z.size() > 0) {
    if (psi.rows() != z.cols() || psi.cols() != z.cols())
      throw std::invalid_argument("TrueLaw: psi / z shape mismatch");
    Eigen::SelfAdjointEigenSolver<Matrix> es(psi);
    if (es.eigenvalues().minCoeff() <
        -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
      throw std::invalid_argument("TrueLaw: psi not PSD");
  }
  if (mean_shift.size() > 0 && mean_shift.size() != resid_cov.rows())
    throw std::invalid_argument("TrueLaw: mean_shift length != d");
  if (effect_law == EffectLaw::ScaledT && t_df <= 2)
    throw std::invalid_argument("TrueLaw: t random effects need df > 2");
}

TrueLaw TrueLaw::exchangeable(const Vector& beta, double sigma2, double rho,
                              int d) {
  if (sigma2 <= 0.0) throw std::invalid_argument("exchangeable: sigma2 <= 0");
  if (rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument(
        "exchangeable mixed-effects form needs rho in [0,1)");
  TrueLaw law;
  law.beta = beta;
  law.z = Matrix::Ones(d, 1);
  law.psi = Matrix::Constant(1, 1, sigma2 * rho);
  law.resid_cov = sigma2 * (1.0 - rho) * Matrix::Identity(d, d);
  return law;
}

TrueLaw TrueLaw::mvn(const Vector& beta, const Matrix& sigma) {
  TrueLaw law;
  law.beta = beta;
  law.z = Matrix(sigma.rows(), 0);
  law.psi = Matrix(0, 0);
  law.resid_cov = sigma;
  return law;
}

LawSampler::LawSampler(const TrueLaw& law) : law_(law) {
  law_.validate();
  const int r = static_cast<int>(law_.z.cols());
  if (r > 0) {
    Eigen::LLT<Matrix> llt(law_.psi + 1e-14 * Matrix::Identity(r, r));
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("LawSampler: psi factorization failed");
    chol_psi_ = llt.matrixL();
  }
  Eigen::LLT<Matrix> llt_resid(law_.resid_cov);
  if (llt_resid.info() != Eigen::Success)
    throw std::invalid_argument("LawSampler: resid_cov not PD");
  chol_resid_ = llt_resid.matrixL();
  t_scale_ = law_.standardize_t
                 ? std::sqrt(static_cast<double>(law_.t_df - 2) / law_.t_df)
                 : 1.0;
}

Vector LawSampler::draw(const Matrix& x_i, Rng& g) const {
  const int dd = static_cast<int>(law_.resid_cov.rows());
  const int r = static_cast<int>(law_.z.cols());
  Vector yi = law_.mean(x_i);
  if (r > 0) {
    Vector v(r);
    for (int j = 0; j < r; ++j) {
      switch (law_.effect_law) {
        case EffectLaw::Normal: v[j] = g.normal(); break;
        case EffectLaw::ScaledT: v[j] = t_scale_ * g.student_t(law_.t_df); break;
        case EffectLaw::Laplace: v[j] = g.laplace_unit(); break;
      }
    }
    yi += law_.z * (chol_psi_ * v);
  }
  Vector e(dd);
  for (int j = 0; j < dd; ++j) e[j] = g.normal();
  yi += chol_resid_ * e;
  return yi;
}

std::vector<Vector> simulate(const TrueLaw& law, const DesignSet& designs,
                             const Rng& stream) {
  designs.validate();
  const int dd = designs.d();
  if (law.resid_cov.rows() != dd)
    throw std::invalid_argument("simulate: law dimension != design dimension");
  if (law.beta.size() != designs.n_beta())
    throw std::invalid_argument("simulate: beta length != design columns");
  LawSampler sampler(law);
  std::vector<Vector> y(designs.n());
  for (int i = 0; i < designs.n(); ++i) {
    Rng g = stream.stream(static_cast<std::uint64_t>(i));
    y[i] = sampler.draw(designs.x[i], g);
  }
  return y;
}

CovariateSetting covariate_setting_from(const std::string& name) {
  if (name == "iid-normal") return CovariateSetting::IidNormal;
  if (name == "correlated-normal") return CovariateSetting::CorrelatedNormal;
  if (name == "multivariate-t") return CovariateSetting::MultivariateT;
  throw std::invalid_argument("unknown covariate setting: " + name);
}

Matrix covariate_matrix(CovariateSetting setting, int d, int n_covariates,
                        Rng& g, int t_df) {
  const int s = n_covariates;
  Matrix chol = Matrix::Identity(s, s);
  if (setting == CovariateSetting::CorrelatedNormal) {
    Matrix sx = 0.2 * Matrix::Identity(s, s) + 0.8 * Matrix::Ones(s, s);
    chol = Eigen::LLT<Matrix>(sx).matrixL();
  }
  Matrix xi(d, s + 1);
  xi.col(0).setOnes();
  for (int row = 0; row < d; ++row) {
    Vector v(s);
    for (int j = 0; j < s; ++j) v[j] = g.normal();
    v = chol * v;
    if (setting == CovariateSetting::MultivariateT) {
      const double w = g.chisq(t_df) / t_df;
      v /= std::sqrt(w);
    }
    xi.row(row).tail(s) = v.transpose();
  }
  return xi;
}

DesignSet make_covariates(CovariateSetting setting, int n, int d,
                          int n_covariates, const Rng& stream, int t_df) {
  if (n < 1 || d < 1 || n_covariates < 1)
    throw std::invalid_argument("make_covariates: n, d, n_covariates >= 1");
  DesignSet out;
  out.z = Matrix(d, 0);
  out.x.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng g = stream.stream(static_cast<std::uint64_t>(i));
    out.x.push_back(covariate_matrix(setting, d, n_covariates, g, t_df));
  }
  return out;
}

SigmaKind sigma_kind_from(const std::string& name) {
  if (name == "Sigma1") return SigmaKind::Sigma1;
  if (name == "Sigma2") return SigmaKind::Sigma2;
  if (name == "Sigma1a") return SigmaKind::Sigma1a;
  if (name == "Sigma2a") return SigmaKind::Sigma2a;
  if (name == "SigmaDelta") return SigmaKind::SigmaDelta;
  throw std::invalid_argument("unknown sigma schedule: " + name);
}

Matrix sigma_schedule(SigmaKind kind, int n, int d, double delta) {
  if (n < 1) throw std::invalid_argument("sigma_schedule: n >= 1");
  Matrix base = 0.5 * Matrix::Identity(d, d) + 0.5 * Matrix::Ones(d, d);
  if (kind == SigmaKind::Sigma1) return base;
  if (d != 4)
    throw std::invalid_argument("sigma_schedule: perturbed schedules need d=4");

  const double eps1 = 0.07 * std::sqrt(200.0);
  const double eps2 = 0.05 * std::sqrt(200.0);
  auto perturb_corr = [&](double dl) {
    Matrix s = base;
    s(0, 1) += dl; s(1, 0) += dl;
    s(2, 3) += dl; s(3, 2) += dl;
    return s;
  };

  switch (kind) {
    case SigmaKind::Sigma2: return perturb_corr(eps1 / std::sqrt(double(n)));
    case SigmaKind::SigmaDelta: {
      Matrix s = perturb_corr(delta);
      Eigen::LLT<Matrix> llt(s);
      if (llt.info() != Eigen::Success)
        throw std::invalid_argument("sigma_schedule: delta makes Sigma non-PD");
      return s;
    }
    case SigmaKind::Sigma1a:
    case SigmaKind::Sigma2a: {
      Matrix s = (kind == SigmaKind::Sigma1a)
                     ? base
                     : perturb_corr(eps1 / std::sqrt(double(n)));
      Vector dv(4);
      const double f = 1.0 + eps2 / std::sqrt(double(n));
      dv << 1.0, 1.0, f, f;
      return dv.asDiagonal() * s * dv.asDiagonal();
    }
    default: break;
  }
  throw std::invalid_argument("sigma_schedule: unhandled kind");
}

}  // namespace clic::models
