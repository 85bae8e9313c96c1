#pragma once

// Model families and data generation: the Laird-Ware mixed-effects model,
// multivariate normal regression with exchangeable / perturbed / unstructured
// covariance, and the non-Gaussian generators used in the misspecification
// experiments.

#include <vector>

#include "clic/rng.hpp"
#include "clic/types.hpp"

namespace clic::models {

struct DesignSet {
  std::vector<Matrix> x;  // per subject, d x (s+1), first column all ones
  Matrix z;               // shared d x r random-effect design (may be 0-col)

  int n() const { return static_cast<int>(x.size()); }
  int d() const { return x.empty() ? 0 : static_cast<int>(x[0].rows()); }
  int n_beta() const { return x.empty() ? 0 : static_cast<int>(x[0].cols()); }
  int r() const { return static_cast<int>(z.cols()); }
  void validate() const;  // throws std::invalid_argument

  // Copy with only the intercept and the first k covariate columns.
  DesignSet first_covariates(int k) const;
  DesignSet without_subject(int i) const;
};

struct LmmSpec {
  Vector beta;
  Matrix psi;  // r x r PSD
  double phi = 1.0;
  int d = 0;
  void validate() const;
};

struct CholParam {
  Matrix c;            // r x r lower triangular, diag >= 0 canonical
  double kappa = 1.0;  // phi = kappa^2
  Matrix psi() const { return c * c.transpose(); }
  double phi() const { return kappa * kappa; }
};

enum class EffectLaw { Normal, ScaledT, Laplace };

// True data-generating law: y_i = x_i beta + shift + z b_i + eps_i with
// b_i = C v_i (v iid from effect_law, unit variance unless paper-literal t)
// and eps_i ~ N(0, resid_cov).
struct TrueLaw {
  Vector beta;
  Matrix z;          // d x r (r = 0: no random effects)
  Matrix psi;        // r x r PSD
  Matrix resid_cov;  // d x d PD
  EffectLaw effect_law = EffectLaw::Normal;
  int t_df = 3;
  bool standardize_t = false;  // default: paper-literal raw t variates
  Vector mean_shift;           // size 0 or d

  Matrix implied_cov() const;  // z psi z^T + resid_cov
  Vector mean(const Matrix& x_i) const;
  void validate() const;

  // Gaussian law with exchangeable covariance in its mixed-effects form:
  // z = 1_d, psi = sigma2*rho, resid = sigma2*(1-rho) I.
  static TrueLaw exchangeable(const Vector& beta, double sigma2, double rho,
                              int d);
  // Gaussian law with an arbitrary covariance matrix (no random-effect part).
  static TrueLaw mvn(const Vector& beta, const Matrix& sigma);
};

// n independent subject responses; subject i uses stream.stream(i).
std::vector<Vector> simulate(const TrueLaw& law, const DesignSet& designs,
                             const Rng& stream);

// Single-subject sampler with precomputed factorizations (used by replicate
// loops and Monte Carlo block estimation; same draw path as simulate()).
class LawSampler {
 public:
  explicit LawSampler(const TrueLaw& law);
  Vector draw(const Matrix& x_i, Rng& g) const;

 private:
  TrueLaw law_;
  Matrix chol_psi_, chol_resid_;
  double t_scale_ = 1.0;
};

enum class CovariateSetting { IidNormal, CorrelatedNormal, MultivariateT };

CovariateSetting covariate_setting_from(const std::string& name);

// Observation-level covariates: row j of subject i's covariate block is an
// independent draw from the chosen law.  x_i gets an intercept column first.
DesignSet make_covariates(CovariateSetting setting, int n, int d,
                          int n_covariates, const Rng& stream, int t_df = 3);

// One subject's design matrix from the same draw path.
Matrix covariate_matrix(CovariateSetting setting, int d, int n_covariates,
                        Rng& g, int t_df = 3);

enum class SigmaKind { Sigma1, Sigma2, Sigma1a, Sigma2a, SigmaDelta };

SigmaKind sigma_kind_from(const std::string& name);

// The d=4 covariance schedules: exchangeable base (unit variances,
// correlation 0.5), correlation perturbations at entries (1,2) and (3,4)
// of size eps1/sqrt(n) (eps1 = 0.07 sqrt(200)) or an explicit delta, and
// variance perturbations via D = diag(1,1,1+eps2/sqrt(n),1+eps2/sqrt(n))
// (eps2 = 0.05 sqrt(200)).  Sigma1 generalizes to any d.
Matrix sigma_schedule(SigmaKind kind, int n, int d = 4, double delta = 0.0);

}  // namespace clic::models
