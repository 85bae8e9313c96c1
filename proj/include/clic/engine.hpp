#pragma once

// Composite-likelihood evaluation engine for Gaussian cluster models.
//
// For a margin scheme {S_q, w_q}, family covariance Omega(tc) with
// derivatives G_k, and residuals u_i = y_i - x_i beta with S_i = u_i u_i^T,
// every quantity reduces to margin-local operations with the inverses
// Omega_S^{-1}:
//
//   log density    sum_q w_q * -1/2 (u_S' Oinv u_S + log|Omega_S| + |S| log 2pi)
//   score (beta)   x' A1 u,              A1 = sum_q w_q e_S Oinv e_S'
//   score (tc_k)   1/2 sum_q w_q tr((S - Omega)_S Oinv G_{k,S} Oinv)
//
// Expected Hessian and score covariance follow from Gaussian moments; the
// observed Hessian is evaluated by central differences of the analytic
// score.  H and J are reported on the per-subject scale (averages over i),
// so tr(J H^{-1}) is sample-size free.

#include <vector>

#include "clic/families.hpp"
#include "clic/margins.hpp"
#include "clic/models.hpp"
#include "clic/types.hpp"

namespace clic::cl {

struct MarginData {
  std::vector<int> idx;
  double w = 1.0;
  Matrix omega_sub;   // Omega restricted to S
  Matrix omega_inv;   // unweighted
  double logdet = 0.0;
  std::vector<Matrix> m;      // w * Oinv G_{k,S} Oinv  (weight folded in)
  std::vector<Matrix> g_sub;  // G_{k,S}, unweighted
  std::vector<double> tr_om;  // tr(Omega_S m_k)
};

// Parameter-dependent state shared by all evaluations at a fixed theta.
struct EngineCache {
  Vector theta;
  int d = 0, nbeta = 0, ncov = 0;
  bool pd = false;  // all margin covariances positive definite
  Matrix omega;
  Matrix a1;  // d x d, weights folded in
  std::vector<MarginData> margins;
  std::vector<Matrix> gfull;
  double const_term = 0.0;  // -1/2 sum_q w_q |S_q| log(2 pi)

  int p() const { return nbeta + ncov; }
};

EngineCache make_cache(const GaussianFamily& family, const MarginScheme& scheme,
                       const Vector& theta, int nbeta);

// Per-subject analytic score at actual data.
Vector subject_score(const EngineCache& c, const Matrix& x_i, const Vector& y_i);

// Moment-substituted evaluations: exact conditional expectations over y_i
// under any true law with E[y_i] = mu_i, Cov[y_i] = sg (the analytic score
// and Hessian are linear in (u_i, S_i)).
struct UnderMomentsCtx {
  const GaussianFamily* family = nullptr;
  EngineCache cache;
  std::vector<Matrix> hess;  // omega second derivatives (k <= l flattened)
  Matrix sg;
  Matrix d0;  // sg - omega
};

UnderMomentsCtx make_under_ctx(const GaussianFamily& family,
                               const MarginScheme& scheme, const Vector& theta,
                               int nbeta, const Matrix& sg);

Vector subject_score_under(const UnderMomentsCtx& ctx, const Matrix& x_i,
                           const Vector& mu_i);
Matrix subject_hessian_under(const UnderMomentsCtx& ctx, const Matrix& x_i,
                             const Vector& mu_i);

// Expected covariance between the covariance-parameter scores of two models
// evaluated at their own parameters, under a Gaussian true law with
// covariance sg whose mean both models fit exactly (delta = 0).
Matrix cross_score_cov_covblock(const EngineCache& ca, const EngineCache& cb,
                                const Matrix& sg);

// Model-expected Hessian, covariance-parameter block (beta block depends on
// the designs and is assembled by callers).
Matrix expected_hessian_covblock(const EngineCache& c);

class Engine {
 public:
  Engine(const GaussianFamily& family, const MarginScheme& scheme,
         const models::DesignSet& designs, const std::vector<Vector>& y);

  int n() const { return static_cast<int>(y_->size()); }
  int p() const { return designs_->n_beta() + family_->n_cov(); }
  int n_beta() const { return designs_->n_beta(); }
  const GaussianFamily& family() const { return *family_; }
  const MarginScheme& scheme() const { return *scheme_; }
  const models::DesignSet& designs() const { return *designs_; }

  EngineCache cache(const Vector& theta) const;

  // Total log composite likelihood; -inf when a margin covariance is not PD.
  double log_cl(const EngineCache& c) const;
  Vector score_total(const EngineCache& c) const;
  Matrix per_subject_scores(const EngineCache& c) const;  // n x p

  Matrix expected_hessian(const EngineCache& c) const;    // p x p, PD
  Matrix expected_score_cov(const EngineCache& c) const;  // at the model law
  Matrix empirical_score_cov(const EngineCache& c) const;
  Matrix observed_hessian_fd(const Vector& theta, double step = 1e-5) const;

 private:
  const GaussianFamily* family_;
  const MarginScheme* scheme_;
  const models::DesignSet* designs_;
  const std::vector<Vector>* y_;
};

}  // namespace clic::cl
