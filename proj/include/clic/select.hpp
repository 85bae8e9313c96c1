#pragma once

// Information criteria, likelihood-ratio analysis for nested model pairs,
// the B-matrix and its eigenvalues, and theoretical selection probabilities.

#include <optional>
#include <string>
#include <vector>

#include "clic/fit.hpp"
#include "clic/models.hpp"

namespace clic::select {

using cl::Engine;
using cl::EngineCache;
using cl::GaussianFamily;
using cl::GodambeEstimate;
using cl::MarginScheme;

enum class PenaltyMode {
  ExpectedAtFit,  // tr(J H^{-1}) with closed-form J,H at theta-hat
  Empirical,      // observed H (FD of score) and per-subject score covariance
  ClassicalP      // penalty = number of parameters (classical AIC/BIC)
};

PenaltyMode penalty_mode_from(const std::string& name);

struct CriterionReport {
  std::vector<std::string> model_names;
  Vector log_cl, penalty, claic, clbic;
  int n = 0;
  int claic_choice = -1, clbic_choice = -1;  // argmin (smallest index on ties)
  std::vector<int> claic_ties, clbic_ties;   // all indexes attaining the min
};

// All fits must come from the same margin scheme and the same data size.
CriterionReport criteria(const std::vector<GodambeEstimate>& fits, int n,
                         PenaltyMode mode = PenaltyMode::ExpectedAtFit,
                         double tie_tol = 1e-9);

// logCL(model 2) - logCL(model 1); model 1 nested in model 2, same scheme.
// Throws NumericalError when negative beyond tolerance.
double lr_statistic(const GodambeEstimate& fit1, const GodambeEstimate& fit2);

struct NestedPair {
  Matrix h1, h2;              // per-subject expected Hessians, PD
  Matrix j11, j12, j21, j22;  // score covariance blocks
  int p1() const { return static_cast<int>(h1.rows()); }
  int p2() const { return static_cast<int>(h2.rows()); }
  double penalty1() const;  // tr(j11 h1^{-1})
  double penalty2() const;
};

Matrix bmatrix(const NestedPair& blocks);

struct EigenReport {
  Vector lambdas;          // retained nonzero eigenvalues, descending
  Vector all_real;         // all real parts, descending
  double max_imag_ratio = 0.0;  // max |imag| / spectral radius
  int n_dropped = 0;       // eigenvalues below the zero threshold
};

EigenReport bmatrix_eigenvalues(const Matrix& b, double rel_tol = 1e-6);

struct SelectionProbs {
  double claic = 0.0;  // C1 = P(sum lam U < 2 sum lam)
  double clbic = 0.0;  // threshold log(n) instead of 2
};

SelectionProbs theoretical_selection_probs(const Vector& lambdas, double n);

// ---------------------------------------------------------------------------
// Expected (theoretical) H and J blocks for a nested model pair.
// ---------------------------------------------------------------------------

// E[x' M x] under the covariate design distribution, exactly (intercept
// column plus iid rows) or empirically from realized designs.
class XMoments {
 public:
  static XMoments from_designs(const models::DesignSet& designs);
  // Rows of the covariate block iid with mean zero, covariance
  // var_scale * sigma_x (var_scale > 1 for t covariates).
  static XMoments iid_rows(int d, const Matrix& sigma_x, double var_scale = 1.0);

  Matrix quad(const Matrix& m) const;  // nbeta x nbeta
  int n_beta() const { return nbeta_; }

 private:
  bool exact_ = false;
  int nbeta_ = 0;
  Matrix sigma_x_;  // scaled
  std::vector<Matrix> x_;  // empirical fallback
};

// Closed-form blocks for a correctly-specified null: both models evaluate to
// the true covariance sigma_g at (t1, t2) and share the mean family (their
// divergence minimizers make delta = 0).  Throws if omega(t) != sigma_g.
NestedPair expected_blocks_closed(const GaussianFamily& fam1, const Vector& tc1,
                                  const GaussianFamily& fam2, const Vector& tc2,
                                  const MarginScheme& scheme,
                                  const Matrix& sigma_g, const XMoments& xm);

struct McBlocksOptions {
  long draws = 200000;
  std::uint64_t seed = 1;
  models::CovariateSetting covariates = models::CovariateSetting::IidNormal;
  int n_covariates = 1;
  int covariate_t_df = 3;
};

struct McBlocksResult {
  NestedPair blocks;
  double max_j_se = 0.0;  // largest Monte Carlo SE across J entries
  long draws = 0;
};

// Monte Carlo blocks under an arbitrary true law: per-draw score outer
// products for J, per-draw conditional expected Hessians for H.  theta1 and
// theta2 are full parameter vectors (divergence minimizers).
McBlocksResult expected_blocks_mc(const GaussianFamily& fam1,
                                  const Vector& theta1,
                                  const GaussianFamily& fam2,
                                  const Vector& theta2,
                                  const MarginScheme& scheme,
                                  const models::TrueLaw& truth,
                                  const McBlocksOptions& opts);

// Solve E_g[score(theta)] = 0 over a fixed design sample by Newton with the
// expected information;  the expected score depends on g only through its
// first two moments.
Vector divergence_minimizer(const GaussianFamily& fam,
                            const MarginScheme& scheme,
                            const models::DesignSet& designs,
                            const models::TrueLaw& truth, const Vector& start,
                            double tol = 1e-9, int max_iter = 100);

// Monte Carlo estimate of the local-alternative selection probability
// (Theorem 3.1(3)-(4) law): P(W' M W < threshold_factor * (pen2 - pen1))
// with W ~ N(eps, V_zeta) from the profile quadratic form of the blocks.
// The nested direction is identified by the last m = p2 - p1 coordinates of
// model 2 (shared-parameterization nesting).
struct LocalAlternativeProb {
  double prob = 0.0;
  double se = 0.0;
};
LocalAlternativeProb selection_prob_local_alternative(
    const NestedPair& blocks, const Vector& eps, double threshold_factor,
    long draws, std::uint64_t seed);

}  // namespace clic::select
