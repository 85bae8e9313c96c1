#pragma once

// Maximization of the composite likelihood: Newton steps on the analytic
// gradient preconditioned by the expected information, with backtracking
// line search and ridge fallback on ill-conditioned curvature.

#include <optional>
#include <string>

#include "clic/engine.hpp"

namespace clic::cl {

struct FitOptions {
  double grad_tol = 1e-8;  // converged when ||g||_inf <= tol * max(1, |logCL|)
  int max_iter = 200;
  std::optional<Vector> init;     // warm start (full parameter vector)
  bool compute_observed = true;   // FD observed Hessian + empirical J
  double fd_step = 1e-5;
};

struct GodambeEstimate {
  Vector theta;  // (beta, covariance parameters), sign-canonicalized
  double log_cl = 0.0;
  int n = 0;
  int n_beta = 0;

  // Closed-form expected H and J evaluated at theta-hat given the realized
  // designs (the mode used for criterion penalties and table reproduction).
  Matrix h_expected, j_expected;
  double penalty = 0.0;  // tr(J_expected H_expected^{-1})

  // Data-based versions: H by central differences of the analytic score,
  // J from per-subject score outer products.
  Matrix h_observed, j_empirical;
  double penalty_empirical = 0.0;

  int iterations = 0;
  bool boundary = false;  // variance component at / near zero
  std::string family, scheme;

  Matrix sandwich() const;  // H^{-1} J H^{-1} (expected mode)
  Vector sandwich_se() const;  // sqrt(diag(sandwich)/n)
};

GodambeEstimate fit(const GaussianFamily& family, const MarginScheme& scheme,
                    const models::DesignSet& designs,
                    const std::vector<Vector>& y, const FitOptions& opts = {});

// Starting value used by fit: pooled OLS for beta, family moment start for
// the covariance parameters.
Vector starting_point(const GaussianFamily& family,
                      const models::DesignSet& designs,
                      const std::vector<Vector>& y);

// Rows are the per-subject composite scores at the fitted parameters.
Matrix per_subject_scores(const GaussianFamily& family,
                          const MarginScheme& scheme,
                          const models::DesignSet& designs,
                          const std::vector<Vector>& y, const Vector& theta);

}  // namespace clic::cl
