#pragma once

// Distributions of quadratic forms Q = sum_j lambda_j W_j^2 in normal
// variables: upper/lower tail probabilities by characteristic-function
// inversion (Imhof-type integrand, Gil-Pelaez inversion) and by Monte Carlo,
// plus the model-selection probabilities built on them.
//
// W ~ N(noncentrality, mixing_cov).  The CF-inversion path supports
//   - central case (any mixing covariance, reduced by eigendecomposition),
//   - noncentral case with identity mixing covariance;
// the general noncentral+correlated case is Monte Carlo only.

#include <cstdint>
#include <optional>

#include "clic/types.hpp"

namespace clic::qf {

struct QuadFormLaw {
  Vector lambdas;                       // eigenvalue weights, m >= 1
  std::optional<Vector> noncentrality;  // mean of W, default zero
  std::optional<Matrix> mixing_cov;     // covariance of W, default identity

  void validate() const;  // throws std::invalid_argument
  bool central() const;
  bool identity_mixing() const;
};

enum class TailMethod { CfInversion, MonteCarlo };

struct TailQuery {
  double threshold = 0.0;
  bool upper = true;
  TailMethod method = TailMethod::CfInversion;
  long mc_draws = 1000000;
  std::uint64_t mc_seed = 0;
  // Quadrature controls: target absolute error, plus optional manual
  // overrides for the oscillatory split point and the length of the
  // adaptively integrated head interval.
  double target_abs_err = 1e-6;
  double step = 0.0;        // > 0 overrides the head/tail split point
  double truncation = 0.0;  // > 0 overrides the head interval bound
};

struct ProbResult {
  double prob = 0.0;
  double abs_err = 0.0;  // achieved error estimate
};

// P(Q > c) for upper, P(Q < c) for lower.
ProbResult tail_prob(const QuadFormLaw& law, const TailQuery& query);

struct McResult {
  double prob = 0.0;
  double se = 0.0;  // binomial standard error
};

// Independent Monte Carlo estimate of the same upper-tail probability.
McResult mc_oracle(const QuadFormLaw& law, double threshold, long draws,
                   std::uint64_t seed);

// P(lambda_1 U_1 + ... + lambda_m U_m < 2 (lambda_1+...+lambda_m)) with
// U_j iid chi-square(1).  Requires lambda_j >= 0, not all zero.
double selection_prob_c1(const Vector& lambdas, double target_abs_err = 1e-7);

// Same event with threshold c * sum(lambda) instead of 2 * sum(lambda).
double selection_prob_threshold(const Vector& lambdas, double c,
                                double target_abs_err = 1e-7);

}  // namespace clic::qf
