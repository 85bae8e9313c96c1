#pragma once

// Delete-one jackknife standard errors for composite-likelihood fits:
// refit with each subject removed (warm-started at the full-data estimate),
// SE_k = sqrt((n-1)/n * sum_i (theta_{(-i),k} - mean_k)^2).

#include <string>
#include <vector>

#include "clic/fit.hpp"

namespace clic::cl {

struct JackknifeResult {
  Vector estimate;            // full-data theta-hat
  Vector se;                  // per raw parameter
  Matrix deletion_estimates;  // n x p
  std::vector<std::string> natural_names;
  Vector natural_estimate;    // derived (SDs, correlations) at theta-hat
  Vector natural_se;          // jackknife SE on the derived scale
};

JackknifeResult jackknife(const GaussianFamily& family,
                          const MarginScheme& scheme,
                          const models::DesignSet& designs,
                          const std::vector<Vector>& y,
                          const GodambeEstimate& full_fit);

}  // namespace clic::cl
