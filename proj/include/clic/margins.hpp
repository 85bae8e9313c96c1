#pragma once

#include <string>
#include <vector>

#include "clic/types.hpp"

namespace clic::cl {

// A set of margins S_q with positive weights w_q defining a composite
// likelihood.  FULL is the single margin {1..d}; BCL all pairs; TCL all
// triples.  Margins with duplicated or out-of-range indexes are rejected
// at construction.
struct MarginScheme {
  std::vector<std::vector<int>> margins;  // 0-based, strictly increasing
  std::vector<double> weights;
  std::string name = "custom";

  static MarginScheme full(int d);
  static MarginScheme pairwise(int d);    // BCL
  static MarginScheme trivariate(int d);  // TCL
  static MarginScheme named(const std::string& name, int d);
  static MarginScheme from_margins(std::vector<std::vector<int>> margins,
                                   std::vector<double> weights,
                                   int d);

  int count() const { return static_cast<int>(margins.size()); }
  void validate(int d) const;
  MarginScheme scaled_weights(double a) const;
};

}  // namespace clic::cl
