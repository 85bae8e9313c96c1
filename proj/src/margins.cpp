#include "clic/margins.hpp"

#include <algorithm>

namespace clic::cl {

MarginScheme MarginScheme::full(int d) {
  std::vector<int> all(d);
  for (int i = 0; i < d; ++i) all[i] = i;
  MarginScheme s = from_margins({all}, {1.0}, d);
  s.name = "full";
  return s;
}

MarginScheme MarginScheme::pairwise(int d) {
  std::vector<std::vector<int>> m;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) m.push_back({j, k});
  MarginScheme s = from_margins(m, std::vector<double>(m.size(), 1.0), d);
  s.name = "bcl";
  return s;
}

MarginScheme MarginScheme::trivariate(int d) {
  std::vector<std::vector<int>> m;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int k = j + 1; k < d; ++k) m.push_back({i, j, k});
  MarginScheme s = from_margins(m, std::vector<double>(m.size(), 1.0), d);
  s.name = "tcl";
  return s;
}

MarginScheme MarginScheme::named(const std::string& name, int d) {
  if (name == "full") return full(d);
  if (name == "bcl" || name == "pairwise") return pairwise(d);
  if (name == "tcl" || name == "trivariate") return trivariate(d);
  throw std::invalid_argument("unknown margin scheme: " + name);
}

MarginScheme MarginScheme::from_margins(std::vector<std::vector<int>> margins,
                                        std::vector<double> weights, int d) {
  MarginScheme s;
  s.margins = std::move(margins);
  s.weights = std::move(weights);
  s.validate(d);
  return s;
}

void MarginScheme::validate(int d) const {
  if (margins.empty()) throw std::invalid_argument("MarginScheme: no margins");
  if (weights.size() != margins.size())
    throw std::invalid_argument("MarginScheme: weights/margins size mismatch");
  for (const auto& m : margins) {
    if (m.empty()) throw std::invalid_argument("MarginScheme: empty margin");
    if (static_cast<int>(m.size()) > d)
      throw std::invalid_argument("MarginScheme: margin larger than d");
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] < 0 || m[i] >= d)
        throw std::invalid_argument("MarginScheme: index out of range");
      if (i > 0 && m[i] <= m[i - 1])
        throw std::invalid_argument(
            "MarginScheme: margin indexes must be strictly increasing");
    }
  }
  for (double w : weights)
    if (!(w > 0.0))
      throw std::invalid_argument("MarginScheme: weights must be positive");
}

MarginScheme MarginScheme::scaled_weights(double a) const {
  if (!(a > 0.0)) throw std::invalid_argument("scaled_weights: a must be > 0");
  MarginScheme s = *this;
  for (double& w : s.weights) w *= a;
  return s;
}

}  // namespace clic::cl
