#include "clic/jackknife.hpp"

#include <cmath>
#include <sstream>

namespace clic::cl {

namespace {

Vector natural_vector(const GaussianFamily& family, const Vector& theta,
                      int nbeta, std::vector<std::string>* names) {
  const auto nat = family.natural_params(theta.tail(theta.size() - nbeta));
  Vector out(nbeta + nat.size());
  if (names) names->clear();
  for (int j = 0; j < nbeta; ++j) {
    out[j] = theta[j];
    if (names) names->push_back("beta" + std::to_string(j));
  }
  for (std::size_t j = 0; j < nat.size(); ++j) {
    out[nbeta + j] = nat[j].second;
    if (names) names->push_back(nat[j].first);
  }
  return out;
}

}  // namespace

JackknifeResult jackknife(const GaussianFamily& family,
                          const MarginScheme& scheme,
                          const models::DesignSet& designs,
                          const std::vector<Vector>& y,
                          const GodambeEstimate& full_fit) {
  const int n = designs.n();
  if (n < 10) throw std::invalid_argument("jackknife: need at least 10 subjects");
  const int p = static_cast<int>(full_fit.theta.size());

  JackknifeResult res;
  res.estimate = full_fit.theta;
  res.deletion_estimates.resize(n, p);

  FitOptions opts;
  opts.init = full_fit.theta;
  opts.compute_observed = false;

  Matrix natural(n, 0);
  for (int i = 0; i < n; ++i) {
    const models::DesignSet di = designs.without_subject(i);
    std::vector<Vector> yi;
    yi.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) yi.push_back(y[j]);
    GodambeEstimate est;
    try {
      est = fit(family, scheme, di, yi, opts);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "jackknife: deletion refit failed for subject index " << i << ": "
          << e.what();
      throw NumericalError(msg.str());
    }
    res.deletion_estimates.row(i) = est.theta.transpose();
    const Vector nat = natural_vector(family, est.theta, full_fit.n_beta,
                                      i == 0 ? &res.natural_names : nullptr);
    if (natural.cols() == 0) natural.resize(n, nat.size());
    natural.row(i) = nat.transpose();
  }

  const double factor = static_cast<double>(n - 1) / n;
  auto se_of = [&](const Matrix& m) {
    const Eigen::RowVectorXd mean = m.colwise().mean();
    Vector out(m.cols());
    for (int k = 0; k < m.cols(); ++k)
      out[k] = std::sqrt(factor * (m.col(k).array() - mean[k]).square().sum());
    return out;
  };
  res.se = se_of(res.deletion_estimates);
  res.natural_se = se_of(natural);
  res.natural_estimate =
      natural_vector(family, full_fit.theta, full_fit.n_beta, nullptr);
  return res;
}

}  // namespace clic::cl
