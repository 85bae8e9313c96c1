#include "clic/fit.hpp"

#include <cmath>
#include <sstream>

namespace clic::cl {

Matrix GodambeEstimate::sandwich() const {
  const Matrix hinv = h_expected.ldlt().solve(
      Matrix::Identity(h_expected.rows(), h_expected.cols()));
  return hinv * j_expected * hinv;
}

Vector GodambeEstimate::sandwich_se() const {
  return (sandwich().diagonal() / n).cwiseSqrt();
}

Vector starting_point(const GaussianFamily& family,
                      const models::DesignSet& designs,
                      const std::vector<Vector>& y) {
  const int nb = designs.n_beta();
  const int d = designs.d();
  Matrix xtx = Matrix::Zero(nb, nb);
  Vector xty = Vector::Zero(nb);
  for (int i = 0; i < designs.n(); ++i) {
    xtx += designs.x[i].transpose() * designs.x[i];
    xty += designs.x[i].transpose() * y[i];
  }
  const Vector beta = xtx.ldlt().solve(xty);
  Matrix resid_cov = Matrix::Zero(d, d);
  for (int i = 0; i < designs.n(); ++i) {
    const Vector r = y[i] - designs.x[i] * beta;
    resid_cov += r * r.transpose();
  }
  resid_cov /= designs.n();
  const Vector tc = family.start_cov(resid_cov);
  Vector theta(nb + tc.size());
  theta << beta, tc;
  return theta;
}

GodambeEstimate fit(const GaussianFamily& family, const MarginScheme& scheme,
                    const models::DesignSet& designs,
                    const std::vector<Vector>& y, const FitOptions& opts) {
  Engine eng(family, scheme, designs, y);
  const int n = eng.n();
  const int p = eng.p();
  if (n < p)
    throw std::invalid_argument("fit: need at least as many subjects as parameters");

  Vector theta = opts.init ? *opts.init : starting_point(family, designs, y);
  if (theta.size() != p)
    throw std::invalid_argument("fit: starting point has wrong length");

  EngineCache c = eng.cache(theta);
  double f = eng.log_cl(c);
  if (!std::isfinite(f))
    throw NumericalError("fit: starting point gives non-PD margin covariance");

  Vector g = eng.score_total(c);
  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iter; ++iter) {
    const double gnorm = g.cwiseAbs().maxCoeff();
    if (gnorm <= opts.grad_tol * std::max(1.0, std::abs(f))) {
      converged = true;
      break;
    }
    const Matrix h = static_cast<double>(n) * eng.expected_hessian(c);
    Vector step;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Matrix hr = h;
      if (ridge > 0.0) hr += ridge * Matrix::Identity(p, p);
      Eigen::LDLT<Matrix> ldlt(hr);
      step = ldlt.solve(g);
      if (ldlt.info() == Eigen::Success && step.allFinite() &&
          g.dot(step) > 0.0)
        break;
      ridge = (ridge == 0.0) ? 1e-8 * h.diagonal().cwiseAbs().maxCoeff()
                             : 10.0 * ridge;
      step.setZero();
    }
    if (step.cwiseAbs().maxCoeff() == 0.0)
      throw NumericalError("fit: could not compute an ascent direction");

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 50; ++ls, alpha *= 0.5) {
      const Vector trial = theta + alpha * step;
      EngineCache ct = eng.cache(trial);
      if (!ct.pd) continue;
      const double ft = eng.log_cl(ct);
      if (!std::isfinite(ft)) continue;
      if (ft >= f - 1e-12 * std::abs(f)) {
        // require genuine progress except at a flat optimum
        if (ft > f || alpha == 1.0) {
          theta = trial;
          c = std::move(ct);
          f = ft;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // no improving step along the Newton direction; treat tiny gradients
      // as converged, otherwise report failure
      if (gnorm <= 1e-5 * std::max(1.0, std::abs(f))) {
        converged = true;
        break;
      }
      std::ostringstream msg;
      msg << "fit: line search failed at iteration " << iter
          << " (|grad|_inf = " << gnorm << ", logCL = " << f << ")";
      throw NumericalError(msg.str());
    }
    g = eng.score_total(c);
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "fit: no convergence after " << opts.max_iter
        << " iterations (|grad|_inf = " << g.cwiseAbs().maxCoeff()
        << ", logCL = " << f << ", last iterate retained)";
    throw NumericalError(msg.str());
  }

  // canonical representative (flip Cholesky column signs)
  {
    const int nb = eng.n_beta();
    Vector tc = family.canonicalize(theta.tail(p - nb));
    theta.tail(p - nb) = tc;
    c = eng.cache(theta);
  }

  GodambeEstimate est;
  est.theta = theta;
  est.log_cl = eng.log_cl(c);
  est.n = n;
  est.n_beta = eng.n_beta();
  est.iterations = iter;
  est.family = family.name();
  est.scheme = scheme.name;
  est.boundary = family.near_boundary(theta.tail(p - eng.n_beta()));

  est.h_expected = eng.expected_hessian(c);
  est.j_expected = eng.expected_score_cov(c);
  est.penalty =
      (est.h_expected.ldlt().solve(est.j_expected)).trace();
  if (opts.compute_observed) {
    est.h_observed = eng.observed_hessian_fd(theta, opts.fd_step);
    est.j_empirical = eng.empirical_score_cov(c);
    est.penalty_empirical =
        (est.h_observed.ldlt().solve(est.j_empirical)).trace();
  }
  return est;
}

Matrix per_subject_scores(const GaussianFamily& family,
                          const MarginScheme& scheme,
                          const models::DesignSet& designs,
                          const std::vector<Vector>& y, const Vector& theta) {
  Engine eng(family, scheme, designs, y);
  return eng.per_subject_scores(eng.cache(theta));
}

}  // namespace clic::cl
