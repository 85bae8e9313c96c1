#include "clic/select.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clic/qfdist.hpp"

namespace clic::select {

PenaltyMode penalty_mode_from(const std::string& name) {
  if (name == "expected") return PenaltyMode::ExpectedAtFit;
  if (name == "empirical") return PenaltyMode::Empirical;
  if (name == "classical") return PenaltyMode::ClassicalP;
  throw std::invalid_argument("unknown penalty mode: " + name);
}

CriterionReport criteria(const std::vector<GodambeEstimate>& fits, int n,
                         PenaltyMode mode, double tie_tol) {
  if (fits.empty()) throw std::invalid_argument("criteria: no fits");
  const std::string& scheme = fits.front().scheme;
  for (const auto& f : fits) {
    if (f.scheme != scheme)
      throw std::invalid_argument(
          "criteria: candidates must share the same margin scheme (got '" +
          f.scheme + "' vs '" + scheme + "')");
    if (f.n != n)
      throw std::invalid_argument("criteria: fit sample size != n");
  }
  const int k = static_cast<int>(fits.size());
  CriterionReport rep;
  rep.n = n;
  rep.log_cl.resize(k);
  rep.penalty.resize(k);
  rep.claic.resize(k);
  rep.clbic.resize(k);
  for (int i = 0; i < k; ++i) {
    const auto& f = fits[i];
    rep.model_names.push_back(f.family);
    double pen = 0.0;
    switch (mode) {
      case PenaltyMode::ExpectedAtFit: pen = f.penalty; break;
      case PenaltyMode::Empirical:
        if (f.h_observed.size() == 0)
          throw std::invalid_argument(
              "criteria: empirical penalty requested but fit has no observed "
              "H (compute_observed was off)");
        pen = f.penalty_empirical;
        break;
      case PenaltyMode::ClassicalP: pen = static_cast<double>(f.theta.size()); break;
    }
    rep.log_cl[i] = f.log_cl;
    rep.penalty[i] = pen;
    rep.claic[i] = -2.0 * f.log_cl + 2.0 * pen;
    rep.clbic[i] = -2.0 * f.log_cl + std::log(static_cast<double>(n)) * pen;
  }
  auto pick = [&](const Vector& v, int* choice, std::vector<int>* ties) {
    int arg = 0;
    for (int i = 1; i < k; ++i)
      if (v[i] < v[arg]) arg = i;
    *choice = arg;
    for (int i = 0; i < k; ++i)
      if (v[i] - v[arg] <= tie_tol * std::max(1.0, std::abs(v[arg])))
        ties->push_back(i);
  };
  pick(rep.claic, &rep.claic_choice, &rep.claic_ties);
  pick(rep.clbic, &rep.clbic_choice, &rep.clbic_ties);
  return rep;
}

double lr_statistic(const GodambeEstimate& fit1, const GodambeEstimate& fit2) {
  if (fit1.scheme != fit2.scheme)
    throw std::invalid_argument("lr_statistic: fits use different schemes");
  if (fit1.n != fit2.n)
    throw std::invalid_argument("lr_statistic: fits use different data sizes");
  const double lr = fit2.log_cl - fit1.log_cl;
  const double tol = 1e-6 * std::max(1.0, std::abs(fit2.log_cl));
  if (lr < -tol) {
    std::ostringstream msg;
    msg << "lr_statistic: nested log-CL difference is negative (" << lr
        << "); the larger model's optimizer likely failed";
    throw NumericalError(msg.str());
  }
  return lr;
}

double NestedPair::penalty1() const { return h1.ldlt().solve(j11).trace(); }
double NestedPair::penalty2() const { return h2.ldlt().solve(j22).trace(); }

Matrix bmatrix(const NestedPair& blocks) {
  const int p1 = blocks.p1(), p2 = blocks.p2();
  if (blocks.j11.rows() != p1 || blocks.j22.rows() != p2 ||
      blocks.j12.rows() != p1 || blocks.j12.cols() != p2 ||
      blocks.j21.rows() != p2 || blocks.j21.cols() != p1)
    throw std::invalid_argument("bmatrix: inconsistent block shapes");
  Eigen::LDLT<Matrix> h1(blocks.h1), h2(blocks.h2);
  if (h1.info() != Eigen::Success || h2.info() != Eigen::Success)
    throw NumericalError("bmatrix: singular H block");
  const Matrix h1inv = h1.solve(Matrix::Identity(p1, p1));
  const Matrix h2inv = h2.solve(Matrix::Identity(p2, p2));
  Matrix b(p1 + p2, p1 + p2);
  b.topLeftCorner(p1, p1) = -blocks.j11 * h1inv;
  b.topRightCorner(p1, p2) = blocks.j12 * h2inv;
  b.bottomLeftCorner(p2, p1) = -blocks.j21 * h1inv;
  b.bottomRightCorner(p2, p2) = blocks.j22 * h2inv;
  return b;
}

EigenReport bmatrix_eigenvalues(const Matrix& b, double rel_tol) {
  if (!b.allFinite())
    throw std::invalid_argument("bmatrix_eigenvalues: non-finite input");
  Eigen::EigenSolver<Matrix> es(b);
  if (es.info() != Eigen::Success)
    throw NumericalError("bmatrix_eigenvalues: eigensolver failed");
  const auto& ev = es.eigenvalues();
  EigenReport rep;
  double radius = 0.0;
  for (int i = 0; i < ev.size(); ++i) radius = std::max(radius, std::abs(ev[i]));
  std::vector<double> real_parts, retained;
  for (int i = 0; i < ev.size(); ++i) {
    real_parts.push_back(ev[i].real());
    if (radius > 0.0)
      rep.max_imag_ratio =
          std::max(rep.max_imag_ratio, std::abs(ev[i].imag()) / radius);
    if (std::abs(ev[i]) > rel_tol * radius)
      retained.push_back(ev[i].real());
    else
      ++rep.n_dropped;
  }
  std::sort(real_parts.rbegin(), real_parts.rend());
  std::sort(retained.rbegin(), retained.rend());
  rep.all_real = Eigen::Map<Vector>(real_parts.data(), real_parts.size());
  rep.lambdas = Eigen::Map<Vector>(retained.data(), retained.size());
  return rep;
}

SelectionProbs theoretical_selection_probs(const Vector& lambdas, double n) {
  if (n <= 1.0)
    throw std::invalid_argument("theoretical_selection_probs: need n > 1");
  SelectionProbs p;
  p.claic = qf::selection_prob_c1(lambdas);
  p.clbic = qf::selection_prob_threshold(lambdas, std::log(n));
  return p;
}

// ---------------------------------------------------------------------------
// XMoments
// ---------------------------------------------------------------------------

XMoments XMoments::from_designs(const models::DesignSet& designs) {
  designs.validate();
  XMoments xm;
  xm.exact_ = false;
  xm.nbeta_ = designs.n_beta();
  xm.x_ = designs.x;
  return xm;
}

XMoments XMoments::iid_rows(int d, const Matrix& sigma_x, double var_scale) {
  if (sigma_x.rows() != sigma_x.cols())
    throw std::invalid_argument("XMoments: sigma_x must be square");
  XMoments xm;
  xm.exact_ = true;
  xm.nbeta_ = static_cast<int>(sigma_x.rows()) + 1;
  xm.sigma_x_ = var_scale * sigma_x;
  (void)d;
  return xm;
}

Matrix XMoments::quad(const Matrix& m) const {
  if (!exact_) {
    Matrix out = Matrix::Zero(nbeta_, nbeta_);
    for (const auto& xi : x_) out += xi.transpose() * m * xi;
    return out / static_cast<double>(x_.size());
  }
  // x = [1 | Xi], rows of Xi iid mean zero with covariance sigma_x_:
  // E[x' m x] = [[1'm1, 0], [0, tr(m) sigma_x_]].
  Matrix out = Matrix::Zero(nbeta_, nbeta_);
  out(0, 0) = m.sum();
  out.bottomRightCorner(nbeta_ - 1, nbeta_ - 1) = m.trace() * sigma_x_;
  return out;
}

// ---------------------------------------------------------------------------
// Expected blocks
// ---------------------------------------------------------------------------

NestedPair expected_blocks_closed(const GaussianFamily& fam1, const Vector& tc1,
                                  const GaussianFamily& fam2, const Vector& tc2,
                                  const MarginScheme& scheme,
                                  const Matrix& sigma_g, const XMoments& xm) {
  const int nb = xm.n_beta();
  Vector theta1(nb + fam1.n_cov()), theta2(nb + fam2.n_cov());
  theta1.setZero();
  theta2.setZero();
  theta1.tail(fam1.n_cov()) = tc1;
  theta2.tail(fam2.n_cov()) = tc2;
  EngineCache c1 = cl::make_cache(fam1, scheme, theta1, nb);
  EngineCache c2 = cl::make_cache(fam2, scheme, theta2, nb);
  if (!c1.pd || !c2.pd)
    throw NumericalError("expected_blocks_closed: non-PD covariance");
  const double scale = sigma_g.cwiseAbs().maxCoeff();
  if ((c1.omega - sigma_g).cwiseAbs().maxCoeff() > 1e-8 * scale ||
      (c2.omega - sigma_g).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument(
        "expected_blocks_closed: models do not reproduce the true covariance "
        "at the given parameters (misspecified case needs the Monte Carlo "
        "mode)");

  NestedPair blocks;
  const int q1 = fam1.n_cov(), q2 = fam2.n_cov();
  const Matrix hb = xm.quad(c1.a1);  // A1 identical for both models here
  const Matrix jb = xm.quad(c1.a1 * sigma_g * c1.a1);

  auto assemble_h = [&](const EngineCache& c) {
    Matrix h = Matrix::Zero(c.p(), c.p());
    h.topLeftCorner(nb, nb) = hb;
    h.bottomRightCorner(c.ncov, c.ncov) = cl::expected_hessian_covblock(c);
    return h;
  };
  blocks.h1 = assemble_h(c1);
  blocks.h2 = assemble_h(c2);

  auto assemble_j = [&](const EngineCache& ca, const EngineCache& cb) {
    Matrix j = Matrix::Zero(ca.p(), cb.p());
    j.topLeftCorner(nb, nb) = xm.quad(ca.a1 * sigma_g * cb.a1);
    j.bottomRightCorner(ca.ncov, cb.ncov) =
        cl::cross_score_cov_covblock(ca, cb, sigma_g);
    return j;
  };
  blocks.j11 = assemble_j(c1, c1);
  blocks.j22 = assemble_j(c2, c2);
  blocks.j12 = assemble_j(c1, c2);
  blocks.j21 = blocks.j12.transpose();
  (void)jb;
  (void)q1;
  (void)q2;
  return blocks;
}

McBlocksResult expected_blocks_mc(const GaussianFamily& fam1,
                                  const Vector& theta1,
                                  const GaussianFamily& fam2,
                                  const Vector& theta2,
                                  const MarginScheme& scheme,
                                  const models::TrueLaw& truth,
                                  const McBlocksOptions& opts) {
  if (opts.draws < 1000)
    throw std::invalid_argument("expected_blocks_mc: need >= 1000 draws");
  const int d = fam1.dim();
  const int nb = static_cast<int>(truth.beta.size());
  const Matrix sg = truth.implied_cov();
  auto ctx1 = cl::make_under_ctx(fam1, scheme, theta1, nb, sg);
  auto ctx2 = cl::make_under_ctx(fam2, scheme, theta2, nb, sg);
  const int p1 = ctx1.cache.p(), p2 = ctx2.cache.p();
  const int ptot = p1 + p2;

  models::LawSampler sampler(truth);
  Rng root = Rng(opts.seed).stream(0xB10C);

  Matrix jsum = Matrix::Zero(ptot, ptot);
  Matrix jsumsq = Matrix::Zero(ptot, ptot);
  Matrix h1 = Matrix::Zero(p1, p1), h2 = Matrix::Zero(p2, p2);
  Vector s(ptot);
  for (long it = 0; it < opts.draws; ++it) {
    Rng g = root.stream(static_cast<std::uint64_t>(it));
    const Matrix x = models::covariate_matrix(opts.covariates, d,
                                              opts.n_covariates, g,
                                              opts.covariate_t_df);
    const Vector y = sampler.draw(x, g);
    s.head(p1) = cl::subject_score(ctx1.cache, x, y);
    s.tail(p2) = cl::subject_score(ctx2.cache, x, y);
    jsum += s * s.transpose();
    jsumsq += (s * s.transpose()).cwiseAbs2();
    const Vector mu = truth.mean(x);
    h1 += cl::subject_hessian_under(ctx1, x, mu);
    h2 += cl::subject_hessian_under(ctx2, x, mu);
  }
  const double nd = static_cast<double>(opts.draws);
  Matrix j = jsum / nd;
  Matrix var = (jsumsq / nd - j.cwiseAbs2()) / nd;

  McBlocksResult res;
  res.draws = opts.draws;
  res.max_j_se = var.cwiseMax(0.0).cwiseSqrt().maxCoeff();
  res.blocks.h1 = h1 / nd;
  res.blocks.h2 = h2 / nd;
  res.blocks.j11 = j.topLeftCorner(p1, p1);
  res.blocks.j12 = j.topRightCorner(p1, p2);
  res.blocks.j21 = j.bottomLeftCorner(p2, p1);
  res.blocks.j22 = j.bottomRightCorner(p2, p2);
  return res;
}

Vector divergence_minimizer(const GaussianFamily& fam,
                            const MarginScheme& scheme,
                            const models::DesignSet& designs,
                            const models::TrueLaw& truth, const Vector& start,
                            double tol, int max_iter) {
  const int nb = designs.n_beta();
  const Matrix sg = truth.implied_cov();
  const int n = designs.n();
  std::vector<Vector> mu(n);
  for (int i = 0; i < n; ++i) mu[i] = truth.mean(designs.x[i]);

  Vector theta = start;
  for (int iter = 0; iter < max_iter; ++iter) {
    auto ctx = cl::make_under_ctx(fam, scheme, theta, nb, sg);
    Vector g = Vector::Zero(theta.size());
    for (int i = 0; i < n; ++i)
      g += cl::subject_score_under(ctx, designs.x[i], mu[i]);
    g /= n;
    if (g.cwiseAbs().maxCoeff() <= tol) return theta;
    // model-expected information as the step metric
    Matrix h = Matrix::Zero(theta.size(), theta.size());
    for (int i = 0; i < n; ++i) {
      const Matrix& x = designs.x[i];
      h.topLeftCorner(nb, nb) += x.transpose() * ctx.cache.a1 * x;
    }
    h.topLeftCorner(nb, nb) /= n;
    h.bottomRightCorner(fam.n_cov(), fam.n_cov()) =
        cl::expected_hessian_covblock(ctx.cache);
    Vector step = h.ldlt().solve(g);
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      Vector trial = theta + alpha * step;
      EngineCache ct = cl::make_cache(fam, scheme, trial, nb);
      if (ct.pd) {
        theta = trial;
        break;
      }
    }
  }
  throw NumericalError(
      "divergence_minimizer: expected-score solve did not converge");
}

LocalAlternativeProb selection_prob_local_alternative(
    const NestedPair& blocks, const Vector& eps, double threshold_factor,
    long draws, std::uint64_t seed) {
  const int p1 = blocks.p1(), p2 = blocks.p2();
  const int m = p2 - p1;
  if (m <= 0)
    throw std::invalid_argument("selection_prob_local_alternative: p2 <= p1");
  if (eps.size() != m)
    throw std::invalid_argument("selection_prob_local_alternative: eps size");
  // Profile quadratic form in the nested direction (last m coordinates of
  // model 2 under the shared parameterization).
  const Matrix h_tt = blocks.h2.topLeftCorner(p1, p1);
  const Matrix h_tz = blocks.h2.topRightCorner(p1, m);
  const Matrix h_zz = blocks.h2.bottomRightCorner(m, m);
  const Matrix mq = h_zz - h_tz.transpose() * h_tt.ldlt().solve(h_tz);
  const Matrix h2inv =
      blocks.h2.ldlt().solve(Matrix::Identity(p2, p2));
  const Matrix v = (h2inv * blocks.j22 * h2inv).bottomRightCorner(m, m);
  const double threshold =
      threshold_factor * (blocks.penalty2() - blocks.penalty1());

  Eigen::LLT<Matrix> llt(v + 1e-12 * Matrix::Identity(m, m));
  if (llt.info() != Eigen::Success)
    throw NumericalError("selection_prob_local_alternative: V not PD");
  const Matrix chol = llt.matrixL();
  Rng rng = Rng(seed).stream(0xC2C3);
  long hits = 0;
  Vector z(m);
  for (long i = 0; i < draws; ++i) {
    for (int j = 0; j < m; ++j) z[j] = rng.normal();
    const Vector w = eps + chol * z;
    if (w.dot(mq * w) < threshold) ++hits;
  }
  LocalAlternativeProb out;
  out.prob = static_cast<double>(hits) / static_cast<double>(draws);
  out.se = std::sqrt(std::max(out.prob * (1.0 - out.prob), 1e-300) /
                     static_cast<double>(draws));
  return out;
}

}  // namespace clic::select
