#include "clic/engine.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace clic::cl {

namespace {

Matrix submatrix(const Matrix& m, const std::vector<int>& rows,
                 const std::vector<int>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(i, j) = m(rows[i], cols[j]);
  return out;
}

Vector subvector(const Vector& v, const std::vector<int>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

}  // namespace

EngineCache make_cache(const GaussianFamily& family, const MarginScheme& scheme,
                       const Vector& theta, int nbeta) {
  EngineCache c;
  c.theta = theta;
  c.d = family.dim();
  c.nbeta = nbeta;
  c.ncov = family.n_cov();
  if (theta.size() != c.nbeta + c.ncov)
    throw std::invalid_argument("make_cache: parameter vector has wrong length");
  const Vector tc = theta.tail(c.ncov);
  c.omega = family.omega(tc);
  c.gfull = family.omega_grad(tc);
  c.a1 = Matrix::Zero(c.d, c.d);
  c.margins.reserve(scheme.margins.size());
  c.const_term = 0.0;
  c.pd = true;
  for (std::size_t q = 0; q < scheme.margins.size(); ++q) {
    MarginData md;
    md.idx = scheme.margins[q];
    md.w = scheme.weights[q];
    md.omega_sub = submatrix(c.omega, md.idx, md.idx);
    Eigen::LLT<Matrix> llt(md.omega_sub);
    if (llt.info() != Eigen::Success) {
      c.pd = false;
      return c;
    }
    const int ms = static_cast<int>(md.idx.size());
    md.omega_inv = llt.solve(Matrix::Identity(ms, ms));
    md.logdet = 0.0;
    for (int j = 0; j < ms; ++j)
      md.logdet += 2.0 * std::log(Matrix(llt.matrixL())(j, j));
    md.m.reserve(c.ncov);
    md.g_sub.reserve(c.ncov);
    md.tr_om.reserve(c.ncov);
    for (int k = 0; k < c.ncov; ++k) {
      Matrix gs = submatrix(c.gfull[k], md.idx, md.idx);
      Matrix mk = md.w * (md.omega_inv * gs * md.omega_inv);
      md.tr_om.push_back((md.omega_sub.array() * mk.array()).sum());
      md.m.push_back(std::move(mk));
      md.g_sub.push_back(std::move(gs));
    }
    for (int a = 0; a < ms; ++a)
      for (int b = 0; b < ms; ++b)
        c.a1(md.idx[a], md.idx[b]) += md.w * md.omega_inv(a, b);
    c.const_term -= 0.5 * md.w * ms * std::log(2.0 * std::numbers::pi);
    c.margins.push_back(std::move(md));
  }
  return c;
}

Vector subject_score(const EngineCache& c, const Matrix& x_i,
                     const Vector& y_i) {
  const Vector r = y_i - x_i * c.theta.head(c.nbeta);
  Vector s = Vector::Zero(c.p());
  s.head(c.nbeta) = x_i.transpose() * (c.a1 * r);
  for (const auto& md : c.margins) {
    const Vector rs = subvector(r, md.idx);
    for (int k = 0; k < c.ncov; ++k)
      s[c.nbeta + k] += 0.5 * (rs.dot(md.m[k] * rs) - md.tr_om[k]);
  }
  return s;
}

UnderMomentsCtx make_under_ctx(const GaussianFamily& family,
                               const MarginScheme& scheme, const Vector& theta,
                               int nbeta, const Matrix& sg) {
  UnderMomentsCtx ctx;
  ctx.family = &family;
  ctx.cache = make_cache(family, scheme, theta, nbeta);
  if (!ctx.cache.pd)
    throw NumericalError("make_under_ctx: non-PD covariance at theta");
  ctx.hess = family.omega_hess(theta.tail(family.n_cov()));
  ctx.sg = sg;
  ctx.d0 = sg - ctx.cache.omega;
  return ctx;
}

Vector subject_score_under(const UnderMomentsCtx& ctx, const Matrix& x_i,
                           const Vector& mu_i) {
  const EngineCache& c = ctx.cache;
  const Vector delta = mu_i - x_i * c.theta.head(c.nbeta);
  Vector s = Vector::Zero(c.p());
  s.head(c.nbeta) = x_i.transpose() * (c.a1 * delta);
  for (const auto& md : c.margins) {
    const Vector ds = subvector(delta, md.idx);
    const Matrix d0s = submatrix(ctx.d0, md.idx, md.idx);
    for (int k = 0; k < c.ncov; ++k)
      s[c.nbeta + k] +=
          0.5 * ((d0s.array() * md.m[k].array()).sum() + ds.dot(md.m[k] * ds));
  }
  return s;
}

Matrix subject_hessian_under(const UnderMomentsCtx& ctx, const Matrix& x_i,
                             const Vector& mu_i) {
  const EngineCache& c = ctx.cache;
  const GaussianFamily& fam = *ctx.family;
  const Vector delta = mu_i - x_i * c.theta.head(c.nbeta);
  Matrix h = Matrix::Zero(c.p(), c.p());
  h.topLeftCorner(c.nbeta, c.nbeta) = x_i.transpose() * c.a1 * x_i;

  // beta x cov block:  x' Bop(G_k) delta, Bop(G_k) scattered from m_k.
  for (int k = 0; k < c.ncov; ++k) {
    Vector bd = Vector::Zero(c.d);
    for (const auto& md : c.margins) {
      const Vector v = md.m[k] * subvector(delta, md.idx);
      for (std::size_t a = 0; a < md.idx.size(); ++a) bd[md.idx[a]] += v[a];
    }
    const Vector cross = x_i.transpose() * bd;
    h.block(0, c.nbeta + k, c.nbeta, 1) = cross;
    h.block(c.nbeta + k, 0, 1, c.nbeta) = cross.transpose();
  }

  for (const auto& md : c.margins) {
    const Vector ds = subvector(delta, md.idx);
    const Matrix d_s = submatrix(ctx.d0, md.idx, md.idx) + ds * ds.transpose();
    for (int k = 0; k < c.ncov; ++k) {
      for (int l = k; l < c.ncov; ++l) {
        double v = 0.5 * (md.m[k].array() * md.g_sub[l].array()).sum();
        const Matrix mix = md.m[l] * md.g_sub[k] * md.omega_inv +
                           md.m[k] * md.g_sub[l] * md.omega_inv;
        v += 0.5 * (d_s.array() * mix.transpose().array()).sum();
        const Matrix& gkl = ctx.hess[fam.hess_index(k, l)];
        if (gkl.size() > 0 && gkl.cwiseAbs().maxCoeff() > 0.0) {
          const Matrix gkl_s = submatrix(gkl, md.idx, md.idx);
          const Matrix mkl = md.w * (md.omega_inv * gkl_s * md.omega_inv);
          v -= 0.5 * (d_s.array() * mkl.transpose().array()).sum();
        }
        h(c.nbeta + k, c.nbeta + l) += v;
        if (l > k) h(c.nbeta + l, c.nbeta + k) += v;
      }
    }
  }
  return h;
}

Matrix cross_score_cov_covblock(const EngineCache& ca, const EngineCache& cb,
                                const Matrix& sg) {
  Matrix j = Matrix::Zero(ca.ncov, cb.ncov);
  for (const auto& ms : ca.margins) {
    for (const auto& mt : cb.margins) {
      const Matrix w =
          ms.omega_inv * submatrix(sg, ms.idx, mt.idx) * mt.omega_inv;
      for (int k = 0; k < ca.ncov; ++k) {
        const Matrix gw = ms.g_sub[k].transpose() * w;
        for (int l = 0; l < cb.ncov; ++l) {
          j(k, l) += 0.5 * ms.w * mt.w *
                     (gw.array() * (w * mt.g_sub[l]).array()).sum();
        }
      }
    }
  }
  return j;
}

Matrix expected_hessian_covblock(const EngineCache& c) {
  Matrix h = Matrix::Zero(c.ncov, c.ncov);
  for (const auto& md : c.margins) {
    for (int k = 0; k < c.ncov; ++k)
      for (int l = k; l < c.ncov; ++l) {
        const double v = 0.5 * (md.m[k].array() * md.g_sub[l].array()).sum();
        h(k, l) += v;
        if (l > k) h(l, k) += v;
      }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

Engine::Engine(const GaussianFamily& family, const MarginScheme& scheme,
               const models::DesignSet& designs, const std::vector<Vector>& y)
    : family_(&family), scheme_(&scheme), designs_(&designs), y_(&y) {
  designs.validate();
  scheme.validate(designs.d());
  if (family.dim() != designs.d())
    throw std::invalid_argument("Engine: family dimension != design dimension");
  if (static_cast<int>(y.size()) != designs.n())
    throw std::invalid_argument("Engine: y size != number of subjects");
  for (const auto& yi : y) {
    if (yi.size() != designs.d())
      throw std::invalid_argument("Engine: response length != d");
    if (!yi.allFinite()) throw std::invalid_argument("Engine: non-finite data");
  }
}

EngineCache Engine::cache(const Vector& theta) const {
  return make_cache(*family_, *scheme_, theta, n_beta());
}

double Engine::log_cl(const EngineCache& c) const {
  if (!c.pd) return -std::numeric_limits<double>::infinity();
  const Vector beta = c.theta.head(c.nbeta);
  double total = 0.0;
  for (int i = 0; i < n(); ++i) {
    const Vector r = (*y_)[i] - designs_->x[i] * beta;
    for (const auto& md : c.margins) {
      const Vector rs = subvector(r, md.idx);
      total += -0.5 * md.w * (rs.dot(md.omega_inv * rs) + md.logdet);
    }
  }
  return total + n() * c.const_term;
}

Matrix Engine::per_subject_scores(const EngineCache& c) const {
  if (!c.pd) throw NumericalError("per_subject_scores: non-PD covariance");
  Matrix s(n(), c.p());
  for (int i = 0; i < n(); ++i)
    s.row(i) = subject_score(c, designs_->x[i], (*y_)[i]).transpose();
  return s;
}

Vector Engine::score_total(const EngineCache& c) const {
  if (!c.pd) throw NumericalError("score_total: non-PD covariance");
  Vector s = Vector::Zero(c.p());
  for (int i = 0; i < n(); ++i)
    s += subject_score(c, designs_->x[i], (*y_)[i]);
  return s;
}

Matrix Engine::expected_hessian(const EngineCache& c) const {
  if (!c.pd) throw NumericalError("expected_hessian: non-PD covariance");
  Matrix h = Matrix::Zero(c.p(), c.p());
  for (int i = 0; i < n(); ++i) {
    const Matrix& x = designs_->x[i];
    h.topLeftCorner(c.nbeta, c.nbeta) += x.transpose() * c.a1 * x;
  }
  h.topLeftCorner(c.nbeta, c.nbeta) /= n();
  h.bottomRightCorner(c.ncov, c.ncov) = expected_hessian_covblock(c);
  return h;
}

Matrix Engine::expected_score_cov(const EngineCache& c) const {
  if (!c.pd) throw NumericalError("expected_score_cov: non-PD covariance");
  Matrix j = Matrix::Zero(c.p(), c.p());
  const Matrix a1_om_a1 = c.a1 * c.omega * c.a1;
  for (int i = 0; i < n(); ++i) {
    const Matrix& x = designs_->x[i];
    j.topLeftCorner(c.nbeta, c.nbeta) += x.transpose() * a1_om_a1 * x;
  }
  j.topLeftCorner(c.nbeta, c.nbeta) /= n();
  j.bottomRightCorner(c.ncov, c.ncov) =
      cross_score_cov_covblock(c, c, c.omega);
  return j;
}

Matrix Engine::empirical_score_cov(const EngineCache& c) const {
  const Matrix s = per_subject_scores(c);
  return s.transpose() * s / n();
}

Matrix Engine::observed_hessian_fd(const Vector& theta, double step) const {
  Matrix h(p(), p());
  for (int j = 0; j < p(); ++j) {
    const double hj = step * std::max(1.0, std::abs(theta[j]));
    Vector tp = theta, tm = theta;
    tp[j] += hj;
    tm[j] -= hj;
    const EngineCache cp = cache(tp), cm = cache(tm);
    if (!cp.pd || !cm.pd)
      throw NumericalError("observed_hessian_fd: perturbed point non-PD");
    h.col(j) = -(score_total(cp) - score_total(cm)) / (2.0 * hj * n());
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace clic::cl
