#include "clic/qfdist.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "clic/rng.hpp"

namespace clic::qf {

namespace {

struct GslEnv {
  GslEnv() { old = gsl_set_error_handler_off(); }
  ~GslEnv() { gsl_set_error_handler(old); }
  gsl_error_handler_t* old;
};

// Imhof integrand pieces for Q = sum lambda_j chisq_1(delta_j^2):
//   theta(u) = 0.5 sum_j [atan(l u) + d^2 l u / (1 + l^2 u^2)] - 0.5 c u
//   rho(u)   = prod_j (1 + l^2 u^2)^{1/4} * exp(0.5 sum_j (d l u)^2/(1+l^2u^2))
// and P(Q > c) = 1/2 + (1/pi) Int_0^inf sin(theta(u)) / (u rho(u)) du.
struct ImhofParams {
  const Vector* lambdas;
  const Vector* delta;  // may be null (central)
  double c;
};

double phase_no_drift(double u, const ImhofParams& p) {
  double th = 0.0;
  for (int j = 0; j < p.lambdas->size(); ++j) {
    const double l = (*p.lambdas)[j];
    th += std::atan(l * u);
    if (p.delta) {
      const double d = (*p.delta)[j];
      th += d * d * l * u / (1.0 + l * l * u * u);
    }
  }
  return 0.5 * th;
}

double inv_u_rho(double u, const ImhofParams& p) {
  double logrho = 0.0;
  for (int j = 0; j < p.lambdas->size(); ++j) {
    const double l = (*p.lambdas)[j];
    logrho += 0.25 * std::log1p(l * l * u * u);
    if (p.delta) {
      const double d = (*p.delta)[j];
      const double dlu = d * l * u;
      logrho += 0.5 * dlu * dlu / (1.0 + l * l * u * u);
    }
  }
  return std::exp(-logrho) / u;
}

double integrand_full(double u, void* params) {
  const auto& p = *static_cast<ImhofParams*>(params);
  if (u < 1e-300) {
    double th1 = 0.0;
    for (int j = 0; j < p.lambdas->size(); ++j) {
      const double l = (*p.lambdas)[j];
      const double d2 = p.delta ? (*p.delta)[j] * (*p.delta)[j] : 0.0;
      th1 += l * (1.0 + d2);
    }
    return 0.5 * (th1 - p.c);
  }
  return std::sin(phase_no_drift(u, p) - 0.5 * p.c * u) * inv_u_rho(u, p);
}

double integrand_sin_part(double u, void* params) {
  const auto& p = *static_cast<ImhofParams*>(params);
  return std::sin(phase_no_drift(u, p)) * inv_u_rho(u, p);
}

double integrand_cos_part(double u, void* params) {
  const auto& p = *static_cast<ImhofParams*>(params);
  return std::cos(phase_no_drift(u, p)) * inv_u_rho(u, p);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Exact single-term law: P(l (Z+d)^2 > c).
double one_term_upper(double l, double d, double c) {
  if (l > 0.0) {
    if (c <= 0.0) return 1.0;
    const double t = std::sqrt(c / l);
    return std_normal_cdf(-t - d) + 1.0 - std_normal_cdf(t - d);
  }
  // l < 0: support is (-inf, 0].
  if (c >= 0.0) return 0.0;
  const double t = std::sqrt(c / l);  //  c/l > 0
  return std_normal_cdf(t - d) - std_normal_cdf(-t - d);
}

struct Workspaces {
  gsl_integration_workspace* w = nullptr;
  gsl_integration_workspace* wc = nullptr;
  gsl_integration_qawo_table* tbl = nullptr;
  ~Workspaces() {
    if (tbl) gsl_integration_qawo_table_free(tbl);
    if (wc) gsl_integration_workspace_free(wc);
    if (w) gsl_integration_workspace_free(w);
  }
};

// Characteristic-function inversion of the Imhof integral.
ProbResult imhof_upper(const Vector& lambdas, const Vector* delta, double c,
                       double target_abs_err, double step_override,
                       double trunc_override) {
  if (lambdas.size() == 1) {
    const double d = delta ? (*delta)[0] : 0.0;
    return {one_term_upper(lambdas[0], d, c), 1e-15};
  }

  GslEnv env;
  ImhofParams p{&lambdas, delta, c};

  const double omega = 0.5 * std::abs(c);
  const double lam_scale = lambdas.cwiseAbs().maxCoeff();
  // Head/tail split: past `a`, the integrand is written as slowly varying
  // envelopes against sin/cos(omega u) and handled by QAWF acceleration.
  double a = (omega > 0.0) ? std::numbers::pi / (2.0 * omega) : 1.0 / lam_scale;
  a = std::min(a, 1.0 / lam_scale);
  if (step_override > 0.0) a = step_override;
  double head_end = a;
  if (trunc_override > 0.0) head_end = std::max(a, trunc_override);

  const std::size_t limit = 4000;
  Workspaces ws;
  ws.w = gsl_integration_workspace_alloc(limit);
  ws.wc = gsl_integration_workspace_alloc(limit);

  double total = 0.0, total_err = 0.0;
  gsl_function f;
  f.params = &p;

  // Head: adaptive on [0, head_end].
  {
    f.function = &integrand_full;
    double val = 0.0, err = 0.0;
    int status =
        gsl_integration_qag(&f, 0.0, head_end, 0.25 * target_abs_err, 1e-12,
                            limit, GSL_INTEG_GAUSS31, ws.w, &val, &err);
    if (status) {
      status =
          gsl_integration_qag(&f, 0.0, head_end, 0.5 * target_abs_err, 1e-10,
                              limit, GSL_INTEG_GAUSS61, ws.w, &val, &err);
      if (status && err > target_abs_err) {
        std::ostringstream msg;
        msg << "tail_prob: head quadrature did not converge (achieved error "
            << err << ")";
        throw NumericalError(msg.str());
      }
    }
    total += val;
    total_err += err;
  }

  // Tail: Fourier acceleration on [head_end, inf).
  if (omega > 0.0) {
    ws.tbl = gsl_integration_qawo_table_alloc(omega, 1.0, GSL_INTEG_COSINE, 64);
    double val = 0.0, err = 0.0;
    f.function = &integrand_sin_part;
    int st1 = gsl_integration_qawf(&f, head_end, 0.25 * target_abs_err, limit,
                                   ws.w, ws.wc, ws.tbl, &val, &err);
    total += val;
    total_err += err;
    gsl_integration_qawo_table_set(ws.tbl, omega, 1.0, GSL_INTEG_SINE);
    double val2 = 0.0, err2 = 0.0;
    f.function = &integrand_cos_part;
    int st2 = gsl_integration_qawf(&f, head_end, 0.25 * target_abs_err, limit,
                                   ws.w, ws.wc, ws.tbl, &val2, &err2);
    total -= val2;
    total_err += err2;
    if ((st1 || st2) && total_err > target_abs_err) {
      std::ostringstream msg;
      msg << "tail_prob: oscillatory tail quadrature did not converge "
          << "(achieved error " << total_err << ")";
      throw NumericalError(msg.str());
    }
  } else {
    // c == 0: no oscillation, integrand decays algebraically.
    f.function = &integrand_full;
    double val = 0.0, err = 0.0;
    int status = gsl_integration_qagiu(&f, head_end, 0.5 * target_abs_err, 0.0,
                                       limit, ws.w, &val, &err);
    if (status && err > target_abs_err) {
      std::ostringstream msg;
      msg << "tail_prob: tail quadrature did not converge (achieved error "
          << err << ")";
      throw NumericalError(msg.str());
    }
    total += val;
    total_err += err;
  }

  double prob = 0.5 + total / std::numbers::pi;
  prob = std::clamp(prob, 0.0, 1.0);
  return {prob, total_err / std::numbers::pi + 1e-12};
}

Vector dropped_lambdas(const Vector& lambdas, const Vector* delta,
                       Vector* delta_out) {
  const double cutoff = 1e-10 * lambdas.cwiseAbs().maxCoeff();
  std::vector<double> keep, keep_d;
  for (int j = 0; j < lambdas.size(); ++j) {
    if (std::abs(lambdas[j]) >= cutoff) {
      keep.push_back(lambdas[j]);
      if (delta) keep_d.push_back((*delta)[j]);
    }
  }
  Vector out = Eigen::Map<Vector>(keep.data(), static_cast<long>(keep.size()));
  if (delta)
    *delta_out =
        Eigen::Map<Vector>(keep_d.data(), static_cast<long>(keep_d.size()));
  return out;
}

}  // namespace

void QuadFormLaw::validate() const {
  if (lambdas.size() < 1)
    throw std::invalid_argument("QuadFormLaw: need at least one eigenvalue");
  if (!lambdas.allFinite())
    throw std::invalid_argument("QuadFormLaw: non-finite eigenvalue");
  if (lambdas.cwiseAbs().maxCoeff() == 0.0)
    throw std::invalid_argument("QuadFormLaw: all eigenvalues are zero");
  if (noncentrality && noncentrality->size() != lambdas.size())
    throw std::invalid_argument("QuadFormLaw: noncentrality length mismatch");
  if (mixing_cov) {
    if (mixing_cov->rows() != lambdas.size() ||
        mixing_cov->cols() != lambdas.size())
      throw std::invalid_argument("QuadFormLaw: mixing covariance shape");
    if (!mixing_cov->isApprox(mixing_cov->transpose(), 1e-10))
      throw std::invalid_argument("QuadFormLaw: mixing covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(*mixing_cov);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()))
      throw std::invalid_argument("QuadFormLaw: mixing covariance not PSD");
  }
}

bool QuadFormLaw::central() const {
  return !noncentrality || noncentrality->cwiseAbs().maxCoeff() == 0.0;
}

bool QuadFormLaw::identity_mixing() const {
  return !mixing_cov ||
         mixing_cov->isApprox(Matrix::Identity(lambdas.size(), lambdas.size()),
                              1e-12);
}

ProbResult tail_prob(const QuadFormLaw& law, const TailQuery& query) {
  law.validate();
  if (query.method == TailMethod::MonteCarlo) {
    auto mc = mc_oracle(law, query.threshold, query.mc_draws, query.mc_seed);
    ProbResult r{mc.prob, 2.0 * mc.se};
    if (!query.upper) r.prob = 1.0 - r.prob;
    return r;
  }

  Vector lambdas = law.lambdas;
  std::optional<Vector> delta = law.noncentrality;
  if (!law.identity_mixing()) {
    if (!law.central())
      throw std::invalid_argument(
          "tail_prob: noncentral law with non-identity mixing covariance "
          "requires the monte-carlo method");
    // Reduce W ~ N(0, V): eigenvalues of V^{1/2} diag(lambda) V^{1/2}.
    Eigen::SelfAdjointEigenSolver<Matrix> es(*law.mixing_cov);
    Vector ev = es.eigenvalues().cwiseMax(0.0);
    Matrix half = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                  es.eigenvectors().transpose();
    Matrix reduced = half * law.lambdas.asDiagonal() * half;
    Eigen::SelfAdjointEigenSolver<Matrix> es2(reduced);
    lambdas = es2.eigenvalues();
    delta.reset();
  }

  Vector delta_kept;
  const Vector* dptr = (delta && delta->cwiseAbs().maxCoeff() > 0.0)
                           ? &delta.value()
                           : nullptr;
  Vector kept = dropped_lambdas(lambdas, dptr, &delta_kept);
  if (kept.size() == 0) {
    const double p_upper = query.threshold < 0.0 ? 1.0 : 0.0;
    return {query.upper ? p_upper : 1.0 - p_upper, 0.0};
  }

  ProbResult r = imhof_upper(kept, dptr ? &delta_kept : nullptr,
                             query.threshold, query.target_abs_err, query.step,
                             query.truncation);
  if (!query.upper) r.prob = 1.0 - r.prob;
  return r;
}

McResult mc_oracle(const QuadFormLaw& law, double threshold, long draws,
                   std::uint64_t seed) {
  law.validate();
  if (draws < 10000)
    throw std::invalid_argument("mc_oracle: need at least 1e4 draws");
  const int m = static_cast<int>(law.lambdas.size());
  Matrix chol = Matrix::Identity(m, m);
  if (law.mixing_cov) {
    Eigen::LLT<Matrix> llt(*law.mixing_cov +
                           1e-14 * Matrix::Identity(m, m));
    chol = llt.matrixL();
  }
  const bool correlated = !law.identity_mixing();
  Vector mean = Vector::Zero(m);
  if (law.noncentrality) mean = *law.noncentrality;

  Rng rng = Rng(seed).stream(0x9F0Cu);
  long hits = 0;
  Vector z(m), w(m);
  for (long i = 0; i < draws; ++i) {
    for (int j = 0; j < m; ++j) z[j] = rng.normal();
    if (correlated)
      w = mean + chol * z;
    else
      w = mean + z;
    const double q = law.lambdas.dot(w.cwiseProduct(w));
    if (q > threshold) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(draws);
  const double se = std::sqrt(std::max(p * (1.0 - p), 1e-300) /
                              static_cast<double>(draws));
  return {p, se};
}

double selection_prob_c1(const Vector& lambdas, double target_abs_err) {
  return selection_prob_threshold(lambdas, 2.0, target_abs_err);
}

double selection_prob_threshold(const Vector& lambdas, double c,
                                double target_abs_err) {
  if (lambdas.size() < 1)
    throw std::invalid_argument("selection_prob: empty lambda vector");
  if (lambdas.minCoeff() < 0.0)
    throw std::invalid_argument(
        "selection_prob: negative eigenvalue weights are not allowed");
  if (lambdas.maxCoeff() <= 0.0)
    throw std::invalid_argument("selection_prob: all-zero lambdas");
  if (c <= 0.0) throw std::invalid_argument("selection_prob: threshold factor must be > 0");
  QuadFormLaw law{lambdas, std::nullopt, std::nullopt};
  TailQuery q;
  q.threshold = c * lambdas.sum();
  q.upper = false;
  q.target_abs_err = target_abs_err;
  return tail_prob(law, q).prob;
}

}  // namespace clic::qf
