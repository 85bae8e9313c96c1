#pragma once

// Parametric Gaussian cluster models behind the composite-likelihood engine.
// A family exposes the cluster covariance Omega(tc) and its first and second
// derivatives with respect to the covariance parameters tc; the mean is
// always x_i beta with beta the leading block of the parameter vector.
//
// Variance components are Cholesky-parameterized (Psi = C C^T, phi = kappa^2)
// so the parameter space is unconstrained.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "clic/types.hpp"

namespace clic::cl {

class GaussianFamily {
 public:
  virtual ~GaussianFamily() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;  // cluster size d
  virtual int n_cov() const = 0;
  virtual std::vector<std::string> cov_param_names() const = 0;

  virtual Matrix omega(const Vector& tc) const = 0;
  virtual std::vector<Matrix> omega_grad(const Vector& tc) const = 0;
  // Second derivatives for ordered pairs k <= l, flattened row-wise.
  virtual std::vector<Matrix> omega_hess(const Vector& tc) const = 0;

  // Starting covariance parameters from a pooled residual covariance.
  virtual Vector start_cov(const Matrix& resid_cov) const = 0;

  // Sign-canonical representative (Cholesky diagonals made nonnegative).
  virtual Vector canonicalize(const Vector& tc) const { return tc; }

  // Variance-component boundary diagnostics (kappa ~ 0, C diagonal ~ 0).
  virtual bool near_boundary(const Vector& tc) const;

  // Derived natural parameters for reporting.
  virtual std::vector<std::pair<std::string, double>> natural_params(
      const Vector& tc) const;

  int hess_index(int k, int l) const;  // index into omega_hess list, k <= l
};

// Mixed-effects model with a shared random-effect design z (d x r):
// Omega = z C C^T z^T + kappa^2 I, parameters (vech C, kappa).
// The exchangeable cluster model is the special case z = 1_d, r = 1.
class LmmCholFamily : public GaussianFamily {
 public:
  LmmCholFamily(Matrix z, std::string name = "lmm");
  std::string name() const override { return name_; }
  int dim() const override { return static_cast<int>(z_.rows()); }
  int n_cov() const override;
  std::vector<std::string> cov_param_names() const override;
  Matrix omega(const Vector& tc) const override;
  std::vector<Matrix> omega_grad(const Vector& tc) const override;
  std::vector<Matrix> omega_hess(const Vector& tc) const override;
  Vector start_cov(const Matrix& resid_cov) const override;
  Vector canonicalize(const Vector& tc) const override;
  bool near_boundary(const Vector& tc) const override;
  std::vector<std::pair<std::string, double>> natural_params(
      const Vector& tc) const override;

  int r() const { return static_cast<int>(z_.cols()); }
  Matrix chol_c(const Vector& tc) const;
  double kappa(const Vector& tc) const { return tc[tc.size() - 1]; }

 private:
  Matrix z_;
  std::string name_;
};

// Multivariate normal regression with unstructured covariance Sigma = L L^T,
// parameters vech L.
class MvnCholFamily : public GaussianFamily {
 public:
  explicit MvnCholFamily(int d);
  std::string name() const override { return "unstr"; }
  int dim() const override { return d_; }
  int n_cov() const override { return d_ * (d_ + 1) / 2; }
  std::vector<std::string> cov_param_names() const override;
  Matrix omega(const Vector& tc) const override;
  std::vector<Matrix> omega_grad(const Vector& tc) const override;
  std::vector<Matrix> omega_hess(const Vector& tc) const override;
  Vector start_cov(const Matrix& resid_cov) const override;
  Vector canonicalize(const Vector& tc) const override;
  std::vector<std::pair<std::string, double>> natural_params(
      const Vector& tc) const override;

 private:
  int d_;
};

// Fixed, known covariance matrix; no covariance parameters.
class MvnFixedFamily : public GaussianFamily {
 public:
  explicit MvnFixedFamily(Matrix sigma);
  std::string name() const override { return "fixed"; }
  int dim() const override { return static_cast<int>(sigma_.rows()); }
  int n_cov() const override { return 0; }
  std::vector<std::string> cov_param_names() const override { return {}; }
  Matrix omega(const Vector&) const override { return sigma_; }
  std::vector<Matrix> omega_grad(const Vector&) const override { return {}; }
  std::vector<Matrix> omega_hess(const Vector&) const override { return {}; }
  Vector start_cov(const Matrix&) const override { return Vector(0); }

 private:
  Matrix sigma_;
};

// Exchangeable cluster model as its mixed-effects special case.
std::unique_ptr<GaussianFamily> exchangeable_family(int d);
std::unique_ptr<GaussianFamily> make_family(const std::string& name, int d,
                                            const Matrix& z = Matrix());

// Map between (sigma2, rho) and the (c, kappa) coordinates of the
// exchangeable family.
Vector exchangeable_cov_params(double sigma2, double rho);

}  // namespace clic::cl
