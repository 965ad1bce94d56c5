#pragma once

#include <Eigen/Dense>
#include <utility>

#include "betamix/rng.hpp"

namespace betamix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// log of the multivariate gamma function, Gamma_q(a)
double lmvgamma(int q, double a);

bool is_spd(const Matrix& m, double tol = 0.0);

// Symmetrise and clip eigenvalues from below so the result admits a Cholesky
// factorisation.  Used when entrywise averages of covariance draws drift off
// the SPD cone.
Matrix nearest_spd(const Matrix& m, double min_eig = 1e-10);

// ---------------------------------------------------------------------------
// Beta law addressed by mean mu in (0,1) and precision phi > 0:
//   y ~ Beta(mu*phi, (1-mu)*phi),  E y = mu,  Var y = mu(1-mu)/(1+phi)
class BetaMP {
 public:
  BetaMP(double mu, double phi);

  double mu() const { return mu_; }
  double phi() const { return phi_; }
  double shape1() const { return mu_ * phi_; }
  double shape2() const { return (1.0 - mu_) * phi_; }

 private:
  double mu_;
  double phi_;
};

// -inf for y outside the open interval (0,1)
double beta_mp_log_pdf(double y, const BetaMP& law);
// (mean, variance)
std::pair<double, double> beta_mp_moments(const BetaMP& law);
double beta_mp_sample(const BetaMP& law, Rng& rng);

// ---------------------------------------------------------------------------
// Multivariate Student-t with dof > 0, location vector and SPD scale matrix.
// The scale matrix is the dispersion parameter Sigma, not the covariance;
// covariance is Sigma * dof/(dof-2) when dof > 2.
class MvT {
 public:
  MvT(double dof, Vector location, Matrix scale);

  double dof() const { return dof_; }
  const Vector& location() const { return location_; }
  const Matrix& scale() const { return scale_; }
  int dim() const { return static_cast<int>(location_.size()); }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  double log_det_scale() const { return log_det_; }

 private:
  double dof_;
  Vector location_;
  Matrix scale_;
  Eigen::LLT<Matrix> llt_;
  double log_det_;
};

double mvt_log_pdf(const Vector& x, const MvT& law);
Vector mvt_sample(const MvT& law, Rng& rng);

double mvnormal_log_pdf(const Vector& x, const Vector& mean, const Matrix& cov);
Vector mvnormal_sample(const Vector& mean, const Matrix& cov, Rng& rng);

// ---------------------------------------------------------------------------
// Inverse Wishart over q x q SPD matrices with scale Psi (SPD) and dof c,
// c > q - 1.  Convention: X ~ IW(Psi, c)  iff  X^{-1} ~ Wishart(Psi^{-1}, c),
// so E[X] = Psi / (c - q - 1) for c > q + 1.  For q = 1 this is
// InverseGamma(c/2, psi/2).
class InvWishart {
 public:
  InvWishart(Matrix scale, double dof);

  const Matrix& scale() const { return scale_; }
  double dof() const { return dof_; }
  int dim() const { return static_cast<int>(scale_.rows()); }

 private:
  Matrix scale_;
  double dof_;
};

Matrix inv_wishart_sample(const InvWishart& law, Rng& rng);
double inv_wishart_log_pdf(const Matrix& x, const InvWishart& law);

// shape/rate parameterisation; mean = shape/rate
double gamma_log_pdf(double x, double shape, double rate);

}  // namespace betamix
