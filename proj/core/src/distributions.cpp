#include "betamix/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace betamix {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::domain_error(std::string(what) + ": square matrix required");
}
}  // namespace

double lmvgamma(int q, double a) {
  if (q < 1) throw std::domain_error("lmvgamma: q >= 1 required");
  if (!(a > 0.5 * (q - 1))) throw std::domain_error("lmvgamma: a > (q-1)/2 required");
  double s = 0.25 * q * (q - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= q; ++j) s += std::lgamma(a + 0.5 * (1.0 - j));
  return s;
}

bool is_spd(const Matrix& m, double tol) {
  if (m.rows() != m.cols() || m.rows() < 1) return false;
  if (!m.allFinite()) return false;
  double slack = tol;
  if (slack <= 0.0) slack = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > slack) return false;
  Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
  return llt.info() == Eigen::Success;
}

Matrix nearest_spd(const Matrix& m, double min_eig) {
  check_square(m, "nearest_spd");
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  Vector ev = es.eigenvalues().cwiseMax(min_eig);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------

BetaMP::BetaMP(double mu, double phi) : mu_(mu), phi_(phi) {
  if (!(mu > 0.0 && mu < 1.0))
    throw std::domain_error("BetaMP: mean must lie strictly inside (0,1)");
  if (!(phi > 0.0) || !std::isfinite(phi))
    throw std::domain_error("BetaMP: precision must be positive and finite");
}

double beta_mp_log_pdf(double y, const BetaMP& law) {
  if (!(y > 0.0 && y < 1.0)) return kNegInf;
  const double p = law.shape1();
  const double q = law.shape2();
  return std::lgamma(law.phi()) - std::lgamma(p) - std::lgamma(q) +
         (p - 1.0) * std::log(y) + (q - 1.0) * std::log1p(-y);
}

std::pair<double, double> beta_mp_moments(const BetaMP& law) {
  const double mu = law.mu();
  return {mu, mu * (1.0 - mu) / (1.0 + law.phi())};
}

double beta_mp_sample(const BetaMP& law, Rng& rng) {
  return rng.beta(law.shape1(), law.shape2());
}

// ---------------------------------------------------------------------------

MvT::MvT(double dof, Vector location, Matrix scale)
    : dof_(dof), location_(std::move(location)), scale_(std::move(scale)) {
  if (!(dof_ > 0.0) || !std::isfinite(dof_))
    throw std::domain_error("MvT: dof must be positive and finite");
  check_square(scale_, "MvT");
  if (scale_.rows() != location_.size())
    throw std::domain_error("MvT: scale and location dimensions differ");
  if (!is_spd(scale_)) throw std::domain_error("MvT: scale matrix must be SPD");
  llt_.compute(scale_);
  log_det_ = log_det_from_llt(llt_);
}

double mvt_log_pdf(const Vector& x, const MvT& law) {
  const int q = law.dim();
  if (x.size() != q) throw std::invalid_argument("mvt_log_pdf: dimension mismatch");
  const double nu = law.dof();
  const Vector diff = x - law.location();
  const double maha = diff.dot(law.llt().solve(diff));
  return std::lgamma(0.5 * (nu + q)) - std::lgamma(0.5 * nu) -
         0.5 * q * std::log(nu * std::numbers::pi) - 0.5 * law.log_det_scale() -
         0.5 * (nu + q) * std::log1p(maha / nu);
}

Vector mvt_sample(const MvT& law, Rng& rng) {
  const int q = law.dim();
  Vector z(q);
  for (int i = 0; i < q; ++i) z[i] = rng.normal();
  const double w = rng.chi_square(law.dof());
  return law.location() + Matrix(law.llt().matrixL()) * z * std::sqrt(law.dof() / w);
}

double mvnormal_log_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  const int q = static_cast<int>(mean.size());
  if (x.size() != q || cov.rows() != q || cov.cols() != q)
    throw std::invalid_argument("mvnormal_log_pdf: dimension mismatch");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("mvnormal_log_pdf: covariance not SPD");
  const Vector diff = x - mean;
  const double maha = diff.dot(llt.solve(diff));
  return -0.5 * q * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_from_llt(llt) -
         0.5 * maha;
}

Vector mvnormal_sample(const Vector& mean, const Matrix& cov, Rng& rng) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("mvnormal_sample: covariance not SPD");
  Vector z(mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + Matrix(llt.matrixL()) * z;
}

// ---------------------------------------------------------------------------

InvWishart::InvWishart(Matrix scale, double dof) : scale_(std::move(scale)), dof_(dof) {
  check_square(scale_, "InvWishart");
  const int q = dim();
  if (!(dof_ > q - 1)) throw std::domain_error("InvWishart: dof must exceed dim - 1");
  if (!is_spd(scale_)) throw std::domain_error("InvWishart: scale matrix must be SPD");
}

Matrix inv_wishart_sample(const InvWishart& law, Rng& rng) {
  const int q = law.dim();
  const double c = law.dof();
  // Bartlett factor of W ~ Wishart(Psi^{-1}, c); the draw is X = W^{-1}
  Eigen::LLT<Matrix> psi_llt(law.scale());
  Matrix psi_inv = psi_llt.solve(Matrix::Identity(q, q));
  Eigen::LLT<Matrix> inv_llt(0.5 * (psi_inv + psi_inv.transpose()));
  if (inv_llt.info() != Eigen::Success)
    throw std::domain_error("inv_wishart_sample: scale inverse not SPD");
  Matrix a = Matrix::Zero(q, q);
  for (int i = 0; i < q; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(c - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  Matrix mfac = Matrix(inv_llt.matrixL()) * a;  // W = mfac mfac'
  Matrix k = mfac.triangularView<Eigen::Lower>().solve(Matrix::Identity(q, q));
  Matrix x = k.transpose() * k;  // (mfac mfac')^{-1}
  return 0.5 * (x + x.transpose());
}

double inv_wishart_log_pdf(const Matrix& x, const InvWishart& law) {
  const int q = law.dim();
  if (x.rows() != q || x.cols() != q)
    throw std::invalid_argument("inv_wishart_log_pdf: dimension mismatch");
  if (!is_spd(x)) return kNegInf;
  const double c = law.dof();
  Eigen::LLT<Matrix> x_llt(0.5 * (x + x.transpose()));
  Eigen::LLT<Matrix> psi_llt(law.scale());
  const double log_det_x = log_det_from_llt(x_llt);
  const double log_det_psi = log_det_from_llt(psi_llt);
  const double trace_term = x_llt.solve(law.scale()).trace();
  return 0.5 * c * log_det_psi - 0.5 * c * q * std::log(2.0) - lmvgamma(q, 0.5 * c) -
         0.5 * (c + q + 1.0) * log_det_x - 0.5 * trace_term;
}

double gamma_log_pdf(double x, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("gamma_log_pdf: shape and rate must be positive");
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
         rate * x;
}

}  // namespace betamix
