#pragma once

/// \file covariance.hpp
/// Closed-form second-order structure of the fields.
///
/// Mode k of every field is an Ornstein-Uhlenbeck-type amplitude
///   eta_k(t) = int_0^t exp(lambda_k (t - q(r))) dbeta_k(r),
/// with q(r) = r for continuous-time kernels and q(r) = [r/dt] dt for the
/// exponential Euler kernels. All quantities below reduce to the weight
///   w_k(t; a, b) = int_a^b exp(2 lambda_k (t - q(r))) dr,
/// which is summed in closed form, and to the transition identity
///   eta_k(t) = exp(lambda_k (t - s)) eta_k(s) + (independent fresh part).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hitlab/kernels.hpp"

namespace hitlab {

struct SpaceTimePoint
{
  double t = 0.0;
  double x = 0.0;
};

/// Thrown when a covariance matrix stays indefinite after the jitter policy.
class non_psd_error : public std::runtime_error
{
 public:
  non_psd_error(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue)
  {
  }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Thrown when closed forms disagree beyond roundoff.
class consistency_error : public std::logic_error
{
 public:
  using std::logic_error::logic_error;
};

namespace detail {

/// Step index of r on the grid {l dt}, snapping values within roundoff of a
/// node onto it.
inline std::int64_t step_floor(double r, double dt)
{
  const double u = r / dt;
  const double n = std::round(u);
  if (std::abs(u - n) <= 1e-9) return static_cast<std::int64_t>(n);
  return static_cast<std::int64_t>(std::floor(u));
}

/// (1 - exp(2 lambda h)) / (-2 lambda) = int_0^h exp(2 lambda u) du.
inline double decay_integral(double lambda, double h)
{
  if (h <= 0.0) return 0.0;
  if (lambda == 0.0) return h;
  return std::expm1(2.0 * lambda * h) / (2.0 * lambda);
}

/// w(t; a, b) = int_a^b exp(2 lambda (t - q(r))) dr for a <= b <= t.
/// `dt` = 0 selects q(r) = r, otherwise q(r) = [r/dt] dt.
inline double mode_weight(double lambda, double t, double a, double b, double dt)
{
  if (!(b > a)) return 0.0;
  if (dt <= 0.0) return std::exp(2.0 * lambda * (t - b)) * decay_integral(lambda, b - a);

  const std::int64_t first = step_floor(a, dt);
  const std::int64_t last = step_floor(b, dt);
  auto node = [dt](std::int64_t l) { return static_cast<double>(l) * dt; };
  auto factor = [&](std::int64_t l) { return std::exp(2.0 * lambda * (t - node(l))); };

  if (first == last) return factor(first) * (b - a);

  double sum = factor(first) * std::max(0.0, node(first + 1) - a);
  const std::int64_t full = last - first - 1;
  if (full > 0) {
    // sum_{m=0}^{full-1} exp(2 lambda m dt), newest step first
    const double x = 2.0 * lambda * dt;
    const double ratio = (x == 0.0) ? static_cast<double>(full)
                                    : std::expm1(x * static_cast<double>(full)) / std::expm1(x);
    sum += dt * factor(last - 1) * ratio;
  }
  sum += factor(last) * std::max(0.0, b - node(last));
  return sum;
}

}  // namespace detail

//---------------------------------------------------------------------------//
// Mode time integrals
//---------------------------------------------------------------------------//

/// J(t,s) = int_0^s exp(lambda (t-r)) exp(lambda (s-r)) dr for a
/// continuous-time mode. Arguments are symmetric; the small-|lambda| branch
/// is a three-term Taylor expansion.
inline double mode_time_integral(double lambda, double t, double s)
{
  if (s > t) std::swap(s, t);
  if (!(s > 0.0)) throw std::domain_error("mode time integral needs 0 < s <= t");
  if (std::abs(lambda) * t < 1e-8) {
    const double p = t + s, m = t - s;
    return s + lambda * t * s + lambda * lambda * (p * p * p - m * m * m) / 12.0;
  }
  return std::exp(lambda * (t - s)) * detail::decay_integral(lambda, s);
}

/// Quantized variant: the kernel exponent is lambda (t - [r/dt] dt).
inline double mode_time_integral(double lambda, double t, double s, double dt)
{
  if (dt <= 0.0) return mode_time_integral(lambda, t, s);
  if (s > t) std::swap(s, t);
  if (!(s > 0.0)) throw std::domain_error("mode time integral needs 0 < s <= t");
  return std::exp(lambda * (t - s)) * detail::mode_weight(lambda, s, 0.0, s, dt);
}

inline double mode_time_integral(const DiscretizationSpec& spec, int k, double t, double s)
{
  return mode_time_integral(eigenvalue(spec, k), t, s, spec.step());
}

//---------------------------------------------------------------------------//
// Pointwise second-order quantities
//---------------------------------------------------------------------------//

/// Throws unless (p, q) is a valid covariance query for `spec`.
inline void check_query_point(const DiscretizationSpec& spec, const SpaceTimePoint& p)
{
  if (!(p.t > 0.0) || p.t > spec.horizon * (1.0 + 1e-12))
    throw std::domain_error("time must lie in (0, T]");
  if (p.x < 0.0 || p.x > 1.0) throw std::domain_error("space point must lie in [0, 1]");
  if (spec.kind == Scheme::eem_grid && !on_grid(spec.size, p.t / spec.horizon))
    throw std::domain_error("EEM grid field is only defined at step times {i T/M}");
}

/// Second-order structure of one field, with its mode table cached.
class CovarianceModel
{
 public:
  explicit CovarianceModel(const DiscretizationSpec& spec) : modes_(spec) {}

  const DiscretizationSpec& spec() const { return modes_.spec(); }
  const ModeTable& modes() const { return modes_; }

  /// Cov(X(p), X(q)) = sum_k c_k J_k(t_p, t_q) phi_k(x_p) phi_k(x_q).
  double cov(const SpaceTimePoint& p, const SpaceTimePoint& q) const
  {
    check_query_point(spec(), p);
    check_query_point(spec(), q);
    const double dt = spec().step();
    const double t = std::max(p.t, q.t), s = std::min(p.t, q.t);
    double sum = 0.0;
    for (int k = 1; k <= modes_.size(); ++k) {
      const double fp = modes_.phi(k, p.x);
      const double fq = modes_.phi(k, q.x);
      if (fp == 0.0 || fq == 0.0) continue;
      sum += modes_.norm(k) * mode_time_integral(modes_.lambda(k), t, s, dt) * fp * fq;
    }
    return sum;
  }

  double variance(const SpaceTimePoint& p) const { return cov(p, p); }

  /// E|X(p) - X(q)|^2, accumulated as a sum of nonnegative mode terms
  ///   c_k [ w_k(s;0,s) ((phi(x_p) - phi(x_q)) + expm1(lambda dt) phi(x_p))^2
  ///         + phi(x_p)^2 w_k(t; s, t) ]
  /// where p is the later point.
  double increment_msq(SpaceTimePoint p, SpaceTimePoint q) const
  {
    check_query_point(spec(), p);
    check_query_point(spec(), q);
    if (p.t < q.t) std::swap(p, q);
    const double dt = spec().step();
    const double lag = p.t - q.t;
    double sum = 0.0;
    for (int k = 1; k <= modes_.size(); ++k) {
      const double lambda = modes_.lambda(k);
      const double fp = modes_.phi(k, p.x);
      const double diff = modes_.phi_difference(k, p.x, q.x);
      const double old = detail::mode_weight(lambda, q.t, 0.0, q.t, dt);
      const double fresh = detail::mode_weight(lambda, p.t, q.t, p.t, dt);
      const double a = diff + std::expm1(lambda * lag) * fp;
      sum += modes_.norm(k) * (old * a * a + fp * fp * fresh);
    }
    if (sum < 0.0) {
      if (sum > -1e-12) return 0.0;
      throw consistency_error("negative increment second moment");
    }
    return sum;
  }

  /// Cov(X(p) - X(q), X(q)) as a mode sum of small terms (no cancellation
  /// between O(1) variances when p and q are close).
  double increment_cov(const SpaceTimePoint& p, const SpaceTimePoint& q) const
  {
    check_query_point(spec(), p);
    check_query_point(spec(), q);
    const double dt = spec().step();
    const bool p_later = p.t >= q.t;
    const double t = p_later ? p.t : q.t, s = p_later ? q.t : p.t;
    const double lag = t - s;
    double sum = 0.0;
    for (int k = 1; k <= modes_.size(); ++k) {
      const double lambda = modes_.lambda(k);
      const double fq = modes_.phi(k, q.x);
      if (fq == 0.0) continue;
      const double diff = modes_.phi_difference(k, p.x, q.x);
      const double js = detail::mode_weight(lambda, s, 0.0, s, dt);
      const double em1 = std::expm1(lambda * lag);
      double a;
      if (p_later) {
        a = js * (diff + em1 * modes_.phi(k, p.x));
      } else {
        const double e = em1 + 1.0;
        const double fresh = detail::mode_weight(lambda, t, s, t, dt);
        a = e * js * (diff - em1 * fq) - fresh * fq;
      }
      sum += modes_.norm(k) * a * fq;
    }
    return sum;
  }

  /// Var(X(p) | X(q)) in regression form Var(p) - Cov^2 / Var(q), evaluated
  /// on the increment D = X(p) - X(q): Var(D) - Cov(D, X(q))^2 / Var(q).
  double cond_var(const SpaceTimePoint& p, const SpaceTimePoint& q) const
  {
    const double vq = variance(q);
    if (!(vq > 0.0)) throw std::domain_error("conditioning variable has zero variance");
    const double a = increment_cov(p, q);
    const double value = increment_msq(p, q) - a * a / vq;
    if (value < 0.0 && value > -1e-12 * std::max(variance(p), 1.0)) return 0.0;
    return value;
  }

  /// Var(X(p) | X(q)) through increment and standard deviations:
  ///   (rho^2 - (sY - sZ)^2)((sY + sZ)^2 - rho^2) / (4 sZ^2).
  double cond_var_from_increment(const SpaceTimePoint& p, const SpaceTimePoint& q) const
  {
    const double vq = variance(q);
    if (!(vq > 0.0)) throw std::domain_error("conditioning variable has zero variance");
    const double sy = std::sqrt(variance(p));
    const double sz = std::sqrt(vq);
    const double rho2 = increment_msq(p, q);
    // sY - sZ = (Var(p) - Var(q)) / (sY + sZ), Var(p) - Var(q) = rho^2 + 2 Cov(D, X(q))
    const double dp = sy + sz, dm = (rho2 + 2.0 * increment_cov(p, q)) / dp;
    return (rho2 - dm * dm) * (dp * dp - rho2) / (4.0 * vq);
  }

  /// Var(X(p) | X(q)) as the residual E|X(p) - beta X(q)|^2 summed over
  /// modes. Every term is nonnegative, so it stays accurate at tiny lags.
  double cond_var_residual(SpaceTimePoint p, SpaceTimePoint q) const
  {
    const double vq = variance(q);
    if (!(vq > 0.0)) throw std::domain_error("conditioning variable has zero variance");
    const double beta = cov(p, q) / vq;
    const double dt = spec().step();
    const bool p_later = p.t >= q.t;
    const SpaceTimePoint& late = p_later ? p : q;
    const SpaceTimePoint& early = p_later ? q : p;
    const double lag = late.t - early.t;
    // X(p) - beta X(q) = sum_k [u_k eta_k(early) + v_k F_k]
    double sum = 0.0;
    for (int k = 1; k <= modes_.size(); ++k) {
      const double lambda = modes_.lambda(k);
      const double decay = std::exp(lambda * lag);
      const double fp = modes_.phi(k, p.x), fq = modes_.phi(k, q.x);
      double u, v;
      if (p_later) {
        u = decay * fp - beta * fq;
        v = fp;
      } else {
        u = fp - beta * decay * fq;
        v = -beta * fq;
      }
      const double old = detail::mode_weight(lambda, early.t, 0.0, early.t, dt);
      const double fresh = detail::mode_weight(lambda, late.t, early.t, late.t, dt);
      sum += modes_.norm(k) * (old * u * u + v * v * fresh);
    }
    return sum;
  }

  /// Var(p) Var(q) - Cov(p,q)^2.
  double detvar(const SpaceTimePoint& p, const SpaceTimePoint& q) const
  {
    const double c = cov(p, q);
    return variance(p) * variance(q) - c * c;
  }

  /// Same-time determinant through the Cauchy-Binet sum of 2x2 minors
  ///   sum_{i<j} (a_i b_j - a_j b_i)^2,  a_k = sqrt(c_k J_k) phi_k(x),
  ///   b_k = sqrt(c_k J_k) phi_k(y).
  double detvar_minors(const SpaceTimePoint& p, const SpaceTimePoint& q) const
  {
    check_query_point(spec(), p);
    check_query_point(spec(), q);
    if (p.t != q.t) throw std::domain_error("minor form needs equal times");
    const int n = modes_.size();
    std::vector<double> a(n), b(n);
    for (int k = 1; k <= n; ++k) {
      const double amp = std::sqrt(
          modes_.norm(k) * mode_time_integral(modes_.lambda(k), p.t, p.t, spec().step()));
      a[k - 1] = amp * modes_.phi(k, p.x);
      b[k - 1] = amp * modes_.phi(k, q.x);
    }
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0.0 && b[i] == 0.0) continue;
      for (int j = i + 1; j < n; ++j) {
        const double m = a[i] * b[j] - a[j] * b[i];
        sum += m * m;
      }
    }
    return sum;
  }

 private:
  ModeTable modes_;
};

inline double cov(const DiscretizationSpec& spec, const SpaceTimePoint& p,
                  const SpaceTimePoint& q)
{
  return CovarianceModel(spec).cov(p, q);
}

inline double variance(const DiscretizationSpec& spec, const SpaceTimePoint& p)
{
  return CovarianceModel(spec).variance(p);
}

inline double increment_msq(const DiscretizationSpec& spec, const SpaceTimePoint& p,
                            const SpaceTimePoint& q)
{
  return CovarianceModel(spec).increment_msq(p, q);
}

inline double cond_var(const DiscretizationSpec& spec, const SpaceTimePoint& p,
                       const SpaceTimePoint& q)
{
  return CovarianceModel(spec).cond_var(p, q);
}

inline double detvar(const DiscretizationSpec& spec, const SpaceTimePoint& p,
                     const SpaceTimePoint& q)
{
  return CovarianceModel(spec).detvar(p, q);
}

//---------------------------------------------------------------------------//
// Covariance matrices
//---------------------------------------------------------------------------//

/// Symmetric positive semidefinite matrix with its lower Cholesky factor.
///
/// Factorization follows a fixed jitter policy: plain Cholesky first, then
/// the diagonal is shifted by 1e-12 * trace / n, escalating x10 at most three
/// times. Failure after that throws `non_psd_error`.
class PsdMatrix
{
 public:
  PsdMatrix() = default;

  explicit PsdMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries))
  {
    if (entries_.rows() != entries_.cols()) throw std::invalid_argument("matrix is not square");
    const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    if (asym > 1e-12 * scale) throw std::invalid_argument("matrix is not symmetric");
    factorize();
  }

  Eigen::Index size() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const Eigen::MatrixXd& factor() const { return chol_; }
  double jitter() const { return jitter_; }

 private:
  void factorize()
  {
    const Eigen::Index n = entries_.rows();
    if (n == 0) return;
    const double base = 1e-12 * entries_.trace() / static_cast<double>(n);
    for (int attempt = 0; attempt <= 4; ++attempt) {
      const double shift = attempt == 0 ? 0.0 : base * std::pow(10.0, attempt - 1);
      Eigen::MatrixXd work = entries_;
      work.diagonal().array() += shift;
      Eigen::LLT<Eigen::MatrixXd> llt(work);
      if (llt.info() == Eigen::Success) {
        chol_ = llt.matrixL();
        jitter_ = shift;
        return;
      }
    }
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(entries_, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    throw non_psd_error("covariance matrix not positive semidefinite; min eigenvalue " +
                            std::to_string(min_eig),
                        min_eig);
  }

  Eigen::MatrixXd entries_;
  Eigen::MatrixXd chol_;
  double jitter_ = 0.0;
};

/// Covariance matrix of the scalar field at `points`. The d-dimensional field
/// consists of d independent copies sharing this matrix.
inline PsdMatrix cov_matrix(const DiscretizationSpec& spec, std::span<const SpaceTimePoint> points)
{
  const CovarianceModel model(spec);
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) c(i, j) = c(j, i) = model.cov(points[i], points[j]);
  return PsdMatrix(std::move(c));
}

}  // namespace hitlab
