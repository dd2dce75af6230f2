#pragma once

/// \file potential.hpp
/// Bessel-Riesz kernels and energies, Hausdorff scaling classes, and the
/// capacity/Hausdorff predictions that follow from a critical dimension.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hitlab/rng.hpp"

namespace hitlab {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// K_beta(r) = r^-beta (beta > 0), log(e / min(r, 1)) (beta = 0), 1 (beta < 0).
inline double riesz_kernel(double beta, double r)
{
  if (r < 0.0) throw std::domain_error("kernel distance must be >= 0");
  if (beta < 0.0) return 1.0;
  if (r == 0.0) return infinity;
  if (beta == 0.0) return 1.0 - std::log(std::min(r, 1.0));
  return std::pow(r, -beta);
}

/// A set in R^d: point, closed ball, segment or finite point set.
struct SetDescriptor
{
  enum class Kind
  {
    point,
    ball,
    segment,
    point_set
  };

  Kind kind = Kind::point;
  std::vector<double> center;  ///< point or ball center; segment start
  std::vector<double> end;     ///< segment end
  double radius = 0.0;
  std::vector<std::vector<double>> points;

  static SetDescriptor point(std::vector<double> c) { return {Kind::point, std::move(c), {}, 0.0, {}}; }
  static SetDescriptor ball(std::vector<double> c, double r)
  {
    if (!(r >= 0.0)) throw std::invalid_argument("ball radius must be >= 0");
    return {Kind::ball, std::move(c), {}, r, {}};
  }
  static SetDescriptor segment(std::vector<double> a, std::vector<double> b)
  {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("segment endpoints differ in dimension");
    if (a == b) throw std::invalid_argument("segment endpoints must be distinct");
    return {Kind::segment, std::move(a), std::move(b), 0.0, {}};
  }
  static SetDescriptor point_set(std::vector<std::vector<double>> pts)
  {
    if (pts.empty()) throw std::invalid_argument("point set must be nonempty");
    return {Kind::point_set, {}, {}, 0.0, std::move(pts)};
  }

  int ambient_dim() const
  {
    if (kind == Kind::point_set) return static_cast<int>(points.front().size());
    return static_cast<int>(center.size());
  }

  /// Hausdorff dimension: 0 for points, 1 for segments, d for a ball of
  /// positive radius in R^d.
  double hausdorff_dim() const
  {
    switch (kind) {
      case Kind::point:
      case Kind::point_set: return 0.0;
      case Kind::segment: return 1.0;
      case Kind::ball: return radius > 0.0 ? ambient_dim() : 0.0;
    }
    return 0.0;
  }

  double segment_length() const
  {
    double s = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) s += (end[i] - center[i]) * (end[i] - center[i]);
    return std::sqrt(s);
  }
};

struct EnergyResult
{
  enum class Method
  {
    exact,
    quadrature,
    monte_carlo
  };

  double beta = 0.0;
  double value = infinity;
  double capacity_lower_bound = 0.0;  ///< 1 / value
  Method method = Method::exact;
  double error_estimate = 0.0;
};

inline const char* to_string(EnergyResult::Method m)
{
  switch (m) {
    case EnergyResult::Method::exact: return "exact";
    case EnergyResult::Method::quadrature: return "quadrature";
    case EnergyResult::Method::monte_carlo: return "mc";
  }
  return "unknown";
}

namespace detail {

inline EnergyResult energy_result(double beta, double value, EnergyResult::Method m, double err)
{
  return {beta, value, std::isinf(value) ? 0.0 : 1.0 / value, m, err};
}

/// Energy of the uniform measure on a segment of length L:
///   int_0^1 int_0^1 K(L|u - v|) du dv = int_0^1 K(L w) 2 (1 - w) dw.
inline EnergyResult segment_energy(double beta, double length)
{
  boost::math::quadrature::tanh_sinh<double> q;
  auto f = [&](double w) { return riesz_kernel(beta, length * w) * 2.0 * (1.0 - w); };
  double err = 0.0, value = 0.0;
  if (beta == 0.0 && length > 1.0) {
    // the kernel has a kink at |x - y| = 1
    double e1 = 0.0, e2 = 0.0;
    value = q.integrate(f, 0.0, 1.0 / length, 1e-12, &e1) + q.integrate(f, 1.0 / length, 1.0, 1e-12, &e2);
    err = e1 + e2;
  } else {
    value = q.integrate(f, 0.0, 1.0, 1e-12, &err);
  }
  return energy_result(beta, value, EnergyResult::Method::quadrature, err * std::abs(value));
}

inline void uniform_in_ball(Stream& rng, int d, double r, std::vector<double>& out)
{
  out.resize(d);
  double s = 0.0;
  for (auto& v : out) {
    v = rng.normal();
    s += v * v;
  }
  const double scale = r * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(s);
  for (auto& v : out) v *= scale;
}

}  // namespace detail

/// Energy I_beta of the uniform probability measure on `set`; its reciprocal
/// lower-bounds Cap_beta. Balls use `n_samples` Monte Carlo pairs.
inline EnergyResult energy(double beta, const SetDescriptor& set,
                           std::int64_t n_samples = 1000000, std::uint64_t seed = 1)
{
  using M = EnergyResult::Method;
  if (beta < 0.0) return detail::energy_result(beta, 1.0, M::exact, 0.0);
  const double dim = set.hausdorff_dim();
  if (beta >= dim)
    return detail::energy_result(beta, infinity, M::exact, 0.0);

  switch (set.kind) {
    case SetDescriptor::Kind::segment:
      return detail::segment_energy(beta, set.segment_length());
    case SetDescriptor::Kind::ball: {
      if (n_samples < 2) throw std::invalid_argument("need at least two MC pairs");
      const int d = set.ambient_dim();
      Stream rng(seed, 0, 0, 0);
      std::vector<double> x, y;
      double mean = 0.0, m2 = 0.0;
      for (std::int64_t i = 0; i < n_samples; ++i) {
        detail::uniform_in_ball(rng, d, set.radius, x);
        detail::uniform_in_ball(rng, d, set.radius, y);
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
        const double k = riesz_kernel(beta, std::sqrt(s));
        const double delta = k - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (k - mean);
      }
      const double se = std::sqrt(m2 / static_cast<double>(n_samples - 1) / n_samples);
      return detail::energy_result(beta, mean, M::monte_carlo, se);
    }
    default: break;
  }
  return detail::energy_result(beta, infinity, M::exact, 0.0);
}

struct HausdorffClass
{
  enum class Kind
  {
    zero,
    finite_positive,
    infinite
  };
  Kind kind = Kind::zero;
  double scaling_exponent = 0.0;  ///< H_beta scales like size^exponent when finite
};

inline const char* to_string(HausdorffClass::Kind k)
{
  switch (k) {
    case HausdorffClass::Kind::zero: return "zero";
    case HausdorffClass::Kind::finite_positive: return "finite-positive";
    case HausdorffClass::Kind::infinite: return "infinite";
  }
  return "unknown";
}

/// H_beta(set) classified as zero, finite and positive, or infinite.
inline HausdorffClass hausdorff_class(double beta, const SetDescriptor& set)
{
  using K = HausdorffClass::Kind;
  if (beta < 0.0) return {K::infinite, 0.0};
  const double dim = set.hausdorff_dim();
  if (beta < dim) return {K::infinite, 0.0};
  if (beta > dim) return {K::zero, 0.0};
  return {K::finite_positive, dim};
}

struct FrostmanPrediction
{
  double dim_h = 0.0;
  bool capacity_positive = false;  ///< Cap_{d-Q}(A) > 0: lower bound is positive
  bool hausdorff_zero = false;     ///< H_{d-Q}(A) = 0: hitting probability vanishes
  bool vanishing_under_halving = false;  ///< dim + Q/2 < d < dim + Q
};

inline FrostmanPrediction frostman_prediction(int d, double q, const SetDescriptor& set)
{
  if (d < 1 || !(q > 0.0)) throw std::invalid_argument("need d >= 1 and Q > 0");
  FrostmanPrediction p;
  p.dim_h = set.hausdorff_dim();
  p.capacity_positive = d < p.dim_h + q;
  p.hausdorff_zero = d > p.dim_h + q;
  p.vanishing_under_halving = d > p.dim_h + 0.5 * q && d < p.dim_h + q;
  return p;
}

}  // namespace hitlab
