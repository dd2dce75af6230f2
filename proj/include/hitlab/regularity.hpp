#pragma once

/// \file regularity.hpp
/// Second-moment and conditional-variance scaling from closed forms.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "hitlab/covariance.hpp"
#include "hitlab/sampler.hpp"

namespace hitlab {

/// Region [T0, T] x [eps, 1 - eps] that probes must stay inside.
struct FitWindow
{
  double t0 = 0.5;
  double eps = 0.1;
};

struct LineFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
};

/// Ordinary least squares of y on x.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y)
{
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("line fit needs >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < n; ++i)
    f.max_residual = std::max(f.max_residual, std::abs(y[i] - f.intercept - f.slope * x[i]));
  return f;
}

/// log-log fit of a moment against lag.
struct HolderFit
{
  std::vector<double> lags;    ///< strictly decreasing, constant ratio
  std::vector<double> values;  ///< msq or conditional variance per lag
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  double expected_slope = 0.0;
  double floor_ratio = 0.0;    ///< min value / lag^expected
  double ceiling_ratio = 0.0;  ///< max value / lag^expected
};

/// Expected second-moment exponent 2H for a field and direction.
inline double expected_slope(Scheme kind, Axis axis)
{
  if (axis == Axis::joint) throw std::invalid_argument("no single exponent for joint probes");
  switch (kind) {
    case Scheme::exact: return axis == Axis::time ? 0.5 : 1.0;
    case Scheme::sgm:
    case Scheme::fdm: return axis == Axis::time ? 1.0 : 2.0;
    case Scheme::eem_grid:
    case Scheme::eem_continuous: return axis == Axis::time ? 0.5 : 2.0;
  }
  return 0.0;
}

/// Geometric ladder hi, hi*r, ..., n values.
inline std::vector<double> geometric_ladder(double hi, double ratio, int n)
{
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(hi * std::pow(ratio, i));
  return v;
}

/// Lags inside the scaling regime of each field.
///
/// The discrete-space fields are smooth in time below the stiffness scale
/// 1/|lambda_max|, so their time ladder ends an octave-multiple below
/// 1/(8 |lambda_max|). EEM time lags are whole steps 64 dt ... 8 dt.
inline std::vector<double> default_lags(const DiscretizationSpec& spec, Axis axis)
{
  if (axis == Axis::joint) throw std::invalid_argument("no lag ladder for joint probes");
  switch (spec.kind) {
    case Scheme::exact:
      return axis == Axis::time ? geometric_ladder(std::ldexp(1.0, -6), 0.5, 9)
                                : geometric_ladder(std::ldexp(1.0, -4), 0.5, 7);
    case Scheme::sgm:
    case Scheme::fdm: {
      if (axis == Axis::space) return geometric_ladder(std::ldexp(1.0, -6), 0.5, 9);
      const double top = -eigenvalue(spec, spec.size - 1);
      const int e = static_cast<int>(std::floor(std::log2(1.0 / (8.0 * top))));
      return geometric_ladder(std::ldexp(1.0, e), 0.5, 9);
    }
    case Scheme::eem_grid:
    case Scheme::eem_continuous:
      if (axis == Axis::space) return geometric_ladder(std::ldexp(1.0, -4), 0.5, 7);
      return geometric_ladder(64.0 * spec.step(), 0.5, 4);
  }
  return {};
}

namespace detail {

inline void check_ladder(std::span<const double> lags)
{
  if (lags.size() < 2) throw std::invalid_argument("lag ladder needs >= 2 lags");
  const double ratio = lags[1] / lags[0];
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (!(lags[i] > 0.0)) throw std::invalid_argument("lags must be positive");
    if (i > 0 && !(lags[i] < lags[i - 1]))
      throw std::invalid_argument("lags must be strictly decreasing");
    if (i > 0 && std::abs(lags[i] / lags[i - 1] - ratio) > 1e-9 * ratio)
      throw std::invalid_argument("lags must form a geometric ladder");
  }
}

/// Partner of the anchor at the given lag: earlier in time, right in space.
inline SpaceTimePoint partner(const DiscretizationSpec& spec, Axis axis,
                              const SpaceTimePoint& anchor, double lag, const FitWindow& w)
{
  SpaceTimePoint p = anchor;
  if (axis == Axis::time) {
    p.t -= lag;
    if (spec.kind == Scheme::eem_grid && !on_grid(spec.size, lag / spec.horizon))
      throw std::domain_error("EEM grid lags must be whole steps");
  } else if (axis == Axis::space) {
    p.x += lag;
  } else {
    throw std::invalid_argument("fit direction must be time or space");
  }
  const double tol = 1e-12;
  for (const auto& q : {anchor, p})
    if (q.t < w.t0 - tol || q.t > spec.horizon + tol || q.x < w.eps - tol ||
        q.x > 1.0 - w.eps + tol)
      throw std::domain_error("probe leaves the window [T0,T] x [eps,1-eps]");
  return p;
}

inline HolderFit fit_values(std::span<const double> lags, std::vector<double> values,
                            double expected)
{
  HolderFit f;
  f.lags.assign(lags.begin(), lags.end());
  f.values = std::move(values);
  f.expected_slope = expected;
  std::vector<double> lx, ly;
  f.floor_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (!(f.values[i] > 0.0)) throw std::domain_error("non-positive moment at a probed lag");
    lx.push_back(std::log(lags[i]));
    ly.push_back(std::log(f.values[i]));
    const double r = f.values[i] / std::pow(lags[i], expected);
    f.floor_ratio = std::min(f.floor_ratio, r);
    f.ceiling_ratio = std::max(f.ceiling_ratio, r);
  }
  const LineFit line = least_squares(lx, ly);
  f.slope = line.slope;
  f.intercept = line.intercept;
  f.max_residual = line.max_residual;
  return f;
}

}  // namespace detail

/// Fit of log E|X(anchor) - X(partner)|^2 against log lag.
inline HolderFit holder_fit(const DiscretizationSpec& spec, Axis axis,
                            const SpaceTimePoint& anchor, std::span<const double> lags,
                            const FitWindow& window = {})
{
  detail::check_ladder(lags);
  const CovarianceModel model(spec);
  std::vector<double> msq;
  for (double h : lags)
    msq.push_back(model.increment_msq(anchor, detail::partner(spec, axis, anchor, h, window)));
  return detail::fit_values(lags, std::move(msq), expected_slope(spec.kind, axis));
}

/// Fit of log Var(X(anchor) | X(partner)) against log lag. The floor ratio
/// is taken against the second-moment exponent.
inline HolderFit condvar_fit(const DiscretizationSpec& spec, Axis axis,
                             const SpaceTimePoint& anchor, std::span<const double> lags,
                             const FitWindow& window = {})
{
  detail::check_ladder(lags);
  const CovarianceModel model(spec);
  std::vector<double> cv;
  for (double h : lags)
    cv.push_back(
        model.cond_var_residual(anchor, detail::partner(spec, axis, anchor, h, window)));
  return detail::fit_values(lags, std::move(cv), expected_slope(spec.kind, axis));
}

/// Within-step ratios r_n = E|v(t,x) - v(t - h_n, x)|^2 / sqrt(h_n) for the
/// continuous exponential Euler field, with h_n = (t - t_i)/2 * 10^-n.
struct AnomalySequence
{
  std::vector<double> lags;
  std::vector<double> ratios;
};

inline AnomalySequence eem_anomaly_ratios(int m, double x, double t, int n_points,
                                          double horizon = 1.0,
                                          int modes = default_truncation)
{
  const auto spec = DiscretizationSpec::eem_continuous(m, horizon, modes);
  const double dt = spec.step();
  const double u = t / dt;
  const double ti = std::floor(u) * dt;
  if (on_grid(m, t / horizon) || t - ti < 0.5 * dt)
    throw std::domain_error("t must lie in the second half of a step interval");
  if (n_points < 1) throw std::invalid_argument("need at least one ratio");
  const CovarianceModel model(spec);
  AnomalySequence out;
  for (int n = 0; n < n_points; ++n) {
    const double h = 0.5 * (t - ti) * std::pow(10.0, -n);
    out.lags.push_back(h);
    out.ratios.push_back(model.increment_msq({t, x}, {t - h, x}) / std::sqrt(h));
  }
  return out;
}

/// Range of msq / sqrt(lag) over all whole-step lags from grid time t down
/// to the window start, on the grid-time EEM field.
struct RatioBounds
{
  double min = std::numeric_limits<double>::infinity();
  double max = 0.0;
};

inline RatioBounds eem_grid_lag_bounds(int m, double x, double t, double t0,
                                       double horizon = 1.0, int modes = default_truncation)
{
  const auto spec = DiscretizationSpec::eem_grid(m, horizon, modes);
  const CovarianceModel model(spec);
  const double dt = spec.step();
  const auto i = detail::step_floor(t, dt);
  RatioBounds b;
  for (std::int64_t j = 1; (i - j) * dt >= t0 - 1e-12 && i - j > 0; ++j) {
    const double lag = j * dt;
    const double r = model.increment_msq({i * dt, x}, {(i - j) * dt, x}) / std::sqrt(lag);
    b.min = std::min(b.min, r);
    b.max = std::max(b.max, r);
  }
  return b;
}

/// min over x != y in [eps, 1-eps] of
///   (|phi_1(x) - phi_1(y)|^2 + |phi_2(x) - phi_2(y)|^2) / |x - y|^2
/// for the sine basis and the interpolated FDM basis.
struct Coercivity
{
  double trig = 0.0;
  double interp = 0.0;
};

inline Coercivity sincos_coercivity(double eps, int n, int grid_resolution)
{
  if (!(eps > 0.0 && eps < 0.25)) throw std::invalid_argument("need 0 < eps < 1/4");
  if (n <= 8) throw std::invalid_argument("interpolated basis needs N > 8");
  if (grid_resolution < 2) throw std::invalid_argument("grid needs >= 2 points");
  std::vector<double> xs(grid_resolution);
  for (int i = 0; i < grid_resolution; ++i)
    xs[i] = eps + (1.0 - 2.0 * eps) * i / (grid_resolution - 1);
  Coercivity c{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (int i = 0; i < grid_resolution; ++i) {
    for (int j = i + 1; j < grid_resolution; ++j) {
      const double x = xs[i], y = xs[j], h2 = (x - y) * (x - y);
      const double a1 = sine_mode_difference(1, x, y), a2 = sine_mode_difference(2, x, y);
      const double b1 = interpolated_mode(1, n, x) - interpolated_mode(1, n, y);
      const double b2 = interpolated_mode(2, n, x) - interpolated_mode(2, n, y);
      c.trig = std::min(c.trig, (a1 * a1 + a2 * a2) / h2);
      c.interp = std::min(c.interp, (b1 * b1 + b2 * b2) / h2);
    }
  }
  return c;
}

/// Lower bound (exp(2 lambda_1 T0) - 1)/lambda_1 * sin^2(pi eps) on the
/// variance over [T0, T] x [eps, 1-eps].
inline double variance_floor_bound(const DiscretizationSpec& spec, double t0, double eps)
{
  const double l1 = eigenvalue(spec, 1);
  const double s = std::sin(std::numbers::pi * eps);
  return std::expm1(2.0 * l1 * t0) / l1 * s * s;
}

/// Minimum variance over a res x res grid of the window (grid x for FDM).
inline double variance_floor(const DiscretizationSpec& spec, double t0, double eps, int res = 17)
{
  const CovarianceModel model(spec);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < res; ++i) {
    double t = t0 + (spec.horizon - t0) * i / (res - 1);
    if (spec.kind == Scheme::eem_grid) t = kappa(spec.size, t / spec.horizon) * spec.horizon;
    if (t < t0 - 1e-12) continue;
    for (int j = 0; j < res; ++j) {
      double x = eps + (1.0 - 2.0 * eps) * j / (res - 1);
      if (spec.kind == Scheme::fdm) {
        x = std::ceil(x * spec.size - 1e-9) / spec.size;
        if (x > 1.0 - eps + 1e-12) continue;
      }
      best = std::min(best, model.variance({t, x}));
    }
  }
  return best;
}

}  // namespace hitlab
