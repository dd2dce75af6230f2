#pragma once

/// \file ou.hpp
/// Finite-dimensional benchmark: dY = -lambda Y dt + dB and three of its
/// continuous-time numerical versions,
///   exact          Y(t)  = int_0^t exp(-lambda (t - r)) dB(r)
///   eem-continuous Y(t)  = int_0^t exp(-lambda (t - [r/dt] dt)) dB(r)
///   em-continuous  Y(t)  = int_0^t (1 - lambda dt)^[(t - r)/dt] dB(r)
///   em-linear      linear interpolation of the Euler-Maruyama values Y_i.
/// Components are independent; everything below is per component.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hitlab/covariance.hpp"
#include "hitlab/hitting.hpp"
#include "hitlab/regularity.hpp"
#include "hitlab/rng.hpp"

namespace hitlab {

enum class OuScheme
{
  exact,
  eem_continuous,
  em_continuous,
  em_linear_interp
};

inline const char* to_string(OuScheme s)
{
  switch (s) {
    case OuScheme::exact: return "exact";
    case OuScheme::eem_continuous: return "eem-continuous";
    case OuScheme::em_continuous: return "em-continuous";
    case OuScheme::em_linear_interp: return "em-linear";
  }
  return "unknown";
}

inline OuScheme ou_scheme_from_string(const std::string& s)
{
  if (s == "exact") return OuScheme::exact;
  if (s == "eem-continuous") return OuScheme::eem_continuous;
  if (s == "em-continuous") return OuScheme::em_continuous;
  if (s == "em-linear") return OuScheme::em_linear_interp;
  throw std::invalid_argument("unknown OU scheme '" + s + "'");
}

struct OuSpec
{
  double lambda = 1.0;
  double dt = 0.05;
  double horizon = 1.0;
  double t0 = 0.5;
  OuScheme scheme = OuScheme::exact;

  bool is_em() const
  {
    return scheme == OuScheme::em_continuous || scheme == OuScheme::em_linear_interp;
  }

  /// Euler-Maruyama amplification factor 1 - lambda dt.
  double amplification() const { return 1.0 - lambda * dt; }

  void validate() const
  {
    if (!(lambda > 0.0)) throw std::invalid_argument("OU drift lambda must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("OU step dt must be > 0");
    if (is_em() && !(dt < 1.0 / lambda))
      throw std::invalid_argument("Euler-Maruyama variants need dt < 1/lambda");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon T must be > 0");
    if (!(t0 > 0.0 && t0 < horizon)) throw std::invalid_argument("need 0 < T0 < T");
  }
};

namespace detail {

inline void check_ou_times(const OuSpec& spec, double t, double s)
{
  if (!(s > 0.0) || !(t > 0.0)) throw std::domain_error("OU times must be > 0");
  if (t > spec.horizon * (1.0 + 1e-12) || s > spec.horizon * (1.0 + 1e-12))
    throw std::domain_error("OU times must be <= T");
}

/// Euler-Maruyama kernel a^[(t - r)/dt] for r < t, 0 otherwise.
inline double em_kernel(const OuSpec& spec, double t, double r)
{
  if (r >= t) return 0.0;
  return std::pow(spec.amplification(), static_cast<double>(step_floor(t - r, spec.dt)));
}

/// int_0^upper f(r) dr for f piecewise constant between the sorted
/// breakpoints, each piece evaluated at its midpoint.
template <class F>
double piecewise_integral(std::vector<double> cuts, double upper, F&& f)
{
  cuts.push_back(0.0);
  cuts.push_back(upper);
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = std::max(0.0, cuts[i]), b = std::min(upper, cuts[i + 1]);
    if (b > a) sum += (b - a) * f(0.5 * (a + b));
  }
  return sum;
}

/// Breakpoints t - m dt inside (0, upper).
inline void add_breaks(std::vector<double>& cuts, double t, double dt, double upper)
{
  for (std::int64_t m = 0;; ++m) {
    const double b = t - static_cast<double>(m) * dt;
    if (b <= 0.0) break;
    if (b < upper) cuts.push_back(b);
  }
}

/// Cov(Y_i, Y_j) of the discrete Euler-Maruyama chain Y_0 = 0.
inline double em_discrete_cov(const OuSpec& spec, std::int64_t i, std::int64_t j)
{
  const std::int64_t m = std::min(i, j);
  if (m <= 0) return 0.0;
  const double a = spec.amplification();
  const double a2 = a * a;
  const double geo = a2 == 1.0 ? static_cast<double>(m) : (1.0 - std::pow(a2, m)) / (1.0 - a2);
  return spec.dt * std::pow(a, static_cast<double>(std::abs(i - j))) * geo;
}

/// Linear-interpolation weights: Y(t) = (1 - th) Y_i + th Y_{i+1}.
struct InterpWeights
{
  std::int64_t i;
  double theta;
};

inline InterpWeights interp_weights(const OuSpec& spec, double t)
{
  const std::int64_t i = step_floor(t, spec.dt);
  const double theta = std::max(0.0, t / spec.dt - static_cast<double>(i));
  return {i, theta};
}

}  // namespace detail

inline double ou_cov(const OuSpec& spec, double t, double s)
{
  spec.validate();
  detail::check_ou_times(spec, t, s);
  if (s > t) std::swap(s, t);
  switch (spec.scheme) {
    case OuScheme::exact: return mode_time_integral(-spec.lambda, t, s);
    case OuScheme::eem_continuous: return mode_time_integral(-spec.lambda, t, s, spec.dt);
    case OuScheme::em_continuous: {
      std::vector<double> cuts;
      detail::add_breaks(cuts, t, spec.dt, s);
      detail::add_breaks(cuts, s, spec.dt, s);
      return detail::piecewise_integral(cuts, s, [&](double r) {
        return detail::em_kernel(spec, t, r) * detail::em_kernel(spec, s, r);
      });
    }
    case OuScheme::em_linear_interp: {
      const auto p = detail::interp_weights(spec, t), q = detail::interp_weights(spec, s);
      const double wp[2] = {1.0 - p.theta, p.theta}, wq[2] = {1.0 - q.theta, q.theta};
      double sum = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (wp[a] != 0.0 && wq[b] != 0.0)
            sum += wp[a] * wq[b] * detail::em_discrete_cov(spec, p.i + a, q.i + b);
      return sum;
    }
  }
  return 0.0;
}

inline double ou_variance(const OuSpec& spec, double t) { return ou_cov(spec, t, t); }

/// E|Y(t) - Y(s)|^2 in cancellation-free form.
inline double ou_increment_msq(const OuSpec& spec, double t, double s)
{
  spec.validate();
  detail::check_ou_times(spec, t, s);
  if (s > t) std::swap(s, t);
  if (t == s) return 0.0;
  const double l = -spec.lambda;
  switch (spec.scheme) {
    case OuScheme::exact:
    case OuScheme::eem_continuous: {
      const double dt = spec.scheme == OuScheme::exact ? 0.0 : spec.dt;
      const double e = std::expm1(l * (t - s));
      return detail::mode_weight(l, s, 0.0, s, dt) * e * e + detail::mode_weight(l, t, s, t, dt);
    }
    case OuScheme::em_continuous: {
      std::vector<double> cuts{s};
      detail::add_breaks(cuts, t, spec.dt, t);
      detail::add_breaks(cuts, s, spec.dt, t);
      return detail::piecewise_integral(cuts, t, [&](double r) {
        const double u = detail::em_kernel(spec, t, r) - detail::em_kernel(spec, s, r);
        return u * u;
      });
    }
    case OuScheme::em_linear_interp: {
      const auto p = detail::interp_weights(spec, t), q = detail::interp_weights(spec, s);
      if (p.i == q.i || (p.i == q.i + 1 && p.theta == 0.0)) {
        // one interpolation segment: ((t - s)/dt)^2 E|Y_{i+1} - Y_i|^2
        const double a = spec.amplification();
        const double step = (a - 1.0) * (a - 1.0) * detail::em_discrete_cov(spec, q.i, q.i) + spec.dt;
        const double u = (t - s) / spec.dt;
        return u * u * step;
      }
      return ou_variance(spec, t) + ou_variance(spec, s) - 2.0 * ou_cov(spec, t, s);
    }
  }
  return 0.0;
}

/// Variance of the recent segment int_s^t K(t, r)^2 dr of the kernel.
inline double ou_fresh_variance(const OuSpec& spec, double t, double s)
{
  spec.validate();
  if (s > t) std::swap(s, t);
  const double l = -spec.lambda;
  switch (spec.scheme) {
    case OuScheme::exact: return detail::mode_weight(l, t, s, t, 0.0);
    case OuScheme::eem_continuous: return detail::mode_weight(l, t, s, t, spec.dt);
    case OuScheme::em_continuous: {
      std::vector<double> cuts{s};
      detail::add_breaks(cuts, t, spec.dt, t);
      return detail::piecewise_integral(cuts, t, [&](double r) {
        if (r < s) return 0.0;
        const double k = detail::em_kernel(spec, t, r);
        return k * k;
      });
    }
    case OuScheme::em_linear_interp: break;
  }
  throw std::invalid_argument("no kernel representation for the interpolated scheme");
}

/// Log-log fit of the increment second moment anchored at T, lags reaching
/// back into [T0, T].
inline HolderFit ou_increment_bounds(const OuSpec& spec, std::span<const double> lags)
{
  spec.validate();
  detail::check_ladder(lags);
  std::vector<double> msq;
  for (double h : lags) {
    if (spec.horizon - h < spec.t0 - 1e-12)
      throw std::domain_error("lag leaves the window [T0, T]");
    msq.push_back(ou_increment_msq(spec, spec.horizon, spec.horizon - h));
  }
  return detail::fit_values(lags, std::move(msq), 1.0);
}

//---------------------------------------------------------------------------//
// Sampling
//---------------------------------------------------------------------------//

/// Continuous Euler-Maruyama paths: B is sampled exactly on the union of the
/// points t_i - m dt and Y(t_i) = sum_m a^m (B(t_i - m dt) - B(t_i - (m+1) dt)).
class EmContinuousGenerator final : public PathGenerator
{
 public:
  EmContinuousGenerator(const OuSpec& spec, std::vector<double> grid)
      : n_(static_cast<Eigen::Index>(grid.size())), a_(spec.amplification())
  {
    std::vector<double> pts{0.0};
    for (double t : grid) detail::add_breaks(pts, t, spec.dt, spec.horizon * 2.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double x, double y) { return std::abs(x - y) <= 1e-14; }),
              pts.end());
    times_ = pts;
    auto index = [&](double v) {
      if (v <= 0.0) return std::size_t{0};
      auto it = std::lower_bound(times_.begin(), times_.end(), v - 1e-14);
      return static_cast<std::size_t>(it - times_.begin());
    };
    offsets_.push_back(0);
    for (double t : grid) {
      for (std::int64_t m = 0;; ++m) {
        const double hi = t - static_cast<double>(m) * spec.dt;
        if (hi <= 0.0) break;
        terms_.push_back({index(hi), index(hi - spec.dt)});
      }
      offsets_.push_back(terms_.size());
    }
  }

  Eigen::Index length() const override { return n_; }
  std::string route() const override { return "brownian-union"; }

  void generate(std::uint64_t seed, std::span<const Column> cols,
                Eigen::Ref<Eigen::MatrixXd> out) const override
  {
    std::vector<double> b(times_.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      Stream rng(seed, cols[c].path, cols[c].component, 0);
      b[0] = 0.0;
      for (std::size_t i = 1; i < times_.size(); ++i)
        b[i] = b[i - 1] + std::sqrt(times_[i] - times_[i - 1]) * rng.normal();
      for (Eigen::Index i = 0; i < n_; ++i) {
        double y = 0.0, w = 1.0;
        for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
          y += w * (b[terms_[k].first] - b[terms_[k].second]);
          w *= a_;
        }
        out(i, static_cast<Eigen::Index>(c)) = y;
      }
    }
  }

 private:
  Eigen::Index n_;
  double a_;
  std::vector<double> times_;
  std::vector<std::pair<std::size_t, std::size_t>> terms_;
  std::vector<std::size_t> offsets_;
};

/// Linear interpolation of the Euler-Maruyama chain.
class EmInterpGenerator final : public PathGenerator
{
 public:
  EmInterpGenerator(const OuSpec& spec, std::vector<double> grid)
      : spec_(spec), grid_(std::move(grid))
  {
    steps_ = detail::step_floor(grid_.back(), spec.dt) + 2;
  }

  Eigen::Index length() const override { return static_cast<Eigen::Index>(grid_.size()); }
  std::string route() const override { return "em-chain"; }

  void generate(std::uint64_t seed, std::span<const Column> cols,
                Eigen::Ref<Eigen::MatrixXd> out) const override
  {
    std::vector<double> y(static_cast<std::size_t>(steps_));
    const double a = spec_.amplification(), sd = std::sqrt(spec_.dt);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      Stream rng(seed, cols[c].path, cols[c].component, 0);
      y[0] = 0.0;
      for (std::size_t i = 1; i < y.size(); ++i) y[i] = a * y[i - 1] + sd * rng.normal();
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        const auto w = detail::interp_weights(spec_, grid_[i]);
        const auto k = static_cast<std::size_t>(w.i);
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            w.theta == 0.0 ? y[k] : (1.0 - w.theta) * y[k] + w.theta * y[k + 1];
      }
    }
  }

 private:
  OuSpec spec_;
  std::vector<double> grid_;
  std::int64_t steps_;
};

inline std::unique_ptr<PathGenerator> make_ou_generator(const OuSpec& spec,
                                                        std::vector<double> grid)
{
  spec.validate();
  if (grid.empty()) throw std::invalid_argument("empty time grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    detail::check_ou_times(spec, grid[i], grid[i]);
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("time grid must be strictly increasing");
  }
  switch (spec.scheme) {
    case OuScheme::exact:
    case OuScheme::eem_continuous:
      return std::make_unique<ModeRecursionGenerator>(
          std::vector<double>{-spec.lambda}, std::vector<double>{1.0}, std::vector<double>{1.0},
          std::vector<std::uint64_t>{1}, spec.scheme == OuScheme::exact ? 0.0 : spec.dt,
          std::move(grid));
    case OuScheme::em_continuous:
      return std::make_unique<EmContinuousGenerator>(spec, std::move(grid));
    case OuScheme::em_linear_interp:
      return std::make_unique<EmInterpGenerator>(spec, std::move(grid));
  }
  throw std::invalid_argument("unknown OU scheme");
}

inline std::vector<double> ou_window_grid(const OuSpec& spec, int resolution)
{
  if (resolution < 2 || (resolution & (resolution - 1)) != 0)
    throw std::invalid_argument("resolution must be a power of two >= 2");
  std::vector<double> g(resolution);
  for (int i = 0; i < resolution; ++i)
    g[i] = spec.t0 + (spec.horizon - spec.t0) * i / (resolution - 1);
  g.back() = spec.horizon;
  return g;
}

/// d-dimensional paths on `grid`: values(j, i) = component j at grid[i].
inline Eigen::MatrixXd ou_sample_path(const OuSpec& spec, const std::vector<double>& grid, int d,
                                      std::uint64_t seed, std::uint64_t path = 0)
{
  if (d < 1) throw std::invalid_argument("field dimension d must be >= 1");
  const auto gen = make_ou_generator(spec, grid);
  std::vector<Column> cols;
  for (int j = 0; j < d; ++j) cols.push_back({path, j});
  Eigen::MatrixXd buf(gen->length(), d);
  gen->generate(seed, cols, buf);
  return buf.transpose();
}

inline HitEstimate ou_hit_prob(const OuSpec& spec, int d, const HitTarget& target,
                               const McOptions& opt = {}, int resolution = default_resolution)
{
  if (d < 1) throw std::invalid_argument("field dimension d must be >= 1");
  target.validate(d);
  const auto gen = make_ou_generator(spec, ou_window_grid(spec, resolution));
  std::unique_ptr<PathGenerator> gen2;
  if (opt.doubling_check) gen2 = make_ou_generator(spec, ou_window_grid(spec, 2 * resolution));
  return hit_prob_from(*gen, gen2.get(), d, target, opt, resolution);
}

inline ScalingResult ou_hit_scaling(const OuSpec& spec, std::span<const double> center,
                                    std::span<const double> radii, int d,
                                    const McOptions& opt = {},
                                    int resolution = default_resolution)
{
  if (static_cast<int>(center.size()) != d)
    throw std::invalid_argument("center dimension does not match the field dimension d");
  const auto gen = make_ou_generator(spec, ou_window_grid(spec, resolution));
  std::unique_ptr<PathGenerator> gen2;
  if (opt.doubling_check) gen2 = make_ou_generator(spec, ou_window_grid(spec, 2 * resolution));
  return hit_scaling_from(*gen, gen2.get(), center, radii, d, opt, resolution);
}

}  // namespace hitlab
