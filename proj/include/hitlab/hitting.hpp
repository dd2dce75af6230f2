#pragma once

/// \file hitting.hpp
/// Monte Carlo hitting probabilities of d-dimensional fields over time or
/// space sections, and the critical-dimension bookkeeping around them.
///
/// A path hits the target if at some grid abscissa its value lies within a
/// ball. Paths are produced by a PathGenerator; the engine hands out fixed
/// batches of `mc_batch_size` paths through an atomic counter, so estimates
/// depend on (seed, n_paths) only and never on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/distributions/beta.hpp>

#include "hitlab/covariance.hpp"
#include "hitlab/regularity.hpp"
#include "hitlab/rng.hpp"
#include "hitlab/sampler.hpp"

namespace hitlab {

inline constexpr int mc_batch_size = 32;
inline constexpr int default_resolution = 1 << 12;
inline constexpr Eigen::Index factorized_route_cap = 8192;
inline constexpr Eigen::Index direct_matrix_cap = 1024;

//---------------------------------------------------------------------------//
// Windows and targets
//---------------------------------------------------------------------------//

/// I = [lo, hi] x {fixed} (time section) or {fixed} x [lo, hi] (space section).
struct Window
{
  Axis axis = Axis::time;
  double fixed = 0.5;
  double lo = 0.5;
  double hi = 1.0;
  int resolution = default_resolution;

  static Window time_section(double x, double t0 = 0.5, double t1 = 1.0,
                             int res = default_resolution)
  {
    return {Axis::time, x, t0, t1, res};
  }
  static Window space_section(double t, double eps = 0.1, int res = default_resolution)
  {
    return {Axis::space, t, eps, 1.0 - eps, res};
  }

  Window doubled() const
  {
    Window w = *this;
    w.resolution *= 2;
    return w;
  }

  /// Throws std::invalid_argument naming the violated invariant.
  void validate(const DiscretizationSpec& spec) const
  {
    if (resolution < 2 || (resolution & (resolution - 1)) != 0)
      throw std::invalid_argument("resolution must be a power of two >= 2");
    if (axis == Axis::time) {
      if (!(lo > 0.0)) throw std::invalid_argument("window start T0 must be > 0");
      if (!(hi > lo)) throw std::invalid_argument("window needs T0 < T");
      if (hi > spec.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("window end exceeds the horizon T");
      if (!(fixed >= 0.0 && fixed <= 1.0))
        throw std::invalid_argument("fixed space point must lie in [0, 1]");
      if (spec.kind == Scheme::fdm &&
          (!on_grid(spec.size, fixed) || fixed <= 0.0 || fixed >= 1.0))
        throw std::invalid_argument(
            "finite-difference time sections require x on the space grid {1/N,...,(N-1)/N}");
      if (spec.kind == Scheme::eem_grid && step_times(spec).size() < 2)
        throw std::invalid_argument("window contains fewer than two step times");
    } else if (axis == Axis::space) {
      const double eps = lo;
      if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("need 0 < eps < 1/2");
      if (std::abs(hi - (1.0 - eps)) > 1e-12)
        throw std::invalid_argument("space window must be [eps, 1 - eps]");
      if (!(fixed > 0.0) || fixed > spec.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("fixed time must lie in (0, T]");
      if (spec.kind == Scheme::eem_grid && !on_grid(spec.size, fixed / spec.horizon))
        throw std::invalid_argument(
            "exponential Euler fields are evaluated at step times {T/M,...,T} only");
    } else {
      throw std::invalid_argument("window axis must be time or space");
    }
  }

  /// Grid abscissae: `resolution` equispaced points including both ends,
  /// or the step times inside [lo, hi] for a grid-time EEM time section.
  std::vector<double> grid(const DiscretizationSpec& spec) const
  {
    if (axis == Axis::time && spec.kind == Scheme::eem_grid) return step_times(spec);
    std::vector<double> g(resolution);
    for (int i = 0; i < resolution; ++i) g[i] = lo + (hi - lo) * i / (resolution - 1);
    g.back() = hi;
    return g;
  }

 private:
  std::vector<double> step_times(const DiscretizationSpec& spec) const
  {
    const double dt = spec.step();
    std::vector<double> g;
    for (std::int64_t i = static_cast<std::int64_t>(std::ceil(lo / dt - 1e-9));
         i * dt <= hi + 1e-12 * dt; ++i)
      g.push_back(static_cast<double>(i) * dt);
    return g;
  }
};

struct Ball
{
  std::vector<double> center;
  double radius = 0.0;
};

struct HitTarget
{
  std::vector<Ball> balls;

  static HitTarget ball(std::vector<double> center, double radius)
  {
    return {{Ball{std::move(center), radius}}};
  }

  void validate(int d) const
  {
    if (balls.empty()) throw std::invalid_argument("target needs at least one ball");
    for (const auto& b : balls) {
      if (!(b.radius >= 0.0)) throw std::invalid_argument("ball radius must be >= 0");
      if (static_cast<int>(b.center.size()) != d)
        throw std::invalid_argument("target dimension does not match the field dimension d");
    }
  }
};

//---------------------------------------------------------------------------//
// Estimates
//---------------------------------------------------------------------------//

enum class CiMethod
{
  wilson,
  clopper_pearson
};

struct Interval
{
  double lo = 0.0;
  double hi = 1.0;
};

inline Interval wilson_interval(std::int64_t hits, std::int64_t n, double z = 1.959963984540054)
{
  const double p = static_cast<double>(hits) / n;
  const double z2n = z * z / n;
  const double centre = (p + 0.5 * z2n) / (1.0 + z2n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n) / (1.0 + z2n);
  return {std::max(0.0, std::min(centre - half, p)), std::min(1.0, std::max(centre + half, p))};
}

inline Interval clopper_pearson_interval(std::int64_t hits, std::int64_t n, double alpha = 0.05)
{
  using boost::math::beta_distribution;
  using boost::math::quantile;
  Interval ci;
  ci.lo = hits == 0 ? 0.0
                    : quantile(beta_distribution<>(static_cast<double>(hits),
                                                   static_cast<double>(n - hits + 1)),
                               0.5 * alpha);
  ci.hi = hits == n ? 1.0
                    : quantile(beta_distribution<>(static_cast<double>(hits + 1),
                                                   static_cast<double>(n - hits)),
                               1.0 - 0.5 * alpha);
  return ci;
}

struct HitEstimate
{
  double p_hat = 0.0;
  std::int64_t hits = 0;
  std::int64_t n_trials = 0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  int resolution = 0;
  std::optional<double> p_doubled;  ///< estimate at twice the resolution
  bool converged = true;

  double half_width() const { return 0.5 * (ci_high - ci_low); }
};

inline HitEstimate make_estimate(std::int64_t hits, std::int64_t n, int resolution,
                                 CiMethod method = CiMethod::wilson)
{
  HitEstimate e;
  e.hits = hits;
  e.n_trials = n;
  e.p_hat = static_cast<double>(hits) / n;
  const Interval ci =
      method == CiMethod::wilson ? wilson_interval(hits, n) : clopper_pearson_interval(hits, n);
  e.ci_low = ci.lo;
  e.ci_high = ci.hi;
  e.resolution = resolution;
  return e;
}

/// Attach the resolution-doubling verdict: converged iff the estimate moves
/// by less than the CI half-width.
inline void attach_doubling(HitEstimate& e, double p_doubled)
{
  e.p_doubled = p_doubled;
  e.converged = std::abs(p_doubled - e.p_hat) < e.half_width();
}

struct McOptions
{
  std::int64_t n_paths = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  bool doubling_check = false;
  CiMethod ci = CiMethod::wilson;
};

//---------------------------------------------------------------------------//
// Path generators
//---------------------------------------------------------------------------//

/// One scalar path: component `component` of path `path`.
struct Column
{
  std::uint64_t path = 0;
  int component = 0;
};

class PathGenerator
{
 public:
  virtual ~PathGenerator() = default;
  virtual Eigen::Index length() const = 0;
  /// Fill out.col(c) with the scalar path for cols[c]; out is length() x cols.size().
  virtual void generate(std::uint64_t seed, std::span<const Column> cols,
                        Eigen::Ref<Eigen::MatrixXd> out) const = 0;
  virtual std::string route() const = 0;
};

/// Independent scalar modes sum_k eta_k(t_i) w_k, each advanced by its exact
/// Gaussian transition between consecutive abscissae. Mode k draws from
/// Stream(seed, path, component, k).
class ModeRecursionGenerator final : public PathGenerator
{
 public:
  /// `lambda`, `norm`, `weight` per mode; `lanes` are the stream lanes.
  ModeRecursionGenerator(std::vector<double> lambda, std::vector<double> norm,
                         std::vector<double> weight, std::vector<std::uint64_t> lanes,
                         double dt, std::vector<double> grid)
      : n_(static_cast<Eigen::Index>(grid.size())), weight_(std::move(weight)),
        lanes_(std::move(lanes))
  {
    const std::size_t m = lambda.size();
    decay_.resize(m * grid.size());
    sd_.resize(m * grid.size());
    for (std::size_t k = 0; k < m; ++k) {
      double prev = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        decay_[k * grid.size() + i] = std::exp(lambda[k] * (t - prev));
        sd_[k * grid.size() + i] =
            std::sqrt(norm[k] * detail::mode_weight(lambda[k], t, prev, t, dt));
        prev = t;
      }
    }
  }

  Eigen::Index length() const override { return n_; }
  std::string route() const override { return "mode-recursion"; }

  void generate(std::uint64_t seed, std::span<const Column> cols,
                Eigen::Ref<Eigen::MatrixXd> out) const override
  {
    out.setZero();
    const std::size_t n = static_cast<std::size_t>(n_);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      auto col = out.col(static_cast<Eigen::Index>(c));
      for (std::size_t k = 0; k < weight_.size(); ++k) {
        Stream rng(seed, cols[c].path, cols[c].component, lanes_[k]);
        const double* a = &decay_[k * n];
        const double* s = &sd_[k * n];
        const double w = weight_[k];
        double eta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          eta = a[i] * eta + s[i] * rng.normal();
          col(static_cast<Eigen::Index>(i)) += w * eta;
        }
      }
    }
  }

 private:
  Eigen::Index n_;
  std::vector<double> weight_;
  std::vector<std::uint64_t> lanes_;
  std::vector<double> decay_;
  std::vector<double> sd_;
};

/// X = F Z with F n x m (lower triangular when it is a Cholesky factor).
/// Column c draws m normals from Stream(seed, path, component, 0).
class FactorGenerator final : public PathGenerator
{
 public:
  FactorGenerator(Eigen::MatrixXd factor, bool lower, std::string route)
      : factor_(std::move(factor)), lower_(lower), route_(std::move(route))
  {
  }

  Eigen::Index length() const override { return factor_.rows(); }
  std::string route() const override { return route_; }
  const Eigen::MatrixXd& factor() const { return factor_; }

  void generate(std::uint64_t seed, std::span<const Column> cols,
                Eigen::Ref<Eigen::MatrixXd> out) const override
  {
    const Eigen::Index m = factor_.cols();
    Eigen::MatrixXd z(m, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      Stream rng(seed, cols[c].path, cols[c].component, 0);
      for (Eigen::Index i = 0; i < m; ++i) z(i, static_cast<Eigen::Index>(c)) = rng.normal();
    }
    if (lower_)
      out.noalias() = factor_.triangularView<Eigen::Lower>() * z;
    else
      out.noalias() = factor_ * z;
  }

 private:
  Eigen::MatrixXd factor_;
  bool lower_;
  std::string route_;
};

namespace detail {

/// In-place Cholesky with the same jitter policy as PsdMatrix. `rebuild`
/// refills the matrix after a failed attempt.
template <class Rebuild>
void factorize_in_place(Eigen::MatrixXd& c, Rebuild&& rebuild)
{
  const Eigen::Index n = c.rows();
  const double base = 1e-12 * c.trace() / static_cast<double>(n);
  for (int attempt = 0; attempt <= 4; ++attempt) {
    if (attempt > 0) {
      rebuild(c);
      c.diagonal().array() += base * std::pow(10.0, attempt - 1);
    }
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(c);
    if (llt.info() == Eigen::Success) {
      c.triangularView<Eigen::StrictlyUpper>().setZero();
      return;
    }
  }
  rebuild(c);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  throw non_psd_error("covariance matrix not positive semidefinite; min eigenvalue " +
                          std::to_string(min_eig),
                      min_eig);
}

inline bool uniform_spacing(std::span<const double> g)
{
  if (g.size() < 3) return true;
  const double h = (g.back() - g.front()) / (g.size() - 1);
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(g[i] - g[i - 1] - h) > 1e-9 * h) return false;
  return true;
}

}  // namespace detail

/// Chooses an exact sampling route for a field section:
///  - time sections with few active modes: per-mode recursion;
///  - continuous-kernel time sections on a uniform grid: Cholesky of the
///    covariance, assembled in O(nK) from C_ij = T[|i-j|] - H[i+j];
///  - small sections of any kernel: Cholesky of the directly assembled matrix;
///  - space sections: mode matrix, or Cholesky of its Gram matrix if the
///    modes outnumber the abscissae.
inline std::unique_ptr<PathGenerator> make_field_generator(const DiscretizationSpec& spec,
                                                           const Window& window)
{
  window.validate(spec);
  const std::vector<double> grid = window.grid(spec);
  const auto n = static_cast<Eigen::Index>(grid.size());
  const ModeTable modes(spec);
  const double dt = spec.step();

  if (window.axis == Axis::space) {
    const double t = window.fixed;
    Eigen::MatrixXd a(n, modes.size());
    for (int k = 1; k <= modes.size(); ++k) {
      const double sd =
          std::sqrt(modes.norm(k) * mode_time_integral(modes.lambda(k), t, t, dt));
      for (Eigen::Index i = 0; i < n; ++i) a(i, k - 1) = sd * modes.phi(k, grid[i]);
    }
    if (modes.size() <= n) return std::make_unique<FactorGenerator>(std::move(a), false, "mode-matrix");
    Eigen::MatrixXd c = a * a.transpose();
    detail::factorize_in_place(c, [&](Eigen::MatrixXd& m) { m.noalias() = a * a.transpose(); });
    return std::make_unique<FactorGenerator>(std::move(c), true, "cholesky");
  }

  const double x = window.fixed;
  std::vector<double> lambda, norm, weight;
  std::vector<std::uint64_t> lanes;
  for (int k = 1; k <= modes.size(); ++k) {
    const double f = modes.phi(k, x);
    if (f == 0.0) continue;
    lambda.push_back(modes.lambda(k));
    norm.push_back(modes.norm(k));
    weight.push_back(f);
    lanes.push_back(static_cast<std::uint64_t>(k));
  }
  const auto active = static_cast<Eigen::Index>(lambda.size());
  if (active == 0) throw std::domain_error("field vanishes identically at this x");

  auto recursion = [&] {
    return std::make_unique<ModeRecursionGenerator>(lambda, norm, weight, lanes, dt, grid);
  };
  if (active * 64 <= n) return recursion();

  if (dt == 0.0 && n <= factorized_route_cap && detail::uniform_spacing(grid)) {
    const double t0 = grid.front();
    const double h = n > 1 ? (grid.back() - grid.front()) / (n - 1) : 0.0;
    std::vector<double> toe(n, 0.0), han(2 * n - 1, 0.0);
    for (Eigen::Index k = 0; k < active; ++k) {
      const double l = lambda[k];
      const double w = norm[k] * weight[k] * weight[k] / (-2.0 * l);
      for (Eigen::Index m = 0; m < n; ++m) toe[m] += w * std::exp(l * m * h);
      for (Eigen::Index m = 0; m < 2 * n - 1; ++m) han[m] += w * std::exp(l * (2.0 * t0 + m * h));
    }
    auto fill = [&](Eigen::MatrixXd& c) {
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i) c(i, j) = c(j, i) = toe[i - j] - han[i + j];
    };
    Eigen::MatrixXd c(n, n);
    fill(c);
    detail::factorize_in_place(c, fill);
    return std::make_unique<FactorGenerator>(std::move(c), true, "toeplitz-hankel-cholesky");
  }

  if (n <= direct_matrix_cap) {
    const CovarianceModel model(spec);
    auto fill = [&](Eigen::MatrixXd& c) {
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i)
          c(i, j) = c(j, i) = model.cov({grid[i], x}, {grid[j], x});
    };
    Eigen::MatrixXd c(n, n);
    fill(c);
    detail::factorize_in_place(c, fill);
    return std::make_unique<FactorGenerator>(std::move(c), true, "cholesky");
  }
  return recursion();
}

//---------------------------------------------------------------------------//
// Engine
//---------------------------------------------------------------------------//

/// Per-path margin min_i min_b (|X_i - c_b| - r_b); the path hits iff <= 0.
inline std::vector<double> path_margins(const PathGenerator& gen, int d, const HitTarget& target,
                                        std::int64_t n_paths, std::uint64_t seed, int workers)
{
  target.validate(d);
  if (n_paths < 1) throw std::invalid_argument("need at least one path");
  std::vector<double> margins(static_cast<std::size_t>(n_paths));
  const std::int64_t n_batches = (n_paths + mc_batch_size - 1) / mc_batch_size;
  std::atomic<std::int64_t> next{0};
  const Eigen::Index n = gen.length();

  auto work = [&] {
    Eigen::MatrixXd buf;
    std::vector<Column> cols;
    for (std::int64_t b; (b = next.fetch_add(1)) < n_batches;) {
      const std::int64_t first = b * mc_batch_size;
      const std::int64_t count = std::min<std::int64_t>(mc_batch_size, n_paths - first);
      cols.clear();
      for (std::int64_t p = 0; p < count; ++p)
        for (int j = 0; j < d; ++j) cols.push_back({static_cast<std::uint64_t>(first + p), j});
      buf.resize(n, static_cast<Eigen::Index>(cols.size()));
      gen.generate(seed, cols, buf);
      for (std::int64_t p = 0; p < count; ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
          for (const auto& ball : target.balls) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
              const double u = buf(i, p * d + j) - ball.center[j];
              s += u * u;
            }
            best = std::min(best, std::sqrt(s) - ball.radius);
          }
        }
        margins[static_cast<std::size_t>(first + p)] = best;
      }
    }
  };

  const int w = std::max(1, workers);
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < w; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return margins;
}

inline std::int64_t count_hits(std::span<const double> margins, double slack = 0.0)
{
  return std::count_if(margins.begin(), margins.end(), [slack](double m) { return m <= slack; });
}

/// Estimate from an arbitrary generator; `doubled` (optional) yields the
/// same section at twice the resolution.
inline HitEstimate hit_prob_from(const PathGenerator& gen, const PathGenerator* doubled, int d,
                                 const HitTarget& target, const McOptions& opt, int resolution)
{
  if (opt.n_paths < 100) throw std::invalid_argument("n_paths must be >= 100");
  const auto m = path_margins(gen, d, target, opt.n_paths, opt.seed, opt.workers);
  HitEstimate e = make_estimate(count_hits(m), opt.n_paths, resolution, opt.ci);
  if (doubled) {
    const auto m2 = path_margins(*doubled, d, target, opt.n_paths, opt.seed, opt.workers);
    attach_doubling(e, static_cast<double>(count_hits(m2)) / opt.n_paths);
  }
  return e;
}

inline HitEstimate mc_hit_prob(const DiscretizationSpec& spec, const Window& window,
                               const HitTarget& target, int d, const McOptions& opt = {})
{
  if (d < 1) throw std::invalid_argument("field dimension d must be >= 1");
  target.validate(d);
  const auto gen = make_field_generator(spec, window);
  std::unique_ptr<PathGenerator> gen2;
  const bool grid_fixed = window.axis == Axis::time && spec.kind == Scheme::eem_grid;
  if (opt.doubling_check && !grid_fixed) gen2 = make_field_generator(spec, window.doubled());
  HitEstimate e = hit_prob_from(*gen, gen2.get(), d, target, opt,
                                static_cast<int>(gen->length()));
  if (opt.doubling_check && grid_fixed) attach_doubling(e, e.p_hat);
  return e;
}

/// Hitting probabilities of B(center, r) over a radius ladder, and the
/// log-log slope over unsaturated radii.
struct ScalingResult
{
  std::vector<double> radii;
  std::vector<HitEstimate> rows;
  double slope = 0.0;
  double intercept = 0.0;
  int fitted_points = 0;
  std::string route;

  bool converged() const
  {
    return std::all_of(rows.begin(), rows.end(), [](const HitEstimate& e) { return e.converged; });
  }
};

inline void check_radius_ladder(std::span<const double> radii)
{
  if (radii.size() < 4) throw std::invalid_argument("radius ladder needs >= 4 radii");
  for (double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("ladder radii must be positive");
  const double ratio = radii[1] / radii[0];
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (std::abs(radii[i] / radii[i - 1] - ratio) > 1e-9 * ratio || ratio == 1.0)
      throw std::invalid_argument("radii must form a geometric ladder");
}

/// Builds the scaling table from per-path distances to the center.
inline ScalingResult scaling_from(std::span<const double> dist,
                                  const std::vector<double>* dist2,
                                  std::span<const double> radii, int resolution, CiMethod ci)
{
  ScalingResult out;
  out.radii.assign(radii.begin(), radii.end());
  const auto n = static_cast<std::int64_t>(dist.size());
  std::vector<double> lx, ly;
  bool any_zero = false;
  for (double r : radii) {
    HitEstimate e = make_estimate(count_hits(dist, r), n, resolution, ci);
    if (dist2) attach_doubling(e, static_cast<double>(count_hits(*dist2, r)) / n);
    if (e.hits == 0) any_zero = true;
    if (e.hits > 0 && e.hits < n) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(e.p_hat));
    }
    out.rows.push_back(e);
  }
  out.fitted_points = static_cast<int>(lx.size());
  if (lx.size() >= 2) {
    const LineFit f = least_squares(lx, ly);
    out.slope = f.slope;
    out.intercept = f.intercept;
  } else if (any_zero) {
    throw std::domain_error("scaling slope undefined: too few radii with hits; enlarge the radii");
  }
  return out;
}

inline ScalingResult hit_scaling_from(const PathGenerator& gen, const PathGenerator* doubled,
                                      std::span<const double> center,
                                      std::span<const double> radii, int d,
                                      const McOptions& opt, int resolution)
{
  check_radius_ladder(radii);
  if (opt.n_paths < 100) throw std::invalid_argument("n_paths must be >= 100");
  const HitTarget probe = HitTarget::ball({center.begin(), center.end()}, 0.0);
  const auto dist = path_margins(gen, d, probe, opt.n_paths, opt.seed, opt.workers);
  std::vector<double> dist2;
  if (doubled) dist2 = path_margins(*doubled, d, probe, opt.n_paths, opt.seed, opt.workers);
  ScalingResult r = scaling_from(dist, doubled ? &dist2 : nullptr, radii, resolution, opt.ci);
  r.route = gen.route();
  return r;
}

inline ScalingResult hit_scaling(const DiscretizationSpec& spec, const Window& window,
                                 std::span<const double> center, std::span<const double> radii,
                                 int d, const McOptions& opt = {})
{
  if (static_cast<int>(center.size()) != d)
    throw std::invalid_argument("center dimension does not match the field dimension d");
  check_radius_ladder(radii);
  const auto gen = make_field_generator(spec, window);
  std::unique_ptr<PathGenerator> gen2;
  const bool grid_fixed = window.axis == Axis::time && spec.kind == Scheme::eem_grid;
  if (opt.doubling_check && !grid_fixed) gen2 = make_field_generator(spec, window.doubled());
  ScalingResult r = hit_scaling_from(*gen, gen2.get(), center, radii, d, opt,
                                     static_cast<int>(gen->length()));
  if (opt.doubling_check && grid_fixed)
    for (auto& e : r.rows) attach_doubling(e, e.p_hat);
  return r;
}

//---------------------------------------------------------------------------//
// Critical dimensions
//---------------------------------------------------------------------------//

enum class FieldKind
{
  exact,
  sgm,
  fdm,
  eem_grid,
  eem_continuous,
  ou_exact,
  ou_eem_continuous,
  ou_em_continuous
};

inline FieldKind field_kind(Scheme s)
{
  switch (s) {
    case Scheme::exact: return FieldKind::exact;
    case Scheme::sgm: return FieldKind::sgm;
    case Scheme::fdm: return FieldKind::fdm;
    case Scheme::eem_grid: return FieldKind::eem_grid;
    case Scheme::eem_continuous: return FieldKind::eem_continuous;
  }
  throw std::invalid_argument("unknown scheme");
}

struct CriticalDimension
{
  double q = 0.0;
  bool upper_bound_only = false;  ///< only the Hausdorff upper bound is known
};

inline CriticalDimension critical_dimension(FieldKind kind, Axis axis)
{
  switch (kind) {
    case FieldKind::exact:
      return {axis == Axis::time ? 4.0 : axis == Axis::space ? 2.0 : 6.0, false};
    case FieldKind::sgm:
      if (axis == Axis::time) return {2.0, false};
      if (axis == Axis::space) return {1.0, false};
      break;
    case FieldKind::fdm:
      if (axis == Axis::time) return {2.0, false};
      break;
    case FieldKind::eem_grid:
      if (axis == Axis::space) return {1.0, false};
      break;
    case FieldKind::eem_continuous:
      if (axis == Axis::time) return {2.0, true};
      break;
    case FieldKind::ou_exact:
    case FieldKind::ou_eem_continuous:
    case FieldKind::ou_em_continuous:
      if (axis == Axis::time) return {2.0, false};
      break;
  }
  throw std::invalid_argument("no critical dimension known for this field and direction");
}

enum class Polarity
{
  nonpolar,
  polar,
  critical
};

inline const char* to_string(Polarity p)
{
  switch (p) {
    case Polarity::nonpolar: return "nonpolar";
    case Polarity::polar: return "polar";
    case Polarity::critical: return "critical";
  }
  return "unknown";
}

/// Points are nonpolar iff d < Q and polar iff d > Q.
inline Polarity polarity_verdict(int d, double q)
{
  if (d < 1 || !(q > 0.0)) throw std::invalid_argument("need d >= 1 and Q > 0");
  if (d < q) return Polarity::nonpolar;
  if (d > q) return Polarity::polar;
  return Polarity::critical;
}

}  // namespace hitlab
