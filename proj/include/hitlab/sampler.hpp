#pragma once

/// \file sampler.hpp
/// Exact Gaussian sampling of field paths, profiles and point clouds.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hitlab/covariance.hpp"
#include "hitlab/rng.hpp"

namespace hitlab {

enum class Axis
{
  time,   ///< x fixed, t varies
  space,  ///< t fixed, x varies
  joint   ///< arbitrary point cloud
};

inline const char* to_string(Axis a)
{
  switch (a) {
    case Axis::time: return "time";
    case Axis::space: return "space";
    case Axis::joint: return "joint";
  }
  return "unknown";
}

/// Field values on a grid; `values(j, i)` is component j at abscissa i.
struct PathSample
{
  DiscretizationSpec spec;
  Axis axis = Axis::time;
  double fixed = 0.0;  ///< the coordinate held fixed (x or t)
  std::vector<double> grid;
  std::vector<SpaceTimePoint> points;  ///< joint samples only
  Eigen::MatrixXd values;

  int dim() const { return static_cast<int>(values.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(values.cols()); }
};

inline constexpr std::size_t joint_sampling_cap = 4096;

namespace detail {

inline void check_dim(int d)
{
  if (d < 1) throw std::invalid_argument("field dimension d must be >= 1");
}

inline void check_time_grid(const DiscretizationSpec& spec, std::span<const double> grid)
{
  if (grid.empty()) throw std::invalid_argument("empty time grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument("time grid must be strictly increasing");
    check_query_point(spec, {grid[i], 0.5});
  }
}

/// Amplitude eta_k along `grid` by the exact transition
///   eta(t') = exp(lambda (t' - t)) eta(t) + sqrt(c w(t'; t, t')) Z.
/// Calls sink(i, eta) for each abscissa.
template <class Sink>
void mode_recursion(double lambda, double c, double dt, std::span<const double> grid,
                    Stream& rng, Sink&& sink)
{
  double eta = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double var = c * mode_weight(lambda, t, prev, t, dt);
    eta = std::exp(lambda * (t - prev)) * eta + std::sqrt(var) * rng.normal();
    sink(i, eta);
    prev = t;
  }
}

}  // namespace detail

/// Time path t -> X(t, x) on `time_grid`, d independent components.
/// Mode k of component j of path `path` draws from Stream(seed, path, j, k).
inline PathSample sample_time_path(const DiscretizationSpec& spec, double x,
                                   std::span<const double> time_grid, int d,
                                   std::uint64_t seed, std::uint64_t path = 0)
{
  detail::check_dim(d);
  detail::check_time_grid(spec, time_grid);
  if (x < 0.0 || x > 1.0) throw std::domain_error("space point must lie in [0, 1]");
  const ModeTable modes(spec);
  PathSample out{spec, Axis::time, x, {time_grid.begin(), time_grid.end()}, {}, {}};
  out.values = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(time_grid.size()));
  for (int j = 0; j < d; ++j) {
    for (int k = 1; k <= modes.size(); ++k) {
      const double f = modes.phi(k, x);
      Stream rng(seed, path, j, k);
      detail::mode_recursion(modes.lambda(k), modes.norm(k), spec.step(), time_grid, rng,
                             [&](std::size_t i, double eta) { out.values(j, i) += eta * f; });
    }
  }
  return out;
}

/// Space profile x -> X(t, x): mode amplitudes are independent N(0, c_k J_k(t,t)).
inline PathSample sample_space_profile(const DiscretizationSpec& spec, double t,
                                       std::span<const double> space_grid, int d,
                                       std::uint64_t seed, std::uint64_t path = 0)
{
  detail::check_dim(d);
  if (space_grid.empty()) throw std::invalid_argument("empty space grid");
  check_query_point(spec, {t, 0.5});
  for (double x : space_grid)
    if (x < 0.0 || x > 1.0) throw std::domain_error("space point must lie in [0, 1]");
  const ModeTable modes(spec);
  PathSample out{spec, Axis::space, t, {space_grid.begin(), space_grid.end()}, {}, {}};
  out.values = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(space_grid.size()));
  for (int j = 0; j < d; ++j) {
    for (int k = 1; k <= modes.size(); ++k) {
      Stream rng(seed, path, j, k);
      const double sd =
          std::sqrt(modes.norm(k) * mode_time_integral(modes.lambda(k), t, t, spec.step()));
      const double amp = sd * rng.normal();
      for (std::size_t i = 0; i < space_grid.size(); ++i)
        out.values(j, i) += amp * modes.phi(k, space_grid[i]);
    }
  }
  return out;
}

/// Arbitrary point cloud through the Cholesky factor of `cov_matrix`.
inline PathSample sample_joint(const DiscretizationSpec& spec,
                               std::span<const SpaceTimePoint> points, int d,
                               std::uint64_t seed, std::uint64_t path = 0,
                               std::size_t cap = joint_sampling_cap)
{
  detail::check_dim(d);
  if (points.empty()) throw std::invalid_argument("empty point set");
  if (points.size() > cap)
    throw std::invalid_argument("joint sampling limited to " + std::to_string(cap) + " points");
  const PsdMatrix c = cov_matrix(spec, points);
  const auto n = static_cast<Eigen::Index>(points.size());
  PathSample out{spec, Axis::joint, 0.0, {}, {points.begin(), points.end()}, {}};
  out.values.resize(d, n);
  Eigen::VectorXd z(n);
  for (int j = 0; j < d; ++j) {
    Stream rng(seed, path, j, 0);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
    out.values.row(j) = (c.factor().triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

/// Exact field (K modes) and SGM(N) driven by the same mode noises; the SGM
/// path is the exact path's first N-1 modes.
inline std::pair<PathSample, PathSample>
sample_coupled_exact_sgm(int modes, int n, double x, std::span<const double> time_grid, int d,
                         std::uint64_t seed, std::uint64_t path = 0, double horizon = 1.0)
{
  if (n - 1 > modes) throw std::invalid_argument("coupling needs N - 1 <= K");
  const auto exact = DiscretizationSpec::exact(modes, horizon);
  const auto sgm = DiscretizationSpec::sgm(n, horizon);
  detail::check_dim(d);
  detail::check_time_grid(exact, time_grid);
  PathSample a{exact, Axis::time, x, {time_grid.begin(), time_grid.end()}, {}, {}};
  PathSample b{sgm, Axis::time, x, a.grid, {}, {}};
  a.values = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(time_grid.size()));
  b.values = a.values;
  for (int j = 0; j < d; ++j) {
    for (int k = 1; k <= modes; ++k) {
      const double f = sine_mode(k, x);
      Stream rng(seed, path, j, k);
      detail::mode_recursion(eigenvalue(Scheme::exact, k), 1.0, 0.0, time_grid, rng,
                             [&](std::size_t i, double eta) {
                               a.values(j, i) += eta * f;
                               if (k <= n - 1) b.values(j, i) += eta * f;
                             });
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace hitlab
