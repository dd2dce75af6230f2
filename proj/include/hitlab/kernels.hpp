#pragma once

/// \file kernels.hpp
/// Dirichlet heat kernels on (0,1), their spectral and discrete counterparts,
/// and the sine eigenbases the fields are built from.
///
/// Every field in the library is a stochastic convolution
///   v(t,x) = int_0^t int_0^1 K(t, r, x, z) W(dr dz)
/// whose kernel factors over spectral modes k as
///   exp(lambda_k * tau) * phi_k(x) * psi_k(z).
/// `phi` is the basis seen by the solution, `psi` the basis seen by the noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hitlab {

enum class Scheme
{
  exact,          ///< exact solution, spectral sum truncated at K modes
  sgm,            ///< spectral Galerkin, modes 1..N-1
  fdm,            ///< central finite differences with linear interpolation
  eem_grid,       ///< exponential Euler, evaluated at step times only
  eem_continuous  ///< exponential Euler, continuous-time extension
};

inline std::string to_string(Scheme s)
{
  switch (s) {
    case Scheme::exact: return "exact";
    case Scheme::sgm: return "sgm";
    case Scheme::fdm: return "fdm";
    case Scheme::eem_grid: return "eem-grid";
    case Scheme::eem_continuous: return "eem-continuous";
  }
  return "unknown";
}

inline Scheme scheme_from_string(const std::string& s)
{
  if (s == "exact") return Scheme::exact;
  if (s == "sgm") return Scheme::sgm;
  if (s == "fdm") return Scheme::fdm;
  if (s == "eem-grid") return Scheme::eem_grid;
  if (s == "eem-continuous") return Scheme::eem_continuous;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

/// Default number of spectral modes kept for kernels that are infinite sums.
inline constexpr int default_truncation = 2000;

/// Below this time the exact kernel is evaluated through its image series.
inline constexpr double image_crossover_time = 0.05;

/// Which Gaussian field is being studied.
///
/// `size` is K for the exact field, N for SGM/FDM (modes 1..N-1) and M for
/// the exponential Euler schemes (step T/M). `truncation` is the spatial mode
/// count used by the EEM kernels, whose Green function is an infinite sum.
struct DiscretizationSpec
{
  Scheme kind = Scheme::exact;
  int size = default_truncation;
  int truncation = default_truncation;
  double horizon = 1.0;

  static DiscretizationSpec exact(int modes = default_truncation, double T = 1.0)
  {
    return checked({Scheme::exact, modes, modes, T});
  }
  static DiscretizationSpec sgm(int n, double T = 1.0)
  {
    return checked({Scheme::sgm, n, n - 1, T});
  }
  static DiscretizationSpec fdm(int n, double T = 1.0)
  {
    return checked({Scheme::fdm, n, n - 1, T});
  }
  static DiscretizationSpec eem_grid(int m, double T = 1.0, int modes = default_truncation)
  {
    return checked({Scheme::eem_grid, m, modes, T});
  }
  static DiscretizationSpec eem_continuous(int m, double T = 1.0,
                                           int modes = default_truncation)
  {
    return checked({Scheme::eem_continuous, m, modes, T});
  }

  bool is_eem() const { return kind == Scheme::eem_grid || kind == Scheme::eem_continuous; }

  /// Number of spectral modes carried by the kernel.
  int mode_count() const
  {
    switch (kind) {
      case Scheme::exact: return size;
      case Scheme::sgm:
      case Scheme::fdm: return size - 1;
      default: return truncation;
    }
  }

  /// Step size of the time quantization; 0 for continuous-time kernels.
  double step() const { return is_eem() ? horizon / size : 0.0; }

  /// True if the mode count is a truncation of an infinite sum.
  bool truncated() const { return kind == Scheme::exact || is_eem(); }

  void validate() const
  {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("horizon T must be a positive finite time");
    switch (kind) {
      case Scheme::exact:
        if (size < 1) throw std::invalid_argument("exact field needs K >= 1 modes");
        break;
      case Scheme::sgm:
      case Scheme::fdm:
        if (size < 2) throw std::invalid_argument("SGM/FDM need N >= 2");
        break;
      case Scheme::eem_grid:
      case Scheme::eem_continuous:
        if (size < 1) throw std::invalid_argument("EEM needs M >= 1 steps");
        if (truncation < 1) throw std::invalid_argument("EEM needs >= 1 spatial mode");
        break;
    }
  }

  std::string describe() const
  {
    std::string s = to_string(kind);
    switch (kind) {
      case Scheme::exact: s += "(K=" + std::to_string(size); break;
      case Scheme::sgm:
      case Scheme::fdm: s += "(N=" + std::to_string(size); break;
      default:
        s += "(M=" + std::to_string(size) + ",K=" + std::to_string(truncation);
        break;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, ",T=%.17g)", horizon);
    return s + buf;
  }

 private:
  static DiscretizationSpec checked(DiscretizationSpec s)
  {
    s.validate();
    return s;
  }
};

/// Upper bound on the pointwise variance dropped by truncating at `modes`
/// spectral modes: sum_{k>K} sup_x phi_k(x)^2 / (2 k^2 pi^2) < 1/(pi^2 K).
/// Valid for the exact kernel and for both EEM kernels.
inline double truncation_tail_bound(int modes)
{
  return 1.0 / (std::numbers::pi * std::numbers::pi * modes);
}

inline double truncation_tail_bound(const DiscretizationSpec& spec)
{
  return spec.truncated() ? truncation_tail_bound(spec.mode_count()) : 0.0;
}

//---------------------------------------------------------------------------//
// Eigenpairs and bases
//---------------------------------------------------------------------------//

/// e_k(x) = sqrt(2) sin(k pi x).
inline double sine_mode(int k, double x)
{
  return std::numbers::sqrt2 * std::sin(k * std::numbers::pi * x);
}

/// e_k(x) - e_k(y) without cancellation for nearby x, y.
inline double sine_mode_difference(int k, double x, double y)
{
  const double a = k * std::numbers::pi;
  return 2.0 * std::numbers::sqrt2 * std::cos(0.5 * a * (x + y)) * std::sin(0.5 * a * (x - y));
}

/// Index j with j/N the grid node at or below x, robust to the roundoff in
/// x = j/N itself.
inline std::int64_t grid_floor(int n, double x)
{
  const double nx = n * x;
  const double r = std::round(nx);
  if (std::abs(nx - r) <= 1e-10 * std::max(1.0, std::abs(nx)))
    return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(nx));
}

/// True if x lies on the grid {j/N}.
inline bool on_grid(int n, double x)
{
  const double nx = n * x;
  return std::abs(nx - std::round(nx)) <= 1e-10 * std::max(1.0, std::abs(nx));
}

/// kappa_N(x) = [N x] / N.
inline double kappa(int n, double x)
{
  return static_cast<double>(grid_floor(n, x)) / n;
}

/// FDM eigenvector e_k^N: linear interpolation of e_k through the nodes j/N.
inline double interpolated_mode(int k, int n, double x)
{
  const std::int64_t j = grid_floor(n, x);
  const double node = static_cast<double>(j) / n;
  const double left = sine_mode(k, node);
  const double frac = n * x - static_cast<double>(j);
  if (frac <= 0.0) return left;
  const double right = sine_mode(k, static_cast<double>(j + 1) / n);
  return left + frac * (right - left);
}

inline void check_mode_index(Scheme kind, int k, int n)
{
  if (k < 1) throw std::domain_error("mode index must be >= 1");
  if ((kind == Scheme::sgm || kind == Scheme::fdm) && k > n - 1)
    throw std::domain_error("mode index " + std::to_string(k) + " outside Z_N = {1,...," +
                            std::to_string(n - 1) + "}");
}

/// Eigenvalue lambda_k: -k^2 pi^2, or -4 N^2 sin^2(k pi / (2N)) for FDM.
inline double eigenvalue(Scheme kind, int k, int n = 0)
{
  check_mode_index(kind, k, n);
  if (kind == Scheme::fdm) {
    const double s = std::sin(k * std::numbers::pi / (2.0 * n));
    return -4.0 * n * static_cast<double>(n) * s * s;
  }
  const double kp = k * std::numbers::pi;
  return -kp * kp;
}

inline double eigenvalue(const DiscretizationSpec& spec, int k)
{
  return eigenvalue(spec.kind, k, spec.size);
}

enum class BasisRole
{
  solution,  ///< phi_k, the spatial profile of mode k in the field
  noise      ///< psi_k, the mode's projection of the white noise
};

/// Basis function value. FDM uses the interpolated eigenvector for the
/// solution and the piecewise-constant e_k(kappa_N(z)) for the noise; every
/// other kernel uses e_k for both.
inline double basis_eval(Scheme kind, int k, double x, int n = 0,
                         BasisRole role = BasisRole::solution)
{
  check_mode_index(kind, k, n);
  if (x < 0.0 || x > 1.0) throw std::domain_error("basis argument outside [0,1]");
  if (kind != Scheme::fdm) return sine_mode(k, x);
  if (role == BasisRole::noise) return sine_mode(k, kappa(n, x));
  return interpolated_mode(k, n, x);
}

/// c_k = int_0^1 psi_k(z)^2 dz. For FDM an exact N-term rectangle sum.
inline double noise_norm(Scheme kind, int k, int n = 0)
{
  check_mode_index(kind, k, n);
  if (kind != Scheme::fdm) return 1.0;
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double v = sine_mode(k, static_cast<double>(j) / n);
    sum += v * v;
  }
  return sum / n;
}

/// Precomputed eigenvalues and noise norms of a discretization.
class ModeTable
{
 public:
  explicit ModeTable(const DiscretizationSpec& spec) : spec_(spec)
  {
    spec.validate();
    const int count = spec.mode_count();
    lambda_.reserve(count);
    norm_.reserve(count);
    for (int k = 1; k <= count; ++k) {
      lambda_.push_back(eigenvalue(spec, k));
      norm_.push_back(noise_norm(spec.kind, k, spec.size));
    }
  }

  const DiscretizationSpec& spec() const { return spec_; }
  int size() const { return static_cast<int>(lambda_.size()); }
  double lambda(int k) const { return lambda_[k - 1]; }
  double norm(int k) const { return norm_[k - 1]; }

  double phi(int k, double x) const
  {
    return spec_.kind == Scheme::fdm ? interpolated_mode(k, spec_.size, x) : sine_mode(k, x);
  }

  double psi(int k, double z) const
  {
    return spec_.kind == Scheme::fdm ? sine_mode(k, kappa(spec_.size, z)) : sine_mode(k, z);
  }

  /// phi_k(x) - phi_k(y), cancellation-free for the trigonometric bases.
  double phi_difference(int k, double x, double y) const
  {
    if (spec_.kind == Scheme::fdm) return phi(k, x) - phi(k, y);
    return sine_mode_difference(k, x, y);
  }

 private:
  DiscretizationSpec spec_;
  std::vector<double> lambda_;
  std::vector<double> norm_;
};

//---------------------------------------------------------------------------//
// Green functions
//---------------------------------------------------------------------------//

/// Heat kernel on R: P_t(x,y) = exp(-(x-y)^2 / (4t)) / sqrt(4 pi t).
inline double heat_kernel(double t, double x, double y)
{
  if (!(t > 0.0)) throw std::domain_error("heat kernel needs t > 0");
  const double d = x - y;
  return std::exp(-d * d / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

/// Dirichlet kernel on (0,1) through the method of images:
///   G_t(x,y) = sum_{|n| <= n_img} [P_t(x - y + 2n) - P_t(x + y + 2n)].
inline double green_image(double t, double x, double y, int n_img = 8)
{
  if (!(t > 0.0)) throw std::domain_error("Green function needs t > 0");
  double sum = 0.0;
  for (int n = -n_img; n <= n_img; ++n)
    sum += heat_kernel(t, x - y + 2.0 * n, 0.0) - heat_kernel(t, x + y + 2.0 * n, 0.0);
  return sum;
}

/// Spectral sum over the modes of `table`: sum_k exp(lambda_k t) phi_k(x) psi_k(y).
inline double green_spectral(const ModeTable& table, double t, double x, double y)
{
  if (!(t > 0.0)) throw std::domain_error("Green function needs t > 0");
  double sum = 0.0;
  for (int k = 1; k <= table.size(); ++k)
    sum += std::exp(table.lambda(k) * t) * table.phi(k, x) * table.psi(k, y);
  return sum;
}

/// Kernel of `spec` at (t, x, y). The exact and EEM kernels are the Dirichlet
/// heat kernel; it is summed through images below `image_crossover_time` and
/// spectrally above it. SGM/FDM kernels are finite spectral sums.
inline double green(const DiscretizationSpec& spec, double t, double x, double y)
{
  if (!(t > 0.0)) throw std::domain_error("Green function needs t > 0");
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
    throw std::domain_error("Green function arguments outside [0,1]");
  if (spec.truncated() && t < image_crossover_time) return green_image(t, x, y);
  return green_spectral(ModeTable(spec), t, x, y);
}

/// Both representations of the exact kernel, for cross-checking.
struct GreenCrossCheck
{
  double spectral;
  double image;
  double discrepancy() const { return std::abs(spectral - image); }
};

inline GreenCrossCheck green_cross_check(int modes, double t, double x, double y,
                                         int n_img = 8)
{
  const ModeTable table(DiscretizationSpec::exact(modes));
  return {green_spectral(table, t, x, y), green_image(t, x, y, n_img)};
}

}  // namespace hitlab
