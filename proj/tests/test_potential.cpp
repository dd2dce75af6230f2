#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hitlab/hitting.hpp"
#include "hitlab/potential.hpp"

using namespace hitlab;

namespace {

// Dyadic cubes of side 2^-j (in R^3) that meet the closed ball B(0, r).
long covering_count(double r, int j)
{
  const double h = std::ldexp(1.0, -j);
  const long lo = static_cast<long>(std::floor(-r / h)), hi = static_cast<long>(std::ceil(r / h));
  auto gap = [h](long i) {  // distance from 0 to the interval [i h, (i+1) h]
    const double a = i * h, b = a + h;
    return a > 0 ? a : (b < 0 ? -b : 0.0);
  };
  long n = 0;
  for (long i = lo; i < hi; ++i)
    for (long k = lo; k < hi; ++k)
      for (long l = lo; l < hi; ++l) {
        const double gi = gap(i), gk = gap(k), gl = gap(l);
        if (gi * gi + gk * gk + gl * gl <= r * r) ++n;
      }
  return n;
}

}  // namespace

TEST(Kernel, BranchValues)
{
  EXPECT_DOUBLE_EQ(riesz_kernel(2.0, 0.5), 4.0);
  EXPECT_DOUBLE_EQ(riesz_kernel(0.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(riesz_kernel(-1.0, 0.1), 1.0);
  EXPECT_NEAR(riesz_kernel(0.0, 0.1), 1.0 + std::log(10.0), 1e-15);
  EXPECT_TRUE(std::isinf(riesz_kernel(0.0, 0.0)));
  EXPECT_TRUE(std::isinf(riesz_kernel(0.5, 0.0)));
  EXPECT_EQ(riesz_kernel(-2.0, 0.0), 1.0);
  EXPECT_THROW(riesz_kernel(1.0, -0.1), std::domain_error);
}

TEST(Kernel, BranchesAgreeAtUnitDistance)
{
  for (double b : {-1.0, 0.0, 0.5, 2.0}) EXPECT_DOUBLE_EQ(riesz_kernel(b, 1.0), 1.0) << b;
}

TEST(Energy, LogEnergyOfUnitSegment)
{
  // 2D midpoint oracle of int int (1 - log|x - y|) over the unit square
  const int n = 4000;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      s += 1.0 - std::log(std::abs(i - j) / double(n));
    }
  // diagonal cells: int int over a cell of side h of -log|x-y| = h^2 (3/2 - log h)
  const double h = 1.0 / n;
  const double oracle = s * h * h + n * h * h * (1.0 + 1.5 - std::log(h));
  EXPECT_NEAR(oracle, 2.5, 1e-3);

  const auto e = energy(0.0, SetDescriptor::segment({0.0}, {1.0}));
  EXPECT_NEAR(e.value, 2.5, 0.01);
  EXPECT_NEAR(e.value, 2.5, 1e-10);
  EXPECT_EQ(e.method, EnergyResult::Method::quadrature);
  EXPECT_NEAR(e.capacity_lower_bound, 0.4, 1e-10);
}

TEST(Energy, LongSegmentAndRieszOrders)
{
  // length 2, beta = 0: int_0^1 (1 - log min(2w,1)) 2(1-w) dw by midpoint sum
  const auto e = energy(0.0, SetDescriptor::segment({0.0, 0.0}, {2.0, 0.0}));
  double quad = 0.0;
  const int n = 2000000;
  for (int i = 0; i < n; ++i) {
    const double w = (i + 0.5) / n;
    quad += riesz_kernel(0.0, 2.0 * w) * 2.0 * (1.0 - w) / n;
  }
  EXPECT_NEAR(e.value, quad, 1e-6);
  // beta = 0.5 on the unit segment: 2 int_0^1 w^-1/2 (1-w) dw = 2 (2 - 2/3)
  EXPECT_NEAR(energy(0.5, SetDescriptor::segment({0.0}, {1.0})).value, 8.0 / 3.0, 1e-9);
}

TEST(Energy, NegativeOrderIsOne)
{
  for (const auto& s : {SetDescriptor::point({0.0, 0.0}), SetDescriptor::ball({0, 0, 0}, 0.3),
                        SetDescriptor::segment({0.0}, {1.0})}) {
    const auto e = energy(-1.0, s);
    EXPECT_EQ(e.value, 1.0);
    EXPECT_EQ(e.capacity_lower_bound, 1.0);
  }
}

TEST(Energy, InfiniteAboveDimension)
{
  EXPECT_TRUE(std::isinf(energy(0.0, SetDescriptor::point({0.1})).value));
  EXPECT_EQ(energy(0.0, SetDescriptor::point({0.1})).capacity_lower_bound, 0.0);
  EXPECT_TRUE(std::isinf(energy(1.0, SetDescriptor::segment({0.0}, {1.0})).value));
  EXPECT_TRUE(std::isinf(energy(3.0, SetDescriptor::ball({0, 0, 0}, 0.5), 1000).value));
}

TEST(Energy, BallRadiusScaling)
{
  const double beta = 0.5;
  const auto a = energy(beta, SetDescriptor::ball({0, 0, 0}, 0.2));
  const auto b = energy(beta, SetDescriptor::ball({0, 0, 0}, 0.1));
  EXPECT_EQ(a.method, EnergyResult::Method::monte_carlo);
  EXPECT_GT(a.error_estimate, 0.0);
  const double exponent = std::log(b.value / a.value) / std::log(0.5);
  EXPECT_NEAR(exponent, -beta, 0.1 * beta);
  EXPECT_NEAR(b.value / a.value, std::sqrt(2.0), 0.02 * std::sqrt(2.0));
}

TEST(Energy, NonincreasingInRadius)
{
  double prev = infinity;
  for (double r : {0.05, 0.1, 0.2, 0.4, 0.8}) {
    const auto e = energy(1.0, SetDescriptor::ball({0.0, 0.0, 0.0}, r), 200000);
    EXPECT_LE(e.value, prev);
    prev = e.value;
  }
}

TEST(Hausdorff, Classes)
{
  using K = HausdorffClass::Kind;
  EXPECT_EQ(hausdorff_class(-1.0, SetDescriptor::ball({0, 0}, 1)).kind, K::infinite);
  EXPECT_EQ(hausdorff_class(1.0, SetDescriptor::point({0, 0})).kind, K::zero);
  EXPECT_EQ(hausdorff_class(0.0, SetDescriptor::point({0, 0})).kind, K::finite_positive);
  EXPECT_EQ(hausdorff_class(2.0, SetDescriptor::ball({0, 0, 0}, 1)).kind, K::infinite);
  EXPECT_EQ(hausdorff_class(4.0, SetDescriptor::ball({0, 0, 0}, 1)).kind, K::zero);
  EXPECT_EQ(hausdorff_class(1.0, SetDescriptor::segment({0.0, 0.0}, {1.0, 1.0})).kind, K::finite_positive);
  EXPECT_EQ(hausdorff_class(0.5, SetDescriptor::segment({0.0}, {1.0})).kind, K::infinite);
  const auto h = hausdorff_class(3.0, SetDescriptor::ball({0, 0, 0}, 0.5));
  EXPECT_EQ(h.kind, K::finite_positive);
  EXPECT_EQ(h.scaling_exponent, 3.0);
}

TEST(Hausdorff, BallScalingMatchesDyadicCovering)
{
  const long big = covering_count(0.5, 7), small = covering_count(0.25, 7);
  const double exponent = std::log2(static_cast<double>(big) / small);
  const auto h = hausdorff_class(3.0, SetDescriptor::ball({0, 0, 0}, 0.5));
  EXPECT_NEAR(exponent, h.scaling_exponent, 0.2);
  RecordProperty("covering_exponent", std::to_string(exponent));
}

TEST(Frostman, Predictions)
{
  const auto pt = SetDescriptor::point({0, 0, 0});
  const auto a = frostman_prediction(3, 4.0, pt);
  EXPECT_TRUE(a.capacity_positive);
  EXPECT_FALSE(a.hausdorff_zero);
  EXPECT_TRUE(a.vanishing_under_halving);
  const auto b = frostman_prediction(3, 2.0, pt);
  EXPECT_TRUE(b.hausdorff_zero);
  EXPECT_FALSE(b.capacity_positive);
  EXPECT_TRUE(frostman_prediction(1, 2.0, SetDescriptor::point({0})).capacity_positive);
  EXPECT_THROW(frostman_prediction(0, 2.0, pt), std::invalid_argument);
}

TEST(Frostman, CapacityConsistentWithPolarity)
{
  for (int d : {1, 2, 3, 4, 5})
    for (double q : {1.0, 2.0, 4.0}) {
      const auto ball = SetDescriptor::ball(std::vector<double>(d, 0.0), 0.2);
      if (!(d < ball.hausdorff_dim() + q)) continue;
      const auto e = energy(d - q, ball, 20000);
      EXPECT_GT(e.capacity_lower_bound, 0.0) << "d=" << d << " Q=" << q;
      if (polarity_verdict(d, q) == Polarity::nonpolar) EXPECT_TRUE(frostman_prediction(d, q, ball).capacity_positive);
    }
}
