#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hitlab/hitting.hpp"

using namespace hitlab;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// P{X1 in [a,b] or X2 in [a,b]} for a centered bivariate normal.
double bivariate_interval_hit(double s1, double s2, double rho, double a, double b)
{
  auto p1 = [&](double s) { return normal_cdf(b / s) - normal_cdf(a / s); };
  const double sc = s2 * std::sqrt(1.0 - rho * rho);
  auto both = [&](double x) {
    const double m = rho * s2 / s1 * x;
    return normal_pdf(x / s1) / s1 * (normal_cdf((b - m) / sc) - normal_cdf((a - m) / sc));
  };
  const int n = 4000;
  const double h = (b - a) / n;
  double s = both(a) + both(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * both(a + i * h);
  return p1(s1) + p1(s2) - s * h / 3.0;
}

}  // namespace

TEST(Intervals, WilsonAndClopperPearson)
{
  const auto w = wilson_interval(30, 100);
  EXPECT_LT(w.lo, 0.3);
  EXPECT_GT(w.hi, 0.3);
  EXPECT_NEAR(w.lo, 0.2189, 1e-3);
  EXPECT_NEAR(w.hi, 0.3958, 1e-3);
  const auto z = wilson_interval(0, 50);
  EXPECT_EQ(z.lo, 0.0);
  EXPECT_GT(z.hi, 0.0);
  const auto cp = clopper_pearson_interval(3, 20);
  EXPECT_NEAR(cp.lo, 0.03207, 1e-4);
  EXPECT_NEAR(cp.hi, 0.37893, 1e-4);
  EXPECT_EQ(clopper_pearson_interval(20, 20).hi, 1.0);
  const auto e = make_estimate(7, 100, 64, CiMethod::clopper_pearson);
  EXPECT_LE(e.ci_low, e.p_hat);
  EXPECT_GE(e.ci_high, e.p_hat);
}

TEST(Window, Validation)
{
  const auto sgm = DiscretizationSpec::sgm(16);
  EXPECT_NO_THROW(Window::time_section(0.5).validate(sgm));
  EXPECT_THROW(Window::time_section(0.5, 0.5, 1.0, 1000).validate(sgm), std::invalid_argument);
  EXPECT_THROW(Window::time_section(0.5, 0.0, 1.0).validate(sgm), std::invalid_argument);
  EXPECT_THROW(Window::time_section(0.5, 0.5, 2.0).validate(sgm), std::invalid_argument);
  EXPECT_THROW(Window::space_section(0.5, 0.6).validate(sgm), std::invalid_argument);
  EXPECT_THROW(Window::space_section(0.5, 0.0).validate(sgm), std::invalid_argument);

  const auto fdm = DiscretizationSpec::fdm(8);
  EXPECT_NO_THROW(Window::time_section(0.5).validate(fdm));
  try {
    Window::time_section(0.3).validate(fdm);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("space grid"), std::string::npos);
  }
  const auto eem = DiscretizationSpec::eem_grid(16);
  EXPECT_NO_THROW(Window::space_section(0.75).validate(eem));
  try {
    Window::space_section(0.7).validate(eem);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("step times"), std::string::npos);
  }
  EXPECT_EQ(Window::time_section(0.5).grid(eem).size(), 9u);
  EXPECT_EQ(Window::time_section(0.5, 0.5, 1.0, 64).grid(sgm).size(), 64u);
}

TEST(Target, DimensionMismatch)
{
  const auto spec = DiscretizationSpec::sgm(8);
  McOptions opt;
  opt.n_paths = 100;
  EXPECT_THROW(mc_hit_prob(spec, Window::time_section(0.5, 0.5, 1.0, 64), HitTarget::ball({0.0, 0.0}, 0.1), 3, opt),
               std::invalid_argument);
  EXPECT_THROW(HitTarget::ball({0.0}, -1.0).validate(1), std::invalid_argument);
  opt.n_paths = 10;
  EXPECT_THROW(mc_hit_prob(spec, Window::time_section(0.5, 0.5, 1.0, 64), HitTarget::ball({0.0}, 0.1), 1, opt),
               std::invalid_argument);
}

TEST(HitProb, ZeroRadiusNeverHits)
{
  McOptions opt;
  opt.n_paths = 2000;
  const auto e = mc_hit_prob(DiscretizationSpec::sgm(16), Window::time_section(0.5, 0.5, 1.0, 256),
                             HitTarget::ball({0.1, 0.1}, 0.0), 2, opt);
  EXPECT_EQ(e.hits, 0);
  EXPECT_EQ(e.p_hat, 0.0);
}

TEST(HitProb, HugeRadiusAlwaysHits)
{
  McOptions opt;
  opt.n_paths = 2000;
  const auto spec = DiscretizationSpec::exact(500);
  EXPECT_LT(std::sqrt(variance(spec, {1.0, 0.5})), 1.0);
  const auto e = mc_hit_prob(spec, Window::time_section(0.5, 0.5, 1.0, 64), HitTarget::ball({0.0, 0.0, 0.0}, 1e3), 3, opt);
  EXPECT_EQ(e.p_hat, 1.0);
}

TEST(HitProb, BivariateNormalOracle)
{
  // One mode on the 2-point grid {0.5, 1}: the hit event is
  // {X(0.5) in I} or {X(1) in I}.
  const auto spec = DiscretizationSpec::sgm(2);
  const double c = 0.15, r = 0.1;
  McOptions opt;
  opt.n_paths = 100000;
  opt.seed = 3;
  const auto e = mc_hit_prob(spec, Window::time_section(0.5, 0.5, 1.0, 2), HitTarget::ball({c}, r), 1, opt);
  const double s1 = std::sqrt(variance(spec, {0.5, 0.5})), s2 = std::sqrt(variance(spec, {1.0, 0.5}));
  const double rho = cov(spec, {0.5, 0.5}, {1.0, 0.5}) / (s1 * s2);
  const double p = bivariate_interval_hit(s1, s2, rho, c - r, c + r);
  EXPECT_NEAR(e.p_hat, p, 3.0 * std::sqrt(p * (1 - p) / opt.n_paths));
  RecordProperty("oracle", std::to_string(p));
}

TEST(HitProb, WorkerCountDoesNotChangeResults)
{
  for (const auto& spec : {DiscretizationSpec::sgm(16), DiscretizationSpec::exact(300)}) {
    const auto gen = make_field_generator(spec, Window::time_section(0.5, 0.5, 1.0, 512));
    const auto target = HitTarget::ball({0.1, 0.1}, 0.05);
    const auto a = path_margins(*gen, 2, target, 1000, 42, 1);
    for (int w : {4, 16}) EXPECT_EQ(a, path_margins(*gen, 2, target, 1000, 42, w)) << gen->route();
  }
}

TEST(HitProb, MonotoneInRadius)
{
  McOptions opt;
  opt.n_paths = 4000;
  const std::vector<double> center = {0.1, 0.1, 0.1}, radii = {0.4, 0.2, 0.1, 0.05, 0.025};
  const auto s = hit_scaling(DiscretizationSpec::sgm(16), Window::time_section(0.5, 0.5, 1.0, 1024), center, radii, 3, opt);
  for (std::size_t i = 1; i < s.rows.size(); ++i) EXPECT_LE(s.rows[i].p_hat, s.rows[i - 1].p_hat);
  for (const auto& e : s.rows) {
    EXPECT_LE(e.ci_low, e.p_hat);
    EXPECT_GE(e.ci_high, e.p_hat);
  }
}

TEST(HitProb, MonotoneInWindowLength)
{
  // Step-time grids nest as the window grows, so margins are pathwise ordered.
  const auto eem = DiscretizationSpec::eem_grid(64);
  const auto target = HitTarget::ball({0.1, 0.1}, 0.0);
  const auto short_gen = make_field_generator(eem, Window::time_section(0.5, 0.5, 0.75));
  const auto long_gen = make_field_generator(eem, Window::time_section(0.5, 0.5, 1.0));
  const auto a = path_margins(*short_gen, 2, target, 2000, 5, 1);
  const auto b = path_margins(*long_gen, 2, target, 2000, 5, 1);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(b[i], a[i] + 1e-9);

  McOptions opt;
  opt.n_paths = 10000;
  const auto sgm = DiscretizationSpec::sgm(16);
  const auto target2 = HitTarget::ball({0.1, 0.1}, 0.1);
  const auto p_short = mc_hit_prob(sgm, Window::time_section(0.5, 0.5, 0.6, 512), target2, 2, opt);
  const auto p_long = mc_hit_prob(sgm, Window::time_section(0.5, 0.5, 1.0, 512), target2, 2, opt);
  EXPECT_GE(p_long.p_hat, p_short.p_hat);
}

TEST(HitProb, ExactFieldLineTargetConvergesUnderDoubling)
{
  McOptions opt;
  opt.n_paths = 10000;
  opt.doubling_check = true;
  const auto e = mc_hit_prob(DiscretizationSpec::exact(), Window::time_section(0.5), HitTarget::ball({0.0}, 0.05), 1, opt);
  EXPECT_GT(e.p_hat, 0.5);
  EXPECT_EQ(e.resolution, 4096);
  EXPECT_TRUE(e.converged) << "p=" << e.p_hat << " doubled=" << e.p_doubled.value_or(-1) << " hw=" << e.half_width();
  RecordProperty("p_hat", std::to_string(e.p_hat));
  RecordProperty("p_doubled", std::to_string(e.p_doubled.value_or(-1)));
}

TEST(HitProb, RoutesAgreeInDistribution)
{
  // mode recursion (SGM, few modes) vs the factor route on the same law
  const auto spec = DiscretizationSpec::sgm(8);
  const auto w = Window::time_section(0.5, 0.5, 1.0, 512);
  const auto rec = make_field_generator(spec, w);
  const auto fac = make_field_generator(spec, Window::time_section(0.5, 0.5, 1.0, 256));
  EXPECT_NE(rec->route(), fac->route());
  McOptions opt;
  opt.n_paths = 20000;
  const auto target = HitTarget::ball({0.2}, 0.02);
  const auto a = hit_prob_from(*rec, nullptr, 1, target, opt, 512);
  const auto b = hit_prob_from(*fac, nullptr, 1, target, opt, 256);
  // finer grid can only catch more; both estimate nearby probabilities
  EXPECT_NEAR(a.p_hat, b.p_hat, 4 * std::sqrt(a.p_hat * (1 - a.p_hat) / opt.n_paths) + 0.03);
}

TEST(HitScaling, SaturationAndEmptyLadders)
{
  McOptions opt;
  opt.n_paths = 500;
  const auto spec = DiscretizationSpec::sgm(16);
  const auto w = Window::time_section(0.5, 0.5, 1.0, 128);
  const std::vector<double> c = {0.0};
  const auto sat = hit_scaling(spec, w, c, std::vector<double>{800, 400, 200, 100}, 1, opt);
  for (const auto& e : sat.rows) EXPECT_EQ(e.p_hat, 1.0);
  EXPECT_EQ(sat.slope, 0.0);

  const std::vector<double> far = {50.0};
  EXPECT_THROW(hit_scaling(spec, w, far, std::vector<double>{0.8, 0.4, 0.2, 0.1}, 1, opt), std::domain_error);
  EXPECT_THROW(hit_scaling(spec, w, c, std::vector<double>{0.8, 0.4, 0.2}, 1, opt), std::invalid_argument);
  EXPECT_THROW(hit_scaling(spec, w, c, std::vector<double>{0.8, 0.4, 0.3, 0.1}, 1, opt), std::invalid_argument);
}

TEST(CriticalDimension, Table)
{
  EXPECT_EQ(critical_dimension(FieldKind::exact, Axis::time).q, 4.0);
  EXPECT_EQ(critical_dimension(FieldKind::exact, Axis::space).q, 2.0);
  EXPECT_EQ(critical_dimension(FieldKind::exact, Axis::joint).q, 6.0);
  EXPECT_EQ(critical_dimension(FieldKind::sgm, Axis::time).q, 2.0);
  EXPECT_EQ(critical_dimension(FieldKind::sgm, Axis::space).q, 1.0);
  EXPECT_EQ(critical_dimension(FieldKind::fdm, Axis::time).q, 2.0);
  EXPECT_EQ(critical_dimension(FieldKind::eem_grid, Axis::space).q, 1.0);
  const auto ec = critical_dimension(FieldKind::eem_continuous, Axis::time);
  EXPECT_EQ(ec.q, 2.0);
  EXPECT_TRUE(ec.upper_bound_only);
  for (auto k : {FieldKind::ou_exact, FieldKind::ou_eem_continuous, FieldKind::ou_em_continuous})
    EXPECT_EQ(critical_dimension(k, Axis::time).q, 2.0);
  EXPECT_THROW(critical_dimension(FieldKind::fdm, Axis::space), std::invalid_argument);
  EXPECT_THROW(critical_dimension(FieldKind::eem_grid, Axis::time), std::invalid_argument);
}

TEST(Polarity, Verdicts)
{
  EXPECT_EQ(polarity_verdict(3, 4.0), Polarity::nonpolar);
  EXPECT_EQ(polarity_verdict(3, 2.0), Polarity::polar);
  EXPECT_EQ(polarity_verdict(2, 2.0), Polarity::critical);
  EXPECT_THROW(polarity_verdict(0, 2.0), std::invalid_argument);
}
