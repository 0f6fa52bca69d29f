#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdiff/lamperti.hpp"

using namespace pdiff;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no pdiff::Error thrown";
  return ErrorKind::Config;
}

const Coefficient kSigma = Coefficient::sine(1.0, 1.0, 0.0, 2.0);  // 2 + sin

ValidatedSpec make(double x0, double alpha, Coefficient b, Coefficient s, double t = 1.0) {
  ProblemSpec p;
  p.x0 = x0;
  p.alpha = alpha;
  p.drift = std::move(b);
  p.diffusion = std::move(s);
  p.horizon = t;
  return validate(p);
}

std::shared_ptr<const TransformTable> table_for(const ValidatedSpec& v) {
  return std::make_shared<const TransformTable>(
      build_transform(v.spec().diffusion, v.spec().x0, default_transform_domain(v)));
}

}  // namespace

TEST(Transform, ConstantSigmaIsLinear) {
  const auto t = build_transform(Coefficient::constant(2.0), 0.0, {-10.0, 10.0});
  for (std::size_t i = 0; i < t.nodes().size(); ++i) {
    ASSERT_EQ(t.values()[i], t.nodes()[i] / 2.0);
  }
  EXPECT_NEAR(t.forward(4.0), 2.0, 1e-14);
  EXPECT_NEAR(t.inverse(2.0), 4.0, 1e-10);
  EXPECT_EQ(t.forward(0.0), 0.0);
}

TEST(Transform, AgreesWithAdaptiveQuadrature) {
  const auto t = build_transform(kSigma, 0.0, {-5.0, 5.0});
  const double ref = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [](double u) { return 1.0 / (2.0 + std::sin(u)); }, 0.0, 3.0, 15, 1e-14);
  EXPECT_NEAR(ref, 1.1407932244061687, 1e-13);
  EXPECT_NEAR(t.forward(3.0), ref, 1e-10);
  const double left = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [](double u) { return 1.0 / (2.0 + std::sin(u)); }, -2.0, 0.0, 15, 1e-14);
  EXPECT_NEAR(t.forward(-2.0), -left, 1e-10);
}

TEST(Transform, AnchorIsZero) {
  const auto t = build_transform(kSigma, 0.37, {-4.0, 6.0});
  EXPECT_EQ(t.forward(0.37), 0.0);
  EXPECT_EQ(t.anchor(), 0.37);
  EXPECT_LE(t.domain_lo(), -4.0);
  EXPECT_GE(t.domain_hi(), 6.0);
}

TEST(Transform, RoundTripAndMonotone) {
  const auto t = build_transform(kSigma, 0.0, {-8.0, 8.0});
  EXPECT_NEAR(t.inverse(t.forward(1.234)), 1.234, 1e-10);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(t.domain_lo(), t.domain_hi());
  for (int i = 0; i < 1000; ++i) {
    const double y1 = u(rng), y2 = u(rng);
    EXPECT_NEAR(t.inverse(t.forward(y1)), y1, 1e-10);
    if (y1 < y2) EXPECT_LT(t.forward(y1), t.forward(y2));
    if (y2 < y1) EXPECT_LT(t.forward(y2), t.forward(y1));
  }
  std::uniform_real_distribution<double> v(t.range_lo(), t.range_hi());
  for (int i = 0; i < 1000; ++i) {
    const double z = v(rng);
    EXPECT_NEAR(t.forward(t.inverse(z)), z, t.tol());
  }
}

TEST(Transform, NegativeSigmaUsesAbsoluteValue) {
  const auto neg = build_transform(Coefficient::sine(-1.0, 1.0, 0.0, -2.0), 0.0, {-5.0, 5.0});
  const auto pos = build_transform(kSigma, 0.0, {-5.0, 5.0});
  EXPECT_EQ(neg.orientation(), -1);
  EXPECT_EQ(pos.orientation(), 1);
  for (double y : {-4.0, -1.0, 0.5, 3.0}) EXPECT_NEAR(neg.forward(y), pos.forward(y), 1e-14);
}

TEST(Transform, Errors) {
  EXPECT_EQ(kind_of([] { build_transform(Coefficient::sine(), 0.5, {-5.0, 5.0}); }),
            ErrorKind::DegenerateDiffusion);
  EXPECT_EQ(kind_of([] { build_transform(kSigma, 9.0, {-5.0, 5.0}); }), ErrorKind::DomainTooSmall);
  EXPECT_EQ(kind_of([] { build_transform(kSigma, 0.0, {-5.0, 5.0}, 5, 1e-14); }),
            ErrorKind::ToleranceNotMet);
  const auto t = build_transform(kSigma, 0.0, {-5.0, 5.0});
  EXPECT_EQ(kind_of([&] { t.forward(t.domain_hi() + 1.0); }), ErrorKind::OutOfDomain);
  EXPECT_EQ(kind_of([&] { t.inverse(t.range_lo() - 1.0); }), ErrorKind::OutOfDomain);
}

TEST(Transform, FourthOrderConvergence) {
  const double coarse = build_transform(kSigma, 0.0, {-6.0, 6.0}, 257, 1.0).check_error();
  const double fine = build_transform(kSigma, 0.0, {-6.0, 6.0}, 513, 1.0).check_error();
  EXPECT_GT(coarse / fine, 10.0);
  EXPECT_LT(coarse / fine, 24.0);
}

TEST(TildeB, ConstantSigmaSine) {
  const auto t = build_transform(Coefficient::constant(2.0), 0.0, {-10.0, 10.0});
  const auto b = Coefficient::sine();
  for (double z : {-2.0, -0.3, 0.0, 1.1, 4.0}) {
    EXPECT_NEAR(tilde_b(t, b, Coefficient::constant(2.0), z), std::sin(2 * z) / 2, 1e-9);
    EXPECT_NEAR(tilde_b_d1(t, b, Coefficient::constant(2.0), z), std::cos(2 * z), 1e-9);
  }
  EXPECT_NEAR(tilde_b_sup_d1(t, b, Coefficient::constant(2.0), 20001), 1.0, 1e-6);
}

TEST(TildeB, VanishesWithoutDrift) {
  const auto t = build_transform(Coefficient::constant(3.0), 0.0, {-5.0, 5.0});
  for (double z : {-1.0, 0.0, 1.0}) {
    EXPECT_EQ(tilde_b(t, Coefficient::constant(0.0), Coefficient::constant(3.0), z), 0.0);
  }
}

TEST(TildeB, ChainRuleMatchesFiniteDifference) {
  const auto t = build_transform(kSigma, 0.0, {-6.0, 6.0});
  const auto b = Coefficient::tanh(0.1);
  const double h = 1e-5;
  for (double z = -2.0; z <= 2.0; z += 0.25) {
    const double fd = (tilde_b(t, b, kSigma, z + h) - tilde_b(t, b, kSigma, z - h)) / (2 * h);
    EXPECT_NEAR(tilde_b_d1(t, b, kSigma, z), fd, 1e-6);
  }
}

TEST(TildeB, SupStableUnderRefinement) {
  const auto b = Coefficient::tanh(0.1);
  const auto t12 = build_transform(kSigma, 0.0, {-12.0, 12.0}, 4097, 1e-6);
  const auto t13 = build_transform(kSigma, 0.0, {-12.0, 12.0}, 8193, 1e-6);
  const double s12 = tilde_b_sup_d1(t12, b, kSigma, 4096);
  const double s13 = tilde_b_sup_d1(t13, b, kSigma, 8192);
  ASSERT_TRUE(std::isfinite(s12));
  EXPECT_LE(std::abs(s13 - s12) / s13, 1e-3);
}

TEST(TransformedSpec, UnitSigmaShiftsDrift) {
  const auto v = make(0.7, 0.0, Coefficient::sine(), Coefficient::constant(1.0));
  const auto t = table_for(v);
  const ProblemSpec y = transformed_spec(v, t);
  EXPECT_NEAR(y.x0, 0.0, 1e-15);
  EXPECT_EQ(y.alpha, 0.0);
  EXPECT_EQ(y.horizon, 1.0);
  for (double z : {-1.0, 0.0, 2.0}) EXPECT_NEAR(y.drift.value(z), std::sin(z + 0.7), 1e-9);
  EXPECT_EQ(y.diffusion.value(3.0), 1.0);
}

TEST(TransformedSpec, StartsAtImageOfStart) {
  const auto v = make(0.4, 0.3, Coefficient::tanh(0.1), kSigma);
  const auto t = table_for(v);
  const ProblemSpec y = transformed_spec(v, t);
  EXPECT_NEAR(y.x0 / (1 - y.alpha), t->forward(0.4 / 0.7), 1e-14);
}

TEST(TransformedSpec, AnchorMustMatch) {
  const auto v = make(0.4, 0.3, Coefficient::tanh(0.1), kSigma);
  const auto t = std::make_shared<const TransformTable>(build_transform(kSigma, 0.0, {-10.0, 10.0}));
  EXPECT_EQ(kind_of([&] { transformed_spec(v, t); }), ErrorKind::InvalidArgument);
}

// Constant sigma makes F affine, so Y = F(X) holds step by step up to the
// table's rounding, for either sign of sigma.
TEST(TransformedSpec, AffineCasePathwiseExact) {
  const GridSpec grid(1.0, 2000);
  for (double c : {2.0, -2.0}) {
    const auto xs = make(0.3, 0.4, Coefficient::sine(0.5), Coefficient::constant(c));
    const auto t = table_for(xs);
    const auto ys = validate(transformed_spec(xs, t));
    for (std::uint64_t p = 0; p < 5; ++p) {
      const auto noise = NoiseBlock::generate(2, p, grid);
      const auto xp = euler_path(xs, grid, noise);
      const auto yp = euler_path(ys, grid, noise);
      const auto fx = map_forward(*t, xp.x);
      for (std::size_t k = 0; k < fx.size(); ++k) ASSERT_NEAR(fx[k], yp.x[k], 1e-8) << c;
      const auto lift = lift_bound_check(propagate_derivative(xp, xs, grid),
                                         propagate_derivative(yp, ys, grid), std::abs(c), 0.0);
      EXPECT_NEAR(lift.lhs, lift.rhs, 1e-8);
    }
  }
}

TEST(TransformedSpec, CatalogConsistency) {
  const GridSpec grid(1.0, 1000);
  const auto xs = make(0.0, 0.1, Coefficient::tanh(0.1), kSigma);
  const auto t = table_for(xs);
  const auto ys = validate(transformed_spec(xs, t));
  double mean = 0.0;
  constexpr int paths = 200;
  for (std::uint64_t p = 0; p < paths; ++p) {
    const auto noise = NoiseBlock::generate(10, p, grid);
    const auto xp = euler_path(xs, grid, noise);
    const auto yp = euler_path(ys, grid, noise);
    const auto fx = map_forward(*t, xp.x);
    double d = 0.0;
    for (std::size_t k = 0; k < fx.size(); ++k) d = std::max(d, std::abs(fx[k] - yp.x[k]));
    mean += d / paths;
    // The sup commutes with the increasing map exactly.
    ASSERT_EQ(*std::max_element(fx.begin(), fx.end()), t->forward(xp.running_max.back()));
  }
  EXPECT_LE(mean, 5e-2);
}

TEST(LiftCheck, UnitCaseHasEqualSides) {
  const GridSpec grid(1.0, 500);
  const auto xs = make(0.0, 0.2, Coefficient::constant(0.0), Coefficient::constant(1.0));
  const auto path = euler_path(xs, grid, NoiseBlock::generate(1, 0, grid));
  const auto f = propagate_derivative(path, xs, grid);
  const auto r = lift_bound_check(f, f, 1.0, 0.0);
  EXPECT_EQ(r.lhs, r.rhs);
  EXPECT_FALSE(r.violated);
}

TEST(LiftCheck, GridMismatch) {
  DerivativeField a, b;
  a.dt = b.dt = 0.1;
  a.d_x.assign(10, 1.0);
  b.d_x.assign(9, 1.0);
  EXPECT_EQ(kind_of([&] { lift_bound_check(a, b, 1.0, 0.0); }), ErrorKind::GridMismatch);
}
