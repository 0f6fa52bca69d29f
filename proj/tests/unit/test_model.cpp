#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pdiff/model.hpp"

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

}  // namespace

TEST(Coefficient, ConstantValue) { EXPECT_EQ(Coefficient::constant(2.0).eval(5.0, 0), 2.0); }

TEST(Coefficient, SineDerivativeAtZero) { EXPECT_EQ(Coefficient::sine().eval(0.0, 1), 1.0); }

TEST(Coefficient, TanhSecondDerivativeMatchesFiniteDifference) {
  const auto c = Coefficient::tanh();
  const double h = 1e-5;
  const double fd = (c.eval(0.5 + h, 1) - c.eval(0.5 - h, 1)) / (2 * h);
  EXPECT_NEAR(c.eval(0.5, 2), fd, 1e-9);
}

TEST(Coefficient, UnsupportedOrder) {
  EXPECT_EQ(kind_of([] { Coefficient::sine().eval(0.0, 3); }), ErrorKind::UnsupportedOrder);
  EXPECT_EQ(kind_of([] { Coefficient::sine().eval(0.0, -1); }), ErrorKind::UnsupportedOrder);
}

TEST(Coefficient, PresetDerivativesAgreeWithFiniteDifferences) {
  const Coefficient cs[] = {Coefficient::constant(3), Coefficient::linear(1, -2),
                            Coefficient::sine(0.7, 1.3, 0.2, 2.0), Coefficient::tanh(0.1, 2.0, 1.0),
                            Coefficient::ornstein_uhlenbeck(1.5, 0.3)};
  const double h = 1e-5;
  for (const auto& c : cs) {
    for (double x = -3.0; x <= 3.0; x += 0.37) {
      EXPECT_NEAR(c.d1(x), (c.value(x + h) - c.value(x - h)) / (2 * h), 1e-8);
      EXPECT_NEAR(c.d2(x), (c.d1(x + h) - c.d1(x - h)) / (2 * h), 1e-8);
    }
  }
}

TEST(Coefficient, ParamsRoundTrip) {
  const auto c = Coefficient::sine(0.7, 1.3, 0.2, 2.0);
  const auto d = Coefficient::from_params(Preset::sine, c.params());
  for (double x : {-1.0, 0.0, 2.5}) EXPECT_EQ(c.value(x), d.value(x));
  EXPECT_EQ(kind_of([] { Coefficient::from_params(Preset::sine, {{"amp", 1.0}}); }),
            ErrorKind::InvalidArgument);
}

TEST(Coefficient, PresetNames) {
  for (Preset p : {Preset::constant, Preset::linear, Preset::sine, Preset::tanh,
                   Preset::ornstein_uhlenbeck}) {
    EXPECT_EQ(preset_from_name(preset_name(p)), p);
  }
  EXPECT_FALSE(preset_from_name("cosine"));
}

TEST(SupNorm, ConstantFirstDerivativeIsZero) {
  EXPECT_EQ(sup_norm_estimate(Coefficient::constant(2), 1, -1, 1, 100), 0.0);
}

TEST(SupNorm, SineFirstDerivative) {
  EXPECT_NEAR(sup_norm_estimate(Coefficient::sine(), 1, -std::numbers::pi, std::numbers::pi, 10000),
              1.0, 1e-6);
}

TEST(SupNorm, TanhFirstDerivative) {
  EXPECT_NEAR(sup_norm_estimate(Coefficient::tanh(), 1, -5, 5, 10001), 1.0, 1e-6);
}

TEST(SupNorm, NestedGridsAreMonotone) {
  const auto c = Coefficient::sine(1.0, 3.1);
  double prev = 0.0;
  for (std::size_t n = 3; n < 5000; n = 2 * n - 1) {
    const double s = sup_norm_estimate(c, 1, -2.0, 2.0, n);
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(Validate, RejectsAlphaOne) {
  ProblemSpec s;
  s.alpha = 1.0;
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::AlphaOutOfRange);
  s.alpha = 1.5;
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::AlphaOutOfRange);
  s.alpha = std::nan("");
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::AlphaOutOfRange);
}

TEST(Validate, TrivialSpec) {
  const auto v = validate(ProblemSpec{});
  EXPECT_EQ(v.bounds().drift_d1.value, 0.0);
  EXPECT_EQ(v.bounds().diffusion_sup.value, 1.0);
  EXPECT_EQ(v.bounds().diffusion_inf, 1.0);
  EXPECT_EQ(v.bounds().diffusion_sign, 1);
}

TEST(Validate, DeclaredSineBoundAccepted) {
  ProblemSpec s;
  s.drift = Coefficient::sine().with_bounds({.sup_d1 = 1.0});
  const auto v = validate(s, {.n_grid = 4001, .interval = std::pair{-10.0, 10.0}});
  EXPECT_EQ(v.bounds().drift_d1.value, 1.0);
  EXPECT_EQ(v.bounds().drift_d1.source, BoundSource::declared);
}

TEST(Validate, DeclaredBoundViolated) {
  ProblemSpec s;
  s.drift = Coefficient::sine(2.0).with_bounds({.sup_d1 = 1.0});
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::DeclaredBoundViolated);
}

TEST(Validate, InconsistentDerivatives) {
  ProblemSpec s;
  s.drift = Coefficient::custom([](double x) { return std::sin(x); },
                                [](double x) { return 2 * std::cos(x); },
                                [](double x) { return -2 * std::sin(x); });
  EXPECT_EQ(kind_of([&] { validate(s); }), ErrorKind::InconsistentDerivatives);
}

TEST(Validate, DegenerateDiffusionWhenTransformRequired) {
  ProblemSpec s;
  s.diffusion = Coefficient::sine();
  EXPECT_NO_THROW(validate(s));
  EXPECT_EQ(kind_of([&] { validate(s, {.require_transform = true}); }),
            ErrorKind::DegenerateDiffusion);
  s.diffusion = Coefficient::sine(1.0, 1.0, 0.0, -2.0);
  EXPECT_EQ(validate(s, {.require_transform = true}).bounds().diffusion_sign, -1);
}

TEST(Validate, Idempotent) {
  ProblemSpec s;
  s.x0 = 0.3;
  s.alpha = 0.2;
  s.drift = Coefficient::tanh(0.1);
  s.diffusion = Coefficient::sine(1.0, 1.0, 0.0, 2.0);
  const auto a = validate(s);
  const auto b = validate(a);
  EXPECT_EQ(a.bounds(), b.bounds());
}

TEST(Grid, TimesAndErrors) {
  const GridSpec g(2.0, 3);
  EXPECT_DOUBLE_EQ(g.dt(), 2.0 / 3.0);
  EXPECT_EQ(g.time(0), 0.0);
  EXPECT_EQ(g.time(3), 2.0);
  EXPECT_EQ(g.times().size(), 4u);
  EXPECT_EQ(kind_of([] { GridSpec(1.0, 0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { GridSpec(-1.0, 4); }), ErrorKind::InvalidArgument);
}
