#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "pdiff/integrate.hpp"

using namespace pdiff;

namespace {

ValidatedSpec make(double x0, double alpha, Coefficient b, Coefficient s, double t = 1.0) {
  ProblemSpec p;
  p.x0 = x0;
  p.alpha = alpha;
  p.drift = std::move(b);
  p.diffusion = std::move(s);
  p.horizon = t;
  return validate(p);
}

NoiseBlock walk(std::vector<double> b) {
  std::vector<double> db(b.size() - 1);
  for (std::size_t k = 0; k + 1 < b.size(); ++k) db[k] = b[k + 1] - b[k];
  return NoiseBlock::from_increments(db, 1.0);
}

}  // namespace

TEST(ResolveStep, Examples) {
  auto r = resolve_step(1.0, 2.0, 0.0);
  EXPECT_EQ(r.x_next, 1.0);
  EXPECT_FALSE(r.is_new_max);
  r = resolve_step(2.0, 1.0, 0.5);
  EXPECT_EQ(r.x_next, 4.0);
  EXPECT_TRUE(r.is_new_max);
  r = resolve_step(0.5, 2.0, 0.5);
  EXPECT_EQ(r.x_next, 1.5);
  EXPECT_FALSE(r.is_new_max);
}

TEST(ResolveStep, TieKeepsOldMax) {
  const auto r = resolve_step(1.0, 2.0, 0.5);
  EXPECT_EQ(r.x_next, 2.0);
  EXPECT_FALSE(r.is_new_max);
}

TEST(ResolveStep, UniqueFixedPoint) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-10.0, 10.0), ua(-5.0, 0.999);
  for (int i = 0; i < 1000000; ++i) {
    const double a = u(rng), m = u(rng), alpha = ua(rng);
    const auto r = resolve_step(a, m, alpha);
    const double resid = r.x_next - a - alpha * std::max(m, r.x_next);
    const double ulp = std::numeric_limits<double>::epsilon() *
                       std::max({std::abs(r.x_next), std::abs(a), std::abs(alpha * m), 1e-300});
    ASSERT_LE(std::abs(resid), 4 * ulp) << a << " " << m << " " << alpha;
    // The rejected branch must be invalid unless the two coincide.
    if (r.is_new_max) {
      ASSERT_GT(a + alpha * m, m);
    } else {
      ASSERT_LE(r.x_next, m);
    }
  }
}

TEST(EulerPath, BrownianCaseIsExact) {
  const GridSpec grid(1.0, 1000);
  const auto noise = NoiseBlock::generate(1, 0, grid);
  const auto p = euler_path(make(0.25, 0.0, Coefficient::constant(0), Coefficient::constant(1)),
                            grid, noise);
  double b = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    b += noise.increments()[k];
    EXPECT_NEAR(p.x[k + 1], 0.25 + b, 1e-13);
  }
}

TEST(EulerPath, AlphaZeroMatchesClassicalEulerBitwise) {
  const GridSpec grid(1.0, 2000);
  const auto b = Coefficient::tanh(0.7, 1.3, 0.1);
  const auto s = Coefficient::sine(0.5, 1.0, 0.0, 1.5);
  const auto spec = make(0.4, 0.0, b, s);
  for (std::uint64_t path = 0; path < 20; ++path) {
    const auto noise = NoiseBlock::generate(42, path, grid);
    const auto p = euler_path(spec, grid, noise);
    const auto ref = oracle::classical_euler(
        0.4, [&](double x) { return b.value(x); }, [&](double x) { return s.value(x); },
        noise.increments(), grid.dt());
    ASSERT_EQ(p.x, ref) << "path " << path;
  }
}

TEST(EulerPath, AdditiveIdentity) {
  const GridSpec grid(1.0, 4096);
  for (double alpha : {-1.0, 0.0, 0.3, 0.9}) {
    const auto spec = make(0.2, alpha, Coefficient::constant(0), Coefficient::constant(1.7));
    for (std::uint64_t path = 0; path < 10; ++path) {
      const auto noise = NoiseBlock::generate(8, path, grid);
      const auto a = euler_path(spec, grid, noise);
      const auto e = explicit_additive_path(0.2, alpha, 1.7, noise);
      for (std::size_t k = 0; k <= grid.n_steps(); ++k) ASSERT_NEAR(a.x[k], e.x[k], 1e-12);
    }
  }
}

TEST(EulerPath, Invariants) {
  const GridSpec grid(1.0, 3000);
  const auto spec = make(-0.3, 0.6, Coefficient::sine(0.5), Coefficient::tanh(0.5, 1.0, 1.0));
  const auto p = euler_path(spec, grid, NoiseBlock::generate(3, 3, grid));
  EXPECT_DOUBLE_EQ(p.x[0], -0.3 / 0.4);
  for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
    ASSERT_LE(p.x[k], p.running_max[k]);
    ASSERT_EQ(p.running_max[k], p.x[p.argmax_idx[k]]);
    ASSERT_LE(p.argmax_idx[k], k);
    if (k > 0) {
      ASSERT_GE(p.running_max[k], p.running_max[k - 1]);
      // First attainment: the max is strictly above every earlier state.
      for (std::size_t j = 0; j < p.argmax_idx[k]; ++j) ASSERT_LT(p.x[j], p.running_max[k]);
    }
  }
}

TEST(EulerPath, TerminalMatchesPath) {
  const GridSpec grid(1.0, 777);
  const auto spec = make(0.1, 0.4, Coefficient::ornstein_uhlenbeck(), Coefficient::sine(0.3, 1, 0, 1));
  for (std::uint64_t path = 0; path < 5; ++path) {
    const auto noise = NoiseBlock::generate(5, path, grid);
    EXPECT_EQ(euler_terminal(spec, grid, noise), euler_path(spec, grid, noise).x.back());
  }
}

TEST(EulerPath, GridMismatch) {
  const auto spec = make(0, 0, Coefficient::constant(0), Coefficient::constant(1));
  const auto noise = NoiseBlock::generate(1, 0, GridSpec(1.0, 10));
  EXPECT_THROW(euler_path(spec, GridSpec(1.0, 11), noise), Error);
}

TEST(EulerPath, NonFiniteReportsStep) {
  const GridSpec grid(1.0, 100);
  const auto spec = make(1.0, 0.0, Coefficient::linear(0.0, 1e200), Coefficient::constant(1));
  try {
    euler_path(spec, grid, NoiseBlock::generate(1, 0, grid));
    FAIL() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
    ASSERT_TRUE(e.index());
    EXPECT_GE(*e.index(), 1u);
  }
}

TEST(EulerPath, MonotoneInAlpha) {
  const GridSpec grid(1.0, 1000);
  const auto noise = NoiseBlock::generate(12, 0, grid);
  std::vector<double> prev;
  for (double alpha : {-2.0, -0.5, 0.0, 0.25, 0.5, 0.9}) {
    const auto p = euler_path(make(0.0, alpha, Coefficient::constant(0), Coefficient::constant(1)),
                              grid, noise);
    if (!prev.empty()) {
      for (std::size_t k = 0; k < p.x.size(); ++k) ASSERT_GE(p.x[k], prev[k] - 1e-13);
    }
    prev = p.x;
  }
}

TEST(EulerPath, OrnsteinUhlenbeckStrongOrderOne) {
  // Exact OU terminal on the finest grid, Euler on coarsenings of the same noise.
  const std::size_t fine = 1 << 14;
  const GridSpec fine_grid(1.0, fine);
  const auto spec = make(1.0, 0.0, Coefficient::ornstein_uhlenbeck(), Coefficient::constant(1));
  std::vector<double> logdt, logerr;
  std::vector<std::size_t> factors{256, 128, 64, 32, 16};
  std::vector<double> err(factors.size());
  constexpr std::size_t paths = 200;
  for (std::uint64_t p = 0; p < paths; ++p) {
    const auto noise = NoiseBlock::generate(77, p, fine_grid);
    const double exact = oracle::ou_terminal(1.0, 1.0, 0.0, noise.increments(), fine_grid.dt());
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const auto c = noise.coarsened(factors[i]);
      const GridSpec g(1.0, c.size());
      err[i] += std::abs(euler_terminal(spec, g, c) - exact) / paths;
    }
  }
  for (std::size_t i = 0; i < factors.size(); ++i) {
    logdt.push_back(std::log(static_cast<double>(factors[i]) / fine));
    logerr.push_back(std::log(err[i]));
  }
  EXPECT_NEAR(oracle::ls_slope(logdt, logerr), 1.0, 0.15);
}

TEST(ExplicitAdditive, HandExamples) {
  const auto a = explicit_additive_path(0.0, 0.5, 1.0, walk({0, 1, 0.5}));
  EXPECT_EQ(a.x, (std::vector<double>{0, 2, 1.5}));
  const auto b = explicit_additive_path(0.0, -1.0, 1.0, walk({0, 1, 0.5}));
  EXPECT_EQ(b.x, (std::vector<double>{0, 0.5, 0}));
  const auto c = explicit_additive_path(0.3, 0.0, 2.0, walk({0, 1, 0.5}));
  const std::vector<double> want{0.3, 2.3, 1.3};
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(c.x[k], want[k]);
}

TEST(Picard, AdditiveFixedPointAfterOneStep) {
  const GridSpec grid(1.0, 500);
  const auto noise = NoiseBlock::generate(4, 0, grid);
  const auto spec = make(0.2, 0.5, Coefficient::constant(0), Coefficient::constant(1.3));
  const auto r = picard_solve(spec, grid, noise, 10, 1e-14);
  ASSERT_GE(r.sup_diff.size(), 2u);
  EXPECT_EQ(r.sup_diff[1], 0.0);
  EXPECT_TRUE(r.converged);
  const auto e = explicit_additive_path(0.2, 0.5, 1.3, noise);
  for (std::size_t k = 0; k < e.x.size(); ++k) EXPECT_NEAR(r.path.x[k], e.x[k], 1e-12);
}

TEST(Picard, ConvergesToEuler) {
  const GridSpec grid(1.0, 1000);
  const auto spec = make(0.1, 0.3, Coefficient::sine(0.5), Coefficient::tanh(0.2, 1.0, 1.0));
  const double tol = 1e-10;
  for (std::uint64_t p = 0; p < 5; ++p) {
    const auto noise = NoiseBlock::generate(6, p, grid);
    const auto r = picard_solve(spec, grid, noise, 200, tol);
    ASSERT_TRUE(r.converged);
    const auto e = euler_path(spec, grid, noise);
    double d = 0;
    for (std::size_t k = 0; k < e.x.size(); ++k) d = std::max(d, std::abs(e.x[k] - r.path.x[k]));
    EXPECT_LE(d, 10 * tol);
  }
}

TEST(Picard, ReportsNonConvergence) {
  const GridSpec grid(1.0, 200);
  const auto spec = make(0.1, 0.3, Coefficient::sine(0.5), Coefficient::tanh(0.2, 1.0, 1.0));
  const auto r = picard_solve(spec, grid, NoiseBlock::generate(6, 0, grid), 2, 1e-15);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.sup_diff.size(), 2u);
}
