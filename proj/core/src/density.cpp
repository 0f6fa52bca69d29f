#include "pdiff/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pdiff/integrate.hpp"
#include "pdiff/parallel.hpp"

namespace pdiff {

namespace {

constexpr double kWindow = 8.0;  // kernel truncated at 8 bandwidths (weight < 1e-14)

}  // namespace

std::vector<double> ensemble(const ValidatedSpec& spec, const GridSpec& grid, std::size_t n,
                             std::uint64_t seed, unsigned workers) {
  std::vector<double> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const NoiseBlock noise = NoiseBlock::generate(seed, i, grid);
    try {
      out[i] = euler_terminal(spec, grid, noise);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite) throw;
      throw Error(ErrorKind::NonFinite,
                  "path " + std::to_string(i) + " left the finite range" +
                      (e.index() ? " at step " + std::to_string(*e.index()) : std::string()),
                  i);
    }
  });
  return out;
}

double oracle_driftless(double x0, double sigma, double alpha, double t, double z) {
  if (!(alpha < 1.0)) throw Error(ErrorKind::AlphaOutOfRange, "oracle needs alpha < 1");
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidArgument, "oracle needs t > 0");
  if (!(sigma != 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::DegenerateDiffusion, "oracle needs a nonzero constant sigma");
  }
  const double c = alpha / (1.0 - alpha);
  const double u = (z - x0 / (1.0 - alpha)) / sigma;
  const double norm = std::sqrt(2.0 / (std::numbers::pi * t * t * t));
  // U = B + c S; on s >= max(0, b) with b = u - c s this is s >= max(0, u (1 - alpha)).
  auto f = [&](double s) {
    const double w = 2.0 * s - (u - c * s);
    return norm * w * std::exp(-w * w / (2.0 * t));
  };
  const double s_lo = std::max(0.0, u * (1.0 - alpha));
  double err = 0.0;
  const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, s_lo, std::numeric_limits<double>::infinity(), 15, 1e-13, &err);
  if (!std::isfinite(q) || err > 1e-8 * std::abs(q) + 1e-15) {
    throw Error(ErrorKind::IntegrationFailure,
                "quadrature error estimate " + std::to_string(err) + " at z = " + std::to_string(z));
  }
  return q / std::abs(sigma);
}

SampleMoments sample_moments(std::span<const double> x) {
  SampleMoments m;
  if (x.empty()) return m;
  double s = 0.0;
  for (double v : x) s += v;
  m.mean = s / static_cast<double>(x.size());
  if (x.size() < 2) return m;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
  return m;
}

double rule_of_thumb_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw Error(ErrorKind::EmptySample, "bandwidth needs N >= 2");
  const double s = sample_moments(samples).sd;
  if (!(s > 0.0)) {
    throw Error(ErrorKind::EmptySample, "sample has zero spread; pass an explicit bandwidth");
  }
  return 1.06 * s * std::pow(static_cast<double>(samples.size()), -0.2);
}

std::vector<double> default_eval_grid(std::span<const double> samples, std::size_t n,
                                      double width_in_sd) {
  if (samples.size() < 2) throw Error(ErrorKind::EmptySample, "eval grid needs N >= 2");
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "eval grid needs n >= 2");
  const SampleMoments m = sample_moments(samples);
  const double w = width_in_sd * m.sd;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = grid_point(m.mean - w, m.mean + w, i, n);
  return z;
}

DensityEstimate kde(std::span<const double> samples, std::span<const double> eval_grid,
                    const KdeOptions& options) {
  if (samples.size() < 2) {
    throw Error(ErrorKind::EmptySample,
                "kde needs at least 2 samples, got " + std::to_string(samples.size()));
  }
  const double h = options.bandwidth ? *options.bandwidth : rule_of_thumb_bandwidth(samples);
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorKind::InvalidArgument, "bandwidth must be > 0");

  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  const double nd = static_cast<double>(n);

  DensityEstimate est;
  est.z.assign(eval_grid.begin(), eval_grid.end());
  est.bandwidth = h;
  est.n_samples = n;
  const SampleMoments mom = sample_moments(xs);
  est.sample_mean = mom.mean;
  est.sample_sd = mom.sd;

  std::vector<double> hs = options.ladder ? std::vector<double>{0.5 * h, h, 2.0 * h}
                                          : std::vector<double>{h};
  const std::size_t levels = hs.size();
  const std::size_t m = est.z.size();
  est.ladder.resize(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    est.ladder[l].bandwidth = hs[l];
    est.ladder[l].p.assign(m, 0.0);
    est.ladder[l].d1.assign(m, 0.0);
    est.ladder[l].d2.assign(m, 0.0);
  }
  const std::size_t pairs = levels - 1;
  est.differences.resize(pairs);
  for (std::size_t q = 0; q < pairs; ++q) {
    est.differences[q].fine = q;
    est.differences[q].coarse = q + 1;
    est.differences[q].se_d1.assign(m, 0.0);
    est.differences[q].se_d2.assign(m, 0.0);
  }

  const double reach = kWindow * hs.back();
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

  parallel_for(m, options.workers, [&](std::size_t i) {
    const double z = est.z[i];
    const auto lo = std::lower_bound(xs.begin(), xs.end(), z - reach);
    const auto hi = std::upper_bound(lo, xs.end(), z + reach);
    double sp[3] = {0, 0, 0}, s1[3] = {0, 0, 0}, s2[3] = {0, 0, 0};
    double e1[2] = {0, 0}, q1[2] = {0, 0}, e2[2] = {0, 0}, q2[2] = {0, 0};
    for (auto it = lo; it != hi; ++it) {
      double k1[3], k2[3];
      for (std::size_t l = 0; l < levels; ++l) {
        const double b = hs[l];
        const double u = (z - *it) / b;
        const double phi = inv_sqrt_2pi * std::exp(-0.5 * u * u) / b;
        sp[l] += phi;
        k1[l] = -u * phi / b;
        k2[l] = (u * u - 1.0) * phi / (b * b);
        s1[l] += k1[l];
        s2[l] += k2[l];
      }
      for (std::size_t q = 0; q < pairs; ++q) {
        const double a = k1[q] - k1[q + 1];
        const double c = k2[q] - k2[q + 1];
        e1[q] += a;
        q1[q] += a * a;
        e2[q] += c;
        q2[q] += c * c;
      }
    }
    for (std::size_t l = 0; l < levels; ++l) {
      est.ladder[l].p[i] = sp[l] / nd;
      est.ladder[l].d1[i] = s1[l] / nd;
      est.ladder[l].d2[i] = s2[l] / nd;
    }
    auto se = [&](double sum, double sumsq) {
      const double mean = sum / nd;
      const double var = std::max(0.0, sumsq / nd - mean * mean);
      return std::sqrt(var / nd);
    };
    for (std::size_t q = 0; q < pairs; ++q) {
      est.differences[q].se_d1[i] = se(e1[q], q1[q]);
      est.differences[q].se_d2[i] = se(e2[q], q2[q]);
    }
  });

  est.p = est.ladder[options.ladder ? 1 : 0].p;
  return est;
}

SmoothnessReport smoothness_diagnostic(const DensityEstimate& est,
                                       const SmoothnessThresholds& thresholds) {
  SmoothnessReport r;
  r.threshold = thresholds.max_rms_z;
  if (est.ladder.size() < 3 || est.differences.empty()) {
    r.label += "; ladder too short, verdict fail";
    return r;
  }
  const double lo = est.sample_mean - thresholds.central_sd * est.sample_sd;
  const double hi = est.sample_mean + thresholds.central_sd * est.sample_sd;

  for (const LevelDifference& d : est.differences) {
    const KdeLevel& f = est.ladder[d.fine];
    const KdeLevel& c = est.ladder[d.coarse];
    double n1 = 0, m1 = 0, n2 = 0, m2 = 0, z1 = 0, z2 = 0;
    std::size_t cnt1 = 0, cnt2 = 0;
    for (std::size_t i = 0; i < est.z.size(); ++i) {
      if (est.z[i] < lo || est.z[i] > hi) continue;
      const double a = f.d1[i] - c.d1[i];
      const double b = f.d2[i] - c.d2[i];
      n1 += a * a;
      m1 += c.d1[i] * c.d1[i];
      n2 += b * b;
      m2 += c.d2[i] * c.d2[i];
      if (d.se_d1[i] > 0.0) {
        z1 += (a / d.se_d1[i]) * (a / d.se_d1[i]);
        ++cnt1;
      }
      if (d.se_d2[i] > 0.0) {
        z2 += (b / d.se_d2[i]) * (b / d.se_d2[i]);
        ++cnt2;
      }
    }
    r.rel_l2_d1 = std::max(r.rel_l2_d1, m1 > 0.0 ? std::sqrt(n1 / m1) : 0.0);
    r.rel_l2_d2 = std::max(r.rel_l2_d2, m2 > 0.0 ? std::sqrt(n2 / m2) : 0.0);
    if (cnt1) r.rms_z_d1 = std::max(r.rms_z_d1, std::sqrt(z1 / static_cast<double>(cnt1)));
    if (cnt2) r.rms_z_d2 = std::max(r.rms_z_d2, std::sqrt(z2 / static_cast<double>(cnt2)));
  }
  r.pass = r.rms_z_d1 <= thresholds.max_rms_z && r.rms_z_d2 <= thresholds.max_rms_z;
  return r;
}

double trapezoid(std::span<const double> z, std::span<const double> f) {
  if (z.size() != f.size()) throw Error(ErrorKind::GridMismatch, "trapezoid needs matching lengths");
  double s = 0.0;
  for (std::size_t i = 1; i < z.size(); ++i) s += 0.5 * (z[i] - z[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

double l1_distance(std::span<const double> z, std::span<const double> p,
                   std::span<const double> q) {
  if (z.size() != p.size() || z.size() != q.size()) {
    throw Error(ErrorKind::GridMismatch, "l1_distance needs p and q on the same grid");
  }
  double s = 0.0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    s += 0.5 * (z[i] - z[i - 1]) * (std::abs(p[i] - q[i]) + std::abs(p[i - 1] - q[i - 1]));
  }
  return s;
}

}  // namespace pdiff
