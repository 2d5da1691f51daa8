#include "mldp/testkit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mldp::testkit {

Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& point, double h) {
  Eigen::VectorXd g(point.size());
  Eigen::VectorXd p = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    p(i) = point(i) + h;
    const double up = fn(p);
    p(i) = point(i) - h;
    const double down = fn(p);
    p(i) = point(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

GridDensity grid_density(const std::function<double(double)>& logpdf, double lo, double hi,
                         std::size_t n_points) {
  if (n_points < 2 || !(hi > lo)) throw std::invalid_argument("grid_density: bad grid");
  GridDensity g;
  g.x.resize(n_points);
  std::vector<double> lp(n_points);
  const double h = (hi - lo) / static_cast<double>(n_points - 1);
  double top = -INFINITY;
  for (std::size_t i = 0; i < n_points; ++i) {
    g.x[i] = lo + h * static_cast<double>(i);
    lp[i] = logpdf(g.x[i]);
    top = std::max(top, lp[i]);
  }
  g.density.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) g.density[i] = std::exp(lp[i] - top);
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < n_points; ++i) mass += 0.5 * h * (g.density[i] + g.density[i + 1]);
  for (auto& d : g.density) d /= mass;
  const double peak = *std::max_element(g.density.begin(), g.density.end());
  g.coverage_warning = g.density.front() > 1e-8 * peak || g.density.back() > 1e-8 * peak;
  return g;
}

double GridDensity::total_mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) m += 0.5 * step() * (density[i] + density[i + 1]);
  return m;
}

double GridDensity::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    m += 0.5 * step() * (x[i] * density[i] + x[i + 1] * density[i + 1]);
  return m;
}

double GridDensity::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i] - mu, b = x[i + 1] - mu;
    v += 0.5 * step() * (a * a * density[i] + b * b * density[i + 1]);
  }
  return v;
}

double GridDensity::cdf(double t) const {
  if (t <= x.front()) return 0.0;
  if (t >= x.back()) return 1.0;
  const double h = step();
  const auto i = static_cast<std::size_t>((t - x.front()) / h);
  double m = 0.0;
  for (std::size_t k = 0; k < i; ++k) m += 0.5 * h * (density[k] + density[k + 1]);
  const double f = (t - x[i]) / h;
  const double d_t = density[i] + f * (density[i + 1] - density[i]);
  return m + 0.5 * (t - x[i]) * (density[i] + d_t);
}

double GridDensity::quantile(double p) const {
  double lo = x.front(), hi = x.back();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double histogram_tv_distance(std::span<const double> samples, const GridDensity& ref, int bins) {
  const double lo = ref.quantile(0.0005);
  const double hi = ref.quantile(0.9995);
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;

  // Bin 0 is (-inf, lo), bin bins+1 is [hi, inf).
  std::vector<double> expected(static_cast<std::size_t>(bins) + 2), observed(expected.size(), 0.0);
  expected[0] = ref.cdf(lo);
  for (int i = 0; i < bins; ++i)
    expected[static_cast<std::size_t>(i) + 1] =
        ref.cdf(edges[static_cast<std::size_t>(i) + 1]) - ref.cdf(edges[static_cast<std::size_t>(i)]);
  expected.back() = 1.0 - ref.cdf(hi);
  for (double s : samples) {
    std::size_t b;
    if (s < lo) b = 0;
    else if (s >= hi) b = expected.size() - 1;
    else b = std::min<std::size_t>(static_cast<std::size_t>((s - lo) / (hi - lo) * bins), static_cast<std::size_t>(bins) - 1) + 1;
    observed[b] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t b = 0; b < expected.size(); ++b)
    tv += std::abs(observed[b] / static_cast<double>(samples.size()) - expected[b]);
  return 0.5 * tv;
}

double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sq = std::sqrt(n);
  return {d, kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

bool MeanEstimate::within(double target, double k) const { return std::abs(mean - target) < k * se; }

MeanEstimate mc_mean(std::span<const double> values) {
  MeanEstimate e;
  e.n = values.size();
  for (double v : values) e.mean += v;
  e.mean /= static_cast<double>(e.n);
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  e.se = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  return e;
}

MeanEstimate mc_variance(std::span<const double> values) {
  const auto m = mc_mean(values);
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(values.size());
  m2 /= n;
  m4 /= n;
  MeanEstimate e;
  e.n = values.size();
  e.mean = m2 * n / (n - 1);
  e.se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  return e;
}

}  // namespace mldp::testkit
