#include "mldp/mcmc.hpp"

#include "mldp/error.hpp"

namespace mldp::mcmc {
namespace {

// Would the doubling procedure started from x1 have produced the same interval?
bool doubling_accepts(double x0, double x1, double level, double left, double right,
                      double width, const std::function<double(double)>& logf) {
  bool differ = false;
  while (right - left > 1.1 * width) {
    const double mid = 0.5 * (left + right);
    if ((x0 < mid && x1 >= mid) || (x0 >= mid && x1 < mid)) differ = true;
    if (x1 < mid)
      right = mid;
    else
      left = mid;
    if (differ && level >= logf(left) && level >= logf(right)) return false;
  }
  return true;
}

}  // namespace

double slice_sample_doubling(double x0, const std::function<double(double)>& logf,
                             const SliceOptions& opt, Rng& rng) {
  if (!(opt.width > 0.0)) throw ConfigError("slice width must be positive");
  const double f0 = logf(x0);
  if (!std::isfinite(f0)) throw NumericError("slice sampler started at a point of zero density");
  const double level = f0 - std::exponential_distribution<double>(1.0)(rng);

  double left = x0 - opt.width * uniform01(rng);
  double right = left + opt.width;
  double f_left = logf(left);
  double f_right = logf(right);
  for (int k = opt.max_doublings; k > 0 && (level < f_left || level < f_right); --k) {
    if (uniform01(rng) < 0.5) {
      left -= right - left;
      f_left = logf(left);
    } else {
      right += right - left;
      f_right = logf(right);
    }
  }

  double lo = left, hi = right;
  for (int iter = 0; iter < 10000; ++iter) {
    const double x1 = lo + uniform01(rng) * (hi - lo);
    if (level < logf(x1) && doubling_accepts(x0, x1, level, left, right, opt.width, logf))
      return x1;
    if (x1 < x0)
      lo = x1;
    else
      hi = x1;
  }
  throw NumericError("slice sampler failed to shrink onto the slice");
}

}  // namespace mldp::mcmc
