#pragma once
#include <cmath>
#include <vector>

#include "gaplab/errors.hpp"

namespace gaplab {

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0; // of log y vs log x
  double r_squared = 1.0;
  double stderr_slope = 0.0;
  int points = 0;
  double halfwidth() const { return 2.0 * stderr_slope; }
};

/// Ordinary least squares on (log x, log y). All inputs must be positive.
inline PowerLawFit fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw UsageError("fit_exponent: size mismatch");
  const int n = static_cast<int>(xs.size());
  if (n < 2) throw UsageError("fit_exponent: need at least 2 points");
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw UsageError("fit_exponent: values must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw UsageError("fit_exponent: degenerate abscissae");
  PowerLawFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssres = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = ly[i] - (f.intercept + f.slope * lx[i]);
    ssres += e * e;
  }
  f.r_squared = (syy > 0.0) ? 1.0 - ssres / syy : 1.0;
  f.stderr_slope = (n > 2) ? std::sqrt(std::max(0.0, ssres / (n - 2)) / sxx) : 0.0;
  return f;
}

/// Indices whose abscissa lies in the middle fraction of the log range;
/// slope fits on radial profiles use this to avoid boundary pollution.
inline std::vector<int> middle_log_window(const std::vector<double>& xs, double keep_fraction = 0.6) {
  std::vector<int> idx;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (double x : xs) {
    if (!(x > 0.0)) continue;
    const double l = std::log(x);
    if (first) {
      lo = hi = l;
      first = false;
    } else {
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
  }
  const double margin = 0.5 * (1.0 - keep_fraction) * (hi - lo);
  for (int i = 0; i < static_cast<int>(xs.size()); ++i)
    if (xs[i] > 0.0 && std::log(xs[i]) >= lo + margin && std::log(xs[i]) <= hi - margin) idx.push_back(i);
  return idx;
}

} // namespace gaplab
