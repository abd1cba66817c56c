#pragma once
#include <cmath>

#include "gaplab/errors.hpp"

namespace gaplab {

/// Positive root of alpha^2 + (n-1) alpha - lambda.
inline double alpha_of(double lambda, int n) {
  if (n < 3) throw UsageError("alpha_of: n must be >= 3");
  if (lambda < 0.0) throw UsageError("alpha_of: lambda must be nonnegative");
  const double nm1 = static_cast<double>(n - 1);
  return 0.5 * (-nm1 + std::sqrt(nm1 * nm1 + 4.0 * lambda));
}

/// Ball-case exponent beta(n) = [-(n-1) + sqrt((n-1)^2 + 4(n-2))] / 4,
/// equal to alpha_of(n-2, n) / 2.
inline double ball_beta(int n) {
  if (n < 3) throw UsageError("ball_beta: n must be >= 3");
  const double nm1 = static_cast<double>(n - 1);
  return 0.25 * (-nm1 + std::sqrt(nm1 * nm1 + 4.0 * (n - 2)));
}

/// The exponent chain lambda1 -> alpha(lambda1) -> gradient rate
/// (alpha(lambda1) - 1) / 2, with the eigenvalue error bar propagated through
/// the (monotone) alpha map by endpoint evaluation.
struct ExponentReport {
  int n = 3;
  double lambda1 = 0.0;
  double lambda1_error = 0.0;
  double alpha = 0.0;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  double gradient_exponent = 0.0; // (alpha - 1) / 2
  double gradient_exponent_lo = 0.0;
  double gradient_exponent_hi = 0.0;
  double ball_beta_ref = 0.0; // beta(n) for reference
};

inline ExponentReport make_exponent_report(double lambda1, double lambda1_error, int n) {
  if (!(lambda1 > 0.0)) throw UsageError("exponent report: lambda1 must be positive");
  ExponentReport rep;
  rep.n = n;
  rep.lambda1 = lambda1;
  rep.lambda1_error = std::abs(lambda1_error);
  rep.alpha = alpha_of(lambda1, n);
  rep.alpha_lo = alpha_of(std::max(0.0, lambda1 - rep.lambda1_error), n);
  rep.alpha_hi = alpha_of(lambda1 + rep.lambda1_error, n);
  rep.gradient_exponent = 0.5 * (rep.alpha - 1.0);
  rep.gradient_exponent_lo = 0.5 * (rep.alpha_lo - 1.0);
  rep.gradient_exponent_hi = 0.5 * (rep.alpha_hi - 1.0);
  rep.ball_beta_ref = ball_beta(n);
  return rep;
}

} // namespace gaplab
