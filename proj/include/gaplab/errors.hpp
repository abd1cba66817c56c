#pragma once
#include <stdexcept>
#include <string>

namespace gaplab {

/// Caller violated a precondition (bad arguments, mismatched grids, bad config).
class UsageError : public std::invalid_argument {
public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// The requested operation's hypotheses do not hold for these inputs
/// (e.g. parity analysis about an axis the weight is not symmetric in).
class InapplicableError : public std::runtime_error {
public:
  explicit InapplicableError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure failed to meet its contract (non-convergence,
/// residual above tolerance). Carries the offending residual when known.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what, double residual = -1.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

} // namespace gaplab
