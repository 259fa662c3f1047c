#pragma once

#include <cstddef>
#include <span>

namespace robreg {

/// An unnormalized log density on R^d with an analytic gradient. Implementations
/// must be safe to evaluate concurrently from several threads.
class LogDensityModel {
 public:
  virtual ~LogDensityModel() = default;

  virtual std::size_t dimension() const = 0;
  virtual double log_density(std::span<const double> x) const = 0;
  /// Writes the gradient into `grad` (size dimension()) and returns the log density.
  virtual double log_density_gradient(std::span<const double> x, std::span<double> grad) const = 0;
};

}  // namespace robreg
