#pragma once

#include <optional>
#include <string_view>

#include "isohaz/cox.hpp"
#include "isohaz/isotonic.hpp"
#include "isohaz/kernel.hpp"

namespace isohaz {

enum class Estimator { grenander, mle, sg, smle, kernel };

Estimator parse_estimator(std::string_view name);
std::string_view to_string(Estimator e);

/// Thrown when beta cannot be estimated; carries the CoxFit reason.
class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Partial-likelihood estimate of beta; empty vector when p = 0.
/// Throws FitError when the Newton iteration does not converge.
Vector estimate_beta(const SortedSample& sorted, const FitOptions& options = {});

/// The baseline-hazard estimators for one sample and a fixed beta. The
/// Breslow estimator is built eagerly; the isotonic estimators on first use.
class HazardEstimates {
public:
  HazardEstimates(const SortedSample& sorted, Vector beta,
                  DiagramSupport support = DiagramSupport::observations);

  const SortedSample& sample() const { return *sorted_; }
  const Vector& beta() const { return beta_; }
  const StepFunction& cumulative() const { return cumhaz_; }
  const MonotoneHazard& grenander();
  const MonotoneHazard& mle();

  /// Value of the chosen estimator at x. The smoothed estimators use spec;
  /// the unsmoothed ones ignore it.
  double at(Estimator e, const KernelSpec& spec, double x);
  /// Domain on which the estimator can be evaluated.
  Interval domain(Estimator e);

private:
  const SortedSample* sorted_;
  Vector beta_;
  DiagramSupport support_;
  StepFunction cumhaz_;
  std::optional<MonotoneHazard> grenander_;
  std::optional<MonotoneHazard> mle_;
};

} // namespace isohaz
