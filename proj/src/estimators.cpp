#include "isohaz/estimators.hpp"

namespace isohaz {

Estimator parse_estimator(std::string_view name) {
  if (name == "grenander") return Estimator::grenander;
  if (name == "mle") return Estimator::mle;
  if (name == "sg") return Estimator::sg;
  if (name == "smle") return Estimator::smle;
  if (name == "kernel") return Estimator::kernel;
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::grenander: return "grenander";
    case Estimator::mle: return "mle";
    case Estimator::sg: return "sg";
    case Estimator::smle: return "smle";
    case Estimator::kernel: return "kernel";
  }
  return "?";
}

Vector estimate_beta(const SortedSample& sorted, const FitOptions& options) {
  if (sorted.dimension() == 0) return Vector{};
  auto fit = fit_beta(sorted, options);
  if (!fit.converged) throw FitError(fit.reason);
  return fit.beta;
}

HazardEstimates::HazardEstimates(const SortedSample& sorted, Vector beta, DiagramSupport support)
    : sorted_(&sorted), beta_(std::move(beta)), support_(support), cumhaz_(breslow(sorted, beta_)) {
  if (cumhaz_.empty()) throw NoEventsError();
}

const MonotoneHazard& HazardEstimates::grenander() {
  if (!grenander_) grenander_ = isohaz::grenander(*sorted_, cumhaz_, support_);
  return *grenander_;
}

const MonotoneHazard& HazardEstimates::mle() {
  if (!mle_) mle_ = mle_baseline(*sorted_, beta_);
  return *mle_;
}

double HazardEstimates::at(Estimator e, const KernelSpec& spec, double x) {
  switch (e) {
    case Estimator::grenander: return grenander()(x);
    case Estimator::mle: return mle()(x);
    case Estimator::sg: return smooth_monotone(grenander(), spec, x);
    case Estimator::smle: return smooth_monotone(mle(), spec, x);
    case Estimator::kernel: return naive_kernel_estimator(cumhaz_, spec, x);
  }
  throw std::logic_error("unreachable");
}

Interval HazardEstimates::domain(Estimator e) {
  switch (e) {
    case Estimator::grenander:
    case Estimator::sg: return {grenander().lower(), grenander().upper()};
    case Estimator::mle:
    case Estimator::smle: return {mle().lower(), mle().upper()};
    case Estimator::kernel: break;
  }
  return {0.0, sorted_->max_time()};
}

} // namespace isohaz
