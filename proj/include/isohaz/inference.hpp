#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "isohaz/estimators.hpp"
#include "isohaz/random.hpp"

namespace isohaz {

enum class CiMethod {
  asymptotic_sg,
  asymptotic_smle,
  asymptotic_kernel,
  grenander_chernoff,
  bootstrap_sg,
  bootstrap_smle,
};

std::string_view to_string(CiMethod m);
CiMethod parse_ci_method(std::string_view name);
/// Estimator whose value the interval is centred on.
Estimator estimator_of(CiMethod m);
bool is_bootstrap(CiMethod m);

struct IntervalResult {
  double x0 = 0.0;
  double point_estimate = 0.0;
  double lower = 0.0;      // clamped at 0
  double upper = 0.0;
  double raw_lower = 0.0;  // before clamping
  CiMethod method = CiMethod::asymptotic_sg;
  double level = 0.95;
  nlohmann::json meta = nlohmann::json::object();

  double length() const { return upper - lower; }
  double raw_length() const { return upper - raw_lower; }
  bool covers(double value) const { return lower <= value && value <= upper; }
};

void to_json(nlohmann::json& j, const IntervalResult& r);

/// Standard normal quantile; alpha = 0 gives +inf.
double normal_upper_quantile(double alpha);

/// estimate -/+ n^{-3/8} sigma z_{1-alpha/2} with
/// sigma^2 = estimate / (c phi) * integral of k^2, valid for b = c n^{-1/4}.
IntervalResult asymptotic_ci(double estimate, double phi_at_x0, std::size_t n, double c, double alpha,
                             const Kernel& kernel = Kernel::triweight(),
                             CiMethod method = CiMethod::asymptotic_sg);

/// How the derivative of the step estimate is read off at x0.
enum class SlopeRule {
  /// Across the jump points of the estimate that bracket x0, read right-continuously
  /// (the level on x0's segment against the next one).
  jump_points_right,
  /// Same interval, read left-continuously (previous level against x0's).
  jump_points,
  /// Across the observed times T_(i) <= x0 < T_(i+1).
  observations,
};

/// (h(t_hi) - h(t_lo)) / (t_hi - t_lo) for the bracketing interval chosen by
/// the rule. Requires T_(1) < x0 < T_(n).
double grenander_slope_at(const MonotoneHazard& hazard, const SortedSample& sorted, double x0,
                          SlopeRule rule = SlopeRule::jump_points_right);

/// Upper quantile of Chernoff's distribution; only 1 - alpha/2 = 0.975 is tabulated.
double chernoff_quantile(double alpha);

/// hazard -/+ n^{-1/3} (4 hazard slope / phi)^{1/3} q_{1-alpha/2}(Z).
IntervalResult grenander_ci(double hazard_value, double slope, double phi_at_x0, std::size_t n,
                            double alpha);

/// Solves cumhaz(x) = -log(1 - u) exp(-eta) on [0, horizon] by bisection to
/// 1e-10 in x. nullopt marks an event beyond the horizon.
std::optional<double> invert_conditional_cdf(const std::function<double(double)>& cumhaz,
                                             double horizon, double linear_predictor, double u);
std::optional<double> invert_conditional_cdf(const std::function<double(double)>& cumhaz,
                                             double horizon, std::span<const double> z,
                                             const Vector& beta, double u);

/// Smoothed Breslow estimator with its derivative, for fast inversion.
class SmoothedCumulativeHazard {
public:
  SmoothedCumulativeHazard(StepFunction cumhaz, KernelSpec spec, double horizon);

  double operator()(double x) const { return smoothed_breslow(cumhaz_, spec_, x); }
  double derivative(double x) const { return naive_kernel_estimator(cumhaz_, spec_, x); }
  double horizon() const { return horizon_; }

  /// Same contract as invert_conditional_cdf; safeguarded Newton iteration.
  std::optional<double> invert(double linear_predictor, double u) const;

private:
  StepFunction cumhaz_;
  KernelSpec spec_;
  double horizon_;
  double at_zero_;
  double at_horizon_;
};

/// One smooth-bootstrap sample: covariates fixed, X* from the smoothed
/// conditional cdf, C* from the censoring atoms.
SurvivalSample smooth_bootstrap_sample(const Vector& beta, const SmoothedCumulativeHazard& cumhaz,
                                       const CensoringSurvival& censoring,
                                       std::span<const std::vector<double>> covariates,
                                       RngStream& rng);
SurvivalSample smooth_bootstrap_sample(const CoxFit& fit, const StepFunction& cumhaz,
                                       const CensoringSurvival& censoring, const KernelSpec& spec,
                                       std::span<const std::vector<double>> covariates,
                                       RngStream& rng);

/// Empirical alpha/2 and 1 - alpha/2 quantiles, linear interpolation at
/// 1-based rank (B - 1) q + 1.
std::pair<double, double> percentile_ci(std::span<const double> estimates, double alpha);

/// c n^{-exponent}; c <= 0 means "range of the observed times".
struct BandwidthRule {
  double constant = 1.0;
  double exponent = 0.2;

  double operator()(const SortedSample& sorted) const;
};

struct BootstrapPlan {
  std::size_t replicates = 1000;
  BandwidthRule resample_bandwidth{1.0, 0.2};
  BandwidthRule estimate_bandwidth{1.0, 0.2};
  Kernel kernel = Kernel::triweight();
  BoundaryPolicy boundary = BoundaryPolicy::none;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double max_failure_fraction = 0.05;
};

class BootstrapError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct BootstrapDraws {
  std::vector<double> sg;    // successful replicate estimates, in replicate order
  std::vector<double> smle;
  std::size_t failures = 0;
  double point_sg = 0.0;
  double point_smle = 0.0;
};

/// Runs the bootstrap once and evaluates both smoothed estimators on every
/// replicate. Throws BootstrapError when more than the allowed fraction of
/// replicates fail.
BootstrapDraws bootstrap_draws(const SortedSample& sorted, double x0, const BootstrapPlan& plan,
                               bool want_sg = true, bool want_smle = true);

/// Percentile interval for method SG (Estimator::sg) or SMLE (Estimator::smle).
IntervalResult bootstrap_ci(const SortedSample& sorted, Estimator method, double x0,
                            const BootstrapPlan& plan);
IntervalResult bootstrap_interval(const BootstrapDraws& draws, Estimator method, double x0,
                                  const BootstrapPlan& plan, std::size_t n);

} // namespace isohaz
