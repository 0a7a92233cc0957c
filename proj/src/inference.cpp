#include "isohaz/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "isohaz/parallel.hpp"

namespace isohaz {

std::string_view to_string(CiMethod m) {
  switch (m) {
    case CiMethod::asymptotic_sg: return "asymptotic-SG";
    case CiMethod::asymptotic_smle: return "asymptotic-SMLE";
    case CiMethod::asymptotic_kernel: return "asymptotic-kernel";
    case CiMethod::grenander_chernoff: return "grenander-chernoff";
    case CiMethod::bootstrap_sg: return "bootstrap-SG";
    case CiMethod::bootstrap_smle: return "bootstrap-SMLE";
  }
  return "?";
}

CiMethod parse_ci_method(std::string_view name) {
  for (auto m : {CiMethod::asymptotic_sg, CiMethod::asymptotic_smle, CiMethod::asymptotic_kernel,
                 CiMethod::grenander_chernoff, CiMethod::bootstrap_sg, CiMethod::bootstrap_smle})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown interval method '" + std::string(name) + "'");
}

Estimator estimator_of(CiMethod m) {
  switch (m) {
    case CiMethod::asymptotic_sg:
    case CiMethod::bootstrap_sg: return Estimator::sg;
    case CiMethod::asymptotic_smle:
    case CiMethod::bootstrap_smle: return Estimator::smle;
    case CiMethod::asymptotic_kernel: return Estimator::kernel;
    case CiMethod::grenander_chernoff: return Estimator::grenander;
  }
  return Estimator::sg;
}

bool is_bootstrap(CiMethod m) { return m == CiMethod::bootstrap_sg || m == CiMethod::bootstrap_smle; }

void to_json(nlohmann::json& j, const IntervalResult& r) {
  j = nlohmann::json{{"x0", r.x0},       {"estimate", r.point_estimate}, {"lower", r.lower},
                     {"upper", r.upper}, {"method", to_string(r.method)}, {"level", r.level},
                     {"meta", r.meta}};
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
}

IntervalResult centred(double x0, double estimate, double halfwidth, CiMethod method, double alpha) {
  IntervalResult r;
  r.x0 = x0;
  r.point_estimate = estimate;
  r.raw_lower = estimate - halfwidth;
  r.lower = std::max(0.0, r.raw_lower);
  r.upper = estimate + halfwidth;
  r.method = method;
  r.level = 1.0 - alpha;
  return r;
}

} // namespace

double normal_upper_quantile(double alpha) {
  check_alpha(alpha);
  if (alpha == 0.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>{}, 1.0 - alpha / 2.0);
}

IntervalResult asymptotic_ci(double estimate, double phi_at_x0, std::size_t n, double c, double alpha,
                             const Kernel& kernel, CiMethod method) {
  if (!(phi_at_x0 > 0.0)) throw std::invalid_argument("asymptotic_ci: phi must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("asymptotic_ci: c must be positive");
  if (estimate < 0.0) throw std::invalid_argument("asymptotic_ci: estimate must be nonnegative");
  const double sigma = std::sqrt(estimate / (c * phi_at_x0) * kernel.square_integral());
  const double z = normal_upper_quantile(alpha);
  const double halfwidth = sigma == 0.0 ? 0.0 : std::pow(static_cast<double>(n), -0.375) * sigma * z;
  auto r = centred(0.0, estimate, halfwidth, method, alpha);
  r.meta = {{"sigma", sigma}, {"c", c}, {"n", n}, {"phi", phi_at_x0}};
  return r;
}

double grenander_slope_at(const MonotoneHazard& hazard, const SortedSample& sorted, double x0,
                          SlopeRule rule) {
  if (!(x0 > sorted.min_time() && x0 < sorted.max_time()))
    throw std::out_of_range("grenander_slope_at: x0 must lie in (T_(1), T_(n))");
  double lo, hi;
  if (rule == SlopeRule::jump_points_right) {
    const auto i = hazard.segment(x0);
    if (i + 1 >= hazard.levels().size()) return 0.0;
    return (hazard.levels()[i + 1] - hazard.levels()[i]) / (hazard.breakpoints()[i] - hazard.segment_start(i));
  }
  if (rule == SlopeRule::jump_points) {
    const auto i = hazard.segment(x0);
    lo = hazard.segment_start(i);
    hi = hazard.breakpoints()[i];
  } else {
    auto times = sorted.times();
    auto it = std::upper_bound(times.begin(), times.end(), x0);
    hi = *it;
    lo = *(it - 1);
  }
  lo = std::max(lo, hazard.lower());
  hi = std::min(hi, hazard.upper());
  return std::max(0.0, (hazard(hi) - hazard(lo)) / (hi - lo));
}

double chernoff_quantile(double alpha) {
  if (std::abs(alpha - 0.05) < 1e-12) return 0.998181;
  throw std::invalid_argument("no Chernoff quantile on file for alpha = " + std::to_string(alpha) +
                              " (only 0.05)");
}

IntervalResult grenander_ci(double hazard_value, double slope, double phi_at_x0, std::size_t n,
                            double alpha) {
  if (!(phi_at_x0 > 0.0)) throw std::invalid_argument("grenander_ci: phi must be positive");
  if (hazard_value < 0.0 || slope < 0.0)
    throw std::invalid_argument("grenander_ci: hazard and slope must be nonnegative");
  const double q = chernoff_quantile(alpha);
  const double cn = std::cbrt(4.0 * hazard_value * slope / phi_at_x0);
  const double halfwidth = std::cbrt(1.0 / static_cast<double>(n)) * cn * q;
  auto r = centred(0.0, hazard_value, halfwidth, CiMethod::grenander_chernoff, alpha);
  r.meta = {{"C", cn}, {"slope", slope}, {"n", n}, {"phi", phi_at_x0}};
  return r;
}

std::optional<double> invert_conditional_cdf(const std::function<double(double)>& cumhaz,
                                             double horizon, double linear_predictor, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("invert_conditional_cdf: u must lie in (0, 1)");
  const double target = -std::log1p(-u) * std::exp(-linear_predictor);
  if (target > cumhaz(horizon)) return std::nullopt;
  if (target <= cumhaz(0.0)) return 0.0;
  double lo = 0.0, hi = horizon;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (cumhaz(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<double> invert_conditional_cdf(const std::function<double(double)>& cumhaz,
                                             double horizon, std::span<const double> z,
                                             const Vector& beta, double u) {
  if (static_cast<std::size_t>(beta.size()) != z.size())
    throw std::invalid_argument("invert_conditional_cdf: dimension mismatch");
  double eta = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) eta += beta[static_cast<Eigen::Index>(j)] * z[j];
  return invert_conditional_cdf(cumhaz, horizon, eta, u);
}

SmoothedCumulativeHazard::SmoothedCumulativeHazard(StepFunction cumhaz, KernelSpec spec, double horizon)
    : cumhaz_(std::move(cumhaz)), spec_(std::move(spec)), horizon_(horizon) {
  at_zero_ = (*this)(0.0);
  at_horizon_ = (*this)(horizon_);
}

std::optional<double> SmoothedCumulativeHazard::invert(double linear_predictor, double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("invert: u must lie in (0, 1)");
  const double target = -std::log1p(-u) * std::exp(-linear_predictor);
  if (target > at_horizon_) return std::nullopt;
  if (target <= at_zero_) return 0.0;
  double lo = 0.0, hi = horizon_;
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double fx = (*this)(x) - target;
    if (fx < 0.0)
      lo = x;
    else
      hi = x;
    const double d = derivative(x);
    double next = d > 0.0 ? x - fx / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-12 || hi - lo < 1e-10) return next;
    x = next;
  }
  return x;
}

SurvivalSample smooth_bootstrap_sample(const Vector& beta, const SmoothedCumulativeHazard& cumhaz,
                                       const CensoringSurvival& censoring,
                                       std::span<const std::vector<double>> covariates,
                                       RngStream& rng) {
  std::vector<Record> records;
  records.reserve(covariates.size());
  for (const auto& z : covariates) {
    double eta = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) eta += beta[static_cast<Eigen::Index>(j)] * z[j];
    const auto x = cumhaz.invert(eta, rng.uniform_open());
    const double c = censoring.quantile(rng.uniform());
    Record r;
    r.covariates = z;
    if (x && *x <= c) {
      r.time = *x;
      r.event = true;
    } else {
      r.time = x ? std::min(*x, c) : c;
      r.event = false;
    }
    records.push_back(std::move(r));
  }
  return SurvivalSample(std::move(records));
}

SurvivalSample smooth_bootstrap_sample(const CoxFit& fit, const StepFunction& cumhaz,
                                       const CensoringSurvival& censoring, const KernelSpec& spec,
                                       std::span<const std::vector<double>> covariates,
                                       RngStream& rng) {
  const double horizon = censoring.atoms.back().time;
  SmoothedCumulativeHazard smooth(cumhaz, spec, horizon);
  return smooth_bootstrap_sample(fit.beta, smooth, censoring, covariates, rng);
}

std::pair<double, double> percentile_ci(std::span<const double> estimates, double alpha) {
  if (estimates.empty()) throw std::invalid_argument("percentile_ci: no estimates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("percentile_ci: alpha must lie in (0, 1)");
  std::vector<double> sorted(estimates.begin(), estimates.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto k = static_cast<std::size_t>(std::floor(h));
    if (k + 1 >= sorted.size()) return sorted.back();
    return sorted[k] + (h - static_cast<double>(k)) * (sorted[k + 1] - sorted[k]);
  };
  return {quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)};
}

double BandwidthRule::operator()(const SortedSample& sorted) const {
  const double c = constant > 0.0 ? constant : sorted.max_time() - sorted.min_time();
  return c * std::pow(static_cast<double>(sorted.size()), -exponent);
}

BootstrapDraws bootstrap_draws(const SortedSample& sorted, double x0, const BootstrapPlan& plan,
                               bool want_sg, bool want_smle) {
  if (plan.replicates < 1) throw std::invalid_argument("bootstrap: B >= 1 required");
  const Vector beta = estimate_beta(sorted);
  HazardEstimates original(sorted, beta);
  const KernelSpec resample_spec(plan.kernel, plan.resample_bandwidth(sorted), BoundaryPolicy::none);
  const KernelSpec estimate_spec(plan.kernel, plan.estimate_bandwidth(sorted), plan.boundary);

  BootstrapDraws draws;
  if (want_sg) draws.point_sg = original.at(Estimator::sg, estimate_spec, x0);
  if (want_smle) draws.point_smle = original.at(Estimator::smle, estimate_spec, x0);

  const auto censoring = kaplan_meier_censoring(sorted);
  const SmoothedCumulativeHazard smooth(original.cumulative(), resample_spec, sorted.max_time());
  std::vector<std::vector<double>> covariates;
  covariates.reserve(sorted.size());
  for (const auto& r : sorted.base().records()) covariates.push_back(r.covariates);

  constexpr double failed = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sg(plan.replicates, failed), smle(plan.replicates, failed);
  const RngStream master(plan.seed);
  parallel_for(plan.replicates, plan.threads, [&](std::size_t j) {
    auto rng = master.split(j);
    try {
      SortedSample boot(smooth_bootstrap_sample(beta, smooth, censoring, covariates, rng));
      HazardEstimates est(boot, estimate_beta(boot));
      if (want_sg) sg[j] = est.at(Estimator::sg, estimate_spec, x0);
      if (want_smle) smle[j] = est.at(Estimator::smle, estimate_spec, x0);
    } catch (const std::exception&) {
      sg[j] = smle[j] = failed;
    }
  });

  for (std::size_t j = 0; j < plan.replicates; ++j) {
    const bool ok = (!want_sg || std::isfinite(sg[j])) && (!want_smle || std::isfinite(smle[j]));
    if (!ok) {
      ++draws.failures;
      continue;
    }
    if (want_sg) draws.sg.push_back(sg[j]);
    if (want_smle) draws.smle.push_back(smle[j]);
  }
  if (static_cast<double>(draws.failures) >
      plan.max_failure_fraction * static_cast<double>(plan.replicates))
    throw BootstrapError("bootstrap: " + std::to_string(draws.failures) + " of " +
                         std::to_string(plan.replicates) + " replicates failed");
  return draws;
}

IntervalResult bootstrap_interval(const BootstrapDraws& draws, Estimator method, double x0,
                                  const BootstrapPlan& plan, std::size_t n) {
  if (method != Estimator::sg && method != Estimator::smle)
    throw std::invalid_argument("bootstrap intervals exist for sg and smle only");
  const bool is_sg = method == Estimator::sg;
  const auto& values = is_sg ? draws.sg : draws.smle;
  const auto [lo, hi] = percentile_ci(values, plan.alpha);
  IntervalResult r;
  r.x0 = x0;
  r.point_estimate = is_sg ? draws.point_sg : draws.point_smle;
  r.raw_lower = lo;
  r.lower = std::max(0.0, lo);
  r.upper = hi;
  r.method = is_sg ? CiMethod::bootstrap_sg : CiMethod::bootstrap_smle;
  r.level = 1.0 - plan.alpha;
  r.meta = {{"B", plan.replicates},
            {"failures", draws.failures},
            {"seed", plan.seed},
            {"n", n},
            {"resample_bandwidth", {{"c", plan.resample_bandwidth.constant}, {"exponent", plan.resample_bandwidth.exponent}}},
            {"estimate_bandwidth", {{"c", plan.estimate_bandwidth.constant}, {"exponent", plan.estimate_bandwidth.exponent}}}};
  return r;
}

IntervalResult bootstrap_ci(const SortedSample& sorted, Estimator method, double x0,
                            const BootstrapPlan& plan) {
  const bool sg = method == Estimator::sg;
  if (!sg && method != Estimator::smle)
    throw std::invalid_argument("bootstrap intervals exist for sg and smle only");
  const auto draws = bootstrap_draws(sorted, x0, plan, sg, !sg);
  return bootstrap_interval(draws, method, x0, plan, sorted.size());
}

} // namespace isohaz
