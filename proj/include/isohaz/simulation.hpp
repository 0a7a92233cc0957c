#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "isohaz/inference.hpp"
#include "isohaz/random.hpp"

namespace isohaz {

/// Cox model with Weibull(shape, scale) baseline, covariates iid U(0,1) per
/// component and censoring U(0,1).
struct Scenario {
  double shape = 1.5;
  double scale = 1.0;
  std::vector<double> beta0{0.5};
  std::size_t n = 500;
  double x0 = 0.5;

  void validate() const;
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

double true_hazard(const Scenario& s, double x);
double true_cumulative_hazard(const Scenario& s, double x);
double true_hazard_second_derivative(const Scenario& s, double x);
/// Phi(x; beta0) by adaptive quadrature over the covariate (p <= 1).
double true_phi(const Scenario& s, double x);
/// P(X <= C) by nested quadrature (p <= 1).
double true_uncensored_fraction(const Scenario& s);

SurvivalSample generate_sample(const Scenario& s, RngStream& rng);

/// What the coverage study needs besides the scenario.
struct CiConfig {
  double alpha = 0.05;
  /// Constant of the undersmoothing bandwidth c n^{-1/4} for asymptotic intervals.
  double c = 1.0;
  Kernel kernel = Kernel::triweight();
  BoundaryPolicy boundary = BoundaryPolicy::none;
  SlopeRule slope_rule = SlopeRule::jump_points_right;
  /// Bootstrap settings; seed is derived per replication.
  BootstrapPlan bootstrap{};
  /// Use beta0 instead of the partial-likelihood estimate.
  bool true_beta = false;
};

struct SimulationReport {
  Scenario scenario;
  CiMethod method = CiMethod::asymptotic_sg;
  std::size_t replications = 0;
  double average_length = 0.0;          // unclamped
  double average_length_clamped = 0.0;
  double coverage = 0.0;                // over successful replications
  std::size_t failures = 0;
  double wall_time = 0.0;               // seconds, not serialised
  std::uint64_t seed = 0;
  std::vector<double> lengths;          // per successful replication, not serialised
  std::vector<char> covered;
};

void to_json(nlohmann::json& j, const SimulationReport& r);

/// Interval for one data set; used by the study and the CLI.
IntervalResult compute_interval(const SortedSample& sorted, CiMethod method, double x0,
                                const CiConfig& config, const Vector* fixed_beta = nullptr);

/// Runs all methods on the same simulated data sets (bootstrap intervals of
/// SG and SMLE share their resamples). Replication i uses master.split(i).
std::vector<SimulationReport> run_coverage_study(const Scenario& s, std::span<const CiMethod> methods,
                                                 const CiConfig& config, std::size_t replications,
                                                 std::uint64_t seed, unsigned threads = 0);
SimulationReport run_coverage_study(const Scenario& s, CiMethod method, const CiConfig& config,
                                    std::size_t replications, std::uint64_t seed,
                                    unsigned threads = 0);

/// Writes "method,n,AL,CP" rows.
void write_table_csv(std::ostream& out, std::span<const SimulationReport> reports);

struct PivotSummary {
  Estimator estimator = Estimator::sg;
  std::vector<double> pivots;  // n^{2/5}(estimate - lambda0(x0)), failed replications dropped
  double mean = 0.0;
  double variance = 0.0;
  double mean_standard_error = 0.0;
  double mu = 0.0;      // asymptotic mean target
  double sigma2 = 0.0;  // asymptotic variance target
};

struct PivotStudy {
  std::vector<PivotSummary> summaries;
  /// Replication indices that succeeded for every estimator; pivots are
  /// aligned with it.
  std::size_t failures = 0;
};

/// Simulates n^{2/5}(estimate(x0) - lambda0(x0)) with b = c n^{-1/5} and
/// compares with the limiting normal law. Estimators share data sets.
PivotStudy pivot_distribution_check(const Scenario& s, std::span<const Estimator> estimators,
                                    double c, std::size_t replications, std::uint64_t seed,
                                    unsigned threads = 0);

} // namespace isohaz
