#pragma once

#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "isohaz/survival.hpp"

namespace isohaz {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when the partial likelihood is undefined because there are no events.
class NoEventsError : public std::runtime_error {
public:
  NoEventsError() : std::runtime_error("no events") {}
};

/// Linear predictors beta'Z in sorted order.
Vector linear_predictor(const SortedSample& sorted, const Vector& beta);

/// (1/n) * sum_i 1{T_i >= x} exp(beta'Z_i).
double phi_n(const SortedSample& sorted, double x, const Vector& beta);

/// Phi_n evaluated at every sorted time, i.e. out[k] = Phi_n(T_(k); beta).
/// Tied times share the same value.
std::vector<double> phi_n_at_times(const SortedSample& sorted, const Vector& beta);

double log_partial_likelihood(const SortedSample& sorted, const Vector& beta);

struct ScoreInformation {
  Vector score;
  Matrix information;
  double log_likelihood = 0.0;
};

/// Gradient and negative Hessian of the log partial likelihood.
ScoreInformation score_and_information(const SortedSample& sorted, const Vector& beta);

struct FitOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
  Vector initial_beta;  // empty means zero
};

struct CoxFit {
  Vector beta;
  double log_partial_likelihood = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  Matrix information;
  bool converged = false;
  std::string reason;  // empty when converged
};

/// Damped Newton maximisation of the log partial likelihood, starting at the
/// initial beta, halving the step until the objective does not decrease.
/// Failure modes come back as converged == false with a reason
/// ("singular information", "max iterations"). Requires p >= 1.
CoxFit fit_beta(const SortedSample& sorted, const FitOptions& options = {});

void to_json(nlohmann::json& j, const CoxFit& fit);

} // namespace isohaz
