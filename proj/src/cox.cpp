#include "isohaz/cox.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace isohaz {

namespace {

void check_dimension(const SortedSample& sorted, const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != sorted.dimension())
    throw std::invalid_argument("beta has dimension " + std::to_string(beta.size()) +
                                ", covariates have dimension " +
                                std::to_string(sorted.dimension()));
}

Eigen::Map<const Vector> covariate_row(const SortedSample& sorted, std::size_t k) {
  auto z = sorted.covariates(k);
  return {z.data(), static_cast<Eigen::Index>(z.size())};
}

struct RiskSetSums {
  ScoreInformation result;
  Matrix uncentered;  // sum over events of S2/S0, used to judge singularity
};

// Walks tie groups from the largest time down, accumulating S0, S1, S2 over
// the risk set {T_j >= t}. Weights are shifted by the maximal linear predictor.
RiskSetSums risk_set_sums(const SortedSample& sorted, const Vector& beta, bool derivatives) {
  check_dimension(sorted, beta);
  if (sorted.event_count() == 0) throw NoEventsError();
  const std::size_t n = sorted.size();
  const auto p = static_cast<Eigen::Index>(sorted.dimension());
  const Vector eta = linear_predictor(sorted, beta);
  const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;

  RiskSetSums out;
  auto& res = out.result;
  res.score = Vector::Zero(p);
  res.information = Matrix::Zero(p, p);
  out.uncentered = Matrix::Zero(p, p);
  double s0 = 0.0;
  Vector s1 = Vector::Zero(p);
  Matrix s2 = Matrix::Zero(p, p);

  std::size_t end = n;
  while (end > 0) {
    std::size_t begin = end - 1;
    const double t = sorted.time(begin);
    while (begin > 0 && sorted.time(begin - 1) == t) --begin;
    for (std::size_t k = begin; k < end; ++k) {
      const double w = std::exp(eta[static_cast<Eigen::Index>(k)] - shift);
      s0 += w;
      if (derivatives && p > 0) {
        auto z = covariate_row(sorted, k);
        s1.noalias() += w * z;
        s2.noalias() += w * z * z.transpose();
      }
    }
    std::size_t events = 0;
    for (std::size_t k = begin; k < end; ++k) {
      if (!sorted.event(k)) continue;
      ++events;
      res.log_likelihood += eta[static_cast<Eigen::Index>(k)];
      if (derivatives && p > 0) res.score += covariate_row(sorted, k);
    }
    if (events > 0) {
      const double d = static_cast<double>(events);
      res.log_likelihood -= d * (shift + std::log(s0));
      if (derivatives && p > 0) {
        const Vector mean = s1 / s0;
        res.score -= d * mean;
        out.uncentered += d * (s2 / s0);
        res.information += d * (s2 / s0 - mean * mean.transpose());
      }
    }
    end = begin;
  }
  return out;
}

bool is_singular(const Matrix& information, const Matrix& uncentered) {
  const auto p = information.rows();
  Vector scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double d = uncentered(j, j);
    if (!(d > 0.0)) return true;
    scale[j] = 1.0 / std::sqrt(d);
  }
  const Matrix scaled = scale.asDiagonal() * information * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(scaled, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() <= 1e-10;
}

} // namespace

Vector linear_predictor(const SortedSample& sorted, const Vector& beta) {
  check_dimension(sorted, beta);
  const std::size_t n = sorted.size();
  Vector eta = Vector::Zero(static_cast<Eigen::Index>(n));
  if (beta.size() == 0) return eta;
  for (std::size_t k = 0; k < n; ++k)
    eta[static_cast<Eigen::Index>(k)] = covariate_row(sorted, k).dot(beta);
  return eta;
}

double phi_n(const SortedSample& sorted, double x, const Vector& beta) {
  const Vector eta = linear_predictor(sorted, beta);
  auto times = sorted.times();
  auto first = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), x) - times.begin());
  double sum = 0.0;
  for (std::size_t k = first; k < sorted.size(); ++k) sum += std::exp(eta[static_cast<Eigen::Index>(k)]);
  return sum / static_cast<double>(sorted.size());
}

std::vector<double> phi_n_at_times(const SortedSample& sorted, const Vector& beta) {
  const Vector eta = linear_predictor(sorted, beta);
  const std::size_t n = sorted.size();
  std::vector<double> out(n);
  double sum = 0.0;
  std::size_t end = n;
  while (end > 0) {
    std::size_t begin = end - 1;
    while (begin > 0 && sorted.time(begin - 1) == sorted.time(begin)) --begin;
    for (std::size_t k = begin; k < end; ++k) sum += std::exp(eta[static_cast<Eigen::Index>(k)]);
    for (std::size_t k = begin; k < end; ++k) out[k] = sum / static_cast<double>(n);
    end = begin;
  }
  return out;
}

double log_partial_likelihood(const SortedSample& sorted, const Vector& beta) {
  return risk_set_sums(sorted, beta, false).result.log_likelihood;
}

ScoreInformation score_and_information(const SortedSample& sorted, const Vector& beta) {
  return risk_set_sums(sorted, beta, true).result;
}

CoxFit fit_beta(const SortedSample& sorted, const FitOptions& options) {
  const auto p = static_cast<Eigen::Index>(sorted.dimension());
  if (p == 0) throw std::invalid_argument("fit_beta: p >= 1 required");
  if (sorted.event_count() == 0) throw NoEventsError();

  CoxFit fit;
  fit.beta = options.initial_beta.size() == 0 ? Vector::Zero(p) : options.initial_beta;
  check_dimension(sorted, fit.beta);

  auto current = risk_set_sums(sorted, fit.beta, true);
  for (;;) {
    const auto& cur = current.result;
    fit.log_partial_likelihood = cur.log_likelihood;
    fit.information = cur.information;
    fit.gradient_norm = cur.score.lpNorm<Eigen::Infinity>();
    if (is_singular(cur.information, current.uncentered)) {
      fit.reason = "singular information";
      return fit;
    }
    if (fit.gradient_norm <= options.tolerance) {
      fit.converged = true;
      return fit;
    }
    if (fit.iterations >= options.max_iterations) {
      fit.reason = "max iterations";
      return fit;
    }
    const Vector step = cur.information.ldlt().solve(cur.score);
    if (!step.allFinite()) {
      fit.reason = "singular information";
      return fit;
    }
    ++fit.iterations;
    const double slack = 1e-12 * (1.0 + std::abs(cur.log_likelihood));
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
      Vector trial = fit.beta + scale * step;
      auto next = risk_set_sums(sorted, trial, true);
      if (std::isfinite(next.result.log_likelihood) &&
          next.result.log_likelihood >= cur.log_likelihood - slack) {
        fit.beta = std::move(trial);
        current = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.reason = "line search failed";
      return fit;
    }
  }
}

void to_json(nlohmann::json& j, const CoxFit& fit) {
  j = nlohmann::json{{"beta", std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size())},
                     {"loglik", fit.log_partial_likelihood},
                     {"iterations", fit.iterations},
                     {"converged", fit.converged}};
  if (!fit.reason.empty()) j["reason"] = fit.reason;
}

} // namespace isohaz
