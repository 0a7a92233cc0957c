#include "isohaz/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "isohaz/parallel.hpp"

namespace isohaz {

namespace {

template <class F>
double integrate01(F f) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-13);
}

double single_beta(const Scenario& s) {
  if (s.beta0.size() > 1)
    throw std::invalid_argument("population quantities are available for p <= 1 only");
  return s.beta0.empty() ? 0.0 : s.beta0.front();
}

} // namespace

void Scenario::validate() const {
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::invalid_argument("scenario: shape and scale must be positive");
  if (n < 2) throw std::invalid_argument("scenario: n >= 2 required");
  if (!(x0 > 0.0 && x0 < 1.0)) throw std::invalid_argument("scenario: x0 must lie in (0, 1)");
}

void to_json(nlohmann::json& j, const Scenario& s) {
  j = nlohmann::json{{"baseline", {{"family", "weibull"}, {"shape", s.shape}, {"scale", s.scale}}},
                     {"beta0", s.beta0},
                     {"covariate_law", "uniform01"},
                     {"censoring_law", "uniform01"},
                     {"n", s.n},
                     {"x0", s.x0}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
  Scenario out;
  if (j.contains("baseline")) {
    const auto& b = j.at("baseline");
    if (b.value("family", std::string("weibull")) != "weibull")
      throw std::invalid_argument("scenario: only the weibull baseline is supported");
    out.shape = b.value("shape", out.shape);
    out.scale = b.value("scale", out.scale);
  }
  if (j.contains("beta0")) out.beta0 = j.at("beta0").get<std::vector<double>>();
  if (j.value("covariate_law", std::string("uniform01")) != "uniform01")
    throw std::invalid_argument("scenario: only uniform01 covariates are supported");
  if (j.value("censoring_law", std::string("uniform01")) != "uniform01")
    throw std::invalid_argument("scenario: only uniform01 censoring is supported");
  out.n = j.value("n", out.n);
  out.x0 = j.value("x0", out.x0);
  out.validate();
  s = std::move(out);
}

double true_hazard(const Scenario& s, double x) {
  if (x <= 0.0) return s.shape < 1.0 ? std::numeric_limits<double>::infinity() : (s.shape == 1.0 ? 1.0 / s.scale : 0.0);
  return s.shape / s.scale * std::pow(x / s.scale, s.shape - 1.0);
}

double true_cumulative_hazard(const Scenario& s, double x) {
  return x <= 0.0 ? 0.0 : std::pow(x / s.scale, s.shape);
}

double true_hazard_second_derivative(const Scenario& s, double x) {
  const double k = s.shape;
  return k * (k - 1.0) * (k - 2.0) / (s.scale * s.scale * s.scale) * std::pow(x / s.scale, k - 3.0);
}

double true_phi(const Scenario& s, double x) {
  const double beta = single_beta(s);
  const double cum = true_cumulative_hazard(s, x);
  const double censor_survival = std::clamp(1.0 - x, 0.0, 1.0);
  if (s.beta0.empty()) return censor_survival * std::exp(-cum);
  return censor_survival * integrate01([&](double z) {
           const double w = std::exp(beta * z);
           return w * std::exp(-cum * w);
         });
}

double true_uncensored_fraction(const Scenario& s) {
  const double beta = single_beta(s);
  auto given_z = [&](double z) {
    const double w = std::exp(beta * z);
    return integrate01([&](double c) { return 1.0 - std::exp(-true_cumulative_hazard(s, c) * w); });
  };
  if (s.beta0.empty()) return given_z(0.0);
  return integrate01(given_z);
}

SurvivalSample generate_sample(const Scenario& s, RngStream& rng) {
  std::vector<Record> records(s.n);
  for (auto& r : records) {
    r.covariates.resize(s.beta0.size());
    double eta = 0.0;
    for (std::size_t j = 0; j < s.beta0.size(); ++j) {
      r.covariates[j] = rng.uniform();
      eta += s.beta0[j] * r.covariates[j];
    }
    const double u = rng.uniform();
    const double x = s.scale * std::pow(-std::log1p(-u) * std::exp(-eta), 1.0 / s.shape);
    const double c = rng.uniform();
    r.event = x <= c;
    r.time = r.event ? x : c;
  }
  return SurvivalSample(std::move(records));
}

void to_json(nlohmann::json& j, const SimulationReport& r) {
  j = nlohmann::json{{"scenario", r.scenario},
                     {"method", to_string(r.method)},
                     {"replications", r.replications},
                     {"average_length", r.average_length},
                     {"average_length_clamped", r.average_length_clamped},
                     {"coverage", r.coverage},
                     {"failures", r.failures},
                     {"seed", r.seed}};
}

IntervalResult compute_interval(const SortedSample& sorted, CiMethod method, double x0,
                                const CiConfig& config, const Vector* fixed_beta) {
  if (is_bootstrap(method)) {
    auto plan = config.bootstrap;
    plan.alpha = config.alpha;
    plan.kernel = config.kernel;
    plan.boundary = config.boundary;
    return bootstrap_ci(sorted, estimator_of(method), x0, plan);
  }
  const Vector beta = fixed_beta ? *fixed_beta : estimate_beta(sorted);
  HazardEstimates est(sorted, beta);
  const std::size_t n = sorted.size();
  const double phi = phi_n(sorted, x0, beta);
  IntervalResult r;
  if (method == CiMethod::grenander_chernoff) {
    const auto& g = est.grenander();
    r = grenander_ci(g(x0), grenander_slope_at(g, sorted, x0, config.slope_rule), phi, n, config.alpha);
  } else {
    const double c = config.c > 0.0 ? config.c : sorted.max_time() - sorted.min_time();
    const KernelSpec spec(config.kernel, undersmoothing_bandwidth(n, c), config.boundary);
    const double value = est.at(estimator_of(method), spec, x0);
    r = asymptotic_ci(value, phi, n, c, config.alpha, config.kernel, method);
    r.meta["bandwidth"] = spec.bandwidth;
  }
  r.x0 = x0;
  return r;
}

namespace {

struct Outcome {
  bool ok = false;
  double raw_length = 0.0;
  double length = 0.0;
  bool covered = false;
};

} // namespace

std::vector<SimulationReport> run_coverage_study(const Scenario& s, std::span<const CiMethod> methods,
                                                 const CiConfig& config, std::size_t replications,
                                                 std::uint64_t seed, unsigned threads) {
  if (replications < 1) throw std::invalid_argument("coverage study: replications >= 1 required");
  s.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = methods.size();
  const double truth = true_hazard(s, s.x0);
  const Vector beta0 = Eigen::Map<const Vector>(s.beta0.data(), static_cast<Eigen::Index>(s.beta0.size()));
  std::vector<Outcome> outcomes(replications * m);
  const RngStream master(seed);

  auto record = [&](std::size_t i, std::size_t k, const IntervalResult& r) {
    auto& o = outcomes[i * m + k];
    o.ok = !std::isnan(r.raw_length());
    o.raw_length = r.raw_length();
    o.length = r.length();
    o.covered = r.covers(truth);
  };

  parallel_for(replications, threads, [&](std::size_t i) {
    const auto rep = master.split(i);
    auto data_rng = rep.split(0);
    std::optional<SortedSample> sorted;
    try {
      sorted.emplace(generate_sample(s, data_rng));
    } catch (const std::exception&) {
      return;
    }
    std::optional<BootstrapDraws> draws;
    bool draws_failed = false;
    auto plan = config.bootstrap;
    plan.alpha = config.alpha;
    plan.kernel = config.kernel;
    plan.boundary = config.boundary;
    plan.seed = rep.split(1).seed();
    plan.threads = 1;
    for (std::size_t k = 0; k < m; ++k) {
      try {
        if (is_bootstrap(methods[k])) {
          if (!draws && !draws_failed) {
            const bool want_sg = std::find(methods.begin(), methods.end(), CiMethod::bootstrap_sg) != methods.end();
            const bool want_smle = std::find(methods.begin(), methods.end(), CiMethod::bootstrap_smle) != methods.end();
            try {
              draws = bootstrap_draws(*sorted, s.x0, plan, want_sg, want_smle);
            } catch (const std::exception&) {
              draws_failed = true;
            }
          }
          if (draws) record(i, k, bootstrap_interval(*draws, estimator_of(methods[k]), s.x0, plan, s.n));
        } else {
          record(i, k, compute_interval(*sorted, methods[k], s.x0, config, config.true_beta ? &beta0 : nullptr));
        }
      } catch (const std::exception&) {
      }
    }
  });

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<SimulationReport> reports(m);
  for (std::size_t k = 0; k < m; ++k) {
    auto& r = reports[k];
    r.scenario = s;
    r.method = methods[k];
    r.replications = replications;
    r.seed = seed;
    r.wall_time = elapsed;
    double sum = 0.0, sum_clamped = 0.0, hits = 0.0;
    for (std::size_t i = 0; i < replications; ++i) {
      const auto& o = outcomes[i * m + k];
      if (!o.ok) {
        ++r.failures;
        continue;
      }
      sum += o.raw_length;
      sum_clamped += o.length;
      hits += o.covered ? 1.0 : 0.0;
      r.lengths.push_back(o.raw_length);
      r.covered.push_back(o.covered ? 1 : 0);
    }
    const double ok = static_cast<double>(r.lengths.size());
    if (ok > 0) {
      r.average_length = sum / ok;
      r.average_length_clamped = sum_clamped / ok;
      r.coverage = hits / ok;
    }
  }
  return reports;
}

SimulationReport run_coverage_study(const Scenario& s, CiMethod method, const CiConfig& config,
                                    std::size_t replications, std::uint64_t seed, unsigned threads) {
  const CiMethod methods[] = {method};
  return run_coverage_study(s, methods, config, replications, seed, threads).front();
}

void write_table_csv(std::ostream& out, std::span<const SimulationReport> reports) {
  out << "method,n,AL,CP\n";
  auto old = out.precision(6);
  for (const auto& r : reports)
    out << to_string(r.method) << ',' << r.scenario.n << ',' << std::fixed << r.average_length << ','
        << r.coverage << std::defaultfloat << '\n';
  out.precision(old);
}

PivotStudy pivot_distribution_check(const Scenario& s, std::span<const Estimator> estimators,
                                    double c, std::size_t replications, std::uint64_t seed,
                                    unsigned threads) {
  s.validate();
  const std::size_t m = estimators.size();
  const double n = static_cast<double>(s.n);
  const double truth = true_hazard(s, s.x0);
  const Kernel kernel = Kernel::triweight();
  const KernelSpec spec(kernel, c * std::pow(n, -0.2), BoundaryPolicy::none);
  const double scale = std::pow(n, 0.4);
  constexpr double failed = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values(replications * m, failed);
  const RngStream master(seed);

  parallel_for(replications, threads, [&](std::size_t i) {
    auto rng = master.split(i).split(0);
    try {
      SortedSample sorted(generate_sample(s, rng));
      HazardEstimates est(sorted, estimate_beta(sorted));
      for (std::size_t k = 0; k < m; ++k) values[i * m + k] = scale * (est.at(estimators[k], spec, s.x0) - truth);
    } catch (const std::exception&) {
    }
  });

  PivotStudy study;
  study.summaries.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    auto& sum = study.summaries[k];
    sum.estimator = estimators[k];
    sum.mu = 0.5 * c * c * true_hazard_second_derivative(s, s.x0) * kernel.moment(2, -1.0, 1.0);
    sum.sigma2 = truth / (c * true_phi(s, s.x0)) * kernel.square_integral();
  }
  for (std::size_t i = 0; i < replications; ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < m; ++k) ok = ok && std::isfinite(values[i * m + k]);
    if (!ok) {
      ++study.failures;
      continue;
    }
    for (std::size_t k = 0; k < m; ++k) study.summaries[k].pivots.push_back(values[i * m + k]);
  }
  for (auto& sum : study.summaries) {
    const double count = static_cast<double>(sum.pivots.size());
    if (count < 2) continue;
    double mean = 0.0;
    for (double v : sum.pivots) mean += v;
    mean /= count;
    double ss = 0.0;
    for (double v : sum.pivots) ss += (v - mean) * (v - mean);
    sum.mean = mean;
    sum.variance = ss / (count - 1.0);
    sum.mean_standard_error = std::sqrt(sum.variance / count);
  }
  return study;
}

} // namespace isohaz
