#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isohaz/simulation.hpp"

using namespace isohaz;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_numeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("grid: cannot parse '" + item + "'");
    }
  }
  if (parts.size() != 3) throw UsageError("grid must be lo:hi:step");
  const double lo = parts[0], hi = parts[1], step = parts[2];
  if (!(step > 0.0)) throw UsageError("grid: step must be positive");
  if (!(hi >= lo)) throw UsageError("grid: hi must not be below lo");
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= count; ++i) grid.push_back(lo + static_cast<double>(i) * step);
  return grid;
}

std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv("SEED")) {
    try {
      std::size_t used = 0;
      const std::string text(env);
      const auto value = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return value;
    } catch (const std::logic_error&) {
      throw UsageError("SEED must be a nonnegative integer");
    }
  }
  return std::nullopt;
}

SortedSample read_data(const std::string& path) { return SortedSample(load_sample_file(path)); }

Kernel make_kernel(const std::string& name) {
  switch (parse_kernel_family(name)) {
    case KernelFamily::triweight: return Kernel::triweight();
    case KernelFamily::epanechnikov: return Kernel::epanechnikov();
    default: throw UsageError("kernel '" + name + "' is not available from the command line");
  }
}

CiMethod method_for(const std::string& estimator, const std::string& ci) {
  const Estimator e = parse_estimator(estimator);
  if (ci == "chernoff") {
    if (e != Estimator::grenander) throw UsageError("--ci chernoff requires --method grenander");
    return CiMethod::grenander_chernoff;
  }
  if (ci == "bootstrap") {
    if (e == Estimator::sg) return CiMethod::bootstrap_sg;
    if (e == Estimator::smle) return CiMethod::bootstrap_smle;
    throw UsageError("--ci bootstrap requires --method sg or smle");
  }
  if (ci == "asymptotic") {
    if (e == Estimator::sg) return CiMethod::asymptotic_sg;
    if (e == Estimator::smle) return CiMethod::asymptotic_smle;
    if (e == Estimator::kernel) return CiMethod::asymptotic_kernel;
    throw UsageError("--ci asymptotic requires --method sg, smle or kernel");
  }
  throw UsageError("unknown --ci '" + ci + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Common {
  unsigned threads = 0;
};

struct FitArgs {
  std::string data;
};

int run_fit(const FitArgs& a) {
  const auto sorted = read_data(a.data);
  const auto fit = fit_beta(sorted);
  std::cout << nlohmann::json(fit).dump() << '\n';
  if (!fit.converged) {
    std::cerr << "error: " << fit.reason << '\n';
    return exit_numeric;
  }
  return exit_ok;
}

struct EstimateArgs {
  std::string data;
  std::string method = "sg";
  std::string grid;
  std::string kernel = "triweight";
  std::string bandwidth = "auto";
  std::string boundary = "none";
  std::string diagram = "observations";
};

int run_estimate(const EstimateArgs& a) {
  const auto grid = parse_grid(a.grid);
  const Estimator e = parse_estimator(a.method);
  const Kernel kernel = make_kernel(a.kernel);
  const auto boundary = parse_boundary_policy(a.boundary);
  const auto support = parse_diagram_support(a.diagram);
  const auto sorted = read_data(a.data);
  double b = 0.0;
  if (a.bandwidth == "auto") {
    b = default_bandwidth(sorted.size());
  } else {
    try {
      b = std::stod(a.bandwidth);
    } catch (const std::logic_error&) {
      throw UsageError("--bandwidth must be 'auto' or a positive number");
    }
    if (!(b > 0.0)) throw UsageError("--bandwidth must be positive");
  }
  const KernelSpec spec(kernel, b, boundary);
  HazardEstimates est(sorted, estimate_beta(sorted), support);
  const Interval dom = est.domain(e);
  for (double x : grid)
    if (x < dom.lo || x > dom.hi) {
      std::ostringstream msg;
      msg << "grid point x = " << x << " outside the estimator domain [" << dom.lo << ", " << dom.hi << "]";
      throw UsageError(msg.str());
    }
  std::ostringstream out;
  out.precision(12);
  out << "x,value\n";
  for (double x : grid) out << x << ',' << est.at(e, spec, x) << '\n';
  std::cout << out.str();
  return exit_ok;
}

struct CiArgs {
  std::string data;
  std::string method;
  std::string ci;
  double x0 = 0.5;
  double level = 0.95;
  double c = 1.0;
  std::size_t B = 1000;
  double exponent = 0.2;
  std::optional<std::uint64_t> seed;
  std::string kernel = "triweight";
  std::string boundary = "none";
};

CiConfig make_config(double level, double c, std::size_t B, double exponent, const std::string& kernel,
                     const std::string& boundary, unsigned threads) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  CiConfig cfg;
  cfg.alpha = 1.0 - level;
  cfg.c = c;
  cfg.kernel = make_kernel(kernel);
  cfg.boundary = parse_boundary_policy(boundary);
  cfg.bootstrap.replicates = B;
  cfg.bootstrap.resample_bandwidth = {1.0, 0.2};
  cfg.bootstrap.estimate_bandwidth = {1.0, exponent};
  cfg.bootstrap.threads = threads;
  return cfg;
}

int run_ci(const CiArgs& a, const Common& common) {
  const CiMethod method = method_for(a.method, a.ci);
  auto cfg = make_config(a.level, a.c, a.B, a.exponent, a.kernel, a.boundary, common.threads);
  if (is_bootstrap(method)) {
    const auto seed = resolve_seed(a.seed);
    if (!seed) throw UsageError("bootstrap intervals need --seed or the SEED environment variable");
    cfg.bootstrap.seed = *seed;
  }
  const auto sorted = read_data(a.data);
  auto r = compute_interval(sorted, method, a.x0, cfg);
  if (is_bootstrap(method)) r.meta["seed"] = cfg.bootstrap.seed;
  std::cout << nlohmann::json(r).dump() << '\n';
  return exit_ok;
}

struct SimulateArgs {
  std::string scenario;
  std::string method;
  std::string ci;
  std::size_t replications = 1000;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string json_out;
  std::optional<std::size_t> n;
  double level = 0.95;
  double c = 1.0;
  std::size_t B = 1000;
  double exponent = 0.2;
  bool true_beta = false;
  std::string kernel = "triweight";
  std::string boundary = "none";
};

int run_simulate(const SimulateArgs& a, const Common& common) {
  const auto seed = resolve_seed(a.seed);
  if (!seed) throw UsageError("simulate needs --seed or the SEED environment variable");
  if (a.replications < 1) throw UsageError("--replications must be at least 1");
  Scenario s;
  {
    std::ifstream in(a.scenario);
    if (!in) throw UsageError("cannot open scenario file '" + a.scenario + "'");
    try {
      s = nlohmann::json::parse(in).get<Scenario>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("scenario: ") + e.what());
    }
  }
  if (a.n) {
    s.n = *a.n;
    s.validate();
  }
  std::vector<CiMethod> methods;
  for (const auto& m : split_list(a.method)) methods.push_back(method_for(m, a.ci));
  if (methods.empty()) throw UsageError("--method is empty");
  auto cfg = make_config(a.level, a.c, a.B, a.exponent, a.kernel, a.boundary, 1);
  cfg.true_beta = a.true_beta;

  const auto reports = run_coverage_study(s, methods, cfg, a.replications, *seed, common.threads);

  std::ofstream csv(a.out);
  if (!csv) throw UsageError("cannot write '" + a.out + "'");
  write_table_csv(csv, reports);
  const std::string json_path = a.json_out.empty() ? a.out + ".json" : a.json_out;
  std::ofstream js(json_path);
  if (!js) throw UsageError("cannot write '" + json_path + "'");
  js << nlohmann::json(reports).dump(2) << '\n';

  for (const auto& r : reports)
    std::cout << to_string(r.method) << " n=" << r.scenario.n << " replications=" << r.replications
              << " AL=" << r.average_length << " CP=" << r.coverage << " failures=" << r.failures << '\n';
  return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothed isotonic estimation of the baseline hazard in the Cox model"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Partial-likelihood estimate of beta");
  fit_cmd->add_option("--data", fit.data, "CSV with columns time,event,z1,...")->required();

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Baseline hazard on a grid, CSV (x,value)");
  est_cmd->add_option("--data", est.data)->required();
  est_cmd->add_option("--method", est.method)->check(CLI::IsMember({"grenander", "mle", "sg", "smle", "kernel"}));
  est_cmd->add_option("--grid", est.grid, "lo:hi:step")->required();
  est_cmd->add_option("--kernel", est.kernel)->check(CLI::IsMember({"triweight", "epanechnikov"}));
  est_cmd->add_option("--bandwidth", est.bandwidth, "auto or a positive number");
  est_cmd->add_option("--boundary", est.boundary)->check(CLI::IsMember({"none", "linear"}));
  est_cmd->add_option("--diagram", est.diagram)->check(CLI::IsMember({"observations", "events"}));

  CiArgs ci;
  auto* ci_cmd = app.add_subcommand("ci", "Pointwise confidence interval, JSON");
  ci_cmd->add_option("--data", ci.data)->required();
  ci_cmd->add_option("--method", ci.method)->required()->check(CLI::IsMember({"grenander", "mle", "sg", "smle", "kernel"}));
  ci_cmd->add_option("--ci", ci.ci)->required()->check(CLI::IsMember({"asymptotic", "chernoff", "bootstrap"}));
  ci_cmd->add_option("--x0", ci.x0);
  ci_cmd->add_option("--level", ci.level);
  ci_cmd->add_option("--c", ci.c, "Bandwidth constant for asymptotic intervals, b = c n^{-1/4}");
  ci_cmd->add_option("--B", ci.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
  ci_cmd->add_option("--bootstrap-exponent", ci.exponent, "Bootstrap estimates use b = n^{-exponent}");
  ci_cmd->add_option("--seed", ci.seed);
  ci_cmd->add_option("--kernel", ci.kernel)->check(CLI::IsMember({"triweight", "epanechnikov"}));
  ci_cmd->add_option("--boundary", ci.boundary)->check(CLI::IsMember({"none", "linear"}));

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage study");
  sim_cmd->add_option("--scenario", sim.scenario)->required();
  sim_cmd->add_option("--method", sim.method, "Estimator or comma-separated list")->required();
  sim_cmd->add_option("--ci", sim.ci)->required()->check(CLI::IsMember({"asymptotic", "chernoff", "bootstrap"}));
  sim_cmd->add_option("--replications", sim.replications);
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--out", sim.out, "Report CSV")->required();
  sim_cmd->add_option("--json", sim.json_out, "Report JSON (default: <out>.json)");
  sim_cmd->add_option("--n", sim.n, "Override the scenario sample size");
  sim_cmd->add_option("--level", sim.level);
  sim_cmd->add_option("--c", sim.c);
  sim_cmd->add_option("--B", sim.B)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--bootstrap-exponent", sim.exponent);
  sim_cmd->add_flag("--true-beta", sim.true_beta, "Use beta0 instead of the partial-likelihood estimate");
  sim_cmd->add_option("--kernel", sim.kernel)->check(CLI::IsMember({"triweight", "epanechnikov"}));
  sim_cmd->add_option("--boundary", sim.boundary)->check(CLI::IsMember({"none", "linear"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*est_cmd) return run_estimate(est);
    if (*ci_cmd) return run_ci(ci, common);
    if (*sim_cmd) return run_simulate(sim, common);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const NoEventsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numeric;
  }
  return exit_usage;
}
