#include "isohaz/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isohaz {

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "triweight") return KernelFamily::triweight;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

BoundaryPolicy parse_boundary_policy(std::string_view name) {
  if (name == "none") return BoundaryPolicy::none;
  if (name == "linear") return BoundaryPolicy::linear;
  throw std::invalid_argument("unknown boundary policy '" + std::string(name) + "'");
}

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::triweight: return "triweight";
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::custom: break;
  }
  return "custom";
}

std::string_view to_string(BoundaryPolicy p) {
  return p == BoundaryPolicy::linear ? "linear" : "none";
}

Kernel::Kernel(KernelFamily family, std::vector<double> coefficients)
    : family_(family), coef_(std::move(coefficients)) {
  // Coefficients of u -> integral of s^r k(s) ds from 0 to u, for r = 0, 1, 2.
  for (std::size_t r = 0; r < primitives_.size(); ++r) {
    auto& prim = primitives_[r];
    prim.assign(coef_.size() + r + 1, 0.0);
    for (std::size_t i = 0; i < coef_.size(); ++i)
      prim[i + r + 1] = coef_[i] / static_cast<double>(i + r + 1);
  }
}

Kernel Kernel::triweight() {
  constexpr double c = 35.0 / 32.0;
  return {KernelFamily::triweight, {c, 0.0, -3.0 * c, 0.0, 3.0 * c, 0.0, -c}};
}

Kernel Kernel::epanechnikov() { return {KernelFamily::epanechnikov, {0.75, 0.0, -0.75}}; }

Kernel Kernel::custom(std::vector<double> coefficients) {
  if (coefficients.empty()) throw std::invalid_argument("custom kernel: no coefficients");
  Kernel k(KernelFamily::custom, std::move(coefficients));
  if (std::abs(k.moment(0, -1.0, 1.0) - 1.0) > 1e-10)
    throw std::invalid_argument("custom kernel must integrate to 1 on [-1,1]");
  if (std::abs(k.moment(1, -1.0, 1.0)) > 1e-10)
    throw std::invalid_argument("custom kernel must have zero first moment");
  return k;
}

namespace {

double horner(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * u + *it;
  return v;
}

} // namespace

double Kernel::primitive(int r, double u) const {
  if (r >= 0 && r < static_cast<int>(primitives_.size()))
    return horner(primitives_[static_cast<std::size_t>(r)], u);
  double total = 0.0;
  for (std::size_t i = 0; i < coef_.size(); ++i) {
    const int p = static_cast<int>(i) + r + 1;
    total += coef_[i] * std::pow(u, p) / p;
  }
  return total;
}

double Kernel::moment(int r, double a, double b) const {
  if (a > b) return -moment(r, b, a);
  a = std::clamp(a, -1.0, 1.0);
  b = std::clamp(b, -1.0, 1.0);
  if (a >= b) return 0.0;
  return primitive(r, b) - primitive(r, a);
}

double Kernel::operator()(double u) const {
  if (u < -1.0 || u > 1.0) return 0.0;
  return horner(coef_, u);
}

double Kernel::antiderivative(double u) const { return moment(0, -1.0, u); }

double Kernel::square_integral() const {
  std::vector<double> sq(2 * coef_.size() - 1, 0.0);
  for (std::size_t i = 0; i < coef_.size(); ++i)
    for (std::size_t j = 0; j < coef_.size(); ++j) sq[i + j] += coef_[i] * coef_[j];
  double total = 0.0;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const int p = static_cast<int>(i) + 1;
    total += sq[i] * (1.0 - std::pow(-1.0, p)) / p;
  }
  return total;
}

KernelSpec::KernelSpec(Kernel k, double b, BoundaryPolicy policy)
    : kernel(std::move(k)), bandwidth(b), boundary(policy) {
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("bandwidth must be positive");
}

double kernel_eval(const KernelSpec& spec, double u) { return spec.kernel(u); }
double kernel_antiderivative(const KernelSpec& spec, double u) { return spec.kernel.antiderivative(u); }

namespace {

// Integral of t^r k(-t) over [lo, hi].
double reflected_moment(const Kernel& k, int r, double lo, double hi) {
  const double m = k.moment(r, -hi, -lo);
  return (r % 2 == 0) ? m : -m;
}

} // namespace

CorrectedKernelWeights boundary_weights(const KernelSpec& spec, double x, Interval domain) {
  const double b = spec.bandwidth;
  if (x < domain.lo || x > domain.hi)
    throw std::out_of_range("boundary_weights: x outside domain");
  if (b > 0.5 * (domain.hi - domain.lo))
    throw std::invalid_argument("boundary_weights: bandwidth exceeds half the domain length");
  CorrectedKernelWeights w;
  w.effective_support = {std::max(-1.0, (domain.lo - x) / b), std::min(1.0, (domain.hi - x) / b)};
  if (w.effective_support.lo <= -1.0 && w.effective_support.hi >= 1.0) return w;

  const auto [lo, hi] = w.effective_support;
  const double m0 = reflected_moment(spec.kernel, 0, lo, hi);
  const double m1 = reflected_moment(spec.kernel, 1, lo, hi);
  const double m2 = reflected_moment(spec.kernel, 2, lo, hi);
  const double det = m0 * m2 - m1 * m1;
  if (!(std::abs(det) > 1e-14 * std::max(1.0, m0 * m2)))
    throw std::runtime_error("boundary_weights: singular moment matrix");
  w.alpha = m2 / det;
  w.beta_coef = -m1 / det;
  return w;
}

double smooth_monotone(const MonotoneHazard& hazard, const KernelSpec& spec, double x) {
  const double lo = hazard.lower();
  const double hi = hazard.upper();
  if (x < lo || x > hi)
    throw std::out_of_range("smooth_monotone: x = " + std::to_string(x) + " outside [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const double b = spec.bandwidth;
  CorrectedKernelWeights w;
  if (spec.boundary == BoundaryPolicy::linear) w = boundary_weights(spec, x, {lo, hi});

  const double wlo = std::max(x - b, lo);
  const double whi = std::min(x + b, hi);
  const auto& bps = hazard.breakpoints();
  const auto& levels = hazard.levels();
  double total = 0.0;
  for (std::size_t i = hazard.segment(wlo); i < bps.size(); ++i) {
    const double ua = std::max(hazard.segment_start(i), wlo);
    const double ub = std::min(bps[i], whi);
    if (ua < ub) {
      const double ta = (ua - x) / b;
      const double tb = (ub - x) / b;
      double mass = w.alpha * reflected_moment(spec.kernel, 0, ta, tb);
      if (w.beta_coef != 0.0) mass += w.beta_coef * reflected_moment(spec.kernel, 1, ta, tb);
      total += levels[i] * mass;
    }
    if (bps[i] >= whi) break;
  }
  return total;
}

double naive_kernel_estimator(const StepFunction& cumhaz, const KernelSpec& spec, double x) {
  const double b = spec.bandwidth;
  const auto& knots = cumhaz.knots();
  const auto& values = cumhaz.values();
  auto first = static_cast<std::size_t>(std::lower_bound(knots.begin(), knots.end(), x - b) - knots.begin());
  double total = 0.0;
  for (std::size_t j = first; j < knots.size() && knots[j] <= x + b; ++j) {
    const double jump = values[j] - (j == 0 ? cumhaz.before() : values[j - 1]);
    total += spec.kernel((x - knots[j]) / b) * jump;
  }
  return total / b;
}

double smoothed_breslow(const StepFunction& cumhaz, const KernelSpec& spec, double x) {
  // Lambda^s(x) = Lambda(x - b) + sum over knots t_j in (x - b, x + b] of jump_j * K((x - t_j)/b).
  const double b = spec.bandwidth;
  const auto& knots = cumhaz.knots();
  const auto& values = cumhaz.values();
  auto first = static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x - b) - knots.begin());
  double total = first == 0 ? cumhaz.before() : values[first - 1];
  for (std::size_t j = first; j < knots.size() && knots[j] <= x + b; ++j) {
    const double jump = values[j] - (j == 0 ? cumhaz.before() : values[j - 1]);
    total += jump * spec.kernel.antiderivative((x - knots[j]) / b);
  }
  return total;
}

double default_bandwidth(std::size_t n) { return std::pow(static_cast<double>(n), -0.2); }

double undersmoothing_bandwidth(std::size_t n, double c) {
  return c * std::pow(static_cast<double>(n), -0.25);
}

} // namespace isohaz
