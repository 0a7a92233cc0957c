#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "isohaz/isotonic.hpp"
#include "isohaz/survival.hpp"

namespace isohaz {

enum class KernelFamily { triweight, epanechnikov, custom };
enum class BoundaryPolicy { none, linear };

KernelFamily parse_kernel_family(std::string_view name);
BoundaryPolicy parse_boundary_policy(std::string_view name);
std::string_view to_string(KernelFamily f);
std::string_view to_string(BoundaryPolicy p);

/// Polynomial kernel supported on [-1, 1], k(u) = sum_i c_i u^i there and 0 outside.
class Kernel {
public:
  static Kernel triweight();
  static Kernel epanechnikov();
  /// Coefficients in increasing powers. Must have unit mass and zero first moment.
  static Kernel custom(std::vector<double> coefficients);

  KernelFamily family() const { return family_; }
  const std::vector<double>& coefficients() const { return coef_; }

  double operator()(double u) const;
  /// K(u) = integral of k over [-1, u].
  double antiderivative(double u) const;
  /// Integral of u^r k(u) over [a, b] intersected with [-1, 1], exact.
  double moment(int r, double a, double b) const;
  /// Integral of k^2 over [-1, 1].
  double square_integral() const;

private:
  Kernel(KernelFamily family, std::vector<double> coefficients);
  double primitive(int r, double u) const;

  KernelFamily family_;
  std::vector<double> coef_;
  std::array<std::vector<double>, 3> primitives_;
};

/// Kernel of order 2 with bandwidth and boundary policy.
struct KernelSpec {
  Kernel kernel = Kernel::triweight();
  double bandwidth = 1.0;
  BoundaryPolicy boundary = BoundaryPolicy::none;
  static constexpr int order = 2;

  KernelSpec() = default;
  KernelSpec(Kernel k, double b, BoundaryPolicy policy = BoundaryPolicy::none);
};

double kernel_eval(const KernelSpec& spec, double u);
double kernel_antiderivative(const KernelSpec& spec, double u);

struct Interval {
  double lo;
  double hi;
};

/// Weights of the corrected kernel (alpha + beta t) k(-t), t = (u - x)/b, on
/// the part of [-1, 1] that maps into the domain.
struct CorrectedKernelWeights {
  double alpha = 1.0;
  double beta_coef = 0.0;
  Interval effective_support{-1.0, 1.0};
};

/// Solves the two-moment system (unit mass, zero first moment) on the
/// in-domain support. Interior points give (1, 0).
CorrectedKernelWeights boundary_weights(const KernelSpec& spec, double x, Interval domain);

/// Integral of k_b(x - u) h(u) over the in-domain window, exact.
double smooth_monotone(const MonotoneHazard& hazard, const KernelSpec& spec, double x);

/// Sum over jumps of k_b(x - t_j) * dLambda(t_j).
double naive_kernel_estimator(const StepFunction& cumhaz, const KernelSpec& spec, double x);

/// Integral of k_b(x - u) Lambda(u) du over the whole line (Lambda's before-value left of the first knot).
double smoothed_breslow(const StepFunction& cumhaz, const KernelSpec& spec, double x);

/// n^{-1/5}, the estimation bandwidth.
double default_bandwidth(std::size_t n);
/// c n^{-1/4}, the undersmoothing bandwidth.
double undersmoothing_bandwidth(std::size_t n, double c);

} // namespace isohaz
