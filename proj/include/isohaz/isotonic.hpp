#pragma once

#include <string_view>
#include <vector>

#include <json.hpp>

#include "isohaz/cox.hpp"
#include "isohaz/survival.hpp"

namespace isohaz {

/// Cumulative hazard Lambda_n(x) = sum over events T_i <= x of 1 / (n Phi_n(T_i; beta)).
/// Knots are the distinct event times.
StepFunction breslow(const SortedSample& sorted, const Vector& beta);

struct DiagramPoint {
  double x;
  double y;
};

/// Points of a cumulative sum diagram; x strictly increasing, front() is the origin P0.
struct CumSumDiagram {
  std::vector<DiagramPoint> points;
};

enum class Provenance { diagram, grenander, mle };

std::string_view to_string(Provenance p);

/// Nondecreasing, left-continuous piecewise-constant function on [lower, upper].
/// Segment i is (breakpoints[i-1], breakpoints[i]] with level levels[i]; the
/// first segment starts at lower and breakpoints.back() == upper.
class MonotoneHazard {
public:
  MonotoneHazard() = default;
  MonotoneHazard(double lower, std::vector<double> breakpoints, std::vector<double> levels,
                 Provenance provenance);

  double operator()(double x) const;
  /// Index of the segment containing x (left-continuous convention).
  std::size_t segment(double x) const;
  /// Left endpoint of segment i.
  double segment_start(std::size_t i) const { return i == 0 ? lower_ : breakpoints_[i - 1]; }

  double lower() const { return lower_; }
  double upper() const { return breakpoints_.back(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& levels() const { return levels_; }
  Provenance provenance() const { return provenance_; }

private:
  double lower_ = 0.0;
  std::vector<double> breakpoints_;
  std::vector<double> levels_;
  Provenance provenance_ = Provenance::diagram;
};

void to_json(nlohmann::json& j, const MonotoneHazard& h);

/// Left derivative of the greatest convex minorant of the diagram, computed by
/// a single stack pass. Nearly collinear vertices (relative 1e-12) are merged.
MonotoneHazard gcm_left_slopes(const CumSumDiagram& diagram);

/// Where the Breslow estimator is sampled for the Grenander diagram.
enum class DiagramSupport {
  /// (T_(i), Lambda_n(T_(i))) at every distinct observed time.
  observations,
  /// Event times only, closed at (T_(n), Lambda_n(T_(n))).
  events,
};

DiagramSupport parse_diagram_support(std::string_view name);
std::string_view to_string(DiagramSupport s);

/// Origin followed by points (t, Lambda_n(t)), t > 0, on the chosen support.
CumSumDiagram grenander_diagram(const SortedSample& sorted, const StepFunction& cumhaz,
                                DiagramSupport support = DiagramSupport::observations);

/// Grenander-type estimator: left slope of the GCM of the Breslow estimator, on [0, T_(n)].
MonotoneHazard grenander(const SortedSample& sorted, const Vector& beta,
                         DiagramSupport support = DiagramSupport::observations);
MonotoneHazard grenander(const SortedSample& sorted, const StepFunction& cumhaz,
                         DiagramSupport support = DiagramSupport::observations);

/// P0 = (0,0), Pj = (W_n(T_(j+1)), V_n(T_(j+1))). Repeated points from tied
/// times are collapsed.
CumSumDiagram mle_diagram(const SortedSample& sorted, const Vector& beta);

/// MLE of a nondecreasing baseline hazard on [T_(1), T_(n)].
MonotoneHazard mle_baseline(const SortedSample& sorted, const Vector& beta);

/// Largest minimiser of y - a x over the diagram points, i.e. of Lambda_n(x) - a x
/// over the support of the Grenander diagram (0 included).
double inverse_process(const CumSumDiagram& diagram, double a);
double inverse_process(const SortedSample& sorted, const Vector& beta, double a,
                       DiagramSupport support = DiagramSupport::observations);

} // namespace isohaz
