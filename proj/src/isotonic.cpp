#include "isohaz/isotonic.hpp"

#include <limits>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isohaz {

StepFunction breslow(const SortedSample& sorted, const Vector& beta) {
  const auto phi = phi_n_at_times(sorted, beta);
  const double n = static_cast<double>(sorted.size());
  std::vector<double> knots, values;
  double total = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (!sorted.event(k)) continue;
    total += 1.0 / (n * phi[k]);
    const double t = sorted.time(k);
    if (!knots.empty() && knots.back() == t) {
      values.back() = total;
    } else {
      knots.push_back(t);
      values.push_back(total);
    }
  }
  return {std::move(knots), std::move(values), 0.0};
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::grenander: return "grenander";
    case Provenance::mle: return "mle";
    case Provenance::diagram: break;
  }
  return "diagram";
}

DiagramSupport parse_diagram_support(std::string_view name) {
  if (name == "observations") return DiagramSupport::observations;
  if (name == "events") return DiagramSupport::events;
  throw std::invalid_argument("unknown diagram support '" + std::string(name) + "'");
}

std::string_view to_string(DiagramSupport s) {
  return s == DiagramSupport::observations ? "observations" : "events";
}

MonotoneHazard::MonotoneHazard(double lower, std::vector<double> breakpoints,
                               std::vector<double> levels, Provenance provenance)
    : lower_(lower), breakpoints_(std::move(breakpoints)), levels_(std::move(levels)),
      provenance_(provenance) {
  if (breakpoints_.empty() || breakpoints_.size() != levels_.size())
    throw std::invalid_argument("MonotoneHazard: need one level per breakpoint");
  double prev = lower_;
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > prev))
      throw std::invalid_argument("MonotoneHazard: breakpoints must increase");
    prev = breakpoints_[i];
    if (i > 0 && levels_[i] < levels_[i - 1])
      throw std::invalid_argument("MonotoneHazard: levels must be nondecreasing");
  }
}

std::size_t MonotoneHazard::segment(double x) const {
  if (x < lower_ || x > upper())
    throw std::out_of_range("MonotoneHazard: x outside [" + std::to_string(lower_) + ", " +
                            std::to_string(upper()) + "]");
  return static_cast<std::size_t>(std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x) -
                                  breakpoints_.begin());
}

double MonotoneHazard::operator()(double x) const { return levels_[segment(x)]; }

void to_json(nlohmann::json& j, const MonotoneHazard& h) {
  j = nlohmann::json{{"breakpoints", h.breakpoints()},
                     {"levels", h.levels()},
                     {"domain", {h.lower(), h.upper()}}};
}

MonotoneHazard gcm_left_slopes(const CumSumDiagram& diagram) {
  const auto& pts = diagram.points;
  if (pts.size() < 2) throw std::invalid_argument("gcm_left_slopes: need at least two points");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].x > pts[i - 1].x))
      throw std::invalid_argument("gcm_left_slopes: duplicate or decreasing x at point " +
                                  std::to_string(i));

  // Lower hull: pop the top while it lies on or above the chord from its
  // predecessor to the incoming point.
  std::vector<DiagramPoint> hull;
  hull.reserve(pts.size());
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double lhs = (b.y - a.y) * (p.x - b.x);
      const double rhs = (p.y - b.y) * (b.x - a.x);
      if (lhs >= rhs - 1e-12 * (std::abs(lhs) + std::abs(rhs)))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }

  std::vector<double> breakpoints, levels;
  breakpoints.reserve(hull.size() - 1);
  levels.reserve(hull.size() - 1);
  for (std::size_t i = 1; i < hull.size(); ++i) {
    double slope = (hull[i].y - hull[i - 1].y) / (hull[i].x - hull[i - 1].x);
    if (!levels.empty()) slope = std::max(slope, levels.back());
    breakpoints.push_back(hull[i].x);
    levels.push_back(slope);
  }
  return {pts.front().x, std::move(breakpoints), std::move(levels), Provenance::diagram};
}

CumSumDiagram grenander_diagram(const SortedSample& sorted, const StepFunction& cumhaz,
                                DiagramSupport support) {
  CumSumDiagram d;
  d.points.push_back({0.0, 0.0});
  if (support == DiagramSupport::observations) {
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      const double t = sorted.time(k);
      if (t > d.points.back().x) d.points.push_back({t, cumhaz(t)});
    }
    return d;
  }
  const auto& knots = cumhaz.knots();
  for (std::size_t i = 0; i < knots.size(); ++i)
    if (knots[i] > 0.0) d.points.push_back({knots[i], cumhaz.values()[i]});
  const double last = sorted.max_time();
  if (last > d.points.back().x) d.points.push_back({last, cumhaz(last)});
  return d;
}

MonotoneHazard grenander(const SortedSample& sorted, const StepFunction& cumhaz,
                         DiagramSupport support) {
  if (cumhaz.empty()) throw NoEventsError();
  const auto diagram = grenander_diagram(sorted, cumhaz, support);
  if (diagram.points.size() < 2)
    throw DataError("grenander: all observed times are zero");
  auto g = gcm_left_slopes(diagram);
  return {g.lower(), g.breakpoints(), g.levels(), Provenance::grenander};
}

MonotoneHazard grenander(const SortedSample& sorted, const Vector& beta, DiagramSupport support) {
  if (sorted.event_count() == 0) throw NoEventsError();
  return grenander(sorted, breslow(sorted, beta), support);
}

CumSumDiagram mle_diagram(const SortedSample& sorted, const Vector& beta) {
  const std::size_t n = sorted.size();
  if (n < 2) throw std::invalid_argument("mle_diagram: n >= 2 required");
  const auto phi = phi_n_at_times(sorted, beta);
  const double inv_n = 1.0 / static_cast<double>(n);

  CumSumDiagram d;
  d.points.push_back({0.0, 0.0});
  double w = 0.0;
  double v = 0.0;
  std::size_t events_before = 0;  // events with T_i < current time
  std::size_t k = 0;
  // Advance through tie groups; a group at time t contributes the point
  // (W_n(t), V_n(t)) once.
  while (k < n) {
    const double t = sorted.time(k);
    if (k > 0) {
      w += (t - sorted.time(k - 1)) * phi[k];
      v = static_cast<double>(events_before) * inv_n;
      d.points.push_back({w, v});
    }
    std::size_t j = k;
    for (; j < n && sorted.time(j) == t; ++j)
      if (sorted.event(j)) ++events_before;
    k = j;
  }
  if (d.points.size() < 2) throw DataError("mle_diagram: degenerate diagram, all times equal");
  return d;
}

MonotoneHazard mle_baseline(const SortedSample& sorted, const Vector& beta) {
  if (sorted.event_count() == 0) throw NoEventsError();
  const auto diagram = mle_diagram(sorted, beta);
  const auto slopes = gcm_left_slopes(diagram);

  // Point P_j (j >= 1) corresponds to the j-th distinct time after T_(1); the
  // hazard on (previous distinct time, that time] is the left slope at P_j.
  std::vector<double> distinct;
  for (std::size_t k = 0; k < sorted.size(); ++k)
    if (distinct.empty() || distinct.back() != sorted.time(k)) distinct.push_back(sorted.time(k));

  std::vector<double> breakpoints, levels;
  for (std::size_t j = 1; j < diagram.points.size(); ++j) {
    const double level = slopes(diagram.points[j].x);
    if (!levels.empty() && levels.back() == level) {
      breakpoints.back() = distinct[j];
    } else {
      breakpoints.push_back(distinct[j]);
      levels.push_back(level);
    }
  }
  return {distinct.front(), std::move(breakpoints), std::move(levels), Provenance::mle};
}

double inverse_process(const CumSumDiagram& diagram, double a) {
  if (a < 0.0) throw std::invalid_argument("inverse_process: a must be nonnegative");
  double best = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (const auto& p : diagram.points) {
    best = std::min(best, p.y - a * p.x);
    scale = std::max(scale, std::abs(p.y) + a * std::abs(p.x));
  }
  // values within rounding of the minimum count as ties
  const double tol = 1e-12 * scale;
  double best_x = 0.0;
  for (const auto& p : diagram.points)
    if (p.y - a * p.x <= best + tol) best_x = std::max(best_x, p.x);
  return best_x;
}

double inverse_process(const SortedSample& sorted, const Vector& beta, double a, DiagramSupport support) {
  return inverse_process(grenander_diagram(sorted, breslow(sorted, beta), support), a);
}

} // namespace isohaz
