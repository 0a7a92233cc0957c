#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace isohaz {

/// Raised for malformed or inconsistent input data.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Record {
  double time = 0.0;
  bool event = false;
  std::vector<double> covariates;
};

/// Right-censored regression sample: (follow-up time, event indicator, covariates).
class SurvivalSample {
public:
  SurvivalSample() = default;
  explicit SurvivalSample(std::vector<Record> records);

  std::size_t size() const { return records_.size(); }
  std::size_t dimension() const { return dim_; }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<Record>& records() const { return records_; }

  std::size_t event_count() const;

private:
  std::vector<Record> records_;
  std::size_t dim_ = 0;
};

/// Parses "time,event,z1,...,zp" CSV. Row indices in errors are 1-based data rows.
SurvivalSample load_sample(std::istream& in);
SurvivalSample load_sample_file(const std::string& path);

/// A sample viewed in ascending time order. Within a tie group events come
/// first, then original index ascending.
class SortedSample {
public:
  explicit SortedSample(SurvivalSample base);

  std::size_t size() const { return times_.size(); }
  std::size_t dimension() const { return base_.dimension(); }
  const SurvivalSample& base() const { return base_; }
  /// order()[k] is the original index of the k-th smallest record.
  const std::vector<std::size_t>& order() const { return order_; }

  std::span<const double> times() const { return times_; }
  double time(std::size_t k) const { return times_[k]; }
  bool event(std::size_t k) const { return events_[k] != 0; }
  std::span<const double> covariates(std::size_t k) const {
    return {covs_.data() + k * dimension(), dimension()};
  }
  double min_time() const { return times_.front(); }
  double max_time() const { return times_.back(); }
  std::size_t event_count() const { return base_.event_count(); }

private:
  SurvivalSample base_;
  std::vector<std::size_t> order_;
  std::vector<double> times_;
  std::vector<char> events_;
  std::vector<double> covs_;
};

SortedSample sort_sample(SurvivalSample sample);

/// Right-continuous piecewise-constant function.
class StepFunction {
public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<double> values, double before = 0.0);

  double operator()(double x) const;
  /// Left limit f(x-).
  double left_limit(double x) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double before() const { return before_; }
  bool empty() const { return knots_.empty(); }

private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double before_ = 0.0;
};

/// Exact integral of f over [a, b].
double step_integral(const StepFunction& f, double a, double b);

void to_json(nlohmann::json& j, const StepFunction& f);
void from_json(const nlohmann::json& j, StepFunction& f);

struct Atom {
  double time;
  double mass;
};

/// Kaplan-Meier estimate of the censoring survival function with a
/// discrete sampling distribution whose masses sum to one.
struct CensoringSurvival {
  StepFunction curve;
  std::vector<Atom> atoms;

  /// Inverse-cdf draw from the atoms given u in [0, 1).
  double quantile(double u) const;
};

CensoringSurvival kaplan_meier_censoring(const SortedSample& sorted);

} // namespace isohaz
