#include "isohaz/survival.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace isohaz {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    auto first = field.find_first_not_of(" \t\r");
    auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string{}
                                                : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

std::string row_error(std::size_t row, const std::string& what) {
  return "row " + std::to_string(row) + ": " + what;
}

} // namespace

SurvivalSample::SurvivalSample(std::vector<Record> records) : records_(std::move(records)) {
  if (records_.empty()) throw DataError("sample must contain at least one record");
  dim_ = records_.front().covariates.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!std::isfinite(r.time) || r.time < 0.0)
      throw DataError(row_error(i + 1, "time must be finite and nonnegative"));
    if (r.covariates.size() != dim_)
      throw DataError(row_error(i + 1, "inconsistent covariate dimension"));
    for (double z : r.covariates)
      if (!std::isfinite(z)) throw DataError(row_error(i + 1, "non-finite covariate"));
  }
}

std::size_t SurvivalSample::event_count() const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const Record& r) { return r.event; }));
}

SurvivalSample load_sample(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line).empty())
    throw DataError("empty file: missing header row");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "time" || header[1] != "event")
    throw DataError("header must start with time,event");
  const std::size_t dim = header.size() - 2;

  std::vector<Record> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError(row_error(row, "expected " + std::to_string(header.size()) +
                                         " fields, got " + std::to_string(fields.size())));
    Record r;
    if (!parse_double(fields[0], r.time)) throw DataError(row_error(row, "malformed time"));
    if (r.time < 0.0) throw DataError(row_error(row, "negative time"));
    if (fields[1] == "1")
      r.event = true;
    else if (fields[1] == "0")
      r.event = false;
    else
      throw DataError(row_error(row, "event must be 0 or 1"));
    r.covariates.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
      if (!parse_double(fields[j + 2], r.covariates[j]))
        throw DataError(row_error(row, "malformed covariate " + header[j + 2]));
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("empty file: no data rows");
  return SurvivalSample(std::move(records));
}

SurvivalSample load_sample_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return load_sample(in);
}

SortedSample::SortedSample(SurvivalSample base) : base_(std::move(base)) {
  const std::size_t n = base_.size();
  const std::size_t p = base_.dimension();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  const auto& recs = base_.records();
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    if (recs[a].time != recs[b].time) return recs[a].time < recs[b].time;
    if (recs[a].event != recs[b].event) return recs[a].event;
    return a < b;
  });
  times_.resize(n);
  events_.resize(n);
  covs_.resize(n * p);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = recs[order_[k]];
    times_[k] = r.time;
    events_[k] = r.event ? 1 : 0;
    std::copy(r.covariates.begin(), r.covariates.end(), covs_.begin() + k * p);
  }
}

SortedSample sort_sample(SurvivalSample sample) { return SortedSample(std::move(sample)); }

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values, double before)
    : knots_(std::move(knots)), values_(std::move(values)), before_(before) {
  if (knots_.size() != values_.size())
    throw std::invalid_argument("StepFunction: knots and values differ in length");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i - 1] < knots_[i]))
      throw std::invalid_argument("StepFunction: knots must be strictly increasing");
}

double StepFunction::operator()(double x) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.begin()) return before_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::left_limit(double x) const {
  auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.begin()) return before_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double step_integral(const StepFunction& f, double a, double b) {
  if (a > b) throw std::invalid_argument("step_integral: a > b");
  if (a == b) return 0.0;
  const auto& knots = f.knots();
  double total = 0.0;
  double left = a;
  double level = f(a);
  auto it = std::upper_bound(knots.begin(), knots.end(), a);
  for (; it != knots.end() && *it < b; ++it) {
    total += level * (*it - left);
    left = *it;
    level = f.values()[static_cast<std::size_t>(it - knots.begin())];
  }
  total += level * (b - left);
  return total;
}

void to_json(nlohmann::json& j, const StepFunction& f) {
  j = nlohmann::json{{"knots", f.knots()}, {"values", f.values()}, {"before", f.before()}};
}

void from_json(const nlohmann::json& j, StepFunction& f) {
  f = StepFunction(j.at("knots").get<std::vector<double>>(),
                   j.at("values").get<std::vector<double>>(), j.value("before", 0.0));
}

double CensoringSurvival::quantile(double u) const {
  double cum = 0.0;
  for (const auto& a : atoms) {
    cum += a.mass;
    if (u < cum) return a.time;
  }
  return atoms.back().time;
}

CensoringSurvival kaplan_meier_censoring(const SortedSample& sorted) {
  const std::size_t n = sorted.size();
  std::vector<double> knots, values;
  std::vector<Atom> atoms;
  double surv = 1.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = sorted.time(k);
    const std::size_t at_risk = n - k;
    std::size_t censored = 0;
    std::size_t j = k;
    for (; j < n && sorted.time(j) == t; ++j)
      if (!sorted.event(j)) ++censored;
    if (censored > 0) {
      const double next = surv * (1.0 - static_cast<double>(censored) / static_cast<double>(at_risk));
      atoms.push_back({t, surv - next});
      surv = next;
      knots.push_back(t);
      values.push_back(surv);
    }
    k = j;
  }
  const double last = sorted.max_time();
  if (surv > 0.0) {
    if (!atoms.empty() && atoms.back().time == last)
      atoms.back().mass += surv;
    else
      atoms.push_back({last, surv});
  }
  return {StepFunction(std::move(knots), std::move(values), 1.0), std::move(atoms)};
}

} // namespace isohaz
