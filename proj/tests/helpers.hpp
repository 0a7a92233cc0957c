#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "isohaz/survival.hpp"

namespace testing {

inline isohaz::Record rec(double t, bool e, std::vector<double> z = {}) { return {t, e, std::move(z)}; }

inline isohaz::SurvivalSample sample(std::vector<isohaz::Record> r) { return isohaz::SurvivalSample(std::move(r)); }

inline isohaz::SortedSample sorted(std::vector<isohaz::Record> r) {
  return isohaz::SortedSample(isohaz::SurvivalSample(std::move(r)));
}

/// Random right-censored sample with exponential-ish times and p uniform covariates.
inline isohaz::SortedSample random_sample(std::mt19937_64& g, std::size_t n, std::size_t p,
                                          bool with_ties = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<isohaz::Record> r(n);
  for (auto& x : r) {
    for (std::size_t j = 0; j < p; ++j) x.covariates.push_back(u(g) - 0.5);
    double t = -std::log(1.0 - u(g)) + 0.01;
    if (with_ties) t = std::round(t * 10.0) / 10.0 + 0.1;
    x.time = t;
    x.event = u(g) < 0.7;
  }
  if (std::none_of(r.begin(), r.end(), [](const auto& x) { return x.event; })) r.front().event = true;
  return isohaz::SortedSample(isohaz::SurvivalSample(std::move(r)));
}

} // namespace testing
