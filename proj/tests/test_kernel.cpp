#include <doctest.h>

#include <algorithm>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "helpers.hpp"
#include "isohaz/isotonic.hpp"
#include "isohaz/kernel.hpp"

using namespace isohaz;
using boost::math::quadrature::gauss;
using testing::rec;

namespace {

template <class F>
double integrate(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  return gauss<double, 20>::integrate(f, a, b);
}

MonotoneHazard random_hazard(std::mt19937_64& g, double lo, double hi, std::size_t pieces) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> cuts;
  for (std::size_t i = 0; i + 1 < pieces; ++i) cuts.push_back(lo + (hi - lo) * u(g));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(hi);
  std::vector<double> levels;
  double level = u(g);
  for (std::size_t i = 0; i < cuts.size(); ++i) levels.push_back(level += u(g));
  return {lo, cuts, levels, Provenance::diagram};
}

// Integral of the (possibly corrected) kernel against the hazard; Gauss-Legendre is exact piecewise.
double quadrature_smooth(const MonotoneHazard& h, const KernelSpec& spec, double x) {
  const double b = spec.bandwidth;
  CorrectedKernelWeights w;
  if (spec.boundary == BoundaryPolicy::linear) w = boundary_weights(spec, x, {h.lower(), h.upper()});
  const double lo = std::max(x - b, h.lower()), hi = std::min(x + b, h.upper());
  double total = 0.0;
  for (std::size_t i = 0; i < h.levels().size(); ++i) {
    const double a = std::max(lo, h.segment_start(i)), c = std::min(hi, h.breakpoints()[i]);
    total += h.levels()[i] * integrate(
                                 [&](double u) {
                                   const double t = (u - x) / b;
                                   return (w.alpha + w.beta_coef * t) * spec.kernel(-t) / b;
                                 },
                                 a, c);
  }
  return total;
}

} // namespace

TEST_CASE("kernel values and moments") {
  const auto k = Kernel::triweight();
  CHECK(k(0.0) == doctest::Approx(1.09375));
  CHECK(k(1.0) == 0.0);
  CHECK(k(-1.0) == 0.0);
  CHECK(k(1.5) == 0.0);
  CHECK(k.square_integral() == doctest::Approx(350.0 / 429.0).epsilon(1e-14));
  CHECK(k.moment(2, -1, 1) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK(k.moment(0, -1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(k.moment(1, -1, 1)) < 1e-15);
  CHECK(k.moment(0, -3, 3) == doctest::Approx(1.0));
  CHECK(k.family() == KernelFamily::triweight);

  const auto e = Kernel::epanechnikov();
  CHECK(e(0.0) == doctest::Approx(0.75));
  CHECK(e.moment(0, -1, 1) == doctest::Approx(1.0));
  CHECK(e.square_integral() == doctest::Approx(0.6));

  KernelSpec spec(k, 0.3);
  CHECK(kernel_eval(spec, 0.0) == k(0.0));
  CHECK(kernel_antiderivative(spec, 0.2) == k.antiderivative(0.2));
  CHECK_THROWS(KernelSpec(k, 0.0));
  CHECK_THROWS(KernelSpec(k, -1.0));
  CHECK(KernelSpec::order == 2);
}

TEST_CASE("custom kernels are validated") {
  auto uniform = Kernel::custom({0.5});
  CHECK(uniform(0.3) == 0.5);
  CHECK(uniform.antiderivative(0.0) == doctest::Approx(0.5));
  CHECK_THROWS(Kernel::custom({1.0}));
  CHECK_THROWS(Kernel::custom({0.5, 0.3}));
}

TEST_CASE("kernel antiderivative") {
  for (const auto& k : {Kernel::triweight(), Kernel::epanechnikov()}) {
    CHECK(k.antiderivative(-1.0) == 0.0);
    CHECK(k.antiderivative(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(k.antiderivative(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(k.antiderivative(-2.0) == 0.0);
    CHECK(k.antiderivative(2.0) == 1.0);
    // Simpson on a 1e-3 grid
    double acc = 0.0;
    const double h = 1e-3;
    for (int i = 0; i < 2000; i += 2) {
      const double a = -1.0 + i * h;
      acc += h / 3.0 * (k(a) + 4 * k(a + h) + k(a + 2 * h));
      CHECK(k.antiderivative(a + 2 * h) == doctest::Approx(acc).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("boundary weights") {
  for (const auto& k : {Kernel::triweight(), Kernel::epanechnikov()}) {
    KernelSpec spec(k, 0.3, BoundaryPolicy::linear);
    auto interior = boundary_weights(spec, 0.5, {0.0, 1.0});
    CHECK(interior.alpha == 1.0);
    CHECK(interior.beta_coef == 0.0);

    for (double x : {0.0, 0.05, 0.1, 0.2, 0.29, 0.71, 0.8, 0.9, 1.0}) {
      auto w = boundary_weights(spec, x, {0.0, 1.0});
      const auto [lo, hi] = w.effective_support;
      const double m0 = integrate([&](double t) { return (w.alpha + w.beta_coef * t) * k(-t); }, lo, hi);
      const double m1 = integrate([&](double t) { return t * (w.alpha + w.beta_coef * t) * k(-t); }, lo, hi);
      CHECK(m0 == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(std::abs(m1) < 1e-10);
    }
    auto at_lo = boundary_weights(spec, 0.0, {0.0, 1.0});
    CHECK(at_lo.effective_support.lo == 0.0);
    CHECK(at_lo.effective_support.hi == 1.0);
    auto at_hi = boundary_weights(spec, 1.0, {0.0, 1.0});
    CHECK(at_hi.alpha == doctest::Approx(at_lo.alpha));
    CHECK(at_hi.beta_coef == doctest::Approx(-at_lo.beta_coef));
    CHECK_THROWS(boundary_weights(spec, 1.5, {0.0, 1.0}));
    CHECK_THROWS(boundary_weights(KernelSpec(k, 0.6, BoundaryPolicy::linear), 0.5, {0.0, 1.0}));
  }
}

TEST_CASE("smooth_monotone examples") {
  MonotoneHazard flat(0.0, {2.0}, {1.7}, Provenance::diagram);
  KernelSpec spec(Kernel::triweight(), 0.5);
  CHECK(smooth_monotone(flat, spec, 1.0) == doctest::Approx(1.7));

  MonotoneHazard two(0.0, {1.0, 2.0}, {1.0, 2.0}, Provenance::diagram);
  CHECK(smooth_monotone(two, spec, 1.0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_THROWS_AS(smooth_monotone(two, spec, 2.5), std::out_of_range);
  CHECK_THROWS_AS(smooth_monotone(two, spec, -0.1), std::out_of_range);
}

TEST_CASE("exact convolution equals quadrature and the telescoping sum") {
  std::mt19937_64 g(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto h = random_hazard(g, 0.0, 2.0, 2 + rep % 15);
    for (const auto& k : {Kernel::triweight(), Kernel::epanechnikov()}) {
      for (auto policy : {BoundaryPolicy::none, BoundaryPolicy::linear}) {
        KernelSpec spec(k, 0.1 + 0.8 * u(g), policy);
        for (int i = 0; i < 10; ++i) {
          const double x = 2.0 * u(g);
          const double exact = smooth_monotone(h, spec, x);
          CHECK(exact == doctest::Approx(quadrature_smooth(h, spec, x)).epsilon(1e-9).scale(1.0));
          if (policy == BoundaryPolicy::none) {
            double tele = 0.0;
            const double b = spec.bandwidth;
            for (std::size_t s = 0; s < h.levels().size(); ++s) {
              const double r = std::clamp((x - h.segment_start(s)) / b, -1.0, 1.0);
              const double l = std::clamp((x - h.breakpoints()[s]) / b, -1.0, 1.0);
              tele += h.levels()[s] * (k.antiderivative(r) - k.antiderivative(l));
            }
            CHECK(exact == doctest::Approx(tele).epsilon(1e-12).scale(1.0));
          }
        }
      }
    }
  }
}

TEST_CASE("smoothed monotone estimators stay monotone in the interior") {
  std::mt19937_64 g(43);
  for (int rep = 0; rep < 50; ++rep) {
    const auto h = random_hazard(g, 0.0, 1.0, 2 + rep % 30);
    for (const auto& k : {Kernel::triweight(), Kernel::epanechnikov()}) {
      KernelSpec spec(k, 0.05 + 0.004 * rep);
      const double b = spec.bandwidth;
      double last = -1.0;
      for (int i = 0; i <= 400; ++i) {
        const double x = b + (1.0 - 2 * b) * i / 400.0;
        const double v = smooth_monotone(h, spec, x);
        CHECK(v >= last - 1e-12);
        last = v;
      }
    }
  }
}

TEST_CASE("boundary correction reproduces constants everywhere") {
  MonotoneHazard flat(0.0, {1.0}, {2.5}, Provenance::diagram);
  for (const auto& k : {Kernel::triweight(), Kernel::epanechnikov()}) {
    KernelSpec spec(k, 0.3, BoundaryPolicy::linear);
    for (int i = 0; i <= 100; ++i) CHECK(smooth_monotone(flat, spec, i / 100.0) == doctest::Approx(2.5).epsilon(1e-9));
    // linear functions too, as a consequence of the first-moment condition
    std::vector<double> bps, lv;
    for (int i = 1; i <= 2000; ++i) {
      bps.push_back(i / 2000.0);
      lv.push_back((i - 0.5) / 2000.0);
    }
    MonotoneHazard ramp(0.0, bps, lv, Provenance::diagram);
    for (double x : {0.0, 0.1, 0.5, 0.95, 1.0}) CHECK(smooth_monotone(ramp, spec, x) == doctest::Approx(x).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("naive kernel estimator") {
  KernelSpec spec(Kernel::triweight(), 0.4);
  StepFunction point({1.0}, {1.0});
  CHECK(naive_kernel_estimator(point, spec, 1.0) == doctest::Approx(Kernel::triweight()(0.0) / 0.4));
  CHECK(naive_kernel_estimator(point, spec, 1.5) == 0.0);
  CHECK(naive_kernel_estimator(point, spec, 0.5) == 0.0);

  std::mt19937_64 g(47);
  for (int rep = 0; rep < 30; ++rep) {
    auto s = testing::random_sample(g, 40, 0);
    std::vector<Record> uncensored;
    for (const auto& r : s.base().records()) uncensored.push_back(rec(r.time, true));
    SortedSample full{SurvivalSample(uncensored)};
    const auto L = breslow(full, Vector{});
    for (double x = 0.2; x < 2.0; x += 0.1) {
      double classical = 0.0;
      for (std::size_t i = 0; i < full.size(); ++i)
        classical += spec.kernel((x - full.time(i)) / 0.4) / 0.4 / static_cast<double>(full.size() - i);
      CHECK(naive_kernel_estimator(L, spec, x) == doctest::Approx(classical).epsilon(1e-12).scale(1.0));
    }
    const auto Ls = breslow(s, Vector{});
    for (double x = 0.2; x < 2.0; x += 0.1) {
      double direct = 0.0;
      for (std::size_t j = 0; j < Ls.knots().size(); ++j)
        direct += spec.kernel((x - Ls.knots()[j]) / 0.4) / 0.4 *
                  (Ls.values()[j] - (j == 0 ? 0.0 : Ls.values()[j - 1]));
      CHECK(naive_kernel_estimator(Ls, spec, x) == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("smoothed breslow") {
  KernelSpec spec(Kernel::triweight(), 0.2);
  StepFunction constant({0.0}, {3.0});
  CHECK(smoothed_breslow(constant, spec, 0.5) == doctest::Approx(3.0));

  std::vector<double> k, v;
  const double step = 1e-4;
  for (int i = 1; i <= 20000; ++i) {
    k.push_back(i * step);
    v.push_back(i * step);
  }
  StepFunction dense(k, v);
  for (double x : {0.3, 0.7, 1.1, 1.6}) CHECK(std::abs(smoothed_breslow(dense, spec, x) - x) <= step);

  std::mt19937_64 g(53);
  for (int rep = 0; rep < 20; ++rep) {
    auto s = testing::random_sample(g, 60, 1);
    const auto L = breslow(s, Vector::Constant(1, 0.4));
    KernelSpec sp(Kernel::triweight(), 0.3);
    double last = -1.0;
    for (double x = 0.3; x <= s.max_time() - 0.3; x += 0.01) {
      const double val = smoothed_breslow(L, sp, x);
      CHECK(val >= last - 1e-12);
      last = val;
      std::vector<double> cuts{x - 0.3};
      for (double k : L.knots())
        if (k > x - 0.3 && k < x + 0.3) cuts.push_back(k);
      cuts.push_back(x + 0.3);
      double quad = 0.0;
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
        quad += integrate([&](double u) { return sp.kernel((x - u) / 0.3) / 0.3 * L(u); }, cuts[c], cuts[c + 1]);
      CHECK(val == doctest::Approx(quad).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("default bandwidths") {
  CHECK(default_bandwidth(100) == doctest::Approx(std::pow(100.0, -0.2)));
  CHECK(undersmoothing_bandwidth(625, 2.0) == doctest::Approx(2.0 / 5.0));
  CHECK(parse_boundary_policy("linear") == BoundaryPolicy::linear);
  CHECK(parse_kernel_family("epanechnikov") == KernelFamily::epanechnikov);
  CHECK_THROWS(parse_boundary_policy("reflect"));
  CHECK(to_string(BoundaryPolicy::none) == "none");
}
