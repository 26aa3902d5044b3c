#include <cmath>
#include <vector>

#include "doctest.h"
#include "metaratio/effects.hpp"

using namespace metaratio;

namespace {

StudySummary make(ArmSummary t, ArmSummary c) { return {"s", t, c}; }

// Squared coefficient-of-variation term s^2 / (n mean^2), computed by hand.
double cv(const ArmSummary& a) { return a.sd * a.sd / (a.n * a.mean * a.mean); }

}  // namespace

TEST_CASE("identical arms give a zero effect") {
  const auto r = lrr(make({10, 2.0, 0.5}, {10, 2.0, 0.5}));
  CHECK(r.estimate == 0.0);
  CHECK(r.variance == doctest::Approx(2 * 0.25 / 40.0).epsilon(1e-15));
  CHECK_FALSE(r.corrected);
}

TEST_CASE("worked example for the usual log response ratio") {
  const auto s = make({10, 2.0, 0.5}, {10, 1.0, 0.5});
  const auto r = lrr(s);
  CHECK(r.estimate == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(r.variance == doctest::Approx(0.03125).epsilon(1e-14));
}

TEST_CASE("worked example for the bias-corrected log response ratio") {
  const auto s = make({10, 2.0, 0.5}, {10, 1.0, 0.5});
  const auto r = lrr_bias_corrected(s);
  CHECK(r.corrected);
  CHECK_FALSE(r.variance_floored);
  CHECK(r.estimate == doctest::Approx(0.683772).epsilon(1e-6));
  // Exact hand arithmetic.
  CHECK(r.estimate == doctest::Approx(std::log(2.0) + 0.5 * (0.00625 - 0.025)).epsilon(1e-14));
  CHECK(r.variance ==
        doctest::Approx(0.03125 + 0.5 * (0.00625 * 0.00625 - 0.025 * 0.025)).epsilon(1e-14));
}

TEST_CASE("plus-sign variant adds the squared terms") {
  const auto s = make({10, 2.0, 0.5}, {10, 1.0, 0.5});
  const auto r = lrr_bias_corrected(s, Eq3Sign::Plus);
  CHECK(r.variance ==
        doctest::Approx(0.03125 + 0.5 * (0.00625 * 0.00625 + 0.025 * 0.025)).epsilon(1e-14));
  CHECK(r.estimate == lrr_bias_corrected(s).estimate);
}

TEST_CASE("symmetric arms leave the corrected row equal to the usual one") {
  const auto s = make({12, 3.0, 1.1}, {12, 3.0, 1.1});
  const auto u = lrr(s);
  const auto c = lrr_bias_corrected(s);
  CHECK(c.estimate == u.estimate);
  CHECK(c.variance == u.variance);
}

TEST_CASE("non-positive corrected variance falls back to the usual variance") {
  // Search small control arms for a case where the control CV term
  // dominates enough to drive the corrected variance to zero or below.
  bool found = false;
  for (int n = 2; n <= 6 && !found; ++n) {
    for (double sd = 0.5; sd <= 6.0 && !found; sd += 0.25) {
      const auto s = make({20, 1.0, 0.1}, {n, 1.0, sd});
      const double t = cv(s.treatment), c = cv(s.control);
      if (t + c + 0.5 * (t * t - c * c) > 0) continue;
      found = true;
      const auto r = lrr_bias_corrected(s);
      CHECK(r.variance_floored);
      CHECK(r.variance == doctest::Approx(t + c).epsilon(1e-14));
      CHECK(r.variance == lrr(s).variance);
      // The plus variant never needs the floor.
      CHECK_FALSE(lrr_bias_corrected(s, Eq3Sign::Plus).variance_floored);
    }
  }
  CHECK(found);
}

TEST_CASE("swapping arms negates both estimates") {
  const auto s = make({8, 2.3, 0.7}, {15, 1.4, 0.9});
  const auto swapped = make(s.control, s.treatment);
  CHECK(lrr(swapped).estimate == doctest::Approx(-lrr(s).estimate).epsilon(1e-15));
  CHECK(lrr_bias_corrected(swapped).estimate == doctest::Approx(-lrr_bias_corrected(s).estimate).epsilon(1e-15));
  CHECK(lrr(swapped).variance == doctest::Approx(lrr(s).variance).epsilon(1e-15));
}

TEST_CASE("scaling both arms leaves the estimate unchanged") {
  const auto s = make({10, 2.0, 0.5}, {10, 1.0, 0.5});
  const auto scaled = make({10, 4.0, 1.0}, {10, 2.0, 1.0});
  CHECK(lrr(scaled).estimate == doctest::Approx(lrr(s).estimate).epsilon(1e-15));
  CHECK(lrr(scaled).variance == doctest::Approx(lrr(s).variance).epsilon(1e-15));
}

TEST_CASE("usual variance is positive when one arm varies, zero-variance studies are rejected") {
  CHECK(lrr(make({10, 2.0, 0.0}, {10, 1.0, 0.3})).variance > 0.0);
  CHECK_THROWS_AS(lrr(make({10, 2.0, 0.0}, {10, 1.0, 0.0})), Error);
  CHECK_THROWS_AS(lrr(make({10, 2.0, 0.5}, {10, -1.0, 0.3})), Error);
}

TEST_CASE("correction vanishes as samples grow") {
  auto gap = [](int n) {
    const auto s = make({n, 2.0, 1.5}, {n, 1.0, 0.9});
    return std::fabs(lrr_bias_corrected(s).estimate - lrr(s).estimate);
  };
  CHECK(gap(100000) < gap(1000));
  CHECK(gap(100000) == doctest::Approx(0.5 * std::fabs(2.25 / 4 - 0.81) / 100000).epsilon(1e-12));
}

TEST_CASE("compute_effects follows the pipeline") {
  const std::vector<StudySummary> studies{make({10, 2.0, 0.5}, {10, 1.0, 0.5}),
                                          make({6, 1.2, 0.4}, {9, 1.0, 0.6})};
  const auto usual = compute_effects(studies, Pipeline::Usual);
  const auto corr = compute_effects(studies, Pipeline::Corrected);
  REQUIRE(usual.size() == 2);
  CHECK(usual[1] == lrr(studies[1]));
  CHECK(corr[1] == lrr_bias_corrected(studies[1]));
  CHECK(compute_effects(studies, Pipeline::Corrected, Eq3Sign::Plus)[0] ==
        lrr_bias_corrected(studies[0], Eq3Sign::Plus));
}
