#include <doctest.h>

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "ddimlab/schedule.hpp"

using namespace ddimlab;

namespace {

void check_invariants(const NoiseSchedule& s) {
  CHECK(s.alpha.size() == static_cast<std::size_t>(s.T) + 1);
  CHECK(s.alpha[0] <= 1.0);
  CHECK(s.alpha.back() > 0.0);
  for (int t = 0; t < s.T; ++t) {
    CHECK(s.alpha[static_cast<std::size_t>(t)] > s.alpha[static_cast<std::size_t>(t) + 1]);
  }
  for (int t = 0; t <= s.T; t += std::max(1, s.T / 7)) {
    const auto [sr, nr] = s.rates_at(t);
    CHECK(sr * sr + nr * nr == doctest::Approx(1.0).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("all four kinds satisfy the schedule invariants at several T") {
  for (int T : {10, 50, 1000}) {
    for (ScheduleKind k :
         {ScheduleKind::Linear, ScheduleKind::Quadratic, ScheduleKind::Cosine, ScheduleKind::ContinuousCosine}) {
      check_invariants(make_schedule(k, T));
    }
  }
}

TEST_CASE("continuous-cosine endpoints are pinned by the signal rates") {
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 1000);
  CHECK(s.alpha[0] == 1.0);
  CHECK(s.alpha.back() == 0.02 * 0.02);
  CHECK(s.alpha.back() == doctest::Approx(4e-4).epsilon(1e-12));
  CHECK(s.alpha.back() <= 0.02 * 0.02 + 1e-9);

  const auto [sr0, nr0] = s.rates_at(0);
  CHECK(sr0 == 1.0);
  CHECK(nr0 == 0.0);

  // signal rates stay inside [min_signal, max_signal] away from the clamp
  for (int t = 1; t <= s.T; ++t) {
    const auto [sr, nr] = s.rates_at(t);
    CHECK(sr >= 0.02 - 1e-12);
    CHECK(sr <= 0.95 + 1e-12);
    CHECK(nr >= std::sqrt(1.0 - 0.95 * 0.95) - 1e-12);
    CHECK(nr <= std::sqrt(1.0 - 0.02 * 0.02) + 1e-12);
  }
}

TEST_CASE("rates at a quarter alpha") {
  const NoiseSchedule s = make_schedule(ScheduleKind::ContinuousCosine, 10);
  // find the algebra directly: alpha = 0.25 gives (0.5, sqrt(0.75))
  const double a = 0.25;
  CHECK(std::sqrt(a) == doctest::Approx(0.5));
  CHECK(std::sqrt(1.0 - a) == doctest::Approx(0.8660254037844386).epsilon(1e-12));
  (void)s;
}

TEST_CASE("linear schedule matches an independent product oracle") {
  const int T = 1000;
  const NoiseSchedule s = make_schedule(ScheduleKind::Linear, T);
  // recompute the product directly
  double prod = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double beta = 1e-4 + (0.02 - 1e-4) * static_cast<double>(t - 1) / static_cast<double>(T - 1);
    prod *= 1.0 - beta;
    CHECK(s.alpha_at(t) == doctest::Approx(prod).epsilon(1e-14));
  }
  CHECK(prod < 1e-4);  // essentially destroyed at t = T
}

TEST_CASE("cosine midpoint lies strictly between the endpoints") {
  const NoiseSchedule s = make_schedule(ScheduleKind::Cosine, 1000);
  const double mid = s.alpha_at(500);
  CHECK(mid < s.alpha_at(0));
  CHECK(mid > s.alpha_at(1000));
  // closed form at the midpoint, normalized by alpha_bar(0)
  const double x = ((0.5 + 0.008) / 1.008) * std::numbers::pi / 2.0;
  const double x0 = (0.008 / 1.008) * std::numbers::pi / 2.0;
  CHECK(mid == doctest::Approx(std::cos(x) * std::cos(x) / (std::cos(x0) * std::cos(x0))).epsilon(1e-12));
}

TEST_CASE("out-of-range parameters are rejected with a diagnostic") {
  ScheduleParams p;
  p.beta_max = 1.5;
  CHECK_THROWS_AS(make_schedule(ScheduleKind::Linear, 100, p), std::invalid_argument);
  ScheduleParams q;
  q.min_signal = 0.99;
  q.max_signal = 0.95;
  CHECK_THROWS_AS(make_schedule(ScheduleKind::ContinuousCosine, 100, q), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(ScheduleKind::Linear, 1), std::invalid_argument);
}

TEST_CASE("rates_at rejects out-of-range t") {
  const NoiseSchedule s = make_schedule(ScheduleKind::Linear, 10);
  CHECK_THROWS_AS(s.rates_at(-1), std::out_of_range);
  CHECK_THROWS_AS(s.rates_at(11), std::out_of_range);
}

TEST_CASE("subsequence is uniform with endpoints included") {
  const NoiseSchedule s10 = make_schedule(ScheduleKind::Linear, 10);
  const std::vector<int> half = subsequence(s10, 2);
  CHECK(half == std::vector<int>{0, 5, 10});

  const std::vector<int> ident = subsequence(s10, 10);
  for (int j = 0; j <= 10; ++j) CHECK(ident[static_cast<std::size_t>(j)] == j);

  const NoiseSchedule s1000 = make_schedule(ScheduleKind::Linear, 1000);
  const std::vector<int> sub = subsequence(s1000, 25);
  CHECK(sub.size() == 26);
  CHECK(sub.front() == 0);
  CHECK(sub.back() == 1000);
  int gmin = 1 << 30, gmax = 0;
  for (std::size_t j = 1; j < sub.size(); ++j) {
    const int gap = sub[j] - sub[j - 1];
    CHECK(gap > 0);
    gmin = std::min(gmin, gap);
    gmax = std::max(gmax, gap);
  }
  CHECK(gmax - gmin <= 1);

  // non-divisible case, checked by enumeration
  const NoiseSchedule s97 = make_schedule(ScheduleKind::Linear, 97);
  const std::vector<int> odd = subsequence(s97, 7);
  CHECK(odd.front() == 0);
  CHECK(odd.back() == 97);
  for (std::size_t j = 1; j < odd.size(); ++j) {
    const int gap = odd[j] - odd[j - 1];
    CHECK(gap >= 97 / 7);
    CHECK(gap <= 97 / 7 + 1);
  }

  CHECK_THROWS_AS(subsequence(s10, 1), std::invalid_argument);
  CHECK_THROWS_AS(subsequence(s10, 11), std::invalid_argument);
}

TEST_CASE("cosine family changes alpha more gently than linear or quadratic") {
  // Largest per-step drop over the plotted curve (the t=0 clamp of the
  // continuous schedule excluded), at the T the beta range is designed for.
  const auto max_gap = [](const NoiseSchedule& s) {
    double g = 0.0;
    for (int t = 1; t < s.T; ++t) {
      g = std::max(g, s.alpha_at(t) - s.alpha_at(t + 1));
    }
    return g;
  };
  const int T = 1000;
  const double lin = max_gap(make_schedule(ScheduleKind::Linear, T));
  const double quad = max_gap(make_schedule(ScheduleKind::Quadratic, T));
  const double cos = max_gap(make_schedule(ScheduleKind::Cosine, T));
  const double ccos = max_gap(make_schedule(ScheduleKind::ContinuousCosine, T));
  CHECK(cos < lin);
  CHECK(cos < quad);
  CHECK(ccos < lin);
  CHECK(ccos < quad);
}

TEST_CASE("continuous alpha interpolates the table kinds and the angle kind") {
  const NoiseSchedule lin = make_schedule(ScheduleKind::Linear, 100);
  CHECK(lin.alpha_continuous(0.0) == lin.alpha_at(0));
  CHECK(lin.alpha_continuous(1.0) == doctest::Approx(lin.alpha_at(100)).epsilon(1e-12));
  CHECK(lin.alpha_continuous(0.505) < lin.alpha_continuous(0.495));

  const NoiseSchedule ccos = make_schedule(ScheduleKind::ContinuousCosine, 100);
  CHECK(ccos.alpha_continuous(0.0) == doctest::Approx(0.95 * 0.95).epsilon(1e-12));
  CHECK(ccos.alpha_continuous(1.0) == doctest::Approx(0.02 * 0.02).epsilon(1e-12));
}
