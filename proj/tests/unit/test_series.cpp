#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "loadrobust/denoise.hpp"
#include "loadrobust/errors.hpp"
#include "loadrobust/rng.hpp"
#include "loadrobust/series.hpp"

using namespace loadrobust;

namespace {

LoadSeries ramp(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
  return LoadSeries(0, std::move(v));
}

}  // namespace

TEST_CASE("ingest_csv reads rows in order") {
  const auto s = ingest_csv("0,1.0\n300,2.0\n600,3.0\n");
  CHECK(s.dt() == 300);
  CHECK(s.start_epoch() == 0);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 2.0);
  CHECK(s[2] == 3.0);
}

TEST_CASE("ingest_csv detects an optional header") {
  const auto s = ingest_csv("timestamp,load_mw\n1000,4.5\n1300,5.5\n");
  CHECK(s.start_epoch() == 1000);
  CHECK(s.size() == 2);
  CHECK(s[1] == 5.5);
}

TEST_CASE("ingest_csv rejects non-uniform spacing with the row index") {
  try {
    ingest_csv("0,1\n300,2\n900,3\n");
    FAIL("expected SpacingError");
  } catch (const SpacingError& e) {
    CHECK(e.row() == 2);
  }
}

TEST_CASE("ingest_csv rejects non-finite and malformed values") {
  CHECK_THROWS_AS(ingest_csv("0,1\n300,nan\n"), ParseError);
  CHECK_THROWS_AS(ingest_csv("0,1\n300,inf\n"), ParseError);
  CHECK_THROWS_AS(ingest_csv("0,1\n300,abc\n"), ParseError);
  CHECK_THROWS_AS(ingest_csv("0,1\n300\n"), ParseError);
  CHECK_THROWS_AS(ingest_csv("timestamp,load_mw\n"), EmptyInputError);
}

TEST_CASE("ingest_csv handles one year of five-minute rows") {
  constexpr std::size_t kYear = 365 * 86400 / 300;
  CHECK(kYear == 105120);
  std::string text;
  for (std::size_t i = 0; i < kYear; ++i) {
    text += std::to_string(i * 300) + ",1.25\n";
  }
  CHECK(ingest_csv(text).size() == kYear);
}

TEST_CASE("to_csv output re-ingests bit-exactly") {
  SyntheticSpec spec;
  spec.duration_days = 2;
  const auto s = generate_synthetic(spec, 7);
  const auto back = ingest_csv(to_csv(s));
  REQUIRE(back.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(back[i] == s[i]);
  CHECK(to_csv(s).rfind("timestamp,load_mw\n", 0) == 0);
}

TEST_CASE("generate_synthetic zero-component spec is constant") {
  SyntheticSpec spec{3.0, 0.0, 0.0, 0.0, 0.0, 2};
  const auto s = generate_synthetic(spec, 1);
  CHECK(s.size() == 576);
  for (double v : s.values()) CHECK(v == 3.0);
}

TEST_CASE("generate_synthetic is deterministic per seed") {
  SyntheticSpec spec;
  spec.duration_days = 5;
  const auto a = generate_synthetic(spec, 42);
  const auto b = generate_synthetic(spec, 42);
  const auto c = generate_synthetic(spec, 43);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.values().data(), c.values().data(), a.size() * sizeof(double)) != 0);
}

TEST_CASE("generate_synthetic default spec peaks at the daily bin") {
  const auto s = generate_synthetic(SyntheticSpec{}, 42);
  const auto window = s.values().subspan(0, kInputLength);
  const Spectrum spectrum = fft_forward(window);
  std::size_t best = 1;
  std::size_t second = 2;
  for (std::size_t k = 1; k <= kInputLength / 2; ++k) {
    const double m = std::abs(spectrum.coeffs[k]);
    if (m > std::abs(spectrum.coeffs[best])) {
      second = best;
      best = k;
    } else if (k != best && m > std::abs(spectrum.coeffs[second])) {
      second = k;
    }
  }
  CHECK(best == 4);
  CHECK(second == 8);
  CHECK(spectrum.frequency(4) == doctest::Approx(1.1574e-5).epsilon(1e-4));
}

TEST_CASE("generate_synthetic without noise or weekly modulation is day-periodic") {
  SyntheticSpec spec;
  spec.weekly_mod_frac = 0.0;
  spec.process_noise_sigma_mw = 0.0;
  spec.duration_days = 4;
  const auto s = generate_synthetic(spec, 0);
  constexpr std::size_t kDay = 288;
  for (std::size_t k = 1; k <= 3; ++k) {
    for (std::size_t t = 0; t + k * kDay < s.size(); ++t) {
      REQUIRE(s[t + k * kDay] == doctest::Approx(s[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("generate_synthetic validates its spec") {
  SyntheticSpec spec;
  spec.duration_days = 0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), EmptySpecError);
  spec.duration_days = 1;
  spec.weekly_mod_frac = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ConfigError);
  spec.weekly_mod_frac = 0.1;
  spec.process_noise_sigma_mw = -1.0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ConfigError);
}

TEST_CASE("make_windows counts and origins") {
  CHECK(make_windows(ramp(1212), 60).size() == 1);
  const auto w = make_windows(ramp(1213), 1);
  REQUIRE(w.size() == 2);
  CHECK(w[0].origin_index == 0);
  CHECK(w[1].origin_index == 1);
  CHECK(window_count(105120, 60) == 1732);
  CHECK_THROWS_AS(make_windows(ramp(1211), 60), InsufficientDataError);
  try {
    make_windows(ramp(1000), 60);
  } catch (const InsufficientDataError& e) {
    CHECK(e.needed() == 1212);
    CHECK(e.got() == 1000);
  }
}

TEST_CASE("make_windows count matches brute-force enumeration") {
  for (std::size_t len = 1212; len <= 1500; ++len) {
    const auto series = ramp(len);
    for (std::size_t stride : {1u, 7u, 60u, 113u}) {
      std::size_t brute = 0;
      for (std::size_t origin = 0; origin + 1212 <= len; origin += stride) ++brute;
      REQUIRE(window_count(len, stride) == brute);
    }
    REQUIRE(make_windows(series, 60).size() == (len - 1212) / 60 + 1);
  }
}

TEST_CASE("make_windows target follows input in the source") {
  const auto series = ramp(1500);
  for (const auto& w : make_windows(series, 37)) {
    REQUIRE(w.input.size() == kInputLength);
    REQUIRE(w.target.size() == kHorizon);
    // values equal their index in the ramp
    CHECK(w.input.front() == static_cast<double>(w.origin_index));
    CHECK(w.input.back() + 1.0 == w.target.front());
    CHECK(w.target.front() == static_cast<double>(w.origin_index + kInputLength));
  }
}

TEST_CASE("split_chronological is contiguous 70/15/15") {
  const auto series = ramp(1000);
  const auto split = split_chronological(series);
  CHECK(split.train.size() == 700);
  CHECK(split.validation.size() == 150);
  CHECK(split.test.size() == 150);
  CHECK(split.validation[0] == 700.0);
  CHECK(split.test[0] == 850.0);
  CHECK(split.test.start_epoch() == 850 * 300);
}

TEST_CASE("scaler maps min to 0 and max to 1") {
  const Scaler s = fit_scaler(std::vector<double>{2.0, 4.0});
  CHECK(s.min_mw() == 2.0);
  CHECK(s.max_mw() == 4.0);
  CHECK(s.apply(3.0) == 0.5);
  CHECK(s.apply(5.0) == 1.5);
  CHECK(s.apply(2.0) == 0.0);
  CHECK(s.apply(4.0) == 1.0);
}

TEST_CASE("scaler inverse is exact to 1e-12 relative") {
  const Scaler s(1.3, 4.7);
  CounterRng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform(-10.0, 10.0);
    const double back = s.invert(s.apply(x));
    REQUIRE(std::abs(back - x) <= 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("scaler fit uses inputs and targets of training windows") {
  WindowPair w{std::vector<double>(kInputLength, 2.0), std::vector<double>(kHorizon, 2.0), 0};
  w.target[10] = 9.0;
  w.input[3] = -1.0;
  const Scaler s = fit_scaler(std::span<const WindowPair>(&w, 1));
  CHECK(s.min_mw() == -1.0);
  CHECK(s.max_mw() == 9.0);
  WindowPair flat{std::vector<double>(kInputLength, 2.0), std::vector<double>(kHorizon, 2.0), 0};
  CHECK_THROWS_AS(fit_scaler(std::span<const WindowPair>(&flat, 1)), DegenerateScaleError);
}

TEST_CASE("counter rng streams are reproducible and seed-split") {
  CounterRng a(9), b(9);
  for (int k = 0; k < 100; ++k) REQUIRE(a.next_u64() == b.next_u64());
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) == derive_seed(1, {2}));
  CounterRng g(11);
  double sum = 0.0, sq = 0.0;
  constexpr int kN = 200000;
  for (int k = 0; k < kN; ++k) {
    const double z = g.gaussian();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / kN) < 0.01);
  CHECK(sq / kN == doctest::Approx(1.0).epsilon(0.01));
}
