#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "loadrobust/attack.hpp"
#include "loadrobust/denoise.hpp"
#include "loadrobust/errors.hpp"
#include "loadrobust/fft.hpp"
#include "loadrobust/rng.hpp"

using namespace loadrobust;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Complex> direct_dft(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j) {
      const double angle = -2.0 * kPi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += x[j] * Complex{std::cos(angle), std::sin(angle)};
    }
    out[k] = acc;
  }
  return out;
}

std::vector<double> random_real(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian(1.0, 2.0);
  return v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

std::vector<double> tones(std::size_t n, std::initializer_list<std::pair<std::size_t, double>> bins,
                          double offset = 0.0) {
  std::vector<double> v(n, offset);
  for (auto [k, amp] : bins) {
    for (std::size_t t = 0; t < n; ++t) {
      v[t] += amp * std::cos(2.0 * kPi * static_cast<double>(k * t % n) / n + 0.3 * k);
    }
  }
  return v;
}

}  // namespace

TEST_CASE("mixed-radix and Bluestein agree with a direct DFT") {
  for (std::size_t n : {1u, 2u, 8u, 60u, 97u, 1152u, 62u, 74u, 211u}) {
    const auto real = random_real(n, n);
    std::vector<Complex> x(real.begin(), real.end());
    const FftPlan plan(n);
    const auto fast = plan.forward(x);
    const auto slow = direct_dft(x);
    double scale = 0.0, err = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      scale = std::max(scale, std::abs(slow[k]));
      err = std::max(err, std::abs(fast[k] - slow[k]));
    }
    INFO("n = " << n);
    CHECK(err <= 1e-9 * scale);
  }
  CHECK(FftPlan(97).uses_bluestein());
  CHECK(!FftPlan(1152).uses_bluestein());
  CHECK(prime_factors(1152) == std::vector<std::size_t>{2, 2, 2, 2, 2, 2, 2, 3, 3});
}

TEST_CASE("round trip and Parseval") {
  for (std::size_t n : {60u, 97u, 1152u}) {
    const auto x = random_real(n, 40 + n);
    const Spectrum s = fft_forward(x);
    const auto back = fft_inverse(s);
    CHECK(max_diff(back, x) <= 1e-9 * max_abs(x));
    double time = 0.0, freq = 0.0;
    for (double v : x) time += v * v;
    for (const Complex& c : s.coeffs) freq += std::norm(c);
    CHECK(std::abs(time - freq / static_cast<double>(n)) <= 1e-9 * time);
  }
}

TEST_CASE("FFT is linear") {
  for (std::size_t n : {60u, 97u, 1152u}) {
    const auto x = random_real(n, 1);
    const auto y = random_real(n, 2);
    const double a = 1.7, b = -0.4;
    std::vector<double> combo(n);
    for (std::size_t k = 0; k < n; ++k) combo[k] = a * x[k] + b * y[k];
    const auto sx = fft_forward(x).coeffs;
    const auto sy = fft_forward(y).coeffs;
    const auto sc = fft_forward(combo).coeffs;
    double scale = 0.0, err = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      scale = std::max(scale, std::abs(sc[k]));
      err = std::max(err, std::abs(sc[k] - (a * sx[k] + b * sy[k])));
    }
    CHECK(err <= 1e-9 * scale);
  }
}

TEST_CASE("real input has a conjugate-symmetric spectrum") {
  const auto s = fft_forward(random_real(1152, 3));
  double scale = 0.0;
  for (const Complex& c : s.coeffs) scale = std::max(scale, std::abs(c));
  for (std::size_t k = 1; k < 1152; ++k) {
    REQUIRE(std::abs(s.coeffs[k] - std::conj(s.coeffs[1152 - k])) <= 1e-9 * scale);
  }
}

TEST_CASE("DC-only and single-tone spectra") {
  const auto dc = fft_forward(std::vector<double>(8, 2.5));
  CHECK(std::abs(dc.coeffs[0] - Complex{20.0, 0.0}) < 1e-12);
  for (std::size_t k = 1; k < 8; ++k) CHECK(std::abs(dc.coeffs[k]) < 1e-12);

  std::vector<double> cosine(1152);
  for (std::size_t t = 0; t < 1152; ++t) cosine[t] = std::cos(2.0 * kPi * 4.0 * t / 1152.0);
  const auto s = fft_forward(cosine);
  for (std::size_t k = 0; k < 1152; ++k) {
    if (k == 4 || k == 1148) {
      CHECK(std::abs(s.coeffs[k]) == doctest::Approx(576.0).epsilon(1e-9));
    } else {
      REQUIRE(std::abs(s.coeffs[k]) < 1e-9);
    }
  }
  CHECK_THROWS_AS(fft_forward(std::vector<double>{}), EmptyInputError);
}

TEST_CASE("bin frequencies") {
  CHECK(bin_frequency(4, 1152, 300) == doctest::Approx(1.15741e-5).epsilon(1e-5));
  CHECK(bin_frequency(8, 1152, 300) == doctest::Approx(2.31481e-5).epsilon(1e-5));
  CHECK(bin_frequency(4, 1152, 300) == 4.0 / 345600.0);
  CHECK(bin_frequency(0, 97, 300) == 0.0);
  CHECK(nyquist_hz() == doctest::Approx(1.0 / 600.0));
}

TEST_CASE("cutoff 2.5e-5 keeps bins 0..8 and their mirrors") {
  CHECK(retained_bins(1152, 2.5e-5) == 9);
  std::vector<double> impulse(1152, 0.0);
  impulse[0] = 1.0;  // flat spectrum
  const Spectrum s = fft_forward(impulse);
  const FftPlan plan(1152);
  const auto filtered = fft_forward(lowpass_spectrum(s, 2.5e-5, plan)).coeffs;
  for (std::size_t k = 0; k < 1152; ++k) {
    const bool kept = k <= 8 || k >= 1144;
    INFO("bin " << k);
    REQUIRE(std::abs(filtered[k]) == doctest::Approx(kept ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("two-tone signal passes and a bin-35 tone is removed") {
  const auto two = tones(1152, {{4, 1.0}, {8, 0.4}}, 3.0);
  const auto passed = lowpass(two, {2.5e-5});
  CHECK(!passed.passthrough);
  CHECK(max_diff(passed.samples, two) <= 1e-6 * max_abs(two));

  const auto three = tones(1152, {{4, 1.0}, {8, 0.4}, {35, 0.7}}, 3.0);
  const auto cleaned = lowpass(three, {2.5e-5}).samples;
  CHECK(max_diff(cleaned, two) <= 1e-6 * max_abs(two));
}

TEST_CASE("lowpass invariants") {
  const std::vector<double> cutoffs{2.0e-5, 2.5e-5, 4.0e-5, 1e-4};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_real(1152, 100 + seed);
    for (double f : cutoffs) {
      const auto once = lowpass(x, {f}).samples;
      const auto twice = lowpass(once, {f}).samples;
      CHECK(max_diff(once, twice) <= 1e-9 * max_abs(once));

      double mean_in = 0.0, mean_out = 0.0, e_in = 0.0, e_out = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) {
        mean_in += x[t];
        mean_out += once[t];
        e_in += x[t] * x[t];
        e_out += once[t] * once[t];
      }
      CHECK(std::abs(mean_in - mean_out) <= 1e-9 * std::abs(mean_in));
      CHECK(e_out <= e_in + 1e-9);
    }
  }
}

TEST_CASE("cutoff at or above Nyquist passes through with a flag") {
  const auto x = random_real(60, 9);
  const auto r = lowpass(x, {nyquist_hz()});
  CHECK(r.passthrough);
  CHECK(r.samples == x);
  CHECK_THROWS_AS(lowpass(x, {0.0}), ConfigError);
  CHECK_THROWS_AS(lowpass(x, {-1e-5}), ConfigError);
}

TEST_CASE("default grids") {
  const auto c = default_cutoff_candidates();
  REQUIRE(c.size() == 21);
  CHECK(c.front() == 2.0e-5);
  CHECK(c[5] == 2.5e-5);
  CHECK(c.back() == 4.0e-5);
  const auto s = default_calibration_snrs();
  REQUIRE(s.size() == 15);
  CHECK(s.front() == 6.0);
  CHECK(s.back() == 20.0);
}

TEST_CASE("grid search on two-tone windows keeps the second harmonic") {
  std::vector<std::vector<double>> corpus;
  for (int w = 0; w < 6; ++w) corpus.push_back(tones(1152, {{4, 1.0 + 0.1 * w}, {8, 0.5}}, 3.0));
  const auto cands = default_cutoff_candidates();
  const auto snrs = default_calibration_snrs();
  const auto a = grid_search_cutoff(corpus, cands, snrs, 11);
  const auto b = grid_search_cutoff(corpus, cands, snrs, 11);
  CHECK(a.best_cutoff_hz >= 2.315e-5);
  REQUIRE(a.sae_by_candidate.size() == 21);
  for (std::size_t k = 0; k < 21; ++k) {
    CHECK(a.sae_by_candidate[k].total_sae_mw == b.sae_by_candidate[k].total_sae_mw);
  }
  double best = a.sae_by_candidate[0].total_sae_mw;
  for (const auto& s : a.sae_by_candidate) best = std::min(best, s.total_sae_mw);
  for (const auto& s : a.sae_by_candidate) {
    if (s.cutoff_hz == a.best_cutoff_hz) CHECK(s.total_sae_mw == best);
    if (s.cutoff_hz < a.best_cutoff_hz) CHECK(s.total_sae_mw > best);
  }
  CHECK(a.corpus_size == 6);
  CHECK(a.snr_set_db == snrs);
}

TEST_CASE("grid search objective matches a brute-force sum") {
  std::vector<std::vector<double>> corpus;
  for (std::uint64_t w = 0; w < 3; ++w) corpus.push_back(random_real(1152, 500 + w));
  const std::vector<double> cands{2.0e-5, 3.0e-5, 1e-4};
  const std::vector<double> snrs{6.0, 13.0};
  const auto result = grid_search_cutoff(corpus, cands, snrs, 3);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    // Summed window by window, then sample, then SNR: the documented order.
    double brute = 0.0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      std::vector<std::vector<double>> rebuilt;
      for (double snr : snrs) {
        const auto noisy = inject_noise(corpus[i], {snr, window_noise_seed(3, i, snr)});
        rebuilt.push_back(lowpass(noisy, {cands[c]}).samples);
      }
      for (std::size_t t = 0; t < 1152; ++t) {
        for (const auto& r : rebuilt) brute += std::abs(corpus[i][t] - r[t]);
      }
    }
    CHECK(result.sae_by_candidate[c].total_sae_mw == brute);
  }
}

TEST_CASE("grid search edge cases") {
  const std::vector<std::vector<double>> corpus{random_real(64, 1)};
  const std::vector<double> one{3.3e-5};
  const std::vector<double> snrs{10.0};
  CHECK(grid_search_cutoff(corpus, one, snrs, 0).best_cutoff_hz == 3.3e-5);
  CHECK_THROWS_AS(grid_search_cutoff({}, one, snrs, 0), ConfigError);
  CHECK_THROWS_AS(grid_search_cutoff(corpus, {}, snrs, 0), ConfigError);
  CHECK_THROWS_AS(grid_search_cutoff(corpus, one, {}, 0), ConfigError);

  // Both cutoffs keep bins 0..19 of a 64-point window, so the scores tie.
  const auto tie = grid_search_cutoff(corpus, std::vector<double>{1.01e-3, 1.0e-3}, snrs, 0);
  CHECK(tie.sae_by_candidate[0].total_sae_mw == tie.sae_by_candidate[1].total_sae_mw);
  CHECK(tie.best_cutoff_hz == 1.0e-3);
}

TEST_CASE("CSV exports") {
  const auto s = fft_forward(random_real(97, 4));
  const std::string csv = spectrum_to_csv(s);
  CHECK(csv.rfind("bin,freq_hz,magnitude,phase\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 98);

  GridSearchResult r;
  r.sae_by_candidate = {{2e-5, 1.5}, {3e-5, 1.25}};
  CHECK(grid_search_to_csv(r) ==
        "cutoff_hz,total_sae_mw\n2.0000000000000002e-05,1.5\n3.0000000000000001e-05,1.25\n");
}
