#include "loadrobust/denoise.hpp"

#include <cmath>
#include <iterator>

#include <fmt/format.h>

#include "loadrobust/attack.hpp"
#include "loadrobust/errors.hpp"
#include "loadrobust/rng.hpp"

namespace loadrobust {

double bin_frequency(std::size_t k, std::size_t n, double dt) {
  if (n == 0 || !(dt > 0.0)) throw ConfigError("bin_frequency needs n > 0 and dt > 0");
  return static_cast<double>(k) / (static_cast<double>(n) * dt);
}

double Spectrum::frequency(std::size_t k) const { return bin_frequency(k, n, dt); }

Spectrum fft_forward(std::span<const double> window, double dt) {
  if (window.empty()) throw EmptyInputError("FFT of an empty window");
  const FftPlan plan(window.size());
  std::vector<Complex> input(window.begin(), window.end());
  return Spectrum{plan.forward(input), window.size(), dt};
}

std::vector<double> fft_inverse(const Spectrum& spectrum) {
  if (spectrum.n == 0 || spectrum.coeffs.size() != spectrum.n) {
    throw EmptyInputError("spectrum has no coefficients");
  }
  const FftPlan plan(spectrum.n);
  const auto values = plan.inverse(spectrum.coeffs);
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = values[k].real();
  return out;
}

void FilterSpec::validate() const {
  if (!(cutoff_hz > 0.0) || !std::isfinite(cutoff_hz)) {
    throw ConfigError("cutoff_hz must be positive and finite");
  }
}

std::size_t retained_bins(std::size_t n, double cutoff_hz, double dt) {
  std::size_t kept = 0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    if (bin_frequency(k, n, dt) <= cutoff_hz) ++kept;
  }
  return kept;
}

std::vector<double> lowpass_spectrum(const Spectrum& spectrum, double cutoff_hz,
                                     const FftPlan& plan) {
  const std::size_t n = spectrum.n;
  if (plan.size() != n) throw ShapeError("plan length differs from spectrum length");
  std::vector<Complex> kept(spectrum.coeffs);
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t folded = std::min(k, n - k);
    if (bin_frequency(folded, n, spectrum.dt) > cutoff_hz) kept[k] = Complex{};
  }
  const auto values = plan.inverse(kept);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = values[k].real();
  return out;
}

LowpassResult lowpass(std::span<const double> window, const FilterSpec& spec, double dt) {
  spec.validate();
  if (window.empty()) throw EmptyInputError("lowpass of an empty window");
  if (spec.cutoff_hz >= nyquist_hz(dt)) {
    return {std::vector<double>(window.begin(), window.end()), true};
  }
  const FftPlan plan(window.size());
  std::vector<Complex> input(window.begin(), window.end());
  const Spectrum spectrum{plan.forward(input), window.size(), dt};
  return {lowpass_spectrum(spectrum, spec.cutoff_hz, plan), false};
}

std::vector<double> default_cutoff_candidates() {
  std::vector<double> out;
  for (int step = 20; step <= 40; ++step) out.push_back(step / 1e6);
  return out;
}

std::vector<double> default_calibration_snrs() {
  std::vector<double> out;
  for (int db = 6; db <= 20; ++db) out.push_back(db);
  return out;
}

GridSearchResult grid_search_cutoff(std::span<const std::vector<double>> corpus,
                                    std::span<const double> candidates_hz,
                                    std::span<const double> snr_set_db, std::uint64_t root_seed,
                                    double dt) {
  if (corpus.empty()) throw ConfigError("grid search needs a non-empty corpus");
  if (candidates_hz.empty()) throw ConfigError("grid search needs at least one candidate");
  if (snr_set_db.empty()) throw ConfigError("grid search needs at least one SNR");
  for (double f : candidates_hz) FilterSpec{f}.validate();
  const std::size_t n = corpus.front().size();
  for (const auto& w : corpus) {
    if (w.size() != n) throw ShapeError("corpus windows must share one length");
  }

  const FftPlan plan(n);
  std::vector<double> totals(candidates_hz.size(), 0.0);
  std::vector<Complex> buffer(n);
  const std::size_t m = snr_set_db.size();
  std::vector<std::vector<double>> noisy(m);
  std::vector<Spectrum> spectra(m);
  std::vector<std::vector<double>> rebuilt(m);

  // Accumulation order is fixed (window, then sample, then SNR) so totals are
  // bit-stable however the candidates are scheduled.
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& clean = corpus[i];
    for (std::size_t j = 0; j < m; ++j) {
      const double snr = snr_set_db[j];
      noisy[j] = inject_noise(clean, {snr, window_noise_seed(root_seed, i, snr)});
      std::copy(noisy[j].begin(), noisy[j].end(), buffer.begin());
      spectra[j] = {plan.forward(buffer), n, dt};
    }
    for (std::size_t c = 0; c < candidates_hz.size(); ++c) {
      const double f = candidates_hz[c];
      for (std::size_t j = 0; j < m; ++j) {
        rebuilt[j] = f >= nyquist_hz(dt) ? noisy[j] : lowpass_spectrum(spectra[j], f, plan);
      }
      double& total = totals[c];
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t j = 0; j < m; ++j) total += std::abs(clean[t] - rebuilt[j][t]);
      }
    }
  }

  GridSearchResult result;
  result.snr_set_db.assign(snr_set_db.begin(), snr_set_db.end());
  result.corpus_size = corpus.size();
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates_hz.size(); ++c) {
    result.sae_by_candidate.push_back({candidates_hz[c], totals[c]});
    const bool lower = totals[c] < totals[best];
    const bool tie_lower_freq = totals[c] == totals[best] && candidates_hz[c] < candidates_hz[best];
    if (lower || tie_lower_freq) best = c;
  }
  result.best_cutoff_hz = candidates_hz[best];
  return result;
}

std::string spectrum_to_csv(const Spectrum& spectrum) {
  std::string out = "bin,freq_hz,magnitude,phase\n";
  for (std::size_t k = 0; k < spectrum.coeffs.size(); ++k) {
    const Complex c = spectrum.coeffs[k];
    fmt::format_to(std::back_inserter(out), "{},{:.17g},{:.17g},{:.17g}\n", k,
                   spectrum.frequency(k), std::abs(c), std::arg(c));
  }
  return out;
}

std::string grid_search_to_csv(const GridSearchResult& result) {
  std::string out = "cutoff_hz,total_sae_mw\n";
  for (const auto& score : result.sae_by_candidate) {
    fmt::format_to(std::back_inserter(out), "{:.17g},{:.17g}\n", score.cutoff_hz,
                   score.total_sae_mw);
  }
  return out;
}

}  // namespace loadrobust
