#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loadrobust/fft.hpp"
#include "loadrobust/series.hpp"

namespace loadrobust {

// Forward DFT of a real window plus the sampling interval needed to map bins
// to physical frequencies.
struct Spectrum {
  std::vector<Complex> coeffs;
  std::size_t n = 0;
  double dt = kSampleIntervalSeconds;

  double frequency(std::size_t k) const;
};

Spectrum fft_forward(std::span<const double> window, double dt = kSampleIntervalSeconds);
// Real part of the inverse transform.
std::vector<double> fft_inverse(const Spectrum& spectrum);

// k / (n dt), Hz.
double bin_frequency(std::size_t k, std::size_t n, double dt = kSampleIntervalSeconds);

inline double nyquist_hz(double dt = kSampleIntervalSeconds) { return 1.0 / (2.0 * dt); }

struct FilterSpec {
  double cutoff_hz = 2.5e-5;

  void validate() const;
  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

struct LowpassResult {
  std::vector<double> samples;
  // Set when the cutoff is at or above Nyquist and the input was returned as is.
  bool passthrough = false;
};

// Brick-wall low-pass: keeps DC and every bin pair (k, n-k) whose frequency is
// <= cutoff, zeroes the rest, and inverse-transforms.
LowpassResult lowpass(std::span<const double> window, const FilterSpec& spec,
                      double dt = kSampleIntervalSeconds);

// Same filter on an existing spectrum, reusing a plan of matching length.
std::vector<double> lowpass_spectrum(const Spectrum& spectrum, double cutoff_hz,
                                     const FftPlan& plan);

// Number of bins k <= n/2 retained by a cutoff, DC included.
std::size_t retained_bins(std::size_t n, double cutoff_hz, double dt = kSampleIntervalSeconds);

struct CandidateScore {
  double cutoff_hz = 0.0;
  double total_sae_mw = 0.0;
};

struct GridSearchResult {
  double best_cutoff_hz = 0.0;
  std::vector<CandidateScore> sae_by_candidate;
  std::vector<double> snr_set_db;
  std::size_t corpus_size = 0;
};

// 2.0e-5, 2.1e-5, ..., 4.0e-5 Hz.
std::vector<double> default_cutoff_candidates();
// 6, 7, ..., 20 dB.
std::vector<double> default_calibration_snrs();

// For each candidate f, total SAE between every clean window and the
// low-passed attacked window, summed over SNRs (outer), windows, then samples.
// Every candidate sees the same noise realizations. Ties go to the lowest
// frequency.
GridSearchResult grid_search_cutoff(std::span<const std::vector<double>> corpus,
                                    std::span<const double> candidates_hz,
                                    std::span<const double> snr_set_db, std::uint64_t root_seed,
                                    double dt = kSampleIntervalSeconds);

// `bin,freq_hz,magnitude,phase`
std::string spectrum_to_csv(const Spectrum& spectrum);
// `cutoff_hz,total_sae_mw`
std::string grid_search_to_csv(const GridSearchResult& result);

}  // namespace loadrobust
