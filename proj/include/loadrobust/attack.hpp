#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace loadrobust {

// SNRs below this are assumed to be caught by a plant anomaly detector and
// are not part of the evaluated attack range.
inline constexpr double kDetectableBelowDb = 6.0;

// Black-box Gaussian noise attack on the forecaster input. A missing attack is
// expressed as std::nullopt in every interface that accepts one.
struct AttackConfig {
  double snr_db = 20.0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

// Mean of squares, MW^2.
double signal_power(std::span<const double> window);

// Standard deviation of the noise that realizes `snr_db` against `power`.
double noise_sigma(double power, double snr_db);

// window + n, n ~ N(0, sigma^2) i.i.d. with sigma from the window's own power.
// snr_db == +inf leaves the window unchanged.
std::vector<double> inject_noise(std::span<const double> window, const AttackConfig& config);

inline std::vector<double> maybe_inject(std::span<const double> window,
                                        const std::optional<AttackConfig>& config) {
  if (!config) return {window.begin(), window.end()};
  return inject_noise(window, *config);
}

// Noise seed for window `index` attacked at `snr_db`:
// derive_seed(root, {index, bits(snr_db)}). Keyed by value, not position, so
// reordering an SNR list leaves every realization unchanged.
std::uint64_t window_noise_seed(std::uint64_t root_seed, std::size_t index, double snr_db);

// Noise seed for closed-loop forecast step `step`: derive_seed(root, {step}).
std::uint64_t step_noise_seed(std::uint64_t root_seed, std::size_t step);

// 10 log10(P(clean) / P(noisy - clean)).
double measure_snr(std::span<const double> clean, std::span<const double> noisy);

}  // namespace loadrobust
