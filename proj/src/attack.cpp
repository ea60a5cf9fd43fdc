#include "loadrobust/attack.hpp"

#include <cmath>

#include <fmt/format.h>

#include "loadrobust/errors.hpp"
#include "loadrobust/rng.hpp"

namespace loadrobust {

void AttackConfig::validate() const {
  if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0.0)) {
    throw ConfigError("snr_db must be a number (use +inf or no attack for identity)");
  }
}

double signal_power(std::span<const double> window) {
  if (window.empty()) throw EmptyInputError("signal_power of an empty window");
  double sum = 0.0;
  for (double v : window) sum += v * v;
  return sum / static_cast<double>(window.size());
}

double noise_sigma(double power, double snr_db) {
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

std::vector<double> inject_noise(std::span<const double> window, const AttackConfig& config) {
  config.validate();
  const double power = signal_power(window);
  std::vector<double> out(window.begin(), window.end());
  if (std::isinf(config.snr_db)) return out;
  if (power == 0.0) throw ZeroSignalError("cannot set an SNR against a zero-power window");

  const double sigma = noise_sigma(power, config.snr_db);
  CounterRng rng(config.seed);
  for (double& v : out) v += sigma * rng.gaussian();
  return out;
}

std::uint64_t window_noise_seed(std::uint64_t root_seed, std::size_t index, double snr_db) {
  return derive_seed(root_seed, {static_cast<std::uint64_t>(index), seed_key(snr_db)});
}

std::uint64_t step_noise_seed(std::uint64_t root_seed, std::size_t step) {
  return derive_seed(root_seed, {static_cast<std::uint64_t>(step)});
}

double measure_snr(std::span<const double> clean, std::span<const double> noisy) {
  if (clean.size() != noisy.size()) {
    throw ShapeError(fmt::format("measure_snr on lengths {} and {}", clean.size(), noisy.size()));
  }
  if (clean.empty()) throw EmptyInputError("measure_snr of empty windows");
  double noise = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    const double d = noisy[k] - clean[k];
    noise += d * d;
  }
  if (noise == 0.0) throw InfiniteSnrError("noisy window equals the clean window");
  noise /= static_cast<double>(clean.size());
  return 10.0 * std::log10(signal_power(clean) / noise);
}

}  // namespace loadrobust
