#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loadrobust {

// Sampling interval of every load series, seconds (5 minutes).
inline constexpr int kSampleIntervalSeconds = 300;
// Look-back window: four days of 5-minute samples.
inline constexpr std::size_t kInputLength = 1152;
// Forecast horizon: five hours of 5-minute samples.
inline constexpr std::size_t kHorizon = 60;
inline constexpr std::size_t kWindowSpan = kInputLength + kHorizon;
inline constexpr std::size_t kDefaultStride = kHorizon;

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerWeek = 7.0 * kSecondsPerDay;

// Uniformly sampled load signal in MW.
class LoadSeries {
 public:
  LoadSeries(std::int64_t start_epoch, std::vector<double> values);

  std::int64_t start_epoch() const noexcept { return start_epoch_; }
  int dt() const noexcept { return kSampleIntervalSeconds; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::int64_t timestamp(std::size_t i) const noexcept {
    return start_epoch_ + static_cast<std::int64_t>(i) * kSampleIntervalSeconds;
  }

  // Contiguous sub-range [begin, begin + count), timestamps preserved.
  LoadSeries slice(std::size_t begin, std::size_t count) const;

 private:
  std::int64_t start_epoch_;
  std::vector<double> values_;
};

struct WindowPair {
  std::vector<double> input;   // kInputLength samples
  std::vector<double> target;  // kHorizon samples
  std::size_t origin_index = 0;
};

struct SyntheticSpec {
  double base_mw = 3.0;
  double daily_amp_mw = 1.0;
  double halfday_amp_mw = 0.4;
  double weekly_mod_frac = 0.1;
  double process_noise_sigma_mw = 0.05;
  std::size_t duration_days = 365;

  void validate() const;
};

// Phase of the half-day harmonic relative to the daily one, radians.
inline constexpr double kHalfdayPhase = std::numbers::pi / 4.0;

// CSV rows `epoch_seconds,load_mw`, optional header line.
LoadSeries ingest_csv(std::string_view text);
// Emits `timestamp,load_mw` header then one row per sample, 17 significant
// digits.
std::string to_csv(const LoadSeries& series);

// values[t] = (base + daily*sin(2 pi t dt / day) + halfday*sin(4 pi t dt / day
// + phase)) * (1 + weekly*sin(2 pi t dt / week)) + N(0, sigma^2), noise drawn
// from CounterRng(seed). Starts at epoch 0.
LoadSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

std::vector<WindowPair> make_windows(const LoadSeries& series,
                                     std::size_t stride = kDefaultStride);

// Expected count of make_windows without building them.
std::size_t window_count(std::size_t length, std::size_t stride);

struct SeriesSplit {
  LoadSeries train;
  LoadSeries validation;
  LoadSeries test;
};

// Contiguous chronological split, default 70/15/15, never shuffled.
SeriesSplit split_chronological(const LoadSeries& series,
                                double train_frac = 0.70,
                                double validation_frac = 0.15);

// Min-max scaling onto [0, 1]; values outside the fitted range pass through
// linearly.
class Scaler {
 public:
  Scaler(double min_mw, double max_mw);

  double min_mw() const noexcept { return min_mw_; }
  double max_mw() const noexcept { return max_mw_; }

  double apply(double mw) const noexcept {
    return (mw - min_mw_) / (max_mw_ - min_mw_);
  }
  double invert(double scaled) const noexcept {
    return scaled * (max_mw_ - min_mw_) + min_mw_;
  }

  std::vector<double> apply(std::span<const double> mw) const;
  std::vector<double> invert(std::span<const double> scaled) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;

 private:
  double min_mw_;
  double max_mw_;
};

Scaler fit_scaler(std::span<const WindowPair> train_windows);
Scaler fit_scaler(std::span<const double> samples);

}  // namespace loadrobust
