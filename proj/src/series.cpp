#include "loadrobust/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <optional>

#include "loadrobust/errors.hpp"
#include "loadrobust/rng.hpp"

namespace loadrobust {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) return std::nullopt;
  return value;
}

}  // namespace

LoadSeries::LoadSeries(std::int64_t start_epoch, std::vector<double> values)
    : start_epoch_(start_epoch), values_(std::move(values)) {
  if (values_.empty()) throw EmptyInputError("load series has no samples");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InputError(fmt::format("non-finite load at index {}", i));
    }
  }
}

LoadSeries LoadSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > values_.size() || count == 0) {
    throw InsufficientDataError(begin + std::max<std::size_t>(count, 1),
                                values_.size());
  }
  return LoadSeries(timestamp(begin),
                    std::vector<double>(values_.begin() + begin,
                                        values_.begin() + begin + count));
}

void SyntheticSpec::validate() const {
  if (duration_days == 0) throw EmptySpecError("duration_days must be positive");
  if (!(weekly_mod_frac >= 0.0 && weekly_mod_frac < 1.0)) {
    throw ConfigError("weekly_mod_frac must lie in [0, 1)");
  }
  if (!(process_noise_sigma_mw >= 0.0)) {
    throw ConfigError("process_noise_sigma_mw must be >= 0");
  }
  if (!std::isfinite(base_mw) || !std::isfinite(daily_amp_mw) ||
      !std::isfinite(halfday_amp_mw) || !std::isfinite(process_noise_sigma_mw)) {
    throw ConfigError("synthetic spec fields must be finite");
  }
}

LoadSeries ingest_csv(std::string_view text) {
  std::vector<double> values;
  std::int64_t start = 0;
  std::int64_t previous = 0;
  std::size_t row = 0;
  bool first_line = true;

  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    line = trim(line);
    if (line.empty()) continue;

    const auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      if (first_line) throw ParseError("expected `epoch_seconds,load_mw` columns");
      throw ParseError(fmt::format("missing comma at row {}", row));
    }
    const auto stamp = parse_number<std::int64_t>(line.substr(0, comma));
    if (first_line) {
      first_line = false;
      if (!stamp) continue;  // header
    }
    if (!stamp) throw ParseError(fmt::format("bad timestamp at row {}", row));
    const auto load = parse_number<double>(line.substr(comma + 1));
    if (!load || !std::isfinite(*load)) {
      throw ParseError(fmt::format("bad load value at row {}", row));
    }
    if (row == 0) {
      start = *stamp;
    } else if (*stamp - previous != kSampleIntervalSeconds) {
      throw SpacingError(row);
    }
    previous = *stamp;
    values.push_back(*load);
    ++row;
  }
  if (values.empty()) throw EmptyInputError("CSV contains no data rows");
  return LoadSeries(start, std::move(values));
}

std::string to_csv(const LoadSeries& series) {
  std::string out = "timestamp,load_mw\n";
  out.reserve(series.size() * 32);
  for (std::size_t i = 0; i < series.size(); ++i) {
    fmt::format_to(std::back_inserter(out), "{},{:.17g}\n", series.timestamp(i),
                   series[i]);
  }
  return out;
}

LoadSeries generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = spec.duration_days *
                        static_cast<std::size_t>(kSecondsPerDay) /
                        kSampleIntervalSeconds;
  CounterRng rng(seed);
  std::vector<double> values(n);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t t = 0; t < n; ++t) {
    const double seconds = static_cast<double>(t) * kSampleIntervalSeconds;
    const double day_phase = two_pi * seconds / kSecondsPerDay;
    const double shape = spec.base_mw + spec.daily_amp_mw * std::sin(day_phase) +
                         spec.halfday_amp_mw * std::sin(2.0 * day_phase + kHalfdayPhase);
    const double weekly =
        1.0 + spec.weekly_mod_frac * std::sin(two_pi * seconds / kSecondsPerWeek);
    double value = shape * weekly;
    if (spec.process_noise_sigma_mw > 0.0) {
      value += rng.gaussian(0.0, spec.process_noise_sigma_mw);
    }
    values[t] = value;
  }
  return LoadSeries(0, std::move(values));
}

std::size_t window_count(std::size_t length, std::size_t stride) {
  if (stride == 0) throw ConfigError("stride must be positive");
  if (length < kWindowSpan) return 0;
  return (length - kWindowSpan) / stride + 1;
}

std::vector<WindowPair> make_windows(const LoadSeries& series, std::size_t stride) {
  if (stride == 0) throw ConfigError("stride must be positive");
  if (series.size() < kWindowSpan) {
    throw InsufficientDataError(kWindowSpan, series.size());
  }
  const auto values = series.values();
  const std::size_t count = window_count(series.size(), stride);
  std::vector<WindowPair> windows;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t origin = w * stride;
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(origin);
    const auto split = first + kInputLength;
    windows.push_back(WindowPair{std::vector<double>(first, split),
                                 std::vector<double>(split, split + kHorizon),
                                 origin});
  }
  return windows;
}

SeriesSplit split_chronological(const LoadSeries& series, double train_frac,
                                double validation_frac) {
  if (!(train_frac > 0.0) || !(validation_frac >= 0.0) ||
      train_frac + validation_frac >= 1.0) {
    throw ConfigError("split fractions must be positive and sum below 1");
  }
  const std::size_t n = series.size();
  const auto n_train = static_cast<std::size_t>(std::floor(n * train_frac));
  const auto n_val = static_cast<std::size_t>(std::floor(n * validation_frac));
  const std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0) {
    throw InsufficientDataError(3, n);
  }
  return SeriesSplit{series.slice(0, n_train), series.slice(n_train, n_val),
                     series.slice(n_train + n_val, n_test)};
}

Scaler::Scaler(double min_mw, double max_mw) : min_mw_(min_mw), max_mw_(max_mw) {
  if (!(max_mw > min_mw) || !std::isfinite(min_mw) || !std::isfinite(max_mw)) {
    throw DegenerateScaleError("scaler requires finite max_mw > min_mw");
  }
}

std::vector<double> Scaler::apply(std::span<const double> mw) const {
  std::vector<double> out(mw.size());
  std::transform(mw.begin(), mw.end(), out.begin(),
                 [this](double v) { return apply(v); });
  return out;
}

std::vector<double> Scaler::invert(std::span<const double> scaled) const {
  std::vector<double> out(scaled.size());
  std::transform(scaled.begin(), scaled.end(), out.begin(),
                 [this](double v) { return invert(v); });
  return out;
}

Scaler fit_scaler(std::span<const double> samples) {
  if (samples.empty()) throw EmptyInputError("cannot fit scaler on no samples");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return Scaler(*lo, *hi);
}

Scaler fit_scaler(std::span<const WindowPair> train_windows) {
  if (train_windows.empty()) throw InsufficientDataError(1, 0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& w : train_windows) {
    for (double v : w.input) lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : w.target) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  return Scaler(lo, hi);
}

}  // namespace loadrobust
