#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loadrobust/denoise.hpp"
#include "loadrobust/lstm.hpp"
#include "loadrobust/series.hpp"

namespace loadrobust {

// Mean of |p - a| over every sample of every pair, MW.
double mae(std::span<const std::vector<double>> predictions,
           std::span<const std::vector<double>> actuals);

// Sum of |a - b|, MW.
double sae(std::span<const double> a, std::span<const double> b);

// 20, 13, 10, 6 dB.
std::vector<double> default_table_snrs();

struct EvalRow {
  std::optional<double> snr_db;  // nullopt: no attack
  double raw_mae_mw = 0.0;
  std::optional<double> filtered_mae_mw;

  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct EvalReport {
  static constexpr int kSchemaVersion = 1;

  std::vector<EvalRow> rows;
  double avg_raw_mae_mw = 0.0;                  // over SNR rows
  std::optional<double> avg_filtered_mae_mw;    // over SNR rows
  std::size_t corpus_size = 0;
  std::string model_id;
  std::optional<double> filter_cutoff_hz;
  bool filter_on_clean = false;

  const EvalRow* find(std::optional<double> snr_db) const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
  std::optional<FilterSpec> filter;
  std::uint64_t root_seed = 0;
  // Also run the filter on un-attacked inputs (adds a filtered value to the
  // no-attack row).
  bool filter_on_clean = false;
};

// No-attack row followed by one row per SNR in `snr_list` order. Window i at
// SNR s is attacked with window_noise_seed(root_seed, i, s); the raw and
// filtered columns share that realization.
EvalReport evaluate_matrix(const ModelParams& model, std::span<const WindowPair> test_windows,
                           std::span<const double> snr_list, const EvalOptions& options = {});

std::string model_id(const ModelParams& model);

enum class ReportFormat { kJson, kCsv };

// JSON: versioned object, see docs/report_schema.md. CSV:
// `condition,raw_mae_mw[,filtered_mae_mw]` with a final `avg` row; the
// filtered column is omitted when no row carries a filtered value.
std::string emit_report(const EvalReport& report, ReportFormat format);
EvalReport parse_report_json(std::string_view json);
// Rows and averages only; metadata fields stay default.
EvalReport parse_report_csv(std::string_view csv);

struct PlotCurve {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Long format `curve,x,y`, one row per point.
std::string emit_plot_data(std::span<const PlotCurve> curves);

}  // namespace loadrobust
