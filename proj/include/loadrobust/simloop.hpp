#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "loadrobust/attack.hpp"
#include "loadrobust/denoise.hpp"
#include "loadrobust/lstm.hpp"
#include "loadrobust/series.hpp"

namespace loadrobust {

// Ideal microgrid loop: the realized load is the historical series, and the
// forecaster is refreshed with 60 measured samples every five hours.
struct SimConfig {
  std::size_t steps = 0;
  std::optional<AttackConfig> attack;  // seed is the root for per-step seeds
  std::optional<FilterSpec> filter;
  std::size_t start_index = kInputLength;

  void validate(std::size_t series_length) const;
};

struct SimState {
  std::vector<double> buffer;  // last kInputLength clean measurements
  std::size_t next_index = 0;  // series index of the next unrevealed sample
  std::size_t step_index = 0;
};

struct StepRecord {
  std::size_t step_index = 0;
  std::size_t first_index = 0;   // series index of actual[0]
  std::vector<double> prediction;  // MW
  std::vector<double> actual;      // MW
  bool input_was_attacked = false;
  bool input_was_filtered = false;
  double step_mae = 0.0;
};

struct SimTrace {
  std::vector<StepRecord> steps;
  std::optional<double> overall_mae_mw;  // nullopt for an empty trace
};

// Buffer holds the kInputLength samples preceding `start_index`.
SimState initial_state(const LoadSeries& series, std::size_t start_index);

// One forecast cycle: copy the buffer, attack the copy, filter the copy,
// predict, reveal the next kHorizon samples, and roll the clean buffer.
StepRecord step(SimState& state, const ModelParams& model, const LoadSeries& series,
                const std::optional<AttackConfig>& attack,
                const std::optional<FilterSpec>& filter);

SimTrace run(const SimConfig& config, const ModelParams& model, const LoadSeries& series);

// `step,sample,prediction_mw,actual_mw`
std::string trace_to_csv(const SimTrace& trace);
// {steps, overall_mae_mw, attack, filter}
std::string trace_summary_json(const SimTrace& trace, const SimConfig& config);

}  // namespace loadrobust
