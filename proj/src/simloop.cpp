#include "loadrobust/simloop.hpp"

#include <cmath>
#include <iterator>

#include <fmt/format.h>
#include <json.hpp>

#include "loadrobust/errors.hpp"
#include "loadrobust/metrics.hpp"

namespace loadrobust {

void SimConfig::validate(std::size_t series_length) const {
  if (start_index < kInputLength) {
    throw ConfigError(fmt::format("start_index {} leaves less than {} samples of history",
                                  start_index, kInputLength));
  }
  if (start_index + kHorizon * steps > series_length) {
    throw ConfigError(fmt::format("{} steps from index {} need {} samples, series has {}", steps,
                                  start_index, start_index + kHorizon * steps, series_length));
  }
  if (attack) attack->validate();
  if (filter) filter->validate();
}

SimState initial_state(const LoadSeries& series, std::size_t start_index) {
  if (start_index < kInputLength || start_index > series.size()) {
    throw ConfigError(fmt::format("invalid start_index {}", start_index));
  }
  const auto values = series.values();
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(start_index - kInputLength);
  return SimState{std::vector<double>(first, first + kInputLength), start_index, 0};
}

StepRecord step(SimState& state, const ModelParams& model, const LoadSeries& series,
                const std::optional<AttackConfig>& attack,
                const std::optional<FilterSpec>& filter) {
  if (state.buffer.size() != kInputLength) {
    throw ConfigError(fmt::format("simulation buffer holds {} samples, expected {}",
                                  state.buffer.size(), kInputLength));
  }
  if (state.next_index + kHorizon > series.size()) {
    throw EndOfDataError(fmt::format("step {} needs samples up to index {}, series ends at {}",
                                     state.step_index, state.next_index + kHorizon,
                                     series.size()));
  }

  std::vector<double> view = state.buffer;
  if (attack) {
    view = inject_noise(view, {attack->snr_db, step_noise_seed(attack->seed, state.step_index)});
  }
  if (filter) view = lowpass(view, *filter).samples;

  StepRecord record;
  record.step_index = state.step_index;
  record.first_index = state.next_index;
  record.prediction = predict_mw(model, view);
  const auto values = series.values();
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(state.next_index);
  record.actual.assign(first, first + kHorizon);
  record.input_was_attacked = attack.has_value();
  record.input_was_filtered = filter.has_value();
  record.step_mae = sae(record.prediction, record.actual) / static_cast<double>(kHorizon);

  state.buffer.erase(state.buffer.begin(), state.buffer.begin() + kHorizon);
  state.buffer.insert(state.buffer.end(), record.actual.begin(), record.actual.end());
  state.next_index += kHorizon;
  ++state.step_index;
  return record;
}

SimTrace run(const SimConfig& config, const ModelParams& model, const LoadSeries& series) {
  config.validate(series.size());
  if (model.input_length != kInputLength ||
      static_cast<std::size_t>(model.dense_b.size()) != kHorizon) {
    throw ConfigError("simulation needs a model with the 1152 -> 60 window shape");
  }
  SimTrace trace;
  SimState state = initial_state(series, config.start_index);
  double total = 0.0;
  for (std::size_t s = 0; s < config.steps; ++s) {
    trace.steps.push_back(step(state, model, series, config.attack, config.filter));
    for (std::size_t t = 0; t < kHorizon; ++t) {
      total += std::abs(trace.steps.back().prediction[t] - trace.steps.back().actual[t]);
    }
  }
  if (!trace.steps.empty()) {
    trace.overall_mae_mw = total / static_cast<double>(trace.steps.size() * kHorizon);
  }
  return trace;
}

std::string trace_to_csv(const SimTrace& trace) {
  std::string out = "step,sample,prediction_mw,actual_mw\n";
  for (const auto& record : trace.steps) {
    for (std::size_t t = 0; t < record.prediction.size(); ++t) {
      fmt::format_to(std::back_inserter(out), "{},{},{:.17g},{:.17g}\n", record.step_index, t,
                     record.prediction[t], record.actual[t]);
    }
  }
  return out;
}

std::string trace_summary_json(const SimTrace& trace, const SimConfig& config) {
  using json = nlohmann::ordered_json;
  json j;
  j["steps"] = trace.steps.size();
  j["overall_mae_mw"] = trace.overall_mae_mw ? json(*trace.overall_mae_mw) : json(nullptr);
  if (config.attack) {
    j["attack"] = {{"snr_db", config.attack->snr_db}, {"seed", config.attack->seed}};
  } else {
    j["attack"] = nullptr;
  }
  if (config.filter) {
    j["filter"] = {{"cutoff_hz", config.filter->cutoff_hz}};
  } else {
    j["filter"] = nullptr;
  }
  j["start_index"] = config.start_index;
  return j.dump(2) + "\n";
}

}  // namespace loadrobust
