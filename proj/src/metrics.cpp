#include "loadrobust/metrics.hpp"

#include <charconv>
#include <cmath>
#include <iterator>

#include <fmt/format.h>
#include <json.hpp>

#include "loadrobust/attack.hpp"
#include "loadrobust/errors.hpp"

namespace loadrobust {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kSchemaName = "loadrobust.eval_report";
constexpr std::string_view kNoAttack = "no-attack";
constexpr std::string_view kAverage = "avg";

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

std::string condition_label(const EvalRow& row) {
  return row.snr_db ? fmt::format("{:.17g}", *row.snr_db) : std::string(kNoAttack);
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(fmt::format("bad number '{}' on report line {}", field, line));
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

double mae(std::span<const std::vector<double>> predictions,
           std::span<const std::vector<double>> actuals) {
  if (predictions.size() != actuals.size()) {
    throw ShapeError(fmt::format("mae over {} predictions and {} actuals", predictions.size(),
                                 actuals.size()));
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != actuals[i].size()) {
      throw ShapeError(fmt::format("pair {} has lengths {} and {}", i, predictions[i].size(),
                                   actuals[i].size()));
    }
    for (std::size_t t = 0; t < predictions[i].size(); ++t) {
      sum += std::abs(predictions[i][t] - actuals[i][t]);
    }
    count += predictions[i].size();
  }
  if (count == 0) throw EmptyInputError("mae of no samples");
  return sum / static_cast<double>(count);
}

double sae(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError(fmt::format("sae on lengths {} and {}", a.size(), b.size()));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) sum += std::abs(a[t] - b[t]);
  return sum;
}

std::vector<double> default_table_snrs() { return {20.0, 13.0, 10.0, 6.0}; }

const EvalRow* EvalReport::find(std::optional<double> snr_db) const {
  for (const auto& row : rows) {
    if (row.snr_db == snr_db) return &row;
  }
  return nullptr;
}

std::string model_id(const ModelParams& model) {
  return fmt::format("{:016x}", fingerprint(model));
}

EvalReport evaluate_matrix(const ModelParams& model, std::span<const WindowPair> test_windows,
                           std::span<const double> snr_list, const EvalOptions& options) {
  if (test_windows.empty()) throw InsufficientDataError(1, 0);
  if (options.filter) options.filter->validate();
  for (double snr : snr_list) AttackConfig{snr, 0}.validate();

  std::vector<std::vector<double>> actuals;
  actuals.reserve(test_windows.size());
  for (const auto& w : test_windows) actuals.push_back(w.target);

  auto score = [&](const std::vector<std::vector<double>>& inputs) {
    return mae(predict_mw_batch(model, inputs), actuals);
  };
  auto filtered = [&](std::vector<std::vector<double>> inputs) {
    for (auto& input : inputs) input = lowpass(input, *options.filter).samples;
    return inputs;
  };

  EvalReport report;
  report.corpus_size = test_windows.size();
  report.model_id = model_id(model);
  report.filter_on_clean = options.filter.has_value() && options.filter_on_clean;
  if (options.filter) report.filter_cutoff_hz = options.filter->cutoff_hz;

  std::vector<std::vector<double>> clean;
  clean.reserve(test_windows.size());
  for (const auto& w : test_windows) clean.push_back(w.input);

  EvalRow baseline{std::nullopt, score(clean), std::nullopt};
  if (report.filter_on_clean) baseline.filtered_mae_mw = score(filtered(clean));
  report.rows.push_back(baseline);

  double raw_sum = 0.0;
  double filtered_sum = 0.0;
  for (double snr : snr_list) {
    std::vector<std::vector<double>> attacked;
    attacked.reserve(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
      attacked.push_back(
          inject_noise(clean[i], {snr, window_noise_seed(options.root_seed, i, snr)}));
    }
    EvalRow row{snr, score(attacked), std::nullopt};
    if (options.filter) row.filtered_mae_mw = score(filtered(std::move(attacked)));
    raw_sum += row.raw_mae_mw;
    if (row.filtered_mae_mw) filtered_sum += *row.filtered_mae_mw;
    report.rows.push_back(row);
  }
  if (!snr_list.empty()) {
    const auto count = static_cast<double>(snr_list.size());
    report.avg_raw_mae_mw = raw_sum / count;
    if (options.filter) report.avg_filtered_mae_mw = filtered_sum / count;
  }
  return report;
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json rows = json::array();
    for (const auto& row : report.rows) {
      json r = json::object();
      r["condition"] = condition_label(row);
      r["snr_db"] = optional_number(row.snr_db);
      r["raw_mae_mw"] = row.raw_mae_mw;
      r["filtered_mae_mw"] = optional_number(row.filtered_mae_mw);
      rows.push_back(std::move(r));
    }
    json j;
    j["schema"] = kSchemaName;
    j["version"] = EvalReport::kSchemaVersion;
    j["model_id"] = report.model_id;
    j["corpus_size"] = report.corpus_size;
    j["filter_cutoff_hz"] = optional_number(report.filter_cutoff_hz);
    j["filter_on_clean"] = report.filter_on_clean;
    j["rows"] = std::move(rows);
    j["avg_raw_mae_mw"] = report.avg_raw_mae_mw;
    j["avg_filtered_mae_mw"] = optional_number(report.avg_filtered_mae_mw);
    return j.dump(2) + "\n";
  }

  bool has_filtered = report.avg_filtered_mae_mw.has_value();
  for (const auto& row : report.rows) has_filtered |= row.filtered_mae_mw.has_value();

  std::string out = has_filtered ? "condition,raw_mae_mw,filtered_mae_mw\n"
                                 : "condition,raw_mae_mw\n";
  auto emit_row = [&](std::string_view label, double raw, std::optional<double> filt) {
    fmt::format_to(std::back_inserter(out), "{},{:.17g}", label, raw);
    if (has_filtered) {
      if (filt) {
        fmt::format_to(std::back_inserter(out), ",{:.17g}", *filt);
      } else {
        out += ",";
      }
    }
    out += "\n";
  };
  for (const auto& row : report.rows) {
    emit_row(condition_label(row), row.raw_mae_mw, row.filtered_mae_mw);
  }
  emit_row(kAverage, report.avg_raw_mae_mw, report.avg_filtered_mae_mw);
  return out;
}

EvalReport parse_report_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != kSchemaName) {
      throw FormatError("not an evaluation report");
    }
    if (j.at("version").get<int>() != EvalReport::kSchemaVersion) {
      throw FormatError("unsupported version");
    }
    EvalReport report;
    report.model_id = j.at("model_id").get<std::string>();
    report.corpus_size = j.at("corpus_size").get<std::size_t>();
    report.filter_cutoff_hz = read_optional(j, "filter_cutoff_hz");
    report.filter_on_clean = j.at("filter_on_clean").get<bool>();
    for (const auto& r : j.at("rows")) {
      report.rows.push_back(
          {read_optional(r, "snr_db"), r.at("raw_mae_mw").get<double>(),
           read_optional(r, "filtered_mae_mw")});
    }
    report.avg_raw_mae_mw = j.at("avg_raw_mae_mw").get<double>();
    report.avg_filtered_mae_mw = read_optional(j, "avg_filtered_mae_mw");
    return report;
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
}

EvalReport parse_report_csv(std::string_view text) {
  EvalReport report;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (line_no++ == 0) {
      columns = fields.size();
      if (fields[0] != "condition" || columns < 2 || columns > 3) {
        throw FormatError("unexpected report CSV header");
      }
      continue;
    }
    if (fields.size() != columns) {
      throw FormatError(fmt::format("report line {} has {} fields", line_no, fields.size()));
    }
    const double raw = parse_double(fields[1], line_no);
    std::optional<double> filt;
    if (columns == 3 && !fields[2].empty()) filt = parse_double(fields[2], line_no);
    if (fields[0] == kAverage) {
      report.avg_raw_mae_mw = raw;
      report.avg_filtered_mae_mw = filt;
    } else if (fields[0] == kNoAttack) {
      report.rows.push_back({std::nullopt, raw, filt});
    } else {
      report.rows.push_back({parse_double(fields[0], line_no), raw, filt});
    }
  }
  return report;
}

std::string emit_plot_data(std::span<const PlotCurve> curves) {
  std::string out = "curve,x,y\n";
  for (const auto& curve : curves) {
    if (curve.x.size() != curve.y.size()) {
      throw ShapeError(fmt::format("curve '{}' has {} x and {} y values", curve.name,
                                   curve.x.size(), curve.y.size()));
    }
    for (std::size_t k = 0; k < curve.x.size(); ++k) {
      fmt::format_to(std::back_inserter(out), "{},{:.17g},{:.17g}\n", curve.name, curve.x[k],
                     curve.y[k]);
    }
  }
  return out;
}

}  // namespace loadrobust
