#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "loadrobust/attack.hpp"
#include "loadrobust/denoise.hpp"
#include "loadrobust/errors.hpp"
#include "loadrobust/lstm.hpp"
#include "loadrobust/metrics.hpp"
#include "loadrobust/series.hpp"
#include "loadrobust/simloop.hpp"

namespace loadrobust::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string config;
};

struct SynthArgs {
  SyntheticSpec spec;
};

struct TrainArgs {
  std::string data;
  TrainConfig config;
  std::size_t stride = kDefaultStride;
  double train_frac = 0.70;
  double val_frac = 0.15;
};

struct EvalArgs {
  std::string model;
  std::string data;
  std::vector<double> snrs = default_table_snrs();
  std::optional<double> filter_cutoff;
  bool filter_on_clean = false;
  std::string split = "test";
  std::size_t stride = kDefaultStride;
};

struct SpectrumArgs {
  std::string data;
  std::size_t window_origin = 0;
  std::optional<double> attack_snr;
};

struct GridArgs {
  std::string data;
  std::vector<double> candidates = default_cutoff_candidates();
  int snr_min = 6;
  int snr_max = 20;
  std::string split = "train";
  std::size_t stride = kDefaultStride;
  std::size_t max_windows = 0;
};

struct SimArgs {
  std::string model;
  std::string data;
  std::size_t steps = 0;
  std::size_t start_index = kInputLength;
  std::optional<double> attack_snr;
  std::optional<double> filter_cutoff;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError(fmt::format("failed writing '{}'", path.string()));
}

void require_input(const std::string& path, std::string_view what) {
  std::error_code ec;
  if (path.empty()) throw ConfigError(fmt::format("--{} is required", what));
  if (!fs::is_regular_file(path, ec)) {
    throw ConfigError(fmt::format("{} file '{}' does not exist", what, path));
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir, ec)) {
    throw ConfigError(fmt::format("output directory '{}' cannot be created", dir));
  }
  return fs::path(dir);
}

LoadSeries load_series(const std::string& path) { return ingest_csv(read_file(path)); }

LoadSeries pick_split(const LoadSeries& series, const std::string& split) {
  if (split == "all") return series;
  const SeriesSplit parts = split_chronological(series);
  if (split == "train") return parts.train;
  if (split == "validation") return parts.validation;
  if (split == "test") return parts.test;
  throw ConfigError(fmt::format("unknown split '{}'", split));
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config, "Flat key=value file; flags override its values");
  cmd->add_option("--seed", common.seed, "Root seed")->capture_default_str();
  cmd->add_option("--out-dir", common.out_dir, "Directory for output files")
      ->capture_default_str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Fills options the command line left unset from `key=value` lines. Keys are
// long option names without the leading dashes; '#' starts a comment.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  const std::string text = read_file(path);
  std::string_view rest = text;
  std::size_t line_no = 0;
  while (!rest.empty()) {
    const auto eol = rest.find('\n');
    std::string_view line = rest.substr(0, eol);
    rest = eol == std::string_view::npos ? std::string_view{} : rest.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key=value", path, line_no));
    }
    std::string key(trim(line.substr(0, eq)));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "config") throw ConfigError(fmt::format("{}:{}: nested config", path, line_no));
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw ConfigError(fmt::format("{}:{}: unknown key '{}' for {}", path, line_no, key,
                                    cmd->get_name()));
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
}

int cmd_synth(const SynthArgs& a, const Common& c, std::ostream& out) {
  a.spec.validate();
  const fs::path dir = prepare_out_dir(c.out_dir);
  const LoadSeries series = generate_synthetic(a.spec, c.seed);
  write_file(dir / "series.csv", to_csv(series));
  fmt::print(out, "wrote {} samples to {}\n", series.size(), (dir / "series.csv").string());
  return kExitOk;
}

int cmd_train(const TrainArgs& a, const Common& c, std::ostream& out) {
  require_input(a.data, "data");
  TrainConfig config = a.config;
  config.seed = c.seed;
  config.validate();
  if (a.stride == 0) throw ConfigError("stride must be positive");
  const fs::path dir = prepare_out_dir(c.out_dir);

  const LoadSeries series = load_series(a.data);
  const SeriesSplit split = split_chronological(series, a.train_frac, a.val_frac);
  const auto train_windows = make_windows(split.train, a.stride);
  std::vector<WindowPair> val_windows;
  if (split.validation.size() >= kWindowSpan) val_windows = make_windows(split.validation, a.stride);
  fmt::print(out, "training on {} windows, validating on {}\n", train_windows.size(),
             val_windows.size());

  const TrainResult result = train(train_windows, val_windows, config, [&](const EpochStats& s) {
    fmt::print(out, "epoch {} train_loss {}{}\n", s.epoch, num(s.train_loss),
               s.val_loss ? " val_loss " + num(*s.val_loss) : std::string());
  });

  std::string history = "epoch,train_loss,val_loss\n";
  for (const auto& s : result.history) {
    fmt::format_to(std::back_inserter(history), "{},{},{}\n", s.epoch, num(s.train_loss),
                   s.val_loss ? num(*s.val_loss) : std::string());
  }
  write_file(dir / "model.bin", save_model(result.model));
  write_file(dir / "history.csv", history);
  fmt::print(out, "model {} (best epoch {})\n", model_id(result.model), result.best_epoch);
  return kExitOk;
}

int cmd_attack_eval(const EvalArgs& a, const Common& c, std::ostream& out) {
  require_input(a.model, "model");
  require_input(a.data, "data");
  if (a.stride == 0) throw ConfigError("stride must be positive");
  std::optional<FilterSpec> filter;
  if (a.filter_cutoff) {
    filter = FilterSpec{*a.filter_cutoff};
    filter->validate();
  }
  if (a.filter_on_clean && !filter) throw ConfigError("--filter-on-clean needs --filter-cutoff");
  const fs::path dir = prepare_out_dir(c.out_dir);

  const ModelParams model = load_model(read_file(a.model));
  const auto windows = make_windows(pick_split(load_series(a.data), a.split), a.stride);
  const EvalReport report =
      evaluate_matrix(model, windows, a.snrs, {filter, c.seed, a.filter_on_clean});
  write_file(dir / "report.json", emit_report(report, ReportFormat::kJson));
  write_file(dir / "report.csv", emit_report(report, ReportFormat::kCsv));
  out << emit_report(report, ReportFormat::kCsv);
  return kExitOk;
}

int cmd_spectrum(const SpectrumArgs& a, const Common& c, std::ostream& out) {
  require_input(a.data, "data");
  if (a.attack_snr) AttackConfig{*a.attack_snr, c.seed}.validate();
  const fs::path dir = prepare_out_dir(c.out_dir);

  const LoadSeries series = load_series(a.data);
  if (a.window_origin + kInputLength > series.size()) {
    throw InsufficientDataError(a.window_origin + kInputLength, series.size());
  }
  const auto window = series.values().subspan(a.window_origin, kInputLength);
  write_file(dir / "spectrum.csv", spectrum_to_csv(fft_forward(window)));
  if (a.attack_snr) {
    const auto noisy = inject_noise(window, {*a.attack_snr, c.seed});
    write_file(dir / "spectrum_attacked.csv", spectrum_to_csv(fft_forward(noisy)));
  }
  fmt::print(out, "spectrum of samples [{}, {}) written to {}\n", a.window_origin,
             a.window_origin + kInputLength, dir.string());
  return kExitOk;
}

int cmd_gridsearch(const GridArgs& a, const Common& c, std::ostream& out) {
  require_input(a.data, "data");
  if (a.snr_min > a.snr_max) throw ConfigError("snr-min exceeds snr-max");
  if (a.stride == 0) throw ConfigError("stride must be positive");
  if (a.candidates.empty()) throw ConfigError("no cutoff candidates");
  for (double f : a.candidates) FilterSpec{f}.validate();
  const fs::path dir = prepare_out_dir(c.out_dir);

  const auto windows = make_windows(pick_split(load_series(a.data), a.split), a.stride);
  std::vector<std::vector<double>> corpus;
  const std::size_t count =
      a.max_windows == 0 ? windows.size() : std::min(a.max_windows, windows.size());
  for (std::size_t i = 0; i < count; ++i) corpus.push_back(windows[i].input);
  std::vector<double> snrs;
  for (int db = a.snr_min; db <= a.snr_max; ++db) snrs.push_back(db);

  const GridSearchResult result = grid_search_cutoff(corpus, a.candidates, snrs, c.seed);
  write_file(dir / "gridsearch.csv", grid_search_to_csv(result));
  nlohmann::ordered_json j;
  j["best_cutoff_hz"] = result.best_cutoff_hz;
  j["corpus_size"] = result.corpus_size;
  j["snr_set_db"] = result.snr_set_db;
  j["seed"] = c.seed;
  j["candidates"] = nlohmann::ordered_json::array();
  for (const auto& s : result.sae_by_candidate) {
    j["candidates"].push_back({{"cutoff_hz", s.cutoff_hz}, {"total_sae_mw", s.total_sae_mw}});
  }
  write_file(dir / "gridsearch.json", j.dump(2) + "\n");
  out << grid_search_to_csv(result);
  fmt::print(out, "best_cutoff_hz {}\n", num(result.best_cutoff_hz));
  return kExitOk;
}

int cmd_simulate(const SimArgs& a, const Common& c, std::ostream& out) {
  require_input(a.model, "model");
  require_input(a.data, "data");
  SimConfig config;
  config.steps = a.steps;
  config.start_index = a.start_index;
  if (a.attack_snr) config.attack = AttackConfig{*a.attack_snr, c.seed};
  if (a.filter_cutoff) config.filter = FilterSpec{*a.filter_cutoff};
  if (config.attack) config.attack->validate();
  if (config.filter) config.filter->validate();
  const fs::path dir = prepare_out_dir(c.out_dir);

  const ModelParams model = load_model(read_file(a.model));
  const LoadSeries series = load_series(a.data);
  const SimTrace trace = run(config, model, series);
  write_file(dir / "trace.csv", trace_to_csv(trace));
  write_file(dir / "summary.json", trace_summary_json(trace, config));
  fmt::print(out, "steps {} overall_mae_mw {}\n", trace.steps.size(),
             trace.overall_mae_mw ? num(*trace.overall_mae_mw) : std::string("null"));
  return kExitOk;
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::kConfig:
      return kExitConfig;
    case ErrorCategory::kData:
      return kExitData;
    case ErrorCategory::kNumerical:
      return kExitNumerical;
  }
  return kExitInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Load forecasting under input noise attacks", "loadrobust"};
  app.require_subcommand(1);

  Common common;
  SynthArgs synth;
  TrainArgs tr;
  EvalArgs ev;
  SpectrumArgs sp;
  GridArgs gs;
  SimArgs sim;

  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic 5-minute load series");
  add_common(c_synth, common);
  c_synth->add_option("--days", synth.spec.duration_days)->capture_default_str();
  c_synth->add_option("--base-mw", synth.spec.base_mw)->capture_default_str();
  c_synth->add_option("--daily-amp-mw", synth.spec.daily_amp_mw)->capture_default_str();
  c_synth->add_option("--halfday-amp-mw", synth.spec.halfday_amp_mw)->capture_default_str();
  c_synth->add_option("--weekly-mod-frac", synth.spec.weekly_mod_frac)->capture_default_str();
  c_synth->add_option("--noise-sigma-mw", synth.spec.process_noise_sigma_mw)
      ->capture_default_str();

  auto* c_train = app.add_subcommand("train", "Train the LSTM forecaster");
  add_common(c_train, common);
  c_train->add_option("--data", tr.data, "Load CSV");
  c_train->add_option("--epochs", tr.config.epochs)->capture_default_str();
  c_train->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  c_train->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  c_train->add_option("--dropout", tr.config.dropout_rate)->capture_default_str();
  c_train->add_option("--hidden", tr.config.hidden)->capture_default_str();
  c_train->add_option("--patience", tr.config.patience, "0 disables early stopping")
      ->capture_default_str();
  c_train->add_option("--clip-norm", tr.config.clip_norm, "0 disables clipping")
      ->capture_default_str();
  c_train->add_option("--tbptt", tr.config.tbptt_chunk, "0 is full backprop through time")
      ->capture_default_str();
  c_train->add_option("--stride", tr.stride)->capture_default_str();
  c_train->add_option("--train-frac", tr.train_frac)->capture_default_str();
  c_train->add_option("--val-frac", tr.val_frac)->capture_default_str();

  auto* c_eval = app.add_subcommand("attack-eval", "MAE under noise attacks, optionally filtered");
  add_common(c_eval, common);
  c_eval->add_option("--model", ev.model);
  c_eval->add_option("--data", ev.data);
  c_eval->add_option("--snrs", ev.snrs, "Comma-separated SNRs in dB")
      ->delimiter(',')
      ->capture_default_str();
  c_eval->add_option("--filter-cutoff", ev.filter_cutoff, "Low-pass cutoff in Hz");
  c_eval->add_flag("--filter-on-clean", ev.filter_on_clean);
  c_eval->add_option("--split", ev.split)
      ->check(CLI::IsMember({"train", "validation", "test", "all"}))
      ->capture_default_str();
  c_eval->add_option("--stride", ev.stride)->capture_default_str();

  auto* c_spec = app.add_subcommand("spectrum", "FFT magnitude and phase of one input window");
  add_common(c_spec, common);
  c_spec->add_option("--data", sp.data);
  c_spec->add_option("--window-origin", sp.window_origin)->capture_default_str();
  c_spec->add_option("--attack-snr", sp.attack_snr, "Also write the attacked spectrum");

  auto* c_grid = app.add_subcommand("gridsearch", "Search the low-pass cutoff that best removes noise");
  add_common(c_grid, common);
  c_grid->add_option("--data", gs.data);
  c_grid->add_option("--candidates", gs.candidates, "Comma-separated cutoffs in Hz")
      ->delimiter(',');
  c_grid->add_option("--snr-min", gs.snr_min)->capture_default_str();
  c_grid->add_option("--snr-max", gs.snr_max)->capture_default_str();
  c_grid->add_option("--split", gs.split)
      ->check(CLI::IsMember({"train", "validation", "test", "all"}))
      ->capture_default_str();
  c_grid->add_option("--stride", gs.stride)->capture_default_str();
  c_grid->add_option("--max-windows", gs.max_windows, "0 uses every window")
      ->capture_default_str();

  auto* c_sim = app.add_subcommand("simulate", "Closed-loop forecast simulation");
  add_common(c_sim, common);
  c_sim->add_option("--model", sim.model);
  c_sim->add_option("--data", sim.data);
  c_sim->add_option("--steps", sim.steps);
  c_sim->add_option("--start-index", sim.start_index)->capture_default_str();
  c_sim->add_option("--attack-snr", sim.attack_snr);
  c_sim->add_option("--filter-cutoff", sim.filter_cutoff);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) {
      if (!common.config.empty()) apply_config_file(sub, common.config);
    }
    if (c_synth->parsed()) return cmd_synth(synth, common, out);
    if (c_train->parsed()) return cmd_train(tr, common, out);
    if (c_eval->parsed()) return cmd_attack_eval(ev, common, out);
    if (c_spec->parsed()) return cmd_spectrum(sp, common, out);
    if (c_grid->parsed()) return cmd_gridsearch(gs, common, out);
    if (c_sim->parsed()) return cmd_simulate(sim, common, out);
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kExitInternal;
  }
  return kExitConfig;
}

}  // namespace loadrobust::cli
