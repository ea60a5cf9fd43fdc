#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "loadrobust/attack.hpp"
#include "loadrobust/denoise.hpp"
#include "loadrobust/errors.hpp"
#include "loadrobust/lstm.hpp"
#include "loadrobust/metrics.hpp"
#include "loadrobust/series.hpp"
#include "loadrobust/simloop.hpp"

namespace py = pybind11;
using namespace loadrobust;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw ShapeError("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(std::span<const double> v) {
  return Array(static_cast<py::ssize_t>(v.size()), v.data());
}

std::vector<std::vector<double>> to_rows(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a two-dimensional array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<std::vector<double>> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r].assign(a.data() + r * cols, a.data() + (r + 1) * cols);
  }
  return out;
}

Array to_matrix(const std::vector<const std::vector<double>*>& rows, std::size_t cols) {
  Array out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(cols)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = (*rows[r])[c];
  }
  return out;
}

LoadSeries series_of(const Array& values) { return LoadSeries(0, to_vector(values)); }

std::optional<FilterSpec> filter_of_cutoff(std::optional<double> cutoff_hz) {
  if (!cutoff_hz) return std::nullopt;
  return FilterSpec{*cutoff_hz};
}

py::dict report_dict(const EvalReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["snr_db"] = row.snr_db;
    d["raw_mae_mw"] = row.raw_mae_mw;
    d["filtered_mae_mw"] = row.filtered_mae_mw;
    rows.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  out["avg_raw_mae_mw"] = r.avg_raw_mae_mw;
  out["avg_filtered_mae_mw"] = r.avg_filtered_mae_mw;
  out["corpus_size"] = r.corpus_size;
  out["model_id"] = r.model_id;
  out["filter_cutoff_hz"] = r.filter_cutoff_hz;
  return out;
}

}  // namespace

PYBIND11_MODULE(_loadrobust, m) {
  m.doc() = "LSTM load forecasting under Gaussian input attacks, with FFT denoising";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::exception<Error>(m, "LoadRobustError", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type.get_stored(), e.what());
    }
  });

  m.attr("INPUT_LENGTH") = kInputLength;
  m.attr("HORIZON") = kHorizon;
  m.attr("SAMPLE_INTERVAL_S") = kSampleIntervalSeconds;

  m.def(
      "generate_synthetic",
      [](std::size_t days, std::uint64_t seed, double base_mw, double daily_amp_mw,
         double halfday_amp_mw, double weekly_mod_frac, double noise_sigma_mw) {
        const SyntheticSpec spec{base_mw,         daily_amp_mw,   halfday_amp_mw,
                                 weekly_mod_frac, noise_sigma_mw, days};
        return to_array(generate_synthetic(spec, seed).values());
      },
      py::arg("days") = 365, py::arg("seed") = 0, py::arg("base_mw") = 3.0,
      py::arg("daily_amp_mw") = 1.0, py::arg("halfday_amp_mw") = 0.4,
      py::arg("weekly_mod_frac") = 0.1, py::arg("noise_sigma_mw") = 0.05);

  m.def(
      "ingest_csv",
      [](std::string_view text) {
        const LoadSeries s = ingest_csv(text);
        return py::make_tuple(s.start_epoch(), to_array(s.values()));
      },
      py::arg("text"), "Parse `timestamp,load_mw` rows; returns (start_epoch, values).");

  m.def(
      "to_csv",
      [](const Array& values, std::int64_t start_epoch) {
        return to_csv(LoadSeries(start_epoch, to_vector(values)));
      },
      py::arg("values"), py::arg("start_epoch") = 0);

  m.def(
      "make_windows",
      [](const Array& values, std::size_t stride) {
        const auto windows = make_windows(series_of(values), stride);
        std::vector<const std::vector<double>*> inputs, targets;
        for (const auto& w : windows) {
          inputs.push_back(&w.input);
          targets.push_back(&w.target);
        }
        return py::make_tuple(to_matrix(inputs, kInputLength), to_matrix(targets, kHorizon));
      },
      py::arg("values"), py::arg("stride") = kDefaultStride,
      "Returns (inputs[N, 1152], targets[N, 60]).");

  m.def(
      "split_chronological",
      [](const Array& values, double train_frac, double val_frac) {
        const auto s = split_chronological(series_of(values), train_frac, val_frac);
        return py::make_tuple(to_array(s.train.values()), to_array(s.validation.values()),
                              to_array(s.test.values()));
      },
      py::arg("values"), py::arg("train_frac") = 0.70, py::arg("val_frac") = 0.15);

  m.def("signal_power", [](const Array& w) { return signal_power(to_vector(w)); });
  m.def(
      "inject_noise",
      [](const Array& w, double snr_db, std::uint64_t seed) {
        return to_array(inject_noise(to_vector(w), {snr_db, seed}));
      },
      py::arg("window"), py::arg("snr_db"), py::arg("seed") = 0);
  m.def("measure_snr",
        [](const Array& clean, const Array& noisy) {
          return measure_snr(to_vector(clean), to_vector(noisy));
        });
  m.def("window_noise_seed", &window_noise_seed, py::arg("root_seed"), py::arg("index"),
        py::arg("snr_db"));
  m.def("step_noise_seed", &step_noise_seed, py::arg("root_seed"), py::arg("step"));

  m.def(
      "fft_forward", [](const Array& w) { return fft_forward(to_vector(w)).coeffs; },
      py::arg("window"));
  m.def(
      "fft_inverse",
      [](const std::vector<Complex>& coeffs) {
        return to_array(fft_inverse(Spectrum{coeffs, coeffs.size(), kSampleIntervalSeconds}));
      },
      py::arg("coeffs"));
  m.def(
      "bin_frequency",
      [](std::size_t k, std::size_t n, double dt) { return bin_frequency(k, n, dt); },
      py::arg("k"), py::arg("n"), py::arg("dt") = static_cast<double>(kSampleIntervalSeconds));
  m.def(
      "lowpass",
      [](const Array& w, double cutoff_hz) {
        const auto r = lowpass(to_vector(w), FilterSpec{cutoff_hz});
        return py::make_tuple(to_array(r.samples), r.passthrough);
      },
      py::arg("window"), py::arg("cutoff_hz") = 2.5e-5,
      "Brick-wall low-pass; returns (samples, passthrough).");
  m.def("default_cutoff_candidates", &default_cutoff_candidates);
  m.def("default_calibration_snrs", &default_calibration_snrs);
  m.def(
      "grid_search_cutoff",
      [](const Array& corpus, std::optional<std::vector<double>> candidates,
         std::optional<std::vector<double>> snrs, std::uint64_t seed) {
        const auto rows = to_rows(corpus);
        const auto c = candidates.value_or(default_cutoff_candidates());
        const auto s = snrs.value_or(default_calibration_snrs());
        const auto r = grid_search_cutoff(rows, c, s, seed);
        py::list scores;
        for (const auto& sc : r.sae_by_candidate) {
          scores.append(py::make_tuple(sc.cutoff_hz, sc.total_sae_mw));
        }
        py::dict out;
        out["best_cutoff_hz"] = r.best_cutoff_hz;
        out["sae_by_candidate"] = scores;
        out["snr_set_db"] = r.snr_set_db;
        out["corpus_size"] = r.corpus_size;
        return out;
      },
      py::arg("corpus"), py::arg("candidates") = py::none(), py::arg("snrs") = py::none(),
      py::arg("seed") = 0);

  m.def("mae", [](const Array& p, const Array& a) { return mae(to_rows(p), to_rows(a)); });
  m.def("sae", [](const Array& a, const Array& b) { return sae(to_vector(a), to_vector(b)); });

  py::class_<ModelParams>(m, "Model")
      .def_static(
          "init",
          [](std::size_t hidden, double dropout, std::uint64_t seed) {
            return init_model({kInputLength, hidden, kHorizon}, dropout, seed);
          },
          py::arg("hidden") = 128, py::arg("dropout") = 0.2, py::arg("seed") = 0)
      .def_static(
          "from_bytes", [](py::bytes b) { return load_model(std::string(b)); }, py::arg("data"))
      .def("to_bytes", [](const ModelParams& p) { return py::bytes(save_model(p)); })
      .def_property_readonly("hidden", [](const ModelParams& p) { return p.shape().hidden; })
      .def_property_readonly("dropout", [](const ModelParams& p) { return p.dropout_rate; })
      .def_property_readonly("model_id", [](const ModelParams& p) { return model_id(p); })
      .def_property_readonly("scaler", [](const ModelParams& p) {
        return py::make_tuple(p.scaler.min_mw(), p.scaler.max_mw());
      })
      .def(
          "predict",
          [](const ModelParams& p, const Array& w) {
            return to_array(predict_mw(p, to_vector(w)));
          },
          py::arg("window"), "60-step forecast in MW from 1152 MW samples.");

  m.def(
      "train",
      [](const Array& values, std::size_t epochs, std::size_t hidden, double lr,
         std::size_t batch_size, double dropout, std::uint64_t seed, std::size_t stride,
         std::size_t patience, double clip_norm) {
        const auto split = split_chronological(series_of(values));
        const auto train_windows = make_windows(split.train, stride);
        std::vector<WindowPair> val_windows;
        if (split.validation.size() >= kWindowSpan) {
          val_windows = make_windows(split.validation, stride);
        }
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.hidden = hidden;
        cfg.learning_rate = lr;
        cfg.batch_size = batch_size;
        cfg.dropout_rate = dropout;
        cfg.seed = seed;
        cfg.patience = patience;
        cfg.clip_norm = clip_norm;
        TrainResult result;
        {
          py::gil_scoped_release release;
          result = train(train_windows, val_windows, cfg);
        }
        py::list history;
        for (const auto& s : result.history) {
          py::dict d;
          d["epoch"] = s.epoch;
          d["train_loss"] = s.train_loss;
          d["val_loss"] = s.val_loss;
          history.append(d);
        }
        return py::make_tuple(result.model, history);
      },
      py::arg("values"), py::arg("epochs") = 20, py::arg("hidden") = 128, py::arg("lr") = 1e-3,
      py::arg("batch_size") = 32, py::arg("dropout") = 0.2, py::arg("seed") = 0,
      py::arg("stride") = kDefaultStride, py::arg("patience") = 0, py::arg("clip_norm") = 0.0,
      "Chronological 70/15/15 split, train on the first part; returns (model, history).");

  m.def(
      "evaluate_matrix",
      [](const ModelParams& model, const Array& values, std::optional<std::vector<double>> snrs,
         std::optional<double> filter_cutoff_hz, std::uint64_t seed, std::size_t stride) {
        const auto windows = make_windows(series_of(values), stride);
        const auto s = snrs.value_or(default_table_snrs());
        EvalReport report;
        {
          py::gil_scoped_release release;
          report = evaluate_matrix(model, windows, s,
                                   {filter_of_cutoff(filter_cutoff_hz), seed, false});
        }
        return report_dict(report);
      },
      py::arg("model"), py::arg("values"), py::arg("snrs") = py::none(),
      py::arg("filter_cutoff_hz") = py::none(), py::arg("seed") = 0,
      py::arg("stride") = kDefaultStride);

  m.def(
      "simulate",
      [](const ModelParams& model, const Array& values, std::size_t steps,
         std::size_t start_index, std::optional<double> attack_snr_db,
         std::optional<double> filter_cutoff_hz, std::uint64_t seed) {
        SimConfig cfg;
        cfg.steps = steps;
        cfg.start_index = start_index;
        if (attack_snr_db) cfg.attack = AttackConfig{*attack_snr_db, seed};
        cfg.filter = filter_of_cutoff(filter_cutoff_hz);
        const LoadSeries series = series_of(values);
        SimTrace trace;
        {
          py::gil_scoped_release release;
          trace = run(cfg, model, series);
        }
        std::vector<const std::vector<double>*> preds, actuals;
        for (const auto& r : trace.steps) {
          preds.push_back(&r.prediction);
          actuals.push_back(&r.actual);
        }
        py::dict out;
        out["predictions"] = to_matrix(preds, kHorizon);
        out["actuals"] = to_matrix(actuals, kHorizon);
        out["overall_mae_mw"] = trace.overall_mae_mw;
        return out;
      },
      py::arg("model"), py::arg("values"), py::arg("steps"),
      py::arg("start_index") = kInputLength, py::arg("attack_snr_db") = py::none(),
      py::arg("filter_cutoff_hz") = py::none(), py::arg("seed") = 0);
}
