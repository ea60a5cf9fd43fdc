#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "loadrobust/errors.hpp"
#include "loadrobust/lstm.hpp"

namespace loadrobust {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

struct Batch {
  MatrixXd inputs;   // T x B
  MatrixXd targets;  // Q x B
};

Batch gather(std::span<const WindowPair> windows, std::span<const std::size_t> order) {
  const auto T = static_cast<Index>(windows[order[0]].input.size());
  const auto Q = static_cast<Index>(windows[order[0]].target.size());
  const auto B = static_cast<Index>(order.size());
  Batch batch{MatrixXd(T, B), MatrixXd(Q, B)};
  for (Index b = 0; b < B; ++b) {
    const WindowPair& w = windows[order[static_cast<std::size_t>(b)]];
    batch.inputs.col(b) = Eigen::Map<const Eigen::VectorXd>(w.input.data(), T);
    batch.targets.col(b) = Eigen::Map<const Eigen::VectorXd>(w.target.data(), Q);
  }
  return batch;
}

double evaluate_loss(const ModelParams& model, std::span<const WindowPair> windows,
                     std::size_t chunk) {
  CounterRng unused(0);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  ForwardCache cache;
  for (std::size_t first = 0; first < windows.size(); first += chunk) {
    const std::size_t count = std::min(chunk, windows.size() - first);
    const Batch batch = gather(windows, std::span(order).subspan(first, count));
    forward_batch(model, batch.inputs, Mode::kInfer, unused, cache);
    total += (cache.predictions - batch.targets).squaredNorm() /
             static_cast<double>(batch.targets.rows());
  }
  return total / static_cast<double>(windows.size());
}

void check_windows(std::span<const WindowPair> windows, const ModelShape& shape,
                   const char* which) {
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (windows[k].input.size() != shape.input_length ||
        windows[k].target.size() != shape.horizon) {
      throw ShapeError(fmt::format("{} window {} has shape {}+{}, expected {}+{}", which, k,
                                   windows[k].input.size(), windows[k].target.size(),
                                   shape.input_length, shape.horizon));
    }
  }
}

std::vector<WindowPair> scale_windows(std::span<const WindowPair> windows, const Scaler& s) {
  std::vector<WindowPair> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    out.push_back(WindowPair{s.apply(w.input), s.apply(w.target), w.origin_index});
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (hidden == 0) throw ConfigError("hidden must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be >= 0");
}

AdamState AdamState::for_model(const ModelParams& model) {
  return {GradientSet::zeros_like(model), GradientSet::zeros_like(model), 0};
}

void adam_step(ModelParams& model, const GradientSet& grads, AdamState& state,
               const TrainConfig& config) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  auto params = tensor_views(model);
  const auto g = tensor_views(grads);
  auto m = tensor_views(state.first_moment);
  auto v = tensor_views(state.second_moment);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (g[k].size() != params[k].size() || m[k].size() != params[k].size()) {
      throw ShapeError("gradient or optimizer state does not match the model");
    }
    for (std::size_t j = 0; j < params[k].size(); ++j) {
      m[k][j] = b1 * m[k][j] + (1.0 - b1) * g[k][j];
      v[k][j] = b2 * v[k][j] + (1.0 - b2) * g[k][j] * g[k][j];
      const double m_hat = m[k][j] / correction1;
      const double v_hat = v[k][j] / correction2;
      params[k][j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  }
}

TrainResult train_scaled(std::span<const WindowPair> train_windows,
                         std::span<const WindowPair> val_windows, const TrainConfig& config,
                         const Scaler& scaler, const ModelShape& shape,
                         const EpochCallback& on_epoch) {
  config.validate();
  if (train_windows.empty()) throw InsufficientDataError(1, 0);
  check_windows(train_windows, shape, "training");
  check_windows(val_windows, shape, "validation");

  ModelParams model = init_model(shape, config.dropout_rate, derive_seed(config.seed, {1}));
  model.scaler = scaler;
  AdamState adam = AdamState::for_model(model);
  CounterRng shuffle_rng(derive_seed(config.seed, {2}));
  CounterRng dropout_rng(derive_seed(config.seed, {3}));

  TrainResult result{model, {}, 0};
  std::optional<double> best_val;
  std::size_t since_best = 0;

  ForwardCache cache;
  BackwardScratch scratch;
  GradientSet grads;

  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[shuffle_rng.below(k)]);
    }

    double loss_sum = 0.0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - first);
      const Batch batch = gather(train_windows, std::span(order).subspan(first, count));
      forward_batch(model, batch.inputs, Mode::kTrain, dropout_rng, cache);
      const double batch_loss = (cache.predictions - batch.targets).squaredNorm() /
                                static_cast<double>(batch.targets.rows());
      if (!std::isfinite(batch_loss)) {
        throw NumericalError(fmt::format("non-finite training loss in epoch {}", epoch));
      }
      loss_sum += batch_loss;

      backward(model, cache, batch.targets, config.tbptt_chunk, grads, scratch);
      grads *= 1.0 / static_cast<double>(count);
      if (!grads.all_finite()) {
        throw NumericalError(fmt::format("non-finite gradient in epoch {}", epoch));
      }
      if (config.clip_norm > 0.0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > config.clip_norm) grads *= config.clip_norm / norm;
      }
      adam_step(model, grads, adam, config);
    }

    EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()), std::nullopt};
    if (!val_windows.empty()) {
      stats.val_loss = evaluate_loss(model, val_windows, 32);
      if (!std::isfinite(*stats.val_loss)) {
        throw NumericalError(fmt::format("non-finite validation loss in epoch {}", epoch));
      }
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (!stats.val_loss) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (!best_val || *stats.val_loss < *best_val) {
      best_val = stats.val_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  if (config.epochs == 0) result.model = model;
  return result;
}

TrainResult train(std::span<const WindowPair> train_windows,
                  std::span<const WindowPair> val_windows, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_windows.empty()) throw InsufficientDataError(1, 0);
  const Scaler scaler = fit_scaler(train_windows);
  const auto scaled_train = scale_windows(train_windows, scaler);
  const auto scaled_val = scale_windows(val_windows, scaler);
  const ModelShape shape{train_windows.front().input.size(), config.hidden,
                         train_windows.front().target.size()};
  return train_scaled(scaled_train, scaled_val, config, scaler, shape, on_epoch);
}

}  // namespace loadrobust
