#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loadrobust/rng.hpp"
#include "loadrobust/series.hpp"

namespace loadrobust {

inline constexpr std::size_t kDefaultHiddenUnits = 128;
inline constexpr std::size_t kGateCount = 4;

struct ModelShape {
  std::size_t input_length = kInputLength;
  std::size_t hidden = kDefaultHiddenUnits;
  std::size_t horizon = kHorizon;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// One LSTM layer. Gate blocks are stacked in the order input (i), forget (f),
// cell candidate (g), output (o), each `hidden` rows tall.
struct LstmLayerParams {
  Eigen::MatrixXd w_x;  // 4H x D
  Eigen::MatrixXd w_h;  // 4H x H
  Eigen::VectorXd b;    // 4H

  static LstmLayerParams zeros(std::size_t input_size, std::size_t hidden);

  std::size_t hidden() const noexcept { return static_cast<std::size_t>(w_h.cols()); }
  std::size_t input_size() const noexcept { return static_cast<std::size_t>(w_x.cols()); }
  void validate() const;
};

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

// Single time step of the standard LSTM cell:
//   i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c).
CellState lstm_cell_step(const LstmLayerParams& params, std::span<const double> x,
                         std::span<const double> h_prev,
                         std::span<const double> c_prev);

// Two stacked LSTM layers (layer 1 emits its full sequence, layer 2 feeds only
// its final hidden state to the dense head) with dropout after each layer.
struct ModelParams {
  static constexpr std::uint32_t kFormatVersion = 1;

  LstmLayerParams layer1;   // D = 1
  LstmLayerParams layer2;   // D = H
  Eigen::MatrixXd dense_w;  // Q x H
  Eigen::VectorXd dense_b;  // Q
  double dropout_rate = 0.2;
  Scaler scaler{0.0, 1.0};
  std::size_t input_length = kInputLength;

  ModelShape shape() const noexcept {
    return {input_length, layer1.hidden(), static_cast<std::size_t>(dense_b.size())};
  }
  void validate() const;
};

ModelParams zero_model(const ModelShape& shape);

// Weights uniform in (-1/sqrt(H), 1/sqrt(H)); biases zero except the forget
// gate, which starts at 1.
ModelParams init_model(const ModelShape& shape, double dropout_rate,
                       std::uint64_t seed);

// Hash of every weight, the dropout rate and the scaler. Used to detect
// caches that no longer belong to a model.
std::uint64_t fingerprint(const ModelParams& model);

enum class Mode { kTrain, kInfer };

struct LayerCache {
  Eigen::MatrixXd gates;  // 4H x (T*B), activated i, f, g, o
  Eigen::MatrixXd c;      // H x (T*B)
  Eigen::MatrixXd tanh_c; // H x (T*B)
  Eigen::MatrixXd h;      // H x (T*B)
};

// Activations of a batched forward pass. Column t*B + b of every sequence
// matrix belongs to time step t of sample b.
struct ForwardCache {
  std::uint64_t model_fingerprint = 0;
  bool trainable = false;
  std::size_t steps = 0;
  std::size_t batch = 0;
  Eigen::MatrixXd x1;         // 1 x (T*B)
  LayerCache layer1;
  Eigen::MatrixXd mask1;      // H x (T*B), empty when no dropout
  Eigen::MatrixXd x2;         // H x (T*B), dropped layer-1 output
  LayerCache layer2;
  Eigen::MatrixXd mask2;      // H x B, empty when no dropout
  Eigen::MatrixXd head_input; // H x B
  Eigen::MatrixXd predictions;  // Q x B
};

// Batched forward pass over scaled inputs (T x B, one column per sample).
// Returns Q x B scaled predictions; the cache supports backward() only in
// train mode. Train mode uses inverted dropout with masks drawn from `rng`.
ForwardCache forward_batch(const ModelParams& model, const Eigen::MatrixXd& inputs,
                           Mode mode, CounterRng& rng);

// Same pass, refilling `cache` in place so repeated calls with one batch shape
// reuse its storage.
void forward_batch(const ModelParams& model, const Eigen::MatrixXd& inputs, Mode mode,
                   CounterRng& rng, ForwardCache& cache);

struct ForwardResult {
  std::vector<double> prediction;
  ForwardCache cache;
};

ForwardResult forward(const ModelParams& model, std::span<const double> input,
                      Mode mode, CounterRng& rng);

// Deterministic inference on scaled samples.
std::vector<double> predict_scaled(const ModelParams& model,
                                   std::span<const double> input);

// Scale MW inputs, infer, and map predictions back to MW.
std::vector<double> predict_mw(const ModelParams& model, std::span<const double> input_mw);

// Batched predict_mw; one result per input window, computed in chunks.
std::vector<std::vector<double>> predict_mw_batch(
    const ModelParams& model, std::span<const std::vector<double>> inputs_mw,
    std::size_t chunk = 32);

double mse_loss(std::span<const double> prediction, std::span<const double> target);

// Per-tensor gradients, congruent with ModelParams.
struct GradientSet {
  LstmLayerParams layer1;
  LstmLayerParams layer2;
  Eigen::MatrixXd dense_w;
  Eigen::VectorXd dense_b;

  static GradientSet zeros_like(const ModelParams& model);

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double factor);
  bool all_finite() const;
  double squared_norm() const;
};

// Gradient of the summed per-sample MSE over the batch in `cache`.
// `targets` is Q x B in the scaled domain. `tbptt_chunk` > 0 truncates the
// recurrent gradient every that many steps counted back from the last step.
GradientSet backward(const ModelParams& model, const ForwardCache& cache,
                     const Eigen::MatrixXd& targets, std::size_t tbptt_chunk = 0);

GradientSet backward(const ModelParams& model, const ForwardCache& cache,
                     std::span<const double> target, std::size_t tbptt_chunk = 0);

// Work buffers for the in-place backward(); reuse one across batches.
struct BackwardScratch {
  Eigen::MatrixXd dz;  // 4H x (T*B)
  Eigen::MatrixXd dx2; // H x (T*B)
};

// Same gradient written into `grad`, which is resized and overwritten.
void backward(const ModelParams& model, const ForwardCache& cache,
              const Eigen::MatrixXd& targets, std::size_t tbptt_chunk, GradientSet& grad,
              BackwardScratch& scratch);

// Flat views over the tensors in a fixed order: layer1 (w_x, w_h, b),
// layer2 (w_x, w_h, b), dense_w, dense_b.
template <typename Params>
auto tensor_views(Params& p) {
  auto view = [](auto& m) { return std::span(m.data(), static_cast<std::size_t>(m.size())); };
  return std::array{view(p.layer1.w_x), view(p.layer1.w_h), view(p.layer1.b),
                    view(p.layer2.w_x), view(p.layer2.w_h), view(p.layer2.b),
                    view(p.dense_w),    view(p.dense_b)};
}

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout_rate = 0.2;
  std::uint64_t seed = 0;
  std::size_t tbptt_chunk = 0;
  std::size_t hidden = kDefaultHiddenUnits;
  // Early stop after this many epochs without validation improvement; 0 off.
  std::size_t patience = 0;
  // Rescale the batch gradient to at most this L2 norm; 0 off.
  double clip_norm = 0.0;

  void validate() const;
};

struct AdamState {
  GradientSet first_moment;
  GradientSet second_moment;
  std::uint64_t step = 0;

  static AdamState for_model(const ModelParams& model);
};

// Adam with bias correction; increments state.step.
void adam_step(ModelParams& model, const GradientSet& grads, AdamState& state,
               const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Fits the scaler on the training windows, then trains with shuffled
// mini-batches (MSE in the scaled domain). With validation windows the
// returned model is the one with the lowest validation loss.
TrainResult train(std::span<const WindowPair> train_windows,
                  std::span<const WindowPair> val_windows, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Same loop on already-scaled windows of arbitrary length; the model carries
// `scaler` unchanged. Used by train() and by reduced-size experiments.
TrainResult train_scaled(std::span<const WindowPair> train_windows,
                         std::span<const WindowPair> val_windows,
                         const TrainConfig& config, const Scaler& scaler,
                         const ModelShape& shape, const EpochCallback& on_epoch = {});

// Versioned little-endian binary container, see docs/model_format.md.
std::string save_model(const ModelParams& model);
ModelParams load_model(std::string_view bytes);

}  // namespace loadrobust
