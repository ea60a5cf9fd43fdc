#include "loadrobust/lstm.hpp"

#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "loadrobust/errors.hpp"

namespace loadrobust {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <typename Block>
void sigmoid_inplace(Block&& block) {
  block.array() = (1.0 + (-block.array()).exp()).inverse();
}

// tanh(x) = 2 sigmoid(2x) - 1; Eigen vectorizes exp but not double tanh.
template <typename Block>
void tanh_inplace(Block&& block) {
  block.array() = 2.0 * (1.0 + (-2.0 * block.array()).exp()).inverse() - 1.0;
}

void check_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InputError(fmt::format("{} contains non-finite values", what));
}

// Runs one layer over T steps of a batch of B sequences. `x` is D x (T*B).
void run_layer(const LstmLayerParams& p, const MatrixXd& x, std::size_t steps,
               std::size_t batch, LayerCache& cache) {
  const Index H = static_cast<Index>(p.hidden());
  const Index B = static_cast<Index>(batch);
  const Index cols = static_cast<Index>(steps) * B;

  cache.gates.noalias() = p.w_x * x;
  cache.gates.colwise() += p.b;
  cache.c.resize(H, cols);
  cache.tanh_c.resize(H, cols);
  cache.h.resize(H, cols);

  for (Index t = 0; t < static_cast<Index>(steps); ++t) {
    auto z = cache.gates.middleCols(t * B, B);
    if (t > 0) z.noalias() += p.w_h * cache.h.middleCols((t - 1) * B, B);
    sigmoid_inplace(z.topRows(2 * H));
    tanh_inplace(z.middleRows(2 * H, H));
    sigmoid_inplace(z.bottomRows(H));

    auto c = cache.c.middleCols(t * B, B);
    c.array() = z.topRows(H).array() * z.middleRows(2 * H, H).array();
    if (t > 0) {
      c.array() += z.middleRows(H, H).array() * cache.c.middleCols((t - 1) * B, B).array();
    }
    auto tc = cache.tanh_c.middleCols(t * B, B);
    tc = c;
    tanh_inplace(tc);
    cache.h.middleCols(t * B, B).array() = z.bottomRows(H).array() * tc.array();
  }
}

// Backpropagates through one layer. `dh_out` holds dLoss/dh for every step
// (H x T*B) or, when `last_only`, for the final step only (H x B).
// Accumulates into `grad`; writes dLoss/dx into `dx` when non-null.
void backward_layer(const LstmLayerParams& p, const LayerCache& cache,
                    const MatrixXd& x, const MatrixXd& dh_out, bool last_only,
                    std::size_t steps, std::size_t batch, std::size_t tbptt_chunk,
                    LstmLayerParams& grad, MatrixXd* dx, MatrixXd& dz) {
  const Index H = static_cast<Index>(p.hidden());
  const Index B = static_cast<Index>(batch);
  const Index T = static_cast<Index>(steps);

  dz.resize(4 * H, T * B);
  MatrixXd dh_carry = MatrixXd::Zero(H, B);
  MatrixXd dc_carry = MatrixXd::Zero(H, B);
  MatrixXd dh(H, B);
  MatrixXd dc(H, B);

  for (Index t = T - 1; t >= 0; --t) {
    dh = dh_carry;
    if (last_only) {
      if (t == T - 1) dh += dh_out;
    } else {
      dh += dh_out.middleCols(t * B, B);
    }
    const auto gates = cache.gates.middleCols(t * B, B);
    const auto i = gates.topRows(H).array();
    const auto f = gates.middleRows(H, H).array();
    const auto g = gates.middleRows(2 * H, H).array();
    const auto o = gates.bottomRows(H).array();

    const auto tc = cache.tanh_c.middleCols(t * B, B);
    dc.array() = dc_carry.array() + dh.array() * o * (1.0 - tc.array().square());

    auto dzt = dz.middleCols(t * B, B);
    dzt.topRows(H).array() = dc.array() * g * i * (1.0 - i);
    if (t > 0) {
      dzt.middleRows(H, H).array() =
          dc.array() * cache.c.middleCols((t - 1) * B, B).array() * f * (1.0 - f);
    } else {
      dzt.middleRows(H, H).setZero();
    }
    dzt.middleRows(2 * H, H).array() = dc.array() * i * (1.0 - g.square());
    dzt.bottomRows(H).array() = dh.array() * tc.array() * o * (1.0 - o);

    const bool truncate =
        tbptt_chunk > 0 && (static_cast<std::size_t>(T - t) % tbptt_chunk) == 0;
    if (truncate) {
      dc_carry.setZero();
      dh_carry.setZero();
    } else {
      dc_carry.array() = dc.array() * f;
      dh_carry.noalias() = p.w_h.transpose() * dzt;
    }
  }

  grad.b += dz.rowwise().sum();
  grad.w_x.noalias() += dz * x.transpose();
  if (T > 1) {
    grad.w_h.noalias() +=
        dz.rightCols((T - 1) * B) * cache.h.leftCols((T - 1) * B).transpose();
  }
  if (dx != nullptr) dx->noalias() = p.w_x.transpose() * dz;
}

void fill_dropout_mask(MatrixXd& mask, Index rows, Index cols, double rate, CounterRng& rng) {
  mask.resize(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  double* data = mask.data();
  for (Index k = 0; k < mask.size(); ++k) {
    data[k] = rng.uniform() < rate ? 0.0 : keep_scale;
  }
}

void mix_bytes(std::uint64_t& h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::size_t k = 0;
  for (; k + 8 <= bytes; k += 8) {
    std::uint64_t word;
    std::memcpy(&word, p + k, 8);
    h = mix64(h ^ word) + kGoldenGamma;
  }
  for (; k < bytes; ++k) h = mix64(h ^ p[k]) + kGoldenGamma;
}

}  // namespace

LstmLayerParams LstmLayerParams::zeros(std::size_t input_size, std::size_t hidden) {
  const auto H = static_cast<Index>(hidden);
  return {MatrixXd::Zero(4 * H, static_cast<Index>(input_size)), MatrixXd::Zero(4 * H, H),
          VectorXd::Zero(4 * H)};
}

void LstmLayerParams::validate() const {
  const Index H = w_h.cols();
  if (H == 0 || w_h.rows() != 4 * H || w_x.rows() != 4 * H || b.size() != 4 * H ||
      w_x.cols() == 0) {
    throw ShapeError(fmt::format("inconsistent LSTM layer shapes: w_x {}x{}, w_h {}x{}, b {}",
                                 w_x.rows(), w_x.cols(), w_h.rows(), w_h.cols(), b.size()));
  }
}

CellState lstm_cell_step(const LstmLayerParams& params, std::span<const double> x,
                         std::span<const double> h_prev, std::span<const double> c_prev) {
  params.validate();
  const Index H = static_cast<Index>(params.hidden());
  if (x.size() != params.input_size() || h_prev.size() != params.hidden() ||
      c_prev.size() != params.hidden()) {
    throw ShapeError(fmt::format("cell expects x[{}], h[{}], c[{}]; got x[{}], h[{}], c[{}]",
                                 params.input_size(), H, H, x.size(), h_prev.size(),
                                 c_prev.size()));
  }
  const Eigen::Map<const VectorXd> xv(x.data(), static_cast<Index>(x.size()));
  const Eigen::Map<const VectorXd> hv(h_prev.data(), H);
  const Eigen::Map<const VectorXd> cv(c_prev.data(), H);

  VectorXd z = params.w_x * xv + params.w_h * hv + params.b;
  sigmoid_inplace(z.head(2 * H));
  tanh_inplace(z.segment(2 * H, H));
  sigmoid_inplace(z.tail(H));

  CellState out;
  out.c = z.segment(H, H).cwiseProduct(cv) + z.head(H).cwiseProduct(z.segment(2 * H, H));
  VectorXd tc = out.c;
  tanh_inplace(tc);
  out.h = z.tail(H).cwiseProduct(tc);
  return out;
}

void ModelParams::validate() const {
  layer1.validate();
  layer2.validate();
  const Index H = layer1.w_h.cols();
  if (layer1.input_size() != 1 || layer2.hidden() != layer1.hidden() ||
      layer2.input_size() != layer1.hidden() || dense_w.cols() != H ||
      dense_w.rows() != dense_b.size() || dense_b.size() == 0 || input_length == 0) {
    throw ShapeError("model tensors do not form a 1 -> H -> H -> Q stack");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
}

ModelParams zero_model(const ModelShape& shape) {
  if (shape.hidden == 0 || shape.horizon == 0 || shape.input_length == 0) {
    throw ShapeError("model dimensions must be positive");
  }
  ModelParams m;
  m.layer1 = LstmLayerParams::zeros(1, shape.hidden);
  m.layer2 = LstmLayerParams::zeros(shape.hidden, shape.hidden);
  m.dense_w = MatrixXd::Zero(static_cast<Index>(shape.horizon), static_cast<Index>(shape.hidden));
  m.dense_b = VectorXd::Zero(static_cast<Index>(shape.horizon));
  m.input_length = shape.input_length;
  return m;
}

ModelParams init_model(const ModelShape& shape, double dropout_rate, std::uint64_t seed) {
  ModelParams m = zero_model(shape);
  m.dropout_rate = dropout_rate;
  m.validate();
  CounterRng rng(seed);
  const double k = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  auto fill = [&](MatrixXd& w) {
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-k, k);
  };
  const Index H = static_cast<Index>(shape.hidden);
  for (LstmLayerParams* layer : {&m.layer1, &m.layer2}) {
    fill(layer->w_x);
    fill(layer->w_h);
    layer->b.segment(H, H).setOnes();
  }
  fill(m.dense_w);
  return m;
}

std::uint64_t fingerprint(const ModelParams& model) {
  std::uint64_t h = 0x6C6F616472627374ULL;
  for (auto view : tensor_views(model)) mix_bytes(h, view.data(), view.size_bytes());
  const double extras[] = {model.dropout_rate, model.scaler.min_mw(), model.scaler.max_mw(),
                           static_cast<double>(model.input_length)};
  mix_bytes(h, extras, sizeof(extras));
  return h;
}

void forward_batch(const ModelParams& model, const MatrixXd& inputs, Mode mode,
                   CounterRng& rng, ForwardCache& cache) {
  model.validate();
  if (static_cast<std::size_t>(inputs.rows()) != model.input_length || inputs.cols() == 0) {
    throw ShapeError(fmt::format("model expects {} input samples per column, got {}x{}",
                                 model.input_length, inputs.rows(), inputs.cols()));
  }
  check_finite(inputs, "model input");

  const Index T = inputs.rows();
  const Index B = inputs.cols();
  const Index H = static_cast<Index>(model.layer1.hidden());
  const bool train = mode == Mode::kTrain;
  const bool drop = train && model.dropout_rate > 0.0;

  cache.steps = static_cast<std::size_t>(T);
  cache.batch = static_cast<std::size_t>(B);
  cache.trainable = train;
  cache.model_fingerprint = train ? fingerprint(model) : 0;

  // Time-major layout: column t*B + b.
  cache.x1.resize(1, T * B);
  for (Index t = 0; t < T; ++t) cache.x1.middleCols(t * B, B) = inputs.row(t);

  run_layer(model.layer1, cache.x1, cache.steps, cache.batch, cache.layer1);
  if (drop) {
    fill_dropout_mask(cache.mask1, H, T * B, model.dropout_rate, rng);
    cache.x2 = cache.layer1.h.cwiseProduct(cache.mask1);
  } else {
    cache.mask1.resize(0, 0);
    cache.x2 = cache.layer1.h;
  }
  run_layer(model.layer2, cache.x2, cache.steps, cache.batch, cache.layer2);

  cache.head_input = cache.layer2.h.rightCols(B);
  if (drop) {
    fill_dropout_mask(cache.mask2, H, B, model.dropout_rate, rng);
    cache.head_input.array() *= cache.mask2.array();
  } else {
    cache.mask2.resize(0, 0);
  }
  cache.predictions.noalias() = model.dense_w * cache.head_input;
  cache.predictions.colwise() += model.dense_b;
}

ForwardCache forward_batch(const ModelParams& model, const MatrixXd& inputs, Mode mode,
                           CounterRng& rng) {
  ForwardCache cache;
  forward_batch(model, inputs, mode, rng, cache);
  if (mode == Mode::kInfer) {
    // Only the predictions survive an inference pass.
    cache.x1.resize(0, 0);
    cache.x2.resize(0, 0);
    cache.layer1 = {};
    cache.layer2 = {};
  }
  return cache;
}

ForwardResult forward(const ModelParams& model, std::span<const double> input, Mode mode,
                      CounterRng& rng) {
  const Eigen::Map<const MatrixXd> column(input.data(), static_cast<Index>(input.size()), 1);
  ForwardResult out;
  out.cache = forward_batch(model, column, mode, rng);
  out.prediction.assign(out.cache.predictions.data(),
                        out.cache.predictions.data() + out.cache.predictions.size());
  return out;
}

std::vector<double> predict_scaled(const ModelParams& model, std::span<const double> input) {
  CounterRng unused(0);
  return forward(model, input, Mode::kInfer, unused).prediction;
}

std::vector<double> predict_mw(const ModelParams& model, std::span<const double> input_mw) {
  const auto scaled = model.scaler.apply(input_mw);
  return model.scaler.invert(predict_scaled(model, scaled));
}

std::vector<std::vector<double>> predict_mw_batch(const ModelParams& model,
                                                  std::span<const std::vector<double>> inputs_mw,
                                                  std::size_t chunk) {
  if (chunk == 0) throw ConfigError("chunk must be positive");
  std::vector<std::vector<double>> out;
  out.reserve(inputs_mw.size());
  CounterRng unused(0);
  const Index T = static_cast<Index>(model.input_length);
  ForwardCache cache;
  for (std::size_t first = 0; first < inputs_mw.size(); first += chunk) {
    const std::size_t count = std::min(chunk, inputs_mw.size() - first);
    MatrixXd batch(T, static_cast<Index>(count));
    for (std::size_t b = 0; b < count; ++b) {
      const auto& window = inputs_mw[first + b];
      if (window.size() != model.input_length) {
        throw ShapeError(fmt::format("window {} has {} samples, model expects {}", first + b,
                                     window.size(), model.input_length));
      }
      for (Index t = 0; t < T; ++t) {
        batch(t, static_cast<Index>(b)) = model.scaler.apply(window[static_cast<std::size_t>(t)]);
      }
    }
    forward_batch(model, batch, Mode::kInfer, unused, cache);
    for (std::size_t b = 0; b < count; ++b) {
      std::vector<double> mw(static_cast<std::size_t>(cache.predictions.rows()));
      for (Index q = 0; q < cache.predictions.rows(); ++q) {
        mw[static_cast<std::size_t>(q)] =
            model.scaler.invert(cache.predictions(q, static_cast<Index>(b)));
      }
      out.push_back(std::move(mw));
    }
  }
  return out;
}

double mse_loss(std::span<const double> prediction, std::span<const double> target) {
  if (prediction.size() != target.size() || prediction.empty()) {
    throw ShapeError(fmt::format("mse_loss on lengths {} and {}", prediction.size(),
                                 target.size()));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < prediction.size(); ++k) {
    const double d = prediction[k] - target[k];
    sum += d * d;
  }
  return sum / static_cast<double>(prediction.size());
}

GradientSet GradientSet::zeros_like(const ModelParams& model) {
  const Index Q = model.dense_b.size();
  const Index H = model.dense_w.cols();
  return {LstmLayerParams::zeros(model.layer1.input_size(), model.layer1.hidden()),
          LstmLayerParams::zeros(model.layer2.input_size(), model.layer2.hidden()),
          MatrixXd::Zero(Q, H), VectorXd::Zero(Q)};
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  auto mine = tensor_views(*this);
  const auto theirs = tensor_views(other);
  for (std::size_t k = 0; k < mine.size(); ++k) {
    if (mine[k].size() != theirs[k].size()) throw ShapeError("gradient shapes differ");
    for (std::size_t j = 0; j < mine[k].size(); ++j) mine[k][j] += theirs[k][j];
  }
  return *this;
}

GradientSet& GradientSet::operator*=(double factor) {
  for (auto view : tensor_views(*this))
    for (double& v : view) v *= factor;
  return *this;
}

bool GradientSet::all_finite() const {
  for (auto view : tensor_views(*this))
    for (double v : view)
      if (!std::isfinite(v)) return false;
  return true;
}

double GradientSet::squared_norm() const {
  double sum = 0.0;
  for (auto view : tensor_views(*this))
    for (double v : view) sum += v * v;
  return sum;
}

void backward(const ModelParams& model, const ForwardCache& cache, const MatrixXd& targets,
              std::size_t tbptt_chunk, GradientSet& grad, BackwardScratch& scratch) {
  if (!cache.trainable) throw CacheError("cache was produced in inference mode");
  if (cache.model_fingerprint != fingerprint(model)) {
    throw CacheError("cache was produced by a different model state");
  }
  if (targets.rows() != cache.predictions.rows() || targets.cols() != cache.predictions.cols()) {
    throw ShapeError(fmt::format("targets {}x{} do not match predictions {}x{}", targets.rows(),
                                 targets.cols(), cache.predictions.rows(),
                                 cache.predictions.cols()));
  }

  const Index Q = targets.rows();
  grad = GradientSet::zeros_like(model);

  // d(sum_b mean_q (p - y)^2) / dp
  const MatrixXd dpred = (2.0 / static_cast<double>(Q)) * (cache.predictions - targets);
  grad.dense_w.noalias() = dpred * cache.head_input.transpose();
  grad.dense_b = dpred.rowwise().sum();

  MatrixXd dh2_last = model.dense_w.transpose() * dpred;
  if (cache.mask2.size() != 0) dh2_last.array() *= cache.mask2.array();

  backward_layer(model.layer2, cache.layer2, cache.x2, dh2_last, true, cache.steps, cache.batch,
                 tbptt_chunk, grad.layer2, &scratch.dx2, scratch.dz);
  if (cache.mask1.size() != 0) scratch.dx2.array() *= cache.mask1.array();
  backward_layer(model.layer1, cache.layer1, cache.x1, scratch.dx2, false, cache.steps,
                 cache.batch, tbptt_chunk, grad.layer1, nullptr, scratch.dz);
}

GradientSet backward(const ModelParams& model, const ForwardCache& cache,
                     const MatrixXd& targets, std::size_t tbptt_chunk) {
  GradientSet grad;
  BackwardScratch scratch;
  backward(model, cache, targets, tbptt_chunk, grad, scratch);
  return grad;
}

GradientSet backward(const ModelParams& model, const ForwardCache& cache,
                     std::span<const double> target, std::size_t tbptt_chunk) {
  const Eigen::Map<const MatrixXd> column(target.data(), static_cast<Index>(target.size()), 1);
  return backward(model, cache, MatrixXd(column), tbptt_chunk);
}

}  // namespace loadrobust
