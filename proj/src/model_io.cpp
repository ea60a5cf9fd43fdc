#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "loadrobust/errors.hpp"
#include "loadrobust/lstm.hpp"

namespace loadrobust {

namespace {

constexpr char kMagic[8] = {'L', 'R', 'L', 'S', 'T', 'M', '\0', '\n'};
constexpr char kGateOrder[4] = {'i', 'f', 'g', 'o'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) f64(m.data()[k]);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  void bytes(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int k = 0; k < width; ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + k])) << (8 * k);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  double f64() { return std::bit_cast<double>(u64()); }

  Eigen::MatrixXd matrix(std::uint64_t rows, std::uint64_t cols, const char* name) {
    const std::uint64_t r = u64();
    const std::uint64_t c = u64();
    if (r != rows || c != cols) {
      throw FormatError(fmt::format("tensor {} is {}x{}, shape header implies {}x{}", name, r, c,
                                    rows, cols));
    }
    need(r * c * 8);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = f64();
    return m;
  }

  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > in_.size() - pos_) throw FormatError("truncated model file");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string save_model(const ModelParams& model) {
  model.validate();
  const ModelShape shape = model.shape();
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(ModelParams::kFormatVersion);
  w.bytes(kGateOrder, sizeof(kGateOrder));
  w.u64(shape.input_length);
  w.u64(model.layer1.input_size());
  w.u64(shape.hidden);
  w.u64(shape.horizon);
  w.f64(model.dropout_rate);
  w.f64(model.scaler.min_mw());
  w.f64(model.scaler.max_mw());
  for (const LstmLayerParams* layer : {&model.layer1, &model.layer2}) {
    w.matrix(layer->w_x);
    w.matrix(layer->w_h);
    w.matrix(layer->b);
  }
  w.matrix(model.dense_w);
  w.matrix(model.dense_b);
  return w.take();
}

ModelParams load_model(std::string_view bytes) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("bad magic");
  const std::uint32_t version = r.u32();
  if (version != ModelParams::kFormatVersion) {
    throw FormatError(fmt::format("unsupported version {}", version));
  }
  char gates[4];
  r.bytes(gates, sizeof(gates));
  if (std::memcmp(gates, kGateOrder, sizeof(kGateOrder)) != 0) {
    throw FormatError("unsupported gate order");
  }
  const std::uint64_t input_length = r.u64();
  const std::uint64_t input_size = r.u64();
  const std::uint64_t hidden = r.u64();
  const std::uint64_t horizon = r.u64();
  constexpr std::uint64_t kMaxDim = 1u << 20;
  if (input_size != 1 || hidden == 0 || horizon == 0 || input_length == 0 ||
      hidden > kMaxDim || horizon > kMaxDim || input_length > kMaxDim) {
    throw FormatError("invalid shape header");
  }
  const double dropout = r.f64();
  const double lo = r.f64();
  const double hi = r.f64();

  ModelParams m;
  m.input_length = input_length;
  m.dropout_rate = dropout;
  try {
    m.scaler = Scaler(lo, hi);
  } catch (const DegenerateScaleError&) {
    throw FormatError("invalid scaler range");
  }
  const std::uint64_t g = 4 * hidden;
  m.layer1.w_x = r.matrix(g, input_size, "layer1.w_x");
  m.layer1.w_h = r.matrix(g, hidden, "layer1.w_h");
  m.layer1.b = r.matrix(g, 1, "layer1.b");
  m.layer2.w_x = r.matrix(g, hidden, "layer2.w_x");
  m.layer2.w_h = r.matrix(g, hidden, "layer2.w_h");
  m.layer2.b = r.matrix(g, 1, "layer2.b");
  m.dense_w = r.matrix(horizon, hidden, "dense_w");
  m.dense_b = r.matrix(horizon, 1, "dense_b");
  if (!r.done()) throw FormatError("trailing bytes after model tensors");
  try {
    m.validate();
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  for (auto view : tensor_views(m))
    for (double v : view)
      if (!std::isfinite(v)) throw FormatError("non-finite weight");
  return m;
}

}  // namespace loadrobust
