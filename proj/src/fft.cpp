#include "loadrobust/fft.hpp"

#include <algorithm>
#include <numbers>

#include <fmt/format.h>

#include "loadrobust/errors.hpp"

namespace loadrobust {

namespace {

// exp(-2 pi i num / den) with the angle reduced before the trig call.
Complex unit_root(std::size_t num, std::size_t den) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(num % den) /
                       static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

std::vector<std::size_t> prime_factors(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      out.push_back(p);
      n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw EmptyInputError("FFT length must be positive");
  factors_ = prime_factors(n);
  twiddles_.resize(n);
  for (std::size_t k = 0; k < n; ++k) twiddles_[k] = unit_root(k, n);

  const bool direct = factors_.empty() || factors_.back() <= kMaxDirectRadix;
  if (direct) return;

  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  inner_ = std::make_unique<FftPlan>(m);
  chirp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // exp(-i pi k^2 / n) == unit_root(k^2 mod 2n, 2n)
    chirp_[k] = unit_root((k * k) % (2 * n), 2 * n);
  }
  std::vector<Complex> kernel(m, Complex{});
  kernel[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    kernel[k] = std::conj(chirp_[k]);
    kernel[m - k] = std::conj(chirp_[k]);
  }
  kernel_fft_ = inner_->forward(kernel);
}

FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

void FftPlan::mixed_radix(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                          std::size_t level) const {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t p = factors_[level];
  const std::size_t m = n / p;
  for (std::size_t q = 0; q < p; ++q) {
    mixed_radix(in + q * stride, stride * p, out + q * m, m, level + 1);
  }

  // Twiddle table steps: W_n^x = twiddles_[x * (N / n)], W_p^x = twiddles_[x * (N / p)].
  const std::size_t n_step = n_ / n;
  const std::size_t p_step = n_ / p;
  Complex scratch[kMaxDirectRadix];
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t q = 0; q < p; ++q) {
      scratch[q] = out[k + q * m] * twiddles_[(q * k * n_step) % n_];
    }
    for (std::size_t s = 0; s < p; ++s) {
      Complex acc = scratch[0];
      for (std::size_t q = 1; q < p; ++q) acc += scratch[q] * twiddles_[((q * s) % p) * p_step];
      out[k + s * m] = acc;
    }
  }
}

std::vector<Complex> FftPlan::bluestein(std::span<const Complex> input) const {
  const std::size_t m = inner_->size();
  std::vector<Complex> a(m, Complex{});
  for (std::size_t k = 0; k < n_; ++k) a[k] = input[k] * chirp_[k];
  std::vector<Complex> spectrum = inner_->forward(a);
  for (std::size_t k = 0; k < m; ++k) spectrum[k] *= kernel_fft_[k];
  const std::vector<Complex> conv = inner_->inverse(spectrum);
  std::vector<Complex> out(n_);
  for (std::size_t k = 0; k < n_; ++k) out[k] = conv[k] * chirp_[k];
  return out;
}

std::vector<Complex> FftPlan::forward(std::span<const Complex> input) const {
  if (input.size() != n_) {
    throw ShapeError(fmt::format("FFT plan of length {} given {} samples", n_, input.size()));
  }
  if (inner_) return bluestein(input);
  std::vector<Complex> out(n_);
  mixed_radix(input.data(), 1, out.data(), n_, 0);
  return out;
}

std::vector<Complex> FftPlan::inverse(std::span<const Complex> input) const {
  std::vector<Complex> conj_in(input.begin(), input.end());
  for (auto& v : conj_in) v = std::conj(v);
  std::vector<Complex> out = forward(conj_in);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : out) v = std::conj(v) * scale;
  return out;
}

}  // namespace loadrobust
