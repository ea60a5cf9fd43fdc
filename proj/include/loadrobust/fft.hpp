#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace loadrobust {

using Complex = std::complex<double>;

// Exact-length discrete Fourier transform. Lengths whose prime factors are all
// <= kMaxDirectRadix use recursive mixed-radix Cooley-Tukey; any other length
// goes through Bluestein's chirp-z convolution on a power-of-two transform.
// No zero padding is visible to the caller: bin k always means k / (n dt).
class FftPlan {
 public:
  static constexpr std::size_t kMaxDirectRadix = 31;

  explicit FftPlan(std::size_t n);
  ~FftPlan();
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;

  std::size_t size() const noexcept { return n_; }
  bool uses_bluestein() const noexcept { return inner_ != nullptr; }

  // X[k] = sum_j x[j] exp(-2 pi i j k / n)
  std::vector<Complex> forward(std::span<const Complex> input) const;
  // x[j] = (1/n) sum_k X[k] exp(+2 pi i j k / n)
  std::vector<Complex> inverse(std::span<const Complex> input) const;

 private:
  void mixed_radix(const Complex* in, std::size_t stride, Complex* out, std::size_t n,
                   std::size_t level) const;
  std::vector<Complex> bluestein(std::span<const Complex> input) const;

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<Complex> twiddles_;  // exp(-2 pi i k / n), k < n

  std::unique_ptr<FftPlan> inner_;  // power-of-two plan for Bluestein
  std::vector<Complex> chirp_;      // exp(-i pi k^2 / n)
  std::vector<Complex> kernel_fft_;
};

std::vector<std::size_t> prime_factors(std::size_t n);

}  // namespace loadrobust
