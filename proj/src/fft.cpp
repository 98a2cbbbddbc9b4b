#include "imlab/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace imlab {

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_inplace: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> t = a[i + k + len / 2] * w;
        a[i + k] = u + t;
        a[i + k + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

std::vector<double> autocovariance_fft(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return {};
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<std::complex<double>> a(m, 0.0);
  for (std::size_t j = 0; j < n; ++j) a[j] = v[j];
  fft_inplace(a, false);
  for (auto& x : a) x = std::complex<double>(std::norm(x), 0.0);
  fft_inplace(a, true);
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = a[k].real() / static_cast<double>(n);
  return c;
}

std::vector<double> autocovariance_direct(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j + k < n; ++j) acc += v[j] * v[j + k];
    c[k] = acc / static_cast<double>(n);
  }
  return c;
}

}  // namespace imlab
