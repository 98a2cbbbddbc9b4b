#pragma once

#include <complex>
#include <span>
#include <vector>

namespace imlab {

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

/// Uncentered empirical autocovariances c_k = (1/n) sum_{j<n-k} v_j v_{j+k}
/// for k = 0..n-1, via a zero-padded FFT (O(n log n)).
std::vector<double> autocovariance_fft(std::span<const double> v);

/// Direct O(n^2) reference of the same quantity, for cross-checks.
std::vector<double> autocovariance_direct(std::span<const double> v);

}  // namespace imlab
