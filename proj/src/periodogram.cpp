#include "imlab/periodogram.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "imlab/fft.hpp"

namespace imlab {

PeriodogramGrid::PeriodogramGrid(int omega_count) : count_(omega_count) {
  if (omega_count < 2) throw std::invalid_argument("PeriodogramGrid: need >= 2 points");
  omegas_.resize(count_);
  sin_table_.resize(count_);
  for (int g = 0; g < count_; ++g) {
    omegas_[g] = 2.0 * std::numbers::pi * static_cast<double>(g + 1) / count_;
    sin_table_[g] = std::sin(2.0 * std::numbers::pi * static_cast<double>(g) / count_);
  }
}

double PeriodogramGrid::raw_periodogram(std::span<const double> v, double omega) {
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double phase = -omega * static_cast<double>(j + 1);
    acc += v[j] * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return std::norm(acc) / static_cast<double>(v.size());
}

std::vector<double> PeriodogramGrid::integrated_periodogram(
    std::span<const double> v) const {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("integrated_periodogram: empty orbit");
  const std::vector<double> c = autocovariance_fft(v);

  // Fold c_k / k onto grid residues.
  std::vector<double> folded(count_, 0.0);
  for (std::size_t k = 1; k < n; ++k)
    folded[k % static_cast<std::size_t>(count_)] += c[k] / static_cast<double>(k);

  std::vector<double> j(count_);
  for (int g = 0; g < count_; ++g) {
    double acc = 0.0;
    std::size_t idx = 0;  // (g+1)*r mod count, advanced incrementally
    const std::size_t step = static_cast<std::size_t>(g + 1) % count_;
    for (int r = 0; r < count_; ++r) {
      acc += sin_table_[idx] * folded[r];
      idx += step;
      if (idx >= static_cast<std::size_t>(count_)) idx -= count_;
    }
    j[g] = c[0] * omegas_[g] + 2.0 * acc;
  }
  return j;
}

double PeriodogramGrid::integrated_periodogram_at(std::span<const double> v,
                                                  double omega) {
  const std::vector<double> c = autocovariance_fft(v);
  double acc = 0.0;
  for (std::size_t k = 1; k < v.size(); ++k)
    acc += std::sin(omega * static_cast<double>(k)) / static_cast<double>(k) * c[k];
  return c[0] * omega + 2.0 * acc;
}

std::vector<double> PeriodogramGrid::spectral_target(
    const CovarianceSeries& series) const {
  std::vector<double> j(count_);
  for (int g = 0; g < count_; ++g) {
    const double w = omegas_[g];
    double acc = 0.0;
    for (int k = 1; k <= series.lag_max(); ++k)
      acc += std::sin(w * k) / static_cast<double>(k) * series.values[k];
    j[g] = series.values[0] * w + 2.0 * acc;
  }
  return j;
}

}  // namespace imlab
