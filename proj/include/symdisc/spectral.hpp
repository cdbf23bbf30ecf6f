#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace symdisc {

// Real-to-complex FFT on a row-major periodic box. forward() is unnormalized,
// inverse() divides by the number of points. The last axis is halved (n/2+1).
class RealFFT {
 public:
  explicit RealFFT(std::vector<int> shape);
  ~RealFFT();
  RealFFT(const RealFFT&) = delete;
  RealFFT& operator=(const RealFFT&) = delete;

  const std::vector<int>& shape() const { return shape_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  void forward(const double* in, std::complex<double>* out);
  // Does not modify `in`.
  void inverse(const std::complex<double>* in, double* out);

 private:
  struct Impl;
  std::vector<int> shape_;
  std::size_t real_size_ = 0, complex_size_ = 0;
  std::unique_ptr<Impl> impl_;
};

// Angular wavenumbers 2*pi*k/L in FFT order; with half = true only the first n/2+1.
std::vector<double> wavenumbers(int n, double length, bool half = false);

// Derivative of the given order along one axis of a row-major array, periodic on that axis.
// The Nyquist mode is dropped for odd orders.
void spectral_derivative_axis(std::vector<double>& data, const std::vector<int>& shape, int axis, int order,
                              double length);

// Spectral wavenumber grid helpers for periodic solvers: k along each axis in r2c layout.
struct SpectralBox {
  std::vector<int> shape;
  std::vector<double> lengths;
  // Per complex coefficient, the wavenumber component along each axis.
  std::vector<std::vector<double>> k;
  // 2/3-rule mask (1 keep, 0 drop), per complex coefficient.
  std::vector<double> dealias;
  std::vector<double> k2;  // |k|^2

  SpectralBox(std::vector<int> shape, std::vector<double> lengths);
  std::size_t complex_size() const { return k2.size(); }
};

}  // namespace symdisc
