#include "symdisc/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace symdisc {

struct RealFFT::Impl {
  fftw_plan fwd = nullptr, inv = nullptr;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
};

RealFFT::RealFFT(std::vector<int> shape) : shape_(std::move(shape)), impl_(std::make_unique<Impl>()) {
  if (shape_.empty()) throw std::invalid_argument("RealFFT: empty shape");
  real_size_ = 1;
  for (int n : shape_) {
    if (n < 1) throw std::invalid_argument("RealFFT: bad axis length");
    real_size_ *= static_cast<std::size_t>(n);
  }
  complex_size_ = real_size_ / shape_.back() * (shape_.back() / 2 + 1);
  impl_->rbuf = fftw_alloc_real(real_size_);
  impl_->cbuf = fftw_alloc_complex(complex_size_);
  const int rank = static_cast<int>(shape_.size());
  impl_->fwd = fftw_plan_dft_r2c(rank, shape_.data(), impl_->rbuf, impl_->cbuf, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r(rank, shape_.data(), impl_->cbuf, impl_->rbuf, FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->inv) throw std::runtime_error("RealFFT: plan creation failed");
}

RealFFT::~RealFFT() {
  if (impl_) {
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->inv) fftw_destroy_plan(impl_->inv);
    fftw_free(impl_->rbuf);
    fftw_free(impl_->cbuf);
  }
}

void RealFFT::forward(const double* in, std::complex<double>* out) {
  std::memcpy(impl_->rbuf, in, real_size_ * sizeof(double));
  fftw_execute(impl_->fwd);
  std::memcpy(static_cast<void*>(out), impl_->cbuf, complex_size_ * sizeof(fftw_complex));
}

void RealFFT::inverse(const std::complex<double>* in, double* out) {
  // c2r destroys its input, hence the copy
  std::memcpy(impl_->cbuf, static_cast<const void*>(in), complex_size_ * sizeof(fftw_complex));
  fftw_execute(impl_->inv);
  const double scale = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < real_size_; ++i) out[i] = impl_->rbuf[i] * scale;
}

std::vector<double> wavenumbers(int n, double length, bool half) {
  const int count = half ? n / 2 + 1 : n;
  std::vector<double> k(count);
  const double base = 2.0 * M_PI / length;
  for (int i = 0; i < count; ++i) k[i] = base * (i <= n / 2 ? i : i - n);
  // the Nyquist entry carries +n/2 in both layouts
  return k;
}

void spectral_derivative_axis(std::vector<double>& data, const std::vector<int>& shape, int axis, int order,
                              double length) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) throw std::invalid_argument("bad axis");
  if (order == 0) return;
  const int n = shape[axis];
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  if (data.size() != outer * n * inner) throw std::invalid_argument("spectral_derivative_axis: size mismatch");

  const int nc = n / 2 + 1;
  double* rbuf = fftw_alloc_real(static_cast<std::size_t>(n) * inner);
  fftw_complex* cbuf = fftw_alloc_complex(static_cast<std::size_t>(nc) * inner);
  const int howmany = static_cast<int>(inner);
  const int istride = howmany;
  fftw_plan fwd = fftw_plan_many_dft_r2c(1, &n, howmany, rbuf, nullptr, istride, 1, cbuf, nullptr, istride, 1,
                                         FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_many_dft_c2r(1, &n, howmany, cbuf, nullptr, istride, 1, rbuf, nullptr, istride, 1,
                                         FFTW_ESTIMATE);

  const auto k = wavenumbers(n, length, true);
  std::vector<std::complex<double>> mult(nc);
  for (int i = 0; i < nc; ++i) {
    mult[i] = std::pow(std::complex<double>(0.0, k[i]), order) / static_cast<double>(n);
    if (n % 2 == 0 && i == n / 2 && order % 2 == 1) mult[i] = 0.0;
  }

  const std::size_t block = static_cast<std::size_t>(n) * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    double* src = data.data() + o * block;
    std::memcpy(rbuf, src, block * sizeof(double));
    fftw_execute(fwd);
    for (int i = 0; i < nc; ++i)
      for (std::size_t j = 0; j < inner; ++j) {
        auto* c = reinterpret_cast<std::complex<double>*>(cbuf[i * inner + j]);
        *c *= mult[i];
      }
    fftw_execute(inv);
    std::memcpy(src, rbuf, block * sizeof(double));
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(inv);
  fftw_free(rbuf);
  fftw_free(cbuf);
}

SpectralBox::SpectralBox(std::vector<int> shape_, std::vector<double> lengths_)
    : shape(std::move(shape_)), lengths(std::move(lengths_)) {
  if (shape.size() != lengths.size()) throw std::invalid_argument("SpectralBox: shape/length mismatch");
  const std::size_t d = shape.size();
  std::vector<int> cshape = shape;
  cshape.back() = shape.back() / 2 + 1;
  std::size_t total = 1;
  for (int n : cshape) total *= n;
  k.assign(d, std::vector<double>(total));
  dealias.assign(total, 1.0);
  k2.assign(total, 0.0);
  std::vector<std::vector<double>> axis_k(d);
  for (std::size_t a = 0; a < d; ++a) axis_k[a] = wavenumbers(shape[a], lengths[a], a + 1 == d);
  std::vector<int> idx(d, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t a = 0; a < d; ++a) {
      const double ka = axis_k[a][idx[a]];
      k[a][flat] = ka;
      k2[flat] += ka * ka;
      const double kmax = M_PI * shape[a] / lengths[a];
      if (std::abs(ka) > 2.0 / 3.0 * kmax) dealias[flat] = 0.0;
    }
    for (int a = static_cast<int>(d) - 1; a >= 0; --a) {
      if (++idx[a] < cshape[a]) break;
      idx[a] = 0;
    }
  }
}

}  // namespace symdisc
