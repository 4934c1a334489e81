#include "fracwave/fft.hpp"

#include <stdexcept>
#include <unsupported/Eigen/FFT>

namespace fracwave {

struct RealFft::Impl {
    Eigen::FFT<double> engine;
    std::vector<double> real_buf;
    std::vector<cplx> cplx_buf;
};

RealFft::RealFft(int n) : n_(n), impl_(std::make_unique<Impl>()) {
    if (n < 2 || n % 2 != 0) {
        throw std::invalid_argument("RealFft: size must be even and >= 2");
    }
    impl_->engine.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    impl_->engine.SetFlag(Eigen::FFT<double>::Unscaled);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> values, std::vector<cplx>& modes) {
    if (static_cast<int>(values.size()) != n_) {
        throw std::invalid_argument("RealFft::forward: size mismatch");
    }
    impl_->real_buf.assign(values.begin(), values.end());
    impl_->engine.fwd(modes, impl_->real_buf);
    modes.resize(n_ / 2 + 1);
    const double scale = 1.0 / n_;
    for (auto& m : modes) m *= scale;
}

void RealFft::inverse(std::span<const cplx> modes, std::vector<double>& values) {
    if (static_cast<int>(modes.size()) != n_ / 2 + 1) {
        throw std::invalid_argument("RealFft::inverse: size mismatch");
    }
    impl_->cplx_buf.assign(modes.begin(), modes.end());
    // Imaginary parts of the mean and Nyquist modes have no real counterpart.
    impl_->cplx_buf.front().imag(0.0);
    impl_->cplx_buf.back().imag(0.0);
    impl_->engine.inv(values, impl_->cplx_buf, n_);
}

std::vector<cplx> RealFft::forward(std::span<const double> values) {
    std::vector<cplx> out;
    forward(values, out);
    return out;
}

std::vector<double> RealFft::inverse(std::span<const cplx> modes) {
    std::vector<double> out;
    inverse(modes, out);
    return out;
}

std::vector<cplx> resize_spectrum(std::span<const cplx> modes, int n, int m) {
    std::vector<cplx> out(m / 2 + 1, cplx{0.0, 0.0});
    if (m == n) {
        out.assign(modes.begin(), modes.end());
    } else if (m > n) {
        for (int k = 0; k < n / 2; ++k) out[k] = modes[k];
        out[n / 2] = 0.5 * cplx{modes[n / 2].real(), 0.0};
    } else {
        for (int k = 0; k < m / 2; ++k) out[k] = modes[k];
        out[m / 2] = cplx{2.0 * modes[m / 2].real(), 0.0};
    }
    return out;
}

}  // namespace fracwave
