#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace fracwave {

using cplx = std::complex<double>;

/// Real <-> half-spectrum transform of a fixed size.
///
/// Forward output holds modes k = 0..n/2 normalized so that
/// values[j] = sum_k modes[k] exp(2 pi i j k / n) over the full conjugate-symmetric
/// spectrum (i.e. modes are 1/n times the raw DFT).  One instance per thread.
class RealFft {
public:
    explicit RealFft(int n);
    ~RealFft();
    RealFft(RealFft&&) noexcept;
    RealFft& operator=(RealFft&&) noexcept;

    int size() const { return n_; }

    void forward(std::span<const double> values, std::vector<cplx>& modes);
    void inverse(std::span<const cplx> modes, std::vector<double>& values);

    std::vector<cplx> forward(std::span<const double> values);
    std::vector<double> inverse(std::span<const cplx> modes);

private:
    struct Impl;
    int n_;
    std::unique_ptr<Impl> impl_;
};

/// Re-size a half spectrum from an n-point grid to an m-point grid (zero padding or
/// truncation).  The Nyquist coefficient of the smaller grid is treated as a cosine,
/// i.e. split evenly between +n/2 and -n/2 when padding and folded when truncating.
std::vector<cplx> resize_spectrum(std::span<const cplx> modes, int n, int m);

}  // namespace fracwave
