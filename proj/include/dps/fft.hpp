#pragma once

#include <complex>
#include <cstring>
#include <memory>
#include <span>
#include <vector>

#include <fftw3.h>

#include "dps/error.hpp"

namespace dps {

/// Real-to-complex transform pair of fixed length, backed by FFTW. Plans use
/// FFTW_ESTIMATE so results do not depend on timing measurements. The inverse
/// is normalized, so inverse(forward(x)) == x up to rounding.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        if (n < 2) {
            fail(ErrorKind::invalid_input, "transform length must be >= 2");
        }
        real_.reset(fftw_alloc_real(n));
        spec_.reset(fftw_alloc_complex(bins()));
        if (!real_ || !spec_) {
            throw std::bad_alloc();
        }
        const int len = static_cast<int>(n);
        forward_ = fftw_plan_dft_r2c_1d(len, real_.get(), spec_.get(), FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_1d(len, spec_.get(), real_.get(), FFTW_ESTIMATE);
    }

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    ~RealFft() {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t bins() const noexcept { return n_ / 2 + 1; }

    [[nodiscard]] std::vector<std::complex<double>> forward(std::span<const double> x) {
        if (x.size() != n_) {
            fail(ErrorKind::invalid_input, "forward transform input has the wrong length");
        }
        std::memcpy(real_.get(), x.data(), n_ * sizeof(double));
        fftw_execute(forward_);
        std::vector<std::complex<double>> out(bins());
        std::memcpy(static_cast<void*>(out.data()), spec_.get(), bins() * sizeof(fftw_complex));
        return out;
    }

    /// Hermitian extension is implicit: only the non-negative bins are given.
    [[nodiscard]] std::vector<double> inverse(std::span<const std::complex<double>> spectrum) {
        if (spectrum.size() != bins()) {
            fail(ErrorKind::invalid_input, "inverse transform input has the wrong length");
        }
        std::memcpy(static_cast<void*>(spec_.get()), spectrum.data(), bins() * sizeof(fftw_complex));
        // c2r ignores the imaginary parts of DC and Nyquist, matching a real signal.
        fftw_execute(inverse_);
        std::vector<double> out(real_.get(), real_.get() + n_);
        const double scale = 1.0 / static_cast<double>(n_);
        for (double& v : out) {
            v *= scale;
        }
        return out;
    }

private:
    struct FftwFree {
        void operator()(void* p) const noexcept { fftw_free(p); }
    };

    std::size_t n_;
    std::unique_ptr<double, FftwFree> real_;
    std::unique_ptr<fftw_complex, FftwFree> spec_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

}  // namespace dps
