#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

#include "quenchmap/core.hpp"

namespace quenchmap {

inline bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

// Iterative radix-2 transform with precomputed twiddles and bit-reversal
// permutation. Grids here are pinned to powers of two, so this covers every
// case the propagators need and stays deterministic across runs.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (!is_power_of_two(n))
            throw validation_error("fft size must be a power of two >= 2, got " +
                                   std::to_string(n));
        rev_.resize(n);
        std::size_t log2n = 0;
        while ((std::size_t{1} << log2n) < n) ++log2n;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t bit = 0; bit < log2n; ++bit)
                if (i & (std::size_t{1} << bit)) r |= std::size_t{1} << (log2n - 1 - bit);
            rev_[i] = r;
        }
        twiddle_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                                 static_cast<double>(n);
            twiddle_[k] = complex{std::cos(angle), std::sin(angle)};
        }
    }

    std::size_t size() const { return n_; }

    // DFT with e^{-i 2 pi j k / n} kernel, no scaling.
    void forward(complex* a) const { transform(a, false); }

    // Inverse transform including the 1/n factor.
    void inverse(complex* a) const {
        transform(a, true);
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t j = 0; j < n_; ++j) a[j] *= scale;
    }

private:
    void transform(complex* a, bool conjugate) const {
        for (std::size_t i = 0; i < n_; ++i)
            if (rev_[i] > i) std::swap(a[i], a[rev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    complex w = twiddle_[k * stride];
                    if (conjugate) w = std::conj(w);
                    complex& lo = a[start + k];
                    complex& hi = a[start + k + len / 2];
                    const complex t = hi * w;
                    hi = lo - t;
                    lo += t;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::size_t> rev_;
    std::vector<complex> twiddle_;
};

// Angular wavenumbers in FFT bin order: k_j = 2 pi j / L for j < n/2,
// then the negative branch.
inline std::vector<double> fft_wavenumbers(const Grid& grid) {
    const double base = 2.0 * std::numbers::pi / grid.length();
    std::vector<double> k(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) {
        const auto sj = static_cast<std::ptrdiff_t>(j);
        const auto half = static_cast<std::ptrdiff_t>(grid.n / 2);
        const auto idx = sj < half ? sj : sj - static_cast<std::ptrdiff_t>(grid.n);
        k[j] = base * static_cast<double>(idx);
    }
    return k;
}

} // namespace quenchmap
