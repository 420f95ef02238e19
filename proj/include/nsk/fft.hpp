#pragma once

// Mixed-radix complex FFT for sizes 2^a and 3*2^a. The dealiased product
// grids are 3N/2 with N a power of two, so a single radix-3 stage on top of
// an iterative radix-2 kernel covers every size this library ever creates.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace nsk {

using cd = std::complex<double>;

namespace detail {

// Forward twiddles exp(-2*pi*i*j/n), j < n, cached per size.
inline const std::vector<cd>& twiddles(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::vector<cd>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cd> tw(n);
    const double step = -2.0 * 3.14159265358979323846 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
        tw[j] = std::polar(1.0, step * static_cast<double>(j));
    return cache.emplace(n, std::move(tw)).first->second;
}

// In-place radix-2, n a power of two. sign=-1 forward, +1 inverse (no scaling).
inline void fft_pow2(cd* a, std::size_t n, int sign) {
    const auto& tw = twiddles(n);
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1, step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                cd w = tw[k * step];
                if (sign > 0) w = std::conj(w);
                cd u = a[i + k], v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

inline bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

// n = 2^a or 3*2^a; unscaled DFT with kernel exp(sign*2*pi*i*jk/n).
inline void fft_inplace(cd* a, std::size_t n, int sign) {
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_pow2(a, n, sign);
        return;
    }
    if (n % 3 != 0 || !is_pow2(n / 3))
        throw std::invalid_argument("fft: size must be 2^a or 3*2^a");
    const std::size_t m = n / 3;
    std::vector<cd> y0(m), y1(m), y2(m);
    for (std::size_t k = 0; k < m; ++k) {
        y0[k] = a[3 * k];
        y1[k] = a[3 * k + 1];
        y2[k] = a[3 * k + 2];
    }
    fft_pow2(y0.data(), m, sign);
    fft_pow2(y1.data(), m, sign);
    fft_pow2(y2.data(), m, sign);
    const auto& tw = twiddles(n);
    auto w = [&](std::size_t j) {
        cd t = tw[j % n];
        return sign > 0 ? std::conj(t) : t;
    };
    for (std::size_t q = 0; q < m; ++q) {
        for (std::size_t r = 0; r < 3; ++r) {
            const std::size_t k = q + r * m;
            a[k] = y0[q] + w(k) * y1[q] + w(2 * k) * y2[q];
        }
    }
}

// d-dimensional transform over a flat row-major array with equal extent per
// axis. Unscaled; callers own the normalization convention.
inline void fft_nd(cd* data, int d, std::size_t n, int sign) {
    const std::size_t total = [&] {
        std::size_t t = 1;
        for (int i = 0; i < d; ++i) t *= n;
        return t;
    }();
    std::vector<cd> line(n);
    for (int axis = 0; axis < d; ++axis) {
        std::size_t stride = 1;
        for (int i = axis + 1; i < d; ++i) stride *= n;
        const std::size_t block = stride * n;
        for (std::size_t base = 0; base < total; base += block) {
            for (std::size_t off = 0; off < stride; ++off) {
                cd* p = data + base + off;
                for (std::size_t k = 0; k < n; ++k) line[k] = p[k * stride];
                fft_inplace(line.data(), n, sign);
                for (std::size_t k = 0; k < n; ++k) p[k * stride] = line[k];
            }
        }
    }
}

}  // namespace detail
}  // namespace nsk
