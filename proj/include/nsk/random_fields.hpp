#pragma once

// Seeded random smooth test fields: power-law/exponential spectra
// |xi|^{-gamma} e^{-|xi|/xi_c} with uniform random phases, Hermitian so the
// physical samples are real, zero mean. Same seed, same field, every run.

#include <cstdint>
#include <random>

#include "nsk/field.hpp"

namespace nsk {

struct SpectrumShape {
    double gamma = 2.0;   // power-law slope, useful range [1, 3]
    double xi_c = 8.0;    // exponential cutoff
    double amplitude = 1.0;
};

namespace detail {

inline void fill_hermitian(SpectralField& f, std::mt19937_64& rng,
                           const std::function<double(double)>& radial) {
    const Grid& g = f.grid();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        std::size_t j = g.conj_index(i);
        if (j < i) continue;  // pair already visited
        double r = std::sqrt(g.xi_sq(i));
        double mag = radial(r);
        double phase = 2.0 * 3.14159265358979323846 * unif(rng);
        double jitter = 0.5 + unif(rng);  // decorrelates magnitudes across modes
        cd v = std::polar(mag * jitter, phase);
        if (j == i) {
            f.coeff(i) = cd(v.real(), 0.0);  // self-paired modes must be real
        } else {
            f.coeff(i) = v;
            f.coeff(j) = std::conj(v);
        }
    }
    f.set_mean(0.0);
}

}  // namespace detail

inline SpectralField random_field(const Grid& g, std::uint64_t seed, SpectrumShape shape = {}) {
    SpectralField f(g);
    std::mt19937_64 rng(seed);
    detail::fill_hermitian(f, rng, [&](double r) {
        return shape.amplitude * std::pow(r, -shape.gamma) * std::exp(-r / shape.xi_c);
    });
    return f;
}

inline VectorField random_vector_field(const Grid& g, std::uint64_t seed, SpectrumShape shape = {}) {
    VectorField u(g);
    for (int a = 0; a < g.dim(); ++a)
        u[a] = random_field(g, seed * 1000003ULL + static_cast<std::uint64_t>(a) + 1, shape);
    return u;
}

// Band-limited data: Gaussian amplitudes on shells k_lo <= |k|_inf <= k_hi,
// rescaled so the physical sup-norm equals `amplitude`. Entire as a function,
// hence convenient analytic initial data.
inline SpectralField band_limited_field(const Grid& g, std::uint64_t seed, int k_lo, int k_hi,
                                        double amplitude) {
    SpectralField f(g);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        std::size_t j = g.conj_index(i);
        if (j < i) continue;
        auto idx = g.unflatten(i);
        int kinf = 0;
        for (int axis = 0; axis < g.dim(); ++axis)
            kinf = std::max(kinf, std::abs(g.freq_int(idx[axis])));
        if (kinf < k_lo || kinf > k_hi) continue;
        cd v = std::polar(std::abs(gauss(rng)), 2.0 * 3.14159265358979323846 * unif(rng));
        if (j == i) {
            f.coeff(i) = cd(v.real(), 0.0);
        } else {
            f.coeff(i) = v;
            f.coeff(j) = std::conj(v);
        }
    }
    f.set_mean(0.0);
    double sup = lp_norm(f, std::numeric_limits<double>::infinity());
    if (sup > 0.0) f *= cd(amplitude / sup, 0.0);
    return f;
}

inline VectorField band_limited_vector_field(const Grid& g, std::uint64_t seed, int k_lo, int k_hi,
                                             double amplitude) {
    VectorField u(g);
    for (int a = 0; a < g.dim(); ++a)
        u[a] = band_limited_field(g, seed * 2000029ULL + static_cast<std::uint64_t>(a) + 1, k_lo,
                                  k_hi, amplitude);
    return u;
}

}  // namespace nsk
