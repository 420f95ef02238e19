#pragma once
// Brute-force reference integrators used only by the test suite.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Vec = std::vector<cd>;

template <class F>
Vec rk4_step(const F& f, const Vec& y, double t, double h) {
    const std::size_t n = y.size();
    Vec k1 = f(t, y);
    Vec tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    Vec k2 = f(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    Vec k3 = f(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    Vec k4 = f(t + h, tmp);
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// Adaptive RK4 with Richardson step doubling and fifth-order extrapolation.
template <class F>
Vec integrate(const F& f, Vec y, double t0, double t1, double rtol = 1e-12) {
    if (t1 < t0) throw std::invalid_argument("oracle: t1 < t0");
    double t = t0;
    double h = (t1 - t0) / 64.0;
    if (h == 0.0) return y;
    long guard = 0;
    while (t < t1) {
        if (++guard > 4000000) throw std::runtime_error("oracle: step budget exhausted");
        h = std::min(h, t1 - t);
        Vec full = rk4_step(f, y, t, h);
        Vec half = rk4_step(f, y, t, 0.5 * h);
        half = rk4_step(f, half, t + 0.5 * h, 0.5 * h);
        double err = 0.0, scale = 1e-30;
        for (std::size_t i = 0; i < y.size(); ++i) {
            err = std::max(err, std::abs(half[i] - full[i]) / 15.0);
            scale = std::max(scale, std::abs(half[i]));
        }
        const double tol = rtol * scale;
        if (err <= tol) {
            for (std::size_t i = 0; i < y.size(); ++i)
                half[i] += (half[i] - full[i]) / 15.0;
            y = std::move(half);
            t += h;
            h *= std::min(4.0, std::max(0.5, 0.9 * std::pow(tol / (err + 1e-300), 0.2)));
        } else {
            h *= std::max(0.1, 0.9 * std::pow(tol / err, 0.2));
        }
    }
    return y;
}

}  // namespace oracle
