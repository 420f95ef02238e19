#pragma once

// Analyticity-radius measurement and the convolution-kernel facts behind the
// exponential-weight calculus: the l1-modulus kernel h_alpha and its unit
// mass, the time-splitting and heat-compensated multipliers, per-shell decay
// constants for weighted derivatives, and least-squares fits of algebraic and
// stretched-exponential decay laws to trajectory norms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "io.hpp"
#include "littlewood_paley.hpp"
#include "random_fields.hpp"

namespace nsk {

// ---- analyticity radius ----------------------------------------------------

struct GevreyFit {
    double radius = 0.0;     // negated slope of log shell-max vs |xi|_1, clamped at 0
    double residual = 0.0;   // RMS of the linear fit in log amplitude
    double window_lo = 0.0;  // |xi|_1 range of the shells actually used
    double window_hi = 0.0;
    int shells_used = 0;
};

// Fits log(shell-max |f^|) against the shell modulus |xi|_1. Shells are the
// level sets of sum_i |n_i|, so their moduli are exact multiples of the
// frequency step. The fit uses shells with amplitude in [1e-13, 1e-2] * peak:
// the tail below the peak is where an e^{-delta |xi|_1} profile shows its
// slope. Spectra with no sub-peak tail (flat noise) would leave that window
// empty, so the fit then falls back to every shell above the floor.
inline GevreyFit estimate_radius(const SpectralField& f) {
    const Grid& g = f.grid();
    const double step = g.xi_step();
    std::vector<double> shell_max;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto m = static_cast<std::size_t>(std::llround(g.xi_l1(i) / step));
        if (m >= shell_max.size()) shell_max.resize(m + 1, 0.0);
        shell_max[m] = std::max(shell_max[m], std::abs(f.coeff(i)));
    }
    double peak = *std::max_element(shell_max.begin(), shell_max.end());
    if (!(peak > 0.0)) throw std::runtime_error("estimate_radius: unresolved radius");

    auto collect = [&](double hi_frac) {
        std::vector<double> xs, ys;
        for (std::size_t m = 0; m < shell_max.size(); ++m) {
            double a = shell_max[m];
            if (a < 1e-13 * peak || a > hi_frac * peak) continue;
            xs.push_back(static_cast<double>(m) * step);
            ys.push_back(std::log(a));
        }
        return std::pair(xs, ys);
    };
    auto [xs, ys] = collect(1e-2);
    if (xs.size() < 4) std::tie(xs, ys) = collect(1.0);
    if (xs.size() < 4) throw std::runtime_error("estimate_radius: unresolved radius");

    const auto n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double det = n * sxx - sx * sx;
    if (!(det > 0.0)) throw std::runtime_error("estimate_radius: unresolved radius");
    double slope = (n * sxy - sx * sy) / det;
    double intercept = (sy - slope * sx) / n;

    GevreyFit fit;
    fit.radius = std::max(0.0, -slope);
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (intercept + slope * xs[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    fit.window_lo = *std::min_element(xs.begin(), xs.end());
    fit.window_hi = *std::max_element(xs.begin(), xs.end());
    fit.shells_used = static_cast<int>(xs.size());
    return fit;
}

// ---- the l1-modulus kernel -------------------------------------------------

struct KernelReport {
    std::vector<double> values;  // physical samples on the base grid
    double l1_mass = 0.0;        // cell volume * sum |values|
    double signed_mass = 0.0;    // cell volume * sum values; exactly the zero-mode symbol
    double min_value = 0.0;
    double peak = 0.0;
};

// Physical kernel of the damping multiplier e^{-alpha |xi|_1}. Separable
// across axes; in one dimension the continuum kernel is 2alpha/(alpha^2+x^2)
// up to normalization, positive with unit integral, which is what makes the
// weighted product estimates constant-free.
inline KernelReport kernel_h_alpha(double alpha, const Grid& g) {
    if (!(alpha > 0.0)) throw std::invalid_argument("kernel_h_alpha: alpha must be positive");
    SpectralField k(g);
    double vol = std::pow(g.length(), g.dim());
    for (std::size_t i = 0; i < g.size(); ++i)
        k.coeff(i) = std::exp(-alpha * g.xi_l1(i)) / vol;
    std::vector<cd> phys = inverse_transform(k);

    KernelReport rep;
    rep.values.resize(phys.size());
    rep.min_value = std::numeric_limits<double>::infinity();
    rep.peak = -std::numeric_limits<double>::infinity();
    const double cell = g.cell_volume();
    for (std::size_t i = 0; i < phys.size(); ++i) {
        double v = phys[i].real();
        rep.values[i] = v;
        rep.l1_mass += cell * std::abs(v);
        rep.signed_mass += cell * v;
        rep.min_value = std::min(rep.min_value, v);
        rep.peak = std::max(rep.peak, v);
    }
    return rep;
}

// ---- multiplier bounds -----------------------------------------------------

struct KernelCheckParams {
    double p = 2.0;
    int trials = 20;
    std::uint64_t seed = 99;
};

// L1 mass of the kernel of e^{-(sqrt(t-tau)+sqrt(tau)-sqrt(t)) Lambda_1}. The
// exponent coefficient is positive for 0 < tau < t by strict concavity of the
// square root, so this is an h_alpha kernel and the mass is O(1) in (tau, t).
inline double kernel_m1_mass(double t, double tau, const Grid& g) {
    if (!(tau > 0.0 && tau < t)) throw std::invalid_argument("kernel_m1_mass: wants 0 < tau < t");
    double alpha = std::sqrt(t - tau) + std::sqrt(tau) - std::sqrt(t);
    return kernel_h_alpha(alpha, g).l1_mass;
}

// Largest Lp gain of e^{(a/2) Laplacian + sqrt(a) Lambda_1} over random
// band-limited fields. The symbol is bounded: the quadratic decay beats the
// linear growth, uniformly in a >= 0.
inline double kernel_m2_gain(double a, const Grid& g, const KernelCheckParams& prm = {}) {
    if (a < 0.0) throw std::invalid_argument("kernel_m2_gain: wants a >= 0");
    if (prm.trials < 1) throw std::invalid_argument("kernel_m2_gain: wants trials >= 1");
    SpectralField mult(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        mult.coeff(i) = std::exp(-(a / 2.0) * g.xi_sq(i) + std::sqrt(a) * g.xi_l1(i));

    double worst = 0.0;
    const int k_hi = g.n() / 2 - 1;
    for (int trial = 0; trial < prm.trials; ++trial) {
        SpectralField f =
            band_limited_field(g, prm.seed + static_cast<std::uint64_t>(trial), 1, k_hi, 1.0);
        SpectralField out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out.coeff(i) = mult.coeff(i) * f.coeff(i);
        double den = lp_norm(f, prm.p);
        if (den == 0.0) continue;
        worst = std::max(worst, lp_norm(out, prm.p) / den);
    }
    return worst;
}

// Smallest constant C with ||Lambda^s e^{-alpha Lambda_1} b_j||_p
// <= C 2^{js} e^{-alpha 2^j / 4} ||b_j||_p over random fields, where b_j is
// the j-th dyadic block. The 1/4 in the exponent leaves room for the block
// support reaching down to (3/4) 2^j, so C stays bounded by (8/3)^s.
inline double shell_decay_constant(double s, double alpha, int j, const Grid& g,
                                   const KernelCheckParams& prm = {}) {
    if (s < 0.0 || alpha < 0.0)
        throw std::invalid_argument("shell_decay_constant: wants s >= 0 and alpha >= 0");
    if (prm.trials < 1) throw std::invalid_argument("shell_decay_constant: wants trials >= 1");
    DyadicPartition part = build_partition(g);
    if (j < part.j_min() || j > part.j_max())
        throw std::invalid_argument("shell_decay_constant: shell outside the resolved range");

    const int k_hi = g.n() / 2 - 1;
    double worst = 0.0;
    bool hit = false;
    for (int trial = 0; trial < prm.trials; ++trial) {
        SpectralField f =
            band_limited_field(g, prm.seed + static_cast<std::uint64_t>(trial), 1, k_hi, 1.0);
        SpectralField b = part.block(f, j);
        double den = lp_norm(b, prm.p);
        if (den == 0.0) continue;
        hit = true;
        SpectralField out = lambda_s(gevrey_weight(b, -alpha), s);
        double bound = std::pow(2.0, j * s) * std::exp(-alpha * std::pow(2.0, j) / 4.0) * den;
        worst = std::max(worst, lp_norm(out, prm.p) / bound);
    }
    if (!hit) throw std::invalid_argument("shell_decay_constant: empty shell");
    return worst;
}

// ---- decay-rate fits -------------------------------------------------------

enum class DecayModel { algebraic, stretched };

struct DecayFit {
    DecayModel model = DecayModel::algebraic;
    double rate = 0.0;       // gamma-hat for t^{-gamma}, c-hat for e^{-c sqrt t}
    double prefactor = 0.0;
    double r_squared = 1.0;
    double t_lo = 0.0, t_hi = 0.0;
    int n_used = 0;
};

// Linear regression of log(norm) against log t (algebraic) or sqrt t
// (stretched) over the window [window_lo, window_hi]. Early-time transients
// are excluded by the default window start at t = 1.
inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& norm,
                          DecayModel model, double window_lo = 1.0,
                          double window_hi = std::numeric_limits<double>::infinity()) {
    if (t.size() != norm.size()) throw std::invalid_argument("fit_decay: size mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_lo || t[i] > window_hi) continue;
        if (!(norm[i] > 0.0)) throw std::invalid_argument("fit_decay: nonpositive norm in window");
        xs.push_back(model == DecayModel::algebraic ? std::log(t[i]) : std::sqrt(t[i]));
        ys.push_back(std::log(norm[i]));
    }
    if (xs.size() < 8) throw std::invalid_argument("fit_decay: fewer than 8 samples in window");

    const auto n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double det = n * sxx - sx * sx;
    if (!(det > 1e-12 * n * sxx)) throw std::invalid_argument("fit_decay: degenerate window");
    double slope = (n * sxy - sx * sy) / det;
    double intercept = (sy - slope * sx) / n;

    DecayFit fit;
    fit.model = model;
    fit.rate = -slope;
    fit.prefactor = std::exp(intercept);
    double ss_res = 0.0, ss_tot = 0.0, ybar = sy / n;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (intercept + slope * xs[i]);
        ss_res += r * r;
        ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
    }
    // variation at round-off scale relative to the signal power is a flat line
    fit.r_squared = ss_tot > 1e-20 * syy ? 1.0 - ss_res / ss_tot : 1.0;
    auto back_to_t = [&](double x) {
        return model == DecayModel::algebraic ? std::exp(x) : x * x;
    };
    fit.t_lo = back_to_t(*std::min_element(xs.begin(), xs.end()));
    fit.t_hi = back_to_t(*std::max_element(xs.begin(), xs.end()));
    fit.n_used = static_cast<int>(xs.size());
    return fit;
}

inline std::string decay_fit_json(const DecayFit& fit) {
    std::string s = "{\"model\":\"";
    s += fit.model == DecayModel::algebraic ? "algebraic" : "stretched";
    s += "\",\"rate\":" + fmt_g17(fit.rate);
    s += ",\"prefactor\":" + fmt_g17(fit.prefactor);
    s += ",\"r_squared\":" + fmt_g17(fit.r_squared);
    s += ",\"window\":[" + fmt_g17(fit.t_lo) + "," + fmt_g17(fit.t_hi) + "]";
    s += ",\"n_used\":" + std::to_string(fit.n_used) + "}";
    return s;
}

inline void write_radius_csv(std::ostream& os, const std::vector<double>& t,
                             const std::vector<GevreyFit>& fits) {
    if (t.size() != fits.size()) throw std::invalid_argument("write_radius_csv: size mismatch");
    os << "t,radius,residual,window_lo,window_hi,shells_used\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        os << fmt_g17(t[i]) << ',' << fmt_g17(fits[i].radius) << ',' << fmt_g17(fits[i].residual)
           << ',' << fmt_g17(fits[i].window_lo) << ',' << fmt_g17(fits[i].window_hi) << ','
           << fits[i].shells_used << '\n';
}

}  // namespace nsk
