#pragma once
// Exact Fourier-side analysis of the linearized acoustic-capillary system
//   d/dt a + div u = 0,   d/dt u - Abar u + grad a - kappa_bar grad lap a = 0,
// normalized so that 2 mu_bar + lambda_bar = 1: per-mode generator and
// closed-form propagator, the mixed Lyapunov functional with explicit
// equivalence constants, the eigenvalue formulas of the damped
// (grad a, v)-frame, the effective-velocity change of variables, and decay
// checks for dyadic blocks under complex diffusion.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "nsk/field.hpp"
#include "nsk/io.hpp"
#include "nsk/littlewood_paley.hpp"

namespace nsk {

struct LinearParams {
    double kappa_bar = 1.0;   // normalized capillarity, > 0
    double mu_bar = 0.25;     // shear viscosity, > 0
    double lambda_bar = 0.5;  // bulk viscosity; 2 mu_bar + lambda_bar == 1

    double nu_bar() const { return 2.0 * mu_bar + lambda_bar; }

    void validate() const {
        if (!(kappa_bar > 0.0))
            throw std::invalid_argument("LinearParams: kappa_bar must be positive");
        if (!(mu_bar > 0.0)) throw std::invalid_argument("LinearParams: mu_bar must be positive");
        if (std::abs(nu_bar() - 1.0) > 1e-12)
            throw std::invalid_argument("LinearParams: 2 mu_bar + lambda_bar must equal 1");
    }

    static LinearParams normalized(double kappa, double mu) {
        LinearParams prm{kappa, mu, 1.0 - 2.0 * mu};
        prm.validate();
        return prm;
    }
};

// One Fourier mode of (a, v) with v the scalar potential trace Lambda^{-1} div u.
struct ModeState {
    double xi = 1.0;
    cd a_hat{};
    cd v_hat{};
};

struct Mat2 {
    std::array<cd, 4> m{};

    cd& operator()(int r, int c) { return m[2 * r + c]; }
    cd operator()(int r, int c) const { return m[2 * r + c]; }
    cd trace() const { return m[0] + m[3]; }
    cd det() const { return m[0] * m[3] - m[1] * m[2]; }

    std::array<cd, 2> apply(const std::array<cd, 2>& x) const {
        return {m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]};
    }

    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        Mat2 r;
        r.m[0] = a.m[0] * b.m[0] + a.m[1] * b.m[2];
        r.m[1] = a.m[0] * b.m[1] + a.m[1] * b.m[3];
        r.m[2] = a.m[2] * b.m[0] + a.m[3] * b.m[2];
        r.m[3] = a.m[2] * b.m[1] + a.m[3] * b.m[3];
        return r;
    }
};

// Largest singular value via the 2x2 Gram matrix.
inline double opnorm(const Mat2& a) {
    double g00 = std::norm(a.m[0]) + std::norm(a.m[2]);
    double g11 = std::norm(a.m[1]) + std::norm(a.m[3]);
    cd g01 = std::conj(a.m[0]) * a.m[1] + std::conj(a.m[2]) * a.m[3];
    double tr = g00 + g11;
    double gap = std::sqrt(std::max(0.0, (g00 - g11) * (g00 - g11) / 4.0 + std::norm(g01)));
    return std::sqrt(std::max(0.0, tr / 2.0 + gap));
}

namespace detail {

// sqrt r with the convention sqrt(r) = i sqrt(|r|) for negative r.
inline cd sqrt_signed(double r) {
    return r >= 0.0 ? cd(std::sqrt(r), 0.0) : cd(0.0, std::sqrt(-r));
}

// exp(t A) for a 2x2 matrix, uniformly accurate through eigenvalue
// coalescence: with h = tr/2 and s^2 = h^2 - det,
//   exp(tA) = e^{ht} [cosh(st) I + sinh(st)/s (A - h I)],
// and sinh(st)/s -> t as s -> 0 (series branch below |st| = 1e-4).  The
// exponentials are assembled as e^{ht +- st} so no factor overflows while the
// product decays.
inline Mat2 propagator_2x2(const Mat2& a, double t) {
    const cd h = 0.5 * a.trace();
    const cd s = std::sqrt(h * h - a.det());
    const cd z = s * t;
    cd ecosh, eshc;  // e^{ht} cosh(st), e^{ht} sinh(st)/s
    if (std::abs(z) < 1e-4) {
        const cd e = std::exp(h * t);
        const cd z2 = z * z;
        ecosh = e * (1.0 + z2 / 2.0 + z2 * z2 / 24.0);
        eshc = e * t * (1.0 + z2 / 6.0 + z2 * z2 / 120.0);
    } else {
        const cd ep = std::exp(h * t + z), em = std::exp(h * t - z);
        ecosh = 0.5 * (ep + em);
        eshc = 0.5 * (ep - em) / s;
    }
    Mat2 r;
    r.m[0] = ecosh + eshc * (a.m[0] - h);
    r.m[1] = eshc * a.m[1];
    r.m[2] = eshc * a.m[2];
    r.m[3] = ecosh + eshc * (a.m[3] - h);
    return r;
}

}  // namespace detail

// Generator of the coupled (a_hat, v_hat) mode:
//   d/dt a_hat = -xi v_hat,
//   d/dt v_hat = xi (1 + kappa_bar xi^2) a_hat - xi^2 v_hat.
inline Mat2 mode_generator(double xi, const LinearParams& prm) {
    prm.validate();
    if (!(xi > 0.0)) throw std::invalid_argument("mode_generator: xi must be positive");
    Mat2 m;
    m(0, 0) = 0.0;
    m(0, 1) = -xi;
    m(1, 0) = xi * (1.0 + prm.kappa_bar * xi * xi);
    m(1, 1) = -xi * xi;
    return m;
}

inline Mat2 mode_propagator(double xi, double t, const LinearParams& prm) {
    return detail::propagator_2x2(mode_generator(xi, prm), t);
}

inline ModeState propagate_mode_exact(const ModeState& st, double t, const LinearParams& prm) {
    if (t < 0.0) throw std::invalid_argument("propagate_mode_exact: negative time");
    Mat2 p = mode_propagator(st.xi, t, prm);
    auto y = p.apply({st.a_hat, st.v_hat});
    return {st.xi, y[0], y[1]};
}

// Mixed quadratic functional
//   L^2 = (1 + kappa xi^2)|a|^2 + |v|^2 + beta (xi^2 |a|^2 - 2 xi Re(a conj v)).
inline double lyapunov(const ModeState& st, const LinearParams& prm, double beta) {
    prm.validate();
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("lyapunov: beta must lie in (0,1)");
    const double xi2 = st.xi * st.xi;
    const double a2 = std::norm(st.a_hat), v2 = std::norm(st.v_hat);
    const double cross = (st.a_hat * std::conj(st.v_hat)).real();
    return (1.0 + prm.kappa_bar * xi2) * a2 + v2 + beta * (xi2 * a2 - 2.0 * st.xi * cross);
}

// Constants attached to the beta = 1/2 functional:
//   lower |(a, xi a, v)|^2 <= L^2 <= upper |(a, xi a, v)|^2,
//   d/dt L^2 + decay_rate xi^2 L^2 <= 0 along the exact flow,
// and the resulting amplitude envelope
//   |(a, xi a, v)(t)| <= envelope_C e^{-decay_rate xi^2 t} |(a, xi a, v)(0)|.
struct LyapunovBracket {
    double lower;
    double upper;
    double decay_rate;
    double envelope_C;
};

inline LyapunovBracket lyapunov_constants(const LinearParams& prm) {
    prm.validate();
    const double m = std::min(0.5, prm.kappa_bar);
    const double big = std::max(1.5, prm.kappa_bar + 1.0);
    return {m, big, 0.5 * std::min(1.0, prm.kappa_bar), big / m};
}

inline double triple_norm(const ModeState& st) {
    return std::sqrt((1.0 + st.xi * st.xi) * std::norm(st.a_hat) + std::norm(st.v_hat));
}

// Worst-state envelope quotient: ||S e^{tM} S^{-1}||_2 / (C e^{-c1 xi^2 t})
// with S = diag(sqrt(1+xi^2), 1) mapping (a, v) to the triple norm.  Values
// <= 1 mean the decay bound holds for every initial state at this (xi, t).
inline double envelope_ratio(double xi, double t, const LinearParams& prm) {
    Mat2 p = mode_propagator(xi, t, prm);
    const double s = std::sqrt(1.0 + xi * xi);
    p(0, 1) *= s;
    p(1, 0) /= s;
    LyapunovBracket k = lyapunov_constants(prm);
    return opnorm(p) / (k.envelope_C * std::exp(-k.decay_rate * xi * xi * t));
}

// Eigenvalues of the damped (grad a, v) frame matrix, with the convention
// sqrt(r) = i sqrt(|r|) for negative discriminants.
struct EigenPair {
    cd plus;
    cd minus;
    double discriminant;  // (1 - 4 kappa) xi^4 - 2 xi^2 + 1
};

inline EigenPair eigenvalues(double xi, double kappa_bar) {
    if (xi < 0.0) throw std::invalid_argument("eigenvalues: xi must be nonnegative");
    if (!(kappa_bar > 0.0)) throw std::invalid_argument("eigenvalues: kappa_bar must be positive");
    const double xi2 = xi * xi;
    const double disc = (1.0 - 4.0 * kappa_bar) * xi2 * xi2 - 2.0 * xi2 + 1.0;
    const cd root = detail::sqrt_signed(disc);
    return {0.5 * (cd(1.0 + xi2) + root), 0.5 * (cd(1.0 + xi2) - root), disc};
}

// The frame system reads d/dt (grad a, v) + A (grad a, v) = lower order, with
// A below; its eigenvalues are the pair returned by eigenvalues().
inline Mat2 velocity_frame_matrix(double xi, double kappa_bar) {
    if (!(xi > 0.0)) throw std::invalid_argument("velocity_frame_matrix: xi must be positive");
    Mat2 a;
    a(0, 0) = 1.0;
    a(0, 1) = -xi * xi;
    a(1, 0) = kappa_bar * xi * xi;
    a(1, 1) = xi * xi;
    return a;
}

inline std::pair<cd, cd> mat2_eigenvalues(const Mat2& a) {
    const cd mean = 0.5 * a.trace();
    const cd root = std::sqrt(mean * mean - a.det());
    return {mean + root, mean - root};
}

// ---- exact linear semigroup ------------------------------------------------

// Per mode: the solenoidal velocity part decays by the shear heat factor, the
// (a_hat, v_hat) pair is pushed by the closed-form 2x2 propagator, and the
// potential velocity part is rebuilt from v_hat.  Mean modes are frozen.
inline State apply_semigroup(const State& st, double t, const LinearParams& prm) {
    prm.validate();
    if (t < 0.0) throw std::invalid_argument("apply_semigroup: negative time");
    const Grid& g = st.a.grid();
    if (!(g == st.u.grid())) throw std::invalid_argument("apply_semigroup: grid mismatch");
    const int d = g.dim();
    State out{SpectralField(g), VectorField(g)};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double s2 = g.xi_sq(i);
        if (s2 == 0.0) {
            out.a.coeff(i) = st.a.coeff(i);
            for (int c = 0; c < d; ++c) out.u[c].coeff(i) = st.u[c].coeff(i);
            continue;
        }
        const double s = std::sqrt(s2);
        const auto xi = g.xi(i);
        cd dot = 0.0;
        for (int c = 0; c < d; ++c) dot += xi[c] * st.u[c].coeff(i);
        const cd vhat = cd(0.0, 1.0) * dot / s;
        const Mat2 p = mode_propagator(s, t, prm);
        const cd a1 = p(0, 0) * st.a.coeff(i) + p(0, 1) * vhat;
        const cd v1 = p(1, 0) * st.a.coeff(i) + p(1, 1) * vhat;
        const double heat = std::exp(-prm.mu_bar * s2 * t);
        out.a.coeff(i) = a1;
        for (int c = 0; c < d; ++c) {
            const cd upar0 = xi[c] * dot / s2;
            const cd uperp = st.u[c].coeff(i) - upar0;
            out.u[c].coeff(i) = heat * uperp - cd(0.0, 1.0) * xi[c] * v1 / s;
        }
    }
    return out;
}

// ---- effective-velocity diagonalization ------------------------------------

inline cd haspot_alpha(double kappa_bar) {
    return 0.5 * (1.0 + detail::sqrt_signed(1.0 - 4.0 * kappa_bar));
}

struct HaspotFrame {
    cd alpha;       // root of alpha (1 - alpha) = kappa_bar with Re(1-alpha) > 0
    VectorField v;  // potential velocity plus (-lap)^{-1} grad a
    VectorField w;  // v + alpha grad a
    // Relative residuals (vs the L2 state norm) of the two evolution equations
    //   d/dt w - (1-alpha) lap w = -alpha grad a + v - (-lap)^{-1} grad a,
    //   d/dt v - (kappa/(1-alpha)) lap v = (kappa/alpha) lap w + v - (-lap)^{-1} grad a,
    // sampled along the exact linear flow with a five-point time derivative.
    double residual_w;
    double residual_v;
};

namespace detail {

inline VectorField inv_lap_gradient(const SpectralField& a) {
    const Grid& g = a.grid();
    VectorField out(g);
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double s2 = g.xi_sq(i);
        const auto xi = g.xi(i);
        for (int c = 0; c < g.dim(); ++c)
            out[c].coeff(i) = cd(0.0, 1.0) * xi[c] * a.coeff(i) / s2;
    }
    return out;
}

inline VectorField laplacian_vf(const VectorField& u) {
    VectorField out(u.grid());
    for (int c = 0; c < u.dim(); ++c) out[c] = laplacian(u[c]);
    return out;
}

struct EffectiveFrame {
    VectorField v, w;
};

inline EffectiveFrame effective_frame(const State& st, cd alpha) {
    LerayParts lp = leray_project(st.u);
    VectorField v = lp.q + inv_lap_gradient(st.a);
    VectorField w = v + gradient(st.a) * alpha;
    return {std::move(v), std::move(w)};
}

}  // namespace detail

inline HaspotFrame haspot_transform(const SpectralField& a, const VectorField& u,
                                    const LinearParams& prm) {
    prm.validate();
    const Grid& g = a.grid();
    if (!(g == u.grid())) throw std::invalid_argument("haspot_transform: grid mismatch");
    const cd alpha = haspot_alpha(prm.kappa_bar);
    const State st{a, u};

    // Time step balancing the fifth-derivative truncation of the five-point
    // stencil against roundoff, from a per-grid spectral-radius bound.
    double lam = 1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double s2 = g.xi_sq(i);
        lam = std::max(lam, std::max(s2, std::sqrt(s2 * (1.0 + prm.kappa_bar * s2))));
    }
    const double h = 6e-4 / lam;

    std::vector<State> snaps{st};
    for (int k = 1; k < 5; ++k) snaps.push_back(apply_semigroup(st, k * h, prm));
    std::vector<detail::EffectiveFrame> fr;
    fr.reserve(5);
    for (int k = 0; k < 5; ++k) fr.push_back(detail::effective_frame(snaps[k], alpha));

    auto ddt = [&](auto get) {
        VectorField d = get(fr[0]) - get(fr[1]) * cd(8.0, 0.0) + get(fr[3]) * cd(8.0, 0.0) -
                        get(fr[4]);
        return d * cd(1.0 / (12.0 * h), 0.0);
    };
    VectorField dwdt = ddt([](const detail::EffectiveFrame& f) { return f.w; });
    VectorField dvdt = ddt([](const detail::EffectiveFrame& f) { return f.v; });

    const VectorField grad_a2 = gradient(snaps[2].a);
    const VectorField ilga2 = detail::inv_lap_gradient(snaps[2].a);
    const VectorField& v2 = fr[2].v;
    const VectorField& w2 = fr[2].w;

    VectorField res_w = dwdt - detail::laplacian_vf(w2) * (cd(1.0) - alpha) -
                        (v2 - ilga2 - grad_a2 * alpha);
    VectorField res_v = dvdt - detail::laplacian_vf(v2) * (prm.kappa_bar / (cd(1.0) - alpha)) -
                        (detail::laplacian_vf(w2) * (prm.kappa_bar / alpha) + v2 - ilga2);

    const double state_norm =
        std::sqrt(lp_norm(a, 2.0) * lp_norm(a, 2.0) + lp_norm(u, 2.0) * lp_norm(u, 2.0));
    detail::EffectiveFrame base = detail::effective_frame(st, alpha);
    return {alpha, std::move(base.v), std::move(base.w), lp_norm(res_w, 2.0) / state_norm,
            lp_norm(res_v, 2.0) / state_norm};
}

// ---- complex diffusion on a dyadic block -----------------------------------

struct HeatCheckResult {
    double C;  // smallest constant making the block decay bound hold on the t-grid
    double c;  // fixed decay rate in units of Re(beta) 2^{2j}
};

// Scans ||block_j e^{beta t lap} z||_p <= C e^{-c Re(beta) t 2^{2j}} ||block_j z||_p
// over a logarithmic t-grid and reports the smallest admissible C.
inline HeatCheckResult complex_heat_check(const DyadicPartition& part, cd beta,
                                          const SpectralField& z, int j, double p = 2.0,
                                          double c = 0.125, int t_samples = 48) {
    if (!(beta.real() > 0.0))
        throw std::invalid_argument("complex_heat_check: Re beta must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("complex_heat_check: c must be positive");
    SpectralField zj = dyadic_block(part, z, j, BlockKind::block);
    const double denom = lp_norm(zj, p);
    if (denom == 0.0) throw std::invalid_argument("complex_heat_check: block vanishes");
    const double two2j = std::ldexp(1.0, 2 * j);
    const double t_max = 40.0 / (beta.real() * two2j);
    const double ratio_step = std::pow(1e-3, 1.0 / (t_samples - 1));
    double best = 1.0;  // t = 0 gives exactly 1
    double t = t_max;
    for (int k = 0; k < t_samples; ++k, t *= ratio_step) {
        const double tk = t;
        SpectralField ht = apply_multiplier(
            zj, [&](const std::array<double, 3>& xi) {
                return std::exp(-beta * tk * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]));
            });
        best = std::max(best, lp_norm(ht, p) / (std::exp(-c * beta.real() * two2j * tk) * denom));
    }
    return {best, c};
}

// ---- sweep export ------------------------------------------------------------

// One row per mode: worst-over-time envelope quotient plus the frame
// eigenvalues, deterministic for identical inputs.
inline void write_mode_sweep_csv(std::ostream& os, const LinearParams& prm,
                                 const std::vector<double>& xis,
                                 const std::vector<double>& times) {
    prm.validate();
    os << "xi,kappa_bar,envelope_ratio_max,lambda_plus_re,lambda_plus_im,"
          "lambda_minus_re,lambda_minus_im,discriminant\n";
    for (double xi : xis) {
        double worst = 0.0;
        for (double t : times) worst = std::max(worst, envelope_ratio(xi, t, prm));
        EigenPair ev = eigenvalues(xi, prm.kappa_bar);
        os << fmt_g17(xi) << ',' << fmt_g17(prm.kappa_bar) << ',' << fmt_g17(worst) << ','
           << fmt_g17(ev.plus.real()) << ',' << fmt_g17(ev.plus.imag()) << ','
           << fmt_g17(ev.minus.real()) << ',' << fmt_g17(ev.minus.imag()) << ','
           << fmt_g17(ev.discriminant) << '\n';
    }
}

}  // namespace nsk
