#pragma once

// SpectralField stores the Fourier amplitudes of a periodic field under the
// convention f(x) = sum_xi fhat(xi) e^{i xi.x}; the forward transform divides
// by N^d. Homogeneous multipliers act as 0 on the mean mode unless an
// explicit zero-mode value is supplied.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nsk/fft.hpp"
#include "nsk/grid.hpp"

namespace nsk {

class SpectralField {
  public:
    explicit SpectralField(Grid grid) : grid_(std::move(grid)), c_(grid_.size()) {}
    SpectralField(Grid grid, std::vector<cd> coeffs) : grid_(std::move(grid)), c_(std::move(coeffs)) {
        if (c_.size() != grid_.size()) throw std::invalid_argument("field: coefficient count mismatch");
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return c_.size(); }
    const std::vector<cd>& coeffs() const { return c_; }
    std::vector<cd>& coeffs() { return c_; }
    cd coeff(std::size_t i) const { return c_[i]; }
    cd& coeff(std::size_t i) { return c_[i]; }

    cd mean() const { return c_[0]; }
    void set_mean(cd v) { c_[0] = v; }

    SpectralField& operator+=(const SpectralField& o) {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        check_same(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    SpectralField& operator*=(cd s) {
        for (auto& v : c_) v *= s;
        return *this;
    }
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(SpectralField a, cd s) { return a *= s; }
    friend SpectralField operator*(cd s, SpectralField a) { return a *= s; }

  private:
    void check_same(const SpectralField& o) const {
        if (!(grid_ == o.grid_)) throw std::invalid_argument("field: grid mismatch");
    }
    Grid grid_;
    std::vector<cd> c_;
};

struct VectorField {
    std::vector<SpectralField> comp;

    explicit VectorField(const Grid& grid) : comp(grid.dim(), SpectralField(grid)) {}
    VectorField(std::initializer_list<SpectralField> parts) : comp(parts) {}

    const Grid& grid() const { return comp.front().grid(); }
    int dim() const { return static_cast<int>(comp.size()); }
    SpectralField& operator[](int i) { return comp[i]; }
    const SpectralField& operator[](int i) const { return comp[i]; }

    VectorField& operator+=(const VectorField& o) {
        for (int i = 0; i < dim(); ++i) comp[i] += o.comp[i];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        for (int i = 0; i < dim(); ++i) comp[i] -= o.comp[i];
        return *this;
    }
    VectorField& operator*=(cd s) {
        for (auto& f : comp) f *= s;
        return *this;
    }
    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(VectorField a, cd s) { return a *= s; }
};

struct State {
    SpectralField a;
    VectorField u;
};

// ---- transforms ------------------------------------------------------------

inline SpectralField forward_transform(const Grid& grid, std::vector<cd> physical) {
    if (physical.size() != grid.size()) throw std::invalid_argument("transform: size mismatch");
    detail::fft_nd(physical.data(), grid.dim(), static_cast<std::size_t>(grid.n()), -1);
    const double scale = 1.0 / static_cast<double>(grid.size());
    for (auto& v : physical) v *= scale;
    return SpectralField(grid, std::move(physical));
}

inline SpectralField forward_transform_real(const Grid& grid, const std::vector<double>& physical) {
    std::vector<cd> tmp(physical.begin(), physical.end());
    return forward_transform(grid, std::move(tmp));
}

inline std::vector<cd> inverse_transform(const SpectralField& f) {
    std::vector<cd> out = f.coeffs();
    detail::fft_nd(out.data(), f.grid().dim(), static_cast<std::size_t>(f.grid().n()), +1);
    return out;
}

// ---- multipliers -----------------------------------------------------------

namespace detail {
// Mean below roundoff of the coefficient scale counts as zero.
inline bool mean_is_zero(const SpectralField& f) {
    double scale = 0.0;
    for (const auto& v : f.coeffs()) scale = std::max(scale, std::abs(v));
    return std::abs(f.mean()) <= 1e-13 * scale;
}
}  // namespace detail

// Symbol evaluated on nonzero lattice modes; zero-mode behaviour: explicit
// value if given, otherwise the symbol's own finite value at 0, otherwise 0
// for a zero-mean field and an error for a field that carries mean.
inline SpectralField apply_multiplier(const SpectralField& f,
                                      const std::function<cd(const std::array<double, 3>&)>& symbol,
                                      std::optional<cd> at_zero = std::nullopt) {
    const Grid& g = f.grid();
    SpectralField out(g);
    cd m0;
    if (at_zero) {
        m0 = *at_zero;
    } else {
        cd probe = symbol({0.0, 0.0, 0.0});
        if (std::isfinite(probe.real()) && std::isfinite(probe.imag())) {
            m0 = probe;
        } else if (detail::mean_is_zero(f)) {
            m0 = 0.0;
        } else {
            throw std::invalid_argument("apply_multiplier: symbol singular at 0 on field with nonzero mean");
        }
    }
    out.coeff(0) = m0 * f.coeff(0);
    for (std::size_t i = 1; i < g.size(); ++i) out.coeff(i) = symbol(g.xi(i)) * f.coeff(i);
    return out;
}

// |xi|^s; for s < 0 the mean must vanish (enforced by the generic policy).
inline SpectralField lambda_s(const SpectralField& f, double s) {
    const Grid& g = f.grid();
    SpectralField out(g);
    if (s < 0.0 && !detail::mean_is_zero(f))
        throw std::invalid_argument("lambda_s: negative order on field with nonzero mean");
    out.coeff(0) = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i)
        out.coeff(i) = std::pow(g.xi_sq(i), 0.5 * s) * f.coeff(i);
    return out;
}

inline SpectralField laplacian(const SpectralField& f) {
    const Grid& g = f.grid();
    SpectralField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.coeff(i) = -g.xi_sq(i) * f.coeff(i);
    return out;
}

inline SpectralField derivative(const SpectralField& f, int axis) {
    const Grid& g = f.grid();
    SpectralField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto xi = g.xi(i);
        out.coeff(i) = cd(0.0, xi[axis]) * f.coeff(i);
    }
    return out;
}

inline VectorField gradient(const SpectralField& f) {
    VectorField out(f.grid());
    for (int axis = 0; axis < f.grid().dim(); ++axis) out[axis] = derivative(f, axis);
    return out;
}

inline SpectralField divergence(const VectorField& u) {
    SpectralField out(u.grid());
    for (int axis = 0; axis < u.dim(); ++axis) out += derivative(u[axis], axis);
    return out;
}

// Gevrey weight e^{delta*|xi|_1}; gains beyond the cap are an error because a
// double mantissa amplified by more than e^{30} is pure noise.
inline constexpr double kGevreyGainCap = 30.0;

inline SpectralField gevrey_weight(const SpectralField& f, double delta, bool allow_cap_error = true) {
    const Grid& g = f.grid();
    if (delta > 0.0 && allow_cap_error) {
        double worst = delta * g.xi_l1(0);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (std::abs(f.coeff(i)) > 0.0) worst = std::max(worst, delta * g.xi_l1(i));
        if (worst > kGevreyGainCap)
            throw std::domain_error("gevrey_weight: amplification beyond e^30 cap at |xi|_1 = " +
                                    std::to_string(worst / delta));
    }
    SpectralField out(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        out.coeff(i) = std::exp(delta * g.xi_l1(i)) * f.coeff(i);
    return out;
}

// ---- Leray projection ------------------------------------------------------

struct LerayParts {
    VectorField p;  // divergence-free part
    VectorField q;  // gradient part, grad laplacian^{-1} div u
};

inline LerayParts leray_project(const VectorField& u) {
    const Grid& g = u.grid();
    const int d = g.dim();
    LerayParts out{VectorField(g), VectorField(g)};
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto xi = g.xi(i);
        const double s2 = g.xi_sq(i);
        if (s2 == 0.0) {
            for (int a = 0; a < d; ++a) {
                out.p[a].coeff(i) = u[a].coeff(i);  // P = identity on the mean
                out.q[a].coeff(i) = 0.0;
            }
            continue;
        }
        cd dot = 0.0;
        for (int a = 0; a < d; ++a) dot += xi[a] * u[a].coeff(i);
        for (int a = 0; a < d; ++a) {
            cd qa = xi[a] * dot / s2;
            out.q[a].coeff(i) = qa;
            out.p[a].coeff(i) = u[a].coeff(i) - qa;
        }
    }
    return out;
}

// ---- norms -----------------------------------------------------------------

inline double lp_norm_physical(const std::vector<cd>& phys, double p, double cell_volume) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : phys) m = std::max(m, std::abs(v));
        return m;
    }
    double acc = 0.0;
    for (const auto& v : phys) acc += std::pow(std::abs(v), p);
    return std::pow(cell_volume * acc, 1.0 / p);
}

inline double lp_norm(const SpectralField& f, double p) {
    if (p == 2.0) {
        // Parseval fast path: ||f||_2^2 = L^d * sum |fhat|^2.
        double acc = 0.0;
        for (const auto& v : f.coeffs()) acc += std::norm(v);
        double vol = 1.0;
        for (int i = 0; i < f.grid().dim(); ++i) vol *= f.grid().length();
        return std::sqrt(vol * acc);
    }
    return lp_norm_physical(inverse_transform(f), p, f.grid().cell_volume());
}

// Pointwise Euclidean magnitude |u(x)| in Lp.
inline double lp_norm(const VectorField& u, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    const Grid& g = u.grid();
    std::vector<std::vector<cd>> phys;
    phys.reserve(u.dim());
    for (int a = 0; a < u.dim(); ++a) phys.push_back(inverse_transform(u[a]));
    double acc = 0.0, m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s2 = 0.0;
        for (int a = 0; a < u.dim(); ++a) s2 += std::norm(phys[a][i]);
        if (std::isinf(p))
            m = std::max(m, std::sqrt(s2));
        else
            acc += std::pow(s2, 0.5 * p);
    }
    return std::isinf(p) ? m : std::pow(g.cell_volume() * acc, 1.0 / p);
}

inline double l2_inner(const SpectralField& f, const SpectralField& g) {
    double vol = 1.0;
    for (int i = 0; i < f.grid().dim(); ++i) vol *= f.grid().length();
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += (std::conj(f.coeff(i)) * g.coeff(i)).real();
    return vol * acc;
}

inline double l2_inner(const VectorField& u, const VectorField& v) {
    double acc = 0.0;
    for (int a = 0; a < u.dim(); ++a) acc += l2_inner(u[a], v[a]);
    return acc;
}

inline bool is_hermitian(const SpectralField& f, double tol) {
    double scale = 0.0;
    for (const auto& v : f.coeffs()) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return true;
    const Grid& g = f.grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
        cd diff = f.coeff(i) - std::conj(f.coeff(g.conj_index(i)));
        if (std::abs(diff) > tol * scale) return false;
    }
    return true;
}

// ---- dealiased products ----------------------------------------------------

namespace detail {

// Copy spectrum onto the 3N/2 zero-padded lattice (per-axis index remap).
inline std::vector<cd> pad_spectrum(const SpectralField& f) {
    const Grid& g = f.grid();
    const int d = g.dim();
    const std::size_t n = static_cast<std::size_t>(g.n());
    const std::size_t np = 3 * n / 2;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= np;
    std::vector<cd> out(total, cd(0.0, 0.0));
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        cd v = f.coeff(flat);
        if (v == cd(0.0, 0.0)) continue;
        auto idx = g.unflatten(flat);
        std::size_t pf = 0;
        for (int axis = 0; axis < d; ++axis) {
            int k = idx[axis] < g.n() / 2 ? idx[axis] : idx[axis] - g.n();
            std::size_t pidx = k >= 0 ? static_cast<std::size_t>(k) : np + k;
            pf = pf * np + pidx;
        }
        out[pf] = v;
    }
    return out;
}

inline SpectralField truncate_spectrum(const Grid& g, std::vector<cd>& padded) {
    const int d = g.dim();
    const std::size_t np = 3 * static_cast<std::size_t>(g.n()) / 2;
    SpectralField out(g);
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
        auto idx = g.unflatten(flat);
        std::size_t pf = 0;
        for (int axis = 0; axis < d; ++axis) {
            int k = idx[axis] < g.n() / 2 ? idx[axis] : idx[axis] - g.n();
            std::size_t pidx = k >= 0 ? static_cast<std::size_t>(k) : np + k;
            pf = pf * np + pidx;
        }
        out.coeff(flat) = padded[pf];
    }
    return out;
}

}  // namespace detail

// Physical samples of f on the 3N/2 padded grid.
inline std::vector<cd> to_padded_physical(const SpectralField& f) {
    std::vector<cd> padded = detail::pad_spectrum(f);
    detail::fft_nd(padded.data(), f.grid().dim(), 3 * static_cast<std::size_t>(f.grid().n()) / 2, +1);
    return padded;
}

// Forward transform of padded physical samples, truncated to the base grid.
inline SpectralField from_padded_physical(const Grid& g, std::vector<cd> padded) {
    const std::size_t np = 3 * static_cast<std::size_t>(g.n()) / 2;
    std::size_t total = 1;
    for (int i = 0; i < g.dim(); ++i) total *= np;
    if (padded.size() != total) throw std::invalid_argument("from_padded_physical: size mismatch");
    detail::fft_nd(padded.data(), g.dim(), np, -1);
    const double scale = 1.0 / static_cast<double>(total);
    for (auto& v : padded) v *= scale;
    return detail::truncate_spectrum(g, padded);
}

// Dealiased pointwise product (exact on the retained modes by the 3/2 rule).
inline SpectralField pointwise_product(const SpectralField& f, const SpectralField& g) {
    if (!(f.grid() == g.grid())) throw std::invalid_argument("product: grid mismatch");
    std::vector<cd> pf = to_padded_physical(f);
    std::vector<cd> pg = to_padded_physical(g);
    for (std::size_t i = 0; i < pf.size(); ++i) pf[i] *= pg[i];
    return from_padded_physical(f.grid(), std::move(pf));
}

}  // namespace nsk
