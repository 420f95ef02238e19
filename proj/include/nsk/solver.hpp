#pragma once

// Pseudospectral integration of the isothermal density/velocity system with
// capillarity. The linear part is advanced exactly by the mode propagator;
// the quasilinear remainder is assembled from power-series coefficient
// closures with derivatives taken in Fourier space and products on the 3/2
// padded physical grid, and time stepping is a Lawson (integrating factor)
// RK4 around the exact semigroup. A weighted mode evolves the state under an
// exponential frequency weight whose width grows like sqrt(c0 t).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bony.hpp"
#include "field.hpp"
#include "gevrey_decay.hpp"
#include "io.hpp"
#include "linear_lab.hpp"
#include "littlewood_paley.hpp"
#include "random_fields.hpp"
#include "series.hpp"

namespace nsk {

// ---- coefficient closures ----------------------------------------------

// Density-dependent material laws, stored as power series in the fluctuation
// a = rho - 1. The viscosities and the capillarity coefficient are pinned to
// unit value at a = 0 and the pressure to unit slope, so every derived law
// below vanishes at a = 0 and the linearization is the constant-coefficient
// system handled by apply_semigroup.
struct CoefficientModel {
    PowerSeries mu = PowerSeries::constant(1.0);
    PowerSeries lambda = PowerSeries::constant(1.0);
    PowerSeries kappa = PowerSeries::constant(1.0);
    // (1+a)^2 / 2 has slope exactly 1 + a, which cancels the 1/(1+a) of the
    // pressure-slope gap: the default model has no pressure nonlinearity.
    PowerSeries pressure = PowerSeries::from_coefficients({0.5, 1.0, 0.5}, std::numeric_limits<double>::infinity());
    int truncation = 12;

    // All material laws constant: only advection and the volume correction
    // survive in the momentum remainder.
    static CoefficientModel constant_laws() { return CoefficientModel{}; }

    // mu = lambda = kappa proportional to rho, pressure a power law with
    // exponent gamma (rescaled to unit slope at the reference density).
    static CoefficientModel linear_laws(double gamma = 1.5) {
        CoefficientModel m;
        PowerSeries affine({1.0, 1.0}, std::numeric_limits<double>::infinity());
        m.mu = affine;
        m.lambda = affine;
        m.kappa = affine;
        m.pressure = PowerSeries::binomial(gamma).scaled(1.0 / gamma);
        return m;
    }

    void validate() const {
        auto unit = [](const PowerSeries& s, const char* what) {
            if (std::abs(s.constant_term() - 1.0) > 1e-12)
                throw std::invalid_argument(std::string("model: ") + what +
                                            " must have unit value at the reference density");
        };
        unit(mu, "mu");
        unit(lambda, "lambda");
        unit(kappa, "kappa");
        if (std::abs(pressure.derivative().constant_term() - 1.0) > 1e-12)
            throw std::invalid_argument(
                "model: pressure must have unit slope at the reference density");
        if (truncation < 2 || truncation > PowerSeries::kLen)
            throw std::invalid_argument("model: truncation outside [2, 80]");
    }

    PowerSeries mu_fluct() const { return mu.plus_constant(-1.0); }
    PowerSeries lambda_fluct() const { return lambda.plus_constant(-1.0); }
    PowerSeries kappa_fluct() const { return kappa.plus_constant(-1.0); }
    PowerSeries kappa_fluct_slope() const { return kappa.derivative(); }
    // a / (1+a) = 1 - 1/rho, the relative specific-volume deviation.
    PowerSeries specific_volume_gap() const { return PowerSeries::fraction_over_one_plus(); }
    // 1 - P'(1+a) / (1+a), the deviation of the effective pressure slope.
    PowerSeries pressure_slope_gap() const {
        PowerSeries slope_over_rho = product(pressure.derivative(), PowerSeries::inverse_one_plus());
        return slope_over_rho.scaled(-1.0).plus_constant(1.0);
    }

    // Largest sup|a| any composition below tolerates; 1.0 from the 1/(1+a)
    // factors that enter regardless of the laws.
    double composition_radius() const {
        return std::min({mu.radius(), lambda.radius(), kappa.radius(), pressure.radius(), 1.0});
    }

    // Worst dropped-tail majorant among the composed laws at amplitude z.
    double composition_tail(double z) const {
        double tail = 0.0;
        for (const PowerSeries& s :
             {mu_fluct(), lambda_fluct(), kappa_fluct(), specific_volume_gap(),
              pressure_slope_gap(), PowerSeries::inverse_one_plus()})
            tail = std::max(tail, s.tail_bound(std::min(z, 0.999 * s.radius()), truncation));
        return tail;
    }
};

// ---- reference-state normalization ---------------------------------------

struct RawConstants {
    double rho_bar = 1.0;
    double mu_bar = 0.5;
    double lambda_bar = 0.0;
    double p_bar = 1.0;  // rho_bar * P'(rho_bar), the squared sound-speed scale
    double kappa_bar = 1.0;

    double nu_bar() const { return 2.0 * mu_bar + lambda_bar; }
};

// raw = factor * normalized for each of the four units.
struct ScalingMaps {
    double time = 1.0;
    double space = 1.0;
    double velocity = 1.0;
    double density = 1.0;
};

struct NormalizedSetup {
    LinearParams lin;
    CoefficientModel model;
    ScalingMaps maps;
};

// Rescales a raw setup to the unit reference state: density 1, total
// viscosity 2 mu + lambda = 1, unit pressure slope. The shape laws are given
// as series in the relative fluctuation rho/rho_bar - 1 carrying their raw
// magnitudes; each is divided by its reference value so the normalized model
// passes validate(), and the magnitudes move into the linear constants.
inline NormalizedSetup normalize(const RawConstants& rc, const CoefficientModel& shapes) {
    if (!(rc.rho_bar > 0.0)) throw std::invalid_argument("normalize: rho_bar must be positive");
    if (!(rc.mu_bar > 0.0)) throw std::invalid_argument("normalize: mu_bar must be positive");
    if (!(rc.nu_bar() > 0.0))
        throw std::invalid_argument("normalize: total viscosity 2 mu + lambda must be positive");
    if (!(rc.kappa_bar > 0.0)) throw std::invalid_argument("normalize: kappa_bar must be positive");
    double slope = shapes.pressure.derivative().constant_term();
    if (!(slope > 0.0))
        throw std::invalid_argument("normalize: pressure slope at the reference density must be positive");
    if (!(rc.p_bar > 0.0)) throw std::invalid_argument("normalize: p_bar must be positive");
    if (std::abs(slope / rc.p_bar - 1.0) > 1e-10)
        throw std::invalid_argument("normalize: p_bar inconsistent with the pressure-law slope");

    const double nu = rc.nu_bar();
    NormalizedSetup out;
    out.lin = LinearParams{rc.kappa_bar * rc.rho_bar * rc.rho_bar / (nu * nu), rc.mu_bar / nu,
                           rc.lambda_bar / nu};
    out.lin.validate();

    out.model = shapes;
    auto unit_value = [](const PowerSeries& s) {
        double v = s.constant_term();
        return v == 0.0 ? PowerSeries::constant(1.0) : s.scaled(1.0 / v);
    };
    out.model.mu = unit_value(shapes.mu);
    out.model.lambda = unit_value(shapes.lambda);
    out.model.kappa = unit_value(shapes.kappa);
    out.model.pressure = shapes.pressure.scaled(1.0 / rc.p_bar);
    out.model.validate();

    out.maps.density = rc.rho_bar;
    out.maps.velocity = std::sqrt(rc.p_bar);
    out.maps.time = nu / (rc.rho_bar * rc.p_bar);
    out.maps.space = nu / (rc.rho_bar * std::sqrt(rc.p_bar));
    return out;
}

inline RawConstants denormalize(const NormalizedSetup& ns) {
    RawConstants rc;
    rc.rho_bar = ns.maps.density;
    rc.p_bar = ns.maps.velocity * ns.maps.velocity;
    double nu = ns.maps.time * rc.rho_bar * rc.p_bar;
    rc.mu_bar = ns.lin.mu_bar * nu;
    rc.lambda_bar = ns.lin.lambda_bar * nu;
    rc.kappa_bar = ns.lin.kappa_bar * nu * nu / (rc.rho_bar * rc.rho_bar);
    return rc;
}

// ---- quasilinear right side ------------------------------------------------

struct NonlinearParts {
    SpectralField mass_rhs;       // -div(a u)
    VectorField advection;        // -(u . grad) u
    VectorField viscous_var;      // (1/rho) (2 mu_bar div(mu~ D u) + lambda_bar grad(lambda~ div u))
    VectorField viscous_volume;   // -(a/rho) (mu_bar lap u + (mu_bar+lambda_bar) grad div u)
    VectorField pressure_slope;   // (1 - P'(rho)/rho) grad a
    VectorField capillary;        // kappa_bar grad(kappa~ lap a + (1/2) grad kappa~ . grad a)
    double series_tail = 0.0;     // worst dropped-tail majorant among the composed laws

    explicit NonlinearParts(const Grid& g)
        : mass_rhs(g), advection(g), viscous_var(g), viscous_volume(g), pressure_slope(g),
          capillary(g) {}

    VectorField momentum_rhs() const {
        VectorField g = advection;
        g += viscous_var;
        g += viscous_volume;
        g += pressure_slope;
        g += capillary;
        return g;
    }
};

inline NonlinearParts nonlinear_rhs(const State& st, const CoefficientModel& model,
                                    const LinearParams& prm) {
    const Grid& g = st.a.grid();
    const int d = g.dim();

    double sup_a = 0.0;
    for (const cd& v : to_padded_physical(st.a)) sup_a = std::max(sup_a, std::abs(v));
    if (sup_a >= model.composition_radius())
        throw std::domain_error("nonlinear_rhs: density out of analyticity domain");

    const int m = model.truncation;
    ComposeResult vol_gap = compose_analytic(model.specific_volume_gap(), st.a, m);
    ComposeResult inv_rho = compose_analytic(PowerSeries::inverse_one_plus(), st.a, m);
    ComposeResult mu_f = compose_analytic(model.mu_fluct(), st.a, m);
    ComposeResult la_f = compose_analytic(model.lambda_fluct(), st.a, m);
    ComposeResult ka_f = compose_analytic(model.kappa_fluct(), st.a, m);
    ComposeResult pr_gap = compose_analytic(model.pressure_slope_gap(), st.a, m);

    NonlinearParts out(g);
    out.series_tail = std::max({vol_gap.tail_bound, inv_rho.tail_bound, mu_f.tail_bound,
                                la_f.tail_bound, ka_f.tail_bound, pr_gap.tail_bound});

    // mass: -div(a u)
    {
        VectorField au(g);
        for (int c = 0; c < d; ++c) au[c] = pointwise_product(st.a, st.u[c]);
        out.mass_rhs = divergence(au) * cd(-1.0, 0.0);
    }

    std::vector<std::vector<SpectralField>> du;  // du[i][j] = d_j u_i
    du.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        std::vector<SpectralField> row;
        row.reserve(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) row.push_back(derivative(st.u[i], j));
        du.push_back(std::move(row));
    }
    SpectralField div_u = divergence(st.u);
    VectorField grad_a = gradient(st.a);

    // advection: -(u . grad) u
    for (int i = 0; i < d; ++i) {
        SpectralField acc(g);
        for (int j = 0; j < d; ++j) acc += pointwise_product(st.u[j], du[i][j]);
        out.advection[i] = acc * cd(-1.0, 0.0);
    }

    // variable-coefficient viscous stress, weighted by the specific volume:
    // (1 - a/rho) (2 mu_bar div(mu~(a) D u) + lambda_bar grad(lambda~(a) div u))
    {
        SpectralField lam_div = pointwise_product(la_f.value, div_u);
        VectorField grad_ld = gradient(lam_div);
        for (int i = 0; i < d; ++i) {
            SpectralField ti(g);
            for (int j = 0; j < d; ++j) {
                SpectralField dij = (du[i][j] + du[j][i]) * cd(0.5, 0.0);
                ti += derivative(pointwise_product(mu_f.value, dij), j);
            }
            SpectralField inner = ti * cd(2.0 * prm.mu_bar, 0.0) +
                                  grad_ld[i] * cd(prm.lambda_bar, 0.0);
            out.viscous_var[i] = pointwise_product(inv_rho.value, inner);
        }
    }

    // volume correction to the constant-coefficient viscous operator
    for (int i = 0; i < d; ++i) {
        SpectralField au_i = laplacian(st.u[i]) * cd(prm.mu_bar, 0.0) +
                             derivative(div_u, i) * cd(prm.mu_bar + prm.lambda_bar, 0.0);
        out.viscous_volume[i] = pointwise_product(vol_gap.value, au_i) * cd(-1.0, 0.0);
    }

    // pressure-slope deviation times grad a
    for (int i = 0; i < d; ++i)
        out.pressure_slope[i] = pointwise_product(pr_gap.value, grad_a[i]);

    // capillarity: kappa_bar grad(kappa~(a) lap a + (1/2) grad kappa~(a) . grad a)
    {
        SpectralField lap_a = laplacian(st.a);
        VectorField grad_k = gradient(ka_f.value);
        SpectralField scal = pointwise_product(ka_f.value, lap_a);
        for (int c = 0; c < d; ++c)
            scal += pointwise_product(grad_k[c], grad_a[c]) * cd(0.5, 0.0);
        VectorField gs = gradient(scal);
        for (int i = 0; i < d; ++i) out.capillary[i] = gs[i] * cd(prm.kappa_bar, 0.0);
    }
    return out;
}

// ---- time stepping -----------------------------------------------------

enum class StepMode { plain, gevrey_weighted };

struct StepParams {
    LinearParams lin;
    CoefficientModel model;
    StepMode mode = StepMode::plain;
    double c0 = 0.0;        // weight growth rate; 0 reduces the weighted mode to plain
    bool nonlinear = true;  // false: pure semigroup transport
};

namespace detail {

inline State add_scaled(const State& x, double c, const State& k) {
    State r = x;
    r.a += k.a * cd(c, 0.0);
    r.u += k.u * cd(c, 0.0);
    return r;
}

inline State nonlinear_slope(const State& y, const StepParams& p) {
    NonlinearParts n = nonlinear_rhs(y, p.model, p.lin);
    return State{std::move(n.mass_rhs), n.momentum_rhs()};
}

// e^{delta |xi|_1} with the exponent clamped at the global gain cap; used on
// post-floor states where every above-cap mode is exactly zero.
inline SpectralField grow_capped(const SpectralField& f, double delta) {
    const Grid& g = f.grid();
    SpectralField out(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        out.coeff(i) = std::exp(std::min(delta * g.xi_l1(i), kGevreyGainCap)) * f.coeff(i);
    return out;
}

// Coefficients below 1e-16 of the field peak are transform round-off; zeroing
// them keeps the growing weight from amplifying noise into the tail fit.
inline void noise_floor(SpectralField& f) {
    double peak = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) peak = std::max(peak, std::abs(f.coeff(i)));
    const double thr = 1e-16 * peak;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (std::abs(f.coeff(i)) < thr) f.coeff(i) = cd(0.0, 0.0);
}

inline State state_weight(const State& y, double delta) {
    State r{gevrey_weight(y.a, delta), VectorField(y.u.grid())};
    for (int c = 0; c < y.u.dim(); ++c) r.u[c] = gevrey_weight(y.u[c], delta);
    return r;
}

}  // namespace detail

// One Lawson-RK4 step around the exact propagator:
//   y1 = W(h) y0 + (h/6) (W(h) k1 + 2 W(h/2) (k2 + k3) + k4).
inline State step_plain(const State& y0, double dt, const StepParams& p) {
    if (!p.nonlinear) return apply_semigroup(y0, dt, p.lin);
    const double h2 = dt / 2.0;
    State k1 = detail::nonlinear_slope(y0, p);
    State y2 = apply_semigroup(detail::add_scaled(y0, h2, k1), h2, p.lin);
    State k2 = detail::nonlinear_slope(y2, p);
    State w2y = apply_semigroup(y0, h2, p.lin);
    State k3 = detail::nonlinear_slope(detail::add_scaled(w2y, h2, k2), p);
    State wy = apply_semigroup(y0, dt, p.lin);
    State k4 = detail::nonlinear_slope(
        detail::add_scaled(wy, dt, apply_semigroup(k3, h2, p.lin)), p);

    State acc = apply_semigroup(k1, dt, p.lin);
    acc = detail::add_scaled(acc, 2.0, apply_semigroup(detail::add_scaled(k2, 1.0, k3), h2, p.lin));
    acc = detail::add_scaled(acc, 1.0, k4);
    return detail::add_scaled(wy, dt / 6.0, acc);
}

// Advances the stored state from t to t + dt. In the weighted mode the stored
// state carries the weight e^{sqrt(c0 t) |xi|_1}; the step peels the current
// weight off (pure damping), advances the plain variables, and applies the
// grown weight, so the stored trajectory is exactly the weighted transform of
// the plain one up to the noise floor.
inline State step(const State& y, double t, double dt, const StepParams& p) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: wants dt > 0");
    if (!(t >= 0.0)) throw std::invalid_argument("step: wants t >= 0");
    if (p.mode == StepMode::plain || p.c0 == 0.0) return step_plain(y, dt, p);
    if (!(p.c0 > 0.0)) throw std::invalid_argument("step: weight growth rate must be >= 0");

    State plain = detail::state_weight(y, -std::sqrt(p.c0 * t));
    State out = step_plain(plain, dt, p);
    detail::noise_floor(out.a);
    for (int c = 0; c < out.u.dim(); ++c) detail::noise_floor(out.u[c]);
    const double d1 = std::sqrt(p.c0 * (t + dt));
    State r{detail::grow_capped(out.a, d1), VectorField(out.u.grid())};
    for (int c = 0; c < out.u.dim(); ++c) r.u[c] = detail::grow_capped(out.u[c], d1);
    return r;
}

// Exponent budget of the weighted linear flow: the lattice maximum of
// sqrt(c0 t) |xi|_1 - c1 |xi|^2 t, which the separable per-axis bound caps at
// c0 d / (4 c1) independently of t.
inline double weighted_growth_exponent(const Grid& g, double c0, double c1, double t) {
    if (!(c0 >= 0.0) || !(c1 > 0.0) || !(t > 0.0))
        throw std::invalid_argument("weighted_growth_exponent: wants c0 >= 0, c1 > 0, t > 0");
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::sqrt(c0 * t) * g.xi_l1(i) - c1 * g.xi_sq(i) * t);
    return worst;
}

// ---- smallness functionals ----------------------------------------------

struct SmallnessReport {
    double low_pair = 0.0;  // (a,u) low norm at regularity d/2 - 1, L2 blocks
    double high_a = 0.0;    // a high norm at regularity d/p, Lp blocks
    double high_u = 0.0;    // u high norm at regularity d/p - 1, Lp blocks
    double total() const { return low_pair + high_a + high_u; }
};

namespace detail {

inline void check_smallness_indices(int d, double p, int k0) {
    if (k0 < 0) throw std::invalid_argument("smallness: k0 must be >= 0");
    if (d >= 2) {
        BesovSpec spec{0.0, p, 1.0, k0};
        spec.validate_for_existence(d);
    } else if (p != 2.0) {
        throw std::invalid_argument("smallness: one-dimensional runs support p = 2 only");
    }
}

}  // namespace detail

// The scale-critical size of (a, u): low frequencies of the pair measured
// together at regularity d/2 - 1 with L2 blocks, high frequencies of a and u
// separately at d/p and d/p - 1 with Lp blocks. Means are frozen by the flow
// and are not part of the homogeneous norms.
inline SmallnessReport data_smallness(const State& st, double p = 2.0, int k0 = 2) {
    const Grid& g = st.a.grid();
    const int d = g.dim();
    detail::check_smallness_indices(d, p, k0);
    DyadicPartition part = build_partition(g);

    SpectralField a0 = st.a;
    a0.set_mean(cd(0.0, 0.0));
    VectorField u0 = st.u;
    for (int c = 0; c < d; ++c) u0[c].set_mean(cd(0.0, 0.0));

    SmallnessReport rep;
    for (int j = part.j_min(); j <= part.j_max(); ++j) {
        if (j <= k0) {
            double sq = std::pow(part.block_lp_norm(a0, j, 2.0), 2);
            for (int c = 0; c < d; ++c) sq += std::pow(part.block_lp_norm(u0[c], j, 2.0), 2);
            rep.low_pair += std::pow(2.0, j * (d / 2.0 - 1.0)) * std::sqrt(sq);
        }
        if (j >= k0 - 1) {
            rep.high_a += std::pow(2.0, j * (d / p)) * part.block_lp_norm(a0, j, p);
            VectorField bu(g);
            for (int c = 0; c < d; ++c) bu[c] = part.block(u0[c], j);
            rep.high_u += std::pow(2.0, j * (d / p - 1.0)) * lp_norm(bu, p);
        }
    }
    return rep;
}

struct RunningSmallness {
    double low_inf = 0.0;  // sup-in-time low pair norm at d/2 - 1
    double low_l1 = 0.0;   // time-integrated low pair norm at d/2 + 1
    double high_a = 0.0;   // max of sup at d/p and time integral at d/p + 2
    double high_u = 0.0;   // max of sup at d/p - 1 and time integral at d/p + 1
    double total() const { return low_inf + low_l1 + high_a + high_u; }
};

// Accumulates the per-block time norms behind the running smallness
// functional: per shell, the sup in time and the trapezoid time integral of
// the block norms, aggregated with the appropriate regularity weights.
class SmallnessAccumulator {
  public:
    SmallnessAccumulator(const Grid& g, double p, int k0)
        : part_(build_partition(g)), p_(p), k0_(k0), d_(g.dim()) {
        detail::check_smallness_indices(d_, p_, k0_);
        const auto shells = static_cast<std::size_t>(part_.j_max() - part_.j_min() + 1);
        pair_.resize(shells);
        a_.resize(shells);
        u_.resize(shells);
    }

    void push(double t, const State& plain) {
        if (has_prev_ && !(t > t_prev_))
            throw std::invalid_argument("smallness: timestamps must be strictly increasing");
        const Grid& g = plain.a.grid();
        SpectralField a0 = plain.a;
        a0.set_mean(cd(0.0, 0.0));
        VectorField u0 = plain.u;
        for (int c = 0; c < d_; ++c) u0[c].set_mean(cd(0.0, 0.0));

        for (int j = part_.j_min(); j <= part_.j_max(); ++j) {
            const auto s = static_cast<std::size_t>(j - part_.j_min());
            double sq = std::pow(part_.block_lp_norm(a0, j, 2.0), 2);
            for (int c = 0; c < d_; ++c) sq += std::pow(part_.block_lp_norm(u0[c], j, 2.0), 2);
            double bpair = std::sqrt(sq);
            double ba = part_.block_lp_norm(a0, j, p_);
            VectorField bu(g);
            for (int c = 0; c < d_; ++c) bu[c] = part_.block(u0[c], j);
            double bv = lp_norm(bu, p_);
            pair_[s].push(t, bpair, has_prev_);
            a_[s].push(t, ba, has_prev_);
            u_[s].push(t, bv, has_prev_);
        }
        t_prev_ = t;
        has_prev_ = true;
    }

    RunningSmallness current() const {
        RunningSmallness r;
        double ha_inf = 0.0, ha_l1 = 0.0, hu_inf = 0.0, hu_l1 = 0.0;
        for (int j = part_.j_min(); j <= part_.j_max(); ++j) {
            const auto s = static_cast<std::size_t>(j - part_.j_min());
            if (j <= k0_) {
                r.low_inf += std::pow(2.0, j * (d_ / 2.0 - 1.0)) * pair_[s].sup;
                r.low_l1 += std::pow(2.0, j * (d_ / 2.0 + 1.0)) * pair_[s].integral;
            }
            if (j >= k0_ - 1) {
                ha_inf += std::pow(2.0, j * (d_ / p_)) * a_[s].sup;
                ha_l1 += std::pow(2.0, j * (d_ / p_ + 2.0)) * a_[s].integral;
                hu_inf += std::pow(2.0, j * (d_ / p_ - 1.0)) * u_[s].sup;
                hu_l1 += std::pow(2.0, j * (d_ / p_ + 1.0)) * u_[s].integral;
            }
        }
        r.high_a = std::max(ha_inf, ha_l1);
        r.high_u = std::max(hu_inf, hu_l1);
        return r;
    }

  private:
    struct ShellTrack {
        double sup = 0.0;
        double integral = 0.0;
        double last = 0.0;
        double t_last = 0.0;

        void push(double t, double v, bool has_prev) {
            sup = std::max(sup, v);
            if (has_prev) integral += 0.5 * (last + v) * (t - t_last);
            last = v;
            t_last = t;
        }
    };

    DyadicPartition part_;
    double p_;
    int k0_;
    int d_;
    bool has_prev_ = false;
    double t_prev_ = 0.0;
    std::vector<ShellTrack> pair_, a_, u_;
};

inline RunningSmallness trajectory_smallness(const std::vector<double>& times,
                                             const std::vector<State>& states, double p = 2.0,
                                             int k0 = 2) {
    if (times.size() != states.size() || times.empty())
        throw std::invalid_argument("trajectory_smallness: empty or mismatched trajectory");
    SmallnessAccumulator acc(states.front().a.grid(), p, k0);
    for (std::size_t i = 0; i < times.size(); ++i) acc.push(times[i], states[i]);
    return acc.current();
}

// ---- simulation driver ---------------------------------------------------

struct InitialData {
    std::uint64_t seed = 1;
    int k_lo = 1, k_hi = 3;
    double amplitude_a = 1e-3;
    double amplitude_u = 1e-3;
    bool solenoidal_u = false;
};

struct SimConfig {
    int dim = 2;
    int n = 32;
    double length = 2.0 * 3.14159265358979323846;
    LinearParams lin;
    CoefficientModel model;
    StepMode mode = StepMode::plain;
    double c0 = -1.0;  // weighted-mode growth rate; negative selects c1/dim
    bool nonlinear = true;
    double dt = 1e-2;
    double dt_floor = 1e-8;
    double t_end = 1.0;
    double cfl = 0.5;
    int sample_every = 1;
    double p = 2.0;
    int k0 = 2;
    InitialData data;
    double blowup_guard = 1e6;

    // Decay rate of the low-frequency linear modes; the admissible weight
    // growth is limited by it.
    double c1() const { return 0.5 * std::min(1.0, lin.kappa_bar); }
    double gevrey_rate() const { return c0 < 0.0 ? c1() / dim : c0; }

    void validate() const {
        if (dim < 1 || dim > 3) throw std::invalid_argument("config: dim must be 1, 2 or 3");
        if (!(length > 0.0)) throw std::invalid_argument("config: length must be positive");
        if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be positive");
        if (!(dt_floor > 0.0) || dt_floor > dt)
            throw std::invalid_argument("config: dt_floor must lie in (0, dt]");
        if (!(t_end > 0.0)) throw std::invalid_argument("config: t_end must be positive");
        if (!(cfl > 0.0)) throw std::invalid_argument("config: cfl must be positive");
        if (sample_every < 1) throw std::invalid_argument("config: sample_every must be >= 1");
        if (!(blowup_guard > 0.0)) throw std::invalid_argument("config: blowup_guard must be positive");
        lin.validate();
        model.validate();
        detail::check_smallness_indices(dim, p, k0);
        if (mode == StepMode::gevrey_weighted && gevrey_rate() > c1() / dim * (1.0 + 1e-12))
            throw std::invalid_argument("config: weight growth rate must satisfy c0 <= c1/d");
    }
};

struct TrajectorySample {
    double t = 0.0;
    double energy = 0.0;           // L2 size of (a, u)
    double low_pair = 0.0;
    double high_a = 0.0;
    double high_u = 0.0;
    double smallness = 0.0;        // instantaneous functional, low_pair + high_a + high_u
    double x_p = 0.0;              // running functional up to this time
    double weighted_energy = 0.0;  // L2 size of the stored (weighted) state
    double radius = 0.0;           // analyticity-radius fit of a; NaN when unresolved
    double mean_a = 0.0;
    double series_tail = 0.0;      // composition truncation majorant at this sample
};

struct Trajectory {
    std::vector<double> times;
    std::vector<TrajectorySample> samples;
    std::vector<State> states;  // plain (unweighted) states at the sampled times
    bool diverged = false;
    double diverged_at = std::numeric_limits<double>::quiet_NaN();
};

inline State initial_state(const Grid& g, const InitialData& rec) {
    State st{band_limited_field(g, rec.seed, rec.k_lo, rec.k_hi, rec.amplitude_a),
             band_limited_vector_field(g, rec.seed * 7919ULL + 13ULL, rec.k_lo, rec.k_hi,
                                       rec.amplitude_u)};
    if (rec.solenoidal_u) st.u = leray_project(st.u).p;
    return st;
}

namespace detail {

inline bool state_finite(const State& st) {
    for (std::size_t i = 0; i < st.a.size(); ++i) {
        const cd& v = st.a.coeff(i);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    for (int c = 0; c < st.u.dim(); ++c)
        for (std::size_t i = 0; i < st.u[c].size(); ++i) {
            const cd& v = st.u[c].coeff(i);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        }
    return true;
}

inline double state_energy(const State& st) {
    double e = std::pow(lp_norm(st.a, 2.0), 2);
    e += std::pow(lp_norm(st.u, 2.0), 2);
    return std::sqrt(e);
}

}  // namespace detail

inline Trajectory run(const SimConfig& cfg, const State& y0) {
    cfg.validate();
    const Grid& g = y0.a.grid();
    if (g.dim() != cfg.dim || g.n() != cfg.n)
        throw std::invalid_argument("run: initial state grid does not match the config");

    StepParams sp{cfg.lin, cfg.model,
                  cfg.mode, cfg.mode == StepMode::gevrey_weighted ? cfg.gevrey_rate() : 0.0,
                  cfg.nonlinear};
    const bool weighted = sp.mode == StepMode::gevrey_weighted && sp.c0 > 0.0;

    Trajectory traj;
    SmallnessAccumulator acc(g, cfg.p, cfg.k0);
    State y = y0;  // at t = 0 the weight is the identity

    auto record = [&](double t, const State& plain, double wenergy) {
        acc.push(t, plain);
        TrajectorySample s;
        s.t = t;
        s.energy = detail::state_energy(plain);
        SmallnessReport inst = data_smallness(plain, cfg.p, cfg.k0);
        s.low_pair = inst.low_pair;
        s.high_a = inst.high_a;
        s.high_u = inst.high_u;
        s.smallness = inst.total();
        s.x_p = acc.current().total();
        s.weighted_energy = wenergy;
        try {
            s.radius = estimate_radius(plain.a).radius;
        } catch (const std::runtime_error&) {
            s.radius = std::numeric_limits<double>::quiet_NaN();
        }
        s.mean_a = plain.a.mean().real();
        if (cfg.nonlinear) {
            double sup_a = 0.0;
            for (const cd& v : to_padded_physical(plain.a)) sup_a = std::max(sup_a, std::abs(v));
            s.series_tail = cfg.model.composition_tail(sup_a);
        }
        traj.times.push_back(t);
        traj.samples.push_back(s);
        traj.states.push_back(plain);
    };

    record(0.0, y, detail::state_energy(y));

    const double dx = cfg.length / cfg.n;
    const double tiny = 1e-12 * cfg.t_end;
    double t = 0.0;
    std::int64_t k = 0;
    State plain = y;
    while (t < cfg.t_end - tiny) {
        double uinf = lp_norm(plain.u, std::numeric_limits<double>::infinity());
        double dt_k = uinf > 0.0 ? std::min(cfg.dt, std::max(cfg.dt_floor, cfg.cfl * dx / uinf))
                                 : cfg.dt;
        dt_k = std::min(dt_k, cfg.t_end - t);

        try {
            y = step(y, t, dt_k, sp);
        } catch (const std::domain_error&) {
            traj.diverged = true;
            traj.diverged_at = t;
            break;
        }
        t += dt_k;
        ++k;

        plain = weighted ? detail::state_weight(y, -std::sqrt(sp.c0 * t)) : y;
        double energy = detail::state_finite(plain) ? detail::state_energy(plain)
                                                    : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(energy) || energy > cfg.blowup_guard) {
            traj.diverged = true;
            traj.diverged_at = t;
            break;
        }
        if (k % cfg.sample_every == 0 || t >= cfg.t_end - tiny)
            record(t, plain, detail::state_energy(y));
    }
    return traj;
}

inline Trajectory run(const SimConfig& cfg) {
    cfg.validate();
    Grid g = make_grid(cfg.dim, cfg.n, cfg.length);
    return run(cfg, initial_state(g, cfg.data));
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,energy,low_pair,high_a,high_u,smallness,x_p,weighted_energy,radius,mean_a,"
          "series_tail\n";
    for (const TrajectorySample& s : traj.samples)
        os << fmt_g17(s.t) << ',' << fmt_g17(s.energy) << ',' << fmt_g17(s.low_pair) << ','
           << fmt_g17(s.high_a) << ',' << fmt_g17(s.high_u) << ',' << fmt_g17(s.smallness) << ','
           << fmt_g17(s.x_p) << ',' << fmt_g17(s.weighted_energy) << ',' << fmt_g17(s.radius)
           << ',' << fmt_g17(s.mean_a) << ',' << fmt_g17(s.series_tail) << '\n';
}

}  // namespace nsk
