#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "nsk/linear_lab.hpp"
#include "nsk/random_fields.hpp"
#include "oracles.hpp"

using namespace nsk;

namespace {
constexpr double kPi = 3.14159265358979323846;

double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.grid().size(); ++i)
        m = std::max(m, std::abs(a.coeff(i) - b.coeff(i)));
    return m;
}

double max_coeff_diff(const VectorField& a, const VectorField& b) {
    double m = 0.0;
    for (int c = 0; c < a.dim(); ++c) m = std::max(m, max_coeff_diff(a[c], b[c]));
    return m;
}

double max_abs_coeff(const State& st) {
    double m = 0.0;
    for (const auto& v : st.a.coeffs()) m = std::max(m, std::abs(v));
    for (int c = 0; c < st.u.dim(); ++c)
        for (const auto& v : st.u[c].coeffs()) m = std::max(m, std::abs(v));
    return m;
}

State random_state(const Grid& g, std::uint64_t seed) {
    State st{random_field(g, seed), VectorField(g)};
    for (int c = 0; c < g.dim(); ++c) st.u[c] = random_field(g, seed + 100 * (c + 1));
    return st;
}

// Mode ODE right-hand side for the oracle.
auto mode_rhs(double xi, const LinearParams& prm) {
    return [xi, prm](double, const oracle::Vec& y) {
        oracle::Vec d(2);
        d[0] = -xi * y[1];
        d[1] = xi * (1.0 + prm.kappa_bar * xi * xi) * y[0] - xi * xi * y[1];
        return d;
    };
}
}  // namespace

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(LinearParams{}.validate());
    LinearParams p = LinearParams::normalized(0.3, 0.4);
    CHECK(p.lambda_bar == Catch::Approx(0.2));
    CHECK(p.nu_bar() == Catch::Approx(1.0));
    CHECK_THROWS_AS(LinearParams({0.0, 0.25, 0.5}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LinearParams({1.0, -0.1, 1.2}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(LinearParams({1.0, 0.3, 0.5}).validate(), std::invalid_argument);
}

TEST_CASE("mode generator entries") {
    LinearParams prm{1.0, 0.25, 0.5};
    Mat2 m = mode_generator(1.0, prm);
    CHECK(m(0, 0) == cd(0.0));
    CHECK(m(0, 1) == cd(-1.0));
    CHECK(m(1, 0) == cd(2.0));
    CHECK(m(1, 1) == cd(-1.0));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 6.0);
    for (int k = 0; k < 20; ++k) {
        double xi = u(rng), kb = u(rng);
        Mat2 g = mode_generator(xi, LinearParams{kb, 0.25, 0.5});
        CHECK(g.trace().real() == Catch::Approx(-xi * xi).epsilon(1e-14));
        CHECK(g.det().real() == Catch::Approx(xi * xi * (1.0 + kb * xi * xi)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(mode_generator(0.0, prm), std::invalid_argument);
    CHECK_THROWS_AS(mode_generator(-1.0, prm), std::invalid_argument);
}

TEST_CASE("matrix helpers") {
    Mat2 d;
    d(0, 0) = 3.0;
    d(1, 1) = 4.0;
    CHECK(opnorm(d) == Catch::Approx(4.0).epsilon(1e-14));
    Mat2 rot;
    rot(0, 1) = -1.0;
    rot(1, 0) = 1.0;
    CHECK(opnorm(rot) == Catch::Approx(1.0).epsilon(1e-14));
    Mat2 shear;
    shear(0, 0) = shear(0, 1) = shear(1, 1) = 1.0;
    CHECK(opnorm(shear) == Catch::Approx(0.5 * (1.0 + std::sqrt(5.0))).epsilon(1e-14));
}

TEST_CASE("exact mode propagator") {
    SECTION("t = 0 is the identity") {
        LinearParams prm{0.7, 0.25, 0.5};
        Mat2 p = mode_propagator(2.3, 0.0, prm);
        CHECK(std::abs(p(0, 0) - cd(1.0)) < 1e-15);
        CHECK(std::abs(p(1, 1) - cd(1.0)) < 1e-15);
        CHECK(std::abs(p(0, 1)) < 1e-15);
        CHECK(std::abs(p(1, 0)) < 1e-15);
    }

    SECTION("matches the adaptive ODE oracle") {
        for (double kb : {0.1, 0.25, 1.0, 4.0}) {
            LinearParams prm{kb, 0.25, 0.5};
            LyapunovBracket br = lyapunov_constants(prm);
            for (double xi : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
                ModeState s0{xi, cd(0.7, -0.4), cd(-0.3, 0.9)};
                const double n0 = triple_norm(s0);
                for (double t : {0.3, 1.0, 10.0}) {
                    ModeState got = propagate_mode_exact(s0, t, prm);
                    oracle::Vec ref = oracle::integrate(mode_rhs(xi, prm),
                                                        {s0.a_hat, s0.v_hat}, 0.0, t);
                    double diff = std::max(std::abs(got.a_hat - ref[0]),
                                           std::abs(got.v_hat - ref[1]));
                    // below 1e-30 of the initial amplitude nothing is resolvable
                    double floor =
                        n0 * std::max(std::exp(-br.decay_rate * xi * xi * t), 1e-30);
                    double ref_mag = std::max(std::abs(ref[0]), std::abs(ref[1]));
                    CHECK(diff <= 1e-8 * (ref_mag + floor));
                }
            }
        }
    }

    SECTION("accurate through both coalescence loci") {
        // Generator coalescence: xi^2 = 4 / (1 - 4 kb) for kb < 1/4.
        LinearParams prm{0.1, 0.25, 0.5};
        double xi_star = std::sqrt(4.0 / 0.6);
        for (double xi : {xi_star, xi_star + 1e-9, xi_star * (1 + 1e-6)}) {
            ModeState s0{xi, cd(1.0, 0.2), cd(0.3, -0.5)};
            ModeState got = propagate_mode_exact(s0, 1.0, prm);
            oracle::Vec ref =
                oracle::integrate(mode_rhs(xi, prm), {s0.a_hat, s0.v_hat}, 0.0, 1.0);
            CHECK(std::abs(got.a_hat - ref[0]) < 1e-9 * triple_norm(s0));
            CHECK(std::abs(got.v_hat - ref[1]) < 1e-9 * triple_norm(s0));
        }
        // Frame coalescence point kb = 1/4, xi = 1/sqrt(2).
        LinearParams prm4{0.25, 0.25, 0.5};
        ModeState s0{1.0 / std::sqrt(2.0), cd(0.4, 0.1), cd(-0.2, 0.6)};
        ModeState got = propagate_mode_exact(s0, 2.0, prm4);
        oracle::Vec ref =
            oracle::integrate(mode_rhs(s0.xi, prm4), {s0.a_hat, s0.v_hat}, 0.0, 2.0);
        CHECK(std::abs(got.a_hat - ref[0]) < 1e-9);
        CHECK(std::abs(got.v_hat - ref[1]) < 1e-9);
    }

    SECTION("propagator is a semigroup") {
        LinearParams prm{0.6, 0.3, 0.4};
        for (double xi : {0.4, 2.0, 7.0}) {
            Mat2 ab = mode_propagator(xi, 0.7, prm) * mode_propagator(xi, 1.4, prm);
            Mat2 whole = mode_propagator(xi, 2.1, prm);
            for (int e = 0; e < 4; ++e) CHECK(std::abs(ab.m[e] - whole.m[e]) < 1e-10);
        }
    }

    SECTION("negative time is rejected") {
        CHECK_THROWS_AS(propagate_mode_exact(ModeState{1.0, 1.0, 0.0}, -0.1,
                                             LinearParams{1.0, 0.25, 0.5}),
                        std::invalid_argument);
    }
}

TEST_CASE("mode decay envelope") {
    // |(a, xi a, v)(t)| <= C e^{-c1 xi^2 t} |(a, xi a, v)(0)| in operator-norm
    // form: the worst initial state is covered, not just samples.
    std::vector<double> ts{0.0, 0.05, 0.2, 0.5, 1.0, 1.15, 2.0, 5.0, 10.0, 20.0};
    for (double kb : {0.1, 0.25, 1.0, 4.0}) {
        LinearParams prm{kb, 0.25, 0.5};
        double worst = 0.0;
        for (int i = 0; i < 25; ++i) {
            double xi = 0.1 * std::pow(80.0, i / 24.0);  // log grid [0.1, 8]
            for (double t : ts) worst = std::max(worst, envelope_ratio(xi, t, prm));
        }
        CHECK(worst <= 1.0);
        CHECK(worst > 0.02);  // the bound is within reach, not vacuous
    }
}

TEST_CASE("lyapunov functional") {
    LinearParams prm{1.0, 0.25, 0.5};

    SECTION("closed-form spot value") {
        ModeState st{1.0, cd(1.0, 0.0), cd(0.0, 0.0)};
        CHECK(lyapunov(st, prm, 0.5) == Catch::Approx(2.5).epsilon(1e-15));
        CHECK(lyapunov(ModeState{3.0, 0.0, 0.0}, prm, 0.5) == 0.0);
    }

    SECTION("beta domain") {
        ModeState st{1.0, cd(1.0), cd(0.5)};
        for (double beta : {0.0, 1.0, -0.2, 1.3})
            CHECK_THROWS_AS(lyapunov(st, prm, beta), std::invalid_argument);
    }

    SECTION("equivalence bracket at beta 1/2") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double kb : {0.1, 0.25, 1.0, 4.0}) {
            LinearParams p{kb, 0.25, 0.5};
            LyapunovBracket br = lyapunov_constants(p);
            for (int k = 0; k < 200; ++k) {
                double xi = 0.05 * std::pow(400.0, 0.005 * (k % 200));
                ModeState st{xi, cd(u(rng), u(rng)), cd(u(rng), u(rng))};
                double t2 = triple_norm(st) * triple_norm(st);
                double l2 = lyapunov(st, p, 0.5);
                CHECK(l2 >= br.lower * t2 * (1.0 - 1e-12));
                CHECK(l2 <= br.upper * t2 * (1.0 + 1e-12));
            }
        }
    }

    SECTION("dissipation along the exact flow") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> uxi(0.1, 4.0), ukb(0.1, 2.0), us(-1.0, 1.0);
        for (int trial = 0; trial < 12; ++trial) {
            double xi = uxi(rng), kb = ukb(rng);
            LinearParams p{kb, 0.25, 0.5};
            ModeState st{xi, cd(us(rng), us(rng)), cd(us(rng), us(rng))};
            double scale = triple_norm(st);
            st.a_hat /= scale;
            st.v_hat /= scale;
            double lam = std::max(xi * xi, xi * std::sqrt(1.0 + kb * xi * xi));
            double h = 6e-4 / std::max(1.0, lam);
            std::array<double, 5> l2;
            for (int k = 0; k < 5; ++k)
                l2[k] = lyapunov(propagate_mode_exact(st, k * h, p), p, 0.5);
            double ddt = (l2[0] - 8.0 * l2[1] + 8.0 * l2[3] - l2[4]) / (12.0 * h);
            double c1 = lyapunov_constants(p).decay_rate;
            CHECK(ddt + c1 * xi * xi * l2[2] <= 1e-10);
        }
    }
}

TEST_CASE("frame eigenvalues") {
    SECTION("sum, product and the sign convention") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.05, 5.0);
        for (int k = 0; k < 40; ++k) {
            double xi = u(rng), kb = u(rng);
            EigenPair ev = eigenvalues(xi, kb);
            double xi2 = xi * xi;
            CHECK(std::abs(ev.plus + ev.minus - cd(1.0 + xi2)) < 1e-12 * (1.0 + xi2));
            cd prod = ev.plus * ev.minus;
            double expect = xi2 * (1.0 + kb * xi2);
            double expanded =
                0.25 * ((1.0 + xi2) * (1.0 + xi2) - ((1.0 - 4.0 * kb) * xi2 * xi2 - 2.0 * xi2 + 1.0));
            CHECK(std::abs(prod - cd(expect)) < 1e-12 * (1.0 + expect));
            CHECK(expect == Catch::Approx(expanded).epsilon(1e-12));
        }
        EigenPair unit = eigenvalues(1.0, 1.0);  // discriminant -4, root 2i
        CHECK(std::abs(unit.plus - cd(1.0, 1.0)) < 1e-15);
        CHECK(std::abs(unit.minus - cd(1.0, -1.0)) < 1e-15);
    }

    SECTION("coalescence at kb = 1/4") {
        // Discriminant reduces to 1 - 2 xi^2; bisection pins the root.
        double lo = 0.5, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            (eigenvalues(mid, 0.25).discriminant > 0.0 ? lo : hi) = mid;
        }
        CHECK(0.5 * (lo + hi) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-8));
    }

    SECTION("matches the frame matrix spectrum") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.05, 5.0);
        for (int k = 0; k < 40; ++k) {
            double xi = u(rng), kb = u(rng);
            auto [lp, lm] = mat2_eigenvalues(velocity_frame_matrix(xi, kb));
            EigenPair ev = eigenvalues(xi, kb);
            double scale = std::abs(ev.plus) + std::abs(ev.minus);
            CHECK(std::abs(lp - ev.plus) < 1e-12 * scale);
            CHECK(std::abs(lm - ev.minus) < 1e-12 * scale);
        }
    }
}

TEST_CASE("effective-velocity transform") {
    SECTION("alpha algebra") {
        for (double kb : {0.1, 0.25, 1.0, 4.0}) {
            cd alpha = haspot_alpha(kb);
            CHECK(std::abs(alpha * (cd(1.0) - alpha) - cd(kb)) < 1e-14 * (1.0 + kb));
        }
        CHECK(haspot_alpha(0.25) == cd(0.5, 0.0));
        cd a1 = haspot_alpha(1.0);
        CHECK(std::abs(a1 - cd(0.5, 0.5 * std::sqrt(3.0))) < 1e-15);
        CHECK((cd(1.0) - a1).real() == Catch::Approx(0.5).epsilon(1e-14));
    }

    SECTION("frame identities on fields") {
        Grid g = make_grid(2, 16, 2.0 * kPi);
        LinearParams prm{1.0, 0.25, 0.5};
        State st = random_state(g, 77);
        HaspotFrame fr = haspot_transform(st.a, st.u, prm);

        // div v = div u - a
        SpectralField lhs = divergence(fr.v);
        SpectralField rhs = divergence(st.u) - st.a;
        CHECK(max_coeff_diff(lhs, rhs) < 1e-12 * max_abs_coeff(st));

        // w - v = alpha grad a, mode by mode
        VectorField diff = fr.w - fr.v;
        VectorField expect = gradient(st.a) * fr.alpha;
        CHECK(max_coeff_diff(diff, expect) < 1e-13 * max_abs_coeff(st));
    }

    SECTION("evolution residuals vanish along the exact flow") {
        struct Case {
            int d, n;
            double kb;
        };
        for (Case c : {Case{1, 64, 0.1}, Case{2, 16, 1.0}, Case{2, 16, 0.25}}) {
            Grid g = make_grid(c.d, c.n, 2.0 * kPi);
            LinearParams prm{c.kb, 0.25, 0.5};
            State st = random_state(g, 31 + c.d);
            HaspotFrame fr = haspot_transform(st.a, st.u, prm);
            INFO("d=" << c.d << " kb=" << c.kb);
            CHECK(fr.residual_w < 1e-6);
            CHECK(fr.residual_v < 1e-6);
        }
    }

    SECTION("degenerate capillarity is rejected") {
        Grid g = make_grid(1, 32, 2.0 * kPi);
        State st = random_state(g, 2);
        CHECK_THROWS_AS(haspot_transform(st.a, st.u, LinearParams{0.0, 0.25, 0.5}),
                        std::invalid_argument);
    }
}

TEST_CASE("linear semigroup on fields") {
    Grid g = make_grid(2, 16, 2.0 * kPi);
    LinearParams prm{1.0, 0.25, 0.5};

    SECTION("t = 0 is the identity") {
        State st = random_state(g, 41);
        State out = apply_semigroup(st, 0.0, prm);
        CHECK(max_coeff_diff(out.a, st.a) < 1e-14);
        CHECK(max_coeff_diff(out.u, st.u) < 1e-14);
    }

    SECTION("solenoidal data follows the shear heat flow") {
        State st{SpectralField(g), leray_project(random_state(g, 52).u).p};
        const double t = 0.6;
        State out = apply_semigroup(st, t, prm);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double decay = std::exp(-prm.mu_bar * g.xi_sq(i) * t);
            for (int c = 0; c < g.dim(); ++c)
                worst = std::max(worst,
                                 std::abs(out.u[c].coeff(i) - decay * st.u[c].coeff(i)));
        }
        CHECK(worst < 1e-13);
        // dot(xi, Pu) vanishes only to projection roundoff, so a picks up dust
        CHECK(lp_norm(out.a, 2.0) < 1e-12);
    }

    SECTION("matches spectral ODE integration of the full system") {
        Grid g8 = make_grid(2, 8, 2.0 * kPi);
        State st = random_state(g8, 63);
        const double t = 0.7;
        const std::size_t m = g8.size();
        oracle::Vec y0(3 * m);
        for (std::size_t i = 0; i < m; ++i) {
            y0[i] = st.a.coeff(i);
            y0[m + i] = st.u[0].coeff(i);
            y0[2 * m + i] = st.u[1].coeff(i);
        }
        auto rhs = [&](double, const oracle::Vec& y) {
            oracle::Vec d(3 * m);
            for (std::size_t i = 0; i < m; ++i) {
                auto xi = g8.xi(i);
                const double s2 = g8.xi_sq(i);
                cd a = y[i], u0 = y[m + i], u1 = y[2 * m + i];
                cd div_u = cd(0.0, 1.0) * (xi[0] * u0 + xi[1] * u1);
                cd dot = xi[0] * u0 + xi[1] * u1;
                d[i] = -div_u;
                const double muext = prm.mu_bar + prm.lambda_bar;
                d[m + i] = -prm.mu_bar * s2 * u0 - muext * xi[0] * dot -
                           cd(0.0, 1.0) * xi[0] * (1.0 + prm.kappa_bar * s2) * a;
                d[2 * m + i] = -prm.mu_bar * s2 * u1 - muext * xi[1] * dot -
                               cd(0.0, 1.0) * xi[1] * (1.0 + prm.kappa_bar * s2) * a;
            }
            return d;
        };
        oracle::Vec ref = oracle::integrate(rhs, y0, 0.0, t);
        State out = apply_semigroup(st, t, prm);
        double scale = max_abs_coeff(st), worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            worst = std::max(worst, std::abs(out.a.coeff(i) - ref[i]));
            worst = std::max(worst, std::abs(out.u[0].coeff(i) - ref[m + i]));
            worst = std::max(worst, std::abs(out.u[1].coeff(i) - ref[2 * m + i]));
        }
        CHECK(worst < 1e-8 * scale);
    }

    SECTION("semigroup composition") {
        State st = random_state(g, 74);
        State two = apply_semigroup(apply_semigroup(st, 0.4, prm), 0.9, prm);
        State one = apply_semigroup(st, 1.3, prm);
        double scale = max_abs_coeff(st);
        CHECK(max_coeff_diff(two.a, one.a) < 1e-10 * scale);
        CHECK(max_coeff_diff(two.u, one.u) < 1e-10 * scale);
    }

    SECTION("mean modes are frozen") {
        State st = random_state(g, 85);
        st.a.set_mean(cd(0.3, 0.0));
        st.u[0].set_mean(cd(-0.2, 0.0));
        st.u[1].set_mean(cd(0.1, 0.0));
        State out = apply_semigroup(st, 2.0, prm);
        CHECK(out.a.mean() == st.a.mean());
        CHECK(out.u[0].mean() == st.u[0].mean());
        CHECK(out.u[1].mean() == st.u[1].mean());
    }

    SECTION("negative time is rejected") {
        State st = random_state(g, 96);
        CHECK_THROWS_AS(apply_semigroup(st, -0.5, prm), std::invalid_argument);
    }
}

TEST_CASE("block decay under complex diffusion") {
    Grid g = make_grid(1, 64, 2.0 * kPi);
    DyadicPartition part = build_partition(g);
    SpectralField z = random_field(g, 8);

    SECTION("real diffusion meets the bound with constant one") {
        for (double c : {0.125, 0.5}) {
            HeatCheckResult r = complex_heat_check(part, cd(1.0, 0.0), z, 2, 2.0, c);
            CHECK(r.C == Catch::Approx(1.0).epsilon(1e-12));
            CHECK(r.c == c);
        }
    }

    SECTION("complex diffusion stays bounded") {
        cd beta = cd(1.0) - haspot_alpha(1.0);  // (1 - i sqrt 3)/2
        HeatCheckResult r2 = complex_heat_check(part, beta, z, 2);
        CHECK(r2.C == Catch::Approx(1.0).epsilon(1e-12));  // p = 2 sees only magnitudes
        HeatCheckResult r4 = complex_heat_check(part, beta, z, 2, 4.0);
        CHECK(r4.C >= 1.0);
        CHECK(r4.C < 5.0);
        CHECK(std::isfinite(r4.C));
    }

    SECTION("nonpositive real part is rejected") {
        CHECK_THROWS_AS(complex_heat_check(part, cd(0.0, 1.0), z, 2), std::invalid_argument);
        CHECK_THROWS_AS(complex_heat_check(part, cd(-1.0, 0.0), z, 2), std::invalid_argument);
        CHECK_THROWS_AS(complex_heat_check(part, cd(1.0, 0.0), z, 2, 2.0, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("mode sweep export") {
    LinearParams prm{1.0, 0.25, 0.5};
    std::vector<double> xis{0.1, 0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<double> ts{0.0, 0.5, 1.15, 5.0, 20.0};
    std::ostringstream a, b;
    write_mode_sweep_csv(a, prm, xis, ts);
    write_mode_sweep_csv(b, prm, xis, ts);
    CHECK(a.str() == b.str());

    std::istringstream in(a.str());
    std::string line;
    std::getline(in, line);
    CHECK(line ==
          "xi,kappa_bar,envelope_ratio_max,lambda_plus_re,lambda_plus_im,"
          "lambda_minus_re,lambda_minus_im,discriminant");
    int rows = 0;
    double worst = 0.0;
    while (std::getline(in, line)) {
        ++rows;
        auto last = line.find(',', line.find(',') + 1);
        worst = std::max(worst, std::stod(line.substr(last + 1)));
    }
    CHECK(rows == 6);
    CHECK(worst <= 1.0);
    CHECK(worst > 0.1);
}
