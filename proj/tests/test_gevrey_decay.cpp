#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "../vendor/json.hpp"
#include "nsk/gevrey_decay.hpp"

using namespace nsk;

namespace {
constexpr double kPi = 3.14159265358979323846;

SpectralField l1_profile(const Grid& g, double delta) {
    SpectralField f(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        f.coeff(i) = cd(std::exp(-delta * g.xi_l1(i)), 0.0);
    return f;
}
}  // namespace

TEST_CASE("radius estimate recovers an exponential profile") {
    Grid g = make_grid(2, 32, 2.0 * kPi);
    GevreyFit fit = estimate_radius(l1_profile(g, 2.0));
    CHECK(fit.radius == Catch::Approx(2.0).margin(0.05));
    CHECK(fit.residual < 1e-10);
    CHECK(fit.shells_used >= 4);
    CHECK(fit.window_lo >= 1.0);
    CHECK(fit.window_hi > fit.window_lo);
}

TEST_CASE("radius estimate degrades gracefully off the model") {
    Grid g = make_grid(2, 32, 2.0 * kPi);

    SECTION("flat noise has no analyticity strip") {
        SpectralField f = band_limited_field(g, 8, 1, 15, 1.0);
        GevreyFit fit = estimate_radius(f);
        CHECK(fit.radius < 0.05);
    }

    SECTION("unresolvable spectra are reported, not guessed") {
        CHECK_THROWS_MATCHES(estimate_radius(SpectralField(g)), std::runtime_error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("unresolved")));
        SpectralField one_mode(g);
        one_mode.coeff(1) = cd(1.0, 0.0);
        CHECK_THROWS_AS(estimate_radius(one_mode), std::runtime_error);
    }

    SECTION("a square-root-in-time envelope reads back as sqrt(t)") {
        Grid line = make_grid(1, 64, 2.0 * kPi);
        double prev = 0.0;
        for (double t : {0.1, 0.5, 1.0, 2.0}) {
            GevreyFit fit = estimate_radius(l1_profile(line, std::sqrt(t)));
            CHECK(fit.radius == Catch::Approx(std::sqrt(t)).margin(1e-6));
            CHECK(fit.radius > prev);
            prev = fit.radius;
        }
    }
}

TEST_CASE("damping kernel matches the closed form on the circle") {
    Grid g = make_grid(1, 256, 2.0 * kPi);
    for (double alpha : {1.0, 0.7}) {
        KernelReport rep = kernel_h_alpha(alpha, g);
        // geometric series in e^{-alpha}: the periodic kernel is the Poisson kernel
        double r = std::exp(-alpha);
        for (std::size_t j = 0; j < rep.values.size(); ++j) {
            double x = static_cast<double>(j) * g.length() / g.n();
            double poisson =
                (1.0 - r * r) / (1.0 - 2.0 * r * std::cos(x) + r * r) / (2.0 * kPi);
            CHECK(std::abs(rep.values[j] - poisson) < 1e-10);
        }
        CHECK(rep.signed_mass == Catch::Approx(1.0).margin(1e-12));
        CHECK(rep.l1_mass == Catch::Approx(1.0).margin(1e-3));
        CHECK(rep.min_value >= -1e-6 * rep.peak);
        CHECK(rep.peak == rep.values[0]);
    }
    CHECK_THROWS_AS(kernel_h_alpha(0.0, g), std::invalid_argument);
    CHECK_THROWS_AS(kernel_h_alpha(-1.0, g), std::invalid_argument);
}

TEST_CASE("damping kernel keeps unit mass in two dimensions") {
    Grid g = make_grid(2, 64, 2.0 * kPi);
    for (double alpha : {0.5, 2.0}) {
        KernelReport rep = kernel_h_alpha(alpha, g);
        CHECK(rep.signed_mass == Catch::Approx(1.0).margin(1e-12));
        CHECK(rep.l1_mass == Catch::Approx(1.0).margin(1e-3));
        CHECK(rep.min_value >= -1e-6 * rep.peak);
    }
}

TEST_CASE("time-splitting multiplier mass") {
    Grid g = make_grid(1, 128, 2.0 * kPi);
    for (double t : {0.5, 2.0, 10.0}) {
        // at tau = t/2 the exponent collapses to (sqrt 2 - 1) sqrt t
        double direct = kernel_h_alpha((std::sqrt(2.0) - 1.0) * std::sqrt(t), g).l1_mass;
        CHECK(kernel_m1_mass(t, t / 2.0, g) == direct);
        CHECK(kernel_m1_mass(t, t / 3.0, g) < 1.5);
    }
    CHECK_THROWS_AS(kernel_m1_mass(1.0, 1.0, g), std::invalid_argument);
    CHECK_THROWS_AS(kernel_m1_mass(1.0, 0.0, g), std::invalid_argument);
    CHECK_THROWS_AS(kernel_m1_mass(1.0, 2.0, g), std::invalid_argument);
}

TEST_CASE("heat-compensated multiplier gain is uniformly bounded") {
    SECTION("one dimension") {
        Grid g = make_grid(1, 64, 2.0 * kPi);
        CHECK(kernel_m2_gain(0.0, g) == 1.0);
        for (double a : {0.1, 1.0, 10.0}) {
            for (double p : {2.0, 4.0}) {
                KernelCheckParams prm;
                prm.p = p;
                double gain = kernel_m2_gain(a, g, prm);
                CHECK(gain > 0.0);
                CHECK(gain <= 2.0);
            }
        }
        CHECK_THROWS_AS(kernel_m2_gain(-0.5, g), std::invalid_argument);
    }
    SECTION("two dimensions, quadratic-mean gain below e") {
        Grid g = make_grid(2, 32, 2.0 * kPi);
        for (double a : {0.1, 1.0, 10.0}) {
            double gain = kernel_m2_gain(a, g);
            CHECK(gain > 0.0);
            CHECK(gain <= std::exp(1.0) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("per-shell decay constants") {
    Grid g = make_grid(1, 64, 2.0 * kPi);

    SECTION("inert weight and order give the identity") {
        CHECK(shell_decay_constant(0.0, 0.0, 2, g) == 1.0);
    }

    SECTION("bounded by the block bandwidth power") {
        for (double s : {1.0, 2.0, 4.0})
            for (double alpha : {0.0, 0.5, 2.0})
                for (int j : {1, 2, 3}) {
                    double c = shell_decay_constant(s, alpha, j, g);
                    CHECK(c > 0.0);
                    CHECK(c <= std::pow(8.0 / 3.0, s) * (1.0 + 1e-9));
                }
    }

    SECTION("grows with the derivative order, never faster than geometric") {
        double prev = 0.0;
        for (double s : {0.0, 1.0, 2.0, 4.0}) {
            double c = shell_decay_constant(s, 0.0, 2, g);
            CHECK(c >= prev);
            prev = c;
        }
        CHECK(prev > 1.0);
    }

    SECTION("rejections") {
        CHECK_THROWS_AS(shell_decay_constant(-1.0, 0.0, 2, g), std::invalid_argument);
        CHECK_THROWS_AS(shell_decay_constant(1.0, -0.1, 2, g), std::invalid_argument);
        CHECK_THROWS_AS(shell_decay_constant(1.0, 0.0, 100, g), std::invalid_argument);
        KernelCheckParams bad;
        bad.trials = 0;
        CHECK_THROWS_AS(shell_decay_constant(1.0, 0.0, 2, g, bad), std::invalid_argument);
    }
}

TEST_CASE("decay-law fits") {
    std::vector<double> t, alg, str, flat;
    for (int i = 0; i < 40; ++i) {
        double ti = 0.25 + 0.25 * i;
        t.push_back(ti);
        alg.push_back(5.0 * std::pow(ti, -1.0));
        str.push_back(3.0 * std::exp(-2.0 * std::sqrt(ti)));
        flat.push_back(0.7);
    }

    SECTION("algebraic") {
        DecayFit fit = fit_decay(t, alg, DecayModel::algebraic);
        CHECK(fit.model == DecayModel::algebraic);
        CHECK(fit.rate == Catch::Approx(1.0).margin(0.01));
        CHECK(fit.prefactor == Catch::Approx(5.0).epsilon(0.01));
        CHECK(fit.r_squared > 0.999999);
        CHECK(fit.t_lo >= 1.0);
        CHECK(fit.n_used == 37);
    }

    SECTION("stretched exponential") {
        DecayFit fit = fit_decay(t, str, DecayModel::stretched);
        CHECK(fit.rate == Catch::Approx(2.0).margin(0.02));
        CHECK(fit.prefactor == Catch::Approx(3.0).epsilon(0.01));
        CHECK(fit.r_squared > 0.999999);
    }

    SECTION("window restriction") {
        DecayFit fit = fit_decay(t, alg, DecayModel::algebraic, 2.0, 8.0);
        CHECK(fit.rate == Catch::Approx(1.0).margin(0.01));
        CHECK(fit.t_lo >= 2.0);
        CHECK(fit.t_hi <= 8.0 * (1.0 + 1e-12));
    }

    SECTION("a constant signal fits with zero rate and full r squared") {
        DecayFit fit = fit_decay(t, flat, DecayModel::algebraic);
        CHECK(fit.rate == Catch::Approx(0.0).margin(1e-12));
        CHECK(fit.r_squared == 1.0);
    }

    SECTION("rejections") {
        CHECK_THROWS_AS(fit_decay({1.0, 2.0}, {1.0}, DecayModel::algebraic),
                        std::invalid_argument);
        std::vector<double> bad = alg;
        bad[20] = 0.0;
        CHECK_THROWS_AS(fit_decay(t, bad, DecayModel::algebraic), std::invalid_argument);
        CHECK_THROWS_AS(fit_decay(t, alg, DecayModel::algebraic, 9.5, 10.5),
                        std::invalid_argument);  // too few samples
        std::vector<double> same_t(10, 3.0), same_n(10, 1.0);
        CHECK_THROWS_AS(fit_decay(same_t, same_n, DecayModel::algebraic, 0.0),
                        std::invalid_argument);  // degenerate abscissa
    }
}

TEST_CASE("fit report serialization") {
    std::vector<double> t, norm;
    for (int i = 0; i < 20; ++i) {
        t.push_back(1.0 + 0.5 * i);
        norm.push_back(2.0 * std::pow(t.back(), -1.5));
    }
    DecayFit fit = fit_decay(t, norm, DecayModel::algebraic);
    nlohmann::json j = nlohmann::json::parse(decay_fit_json(fit));
    CHECK(j.at("model") == "algebraic");
    CHECK(j.at("rate").get<double>() == Catch::Approx(1.5).margin(1e-10));
    CHECK(j.at("prefactor").get<double>() == Catch::Approx(2.0).epsilon(1e-10));
    CHECK(j.at("r_squared").get<double>() == Catch::Approx(1.0).margin(1e-12));
    CHECK(j.at("n_used").get<int>() == fit.n_used);
    CHECK(j.at("window").size() == 2);

    DecayFit sf = fit_decay(t, norm, DecayModel::stretched);
    CHECK(nlohmann::json::parse(decay_fit_json(sf)).at("model") == "stretched");
}

TEST_CASE("radius trace serialization") {
    Grid g = make_grid(2, 16, 2.0 * kPi);
    std::vector<double> t{0.0, 1.0};
    std::vector<GevreyFit> fits{estimate_radius(l1_profile(g, 1.0)),
                                estimate_radius(l1_profile(g, 1.5))};
    std::ostringstream a, b;
    write_radius_csv(a, t, fits);
    write_radius_csv(b, t, fits);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("t,radius,residual,window_lo,window_hi,shells_used\n", 0) == 0);
    CHECK_THROWS_AS(write_radius_csv(a, {0.0}, fits), std::invalid_argument);
}
