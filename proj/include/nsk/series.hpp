#pragma once

// Real power series around 0 with an explicit convergence radius, used for
// pointwise composition F(a) and for the density-coefficient closures of the
// model (I(a) = a/(1+a), pressure slope deficits, viscosity ratios).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nsk {

class PowerSeries {
  public:
    // c[n] multiplies z^n. Infinite series are stored truncated to kLen terms;
    // the tail estimate extrapolates geometrically with ratio z/radius.
    static constexpr int kLen = 80;

    PowerSeries(std::vector<double> c, double radius) : c_(std::move(c)), radius_(radius) {
        if (!(radius_ > 0.0)) throw std::invalid_argument("series: radius must be positive");
        if (c_.empty()) c_.push_back(0.0);
    }

    static PowerSeries from_coefficients(std::vector<double> c, double radius) {
        return PowerSeries(std::move(c), radius);
    }

    static PowerSeries identity() {
        return PowerSeries({0.0, 1.0}, std::numeric_limits<double>::infinity());
    }

    static PowerSeries constant(double v) {
        return PowerSeries({v}, std::numeric_limits<double>::infinity());
    }

    // z / (1 + z) = z - z^2 + z^3 - ...
    static PowerSeries fraction_over_one_plus() {
        std::vector<double> c(kLen, 0.0);
        for (int n = 1; n < kLen; ++n) c[static_cast<std::size_t>(n)] = n % 2 ? 1.0 : -1.0;
        return PowerSeries(std::move(c), 1.0);
    }

    // 1 / (1 + z).
    static PowerSeries inverse_one_plus() {
        std::vector<double> c(kLen, 0.0);
        for (int n = 0; n < kLen; ++n) c[static_cast<std::size_t>(n)] = n % 2 ? -1.0 : 1.0;
        return PowerSeries(std::move(c), 1.0);
    }

    // (1 + z)^alpha.
    static PowerSeries binomial(double alpha) {
        std::vector<double> c(kLen, 0.0);
        double coef = 1.0;
        for (int n = 0; n < kLen; ++n) {
            c[static_cast<std::size_t>(n)] = coef;
            coef *= (alpha - n) / (n + 1.0);
        }
        return PowerSeries(std::move(c), 1.0);
    }

    // 1 - gamma (1 + z)^{gamma - 2}: the deviation of the normalized pressure
    // slope P'(1 + z)/(1 + z) from 1, for the power pressure P(rho) = rho^gamma.
    static PowerSeries pressure_slope_deficit(double gamma) {
        PowerSeries b = binomial(gamma - 2.0);
        std::vector<double> c(b.c_.size(), 0.0);
        for (std::size_t n = 0; n < c.size(); ++n) c[n] = -gamma * b.c_[n];
        c[0] += 1.0;
        return PowerSeries(std::move(c), 1.0);
    }

    const std::vector<double>& coefficients() const { return c_; }
    double radius() const { return radius_; }
    int terms() const { return static_cast<int>(c_.size()); }
    double constant_term() const { return c_[0]; }

    double eval(double z) const {
        double r = 0.0;
        for (std::size_t n = c_.size(); n-- > 0;) r = r * z + c_[n];
        return r;
    }
    // sum |c_n| z^n for z >= 0, the majorant series.
    double eval_abs(double z) const {
        double r = 0.0;
        for (std::size_t n = c_.size(); n-- > 0;) r = r * z + std::abs(c_[n]);
        return r;
    }

    // Estimate of sum_{n > m} |c_n| z^n: stored terms exactly, then a
    // geometric extension with ratio z/radius beyond the stored length.
    double tail_bound(double z, int m) const {
        if (z < 0.0) throw std::invalid_argument("series: tail wants z >= 0");
        double tail = 0.0;
        double zn = std::pow(z, m + 1);
        for (std::size_t n = static_cast<std::size_t>(m + 1); n < c_.size(); ++n) {
            tail += std::abs(c_[n]) * zn;
            zn *= z;
        }
        if (std::isfinite(radius_) && c_.size() > static_cast<std::size_t>(std::max(m + 1, 1))) {
            double q = z / radius_;
            if (q < 1.0) tail += std::abs(c_.back()) * zn * q / (1.0 - q);
        }
        return tail;
    }

    PowerSeries truncated(int m) const {
        if (m < 0) throw std::invalid_argument("series: truncation must be >= 0");
        std::vector<double> c(c_.begin(),
                              c_.begin() + std::min(c_.size(), static_cast<std::size_t>(m + 1)));
        return PowerSeries(std::move(c), radius_);
    }

    PowerSeries derivative() const {
        std::vector<double> c;
        for (std::size_t n = 1; n < c_.size(); ++n) c.push_back(c_[n] * static_cast<double>(n));
        if (c.empty()) c.push_back(0.0);
        return PowerSeries(std::move(c), radius_);
    }

    PowerSeries scaled(double k) const {
        std::vector<double> c = c_;
        for (double& v : c) v *= k;
        return PowerSeries(std::move(c), radius_);
    }

    PowerSeries plus_constant(double k) const {
        std::vector<double> c = c_;
        c[0] += k;
        return PowerSeries(std::move(c), radius_);
    }

  private:
    std::vector<double> c_;
    double radius_;
};

// Cauchy product, truncated to kLen terms; valid on the smaller disc.
inline PowerSeries product(const PowerSeries& f, const PowerSeries& g) {
    const auto& a = f.coefficients();
    const auto& b = g.coefficients();
    std::size_t len = std::min<std::size_t>(PowerSeries::kLen, a.size() + b.size() - 1);
    std::vector<double> c(len, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size() && i + j < len; ++j) c[i + j] += a[i] * b[j];
    return PowerSeries::from_coefficients(std::move(c), std::min(f.radius(), g.radius()));
}

}  // namespace nsk
