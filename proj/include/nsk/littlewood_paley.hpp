#pragma once

// Dyadic Littlewood-Paley decomposition on the discrete lattice. The radial
// cutoff chi is a fixed quintic smoothstep: 1 on |xi| <= 3/4, 0 on
// |xi| >= 4/3, so phi(xi) = chi(xi/2) - chi(xi) is supported in the annulus
// {3/4 <= |xi| <= 8/3} and the shifted sum telescopes to 1 exactly.

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsk/field.hpp"

namespace nsk {

struct BesovSpec {
    double sigma = 0.0;
    double p = 2.0;
    double r = 1.0;
    int k0 = 2;

    void validate() const {
        if (!(p >= 1.0) || !(r >= 1.0))
            throw std::invalid_argument("besov: need 1 <= p, r <= inf");
    }
    // Index window of the global-existence setting; d = 2 additionally
    // excludes the endpoint p = 4.
    void validate_for_existence(int d) const {
        validate();
        if (d < 2) throw std::invalid_argument("besov: existence setting needs d >= 2");
        double upper = d == 2 ? 4.0 : std::min(4.0, 2.0 * d / (d - 2.0));
        if (p < 2.0 || p > upper)
            throw std::invalid_argument("besov: p outside [2, min(4, 2d/(d-2))]");
        if (d == 2 && p == 4.0)
            throw std::invalid_argument("besov: p = 4 excluded when d = 2");
    }
};

struct NormReport {
    double value = 0.0;
    std::map<int, double> per_block;  // j -> 2^{j*sigma} ||block_j f||_p
    double tail_mass = 0.0;           // fraction of value carried by the extreme shells
    BesovSpec spec;

    std::string to_json() const {
        std::ostringstream os;
        os.precision(17);
        os << "{\"value\":" << value << ",\"tail_mass\":" << tail_mass
           << ",\"sigma\":" << spec.sigma << ",\"p\":" << spec.p << ",\"r\":" << spec.r
           << ",\"k0\":" << spec.k0 << ",\"per_block\":{";
        bool first = true;
        for (const auto& [j, v] : per_block) {
            if (!first) os << ',';
            first = false;
            os << '"' << j << "\":" << v;
        }
        os << "}}";
        return os.str();
    }
};

namespace detail {

inline double smoothstep_quintic(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double lr_aggregate(const std::vector<double>& vals, double r) {
    if (std::isinf(r)) {
        double m = 0.0;
        for (double v : vals) m = std::max(m, v);
        return m;
    }
    double acc = 0.0;
    for (double v : vals) acc += std::pow(v, r);
    return std::pow(acc, 1.0 / r);
}

}  // namespace detail

class DyadicPartition {
  public:
    explicit DyadicPartition(Grid grid) : grid_(std::move(grid)) {
        // Smallest/largest nonzero |xi| on the lattice fix the active shells:
        // chi(2^{-j_min} xi) = 0 and chi(2^{-(j_max+1)} xi) = 1 lattice-wide.
        const double xi_min = grid_.xi_step();
        const double xi_max = grid_.xi_max_abs();
        j_min_ = static_cast<int>(std::floor(std::log2(0.75 * xi_min)));
        while (std::pow(2.0, j_min_ + 1) <= 0.75 * xi_min) ++j_min_;
        j_max_ = static_cast<int>(std::ceil(std::log2(xi_max * 2.0 / 3.0)));
        while (std::pow(2.0, j_max_ - 1) >= xi_max * 2.0 / 3.0) --j_max_;
        if (j_max_ - j_min_ + 1 < 3)
            throw std::invalid_argument("partition: grid too small to host 3 dyadic shells");
        // Cache phi(2^{-j} xi) per mode for j in [j_min-1, j_max+1].
        weights_.resize(static_cast<std::size_t>(j_max_ - j_min_ + 3));
        for (int j = j_min_ - 1; j <= j_max_ + 1; ++j) {
            auto& w = weights_[static_cast<std::size_t>(j - (j_min_ - 1))];
            w.resize(grid_.size());
            const double inv = std::pow(2.0, -j);
            for (std::size_t i = 0; i < grid_.size(); ++i)
                w[i] = phi(inv * std::sqrt(grid_.xi_sq(i)));
        }
    }

    const Grid& grid() const { return grid_; }
    int j_min() const { return j_min_; }
    int j_max() const { return j_max_; }

    static double chi(double r) {
        return 1.0 - detail::smoothstep_quintic((r - 0.75) / (4.0 / 3.0 - 0.75));
    }
    static double phi(double r) { return chi(0.5 * r) - chi(r); }

    const std::vector<double>& block_weights(int j) const {
        check_range(j);
        return weights_[static_cast<std::size_t>(j - (j_min_ - 1))];
    }

    // block: phi(2^{-j} D) f;  low cutoff: chi(2^{-j} D) f (keeps the mean).
    SpectralField block(const SpectralField& f, int j) const {
        const auto& w = block_weights(j);
        SpectralField out(grid_);
        for (std::size_t i = 0; i < grid_.size(); ++i) out.coeff(i) = w[i] * f.coeff(i);
        return out;
    }
    SpectralField low_cutoff(const SpectralField& f, int j) const {
        check_range(j);
        SpectralField out(grid_);
        const double inv = std::pow(2.0, -j);
        for (std::size_t i = 0; i < grid_.size(); ++i)
            out.coeff(i) = chi(inv * std::sqrt(grid_.xi_sq(i))) * f.coeff(i);
        return out;
    }

    double block_lp_norm(const SpectralField& f, int j, double p) const {
        const auto& w = block_weights(j);
        if (p == 2.0) {
            double acc = 0.0;
            for (std::size_t i = 0; i < grid_.size(); ++i)
                acc += w[i] * w[i] * std::norm(f.coeff(i));
            double vol = 1.0;
            for (int k = 0; k < grid_.dim(); ++k) vol *= grid_.length();
            return std::sqrt(vol * acc);
        }
        return lp_norm(block(f, j), p);
    }

  private:
    void check_range(int j) const {
        if (j < j_min_ - 1 || j > j_max_ + 1)
            throw std::out_of_range("partition: block index outside [j_min-1, j_max+1]");
    }
    Grid grid_;
    int j_min_, j_max_;
    std::vector<std::vector<double>> weights_;
};

inline DyadicPartition build_partition(const Grid& grid) { return DyadicPartition(grid); }

enum class BlockKind { block, low_cutoff };

inline SpectralField dyadic_block(const DyadicPartition& part, const SpectralField& f, int j,
                                  BlockKind kind = BlockKind::block) {
    return kind == BlockKind::block ? part.block(f, j) : part.low_cutoff(f, j);
}

inline NormReport besov_norm(const DyadicPartition& part, const SpectralField& f, BesovSpec spec) {
    spec.validate();
    if (!detail::mean_is_zero(f)) throw std::invalid_argument("besov_norm: input must be zero-mean");
    NormReport report;
    report.spec = spec;
    std::vector<double> vals;
    for (int j = part.j_min(); j <= part.j_max(); ++j) {
        double b = std::pow(2.0, j * spec.sigma) * part.block_lp_norm(f, j, spec.p);
        report.per_block[j] = b;
        vals.push_back(b);
    }
    report.value = detail::lr_aggregate(vals, spec.r);
    if (report.value > 0.0) {
        std::vector<double> tails{report.per_block[part.j_min()], report.per_block[part.j_max()]};
        report.tail_mass = detail::lr_aggregate(tails, spec.r) / report.value;
    }
    return report;
}

// Low/high frequency split: low sums blocks k <= k0, high sums k >= k0-1;
// the two blocks k0-1, k0 are deliberately counted on both sides.
struct SplitNorms {
    double low = 0.0;
    double high = 0.0;
};

inline SplitNorms split_low_high(const DyadicPartition& part, const SpectralField& f,
                                 const BesovSpec& low_spec, const BesovSpec& high_spec) {
    if (!detail::mean_is_zero(f)) throw std::invalid_argument("split: input must be zero-mean");
    SplitNorms out;
    for (int j = part.j_min(); j <= part.j_max(); ++j) {
        if (j <= low_spec.k0)
            out.low += std::pow(2.0, j * low_spec.sigma) * part.block_lp_norm(f, j, low_spec.p);
        if (j >= high_spec.k0 - 1)
            out.high += std::pow(2.0, j * high_spec.sigma) * part.block_lp_norm(f, j, high_spec.p);
    }
    return out;
}

inline SplitNorms split_low_high(const DyadicPartition& part, const SpectralField& f,
                                 const BesovSpec& spec) {
    return split_low_high(part, f, spec, spec);
}

// Chemin-Lerner norm over a uniformly sampled trajectory: per-block time-Lq
// (trapezoid; max for q = inf), then the l^r aggregation over blocks.
inline double chemin_lerner_norm(const DyadicPartition& part, const std::vector<double>& times,
                                 const std::vector<const SpectralField*>& fields, double q,
                                 BesovSpec spec) {
    spec.validate();
    if (times.size() != fields.size()) throw std::invalid_argument("chemin_lerner: size mismatch");
    if (!(q == 1.0 || q == 2.0 || std::isinf(q)))
        throw std::invalid_argument("chemin_lerner: q must be 1, 2 or inf");
    if (!std::isinf(q) && times.size() < 2)
        throw std::invalid_argument("chemin_lerner: need at least 2 time samples");
    if (times.size() >= 2) {
        const double h = times[1] - times[0];
        for (std::size_t i = 1; i < times.size(); ++i)
            if (std::abs(times[i] - times[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
                throw std::invalid_argument("chemin_lerner: time grid must be uniform");
    }
    std::vector<double> vals;
    for (int j = part.j_min(); j <= part.j_max(); ++j) {
        std::vector<double> bn(times.size());
        for (std::size_t i = 0; i < times.size(); ++i)
            bn[i] = part.block_lp_norm(*fields[i], j, spec.p);
        double tq;
        if (std::isinf(q)) {
            tq = 0.0;
            for (double v : bn) tq = std::max(tq, v);
        } else {
            const double h = times.size() >= 2 ? times[1] - times[0] : 0.0;
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < times.size(); ++i) {
                double a = q == 1.0 ? bn[i] : bn[i] * bn[i];
                double b = q == 1.0 ? bn[i + 1] : bn[i + 1] * bn[i + 1];
                acc += 0.5 * h * (a + b);
            }
            tq = q == 1.0 ? acc : std::sqrt(acc);
        }
        vals.push_back(std::pow(2.0, j * spec.sigma) * tq);
    }
    return detail::lr_aggregate(vals, spec.r);
}

inline double chemin_lerner_norm(const DyadicPartition& part, const std::vector<double>& times,
                                 const std::vector<SpectralField>& fields, double q,
                                 const BesovSpec& spec) {
    std::vector<const SpectralField*> ptrs;
    ptrs.reserve(fields.size());
    for (const auto& f : fields) ptrs.push_back(&f);
    return chemin_lerner_norm(part, times, ptrs, q, spec);
}

}  // namespace nsk
