#pragma once

// Periodic box discretization. Frequencies live on the lattice
// xi = (2*pi/L)*k with integer k in [-N/2, N/2) per axis; the Nyquist row
// takes the negative sign so the lattice is closed under negation up to the
// usual self-paired modes.

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace nsk {

class Grid {
  public:
    static Grid make(int d, int n, double length) {
        if (d < 1 || d > 3) throw std::invalid_argument("grid: d must be 1, 2 or 3");
        if (n < 8 || (n & (n - 1)) != 0)
            throw std::invalid_argument("grid: N must be a power of two >= 8");
        if (!(length > 0.0)) throw std::invalid_argument("grid: L must be positive");
        return Grid(std::make_shared<const Impl>(d, n, length));
    }

    int dim() const { return impl_->d; }
    int n() const { return impl_->n; }
    double length() const { return impl_->length; }
    std::size_t size() const { return impl_->total; }
    double xi_step() const { return impl_->xi_step; }
    double dx() const { return impl_->length / impl_->n; }
    double cell_volume() const { return impl_->cell_volume; }

    // Integer frequency along one axis for index idx in [0, N).
    int freq_int(int idx) const { return idx < impl_->n / 2 ? idx : idx - impl_->n; }

    double xi_sq(std::size_t flat) const { return impl_->xi_sq[flat]; }
    double xi_abs(std::size_t flat) const { return std::sqrt(impl_->xi_sq[flat]); }
    double xi_l1(std::size_t flat) const { return impl_->xi_l1[flat]; }

    std::array<int, 3> unflatten(std::size_t flat) const {
        std::array<int, 3> idx{0, 0, 0};
        for (int axis = impl_->d - 1; axis >= 0; --axis) {
            idx[axis] = static_cast<int>(flat % impl_->n);
            flat /= impl_->n;
        }
        return idx;
    }
    std::size_t flatten(const std::array<int, 3>& idx) const {
        std::size_t flat = 0;
        for (int axis = 0; axis < impl_->d; ++axis)
            flat = flat * impl_->n + static_cast<std::size_t>(idx[axis]);
        return flat;
    }

    std::array<double, 3> xi(std::size_t flat) const {
        auto idx = unflatten(flat);
        std::array<double, 3> out{0.0, 0.0, 0.0};
        for (int axis = 0; axis < impl_->d; ++axis)
            out[axis] = impl_->xi_step * freq_int(idx[axis]);
        return out;
    }

    // Index of the mode -xi (mod lattice); Nyquist rows are self-paired.
    std::size_t conj_index(std::size_t flat) const {
        auto idx = unflatten(flat);
        std::array<int, 3> neg{0, 0, 0};
        for (int axis = 0; axis < impl_->d; ++axis)
            neg[axis] = (impl_->n - idx[axis]) % impl_->n;
        return flatten(neg);
    }

    // Physical coordinate of grid point with flat index.
    std::array<double, 3> x(std::size_t flat) const {
        auto idx = unflatten(flat);
        std::array<double, 3> out{0.0, 0.0, 0.0};
        for (int axis = 0; axis < impl_->d; ++axis) out[axis] = dx() * idx[axis];
        return out;
    }

    double xi_max_abs() const { return impl_->xi_max_abs; }

    bool operator==(const Grid& other) const {
        return impl_ == other.impl_ ||
               (impl_->d == other.impl_->d && impl_->n == other.impl_->n &&
                impl_->length == other.impl_->length);
    }

  private:
    struct Impl {
        int d, n;
        double length, xi_step, cell_volume, xi_max_abs;
        std::size_t total;
        std::vector<double> xi_sq, xi_l1;

        Impl(int d_, int n_, double length_)
            : d(d_), n(n_), length(length_), xi_step(2.0 * 3.14159265358979323846 / length_) {
            total = 1;
            for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
            cell_volume = 1.0;
            for (int i = 0; i < d; ++i) cell_volume *= length / n;
            xi_sq.resize(total);
            xi_l1.resize(total);
            xi_max_abs = 0.0;
            for (std::size_t flat = 0; flat < total; ++flat) {
                std::size_t rem = flat;
                double s2 = 0.0, s1 = 0.0;
                for (int axis = d - 1; axis >= 0; --axis) {
                    int idx = static_cast<int>(rem % n);
                    rem /= n;
                    int k = idx < n / 2 ? idx : idx - n;
                    double c = xi_step * k;
                    s2 += c * c;
                    s1 += std::abs(c);
                }
                xi_sq[flat] = s2;
                xi_l1[flat] = s1;
                if (s2 > xi_max_abs * xi_max_abs) xi_max_abs = std::sqrt(s2);
            }
        }
    };

    explicit Grid(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

inline Grid make_grid(int d, int n, double length) { return Grid::make(d, n, length); }

}  // namespace nsk
