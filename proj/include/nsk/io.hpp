#pragma once

// Snapshot container: "NSKF" magic, u32 version, u32 d, u32 N, f64 L,
// u32 component count, then each component as N^d little-endian complex64
// (float re, float im) in flat row-major mode order. CSV output is meant for
// small grids and spot checks.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "nsk/field.hpp"

namespace nsk {

inline void save_snapshot(const std::string& path, const std::vector<SpectralField>& components) {
    if (components.empty()) throw std::invalid_argument("snapshot: no components");
    const Grid& g = components.front().grid();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("snapshot: cannot open " + path);
    const char magic[4] = {'N', 'S', 'K', 'F'};
    out.write(magic, 4);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u32(1u);
    put_u32(static_cast<std::uint32_t>(g.dim()));
    put_u32(static_cast<std::uint32_t>(g.n()));
    put_f64(g.length());
    put_u32(static_cast<std::uint32_t>(components.size()));
    for (const auto& f : components) {
        if (!(f.grid() == g)) throw std::invalid_argument("snapshot: mixed grids");
        for (const auto& c : f.coeffs()) {
            float re = static_cast<float>(c.real());
            float im = static_cast<float>(c.imag());
            out.write(reinterpret_cast<const char*>(&re), 4);
            out.write(reinterpret_cast<const char*>(&im), 4);
        }
    }
    if (!out) throw std::runtime_error("snapshot: write failed for " + path);
}

inline std::vector<SpectralField> load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("snapshot: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NSKF", 4) != 0)
        throw std::runtime_error("snapshot: bad magic in " + path);
    auto get_u32 = [&] {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get_f64 = [&] {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    std::uint32_t version = get_u32();
    if (version != 1u) throw std::runtime_error("snapshot: unsupported version");
    int d = static_cast<int>(get_u32());
    int n = static_cast<int>(get_u32());
    double length = get_f64();
    std::uint32_t ncomp = get_u32();
    Grid g = make_grid(d, n, length);
    std::vector<SpectralField> out;
    out.reserve(ncomp);
    for (std::uint32_t c = 0; c < ncomp; ++c) {
        SpectralField f(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            float re = 0, im = 0;
            in.read(reinterpret_cast<char*>(&re), 4);
            in.read(reinterpret_cast<char*>(&im), 4);
            f.coeff(i) = cd(re, im);
        }
        out.push_back(std::move(f));
    }
    if (!in) throw std::runtime_error("snapshot: truncated file " + path);
    return out;
}

// Deterministic float formatting shared by every CSV writer; %.17g is the
// shortest round-trippable form for doubles.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void save_csv(const std::string& path, const SpectralField& f) {
    const Grid& g = f.grid();
    if (g.size() > 65536) throw std::invalid_argument("csv: grid too large, use the binary container");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot open " + path);
    out << "k0,k1,k2,re,im\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto idx = g.unflatten(i);
        int k[3] = {0, 0, 0};
        for (int axis = 0; axis < g.dim(); ++axis) k[axis] = g.freq_int(idx[axis]);
        out << k[0] << ',' << k[1] << ',' << k[2] << ',' << fmt_g17(f.coeff(i).real()) << ','
            << fmt_g17(f.coeff(i).imag()) << '\n';
    }
}

}  // namespace nsk
