#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace fokker {

// Spatial vector. Dimension d <= 3 is tracked by the owning object; unused
// components stay exactly zero so full-width arithmetic is safe.
struct Vec3 {
    std::array<double, 3> c{0.0, 0.0, 0.0};

    double& operator[](std::size_t i) { return c[i]; }
    double operator[](std::size_t i) const { return c[i]; }

    Vec3& operator+=(const Vec3& o) {
        c[0] += o.c[0]; c[1] += o.c[1]; c[2] += o.c[2];
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        c[0] -= o.c[0]; c[1] -= o.c[1]; c[2] -= o.c[2];
        return *this;
    }
    Vec3& operator*=(double s) {
        c[0] *= s; c[1] *= s; c[2] *= s;
        return *this;
    }
    friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend bool operator==(const Vec3& a, const Vec3& b) { return a.c == b.c; }
};

inline double dot(const Vec3& a, const Vec3& b) {
    return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2];
}

inline double norm2(const Vec3& a) { return dot(a, a); }

inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

// Fixed-order pairwise summation. The reduction tree depends only on the
// element count, never on thread count or traversal order, so sums are
// bit-reproducible.
inline double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = x[0];
        for (std::size_t i = 1; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& x) {
    return pairwise_sum(std::span<const double>(x));
}

// Partition [0, n) into contiguous chunks, one per worker. Workers write to
// disjoint output slots; combined with pairwise_sum this keeps every result
// independent of the worker count.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        body(0, n);
        return;
    }
    const unsigned k = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(k);
    const std::size_t chunk = (n + k - 1) / k;
    for (unsigned w = 0; w < k; ++w) {
        const std::size_t lo = static_cast<std::size_t>(w) * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

// splitmix64: tiny deterministic generator used for test perturbations and
// solver-independent seeding. Stable across platforms and standard libraries,
// unlike <random> distributions.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [-1, 1)
    double next_symmetric() { return 2.0 * next_double() - 1.0; }
};

} // namespace fokker
