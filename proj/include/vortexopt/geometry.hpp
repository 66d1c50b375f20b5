#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace vortexopt {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }
inline double dist(const Vec2& a, const Vec2& b) { return norm(a - b); }

// Twice the signed area of triangle (a, b, c); positive for ccw.
inline double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
    return cross(b - a, c - a);
}

inline double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * orient2d(a, b, c);
}

// Shoelace area of a closed polygon given as an ordered vertex loop.
inline double polygon_area(std::span<const Vec2> loop) {
    double twice = 0.0;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = loop[i];
        const Vec2& q = loop[(i + 1) % n];
        twice += cross(p, q);
    }
    return 0.5 * twice;
}

// Crossing-number test; points on the boundary may land on either side.
inline bool point_in_polygon(const Vec2& p, std::span<const Vec2> loop) {
    bool inside = false;
    const std::size_t n = loop.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return dist(p, a);
    double t = dot(p - a, ab) / len2;
    t = std::fmax(0.0, std::fmin(1.0, t));
    return dist(p, a + ab * t);
}

inline double dist_point_polygon(const Vec2& p, std::span<const Vec2> loop) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = loop.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        best = std::fmin(best, dist_point_segment(p, loop[j], loop[i]));
    }
    return best;
}

// SplitMix64; used for deterministic jitter and seeding.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic hash to [0, 1).
inline double hash01(std::uint64_t key) {
    return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
}

} // namespace vortexopt
