#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vortexopt/geometry.hpp"

namespace vortexopt {

// Incremental Bowyer-Watson triangulation of a 2D point set.
//
// Cavities are grown by flood fill from the triangle containing the inserted
// point, then shrunk until every cavity boundary edge is strictly visible
// from the point. Points are expected to be free of exact duplicates; callers
// that sample circles should perturb the samples slightly so that no four
// points are exactly cocircular.
class Delaunay2D {
public:
    explicit Delaunay2D(const std::vector<Vec2>& points)
        : pts_(points), n_input_(static_cast<int>(points.size())) {
        if (points.size() < 3) throw std::runtime_error("delaunay: need at least 3 points");
        init_super_triangle();
        for (std::size_t i = 0; i < points.size(); ++i) insert(static_cast<int>(i));
    }

    // Triangles over the input point indices only (super-triangle removed).
    std::vector<std::array<int, 3>> triangles() const {
        std::vector<std::array<int, 3>> out;
        const int n = n_input_;
        for (const Tri& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
            out.push_back({t.v[0], t.v[1], t.v[2]});
        }
        return out;
    }

private:
    struct Tri {
        std::array<int, 3> v{};     // ccw vertex indices
        std::array<int, 3> nbr{};   // neighbor across edge (v[i], v[i+1]); -1 on hull
        bool alive = true;
    };

    std::vector<Vec2> pts_;
    int n_input_ = 0;
    std::vector<Tri> tris_;
    int last_alive_ = 0;

    const Vec2& p(int i) const { return pts_[static_cast<std::size_t>(i)]; }

    void init_super_triangle() {
        double xmin = pts_[0].x, xmax = xmin, ymin = pts_[0].y, ymax = ymin;
        for (const Vec2& q : pts_) {
            xmin = std::fmin(xmin, q.x); xmax = std::fmax(xmax, q.x);
            ymin = std::fmin(ymin, q.y); ymax = std::fmax(ymax, q.y);
        }
        const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
        const double r = std::fmax(xmax - xmin, ymax - ymin) * 16.0 + 1.0;
        const int base = static_cast<int>(pts_.size());
        pts_.push_back({cx - 2.0 * r, cy - r});
        pts_.push_back({cx + 2.0 * r, cy - r});
        pts_.push_back({cx, cy + 2.0 * r});
        Tri t;
        t.v = {base, base + 1, base + 2};
        t.nbr = {-1, -1, -1};
        tris_.push_back(t);
        last_alive_ = 0;
    }

    // Strict incircle test in long double; ties count as outside.
    bool in_circumcircle(const Tri& t, const Vec2& q) const {
        const Vec2& a = p(t.v[0]);
        const Vec2& b = p(t.v[1]);
        const Vec2& c = p(t.v[2]);
        const long double ax = a.x - q.x, ay = a.y - q.y;
        const long double bx = b.x - q.x, by = b.y - q.y;
        const long double cx = c.x - q.x, cy = c.y - q.y;
        const long double det =
            (ax * ax + ay * ay) * (bx * cy - by * cx) -
            (bx * bx + by * by) * (ax * cy - ay * cx) +
            (cx * cx + cy * cy) * (ax * by - ay * bx);
        return det > 0.0L;
    }

    bool contains(int ti, const Vec2& q, double eps) const {
        const Tri& t = tris_[static_cast<std::size_t>(ti)];
        for (int e = 0; e < 3; ++e) {
            if (orient2d(p(t.v[e]), p(t.v[(e + 1) % 3]), q) < -eps) return false;
        }
        return true;
    }

    int locate(const Vec2& q) const {
        // Walk from the most recent triangle; fall back to a linear scan.
        int cur = last_alive_;
        if (!tris_[static_cast<std::size_t>(cur)].alive) cur = -1;
        for (std::size_t i = tris_.size(); cur < 0 && i > 0; --i) {
            if (tris_[i - 1].alive) cur = static_cast<int>(i - 1);
        }
        std::size_t steps = 0;
        const std::size_t max_steps = 4 * tris_.size() + 64;
        while (cur >= 0 && steps++ < max_steps) {
            const Tri& t = tris_[static_cast<std::size_t>(cur)];
            int next = -1;
            for (int e = 0; e < 3; ++e) {
                if (orient2d(p(t.v[e]), p(t.v[(e + 1) % 3]), q) < 0.0) {
                    next = t.nbr[static_cast<std::size_t>(e)];
                    break;
                }
            }
            if (next < 0) return cur;
            cur = next;
        }
        for (std::size_t i = 0; i < tris_.size(); ++i) {
            if (tris_[i].alive && contains(static_cast<int>(i), q, 0.0)) return static_cast<int>(i);
        }
        throw std::runtime_error("delaunay: point location failed");
    }

    void insert(int vi) {
        const Vec2& q = p(vi);
        const int seed = locate(q);

        // Flood-fill the cavity.
        std::vector<int> cavity;
        std::vector<char> in_cavity(tris_.size(), 0);
        std::vector<int> stack{seed};
        in_cavity[static_cast<std::size_t>(seed)] = 1;
        while (!stack.empty()) {
            const int ti = stack.back();
            stack.pop_back();
            cavity.push_back(ti);
            const Tri& t = tris_[static_cast<std::size_t>(ti)];
            for (int e = 0; e < 3; ++e) {
                const int nb = t.nbr[static_cast<std::size_t>(e)];
                if (nb < 0 || in_cavity[static_cast<std::size_t>(nb)]) continue;
                if (in_circumcircle(tris_[static_cast<std::size_t>(nb)], q)) {
                    in_cavity[static_cast<std::size_t>(nb)] = 1;
                    stack.push_back(nb);
                }
            }
        }

        // Shrink until every cavity boundary edge is strictly visible from q.
        bool changed = true;
        while (changed && cavity.size() > 1) {
            changed = false;
            for (std::size_t k = 0; k < cavity.size(); ++k) {
                const int ti = cavity[k];
                if (ti == seed) continue;
                const Tri& t = tris_[static_cast<std::size_t>(ti)];
                bool bad = false;
                for (int e = 0; e < 3 && !bad; ++e) {
                    const int nb = t.nbr[static_cast<std::size_t>(e)];
                    const bool edge_on_boundary = (nb < 0) || !in_cavity[static_cast<std::size_t>(nb)];
                    if (edge_on_boundary &&
                        orient2d(p(t.v[e]), p(t.v[(e + 1) % 3]), q) <= 0.0) {
                        bad = true;
                    }
                }
                if (bad) {
                    in_cavity[static_cast<std::size_t>(ti)] = 0;
                    cavity.erase(cavity.begin() + static_cast<std::ptrdiff_t>(k));
                    changed = true;
                    break;
                }
            }
        }

        // Collect oriented boundary edges with their outside neighbors.
        struct BEdge { int a, b, outside; };
        std::vector<BEdge> ring;
        for (const int ti : cavity) {
            const Tri& t = tris_[static_cast<std::size_t>(ti)];
            for (int e = 0; e < 3; ++e) {
                const int nb = t.nbr[static_cast<std::size_t>(e)];
                if (nb < 0 || !in_cavity[static_cast<std::size_t>(nb)]) {
                    ring.push_back({t.v[e], t.v[(e + 1) % 3], nb});
                }
            }
        }

        for (const int ti : cavity) tris_[static_cast<std::size_t>(ti)].alive = false;

        // One new triangle per boundary edge, fanned around q.
        std::unordered_map<long long, int> spoke; // key: (from << 32) | to
        const auto key = [](int a, int b) {
            return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b);
        };
        std::vector<int> fresh;
        fresh.reserve(ring.size());
        for (const BEdge& e : ring) {
            Tri nt;
            nt.v = {e.a, e.b, vi};
            nt.nbr = {e.outside, -1, -1};
            const int id = static_cast<int>(tris_.size());
            tris_.push_back(nt);
            fresh.push_back(id);
            if (e.outside >= 0) {
                Tri& out = tris_[static_cast<std::size_t>(e.outside)];
                for (int k = 0; k < 3; ++k) {
                    if (out.v[k] == e.b && out.v[(k + 1) % 3] == e.a) {
                        out.nbr[static_cast<std::size_t>(k)] = id;
                    }
                }
            }
            spoke[key(e.b, vi)] = id;  // edge 1 of nt
            spoke[key(vi, e.a)] = id;  // edge 2 of nt
        }
        for (const int id : fresh) {
            Tri& t = tris_[static_cast<std::size_t>(id)];
            const auto it1 = spoke.find(key(t.v[2], t.v[1])); // reversed edge 1
            if (it1 != spoke.end()) t.nbr[1] = it1->second;
            const auto it2 = spoke.find(key(t.v[0], t.v[2])); // reversed edge 2
            if (it2 != spoke.end()) t.nbr[2] = it2->second;
        }
        last_alive_ = fresh.empty() ? last_alive_ : fresh.front();
    }
};

// Convenience wrapper returning ccw triangles of a point set.
inline std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Vec2>& points) {
    return Delaunay2D(points).triangles();
}

} // namespace vortexopt
