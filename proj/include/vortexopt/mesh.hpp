#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vortexopt/delaunay.hpp"
#include "vortexopt/geometry.hpp"

namespace vortexopt {

// ---------------------------------------------------------------------------
// Shape specifications
// ---------------------------------------------------------------------------

struct ShapeSpec {
    enum class Kind { Disk, Rectangle, Dumbbell, Heart };

    Kind kind = Kind::Disk;
    double radius = 0.0;          // disk
    double width = 0.0;           // rectangle
    double height = 0.0;          // rectangle
    double lobe_radius = 0.0;     // dumbbell
    double neck_half_width = 0.0; // dumbbell
    double neck_length = 0.0;     // dumbbell half-length; neck spans [-neck_length, neck_length]
    double scale = 0.0;           // heart

    static ShapeSpec disk(double radius) {
        ShapeSpec s;
        s.kind = Kind::Disk;
        s.radius = radius;
        s.validate();
        return s;
    }
    static ShapeSpec rectangle(double width, double height) {
        ShapeSpec s;
        s.kind = Kind::Rectangle;
        s.width = width;
        s.height = height;
        s.validate();
        return s;
    }
    static ShapeSpec dumbbell(double lobe_radius, double neck_half_width, double neck_length) {
        ShapeSpec s;
        s.kind = Kind::Dumbbell;
        s.lobe_radius = lobe_radius;
        s.neck_half_width = neck_half_width;
        s.neck_length = neck_length;
        s.validate();
        return s;
    }
    static ShapeSpec heart(double scale) {
        ShapeSpec s;
        s.kind = Kind::Heart;
        s.scale = scale;
        s.validate();
        return s;
    }

    void validate() const {
        switch (kind) {
        case Kind::Disk:
            if (!(radius > 0.0)) throw std::runtime_error("shape: disk radius must be positive");
            break;
        case Kind::Rectangle:
            if (!(width > 0.0) || !(height > 0.0))
                throw std::runtime_error("shape: rectangle sides must be positive");
            break;
        case Kind::Dumbbell:
            if (!(lobe_radius > 0.0) || !(neck_half_width > 0.0) || !(neck_length > 0.0))
                throw std::runtime_error("shape: dumbbell parameters must be positive");
            if (!(neck_half_width < lobe_radius))
                throw std::runtime_error("shape: dumbbell neck_half_width must be below lobe_radius");
            break;
        case Kind::Heart:
            if (!(scale > 0.0)) throw std::runtime_error("shape: heart scale must be positive");
            break;
        }
    }

    // Smallest length the mesh must resolve.
    double characteristic_length() const {
        switch (kind) {
        case Kind::Disk: return radius;
        case Kind::Rectangle: return std::min(width, height);
        case Kind::Dumbbell: return std::min({lobe_radius, neck_half_width * 2.0, neck_length});
        case Kind::Heart: return scale * 0.5;
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Triangle mesh
// ---------------------------------------------------------------------------

struct TriMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles; // ccw
    std::vector<char> boundary_vertex;
    std::vector<double> element_area;
    std::vector<Vec2> element_centroid;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
};

struct MeshMetrics {
    double total_area = 0.0;
    double diameter = 0.0;
    double h_min = 0.0;
    double h_max = 0.0;
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Directed boundary edges (a, b) as traversed by their unique ccw triangle.
inline std::vector<std::array<int, 2>> boundary_edges(const TriMesh& mesh) {
    std::unordered_map<std::uint64_t, int> count;
    count.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) count[edge_key(t[e], t[(e + 1) % 3])]++;
    }
    std::vector<std::array<int, 2>> out;
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[e], b = t[(e + 1) % 3];
            const int c = count.at(edge_key(a, b));
            if (c == 1) out.push_back({a, b});
            if (c > 2) throw std::runtime_error("mesh: edge shared by more than two triangles");
        }
    }
    return out;
}

} // namespace detail

// Computes areas, centroids and boundary flags, fixes orientation, and
// enforces the mesh invariants. Throws on degenerate or inconsistent input.
inline TriMesh build_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles) {
    TriMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.triangles = std::move(triangles);

    const int nv = mesh.n_vertices();
    if (nv < 3 || mesh.triangles.empty()) throw std::runtime_error("mesh: empty mesh");

    double coord_scale = 0.0;
    for (const Vec2& p : mesh.vertices) {
        coord_scale = std::fmax(coord_scale, std::fmax(std::fabs(p.x), std::fabs(p.y)));
    }
    const double degenerate_eps = 1e-14 * coord_scale * coord_scale;

    mesh.element_area.resize(mesh.triangles.size());
    mesh.element_centroid.resize(mesh.triangles.size());
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        auto& t = mesh.triangles[i];
        for (int k = 0; k < 3; ++k) {
            if (t[k] < 0 || t[k] >= nv)
                throw std::runtime_error("mesh: triangle " + std::to_string(i) + " vertex index out of range");
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw std::runtime_error("mesh: triangle " + std::to_string(i) + " is degenerate");
        double a = triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        if (a < 0.0) {
            std::swap(t[1], t[2]);
            a = -a;
        }
        if (!(a > degenerate_eps))
            throw std::runtime_error("mesh: triangle " + std::to_string(i) + " is degenerate");
        mesh.element_area[i] = a;
        mesh.element_centroid[i] =
            (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) * (1.0 / 3.0);
    }

    mesh.boundary_vertex.assign(nv, 0);
    const auto bedges = detail::boundary_edges(mesh);
    for (const auto& e : bedges) {
        mesh.boundary_vertex[e[0]] = 1;
        mesh.boundary_vertex[e[1]] = 1;
    }

    // Total area must match the shoelace area of the mesh's own boundary.
    double total = 0.0;
    for (const double a : mesh.element_area) total += a;
    double boundary_twice = 0.0;
    for (const auto& e : bedges) boundary_twice += cross(mesh.vertices[e[0]], mesh.vertices[e[1]]);
    const double boundary_area = 0.5 * boundary_twice;
    if (std::fabs(total - boundary_area) > 1e-12 * total)
        throw std::runtime_error("mesh: element areas inconsistent with boundary polygon area");

    // Duplicate vertex scan via a sort along x.
    std::vector<int> order(nv);
    for (int i = 0; i < nv; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Vec2& p = mesh.vertices[a];
        const Vec2& q = mesh.vertices[b];
        return p.x < q.x || (p.x == q.x && p.y < q.y);
    });
    for (int i = 0; i + 1 < nv; ++i) {
        for (int j = i + 1; j < nv; ++j) {
            if (mesh.vertices[order[j]].x - mesh.vertices[order[i]].x > 1e-12) break;
            if (dist(mesh.vertices[order[i]], mesh.vertices[order[j]]) <= 1e-12)
                throw std::runtime_error("mesh: duplicate vertices");
        }
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// Structured templates: disk and rectangle
// ---------------------------------------------------------------------------

namespace detail {

inline TriMesh generate_disk(double radius, double target_h) {
    const int nr = std::max(1, static_cast<int>(std::ceil(radius / target_h)));
    const double dr = radius / nr;

    std::vector<Vec2> pts;
    std::vector<int> ring_start{0};
    pts.push_back({0.0, 0.0});
    for (int k = 1; k <= nr; ++k) {
        ring_start.push_back(static_cast<int>(pts.size()));
        const int m = 6 * k;
        const double r = dr * k;
        for (int j = 0; j < m; ++j) {
            const double th = 2.0 * std::numbers::pi * j / m;
            pts.push_back({r * std::cos(th), r * std::sin(th)});
        }
    }

    std::vector<std::array<int, 3>> tris;
    for (int o = 0; o < 6; ++o) tris.push_back({ring_start[1] + o, ring_start[1] + (o + 1) % 6, 0});
    for (int k = 2; k <= nr; ++k) {
        const int na = 6 * (k - 1), nb = 6 * k;
        const int sa = ring_start[k - 1], sb = ring_start[k];
        int i = 0, o = 0;
        const auto inner_angle = [&](int idx) { return 2.0 * std::numbers::pi * idx / na; };
        const auto outer_angle = [&](int idx) { return 2.0 * std::numbers::pi * idx / nb; };
        while (i < na || o < nb) {
            // ties at sector corners must advance the inner ring first, or the
            // fan picks up sqrt(3)-length diagonals
            const bool advance_outer =
                o < nb && (i >= na || outer_angle(o + 1) < inner_angle(i + 1) - 1e-12);
            if (advance_outer) {
                tris.push_back({sb + o, sb + (o + 1) % nb, sa + (i % na)});
                ++o;
            } else {
                tris.push_back({sa + i, sb + (o % nb), sa + (i + 1) % na});
                ++i;
            }
        }
    }
    return build_mesh(std::move(pts), std::move(tris));
}

inline TriMesh generate_rectangle(double width, double height, double target_h) {
    const double cell = target_h / std::numbers::sqrt2;
    const int nx = std::max(1, static_cast<int>(std::ceil(width / cell)));
    const int ny = std::max(1, static_cast<int>(std::ceil(height / cell)));
    const double dx = width / nx, dy = height / ny;
    const double x0 = -0.5 * width, y0 = -0.5 * height;

    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) pts.push_back({x0 + dx * i, y0 + dy * j});
    }
    const auto vid = [&](int i, int j) { return j * (nx + 1) + i; };

    std::vector<std::array<int, 3>> tris;
    tris.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            if ((i + j) % 2 == 0) {
                tris.push_back({a, b, c});
                tris.push_back({a, c, d});
            } else {
                tris.push_back({a, b, d});
                tris.push_back({b, c, d});
            }
        }
    }
    return build_mesh(std::move(pts), std::move(tris));
}

// ---------------------------------------------------------------------------
// Polygon-bounded shapes: dumbbell and heart
// ---------------------------------------------------------------------------

// Radius of the heart curve (x^2 + y^2 - 1)^3 = x^2 y^3 along direction theta.
inline double heart_radius(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double w = c * c * s * s * s;
    const auto g = [&](double r) {
        const double q = r * r - 1.0;
        return q * q * q - r * r * r * r * r * w;
    };
    double lo, hi;
    if (s > 0.0) {
        lo = 1.0;
        hi = 2.0;
    } else {
        lo = 1e-12;
        hi = 1.0;
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) <= 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline std::vector<Vec2> dumbbell_polygon(double L, double w, double l, double target_h) {
    const double reach = std::sqrt(L * L - w * w);
    const double cx = l + reach;
    const double phi = std::atan2(w, -reach); // junction angle on the right lobe
    std::vector<Vec2> loop;
    std::uint64_t salt = 0;
    const auto arc = [&](double ccx, double a0, double a1) {
        const int n = std::max(8, static_cast<int>(std::ceil(L * (a1 - a0) / target_h)));
        for (int j = 0; j <= n; ++j) {
            const double th = a0 + (a1 - a0) * j / n;
            double r = L;
            if (j != 0 && j != n) r *= 1.0 - 1e-7 * (0.5 + 0.5 * hash01(++salt)); // break cocircularity
            loop.push_back({ccx + r * std::cos(th), r * std::sin(th)});
        }
    };
    const auto edge_interior = [&](Vec2 a, Vec2 b) {
        const int n = std::max(2, static_cast<int>(std::ceil(dist(a, b) / target_h)));
        for (int j = 1; j < n; ++j) loop.push_back(a + (b - a) * (static_cast<double>(j) / n));
    };
    arc(cx, -phi, phi);                             // right lobe, ends at (l, w)
    edge_interior({l, w}, {-l, w});                 // neck top
    arc(-cx, std::numbers::pi - phi, std::numbers::pi + phi); // left lobe, (-l, w) to (-l, -w)
    edge_interior({-l, -w}, {l, -w});               // neck bottom
    return loop;
}

inline std::vector<Vec2> heart_polygon(double scale, double target_h) {
    // Uniform angular seed refined until every chord is short enough.
    struct Node { double theta; Vec2 p; };
    const auto eval = [&](double th) -> Node {
        const double r = heart_radius(th) * scale;
        return {th, {r * std::cos(th), r * std::sin(th)}};
    };
    std::vector<Node> loop;
    const int n0 = 64;
    for (int j = 0; j < n0; ++j) loop.push_back(eval(2.0 * std::numbers::pi * j / n0));
    for (int pass = 0; pass < 24; ++pass) {
        std::vector<Node> refined;
        bool split = false;
        for (std::size_t i = 0; i < loop.size(); ++i) {
            const Node& a = loop[i];
            const Node& b = loop[(i + 1) % loop.size()];
            refined.push_back(a);
            const double tb = (i + 1 == loop.size()) ? b.theta + 2.0 * std::numbers::pi : b.theta;
            if (dist(a.p, b.p) > 0.9 * target_h) {
                refined.push_back(eval(0.5 * (a.theta + tb)));
                split = true;
            }
        }
        loop.swap(refined);
        if (!split) break;
    }
    std::vector<Vec2> out;
    out.reserve(loop.size());
    for (const Node& n : loop) out.push_back(n.p);
    return out;
}

// Hexagonal interior lattice clipped away from the polygon boundary,
// triangulated together with the boundary samples.
inline TriMesh generate_from_polygon(const std::vector<Vec2>& loop, double target_h) {
    double xmin = loop[0].x, xmax = xmin, ymin = loop[0].y, ymax = ymin;
    for (const Vec2& p : loop) {
        xmin = std::fmin(xmin, p.x); xmax = std::fmax(xmax, p.x);
        ymin = std::fmin(ymin, p.y); ymax = std::fmax(ymax, p.y);
    }
    std::vector<Vec2> pts = loop;
    const double a = target_h;
    const double row_h = a * std::numbers::sqrt3 / 2.0;
    const int j0 = static_cast<int>(std::floor(ymin / row_h)) - 1;
    const int j1 = static_cast<int>(std::ceil(ymax / row_h)) + 1;
    for (int j = j0; j <= j1; ++j) {
        const double y = j * row_h;
        const double offset = (j % 2 == 0) ? 0.0 : 0.5 * a;
        const int i0 = static_cast<int>(std::floor((xmin - offset) / a)) - 1;
        const int i1 = static_cast<int>(std::ceil((xmax - offset) / a)) + 1;
        for (int i = i0; i <= i1; ++i) {
            const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) << 32) |
                                      static_cast<std::uint32_t>(i);
            Vec2 p{offset + i * a + (hash01(key) - 0.5) * 0.12 * a,
                   y + (hash01(key ^ 0xABCDEF1234567890ULL) - 0.5) * 0.12 * a};
            if (!point_in_polygon(p, loop)) continue;
            if (dist_point_polygon(p, loop) < 0.55 * a) continue;
            pts.push_back(p);
        }
    }

    const auto tris_all = delaunay_triangulate(pts);
    std::vector<std::array<int, 3>> kept;
    kept.reserve(tris_all.size());
    for (const auto& t : tris_all) {
        const Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) * (1.0 / 3.0);
        if (point_in_polygon(c, loop)) kept.push_back(t);
    }

    // Drop vertices that ended up unused.
    std::vector<int> remap(pts.size(), -1);
    std::vector<Vec2> used;
    for (auto& t : kept) {
        for (int k = 0; k < 3; ++k) {
            if (remap[t[k]] < 0) {
                remap[t[k]] = static_cast<int>(used.size());
                used.push_back(pts[t[k]]);
            }
            t[k] = remap[t[k]];
        }
    }
    return build_mesh(std::move(used), std::move(kept));
}

} // namespace detail

inline TriMesh generate_domain(const ShapeSpec& spec, double target_h) {
    spec.validate();
    if (!(target_h > 0.0)) throw std::runtime_error("generate_domain: target_h must be positive");
    if (!(target_h < spec.characteristic_length()))
        throw std::runtime_error("generate_domain: target_h too coarse for the requested shape");
    switch (spec.kind) {
    case ShapeSpec::Kind::Disk:
        return detail::generate_disk(spec.radius, target_h);
    case ShapeSpec::Kind::Rectangle:
        return detail::generate_rectangle(spec.width, spec.height, target_h);
    case ShapeSpec::Kind::Dumbbell: {
        // At least 4 elements across the neck.
        if (2.0 * spec.neck_half_width / target_h < 4.0)
            throw std::runtime_error("generate_domain: target_h too coarse to resolve the dumbbell neck");
        const auto loop = detail::dumbbell_polygon(spec.lobe_radius, spec.neck_half_width,
                                                   spec.neck_length, target_h);
        return detail::generate_from_polygon(loop, target_h);
    }
    case ShapeSpec::Kind::Heart: {
        const auto loop = detail::heart_polygon(spec.scale, target_h);
        return detail::generate_from_polygon(loop, target_h);
    }
    }
    throw std::runtime_error("generate_domain: unknown shape");
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline MeshMetrics mesh_metrics(const TriMesh& mesh) {
    MeshMetrics m;
    for (const double a : mesh.element_area) m.total_area += a;

    m.h_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        double h = 0.0;
        for (int e = 0; e < 3; ++e)
            h = std::fmax(h, dist(mesh.vertices[t[e]], mesh.vertices[t[(e + 1) % 3]]));
        m.h_min = std::fmin(m.h_min, h);
        m.h_max = std::fmax(m.h_max, h);
    }

    // Max pairwise vertex distance, reached on the convex hull.
    std::vector<Vec2> p = mesh.vertices;
    std::sort(p.begin(), p.end(), [](const Vec2& u, const Vec2& v) {
        return u.x < v.x || (u.x == v.x && u.y < v.y);
    });
    std::vector<Vec2> hull(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && orient2d(hull[k - 2], hull[k - 1], p[i]) <= 0.0) --k;
        hull[k++] = p[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = p.size() - 1; i-- > 0;) {
        while (k >= lower && orient2d(hull[k - 2], hull[k - 1], p[i]) <= 0.0) --k;
        hull[k++] = p[i];
    }
    hull.resize(k > 0 ? k - 1 : 0);
    for (std::size_t i = 0; i < hull.size(); ++i) {
        for (std::size_t j = i + 1; j < hull.size(); ++j) {
            m.diameter = std::fmax(m.diameter, dist(hull[i], hull[j]));
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Plain-text node/element IO
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline void save_mesh(const TriMesh& mesh, const std::string& node_path, const std::string& ele_path) {
    std::ofstream nf(node_path);
    if (!nf) throw std::runtime_error("save_mesh: cannot open " + node_path);
    nf << mesh.n_vertices() << " 2\n";
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        nf << i << " " << detail::format_double(mesh.vertices[i].x) << " "
           << detail::format_double(mesh.vertices[i].y) << "\n";
    }
    std::ofstream ef(ele_path);
    if (!ef) throw std::runtime_error("save_mesh: cannot open " + ele_path);
    ef << mesh.n_triangles() << " 3\n";
    for (int i = 0; i < mesh.n_triangles(); ++i) {
        const auto& t = mesh.triangles[i];
        ef << i << " " << t[0] << " " << t[1] << " " << t[2] << "\n";
    }
}

inline TriMesh load_mesh(const std::string& node_path, const std::string& ele_path) {
    const auto fail = [](const std::string& file, int line, const std::string& what) {
        throw std::runtime_error(file + " line " + std::to_string(line) + ": " + what);
    };

    std::ifstream nf(node_path);
    if (!nf) throw std::runtime_error("load_mesh: cannot open " + node_path);
    std::string line;
    int lineno = 0;
    if (!std::getline(nf, line)) fail(node_path, 1, "missing header");
    ++lineno;
    std::istringstream hs(line);
    long long nv = 0;
    int dim = 0;
    if (!(hs >> nv >> dim) || dim != 2 || nv <= 0) fail(node_path, lineno, "bad header, expected '<n> 2'");
    std::vector<Vec2> verts(static_cast<std::size_t>(nv));
    for (long long i = 0; i < nv; ++i) {
        if (!std::getline(nf, line)) fail(node_path, lineno + 1, "unexpected end of file");
        ++lineno;
        std::istringstream ls(line);
        long long idx = 0;
        double x = 0.0, y = 0.0;
        if (!(ls >> idx >> x >> y)) fail(node_path, lineno, "parse failure");
        if (idx != i) fail(node_path, lineno, "vertex index out of order");
        verts[static_cast<std::size_t>(i)] = {x, y};
    }

    std::ifstream ef(ele_path);
    if (!ef) throw std::runtime_error("load_mesh: cannot open " + ele_path);
    lineno = 0;
    if (!std::getline(ef, line)) fail(ele_path, 1, "missing header");
    ++lineno;
    std::istringstream he(line);
    long long nt = 0;
    int per = 0;
    if (!(he >> nt >> per) || per != 3 || nt <= 0) fail(ele_path, lineno, "bad header, expected '<n> 3'");
    std::vector<std::array<int, 3>> tris(static_cast<std::size_t>(nt));
    for (long long i = 0; i < nt; ++i) {
        if (!std::getline(ef, line)) fail(ele_path, lineno + 1, "unexpected end of file");
        ++lineno;
        std::istringstream ls(line);
        long long idx = 0, a = 0, b = 0, c = 0;
        if (!(ls >> idx >> a >> b >> c)) fail(ele_path, lineno, "parse failure");
        if (idx != i) fail(ele_path, lineno, "element index out of order");
        if (a < 0 || a >= nv || b < 0 || b >= nv || c < 0 || c >= nv)
            fail(ele_path, lineno, "vertex index out of range");
        if (a == b || b == c || a == c) fail(ele_path, lineno, "degenerate triangle");
        tris[static_cast<std::size_t>(i)] = {static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)};
    }
    return build_mesh(std::move(verts), std::move(tris));
}

} // namespace vortexopt
