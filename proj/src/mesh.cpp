#include "emvac/mesh.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <utility>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "emvac/constants.hpp"

namespace emvac {

namespace {

void frame_from_axis(const Vec3& a, Vec3& u, Vec3& v) {
    Vec3 seed = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    u = a.cross(seed).normalized();
    v = a.cross(u);
}

} // namespace

void SurfaceMesh::finalize() {
    for (auto& p : panels) {
        if (p.nv != 3 && p.nv != 4)
            throw std::invalid_argument("panels must have 3 or 4 vertices");
        for (int k = 0; k < p.nv; ++k)
            if (p.v[static_cast<std::size_t>(k)] < 0 ||
                p.v[static_cast<std::size_t>(k)] >= static_cast<int>(vertices.size()))
                throw std::invalid_argument("panel vertex index out of range");

        Vec3 c;
        for (int k = 0; k < p.nv; ++k) c += vertices[static_cast<std::size_t>(p.v[static_cast<std::size_t>(k)])];
        c = c / p.nv;

        // area and normal from the fan triangulation about the centroid;
        // works for mildly warped quads too
        Vec3 nsum;
        for (int k = 0; k < p.nv; ++k) {
            const Vec3& a = vertices[static_cast<std::size_t>(p.v[static_cast<std::size_t>(k)])];
            const Vec3& b = vertices[static_cast<std::size_t>(p.v[static_cast<std::size_t>((k + 1) % p.nv)])];
            nsum += (a - c).cross(b - c) * 0.5;
        }
        p.centroid = c;
        p.area = nsum.norm();
        if (p.area <= 0.0) throw std::invalid_argument("degenerate panel with zero area");
        p.normal = nsum / p.area;
        p.diameter = 0.0;
        for (int k = 0; k < p.nv; ++k)
            p.diameter = std::max(
                p.diameter,
                (vertices[static_cast<std::size_t>(p.v[static_cast<std::size_t>(k)])] - c).norm());
    }
}

double SurfaceMesh::total_area() const {
    double a = 0.0;
    for (const auto& p : panels) a += p.area;
    return a;
}

double SurfaceMesh::closure_defect() const {
    Vec3 s;
    for (const auto& p : panels) s += p.normal * p.area;
    double a = total_area();
    return std::max({std::abs(s.x), std::abs(s.y), std::abs(s.z)}) / a;
}

bool SurfaceMesh::is_closed(double tol) const {
    if (closure_defect() >= tol) return false;
    // watertight and consistently oriented: every directed edge must be
    // matched by exactly one reverse edge
    std::map<std::pair<int, int>, int> count;
    for (const auto& p : panels)
        for (int k = 0; k < p.nv; ++k) {
            int a = p.v[static_cast<std::size_t>(k)];
            int b = p.v[static_cast<std::size_t>((k + 1) % p.nv)];
            ++count[{a, b}];
        }
    for (const auto& [edge, n] : count) {
        auto rev = count.find({edge.second, edge.first});
        if (n != 1 || rev == count.end() || rev->second != 1) return false;
    }
    return true;
}

std::vector<TrianglePatch> SurfaceMesh::triangles() const {
    std::vector<TrianglePatch> tris;
    tris.reserve(panels.size() * 2);
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto& p = panels[pi];
        auto add = [&](int a, int b, int c) {
            TrianglePatch t;
            t.v = {p.v[static_cast<std::size_t>(a)], p.v[static_cast<std::size_t>(b)],
                   p.v[static_cast<std::size_t>(c)]};
            t.panel = static_cast<int>(pi);
            const Vec3& va = vertices[static_cast<std::size_t>(t.v[0])];
            const Vec3& vb = vertices[static_cast<std::size_t>(t.v[1])];
            const Vec3& vc = vertices[static_cast<std::size_t>(t.v[2])];
            t.centroid = (va + vb + vc) / 3.0;
            Vec3 n = (vb - va).cross(vc - va) * 0.5;
            t.area = n.norm();
            if (t.area > 0.0) {
                t.normal = n / t.area;
                tris.push_back(t);
            }
        };
        if (p.nv == 3) add(0, 1, 2);
        else {
            add(0, 1, 2);
            add(0, 2, 3);
        }
    }
    return tris;
}

bool SurfaceMesh::contains(const Vec3& point) const {
    // van Oosterom & Strackee signed solid angle, summed over triangles
    double omega = 0.0;
    for (const auto& t : triangles()) {
        Vec3 a = vertices[static_cast<std::size_t>(t.v[0])] - point;
        Vec3 b = vertices[static_cast<std::size_t>(t.v[1])] - point;
        Vec3 c = vertices[static_cast<std::size_t>(t.v[2])] - point;
        double la = a.norm(), lb = b.norm(), lc = c.norm();
        double num = a.dot(b.cross(c));
        double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        omega += 2.0 * std::atan2(num, den);
    }
    return std::abs(omega) > 2.0 * kPi; // ~4pi inside, ~0 outside
}

Vec3 SurfaceMesh::bbox_min() const {
    Vec3 m{1e300, 1e300, 1e300};
    for (const auto& v : vertices) {
        m.x = std::min(m.x, v.x);
        m.y = std::min(m.y, v.y);
        m.z = std::min(m.z, v.z);
    }
    return m;
}

Vec3 SurfaceMesh::bbox_max() const {
    Vec3 m{-1e300, -1e300, -1e300};
    for (const auto& v : vertices) {
        m.x = std::max(m.x, v.x);
        m.y = std::max(m.y, v.y);
        m.z = std::max(m.z, v.z);
    }
    return m;
}

SurfaceMesh make_sphere_mesh(double radius, const Vec3& center, int n_lat, int n_lon) {
    if (radius <= 0 || n_lat < 3 || n_lon < 3)
        throw std::invalid_argument("sphere mesh needs radius > 0, n_lat >= 3, n_lon >= 3");
    SurfaceMesh m;
    // ring vertices; poles shared
    int north = 0, south = 1;
    m.vertices.push_back(center + Vec3{0, 0, radius});
    m.vertices.push_back(center + Vec3{0, 0, -radius});
    auto ring_vertex = [&](int band, int j) {
        // bands 1..n_lat-1 carry rings, j in [0, n_lon)
        return 2 + (band - 1) * n_lon + (j % n_lon);
    };
    for (int band = 1; band < n_lat; ++band) {
        double theta = kPi * band / n_lat;
        for (int j = 0; j < n_lon; ++j) {
            double phi = 2.0 * kPi * j / n_lon;
            m.vertices.push_back(center + Vec3{radius * std::sin(theta) * std::cos(phi),
                                               radius * std::sin(theta) * std::sin(phi),
                                               radius * std::cos(theta)});
        }
    }
    for (int j = 0; j < n_lon; ++j) {
        Panel top;
        top.nv = 3;
        top.v = {north, ring_vertex(1, j), ring_vertex(1, j + 1), -1};
        m.panels.push_back(top);
        Panel bot;
        bot.nv = 3;
        bot.v = {south, ring_vertex(n_lat - 1, j + 1), ring_vertex(n_lat - 1, j), -1};
        m.panels.push_back(bot);
    }
    for (int band = 1; band < n_lat - 1; ++band)
        for (int j = 0; j < n_lon; ++j) {
            Panel q;
            q.nv = 4;
            q.v = {ring_vertex(band, j), ring_vertex(band + 1, j),
                   ring_vertex(band + 1, j + 1), ring_vertex(band, j + 1)};
            m.panels.push_back(q);
        }
    m.finalize();
    return m;
}

SurfaceMesh make_cylinder_mesh(double radius, double half_length, int n_around,
                               int n_axial, int cap_rings, const Vec3& center,
                               const Vec3& axis) {
    if (radius <= 0 || half_length <= 0 || n_around < 3 || n_axial < 1 || cap_rings < 0)
        throw std::invalid_argument("bad cylinder mesh parameters");
    Vec3 a = axis.normalized();
    Vec3 u, v;
    frame_from_axis(a, u, v);

    SurfaceMesh m;
    auto side_vertex = [&](int ring, int j) { return ring * n_around + (j % n_around); };
    for (int ring = 0; ring <= n_axial; ++ring) {
        double z = -half_length + 2.0 * half_length * ring / n_axial;
        for (int j = 0; j < n_around; ++j) {
            double phi = 2.0 * kPi * j / n_around;
            m.vertices.push_back(center + a * z +
                                 radius * (std::cos(phi) * u + std::sin(phi) * v));
        }
    }
    for (int ring = 0; ring < n_axial; ++ring)
        for (int j = 0; j < n_around; ++j) {
            Panel q;
            q.nv = 4;
            q.v = {side_vertex(ring, j), side_vertex(ring, j + 1),
                   side_vertex(ring + 1, j + 1), side_vertex(ring + 1, j)};
            m.panels.push_back(q);
        }

    if (cap_rings > 0) {
        for (int end = 0; end < 2; ++end) {
            double z = end == 0 ? half_length : -half_length;
            int outer_ring_base = end == 0 ? n_axial * n_around : 0;
            // cap ring radii radius*(cap_rings-1)/cap_rings .. down to center
            std::vector<int> ring_base(static_cast<std::size_t>(cap_rings));
            for (int rr = 1; rr < cap_rings; ++rr) {
                ring_base[static_cast<std::size_t>(rr)] = static_cast<int>(m.vertices.size());
                double r = radius * (cap_rings - rr) / cap_rings;
                for (int j = 0; j < n_around; ++j) {
                    double phi = 2.0 * kPi * j / n_around;
                    m.vertices.push_back(center + a * z +
                                         r * (std::cos(phi) * u + std::sin(phi) * v));
                }
            }
            int center_idx = static_cast<int>(m.vertices.size());
            m.vertices.push_back(center + a * z);

            auto cap_vertex = [&](int rr, int j) {
                if (rr == 0) return outer_ring_base + (j % n_around);
                return ring_base[static_cast<std::size_t>(rr)] + (j % n_around);
            };
            for (int rr = 0; rr < cap_rings - 1; ++rr)
                for (int j = 0; j < n_around; ++j) {
                    Panel q;
                    q.nv = 4;
                    if (end == 0) // +axis cap, outward = +a
                        q.v = {cap_vertex(rr + 1, j), cap_vertex(rr, j),
                               cap_vertex(rr, j + 1), cap_vertex(rr + 1, j + 1)};
                    else // -axis cap, outward = -a
                        q.v = {cap_vertex(rr, j), cap_vertex(rr + 1, j),
                               cap_vertex(rr + 1, j + 1), cap_vertex(rr, j + 1)};
                    m.panels.push_back(q);
                }
            for (int j = 0; j < n_around; ++j) {
                Panel t;
                t.nv = 3;
                if (end == 0)
                    t.v = {center_idx, cap_vertex(cap_rings - 1, j),
                           cap_vertex(cap_rings - 1, j + 1), -1};
                else
                    t.v = {center_idx, cap_vertex(cap_rings - 1, j + 1),
                           cap_vertex(cap_rings - 1, j), -1};
                m.panels.push_back(t);
            }
        }
    }
    m.finalize();
    return m;
}

SurfaceMesh make_plate_mesh(double width, double height, int nx, int ny,
                            const Vec3& center, const Vec3& normal) {
    if (width <= 0 || height <= 0 || nx < 1 || ny < 1)
        throw std::invalid_argument("bad plate mesh parameters");
    Vec3 n = normal.normalized();
    Vec3 u, v;
    frame_from_axis(n, u, v);
    SurfaceMesh m;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.vertices.push_back(center + u * (width * (static_cast<double>(i) / nx - 0.5)) +
                                 v * (height * (static_cast<double>(j) / ny - 0.5)));
    auto idx = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            Panel q;
            q.nv = 4;
            q.v = {idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)};
            m.panels.push_back(q);
        }
    m.finalize();
    // u x v = n by construction of the frame; flip if needed
    if (m.panels.front().normal.dot(n) < 0)
        for (auto& p : m.panels) {
            std::swap(p.v[1], p.v[3]);
        }
    m.finalize();
    return m;
}

SurfaceMesh make_box_mesh(const Vec3& center, double half_extent, int n) {
    if (n < 1 || half_extent <= 0)
        throw std::invalid_argument("bad box mesh parameters");
    SurfaceMesh m;
    Vec3 normals[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& nrm : normals) {
        SurfaceMesh face = make_plate_mesh(2 * half_extent, 2 * half_extent, n, n,
                                           center + nrm * half_extent, nrm);
        int base = static_cast<int>(m.vertices.size());
        for (const auto& v : face.vertices) m.vertices.push_back(v);
        for (auto p : face.panels) {
            for (int k = 0; k < p.nv; ++k) p.v[static_cast<std::size_t>(k)] += base;
            m.panels.push_back(p);
        }
    }
    m.finalize();
    return m;
}

SurfaceMesh read_mesh(std::istream& in) {
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "emvac-mesh" || version != 1)
        throw std::runtime_error("mesh file: expected header 'emvac-mesh 1'");
    std::string key, orientation;
    if (!(in >> key >> orientation) || key != "orientation" ||
        (orientation != "outward" && orientation != "inward"))
        throw std::runtime_error("mesh file: expected 'orientation outward|inward'");
    std::size_t nv = 0, np = 0;
    if (!(in >> key >> nv) || key != "vertices")
        throw std::runtime_error("mesh file: expected 'vertices <count>'");
    SurfaceMesh m;
    m.vertices.resize(nv);
    for (auto& v : m.vertices)
        if (!(in >> v.x >> v.y >> v.z))
            throw std::runtime_error("mesh file: truncated vertex list");
    if (!(in >> key >> np) || key != "panels")
        throw std::runtime_error("mesh file: expected 'panels <count>'");
    m.panels.resize(np);
    for (auto& p : m.panels) {
        if (!(in >> p.nv) || (p.nv != 3 && p.nv != 4))
            throw std::runtime_error("mesh file: panel vertex count must be 3 or 4");
        for (int k = 0; k < p.nv; ++k)
            if (!(in >> p.v[static_cast<std::size_t>(k)]))
                throw std::runtime_error("mesh file: truncated panel list");
        if (orientation == "inward") { // stored order describes the inside; flip
            if (p.nv == 3) std::swap(p.v[1], p.v[2]);
            else std::swap(p.v[1], p.v[3]);
        }
    }
    m.finalize();
    return m;
}

SurfaceMesh load_mesh(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open mesh file: " + path);
    return read_mesh(f);
}

void write_mesh(const SurfaceMesh& mesh, std::ostream& out) {
    out << "emvac-mesh 1\n";
    out << "orientation outward\n";
    out << "vertices " << mesh.vertices.size() << "\n";
    out.precision(17);
    for (const auto& v : mesh.vertices)
        out << v.x << " " << v.y << " " << v.z << "\n";
    out << "panels " << mesh.panels.size() << "\n";
    for (const auto& p : mesh.panels) {
        out << p.nv;
        for (int k = 0; k < p.nv; ++k) out << " " << p.v[static_cast<std::size_t>(k)];
        out << "\n";
    }
}

void save_mesh(const SurfaceMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open mesh file for writing: " + path);
    write_mesh(mesh, f);
}

} // namespace emvac
