#ifndef EMVAC_MESH_HPP
#define EMVAC_MESH_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "emvac/vec3.hpp"

namespace emvac {

/// Flat panel (triangle or quad) of a conductor surface.
struct Panel {
    std::array<int, 4> v{-1, -1, -1, -1};
    int nv = 3;
    Vec3 centroid;
    Vec3 normal;       // unit, outward
    double area = 0.0; // m^2
    double diameter = 0.0; // largest vertex-centroid distance
};

struct TrianglePatch {
    std::array<int, 3> v;
    int panel = -1;
    Vec3 centroid;
    Vec3 normal;
    double area = 0.0;
};

struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<Panel> panels;

    /// Recomputes centroids, normals, areas. Call after editing geometry.
    void finalize();

    double total_area() const;
    /// |sum_k area_k n_k . e| / total_area, maximized over the three axes.
    /// Near zero for a consistently oriented closed mesh.
    double closure_defect() const;
    /// Watertight and consistently oriented: zero closure defect and every
    /// directed edge matched by exactly one reverse edge.
    bool is_closed(double tol = 1e-6) const;

    /// Triangulated view (quads split along v0-v2), for the stream-function
    /// current basis and inside tests.
    std::vector<TrianglePatch> triangles() const;

    /// Solid-angle inside test; meaningful only for closed meshes.
    bool contains(const Vec3& point) const;

    Vec3 bbox_min() const;
    Vec3 bbox_max() const;
};

// -- generators (outward-oriented) ------------------------------------------

SurfaceMesh make_sphere_mesh(double radius, const Vec3& center, int n_lat, int n_lon);

/// Cylinder along `axis`. cap_rings = 0 leaves the tube open; otherwise both
/// ends are closed with cap_rings concentric rings of panels.
SurfaceMesh make_cylinder_mesh(double radius, double half_length, int n_around,
                               int n_axial, int cap_rings, const Vec3& center,
                               const Vec3& axis);

/// Flat square plate centered at `center` with the given unit normal.
SurfaceMesh make_plate_mesh(double width, double height, int nx, int ny,
                            const Vec3& center, const Vec3& normal);

/// Closed cube of the given half extent, n_per_edge x n_per_edge panels
/// per face. Faces do not share vertices; use it for charge solves only.
SurfaceMesh make_box_mesh(const Vec3& center, double half_extent, int n_per_edge);

// -- plain-text mesh I/O (see docs/mesh_format.md) ---------------------------

SurfaceMesh read_mesh(std::istream& in);
SurfaceMesh load_mesh(const std::string& path);
void write_mesh(const SurfaceMesh& mesh, std::ostream& out);
void save_mesh(const SurfaceMesh& mesh, const std::string& path);

} // namespace emvac

#endif
