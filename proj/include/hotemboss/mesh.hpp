#pragma once

// Linear tetrahedral meshes: storage, Gmsh/JSON ingestion, element kernels and
// boundary facet extraction.

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace hotemboss::mesh {

using Vec3 = Eigen::Vector3d;
using Tet = std::array<std::size_t, 4>;
using Tri = std::array<std::size_t, 3>;

struct Mesh {
    std::vector<Vec3> nodes;  // m
    std::vector<Tet> elements;
    std::map<std::string, std::vector<Tri>> facet_sets;
    std::map<std::string, std::vector<std::size_t>> node_sets;

    std::size_t num_nodes() const noexcept { return nodes.size(); }
    std::size_t num_elements() const noexcept { return elements.size(); }

    /// Checks index ranges, duplicate elements, orientation and that every
    /// facet-set triangle lies on the boundary. Throws ValidationError.
    void validate() const;

    bool has_set(const std::string& name) const;
    /// Sorted unique nodes of a node set or of the triangles of a facet set.
    std::vector<std::size_t> set_nodes(const std::string& name) const;
    double total_volume() const;
};

struct ElementGeometry {
    std::array<Vec3, 4> gradients;  // 1/m
    double volume = 0.0;            // m^3
};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) noexcept;

/// Constant shape-function gradients of a linear tet. Throws
/// DegenerateElementError when |volume| < 1e-18 m^3.
ElementGeometry element_geometry(const Mesh& mesh, std::size_t element);
ElementGeometry tet_geometry(const std::array<Vec3, 4>& x);

struct BoundaryFacet {
    Tri nodes;        // ordered so (b - a) x (c - a) points out of the owner
    std::size_t owner;
    Vec3 normal;      // unit, outward
    double area;
};

/// Triangles used by exactly one element. Throws NonManifoldError when a
/// triangle is shared by three or more elements.
std::vector<BoundaryFacet> boundary_facets(const Mesh& mesh);

/// Area and unit normal (right-hand rule) of a triangle.
std::pair<double, Vec3> triangle_area_normal(const Vec3& a, const Vec3& b, const Vec3& c);

/// Dispatches on extension: ".msh" (Gmsh ASCII 2.2) or ".json".
Mesh load_mesh(const std::filesystem::path& path);
Mesh read_gmsh(std::istream& in);
Mesh mesh_from_json(const nlohmann::json& doc);
nlohmann::json mesh_to_json(const Mesh& mesh);
void write_gmsh(const Mesh& mesh, std::ostream& out);

/// Assigns every boundary facet to a named facet set chosen by `classify`
/// (return an empty name to skip). Existing sets of the same name are extended.
void tag_boundary(Mesh& mesh, const std::function<std::string(const Vec3& centroid, const Vec3& normal)>& classify);

/// Tensor-product grid with cells split into six conforming tetrahedra. Only
/// cells with active(i, j, k) true are meshed; unused nodes are dropped.
Mesh make_structured_mesh(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& zs,
                          const std::function<bool(std::size_t, std::size_t, std::size_t)>& active = {});

/// Box [0,lx]x[0,ly]x[0,lz] with facet sets xmin, xmax, ymin, ymax, zmin, zmax.
Mesh make_box_mesh(std::size_t nx, std::size_t ny, std::size_t nz, double lx, double ly, double lz);

/// Quarter model of a plate with a residual layer and straight ribs running
/// along y, symmetric about x = 0 and y = 0.
struct RibbedPlateSpec {
    double half_length = 2.0e-3;     // x extent, m
    double half_width = 0.3e-3;      // y extent, m
    double base_thickness = 0.2e-3;  // residual layer, m
    double rib_height = 0.2e-3;
    double rib_width = 0.1e-3;
    double rib_pitch = 0.3e-3;
    double first_rib_x = 0.1e-3;     // x of the first rib's inner wall
    std::size_t rib_count = 3;
    double cell_size = 0.05e-3;
    double cell_size_y = 0.1e-3;
};

/// Facet sets: bottom, sym_x, sym_y, edge_x, edge_y, mold_side. Node sets:
/// feature_rib<k> (top face of rib k).
Mesh make_ribbed_plate(const RibbedPlateSpec& spec);

/// Reflects the mesh across the plane x_axis = 0 and merges coincident nodes
/// on the plane. Sets named in `drop_sets` (the mirror-plane sets) are removed.
Mesh mirror(const Mesh& mesh, int axis, const std::vector<std::string>& drop_sets = {});

}  // namespace hotemboss::mesh
