#pragma once

// Legacy VTK ASCII unstructured-grid output, plus a reader for the subset the
// writer produces.

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hotemboss/mesh.hpp"

namespace hotemboss::vtk {

using Vec3 = Eigen::Vector3d;
using Tensor3 = Eigen::Matrix3d;

struct Fields {
    std::vector<double> temperature;   // K, per node
    std::vector<Vec3> displacement;    // m, per node
    std::vector<int> contact_status;   // per node: -1 not a candidate, else contact::Status
    std::vector<Tensor3> stress;       // Pa, per element
    std::vector<Tensor3> strain;       // per element
};

/// Writes one snapshot. Points are X + amplification * u. Doubles carry 17
/// significant digits. Throws Error (with the path) on I/O failure.
void write_vtk(const std::filesystem::path& path, const mesh::Mesh& mesh, const Fields& fields, double amplification,
               const std::string& title = "hotemboss");

struct Document {
    std::string title;
    std::vector<Vec3> points;
    std::vector<std::vector<std::size_t>> cells;
    std::vector<int> cell_types;
    std::map<std::string, std::vector<double>> point_scalars;
    std::map<std::string, std::vector<Vec3>> point_vectors;
    std::map<std::string, std::vector<double>> cell_scalars;
};

/// Parses a legacy ASCII unstructured grid with SCALARS and VECTORS
/// attributes. Throws ParseError.
Document read_vtk(const std::filesystem::path& path);

}  // namespace hotemboss::vtk
