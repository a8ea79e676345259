#pragma once

// Simulation configuration: one JSON document with unit-suffixed keys.
// Temperatures accept "_K" or "_C" suffixes and are stored in kelvin.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hotemboss/contact.hpp"
#include "hotemboss/mechanics.hpp"
#include "hotemboss/mesh.hpp"
#include "hotemboss/schedule.hpp"
#include "hotemboss/sparse.hpp"
#include "hotemboss/thermal.hpp"
#include "json.hpp"

namespace hotemboss::config {

/// Mesh source: a file, or one of the built-in generators.
struct MeshSource {
    std::filesystem::path path;
    std::string generator;  // "", "box" or "ribbed_plate"
    mesh::RibbedPlateSpec ribbed;
    std::array<std::size_t, 3> box_cells{1, 1, 1};
    Eigen::Vector3d box_size = Eigen::Vector3d::Ones();
};

struct PhaseConfig {
    double duration = 0.0;  // s; for demolding, defaults to the end of the opening schedule
    double dt = 0.0;        // s
    bool friction = true;
    std::vector<mechanics::Constraint> constraints;
    std::vector<mechanics::PressureLoad> pressures;
};

struct CoolingPhase : PhaseConfig {
    std::optional<double> demolding_temperature;  // K, volume average
};

struct DemoldingPhase : PhaseConfig {
    bool enabled = false;
    Schedule opening{0.0};  // m versus s measured from the start of demolding
};

struct SolverConfig {
    mechanics::PicardOptions picard;
    thermal::ThermalSolverOptions thermal;
    double min_dt = 1e-9;  // s, floor for step halving
    unsigned threads = 1;
};

struct OutputConfig {
    std::filesystem::path directory = "output";
    bool vtk = true;
    std::size_t every = 1;
    double amplification = 1.0;
    bool matrix_market = false;
};

struct SimulationConfig {
    std::filesystem::path source;  // config file, for diagnostics
    MeshSource mesh;
    std::filesystem::path material_path;
    double initial_temperature = 0.0;  // K
    thermal::ThermalBc thermal;
    Eigen::Vector3d body_force = Eigen::Vector3d::Zero();
    std::vector<std::string> contact_sets;
    contact::ContactParams contact;
    std::vector<contact::Primitive> mold;
    Eigen::Vector3d opening_direction = Eigen::Vector3d::UnitZ();
    CoolingPhase cooling;
    DemoldingPhase demolding;
    SolverConfig solver;
    OutputConfig output;
};

/// Parses a configuration document. Relative paths resolve against
/// `base_dir`. Throws ConfigError on structural problems (unknown keys,
/// wrong types, missing required keys); semantic checks are left to
/// validate_config.
SimulationConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
SimulationConfig load_config(const std::filesystem::path& path);

enum class Severity { warning, error };

struct Diagnostic {
    Severity severity;
    std::string message;
};

/// Checks every invariant of the configuration, including the referenced
/// files and sets. Never throws.
std::vector<Diagnostic> validate_config(const SimulationConfig& config);
bool has_errors(const std::vector<Diagnostic>& diagnostics);
std::string format(const Diagnostic& d);

/// Builds or loads the mesh described by the configuration.
mesh::Mesh load_config_mesh(const SimulationConfig& config);

}  // namespace hotemboss::config
