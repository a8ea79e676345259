#pragma once

// Run state saved between steps so a run can be resumed. Doubles are written
// in shortest round-trip form, so a resumed run starts from bit-identical state.

#include <filesystem>
#include <optional>
#include <vector>

#include "hotemboss/mechanics.hpp"
#include "hotemboss/thermal.hpp"
#include "json.hpp"

namespace hotemboss {

enum class Phase : int { cooling = 0, demolding = 1 };
std::string to_string(Phase p);

/// One completed step of a run.
struct StepRecord {
    Phase phase = Phase::cooling;
    double time = 0.0;             // s
    double t_min = 0.0;            // K
    double t_mean = 0.0;           // K, volume average
    double t_max = 0.0;            // K
    double max_von_mises = 0.0;    // Pa
    double demolding_force = 0.0;  // N, along the opening direction
    std::size_t picard_iterations = 0;
    std::size_t cg_iterations = 0;
};

struct Checkpoint {
    Phase phase = Phase::cooling;
    std::size_t major_step = 0;     // completed steps of nominal size
    std::size_t next_snapshot = 0;  // index of the next VTK file
    std::optional<double> demolding_start;
    thermal::TemperatureField temperature;
    mechanics::MechanicalState mechanics;
    std::vector<StepRecord> records;
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
/// Throws ParseError on a malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hotemboss
