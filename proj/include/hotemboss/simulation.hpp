#pragma once

// Orchestration of a full run: cooling in the closed mold, then demolding.
// Each step solves heat conduction first and then the mechanical problem with
// the new temperatures.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hotemboss/checkpoint.hpp"
#include "hotemboss/config.hpp"
#include "hotemboss/errors.hpp"

namespace hotemboss {

/// A module error raised mid-run, with the phase and step prepended.
class RunError : public Error {
public:
    RunError(const std::string& what, Phase phase, std::size_t step) : Error(what), phase_(phase), step_(step) {}
    Phase phase() const noexcept { return phase_; }
    std::size_t step() const noexcept { return step_; }

private:
    Phase phase_;
    std::size_t step_;
};

struct RunOptions {
    std::optional<std::filesystem::path> output_dir;  // overrides the config
    std::optional<unsigned> threads;                  // overrides the config
    bool sequential = false;                          // one thread, whatever else is set
    std::size_t checkpoint_every = 0;                 // major steps; 0 disables
    std::optional<std::filesystem::path> restart;     // checkpoint to resume from
    std::optional<std::size_t> stop_after;            // stop once this many major steps are done
    bool write_files = true;
    std::ostream* log = nullptr;
};

struct RunSummary {
    std::vector<StepRecord> records;
    std::optional<double> demolding_start;  // s
    std::size_t major_steps = 0;
    bool stopped_early = false;
    mechanics::ShrinkageReport shrinkage;
    thermal::TemperatureField temperature;
    mechanics::MechanicalState mechanics;
    std::vector<mechanics::ElementField> elements;
    std::vector<std::filesystem::path> snapshots;
};

/// Runs the configured simulation. Throws ConfigError when validate_config
/// reports an error and RunError when a step fails even at the smallest
/// allowed dt. Outputs written so far are flushed before a RunError leaves.
RunSummary run(const config::SimulationConfig& config, const RunOptions& options = {});

/// Capacity-weighted nodal mean, equal to the volume average of the
/// piecewise-linear field under lumped capacity.
double volume_average(const thermal::ThermalOperators& operators, const std::vector<double>& temperature);

void write_summary_csv(const std::vector<StepRecord>& records, const std::filesystem::path& path);

}  // namespace hotemboss
