#pragma once

// Transient heat conduction with convective (Robin) faces, lumped capacity and
// backward Euler time stepping.

#include <memory>
#include <string>
#include <vector>

#include "hotemboss/material.hpp"
#include "hotemboss/mesh.hpp"
#include "hotemboss/schedule.hpp"
#include "hotemboss/sparse.hpp"

namespace hotemboss::thermal {

struct ConvectiveFace {
    std::string facet_set;
    double film_coefficient = 0.0;  // h, W/(m^2 K)
    Schedule mold_temperature;      // K versus s
};

struct PrescribedTemperature {
    std::string set;
    double temperature = 0.0;  // K
};

/// Faces not listed as convective are adiabatic.
struct ThermalBc {
    std::vector<ConvectiveFace> convective;
    std::vector<PrescribedTemperature> prescribed;

    void validate(const mesh::Mesh& mesh) const;
};

struct TemperatureField {
    std::vector<double> values;  // K, per node
    double time = 0.0;           // s
};

/// Assembled operators. The boundary load at time t is
/// sum_f h_f T_mold,f(t) face_shape[f].
struct ThermalOperators {
    std::vector<double> capacity;          // lumped rho c_p V / 4 per node
    linalg::CsrMatrix conductivity;        // K_c
    linalg::CsrMatrix boundary;            // H, consistent on each triangle
    std::vector<std::vector<double>> face_shape;  // integral of N_i over each convective face
    std::vector<double> film_coefficients;
    std::vector<Schedule> mold_temperatures;
    std::vector<char> prescribed_mask;
    std::vector<double> prescribed_values;

    std::vector<double> boundary_load(double time) const;
};

/// Throws ValidationError for a facet set missing from the mesh.
ThermalOperators assemble_thermal(const mesh::Mesh& mesh, const material::MaterialCard& card, const ThermalBc& bc);

struct ThermalSolverOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 20000;
    linalg::PreconditionerKind preconditioner = linalg::PreconditionerKind::ilu0;
};

struct ThermalStepInfo {
    linalg::SolveReport solve;
    double internal_energy_change = 0.0;  // J
    double convective_heat_in = 0.0;      // J entering through convective faces
    double prescribed_heat_in = 0.0;      // J entering through prescribed-temperature nodes
};

/// Backward Euler stepper. Caches the factored system for the last dt.
class ThermalStepper {
public:
    ThermalStepper(std::shared_ptr<const ThermalOperators> operators, ThermalSolverOptions options = {});

    /// Solves (M/dt + K_c + H) T_new = (M/dt) T_old + b(t + dt).
    TemperatureField step(const TemperatureField& field, double dt, ThermalStepInfo* info = nullptr);

    const ThermalOperators& operators() const noexcept { return *ops_; }

private:
    void prepare(double dt);

    std::shared_ptr<const ThermalOperators> ops_;
    ThermalSolverOptions options_;
    double cached_dt_ = -1.0;
    linalg::CsrMatrix system_;
    std::unique_ptr<linalg::Preconditioner> preconditioner_;
};

TemperatureField thermal_step(const TemperatureField& field, double dt, const ThermalOperators& operators,
                              const ThermalSolverOptions& options = {}, ThermalStepInfo* info = nullptr);

double internal_energy(const ThermalOperators& operators, const std::vector<double>& temperatures);

/// Per-step energy bookkeeping for heat_balance.
struct HeatRecord {
    double time = 0.0;
    double internal_energy_change = 0.0;
    double boundary_heat_in = 0.0;
};

struct HeatHistory {
    double initial_energy = 0.0;
    std::vector<HeatRecord> steps;

    double total_boundary_heat_in() const;
    double total_energy_change() const;
};

/// |change in internal energy - heat entering through the boundary| in J.
double heat_balance(const HeatHistory& history);

}  // namespace hotemboss::thermal
