#pragma once

// Quasi-static small-strain equilibrium of the viscoelastic part with thermal
// strain loading and penalty contact against a rigid mold, linearized per
// time step by Picard sweeps.

#include <Eigen/Core>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "hotemboss/contact.hpp"
#include "hotemboss/material.hpp"
#include "hotemboss/mesh.hpp"
#include "hotemboss/schedule.hpp"
#include "hotemboss/sparse.hpp"

namespace hotemboss::mechanics {

using Vec3 = Eigen::Vector3d;
using Tensor3 = Eigen::Matrix3d;

/// Displacement constraint on the nodes of a set. Held components keep their
/// displacement fixed (zero increment) while the constraint is active; with a
/// schedule per component the displacement follows it in absolute terms.
struct Constraint {
    std::string set;
    std::array<bool, 3> components{false, false, false};
    std::array<std::optional<Schedule>, 3> prescribed{};
};

/// Uniform pressure (Pa, positive compressive) on a facet set.
struct PressureLoad {
    std::string facet_set;
    Schedule pressure;
};

struct PicardOptions {
    double displacement_tolerance = 1e-6;  // on ||d(du)|| / ||u||
    std::size_t max_sweeps = 50;
    double linear_tolerance_factor = 0.01;  // CG tolerance = factor x displacement_tolerance
    std::size_t max_cg_iterations = 20000;
    linalg::PreconditionerKind preconditioner = linalg::PreconditionerKind::ilu0;
};

/// Static description of the mechanical problem.
struct MechanicalModel {
    MechanicalModel(const mesh::Mesh& mesh, const material::MaterialCard& card);

    const mesh::Mesh& mesh;
    const material::MaterialCard& card;
    std::vector<mesh::ElementGeometry> geometry;
    linalg::CsrMatrix pattern;  // 3n x 3n, node blocks

    Vec3 body_force = Vec3::Zero();  // N/m^3
    contact::RigidSurface mold;
    contact::ContactParams contact_params;
    std::vector<std::size_t> contact_nodes;  // candidate nodes

    /// Candidate nodes from the union of the named sets.
    void set_contact_candidates(const std::vector<std::string>& sets);
};

struct MechanicalState {
    std::vector<Vec3> displacement;                  // per node, m
    std::vector<material::PointState> points;        // per element
    std::vector<contact::ContactNodeState> contacts; // parallel to model.contact_nodes
    double time = 0.0;
};

MechanicalState initial_mechanical_state(const MechanicalModel& model, double initial_temperature);

/// Loading for one step. Element temperatures are the means of nodal values.
struct StepLoads {
    double dt = 0.0;
    std::vector<double> temperature_old;  // nodal, K
    std::vector<double> temperature_new;
    std::vector<Constraint> constraints;
    std::vector<PressureLoad> pressures;
    bool friction = true;
};

struct ElementField {
    Tensor3 stress = Tensor3::Zero();
    Tensor3 deviatoric_stress = Tensor3::Zero();
    double spherical_stress = 0.0;
    Tensor3 strain = Tensor3::Zero();
    double temperature = 0.0;
    double fictive_temperature = 0.0;
};

struct ContactSummary {
    std::size_t open = 0;
    std::size_t stick = 0;
    std::size_t slip = 0;
    double max_penetration = 0.0;
};

struct StepResult {
    MechanicalState state;
    std::vector<ElementField> elements;
    ContactSummary contact;
    std::size_t picard_iterations = 0;
    std::size_t cg_iterations = 0;
    std::size_t preconditioner_fallbacks = 0;  // sweeps that replaced an indefinite ILU(0) by Jacobi
    std::vector<double> residual_history;  // relative displacement change per sweep
    double equilibrium_residual = 0.0;     // ||f_int - f_ext - f_contact|| / ||f_ext + f_contact||
};

/// Isotropic step tangent and predictor stress of one element.
struct ElementStepData {
    double dxi = 0.0;
    material::PointState trial;  // fictive temperature advanced
    double thermal_strain_increment = 0.0;
    material::IncrementalResponse response;
    Tensor3 predictor_stress = Tensor3::Zero();  // stress at zero strain increment
};

std::vector<ElementStepData> element_step_data(const MechanicalModel& model, const MechanicalState& state,
                                               const StepLoads& loads);

/// Assembles the tangent matrix (viscoelastic part only) and the out-of-balance
/// force f_ext - f_int(predictor).
void assemble_mechanical(const MechanicalModel& model, const std::vector<ElementStepData>& data,
                         const StepLoads& loads, double time, linalg::CsrMatrix& matrix, std::vector<double>& rhs);

/// Runs Picard sweeps to convergence and returns the committed state. Throws
/// NonConvergenceError after max_sweeps, SingularConstraintError when nothing
/// restrains the part.
StepResult picard_step(const MechanicalModel& model, const MechanicalState& previous, const StepLoads& loads,
                       const PicardOptions& options = {});

/// Element stress and strain of a committed state.
std::vector<ElementField> element_fields(const MechanicalModel& model, const MechanicalState& state,
                                         const std::vector<double>& nodal_temperature);

struct RecoveredFields {
    std::vector<Vec3> coordinates;  // X + amplification * u
    std::vector<double> stress_xx;
    std::vector<double> strain_xx;
};

RecoveredFields recover_fields(const MechanicalModel& model, const StepResult& result, double amplification);

struct ShrinkageReport {
    Vec3 axis_strain = Vec3::Zero();  // bounding-box strain per axis; negative when the part shrinks
    std::vector<std::pair<std::string, Vec3>> feature_offsets;  // node sets named feature*
};

ShrinkageReport shrinkage_report(const mesh::Mesh& mesh, const std::vector<Vec3>& displacement);

Tensor3 element_strain(const mesh::Mesh& mesh, const mesh::ElementGeometry& geo, std::size_t element,
                       const std::vector<Vec3>& displacement);

double von_mises(const Tensor3& stress);

}  // namespace hotemboss::mechanics
