#pragma once

// Point-level thermo-viscoelastic constitutive law: WLF reduced time,
// fictive temperature, structural thermal strain and the recursive Prony
// stress update.

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace hotemboss::material {

using Tensor3 = Eigen::Matrix3d;

struct PronyTerm {
    double weight = 0.0;           // Pa (dimensionless for normalized spectra)
    double relaxation_time = 0.0;  // reduced seconds
};

/// G(xi) = long_term + sum_i weight_i * exp(-xi / relaxation_time_i)
class PronySeries {
public:
    PronySeries() = default;
    /// Sorts the terms by relaxation time and validates them.
    PronySeries(double long_term, std::vector<PronyTerm> terms);

    double long_term() const noexcept { return long_term_; }
    const std::vector<PronyTerm>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }

    double instantaneous() const noexcept;
    double value(double reduced_time) const noexcept;
    double weight_sum() const noexcept;
    double max_relaxation_time() const noexcept;

    /// Same time constants, weights divided by their sum, no long-term part.
    PronySeries normalized() const;

private:
    double long_term_ = 0.0;
    std::vector<PronyTerm> terms_;
};

/// WLF shift: Phi(T) = 10^(c1 (T - t_ref) / (c2 + T - t_ref)). Phi is the
/// reciprocal of the classical shift factor a_T, so material time runs faster
/// when hot.
struct WlfShift {
    double c1 = 0.0;
    double c2 = 1.0;     // K
    double t_ref = 0.0;  // K
};

/// Distance (K) from the WLF singularity below which temperatures are rejected.
inline constexpr double kWlfGuard = 1e-6;

/// Throws SingularTemperatureError when T - t_ref <= -c2 + kWlfGuard.
double shift_factor(double temperature, const WlfShift& shift);

/// Trapezoidal increment of reduced time over a step of length dt.
double reduced_time_increment(double t_old, double t_new, double dt, const WlfShift& shift);

/// Piecewise-linear coefficient table alpha(T). A single knot means a constant
/// coefficient valid at every temperature.
class ExpansionTable {
public:
    ExpansionTable() = default;
    ExpansionTable(std::vector<double> temperatures, std::vector<double> coefficients);
    static ExpansionTable constant(double alpha) { return ExpansionTable({0.0}, {alpha}); }

    double value(double temperature) const;
    /// Exact integral of the interpolant from `from` to `to` (signed).
    double integral(double from, double to) const;
    bool contains(double temperature) const noexcept;

    const std::vector<double>& temperatures() const noexcept { return temperatures_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }

private:
    void check_range(double temperature) const;
    std::vector<double> temperatures_;
    std::vector<double> coefficients_;
};

struct ThermalExpansion {
    ExpansionTable liquid;
    ExpansionTable glassy;
};

struct MaterialCard {
    std::string name;
    double density = 0.0;            // kg/m^3
    double heat_capacity = 0.0;      // J/(kg K)
    double conductivity = 0.0;       // W/(m K)
    double glass_transition = 0.0;   // K
    PronySeries shear_relaxation;    // shear modulus G(xi), Pa
    PronySeries bulk_relaxation;     // bulk modulus K(xi), Pa
    PronySeries volume_relaxation;   // M_v(xi), normalized
    WlfShift shift;
    ThermalExpansion expansion;

    /// Throws ValidationError on the first violated invariant.
    void validate() const;
};

/// Loads a material card JSON document; unknown keys are rejected.
MaterialCard load_material_card(const std::filesystem::path& path);
MaterialCard material_card_from_json(const nlohmann::json& doc);
nlohmann::json material_card_to_json(const MaterialCard& card);

/// History carried by one integration point.
struct PointState {
    double reduced_time = 0.0;
    double fictive_temperature = 0.0;  // K
    double thermal_strain = 0.0;
    double initial_temperature = 0.0;  // K, lower limit of the thermal-strain integral
    double last_temperature = 0.0;     // K
    Tensor3 strain = Tensor3::Zero();  // total small strain at the last commit
    std::vector<Tensor3> deviatoric_internal;  // one per shear term, Pa
    std::vector<double> volumetric_internal;   // one per bulk term, Pa
    std::vector<double> fictive_internal;      // one per volume-relaxation term, K
};

PointState initial_point_state(const MaterialCard& card, double initial_temperature);

/// Advances the fictive temperature to T_new over a reduced-time step dxi,
/// treating T as linear in reduced time within the step. Also advances
/// reduced_time and last_temperature. Returns the new fictive temperature.
double update_fictive_temperature(PointState& state, double t_new, double dxi, const MaterialCard& card);

/// Linear thermal strain accumulated from T_init through the fictive
/// temperature (liquid coefficients) and on to T (glassy coefficients).
double thermal_strain(double temperature, double fictive_temperature, double initial_temperature,
                      const MaterialCard& card);

/// Relaxation factors of one Prony term over a reduced-time step:
/// decay = exp(-dxi/tau), ramp = (1 - decay) / (dxi/tau).
struct TermFactors {
    double decay;
    double ramp;
};
TermFactors term_factors(double dxi, double relaxation_time) noexcept;

/// Step-linear response of a point. For strain increments d_dev (trace-free)
/// and d_mean (one third of the trace) the new stress is
///   s_ij = deviatoric_history + 2 shear_modulus d_dev
///   s    = spherical_history + 3 bulk_modulus (d_mean - d_thermal)
struct IncrementalResponse {
    double shear_modulus = 0.0;  // effective G over the step
    double bulk_modulus = 0.0;   // effective K over the step
    Tensor3 deviatoric_history = Tensor3::Zero();
    double spherical_history = 0.0;
};

IncrementalResponse incremental_response(const PointState& state, double dxi, const MaterialCard& card);

struct StressResult {
    Tensor3 deviatoric = Tensor3::Zero();
    double spherical = 0.0;
    Tensor3 total() const { return deviatoric + spherical * Tensor3::Identity(); }
};

/// Recursive update of the shear and dilatational hereditary integrals.
/// `d_dev` is the deviatoric strain increment, `d_mean` the spherical
/// (mean) strain increment and `d_thermal` the thermal strain increment.
/// Commits the new internal variables, total strain and thermal strain.
StressResult stress_update(PointState& state, const Tensor3& d_dev, double d_mean, double d_thermal, double dxi,
                           const MaterialCard& card);

/// Current stress of a committed state (no time advance).
StressResult current_stress(const PointState& state, const MaterialCard& card);

Tensor3 deviatoric_part(const Tensor3& t);
double mean_part(const Tensor3& t);

}  // namespace hotemboss::material
