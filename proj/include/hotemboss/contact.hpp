#pragma once

// Node-on-rigid-surface contact: analytic mold primitives, penalty normal
// force and Coulomb stick/slip friction with radial return.

#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

#include "hotemboss/schedule.hpp"

namespace hotemboss::contact {

using Vec3 = Eigen::Vector3d;

/// Mold occupies {x : (x - point) . normal < 0}; `normal` points from the
/// mold into the part.
struct HalfSpace {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
};

/// Axis-aligned box. solid: the mold fills the box (a tooth). Otherwise the
/// box is a cavity: the mold fills everything outside it.
struct Box {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Ones();
    bool solid = true;
};

using Primitive = std::variant<HalfSpace, Box>;

struct GapResult {
    double gap = 0.0;  // > 0 penetration, < 0 separation, m
    Vec3 normal = Vec3::UnitZ();  // unit, from the mold into the part
    Vec3 tangent1 = Vec3::UnitX();
    Vec3 tangent2 = Vec3::UnitY();
    std::size_t primitive = 0;
};

/// Signed gap to a single primitive.
GapResult primitive_gap(const Primitive& primitive, const Vec3& x);

/// The mold as a union of primitives translating rigidly along
/// `opening_direction` by `opening(t)` metres.
class RigidSurface {
public:
    RigidSurface() = default;
    RigidSurface(std::vector<Primitive> primitives, Vec3 opening_direction = Vec3::UnitZ(), Schedule opening = Schedule(0.0));

    /// Gap to the most-penetrated primitive; ties go to the lowest index.
    GapResult gap(const Vec3& x, double time) const;
    Vec3 offset(double time) const { return opening_direction_ * opening_.at(time); }

    const std::vector<Primitive>& primitives() const noexcept { return primitives_; }
    const Vec3& opening_direction() const noexcept { return opening_direction_; }
    const Schedule& opening() const noexcept { return opening_; }
    bool empty() const noexcept { return primitives_.empty(); }

private:
    std::vector<Primitive> primitives_;
    Vec3 opening_direction_ = Vec3::UnitZ();
    Schedule opening_{0.0};
};

struct ContactParams {
    double normal_penalty = 1e6;      // lambda_n, N/m
    double tangential_penalty = 1e6;  // lambda_t, N/m
    double static_friction = 0.0;     // mu_s
    double dynamic_friction = 0.0;    // mu_d
    bool friction = true;

    /// Throws ValidationError unless lambda_n, lambda_t > 0 and 0 <= mu_d <= mu_s.
    void validate() const;
};

/// Hysteresis factor for leaving the slip state.
inline constexpr double kRestickFactor = 1.0 - 1e-3;

enum class Status : int { open = 0, stick = 1, slip = 2 };
std::string to_string(Status s);

struct ContactNodeState {
    Status status = Status::open;
    double gap = 0.0;                   // m, penetration positive
    Vec3 normal = Vec3::UnitZ();
    Vec3 tangent1 = Vec3::UnitX();
    Vec3 tangent2 = Vec3::UnitY();
    Vec3 tangential_slip = Vec3::Zero();  // u_t, in the tangent plane, relative to the anchor
    double normal_force = 0.0;            // f_n <= 0
    Vec3 tangential_force = Vec3::Zero(); // f_t on the part
    Vec3 anchor = Vec3::Zero();           // stick anchor in mold coordinates
    bool anchored = false;

    /// In-plane components of u_t in the (tangent1, tangent2) frame.
    Eigen::Vector2d slip_components() const { return {tangential_slip.dot(tangent1), tangential_slip.dot(tangent2)}; }
    /// Contact force acting on the part.
    Vec3 force_on_part() const { return -normal_force * normal + tangential_force; }
};

struct ForceResult {
    double normal_force = 0.0;
    Vec3 tangential_force = Vec3::Zero();
    Status status = Status::open;
};

/// Penalty normal force and Coulomb friction for a given penetration and trial
/// tangential displacement. `previous` selects the friction threshold: mu_s
/// from open/stick, mu_d (with hysteresis) while slipping.
ForceResult contact_force(double gap, const Vec3& trial_slip, Status previous, const ContactParams& params);

/// Applies contact_force to `state` using its gap and tangential_slip, and
/// updates its forces and status.
void contact_force(ContactNodeState& state, const ContactParams& params);

/// Moves the stick anchor of a slipping node so the stored tangential spring
/// carries exactly the capped friction force.
void relocate_anchor(ContactNodeState& state, const ContactParams& params);

/// Component along `opening_direction` of the total contact force the mold
/// exerts on the part. Positive when the part resists opening.
double demolding_force(const std::vector<ContactNodeState>& states, const Vec3& opening_direction);

}  // namespace hotemboss::contact
