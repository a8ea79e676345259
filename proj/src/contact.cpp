#include "hotemboss/contact.hpp"

#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <limits>

#include "hotemboss/errors.hpp"

namespace hotemboss::contact {

namespace {

void tangent_frame(GapResult& g) {
    const Vec3& n = g.normal;
    const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    g.tangent1 = (helper - helper.dot(n) * n).normalized();
    g.tangent2 = n.cross(g.tangent1);
}

GapResult half_space_gap(const HalfSpace& h, const Vec3& x) {
    GapResult g;
    g.normal = h.normal.normalized();
    g.gap = -(x - h.point).dot(g.normal);
    return g;
}

GapResult box_gap(const Box& b, const Vec3& x) {
    GapResult g;
    // Distances to the six faces, ordered x-lo, x-hi, y-lo, y-hi, z-lo, z-hi.
    bool inside = true;
    for (int k = 0; k < 3; ++k) {
        if (x[k] < b.lo[k] || x[k] > b.hi[k]) {
            inside = false;
        }
    }
    if (inside) {
        double best = std::numeric_limits<double>::infinity();
        int face = 0;
        for (int k = 0; k < 3; ++k) {
            const double to_lo = x[k] - b.lo[k];
            const double to_hi = b.hi[k] - x[k];
            if (to_lo < best) {
                best = to_lo;
                face = 2 * k;
            }
            if (to_hi < best) {
                best = to_hi;
                face = 2 * k + 1;
            }
        }
        const int axis = face / 2;
        const double outward = (face % 2 == 0) ? -1.0 : 1.0;
        g.normal = Vec3::Zero();
        if (b.solid) {
            // Inside a tooth: penetration is the distance to the nearest face,
            // pushed out through that face.
            g.gap = best;
            g.normal[axis] = outward;
        } else {
            // Inside a cavity: separated from the surrounding mold.
            g.gap = -best;
            g.normal[axis] = -outward;
        }
        return g;
    }
    Vec3 q;
    for (int k = 0; k < 3; ++k) {
        q[k] = std::clamp(x[k], b.lo[k], b.hi[k]);
    }
    const Vec3 d = x - q;
    const double dist = d.norm();
    g.normal = d / dist;
    if (b.solid) {
        g.gap = -dist;
    } else {
        g.gap = dist;
        g.normal = -g.normal;
    }
    return g;
}

}  // namespace

GapResult primitive_gap(const Primitive& primitive, const Vec3& x) {
    GapResult g = std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, HalfSpace>) {
                return half_space_gap(p, x);
            } else {
                return box_gap(p, x);
            }
        },
        primitive);
    tangent_frame(g);
    return g;
}

RigidSurface::RigidSurface(std::vector<Primitive> primitives, Vec3 opening_direction, Schedule opening)
    : primitives_(std::move(primitives)), opening_direction_(opening_direction.normalized()), opening_(std::move(opening)) {
    for (const auto& p : primitives_) {
        if (const auto* h = std::get_if<HalfSpace>(&p); h && !(h->normal.norm() > 0.0)) {
            throw ValidationError("half-space primitive needs a non-zero normal");
        }
        if (const auto* b = std::get_if<Box>(&p); b && !(b->lo.array() < b->hi.array()).all()) {
            throw ValidationError("box primitive needs lo < hi on every axis");
        }
    }
}

GapResult RigidSurface::gap(const Vec3& x, double time) const {
    if (primitives_.empty()) {
        throw ValidationError("rigid surface has no primitives");
    }
    const Vec3 local = x - offset(time);
    GapResult best;
    best.gap = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < primitives_.size(); ++i) {
        GapResult g = primitive_gap(primitives_[i], local);
        if (g.gap > best.gap) {
            best = g;
            best.primitive = i;
        }
    }
    return best;
}

void ContactParams::validate() const {
    if (!(normal_penalty > 0.0)) {
        throw ValidationError("contact: normal penalty must be > 0");
    }
    if (!(tangential_penalty > 0.0)) {
        throw ValidationError("contact: tangential penalty must be > 0");
    }
    if (!(static_friction >= 0.0) || !(dynamic_friction >= 0.0)) {
        throw ValidationError("contact: friction coefficients must be >= 0");
    }
    if (dynamic_friction > static_friction) {
        throw ValidationError("contact: dynamic friction must not exceed static friction (mu_d <= mu_s)");
    }
}

std::string to_string(Status s) {
    switch (s) {
        case Status::open:
            return "open";
        case Status::stick:
            return "stick";
        case Status::slip:
            return "slip";
    }
    return "unknown";
}

ForceResult contact_force(double gap, const Vec3& trial_slip, Status previous, const ContactParams& params) {
    ForceResult r;
    if (!(gap > 0.0)) {
        return r;
    }
    r.normal_force = -params.normal_penalty * gap;
    const double pressure = std::abs(r.normal_force);
    if (!params.friction || params.static_friction == 0.0) {
        r.status = Status::slip;
        return r;
    }
    const Vec3 trial = -params.tangential_penalty * trial_slip;
    const double magnitude = trial.norm();
    const double limit = previous == Status::slip ? params.dynamic_friction * pressure * kRestickFactor
                                                  : params.static_friction * pressure;
    if (magnitude < limit) {
        r.status = Status::stick;
        r.tangential_force = trial;
        return r;
    }
    const double slip_norm = trial_slip.norm();
    if (slip_norm == 0.0) {
        r.status = Status::stick;
        r.tangential_force = trial;
        return r;
    }
    r.status = Status::slip;
    r.tangential_force = -(params.dynamic_friction * pressure / slip_norm) * trial_slip;
    return r;
}

void contact_force(ContactNodeState& state, const ContactParams& params) {
    const auto r = contact_force(state.gap, state.tangential_slip, state.status, params);
    state.normal_force = r.normal_force;
    state.tangential_force = r.tangential_force;
    state.status = r.status;
}

void relocate_anchor(ContactNodeState& state, const ContactParams& params) {
    if (state.status != Status::slip) {
        return;
    }
    const Vec3 consistent = -state.tangential_force / params.tangential_penalty;
    state.anchor += state.tangential_slip - consistent;
    state.tangential_slip = consistent;
}

double demolding_force(const std::vector<ContactNodeState>& states, const Vec3& opening_direction) {
    const Vec3 d = opening_direction.normalized();
    double total = 0.0;
    for (const auto& s : states) {
        if (s.status == Status::open) {
            continue;
        }
        total += d.dot(s.force_on_part());
    }
    return total;
}

}  // namespace hotemboss::contact
