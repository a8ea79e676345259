#include "hotemboss/mechanics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "hotemboss/errors.hpp"

namespace hotemboss::mechanics {

using material::PointState;

namespace {

constexpr double kTiny = 1e-300;
// After this many sweeps with contact status changes, displacement updates are
// halved for the rest of the step so chattering nodes settle onto the mold.
constexpr std::size_t kRelaxAfterSweeps = 5;
constexpr double kRelaxation = 0.5;

struct OrientedFacet {
    mesh::Tri nodes;
    Vec3 normal;
    double area;
};

// Facet-set triangles with their outward normals, keyed by set name.
std::map<std::string, std::vector<OrientedFacet>> orient_facet_sets(const mesh::Mesh& mesh) {
    std::map<std::array<std::size_t, 3>, mesh::BoundaryFacet> lookup;
    for (const auto& f : mesh::boundary_facets(mesh)) {
        auto key = f.nodes;
        std::sort(key.begin(), key.end());
        lookup.emplace(key, f);
    }
    std::map<std::string, std::vector<OrientedFacet>> out;
    for (const auto& [name, tris] : mesh.facet_sets) {
        auto& list = out[name];
        for (const auto& t : tris) {
            auto key = t;
            std::sort(key.begin(), key.end());
            const auto& f = lookup.at(key);
            list.push_back({f.nodes, f.normal, f.area});
        }
    }
    return out;
}

struct ContactEval {
    contact::ContactNodeState state;
    Vec3 anchor_world = Vec3::Zero();
};

}  // namespace

MechanicalModel::MechanicalModel(const mesh::Mesh& m, const material::MaterialCard& c) : mesh(m), card(c) {
    geometry.reserve(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        geometry.push_back(mesh::element_geometry(mesh, e));
    }
    std::vector<std::vector<std::size_t>> rows(3 * mesh.num_nodes());
    for (const auto& el : mesh.elements) {
        for (auto a : el) {
            for (auto b : el) {
                for (std::size_t i = 0; i < 3; ++i) {
                    for (std::size_t j = 0; j < 3; ++j) {
                        rows[3 * a + i].push_back(3 * b + j);
                    }
                }
            }
        }
    }
    pattern = linalg::CsrMatrix::from_pattern(3 * mesh.num_nodes(), std::move(rows));
}

void MechanicalModel::set_contact_candidates(const std::vector<std::string>& sets) {
    std::set<std::size_t> nodes;
    for (const auto& s : sets) {
        for (auto n : mesh.set_nodes(s)) {
            nodes.insert(n);
        }
    }
    contact_nodes.assign(nodes.begin(), nodes.end());
}

MechanicalState initial_mechanical_state(const MechanicalModel& model, double initial_temperature) {
    MechanicalState s;
    s.displacement.assign(model.mesh.num_nodes(), Vec3::Zero());
    s.points.assign(model.mesh.num_elements(), material::initial_point_state(model.card, initial_temperature));
    s.contacts.assign(model.contact_nodes.size(), contact::ContactNodeState{});
    return s;
}

Tensor3 element_strain(const mesh::Mesh& mesh, const mesh::ElementGeometry& geo, std::size_t element,
                       const std::vector<Vec3>& displacement) {
    Tensor3 grad = Tensor3::Zero();
    const auto& el = mesh.elements[element];
    for (int a = 0; a < 4; ++a) {
        grad += displacement[el[a]] * geo.gradients[a].transpose();
    }
    return 0.5 * (grad + grad.transpose());
}

double von_mises(const Tensor3& stress) {
    const Tensor3 s = material::deviatoric_part(stress);
    return std::sqrt(1.5 * (s.array() * s.array()).sum());
}

std::vector<ElementStepData> element_step_data(const MechanicalModel& model, const MechanicalState& state,
                                               const StepLoads& loads) {
    const auto& mesh = model.mesh;
    std::vector<ElementStepData> out(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements[e];
        double t_new = 0.0;
        for (auto n : el) {
            t_new += loads.temperature_new[n];
        }
        t_new *= 0.25;
        auto& d = out[e];
        const PointState& committed = state.points[e];
        // The point's own last temperature is the start of the step.
        d.dxi = material::reduced_time_increment(committed.last_temperature, t_new, loads.dt, model.card.shift);
        d.trial = committed;
        material::update_fictive_temperature(d.trial, t_new, d.dxi, model.card);
        const double e_th = material::thermal_strain(t_new, d.trial.fictive_temperature,
                                                     d.trial.initial_temperature, model.card);
        d.thermal_strain_increment = e_th - committed.thermal_strain;
        d.response = material::incremental_response(committed, d.dxi, model.card);
        d.predictor_stress = d.response.deviatoric_history +
                             (d.response.spherical_history - 3.0 * d.response.bulk_modulus * d.thermal_strain_increment) *
                                 Tensor3::Identity();
    }
    return out;
}

namespace {

void add_external_forces(const MechanicalModel& model, const StepLoads& loads, double time,
                         const std::map<std::string, std::vector<OrientedFacet>>& facets, std::vector<double>& f) {
    const auto& mesh = model.mesh;
    if (model.body_force.squaredNorm() > 0.0) {
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            for (auto n : mesh.elements[e]) {
                for (int i = 0; i < 3; ++i) {
                    f[3 * n + i] += model.body_force[i] * model.geometry[e].volume / 4.0;
                }
            }
        }
    }
    for (const auto& p : loads.pressures) {
        auto it = facets.find(p.facet_set);
        if (it == facets.end()) {
            throw ValidationError("pressure load: mesh has no facet set '" + p.facet_set + "'");
        }
        const double value = p.pressure.at(time);
        for (const auto& tri : it->second) {
            const Vec3 nodal = -value * tri.area / 3.0 * tri.normal;
            for (auto n : tri.nodes) {
                for (int i = 0; i < 3; ++i) {
                    f[3 * n + i] += nodal[i];
                }
            }
        }
    }
}

}  // namespace

void assemble_mechanical(const MechanicalModel& model, const std::vector<ElementStepData>& data,
                         const StepLoads& loads, double time, linalg::CsrMatrix& matrix, std::vector<double>& rhs) {
    const auto& mesh = model.mesh;
    matrix = model.pattern;
    matrix.set_zero();
    rhs.assign(3 * mesh.num_nodes(), 0.0);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements[e];
        const auto& g = model.geometry[e];
        const double bulk = data[e].response.bulk_modulus;
        const double shear = data[e].response.shear_modulus;
        const double lame = bulk - 2.0 * shear / 3.0;
        for (int a = 0; a < 4; ++a) {
            const Vec3 fa = g.volume * (data[e].predictor_stress * g.gradients[a]);
            for (int i = 0; i < 3; ++i) {
                rhs[3 * el[a] + i] -= fa[i];
            }
            for (int b = 0; b < 4; ++b) {
                const Vec3& ga = g.gradients[a];
                const Vec3& gb = g.gradients[b];
                const double gab = ga.dot(gb);
                for (int i = 0; i < 3; ++i) {
                    for (int j = 0; j < 3; ++j) {
                        double k = lame * ga[i] * gb[j] + shear * ga[j] * gb[i];
                        if (i == j) {
                            k += shear * gab;
                        }
                        matrix.add(3 * el[a] + i, 3 * el[b] + j, g.volume * k);
                    }
                }
            }
        }
    }
    add_external_forces(model, loads, time, orient_facet_sets(mesh), rhs);
}

StepResult picard_step(const MechanicalModel& model, const MechanicalState& previous, const StepLoads& loads,
                       const PicardOptions& options) {
    const auto& mesh = model.mesh;
    const std::size_t n_nodes = mesh.num_nodes();
    const std::size_t n_dof = 3 * n_nodes;
    if (loads.temperature_old.size() != n_nodes || loads.temperature_new.size() != n_nodes) {
        throw DimensionMismatchError("picard_step: temperature fields do not match the mesh");
    }
    if (!(loads.dt > 0.0)) {
        throw ValidationError("picard_step: dt must be > 0");
    }
    const double t_old = previous.time;
    const double t_new = previous.time + loads.dt;

    const auto data = element_step_data(model, previous, loads);
    linalg::CsrMatrix base_matrix;
    std::vector<double> base_rhs;
    assemble_mechanical(model, data, loads, t_new, base_matrix, base_rhs);

    // Constraints on the displacement increment.
    std::vector<char> constrained(n_dof, 0);
    std::vector<double> constrained_values(n_dof, 0.0);
    for (const auto& c : loads.constraints) {
        for (auto node : mesh.set_nodes(c.set)) {
            for (int i = 0; i < 3; ++i) {
                if (!c.components[i]) {
                    continue;
                }
                const std::size_t dof = 3 * node + i;
                constrained[dof] = 1;
                constrained_values[dof] =
                    c.prescribed[i] ? c.prescribed[i]->at(t_new) - previous.displacement[node][i] : 0.0;
            }
        }
    }
    const bool any_constrained = std::any_of(constrained.begin(), constrained.end(), [](char c) { return c != 0; });

    contact::ContactParams params = model.contact_params;
    params.friction = params.friction && loads.friction;
    const bool has_contact = !model.contact_nodes.empty() && !model.mold.empty();

    std::vector<Vec3> start_anchor(model.contact_nodes.size());
    if (has_contact) {
        const Vec3 offset_old = model.mold.offset(t_old);
        for (std::size_t k = 0; k < model.contact_nodes.size(); ++k) {
            const auto node = model.contact_nodes[k];
            const auto& committed = previous.contacts[k];
            start_anchor[k] = committed.anchored ? committed.anchor
                                                 : Vec3(mesh.nodes[node] + previous.displacement[node] - offset_old);
        }
    }

    auto evaluate_contacts = [&](const std::vector<double>& du, const std::vector<contact::Status>& prior) {
        std::vector<ContactEval> out(model.contact_nodes.size());
        if (!has_contact) {
            return out;
        }
        const Vec3 offset_new = model.mold.offset(t_new);
        for (std::size_t k = 0; k < model.contact_nodes.size(); ++k) {
            const auto node = model.contact_nodes[k];
            const Vec3 x = mesh.nodes[node] + previous.displacement[node] + Vec3(du[3 * node], du[3 * node + 1], du[3 * node + 2]);
            const auto g = model.mold.gap(x, t_new);
            auto& s = out[k].state;
            s.gap = g.gap;
            s.normal = g.normal;
            s.tangent1 = g.tangent1;
            s.tangent2 = g.tangent2;
            s.anchor = start_anchor[k];
            s.anchored = true;
            out[k].anchor_world = start_anchor[k] + offset_new;
            const Vec3 rel = x - out[k].anchor_world;
            s.tangential_slip = rel - rel.dot(g.normal) * g.normal;
            s.status = prior[k];
            contact::contact_force(s, params);
        }
        return out;
    };

    std::vector<contact::Status> prior(model.contact_nodes.size());
    for (std::size_t k = 0; k < prior.size(); ++k) {
        prior[k] = previous.contacts[k].status;
    }

    std::vector<double> du(n_dof, 0.0);
    for (std::size_t i = 0; i < n_dof; ++i) {
        if (constrained[i]) {
            du[i] = constrained_values[i];
        }
    }
    auto lin = evaluate_contacts(du, prior);

    StepResult result;
    linalg::CgOptions cg;
    cg.tolerance = options.linear_tolerance_factor * options.displacement_tolerance;
    cg.max_iterations = options.max_cg_iterations;

    bool converged = false;
    std::vector<ContactEval> final_eval;
    std::size_t flipping_sweeps = 0;
    for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        linalg::CsrMatrix a = base_matrix;
        std::vector<double> rhs = base_rhs;
        bool any_closed = false;
        for (std::size_t k = 0; k < lin.size(); ++k) {
            const auto& s = lin[k].state;
            if (s.status == contact::Status::open) {
                continue;
            }
            any_closed = true;
            const auto node = model.contact_nodes[k];
            const Vec3& nrm = s.normal;
            const Vec3 du_k(du[3 * node], du[3 * node + 1], du[3 * node + 2]);
            // Normal penalty linearized about the current iterate: g(du) = g_k - n.(du - du_k).
            const Vec3 fn_rhs = params.normal_penalty * (s.gap + nrm.dot(du_k)) * nrm;
            Eigen::Matrix3d k_local = params.normal_penalty * nrm * nrm.transpose();
            Vec3 f_local = fn_rhs;
            // Stick: tangential penalty spring to the anchor. Slip: secant spring
            // frozen from the last sweep, so it carries the capped force at the
            // fixed point while keeping the tangent positive definite.
            double k_t = params.tangential_penalty;
            if (s.status == contact::Status::slip) {
                const double slip = s.tangential_slip.norm();
                k_t = slip > 0.0 ? s.tangential_force.norm() / slip : 0.0;
            }
            if (k_t > 0.0) {
                const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - nrm * nrm.transpose();
                k_local += k_t * proj;
                const Vec3 base = mesh.nodes[node] + previous.displacement[node] - lin[k].anchor_world;
                f_local += -k_t * (proj * base);
            }
            for (int i = 0; i < 3; ++i) {
                rhs[3 * node + i] += f_local[i];
                for (int j = 0; j < 3; ++j) {
                    a.add(3 * node + i, 3 * node + j, k_local(i, j));
                }
            }
        }
        if (!any_constrained && !any_closed) {
            throw SingularConstraintError(
                "no displacement constraints and no closed contact: rigid-body modes are unrestrained");
        }
        a.apply_dirichlet(constrained, constrained_values, rhs);
        auto precond = linalg::make_preconditioner(options.preconditioner, a);
        if (const auto* ilu = dynamic_cast<const linalg::Ilu0Preconditioner*>(precond.get());
            ilu != nullptr && !(ilu->min_pivot() > 0.0)) {
            // Indefinite incomplete factors stall CG; Jacobi stays SPD.
            precond = linalg::make_preconditioner(linalg::PreconditionerKind::jacobi, a);
            ++result.preconditioner_fallbacks;
        }
        std::vector<double> next = du;
        const auto report = linalg::cg_solve(a, rhs, next, cg, precond.get());
        result.cg_iterations += report.iterations;
        for (std::size_t i = 0; i < n_dof; ++i) {
            if (constrained[i]) {
                next[i] = constrained_values[i];
            }
        }

        double change2 = 0.0, total2 = 0.0;
        for (std::size_t i = 0; i < n_dof; ++i) {
            const double d = next[i] - du[i];
            change2 += d * d;
            const double u = previous.displacement[i / 3][i % 3] + next[i];
            total2 += u * u;
        }
        const double change = std::sqrt(change2) / std::max(std::sqrt(total2), kTiny);
        result.residual_history.push_back(change);
        if (flipping_sweeps >= kRelaxAfterSweeps) {
            for (std::size_t i = 0; i < n_dof; ++i) {
                next[i] = du[i] + kRelaxation * (next[i] - du[i]);
            }
        }
        du = std::move(next);

        std::vector<contact::Status> used(lin.size());
        for (std::size_t k = 0; k < lin.size(); ++k) {
            used[k] = lin[k].state.status;
        }
        auto eval = evaluate_contacts(du, used);
        // A node that was closed and now separates by less than the Picard
        // resolution is touching with zero force; opening it would only start
        // a two-state cycle between the linearizations.
        double u_max = 0.0;
        for (std::size_t i = 0; i < n_dof; ++i) {
            u_max = std::max(u_max, std::abs(previous.displacement[i / 3][i % 3] + du[i]));
        }
        const double open_tolerance = options.displacement_tolerance * u_max;
        for (std::size_t k = 0; k < eval.size(); ++k) {
            auto& s = eval[k].state;
            if (used[k] != contact::Status::open && s.status == contact::Status::open && s.gap > -open_tolerance) {
                s.status = contact::Status::slip;
                s.normal_force = 0.0;
                s.tangential_force = Vec3::Zero();
            }
        }
        bool same = true;
        for (std::size_t k = 0; k < eval.size(); ++k) {
            if (eval[k].state.status != used[k]) {
                same = false;
                break;
            }
        }
        flipping_sweeps += same ? 0 : 1;
        result.picard_iterations = sweep;
        if (sweep >= 2 && same && change <= options.displacement_tolerance) {
            converged = true;
            final_eval = std::move(eval);
            break;
        }
        lin = std::move(eval);
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "Picard iteration did not converge in " << options.max_sweeps << " sweeps (last relative change "
            << (result.residual_history.empty() ? 0.0 : result.residual_history.back()) << ")";
        throw NonConvergenceError(msg.str());
    }

    // Commit.
    MechanicalState& next = result.state;
    next.time = t_new;
    next.displacement = previous.displacement;
    for (std::size_t n = 0; n < n_nodes; ++n) {
        next.displacement[n] += Vec3(du[3 * n], du[3 * n + 1], du[3 * n + 2]);
    }
    next.points.resize(mesh.num_elements());
    std::vector<Vec3> du_nodes(n_nodes);
    for (std::size_t n = 0; n < n_nodes; ++n) {
        du_nodes[n] = Vec3(du[3 * n], du[3 * n + 1], du[3 * n + 2]);
    }
    std::vector<double> f_int(n_dof, 0.0), f_int_abs(n_dof, 0.0);
    result.elements.resize(mesh.num_elements());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        PointState point = data[e].trial;
        const Tensor3 d_strain = element_strain(mesh, model.geometry[e], e, du_nodes);
        const auto stress = material::stress_update(point, material::deviatoric_part(d_strain),
                                                    material::mean_part(d_strain), data[e].thermal_strain_increment,
                                                    data[e].dxi, model.card);
        auto& field = result.elements[e];
        field.deviatoric_stress = stress.deviatoric;
        field.spherical_stress = stress.spherical;
        field.stress = stress.total();
        field.strain = point.strain;
        field.temperature = point.last_temperature;
        field.fictive_temperature = point.fictive_temperature;
        next.points[e] = std::move(point);
        const auto& g = model.geometry[e];
        for (int a = 0; a < 4; ++a) {
            const Vec3 fa = g.volume * (field.stress * g.gradients[a]);
            for (int i = 0; i < 3; ++i) {
                f_int[3 * mesh.elements[e][a] + i] += fa[i];
                f_int_abs[3 * mesh.elements[e][a] + i] += std::abs(fa[i]);
            }
        }
    }

    next.contacts.resize(model.contact_nodes.size());
    std::vector<double> f_applied(n_dof, 0.0);
    add_external_forces(model, loads, t_new, orient_facet_sets(mesh), f_applied);
    for (std::size_t k = 0; k < final_eval.size(); ++k) {
        auto s = final_eval[k].state;
        if (s.status == contact::Status::open) {
            s.anchored = false;
            s.tangential_slip = Vec3::Zero();
            s.anchor = Vec3::Zero();
        } else {
            contact::relocate_anchor(s, params);
            const Vec3 f = s.force_on_part();
            const auto node = model.contact_nodes[k];
            for (int i = 0; i < 3; ++i) {
                f_applied[3 * node + i] += f[i];
            }
        }
        switch (s.status) {
            case contact::Status::open:
                ++result.contact.open;
                break;
            case contact::Status::stick:
                ++result.contact.stick;
                break;
            case contact::Status::slip:
                ++result.contact.slip;
                break;
        }
        result.contact.max_penetration = std::max(result.contact.max_penetration, s.gap);
        next.contacts[k] = s;
    }

    double r2 = 0.0, f2 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n_dof; ++i) {
        if (constrained[i]) {
            continue;
        }
        const double r = f_int[i] - f_applied[i];
        r2 += r * r;
        f2 += f_applied[i] * f_applied[i];
        s2 += f_int_abs[i] * f_int_abs[i];
    }
    result.equilibrium_residual = std::sqrt(r2) / std::max({std::sqrt(f2), std::sqrt(s2), kTiny});
    return result;
}

std::vector<ElementField> element_fields(const MechanicalModel& model, const MechanicalState& state,
                                         const std::vector<double>& nodal_temperature) {
    std::vector<ElementField> out(model.mesh.num_elements());
    for (std::size_t e = 0; e < out.size(); ++e) {
        const auto stress = material::current_stress(state.points[e], model.card);
        auto& f = out[e];
        f.deviatoric_stress = stress.deviatoric;
        f.spherical_stress = stress.spherical;
        f.stress = stress.total();
        f.strain = element_strain(model.mesh, model.geometry[e], e, state.displacement);
        double t = 0.0;
        for (auto n : model.mesh.elements[e]) {
            t += nodal_temperature.empty() ? state.points[e].last_temperature : nodal_temperature[n];
        }
        f.temperature = t / 4.0;
        f.fictive_temperature = state.points[e].fictive_temperature;
    }
    return out;
}

RecoveredFields recover_fields(const MechanicalModel& model, const StepResult& result, double amplification) {
    RecoveredFields out;
    const auto& mesh = model.mesh;
    out.coordinates.resize(mesh.num_nodes());
    for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
        out.coordinates[n] = mesh.nodes[n] + amplification * result.state.displacement[n];
    }
    for (const auto& e : result.elements) {
        out.stress_xx.push_back(e.stress(0, 0));
        out.strain_xx.push_back(e.strain(0, 0));
    }
    return out;
}

ShrinkageReport shrinkage_report(const mesh::Mesh& mesh, const std::vector<Vec3>& displacement) {
    ShrinkageReport report;
    if (mesh.nodes.empty()) {
        return report;
    }
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    Vec3 dlo = lo, dhi = hi;
    Vec3 mean = Vec3::Zero();
    for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
        const Vec3 x = mesh.nodes[n];
        const Vec3 y = x + displacement[n];
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
        dlo = dlo.cwiseMin(y);
        dhi = dhi.cwiseMax(y);
        mean += displacement[n];
    }
    mean /= static_cast<double>(mesh.num_nodes());
    for (int i = 0; i < 3; ++i) {
        const double extent = hi[i] - lo[i];
        report.axis_strain[i] = extent > 0.0 ? ((dhi[i] - dlo[i]) - extent) / extent : 0.0;
    }
    for (const auto& [name, ids] : mesh.node_sets) {
        if (name.rfind("feature", 0) != 0 || ids.empty()) {
            continue;
        }
        Vec3 m = Vec3::Zero();
        for (auto n : ids) {
            m += displacement[n];
        }
        m /= static_cast<double>(ids.size());
        report.feature_offsets.emplace_back(name, m - mean);
    }
    return report;
}

}  // namespace hotemboss::mechanics
