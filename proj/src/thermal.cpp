#include "hotemboss/thermal.hpp"

#include <cmath>

#include "hotemboss/errors.hpp"

namespace hotemboss::thermal {

namespace {

linalg::CsrMatrix node_graph(const mesh::Mesh& mesh) {
    std::vector<std::vector<std::size_t>> pattern(mesh.num_nodes());
    for (const auto& e : mesh.elements) {
        for (auto a : e) {
            for (auto b : e) {
                pattern[a].push_back(b);
            }
        }
    }
    return linalg::CsrMatrix::from_pattern(mesh.num_nodes(), std::move(pattern));
}

}  // namespace

void ThermalBc::validate(const mesh::Mesh& mesh) const {
    for (const auto& f : convective) {
        if (!mesh.facet_sets.count(f.facet_set)) {
            throw ValidationError("thermal BC: mesh has no facet set '" + f.facet_set + "'");
        }
        if (!(f.film_coefficient >= 0.0)) {
            throw ValidationError("thermal BC: film coefficient on '" + f.facet_set + "' must be >= 0");
        }
    }
    for (const auto& p : prescribed) {
        if (!mesh.has_set(p.set)) {
            throw ValidationError("thermal BC: mesh has no set '" + p.set + "'");
        }
    }
}

std::vector<double> ThermalOperators::boundary_load(double time) const {
    std::vector<double> b(capacity.size(), 0.0);
    for (std::size_t f = 0; f < face_shape.size(); ++f) {
        const double scale = film_coefficients[f] * mold_temperatures[f].at(time);
        for (std::size_t i = 0; i < b.size(); ++i) {
            b[i] += scale * face_shape[f][i];
        }
    }
    return b;
}

ThermalOperators assemble_thermal(const mesh::Mesh& mesh, const material::MaterialCard& card, const ThermalBc& bc) {
    bc.validate(mesh);
    const std::size_t n = mesh.num_nodes();
    ThermalOperators ops;
    ops.capacity.assign(n, 0.0);
    ops.conductivity = node_graph(mesh);
    ops.boundary = ops.conductivity;
    ops.boundary.set_zero();

    const double rho_c = card.density * card.heat_capacity;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto geo = mesh::element_geometry(mesh, e);
        const auto& el = mesh.elements[e];
        for (int a = 0; a < 4; ++a) {
            ops.capacity[el[a]] += rho_c * geo.volume / 4.0;
            for (int b = 0; b < 4; ++b) {
                ops.conductivity.add(el[a], el[b], card.conductivity * geo.volume * geo.gradients[a].dot(geo.gradients[b]));
            }
        }
    }

    for (const auto& face : bc.convective) {
        std::vector<double> shape(n, 0.0);
        for (const auto& tri : mesh.facet_sets.at(face.facet_set)) {
            const double area =
                mesh::triangle_area_normal(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]).first;
            for (int a = 0; a < 3; ++a) {
                shape[tri[a]] += area / 3.0;
                for (int b = 0; b < 3; ++b) {
                    // Exact integral of N_a N_b over a linear triangle.
                    ops.boundary.add(tri[a], tri[b], face.film_coefficient * area * (a == b ? 2.0 : 1.0) / 12.0);
                }
            }
        }
        ops.face_shape.push_back(std::move(shape));
        ops.film_coefficients.push_back(face.film_coefficient);
        ops.mold_temperatures.push_back(face.mold_temperature);
    }

    ops.prescribed_mask.assign(n, 0);
    ops.prescribed_values.assign(n, 0.0);
    for (const auto& p : bc.prescribed) {
        for (auto node : mesh.set_nodes(p.set)) {
            ops.prescribed_mask[node] = 1;
            ops.prescribed_values[node] = p.temperature;
        }
    }
    return ops;
}

ThermalStepper::ThermalStepper(std::shared_ptr<const ThermalOperators> operators, ThermalSolverOptions options)
    : ops_(std::move(operators)), options_(options) {}

void ThermalStepper::prepare(double dt) {
    if (dt == cached_dt_ && preconditioner_) {
        return;
    }
    system_ = ops_->conductivity;
    auto values = system_.values();
    const auto boundary = ops_->boundary.values();
    for (std::size_t k = 0; k < values.size(); ++k) {
        values[k] += boundary[k];
    }
    for (std::size_t i = 0; i < ops_->capacity.size(); ++i) {
        system_.add(i, i, ops_->capacity[i] / dt);
    }
    std::vector<double> dummy(ops_->capacity.size(), 0.0);
    system_.apply_dirichlet(ops_->prescribed_mask, ops_->prescribed_values, dummy);
    preconditioner_ = linalg::make_preconditioner(options_.preconditioner, system_);
    cached_dt_ = dt;
}

TemperatureField ThermalStepper::step(const TemperatureField& field, double dt, ThermalStepInfo* info) {
    if (!(dt > 0.0)) {
        throw ValidationError("thermal_step: dt must be > 0");
    }
    const auto& ops = *ops_;
    const std::size_t n = ops.capacity.size();
    if (field.values.size() != n) {
        throw DimensionMismatchError("thermal_step: temperature field size does not match the mesh");
    }
    prepare(dt);

    const double t_new = field.time + dt;
    const std::vector<double> load = ops.boundary_load(t_new);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        rhs[i] = ops.capacity[i] / dt * field.values[i] + load[i];
    }
    // Same elimination the system matrix received: move known columns to the rhs.
    {
        const auto row_ptr = ops.conductivity.row_ptr();
        const auto col = ops.conductivity.col_idx();
        const auto kc = ops.conductivity.values();
        const auto hb = ops.boundary.values();
        for (std::size_t i = 0; i < n; ++i) {
            if (ops.prescribed_mask[i]) {
                continue;
            }
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                const std::size_t j = col[k];
                if (ops.prescribed_mask[j]) {
                    rhs[i] -= (kc[k] + hb[k]) * ops.prescribed_values[j];
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (ops.prescribed_mask[i]) {
                rhs[i] = ops.prescribed_values[i];
            }
        }
    }

    TemperatureField out;
    out.time = t_new;
    out.values = field.values;
    for (std::size_t i = 0; i < n; ++i) {
        if (ops.prescribed_mask[i]) {
            out.values[i] = ops.prescribed_values[i];
        }
    }
    linalg::CgOptions cg;
    cg.tolerance = options_.tolerance;
    cg.max_iterations = options_.max_iterations;
    const auto report = linalg::cg_solve(system_, rhs, out.values, cg, preconditioner_.get());

    if (info != nullptr) {
        info->solve = report;
        const auto kt = ops.conductivity.matvec(out.values);
        const auto ht = ops.boundary.matvec(out.values);
        info->internal_energy_change = 0.0;
        info->convective_heat_in = 0.0;
        info->prescribed_heat_in = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double stored = ops.capacity[i] * (out.values[i] - field.values[i]);
            info->internal_energy_change += stored;
            info->convective_heat_in += dt * (load[i] - ht[i]);
            if (ops.prescribed_mask[i]) {
                info->prescribed_heat_in += stored + dt * (kt[i] + ht[i] - load[i]);
            }
        }
    }
    return out;
}

TemperatureField thermal_step(const TemperatureField& field, double dt, const ThermalOperators& operators,
                              const ThermalSolverOptions& options, ThermalStepInfo* info) {
    ThermalStepper stepper(std::shared_ptr<const ThermalOperators>(&operators, [](const ThermalOperators*) {}),
                           options);
    return stepper.step(field, dt, info);
}

double internal_energy(const ThermalOperators& operators, const std::vector<double>& temperatures) {
    double e = 0.0;
    for (std::size_t i = 0; i < temperatures.size(); ++i) {
        e += operators.capacity[i] * temperatures[i];
    }
    return e;
}

double HeatHistory::total_boundary_heat_in() const {
    double s = 0.0;
    for (const auto& r : steps) {
        s += r.boundary_heat_in;
    }
    return s;
}

double HeatHistory::total_energy_change() const {
    double s = 0.0;
    for (const auto& r : steps) {
        s += r.internal_energy_change;
    }
    return s;
}

double heat_balance(const HeatHistory& history) {
    return std::abs(history.total_energy_change() - history.total_boundary_heat_in());
}

}  // namespace hotemboss::thermal
