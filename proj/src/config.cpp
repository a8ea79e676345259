#include "hotemboss/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hotemboss/errors.hpp"
#include "hotemboss/json_reader.hpp"
#include "hotemboss/material.hpp"

namespace hotemboss::config {

namespace {

namespace fs = std::filesystem;

Eigen::Vector3d vec3(JsonReader& r, const std::string& key) {
    const auto v = r.get<std::vector<double>>(key);
    if (v.size() != 3) {
        throw ConfigError(r.context() + ": '" + key + "' must have three components");
    }
    return {v[0], v[1], v[2]};
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) {
        return p;
    }
    return base / p;
}

// Either "<stem>_K"/"<stem>_C" (constant) or "<stem>_schedule" with
// times_s and temperatures_K / temperatures_C.
Schedule temperature_schedule(JsonReader& r, const std::string& stem) {
    if (auto raw = r.optional_raw(stem + "_schedule")) {
        JsonReader s(*raw, r.context() + "." + stem + "_schedule");
        const auto times = s.get<std::vector<double>>("times_s");
        const auto temps = s.temperatures("temperatures");
        s.finish();
        if (times.size() != temps.size()) {
            throw ConfigError(s.context() + ": times_s and temperatures differ in length");
        }
        std::vector<std::pair<double, double>> knots;
        for (std::size_t i = 0; i < times.size(); ++i) {
            knots.emplace_back(times[i], temps[i]);
        }
        try {
            return Schedule(std::move(knots));
        } catch (const ValidationError& e) {
            throw ConfigError(s.context() + ": " + e.what());
        }
    }
    return Schedule(r.temperature(stem));
}

// Either a constant "<key>" or "<key_stem>_schedule": {times_s, values_key}.
Schedule value_schedule(JsonReader& r, const std::string& key, const std::string& schedule_key,
                        const std::string& values_key) {
    if (auto raw = r.optional_raw(schedule_key)) {
        JsonReader s(*raw, r.context() + "." + schedule_key);
        const auto times = s.get<std::vector<double>>("times_s");
        const auto values = s.get<std::vector<double>>(values_key);
        s.finish();
        if (times.size() != values.size()) {
            throw ConfigError(s.context() + ": times_s and " + values_key + " differ in length");
        }
        std::vector<std::pair<double, double>> knots;
        for (std::size_t i = 0; i < times.size(); ++i) {
            knots.emplace_back(times[i], values[i]);
        }
        try {
            return Schedule(std::move(knots));
        } catch (const ValidationError& e) {
            throw ConfigError(s.context() + ": " + e.what());
        }
    }
    return Schedule(r.get<double>(key));
}

std::vector<mechanics::Constraint> read_constraints(const nlohmann::json& list, const std::string& context) {
    std::vector<mechanics::Constraint> out;
    if (!list.is_array()) {
        throw ConfigError(context + ": expected an array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
        JsonReader c(list[i], context + "[" + std::to_string(i) + "]");
        mechanics::Constraint con;
        con.set = c.get<std::string>("set");
        for (const auto& axis : c.get<std::vector<std::string>>("fix")) {
            if (axis == "x") {
                con.components[0] = true;
            } else if (axis == "y") {
                con.components[1] = true;
            } else if (axis == "z") {
                con.components[2] = true;
            } else {
                throw ConfigError(c.context() + ": 'fix' entries must be x, y or z");
            }
        }
        c.finish();
        out.push_back(std::move(con));
    }
    return out;
}

std::vector<mechanics::PressureLoad> read_pressures(const nlohmann::json& list, const std::string& context) {
    std::vector<mechanics::PressureLoad> out;
    if (!list.is_array()) {
        throw ConfigError(context + ": expected an array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
        JsonReader p(list[i], context + "[" + std::to_string(i) + "]");
        mechanics::PressureLoad load;
        load.facet_set = p.get<std::string>("facet_set");
        load.pressure = value_schedule(p, "pressure_Pa", "pressure_schedule", "pressures_Pa");
        p.finish();
        out.push_back(std::move(load));
    }
    return out;
}

void read_phase(JsonReader& r, PhaseConfig& phase) {
    phase.dt = r.get<double>("dt_s");
    phase.friction = r.get_or<bool>("friction", true);
    if (auto c = r.optional_raw("constraints")) {
        phase.constraints = read_constraints(*c, r.context() + ".constraints");
    }
    if (auto p = r.optional_raw("pressures")) {
        phase.pressures = read_pressures(*p, r.context() + ".pressures");
    }
}

contact::Primitive read_primitive(const nlohmann::json& j, const std::string& context) {
    JsonReader r(j, context);
    const auto type = r.get<std::string>("type");
    if (type == "half_space") {
        contact::HalfSpace h;
        h.point = vec3(r, "point_m");
        h.normal = vec3(r, "normal");
        r.finish();
        return h;
    }
    if (type == "box") {
        contact::Box b;
        b.lo = vec3(r, "lo_m");
        b.hi = vec3(r, "hi_m");
        b.solid = r.get_or<bool>("solid", true);
        r.finish();
        return b;
    }
    throw ConfigError(context + ": unknown primitive type '" + type + "' (expected half_space or box)");
}

MeshSource read_mesh_source(JsonReader& r, const fs::path& base) {
    MeshSource src;
    const bool file = r.has("mesh_file");
    const bool gen = r.has("mesh_generator");
    if (file == gen) {
        throw ConfigError("config: give exactly one of mesh_file or mesh_generator");
    }
    if (file) {
        src.path = resolve(r.get<std::string>("mesh_file"), base);
        return src;
    }
    JsonReader g(r.raw("mesh_generator"), "config.mesh_generator");
    src.generator = g.get<std::string>("kind");
    if (src.generator == "ribbed_plate") {
        auto& s = src.ribbed;
        s.half_length = g.get_or<double>("half_length_m", s.half_length);
        s.half_width = g.get_or<double>("half_width_m", s.half_width);
        s.base_thickness = g.get_or<double>("base_thickness_m", s.base_thickness);
        s.rib_height = g.get_or<double>("rib_height_m", s.rib_height);
        s.rib_width = g.get_or<double>("rib_width_m", s.rib_width);
        s.rib_pitch = g.get_or<double>("rib_pitch_m", s.rib_pitch);
        s.first_rib_x = g.get_or<double>("first_rib_x_m", s.first_rib_x);
        s.rib_count = g.get_or<std::size_t>("rib_count", s.rib_count);
        s.cell_size = g.get_or<double>("cell_size_m", s.cell_size);
        s.cell_size_y = g.get_or<double>("cell_size_y_m", s.cell_size_y);
    } else if (src.generator == "box") {
        const auto cells = g.get<std::vector<std::size_t>>("cells");
        if (cells.size() != 3) {
            throw ConfigError("config.mesh_generator: 'cells' must have three entries");
        }
        src.box_cells = {cells[0], cells[1], cells[2]};
        src.box_size = vec3(g, "size_m");
    } else {
        throw ConfigError("config.mesh_generator: unknown kind '" + src.generator + "' (expected box or ribbed_plate)");
    }
    g.finish();
    return src;
}

}  // namespace

SimulationConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir) {
    JsonReader r(doc, "config");
    SimulationConfig c;
    c.mesh = read_mesh_source(r, base_dir);
    c.material_path = resolve(r.get<std::string>("material_file"), base_dir);
    c.initial_temperature = r.temperature("initial_temperature");

    if (auto t = r.optional_raw("thermal")) {
        JsonReader th(*t, "config.thermal");
        if (auto list = th.optional_raw("convective")) {
            for (std::size_t i = 0; i < list->size(); ++i) {
                JsonReader f((*list)[i], "config.thermal.convective[" + std::to_string(i) + "]");
                thermal::ConvectiveFace face;
                face.facet_set = f.get<std::string>("facet_set");
                face.film_coefficient = f.get<double>("film_coefficient_W_m2K");
                face.mold_temperature = temperature_schedule(f, "mold_temperature");
                f.finish();
                c.thermal.convective.push_back(std::move(face));
            }
        }
        if (auto list = th.optional_raw("prescribed")) {
            for (std::size_t i = 0; i < list->size(); ++i) {
                JsonReader p((*list)[i], "config.thermal.prescribed[" + std::to_string(i) + "]");
                thermal::PrescribedTemperature pt;
                pt.set = p.get<std::string>("set");
                pt.temperature = p.temperature("temperature");
                p.finish();
                c.thermal.prescribed.push_back(std::move(pt));
            }
        }
        th.finish();
    }

    if (auto m = r.optional_raw("mechanics")) {
        JsonReader me(*m, "config.mechanics");
        if (me.has("body_force_N_m3")) {
            c.body_force = vec3(me, "body_force_N_m3");
        }
        me.finish();
    }

    if (auto ct = r.optional_raw("contact")) {
        JsonReader k(*ct, "config.contact");
        c.contact_sets = k.get<std::vector<std::string>>("candidate_sets");
        c.contact.normal_penalty = k.get<double>("normal_penalty_N_m");
        c.contact.tangential_penalty = k.get_or<double>("tangential_penalty_N_m", c.contact.normal_penalty);
        c.contact.static_friction = k.get_or<double>("static_friction", 0.0);
        c.contact.dynamic_friction = k.get_or<double>("dynamic_friction", c.contact.static_friction);
        if (k.has("opening_direction")) {
            c.opening_direction = vec3(k, "opening_direction");
        }
        const auto& prims = k.raw("primitives");
        if (!prims.is_array()) {
            throw ConfigError("config.contact.primitives: expected an array");
        }
        for (std::size_t i = 0; i < prims.size(); ++i) {
            c.mold.push_back(read_primitive(prims[i], "config.contact.primitives[" + std::to_string(i) + "]"));
        }
        k.finish();
    }

    JsonReader phases(r.raw("phases"), "config.phases");
    {
        JsonReader cool(phases.raw("cooling"), "config.phases.cooling");
        c.cooling.duration = cool.get<double>("duration_s");
        read_phase(cool, c.cooling);
        c.cooling.demolding_temperature = cool.optional_temperature("demolding_temperature");
        cool.finish();
    }
    if (auto d = phases.optional_raw("demolding")) {
        JsonReader dem(*d, "config.phases.demolding");
        c.demolding.enabled = true;
        read_phase(dem, c.demolding);
        c.demolding.opening = value_schedule(dem, "opening_m", "opening_schedule", "displacements_m");
        c.demolding.duration = dem.get_or<double>("duration_s", c.demolding.opening.end_time());
        dem.finish();
    }
    phases.finish();

    if (auto s = r.optional_raw("solver")) {
        JsonReader sv(*s, "config.solver");
        auto& p = c.solver.picard;
        p.displacement_tolerance = sv.get_or<double>("picard_tolerance", p.displacement_tolerance);
        p.max_sweeps = sv.get_or<std::size_t>("max_picard_sweeps", p.max_sweeps);
        p.linear_tolerance_factor = sv.get_or<double>("linear_tolerance_factor", p.linear_tolerance_factor);
        p.max_cg_iterations = sv.get_or<std::size_t>("max_cg_iterations", p.max_cg_iterations);
        if (sv.has("preconditioner")) {
            try {
                p.preconditioner = linalg::preconditioner_from_string(sv.get<std::string>("preconditioner"));
            } catch (const Error& e) {
                throw ConfigError(std::string("config.solver: ") + e.what());
            }
            c.solver.thermal.preconditioner = p.preconditioner;
        }
        c.solver.thermal.tolerance = sv.get_or<double>("thermal_tolerance", c.solver.thermal.tolerance);
        c.solver.thermal.max_iterations = p.max_cg_iterations;
        c.solver.min_dt = sv.get_or<double>("min_dt_s", c.solver.min_dt);
        c.solver.threads = sv.get_or<unsigned>("threads", c.solver.threads);
        sv.finish();
    }

    if (auto o = r.optional_raw("output")) {
        JsonReader out(*o, "config.output");
        c.output.directory = resolve(out.get_or<std::string>("directory", c.output.directory.string()), base_dir);
        c.output.vtk = out.get_or<bool>("vtk", c.output.vtk);
        c.output.every = out.get_or<std::size_t>("every", c.output.every);
        c.output.amplification = out.get_or<double>("amplification", c.output.amplification);
        c.output.matrix_market = out.get_or<bool>("matrix_market", c.output.matrix_market);
        out.finish();
    } else {
        c.output.directory = resolve(c.output.directory, base_dir);
    }
    r.finish();
    return c;
}

SimulationConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    auto c = parse_config(doc, path.parent_path());
    c.source = path;
    return c;
}

mesh::Mesh load_config_mesh(const SimulationConfig& config) {
    const auto& src = config.mesh;
    if (src.generator == "ribbed_plate") {
        return mesh::make_ribbed_plate(src.ribbed);
    }
    if (src.generator == "box") {
        return mesh::make_box_mesh(src.box_cells[0], src.box_cells[1], src.box_cells[2], src.box_size.x(),
                                   src.box_size.y(), src.box_size.z());
    }
    return mesh::load_mesh(src.path);
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics) {
        if (d.severity == Severity::error) {
            return true;
        }
    }
    return false;
}

std::string format(const Diagnostic& d) {
    return std::string(d.severity == Severity::error ? "error: " : "warning: ") + d.message;
}

std::vector<Diagnostic> validate_config(const SimulationConfig& c) {
    std::vector<Diagnostic> out;
    auto error = [&](const std::string& m) { out.push_back({Severity::error, m}); };
    auto warning = [&](const std::string& m) { out.push_back({Severity::warning, m}); };

    std::optional<mesh::Mesh> mesh;
    if (c.mesh.generator.empty()) {
        if (c.mesh.path.empty()) {
            error("mesh_file is empty");
        } else if (!fs::exists(c.mesh.path)) {
            error("mesh file not found: " + c.mesh.path.string());
        }
    }
    if (!has_errors(out)) {
        try {
            mesh = load_config_mesh(c);
        } catch (const std::exception& e) {
            error(std::string("mesh: ") + e.what());
        }
    }
    if (c.material_path.empty() || !fs::exists(c.material_path)) {
        error("material file not found: " + c.material_path.string());
    } else {
        try {
            const auto card = material::load_material_card(c.material_path);
            try {
                material::shift_factor(c.initial_temperature, card.shift);
            } catch (const SingularTemperatureError& e) {
                error(std::string("initial temperature: ") + e.what());
            }
        } catch (const std::exception& e) {
            error(std::string("material card: ") + e.what());
        }
    }

    if (!(c.initial_temperature > 0.0)) {
        error("initial temperature must be above absolute zero");
    }
    if (!(c.cooling.dt > 0.0)) {
        error("phases.cooling.dt_s must be > 0");
    }
    if (!(c.cooling.duration >= 0.0)) {
        error("phases.cooling.duration_s must be >= 0");
    }
    if (c.cooling.demolding_temperature && !(*c.cooling.demolding_temperature < c.initial_temperature)) {
        error("demolding temperature must be below the initial temperature");
    }
    if (c.demolding.enabled) {
        if (!(c.demolding.dt > 0.0)) {
            error("phases.demolding.dt_s must be > 0");
        }
        if (!(c.demolding.duration >= 0.0)) {
            error("phases.demolding.duration_s must be >= 0");
        }
        if (c.mold.empty()) {
            warning("demolding phase without mold primitives: the demolding force will be zero");
        }
    }
    if (!(c.solver.min_dt > 0.0)) {
        error("solver.min_dt_s must be > 0");
    }
    if (c.solver.picard.max_sweeps < 2) {
        error("solver.max_picard_sweeps must be >= 2 (a converged step needs a confirmation sweep)");
    }
    if (!(c.solver.picard.displacement_tolerance > 0.0) || !(c.solver.picard.linear_tolerance_factor > 0.0)) {
        error("solver tolerances must be > 0");
    }
    if (c.solver.threads == 0) {
        error("solver.threads must be >= 1");
    }
    if (c.output.every == 0) {
        error("output.every must be >= 1");
    }
    if (!(c.output.amplification >= 0.0)) {
        error("output.amplification must be >= 0");
    }

    // Contact.
    if (!c.mold.empty() || !c.contact_sets.empty()) {
        if (c.contact.dynamic_friction > c.contact.static_friction) {
            error("contact: dynamic friction exceeds static friction; Coulomb friction requires mu_d <= mu_s");
        }
        if (!(c.contact.normal_penalty > 0.0) || !(c.contact.tangential_penalty > 0.0)) {
            error("contact: penalty parameters must be > 0");
        }
        if (c.contact.static_friction < 0.0 || c.contact.dynamic_friction < 0.0) {
            error("contact: friction coefficients must be >= 0");
        }
        if (c.mold.empty()) {
            error("contact: candidate sets given but no mold primitives");
        }
        if (c.contact_sets.empty()) {
            error("contact: mold primitives given but no candidate sets");
        }
        try {
            contact::RigidSurface check(c.mold, c.opening_direction);
        } catch (const std::exception& e) {
            error(std::string("contact: ") + e.what());
        }
        if (!(c.opening_direction.norm() > 0.0)) {
            error("contact: opening direction must be non-zero");
        }
    }

    // Thermal boundary conditions.
    bool any_film = false;
    for (const auto& f : c.thermal.convective) {
        if (f.film_coefficient < 0.0) {
            error("thermal: film coefficient on '" + f.facet_set + "' is negative");
        }
        if (f.film_coefficient > 0.0) {
            any_film = true;
        }
        if (f.mold_temperature.max_value() > c.initial_temperature) {
            warning("thermal: mold temperature on '" + f.facet_set + "' exceeds the initial temperature");
        }
    }
    if (!any_film && c.thermal.prescribed.empty()) {
        warning("thermal: h = 0 on every face and no prescribed temperature; the part cannot cool");
    }

    // Set references.
    if (mesh) {
        auto check_facets = [&](const std::string& name, const std::string& where) {
            if (!mesh->facet_sets.count(name)) {
                error(where + ": mesh has no facet set '" + name + "'");
            }
        };
        auto check_set = [&](const std::string& name, const std::string& where) {
            if (!mesh->has_set(name)) {
                error(where + ": mesh has no set '" + name + "'");
            }
        };
        for (const auto& f : c.thermal.convective) check_facets(f.facet_set, "thermal.convective");
        for (const auto& p : c.thermal.prescribed) check_set(p.set, "thermal.prescribed");
        for (const auto& s : c.contact_sets) check_set(s, "contact.candidate_sets");
        for (const PhaseConfig* phase : {static_cast<const PhaseConfig*>(&c.cooling), static_cast<const PhaseConfig*>(&c.demolding)}) {
            const std::string where = phase == &c.cooling ? "phases.cooling" : "phases.demolding";
            for (const auto& con : phase->constraints) check_set(con.set, where + ".constraints");
            for (const auto& p : phase->pressures) check_facets(p.facet_set, where + ".pressures");
        }
        if (c.cooling.constraints.empty() && c.mold.empty()) {
            error("phases.cooling: no constraints and no mold; rigid-body motion is unrestrained");
        }
    }
    return out;
}

}  // namespace hotemboss::config
