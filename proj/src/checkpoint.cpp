#include "hotemboss/checkpoint.hpp"

#include <fstream>

#include "hotemboss/errors.hpp"

namespace hotemboss {

namespace {

using nlohmann::json;

json vec(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json mat(const Eigen::Matrix3d& m) {
    json out = json::array();
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            out.push_back(m(i, k));
        }
    }
    return out;
}

Eigen::Matrix3d mat(const json& j) {
    if (j.size() != 9) {
        throw ParseError("checkpoint: tensor needs nine entries");
    }
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            m(i, k) = j.at(3 * i + k).get<double>();
        }
    }
    return m;
}

json point_json(const material::PointState& p) {
    json dev = json::array();
    for (const auto& q : p.deviatoric_internal) {
        dev.push_back(mat(q));
    }
    return {{"reduced_time", p.reduced_time},
            {"fictive_temperature", p.fictive_temperature},
            {"thermal_strain", p.thermal_strain},
            {"initial_temperature", p.initial_temperature},
            {"last_temperature", p.last_temperature},
            {"strain", mat(p.strain)},
            {"deviatoric_internal", dev},
            {"volumetric_internal", p.volumetric_internal},
            {"fictive_internal", p.fictive_internal}};
}

material::PointState point_from_json(const json& j) {
    material::PointState p;
    p.reduced_time = j.at("reduced_time").get<double>();
    p.fictive_temperature = j.at("fictive_temperature").get<double>();
    p.thermal_strain = j.at("thermal_strain").get<double>();
    p.initial_temperature = j.at("initial_temperature").get<double>();
    p.last_temperature = j.at("last_temperature").get<double>();
    p.strain = mat(j.at("strain"));
    for (const auto& q : j.at("deviatoric_internal")) {
        p.deviatoric_internal.push_back(mat(q));
    }
    p.volumetric_internal = j.at("volumetric_internal").get<std::vector<double>>();
    p.fictive_internal = j.at("fictive_internal").get<std::vector<double>>();
    return p;
}

json contact_json(const contact::ContactNodeState& s) {
    return {{"status", static_cast<int>(s.status)},
            {"gap", s.gap},
            {"normal", vec(s.normal)},
            {"tangent1", vec(s.tangent1)},
            {"tangent2", vec(s.tangent2)},
            {"tangential_slip", vec(s.tangential_slip)},
            {"normal_force", s.normal_force},
            {"tangential_force", vec(s.tangential_force)},
            {"anchor", vec(s.anchor)},
            {"anchored", s.anchored}};
}

contact::ContactNodeState contact_from_json(const json& j) {
    contact::ContactNodeState s;
    const int status = j.at("status").get<int>();
    if (status < 0 || status > 2) {
        throw ParseError("checkpoint: invalid contact status " + std::to_string(status));
    }
    s.status = static_cast<contact::Status>(status);
    s.gap = j.at("gap").get<double>();
    s.normal = vec(j.at("normal"));
    s.tangent1 = vec(j.at("tangent1"));
    s.tangent2 = vec(j.at("tangent2"));
    s.tangential_slip = vec(j.at("tangential_slip"));
    s.normal_force = j.at("normal_force").get<double>();
    s.tangential_force = vec(j.at("tangential_force"));
    s.anchor = vec(j.at("anchor"));
    s.anchored = j.at("anchored").get<bool>();
    return s;
}

json record_json(const StepRecord& r) {
    return {{"phase", to_string(r.phase)},       {"time_s", r.time},
            {"Tmin_K", r.t_min},                 {"Tmean_K", r.t_mean},
            {"Tmax_K", r.t_max},                 {"max_vonmises_Pa", r.max_von_mises},
            {"demold_force_N", r.demolding_force}, {"picard_iters", r.picard_iterations},
            {"cg_iters", r.cg_iterations}};
}

Phase phase_from_string(const std::string& s) {
    if (s == "cooling") {
        return Phase::cooling;
    }
    if (s == "demolding") {
        return Phase::demolding;
    }
    throw ParseError("checkpoint: unknown phase '" + s + "'");
}

StepRecord record_from_json(const json& j) {
    StepRecord r;
    r.phase = phase_from_string(j.at("phase").get<std::string>());
    r.time = j.at("time_s").get<double>();
    r.t_min = j.at("Tmin_K").get<double>();
    r.t_mean = j.at("Tmean_K").get<double>();
    r.t_max = j.at("Tmax_K").get<double>();
    r.max_von_mises = j.at("max_vonmises_Pa").get<double>();
    r.demolding_force = j.at("demold_force_N").get<double>();
    r.picard_iterations = j.at("picard_iters").get<std::size_t>();
    r.cg_iterations = j.at("cg_iters").get<std::size_t>();
    return r;
}

}  // namespace

std::string to_string(Phase p) { return p == Phase::cooling ? "cooling" : "demolding"; }

nlohmann::json to_json(const Checkpoint& c) {
    json points = json::array();
    for (const auto& p : c.mechanics.points) {
        points.push_back(point_json(p));
    }
    json contacts = json::array();
    for (const auto& s : c.mechanics.contacts) {
        contacts.push_back(contact_json(s));
    }
    json displacement = json::array();
    for (const auto& u : c.mechanics.displacement) {
        displacement.push_back(vec(u));
    }
    json records = json::array();
    for (const auto& r : c.records) {
        records.push_back(record_json(r));
    }
    json out = {{"format", "hotemboss-checkpoint"},
                {"version", 1},
                {"phase", to_string(c.phase)},
                {"major_step", c.major_step},
                {"next_snapshot", c.next_snapshot},
                {"demolding_start_s", c.demolding_start ? json(*c.demolding_start) : json(nullptr)},
                {"temperature", {{"time_s", c.temperature.time}, {"values_K", c.temperature.values}}},
                {"mechanics",
                 {{"time_s", c.mechanics.time},
                  {"displacement_m", displacement},
                  {"points", points},
                  {"contacts", contacts}}},
                {"records", records}};
    return out;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "hotemboss-checkpoint" || j.at("version").get<int>() != 1) {
            throw ParseError("checkpoint: unsupported format or version");
        }
        Checkpoint c;
        c.phase = phase_from_string(j.at("phase").get<std::string>());
        c.major_step = j.at("major_step").get<std::size_t>();
        c.next_snapshot = j.at("next_snapshot").get<std::size_t>();
        if (!j.at("demolding_start_s").is_null()) {
            c.demolding_start = j.at("demolding_start_s").get<double>();
        }
        c.temperature.time = j.at("temperature").at("time_s").get<double>();
        c.temperature.values = j.at("temperature").at("values_K").get<std::vector<double>>();
        const auto& m = j.at("mechanics");
        c.mechanics.time = m.at("time_s").get<double>();
        for (const auto& u : m.at("displacement_m")) {
            c.mechanics.displacement.push_back(vec(u));
        }
        for (const auto& p : m.at("points")) {
            c.mechanics.points.push_back(point_from_json(p));
        }
        for (const auto& s : m.at("contacts")) {
            c.mechanics.contacts.push_back(contact_from_json(s));
        }
        for (const auto& r : j.at("records")) {
            c.records.push_back(record_from_json(r));
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    // Write then rename, so an interrupted write never leaves a truncated file.
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) {
            throw Error("save_checkpoint: cannot open " + tmp.string());
        }
        out << to_json(c).dump() << "\n";
        if (!out) {
            throw Error("save_checkpoint: write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("load_checkpoint: cannot open " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace hotemboss
