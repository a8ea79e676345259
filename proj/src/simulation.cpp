#include "hotemboss/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "hotemboss/material.hpp"
#include "hotemboss/vtk.hpp"

namespace hotemboss {

namespace fs = std::filesystem;

double volume_average(const thermal::ThermalOperators& operators, const std::vector<double>& temperature) {
    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < temperature.size(); ++i) {
        weighted += operators.capacity[i] * temperature[i];
        total += operators.capacity[i];
    }
    return total > 0.0 ? weighted / total : 0.0;
}

void write_summary_csv(const std::vector<StepRecord>& records, const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << "time_s,Tmin_K,Tmean_K,Tmax_K,max_vonmises_Pa,demold_force_N,picard_iters,cg_iters\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%zu\n", r.time, r.t_min, r.t_mean,
                      r.t_max, r.max_von_mises, r.demolding_force, r.picard_iterations, r.cg_iterations);
        out << buf;
    }
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

namespace {

bool retryable(const std::exception& e) {
    return dynamic_cast<const NonConvergenceError*>(&e) != nullptr ||
           dynamic_cast<const SolverMaxIterError*>(&e) != nullptr ||
           dynamic_cast<const SolverBreakdownError*>(&e) != nullptr;
}

class Runner {
public:
    Runner(const config::SimulationConfig& config, const RunOptions& options)
        : config_(config),
          options_(options),
          mesh_(config::load_config_mesh(config)),
          card_(material::load_material_card(config.material_path)),
          ops_(std::make_shared<thermal::ThermalOperators>(thermal::assemble_thermal(mesh_, card_, config.thermal))),
          stepper_(ops_, config.solver.thermal),
          model_(mesh_, card_) {
        model_.body_force = config.body_force;
        model_.contact_params = config.contact;
        if (!config.mold.empty()) {
            model_.set_contact_candidates(config.contact_sets);
        }
        out_dir_ = options.output_dir ? *options.output_dir : config.output.directory;
    }

    RunSummary execute() {
        if (options_.write_files) {
            fs::create_directories(out_dir_);
        }
        if (options_.restart) {
            state_ = load_checkpoint(*options_.restart);
            check_restart_state();
            log("resumed from " + options_.restart->string() + " at t = " + number(state_.temperature.time) + " s");
        } else {
            state_.temperature.values.assign(mesh_.num_nodes(), config_.initial_temperature);
            state_.temperature.time = 0.0;
            state_.mechanics = mechanics::initial_mechanical_state(model_, config_.initial_temperature);
            if (options_.write_files) {
                if (config_.output.matrix_market) {
                    write_matrices();
                }
                snapshot();
            }
        }

        try {
            if (state_.phase == Phase::cooling) {
                configure_phase(Phase::cooling);
                run_cooling();
                if (stopped_) {
                    return finish();
                }
                if (config_.demolding.enabled) {
                    state_.phase = Phase::demolding;
                    state_.demolding_start = state_.temperature.time;
                    log("demolding starts at t = " + number(*state_.demolding_start) + " s");
                }
            }
            if (state_.phase == Phase::demolding) {
                configure_phase(Phase::demolding);
                run_demolding();
            }
        } catch (const RunError&) {
            flush_partial();
            throw;
        }
        return finish();
    }

private:
    void log(const std::string& message) const {
        if (options_.log != nullptr) {
            *options_.log << message << "\n";
        }
    }

    static std::string number(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return buf;
    }

    void check_restart_state() const {
        const bool ok = state_.temperature.values.size() == mesh_.num_nodes() &&
                        state_.mechanics.displacement.size() == mesh_.num_nodes() &&
                        state_.mechanics.points.size() == mesh_.num_elements() &&
                        state_.mechanics.contacts.size() == model_.contact_nodes.size();
        if (!ok) {
            throw ConfigError("checkpoint does not match the configured mesh or contact sets");
        }
    }

    const config::PhaseConfig& phase_config() const {
        return state_.phase == Phase::cooling ? static_cast<const config::PhaseConfig&>(config_.cooling)
                                              : static_cast<const config::PhaseConfig&>(config_.demolding);
    }

    void configure_phase(Phase phase) {
        Schedule opening(0.0);
        if (phase == Phase::demolding) {
            // The configured opening schedule counts from the start of demolding.
            std::vector<std::pair<double, double>> knots;
            for (const auto& [t, v] : config_.demolding.opening.knots()) {
                knots.emplace_back(t + *state_.demolding_start, v);
            }
            opening = Schedule(std::move(knots));
        }
        model_.mold = contact::RigidSurface(config_.mold, config_.opening_direction, opening);
    }

    bool done(double end_time) const {
        const double dt = phase_config().dt;
        return state_.temperature.time >= end_time - 1e-9 * dt;
    }

    void run_cooling() {
        const auto& c = config_.cooling;
        while (!done(c.duration)) {
            if (c.demolding_temperature &&
                volume_average(*ops_, state_.temperature.values) <= *c.demolding_temperature) {
                log("demolding temperature reached at t = " + number(state_.temperature.time) + " s");
                break;
            }
            major_step(std::min(c.dt, c.duration - state_.temperature.time));
            if (stopped_) {
                return;
            }
        }
    }

    void run_demolding() {
        const auto& d = config_.demolding;
        const double end = *state_.demolding_start + d.duration;
        while (!done(end)) {
            major_step(std::min(d.dt, end - state_.temperature.time));
            if (stopped_) {
                return;
            }
        }
    }

    void major_step(double dt) {
        advance(dt);
        ++state_.major_step;
        if (options_.write_files && config_.output.vtk && state_.major_step % config_.output.every == 0) {
            snapshot();
        }
        if (options_.write_files && options_.checkpoint_every > 0 && state_.major_step % options_.checkpoint_every == 0) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_%06zu.json", state_.major_step);
            save_checkpoint(state_, out_dir_ / name);
        }
        if (options_.stop_after && state_.major_step >= *options_.stop_after) {
            stopped_ = true;
        }
    }

    // Steps by dt, halving on solver failure down to the configured floor.
    void advance(double dt) {
        try {
            single_step(dt);
        } catch (const RunError&) {
            throw;
        } catch (const Error& e) {
            if (!retryable(e)) {
                throw RunError(context() + ": " + e.what(), state_.phase, state_.major_step + 1);
            }
            const double half = 0.5 * dt;
            if (half < config_.solver.min_dt) {
                throw RunError(context() + ": step failed at dt = " + number(dt) + " s and dt cannot be halved below " +
                                   number(config_.solver.min_dt) + " s: " + e.what(),
                               state_.phase, state_.major_step + 1);
            }
            log(context() + ": " + e.what() + "; retrying with dt = " + number(half) + " s");
            advance(half);
            advance(half);
        }
    }

    std::string context() const {
        return to_string(state_.phase) + " phase, step " + std::to_string(state_.major_step + 1) + " (t = " +
               number(state_.temperature.time) + " s)";
    }

    void single_step(double dt) {
        const auto& phase = phase_config();
        const auto temperature = stepper_.step(state_.temperature, dt);

        mechanics::StepLoads loads;
        loads.dt = dt;
        loads.temperature_old = state_.temperature.values;
        loads.temperature_new = temperature.values;
        loads.constraints = phase.constraints;
        loads.pressures = phase.pressures;
        loads.friction = phase.friction;
        auto result = mechanics::picard_step(model_, state_.mechanics, loads, config_.solver.picard);
        if (result.preconditioner_fallbacks > 0 && !warned_fallback_) {
            log(context() + ": ILU(0) factors of the mechanical tangent are indefinite; using Jacobi for those solves");
            warned_fallback_ = true;
        }

        // Commit only after both solves succeeded.
        state_.temperature = temperature;
        state_.mechanics = std::move(result.state);

        StepRecord r;
        r.phase = state_.phase;
        r.time = temperature.time;
        const auto [lo, hi] = std::minmax_element(temperature.values.begin(), temperature.values.end());
        r.t_min = *lo;
        r.t_max = *hi;
        r.t_mean = volume_average(*ops_, temperature.values);
        for (const auto& e : result.elements) {
            r.max_von_mises = std::max(r.max_von_mises, mechanics::von_mises(e.stress));
        }
        r.demolding_force = contact::demolding_force(state_.mechanics.contacts, config_.opening_direction);
        r.picard_iterations = result.picard_iterations;
        r.cg_iterations = result.cg_iterations;
        state_.records.push_back(r);
        char line[200];
        std::snprintf(line, sizeof line, "%s t=%.6g s  Tmean=%.2f K  max_vm=%.4g Pa  F_demold=%.4g N  picard=%zu cg=%zu",
                      to_string(r.phase).c_str(), r.time, r.t_mean, r.max_von_mises, r.demolding_force,
                      r.picard_iterations, r.cg_iterations);
        log(line);
    }

    void snapshot() {
        vtk::Fields f;
        f.temperature = state_.temperature.values;
        f.displacement = state_.mechanics.displacement;
        f.contact_status.assign(mesh_.num_nodes(), -1);
        for (std::size_t k = 0; k < model_.contact_nodes.size(); ++k) {
            f.contact_status[model_.contact_nodes[k]] = static_cast<int>(state_.mechanics.contacts[k].status);
        }
        const auto elements = mechanics::element_fields(model_, state_.mechanics, state_.temperature.values);
        for (const auto& e : elements) {
            f.stress.push_back(e.stress);
            f.strain.push_back(e.strain);
        }
        char name[64];
        std::snprintf(name, sizeof name, "step_%05zu.vtk", state_.next_snapshot++);
        const auto path = out_dir_ / name;
        vtk::write_vtk(path, mesh_, f, config_.output.amplification,
                       "hotemboss " + to_string(state_.phase) + " t=" + number(state_.temperature.time) + " s");
        snapshots_.push_back(path);
        series_.push_back({path.filename().string(), state_.temperature.time});
    }

    void write_matrices() const {
        ops_->conductivity.write_matrix_market(out_dir_ / "thermal_conductivity.mtx");
        ops_->boundary.write_matrix_market(out_dir_ / "thermal_boundary.mtx");
        mechanics::StepLoads loads;
        loads.dt = config_.cooling.dt;
        loads.temperature_old = state_.temperature.values;
        loads.temperature_new = state_.temperature.values;
        const auto data = mechanics::element_step_data(model_, state_.mechanics, loads);
        linalg::CsrMatrix k;
        std::vector<double> rhs;
        mechanics::assemble_mechanical(model_, data, loads, config_.cooling.dt, k, rhs);
        k.write_matrix_market(out_dir_ / "mechanical_tangent.mtx");
    }

    void write_summary(bool completed) const {
        write_summary_csv(state_.records, out_dir_ / "summary.csv");
        const auto shrink = mechanics::shrinkage_report(mesh_, state_.mechanics.displacement);
        nlohmann::json features = nlohmann::json::object();
        for (const auto& [name, offset] : shrink.feature_offsets) {
            features[name] = {offset.x(), offset.y(), offset.z()};
        }
        double max_force = 0.0;
        for (const auto& r : state_.records) {
            max_force = std::max(max_force, r.demolding_force);
        }
        nlohmann::json doc = {
            {"completed", completed},
            {"steps", state_.records.size()},
            {"major_steps", state_.major_step},
            {"final_time_s", state_.temperature.time},
            {"final_phase", to_string(state_.phase)},
            {"demolding_start_s", state_.demolding_start ? nlohmann::json(*state_.demolding_start) : nlohmann::json()},
            {"max_demold_force_N", max_force},
            {"shrinkage",
             {{"axis_strain", {shrink.axis_strain.x(), shrink.axis_strain.y(), shrink.axis_strain.z()}},
              {"feature_offsets_m", features}}}};
        std::ofstream out(out_dir_ / "summary.json");
        out << doc.dump(2) << "\n";

        // ParaView file-series index for the VTK snapshots of this invocation.
        nlohmann::json files = nlohmann::json::array();
        for (const auto& [name, time] : series_) {
            files.push_back({{"name", name}, {"time", time}});
        }
        if (!series_.empty()) {
            std::ofstream s(out_dir_ / "snapshots.vtk.series");
            s << nlohmann::json{{"file-series-version", "1.0"}, {"files", files}}.dump(2) << "\n";
        }
    }

    void flush_partial() const {
        if (!options_.write_files) {
            return;
        }
        try {
            write_summary(false);
        } catch (const std::exception& e) {
            log(std::string("could not flush partial outputs: ") + e.what());
        }
    }

    RunSummary finish() {
        if (options_.write_files) {
            if (!stopped_ && config_.output.vtk && state_.major_step % config_.output.every != 0) {
                snapshot();  // always keep the final state
            }
            write_summary(!stopped_);
        }
        RunSummary s;
        s.records = state_.records;
        s.demolding_start = state_.demolding_start;
        s.major_steps = state_.major_step;
        s.stopped_early = stopped_;
        s.shrinkage = mechanics::shrinkage_report(mesh_, state_.mechanics.displacement);
        s.temperature = state_.temperature;
        s.elements = mechanics::element_fields(model_, state_.mechanics, state_.temperature.values);
        s.mechanics = std::move(state_.mechanics);
        s.snapshots = snapshots_;
        return s;
    }

    const config::SimulationConfig& config_;
    const RunOptions& options_;
    mesh::Mesh mesh_;
    material::MaterialCard card_;
    std::shared_ptr<const thermal::ThermalOperators> ops_;
    thermal::ThermalStepper stepper_;
    mechanics::MechanicalModel model_;
    fs::path out_dir_;
    Checkpoint state_;
    bool stopped_ = false;
    bool warned_fallback_ = false;
    std::vector<fs::path> snapshots_;
    std::vector<std::pair<std::string, double>> series_;
};

}  // namespace

RunSummary run(const config::SimulationConfig& config, const RunOptions& options) {
    const auto diagnostics = config::validate_config(config);
    std::string errors;
    for (const auto& d : diagnostics) {
        if (options.log != nullptr) {
            *options.log << config::format(d) << "\n";
        }
        if (d.severity == config::Severity::error) {
            errors += (errors.empty() ? "" : "; ") + d.message;
        }
    }
    if (!errors.empty()) {
        throw ConfigError("invalid configuration: " + errors);
    }
    if (options.checkpoint_every > 0 && !options.write_files) {
        throw ConfigError("checkpoints need file output enabled");
    }
    const unsigned threads = options.sequential ? 1u : options.threads.value_or(config.solver.threads);
    const unsigned previous = linalg::num_threads();
    linalg::set_num_threads(threads);
    struct Restore {
        unsigned n;
        ~Restore() { linalg::set_num_threads(n); }
    } restore{previous};
    Runner runner(config, options);
    return runner.execute();
}

}  // namespace hotemboss
