#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "hotemboss/config.hpp"
#include "hotemboss/mesh.hpp"
#include "hotemboss/simulation.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;

int cmd_validate(const std::string& path) {
    const auto config = hotemboss::config::load_config(path);
    const auto diagnostics = hotemboss::config::validate_config(config);
    for (const auto& d : diagnostics) {
        std::cout << hotemboss::config::format(d) << "\n";
    }
    if (hotemboss::config::has_errors(diagnostics)) {
        return kExitConfig;
    }
    std::cout << path << ": ok\n";
    return 0;
}

int cmd_mesh_info(const std::string& path) {
    const auto mesh = hotemboss::mesh::load_mesh(path);
    double min_volume = std::numeric_limits<double>::infinity();
    double max_volume = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const double v = hotemboss::mesh::element_geometry(mesh, e).volume;
        min_volume = std::min(min_volume, v);
        max_volume = std::max(max_volume, v);
    }
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (const auto& x : mesh.nodes) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    std::printf("nodes      %zu\nelements   %zu\nvolume     %.6g m^3\n", mesh.num_nodes(), mesh.num_elements(),
                mesh.total_volume());
    std::printf("element volume min/max  %.6g / %.6g m^3\n", min_volume, max_volume);
    std::printf("bounds     [%.6g, %.6g] x [%.6g, %.6g] x [%.6g, %.6g] m\n", lo.x(), hi.x(), lo.y(), hi.y(), lo.z(),
                hi.z());
    for (const auto& [name, tris] : mesh.facet_sets) {
        std::printf("facet set  %-16s %zu triangles\n", name.c_str(), tris.size());
    }
    for (const auto& [name, nodes] : mesh.node_sets) {
        std::printf("node set   %-16s %zu nodes\n", name.c_str(), nodes.size());
    }
    return 0;
}

int cmd_run(const std::string& path, const hotemboss::RunOptions& options) {
    const auto config = hotemboss::config::load_config(path);
    const auto summary = hotemboss::run(config, options);
    std::cout << "completed " << summary.records.size() << " steps, final time " << summary.temperature.time << " s";
    if (summary.demolding_start) {
        std::cout << ", demolding from " << *summary.demolding_start << " s";
    }
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cooling and demolding simulation for hot-embossed polymer parts"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mesh_path;
    hotemboss::RunOptions options;
    unsigned threads = 0;
    std::string output_dir;
    std::string restart;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run a simulation");
    run->add_option("config", config_path, "Configuration JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--threads", threads, "Worker threads for sparse kernels")->check(CLI::PositiveNumber);
    run->add_flag("--sequential", options.sequential, "Certification mode: single thread, bit-reproducible");
    run->add_option("--checkpoint-every", options.checkpoint_every, "Write a checkpoint every K steps");
    run->add_option("--output-dir", output_dir, "Override the output directory");
    run->add_option("--restart", restart, "Resume from a checkpoint file")->check(CLI::ExistingFile);
    run->add_flag("-q,--quiet", quiet, "Suppress progress messages");

    auto* validate = app.add_subcommand("validate", "Check a configuration without running it");
    validate->add_option("config", config_path, "Configuration JSON")->required()->check(CLI::ExistingFile);

    auto* info = app.add_subcommand("mesh-info", "Print mesh statistics and named sets");
    info->add_option("mesh", mesh_path, "Mesh file (.msh or .json)")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*validate) {
            return cmd_validate(config_path);
        }
        if (*info) {
            return cmd_mesh_info(mesh_path);
        }
        if (threads > 0) {
            options.threads = threads;
        }
        if (!output_dir.empty()) {
            options.output_dir = output_dir;
        }
        if (!restart.empty()) {
            options.restart = restart;
        }
        if (!quiet) {
            options.log = &std::cerr;
        }
        return cmd_run(config_path, options);
    } catch (const hotemboss::RunError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const hotemboss::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const hotemboss::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const hotemboss::ValidationError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const hotemboss::DegenerateElementError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}
