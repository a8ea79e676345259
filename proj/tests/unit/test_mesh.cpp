#include <cmath>
#include <sstream>

#include "doctest.h"
#include "hotemboss/errors.hpp"
#include "hotemboss/mesh.hpp"

using namespace hotemboss;
using namespace hotemboss::mesh;

namespace {

const std::string kFixtures = HOTEMBOSS_FIXTURE_DIR;

Vec3 area_vector_sum(const Mesh& m, double* total_area = nullptr) {
    Vec3 sum = Vec3::Zero();
    double area = 0.0;
    for (const auto& f : boundary_facets(m)) {
        sum += f.area * f.normal;
        area += f.area;
    }
    if (total_area) *total_area = area;
    return sum;
}

}  // namespace

TEST_CASE("reference tetrahedron") {
    const auto m = load_mesh(kFixtures + "/reference_tet.msh");
    REQUIRE(m.num_elements() == 1);
    CHECK(m.total_volume() == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    const auto g = element_geometry(m, 0);
    CHECK(g.volume == doctest::Approx(1.0 / 6.0));
    CHECK((g.gradients[0] - Vec3(-1, -1, -1)).norm() < 1e-15);
    CHECK((g.gradients[1] - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK(boundary_facets(m).size() == 4);
    CHECK(m.facet_sets.at("base").size() == 1);
    CHECK(m.set_nodes("base") == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("gradients sum to zero and survive rigid translation") {
    std::array<Vec3, 4> x{Vec3(0.1, 0.2, 0.0), Vec3(1.3, 0.1, 0.2), Vec3(0.4, 1.1, -0.1), Vec3(0.2, 0.3, 0.9)};
    const auto g = tet_geometry(x);
    Vec3 sum = Vec3::Zero();
    double mx = 0.0;
    for (const auto& v : g.gradients) {
        sum += v;
        mx = std::max(mx, v.norm());
    }
    CHECK(sum.norm() <= 1e-12 * mx);
    for (auto& p : x) p += Vec3(5.0, -3.0, 2.0);
    const auto h = tet_geometry(x);
    CHECK(h.volume == doctest::Approx(g.volume).epsilon(1e-12));
    for (int a = 0; a < 4; ++a) CHECK((h.gradients[a] - g.gradients[a]).norm() <= 1e-9 * mx);

    // Gradient identity: sum_a x_a (grad N_a)^T = I.
    Eigen::Matrix3d id = Eigen::Matrix3d::Zero();
    for (int a = 0; a < 4; ++a) id += x[a] * h.gradients[a].transpose();
    CHECK((id - Eigen::Matrix3d::Identity()).norm() < 1e-12);

    std::array<Vec3, 4> flat{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
    CHECK_THROWS_AS(tet_geometry(flat), DegenerateElementError);

    // Micrometre-sized elements are legitimate; only shape decides.
    std::array<Vec3, 4> tiny{Vec3(0, 0, 0), Vec3(1e-6, 0, 0), Vec3(0, 1e-6, 0), Vec3(0, 0, 1e-6)};
    CHECK(tet_geometry(tiny).volume == doctest::Approx(1e-18 / 6.0).epsilon(1e-12));
    for (auto& p : flat) p *= 1e-6;
    CHECK_THROWS_AS(tet_geometry(flat), DegenerateElementError);
}

TEST_CASE("cube fixture from the generator script") {
    const auto m = load_mesh(kFixtures + "/cube_2x2x2.msh");
    CHECK(m.num_elements() == 48);
    CHECK(m.num_nodes() == 27);
    CHECK(m.total_volume() == doctest::Approx(1.0).epsilon(1e-12));
    double area = 0.0;
    const Vec3 s = area_vector_sum(m, &area);
    CHECK(area == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(s.norm() <= 1e-10 * area);
    for (const char* name : {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"}) {
        REQUIRE(m.facet_sets.count(name) == 1);
        CHECK(m.facet_sets.at(name).size() == 8);
        CHECK(m.set_nodes(name).size() == 9);
    }
}

TEST_CASE("gmsh errors carry context") {
    try {
        load_mesh(kFixtures + "/inverted.msh");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("element 9") != std::string::npos);
    }
    try {
        load_mesh(kFixtures + "/bad_node_line.msh");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
    CHECK_THROWS_AS(load_mesh(kFixtures + "/does_not_exist.msh"), ConfigError);
}

TEST_CASE("two tets sharing a face, JSON with a scale factor") {
    const auto m = load_mesh(kFixtures + "/two_tets_um.json");
    CHECK(m.num_elements() == 2);
    CHECK(m.nodes[1].x() == doctest::Approx(1e-5));
    const auto facets = boundary_facets(m);
    CHECK(facets.size() == 6);
    for (const auto& f : facets) {
        auto key = f.nodes;
        std::sort(key.begin(), key.end());
        CHECK(key != Tri{1, 2, 3});
    }
    CHECK(m.set_nodes("apex") == std::vector<std::size_t>{4});

    const auto again = mesh_from_json(mesh_to_json(m));
    CHECK(again.nodes == m.nodes);
    CHECK(again.elements == m.elements);
    CHECK(again.facet_sets == m.facet_sets);
}

TEST_CASE("mesh validation") {
    Mesh m;
    m.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    m.elements = {{0, 1, 2, 3}};
    CHECK_NOTHROW(m.validate());

    auto bad = m;
    bad.elements = {{0, 1, 2, 7}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    bad = m;
    bad.elements.push_back({0, 1, 2, 3});
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    bad = m;
    bad.elements = {{0, 2, 1, 3}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    // A triangle shared by three tets is not a manifold boundary.
    Mesh nm;
    nm.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(0.2, 0.2, 1)};
    nm.elements = {{0, 1, 2, 3}, {0, 2, 1, 4}, {0, 1, 2, 5}};
    CHECK_THROWS_AS(boundary_facets(nm), NonManifoldError);

    CHECK_THROWS_AS(m.set_nodes("nothing"), ValidationError);
}

TEST_CASE("gmsh round trip") {
    auto m = make_box_mesh(2, 1, 1, 2.0, 1.0, 1.0);
    std::stringstream ss;
    write_gmsh(m, ss);
    const auto r = read_gmsh(ss);
    CHECK(r.num_elements() == m.num_elements());
    CHECK(r.total_volume() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.facet_sets.at("xmax").size() == m.facet_sets.at("xmax").size());
}

TEST_CASE("structured generators") {
    const auto box = make_box_mesh(3, 2, 4, 0.3, 0.2, 0.8);
    CHECK(box.num_elements() == 3 * 2 * 4 * 6);
    CHECK(box.total_volume() == doctest::Approx(0.3 * 0.2 * 0.8).epsilon(1e-12));
    double area = 0.0;
    const Vec3 sum = area_vector_sum(box, &area);
    CHECK(sum.norm() <= 1e-10 * area);
    CHECK(area == doctest::Approx(2 * (0.3 * 0.2 + 0.3 * 0.8 + 0.2 * 0.8)).epsilon(1e-12));

    RibbedPlateSpec spec;
    const auto plate = make_ribbed_plate(spec);
    const double analytic = spec.half_length * spec.half_width * spec.base_thickness +
                            double(spec.rib_count) * spec.rib_width * spec.half_width * spec.rib_height;
    CHECK(plate.total_volume() == doctest::Approx(analytic).epsilon(1e-12));
    CHECK_NOTHROW(plate.validate());
    CHECK(plate.num_elements() > 2000);
    for (const char* name : {"bottom", "sym_x", "sym_y", "edge_x", "edge_y", "mold_side"}) {
        CHECK(plate.facet_sets.count(name) == 1);
    }
    CHECK(plate.node_sets.count("feature_rib0") == 1);
    CHECK(area_vector_sum(plate).norm() <= 1e-10 * 1e-6);

    const auto full = mirror(mirror(plate, 0, {"sym_x"}), 1, {"sym_y"});
    CHECK(full.total_volume() == doctest::Approx(4.0 * analytic).epsilon(1e-12));
    CHECK(full.num_elements() == 4 * plate.num_elements());
    CHECK_NOTHROW(full.validate());
    CHECK(full.facet_sets.count("sym_x") == 0);
    CHECK(boundary_facets(full).size() > boundary_facets(plate).size());
}
