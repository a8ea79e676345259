#include "hotemboss/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "hotemboss/errors.hpp"
#include "hotemboss/json_reader.hpp"

namespace hotemboss::mesh {

namespace {

Tri sorted(Tri t) {
    std::sort(t.begin(), t.end());
    return t;
}

struct TriHash {
    std::size_t operator()(const Tri& t) const noexcept {
        std::size_t h = t[0];
        h = h * 1000003u ^ t[1];
        h = h * 1000003u ^ t[2];
        return h;
    }
};

// Local node triples of the four faces of a tet.
constexpr std::array<std::array<int, 3>, 4> kFaces{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

}  // namespace

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) noexcept {
    return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

ElementGeometry tet_geometry(const std::array<Vec3, 4>& x) {
    Eigen::Matrix3d jac;
    jac.col(0) = x[1] - x[0];
    jac.col(1) = x[2] - x[0];
    jac.col(2) = x[3] - x[0];
    ElementGeometry g;
    g.volume = jac.determinant() / 6.0;
    // Scale-free: compare against the cube of the longest edge.
    double edge = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            edge = std::max(edge, (x[j] - x[i]).norm());
        }
    }
    if (!(std::abs(g.volume) > 1e-12 * edge * edge * edge)) {
        std::ostringstream msg;
        msg << "degenerate tetrahedron (volume " << g.volume << " m^3)";
        throw DegenerateElementError(msg.str());
    }
    const Eigen::Matrix3d inv = jac.inverse();
    g.gradients[1] = inv.row(0).transpose();
    g.gradients[2] = inv.row(1).transpose();
    g.gradients[3] = inv.row(2).transpose();
    g.gradients[0] = -(g.gradients[1] + g.gradients[2] + g.gradients[3]);
    return g;
}

ElementGeometry element_geometry(const Mesh& mesh, std::size_t element) {
    if (element >= mesh.elements.size()) {
        throw ValidationError("element id " + std::to_string(element) + " out of range");
    }
    const auto& e = mesh.elements[element];
    try {
        return tet_geometry({mesh.nodes[e[0]], mesh.nodes[e[1]], mesh.nodes[e[2]], mesh.nodes[e[3]]});
    } catch (const DegenerateElementError& err) {
        throw DegenerateElementError("element " + std::to_string(element) + ": " + err.what());
    }
}

std::pair<double, Vec3> triangle_area_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 n = (b - a).cross(c - a);
    const double twice_area = n.norm();
    if (twice_area == 0.0) {
        return {0.0, Vec3::Zero()};
    }
    return {0.5 * twice_area, n / twice_area};
}

std::vector<BoundaryFacet> boundary_facets(const Mesh& mesh) {
    struct Use {
        int count = 0;
        std::size_t owner = 0;
        int face = 0;
    };
    std::unordered_map<Tri, Use, TriHash> uses;
    uses.reserve(mesh.elements.size() * 4);
    std::vector<Tri> order;
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        for (int f = 0; f < 4; ++f) {
            const auto& el = mesh.elements[e];
            const Tri key = sorted({el[kFaces[f][0]], el[kFaces[f][1]], el[kFaces[f][2]]});
            auto [it, inserted] = uses.try_emplace(key);
            if (inserted) {
                order.push_back(key);
                it->second.owner = e;
                it->second.face = f;
            }
            if (++it->second.count > 2) {
                throw NonManifoldError("triangle (" + std::to_string(key[0]) + ", " + std::to_string(key[1]) + ", " +
                                       std::to_string(key[2]) + ") shared by 3 or more elements");
            }
        }
    }
    std::vector<BoundaryFacet> out;
    for (const auto& key : order) {
        const Use& u = uses.at(key);
        if (u.count != 1) {
            continue;
        }
        const auto& el = mesh.elements[u.owner];
        BoundaryFacet f;
        f.owner = u.owner;
        f.nodes = {el[kFaces[u.face][0]], el[kFaces[u.face][1]], el[kFaces[u.face][2]]};
        const std::size_t opposite = el[static_cast<std::size_t>(u.face)];
        auto [area, normal] = triangle_area_normal(mesh.nodes[f.nodes[0]], mesh.nodes[f.nodes[1]], mesh.nodes[f.nodes[2]]);
        const Vec3 centroid = (mesh.nodes[f.nodes[0]] + mesh.nodes[f.nodes[1]] + mesh.nodes[f.nodes[2]]) / 3.0;
        if (normal.dot(centroid - mesh.nodes[opposite]) < 0.0) {
            std::swap(f.nodes[1], f.nodes[2]);
            normal = -normal;
        }
        f.area = area;
        f.normal = normal;
        out.push_back(f);
    }
    return out;
}

void Mesh::validate() const {
    const std::size_t n = nodes.size();
    std::set<Tet> seen;
    for (std::size_t e = 0; e < elements.size(); ++e) {
        Tet key = elements[e];
        for (auto idx : key) {
            if (idx >= n) {
                throw ValidationError("element " + std::to_string(e) + " references node " + std::to_string(idx) +
                                      " out of range");
            }
        }
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second) {
            throw ValidationError("element " + std::to_string(e) + " duplicates an earlier element");
        }
        const auto& el = elements[e];
        const double v = signed_volume(nodes[el[0]], nodes[el[1]], nodes[el[2]], nodes[el[3]]);
        if (!(v > 0.0)) {
            std::ostringstream msg;
            msg << "element " << e << " is inverted or degenerate (signed volume " << v << " m^3)";
            throw ValidationError(msg.str());
        }
    }
    std::set<Tri> boundary;
    for (const auto& f : boundary_facets(*this)) {
        boundary.insert(sorted(f.nodes));
    }
    for (const auto& [name, tris] : facet_sets) {
        for (const auto& t : tris) {
            for (auto idx : t) {
                if (idx >= n) {
                    throw ValidationError("facet set '" + name + "' references node out of range");
                }
            }
            if (!boundary.count(sorted(t))) {
                throw ValidationError("facet set '" + name + "' contains a triangle that is not on the boundary");
            }
        }
    }
    for (const auto& [name, ids] : node_sets) {
        for (auto idx : ids) {
            if (idx >= n) {
                throw ValidationError("node set '" + name + "' references node out of range");
            }
        }
    }
}

bool Mesh::has_set(const std::string& name) const { return facet_sets.count(name) || node_sets.count(name); }

std::vector<std::size_t> Mesh::set_nodes(const std::string& name) const {
    std::vector<std::size_t> out;
    if (auto it = node_sets.find(name); it != node_sets.end()) {
        out = it->second;
    } else if (auto ft = facet_sets.find(name); ft != facet_sets.end()) {
        for (const auto& t : ft->second) {
            out.insert(out.end(), t.begin(), t.end());
        }
    } else {
        throw ValidationError("mesh has no node or facet set named '" + name + "'");
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double Mesh::total_volume() const {
    double v = 0.0;
    for (const auto& e : elements) {
        v += signed_volume(nodes[e[0]], nodes[e[1]], nodes[e[2]], nodes[e[3]]);
    }
    return v;
}

// ---------------------------------------------------------------- Gmsh 2.2

namespace {

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++number_;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.find_first_not_of(" \t") != std::string::npos) {
                return true;
            }
        }
        return false;
    }

    std::string expect_line(const char* what) {
        std::string line;
        if (!next(line)) {
            fail(std::string("unexpected end of file, expected ") + what);
        }
        return line;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError("gmsh: " + what, number_); }
    long number() const noexcept { return number_; }

private:
    std::istream& in_;
    long number_ = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

Mesh read_gmsh(std::istream& in) {
    LineReader reader(in);
    Mesh mesh;
    std::map<long, std::string> physical_names;  // by tag
    std::unordered_map<long, std::size_t> node_index;
    bool have_format = false;
    bool have_nodes = false;
    std::vector<long> tet_ids;

    struct PendingTri {
        long tag;
        std::array<long, 3> ids;
    };
    struct PendingPoint {
        long tag;
        long id;
    };
    std::vector<PendingTri> tris;
    std::vector<PendingPoint> points;

    std::string line;
    while (reader.next(line)) {
        const std::string section = trim(line);
        if (section == "$MeshFormat") {
            std::istringstream ls(reader.expect_line("format line"));
            double version = 0;
            int file_type = -1;
            int data_size = 0;
            if (!(ls >> version >> file_type >> data_size)) {
                reader.fail("malformed $MeshFormat line");
            }
            if (version < 2.0 || version >= 3.0) {
                reader.fail("unsupported Gmsh version (need 2.x ASCII)");
            }
            if (file_type != 0) {
                reader.fail("binary Gmsh files are not supported");
            }
            if (trim(reader.expect_line("$EndMeshFormat")) != "$EndMeshFormat") {
                reader.fail("expected $EndMeshFormat");
            }
            have_format = true;
        } else if (section == "$PhysicalNames") {
            std::istringstream cs(reader.expect_line("physical name count"));
            long count = 0;
            if (!(cs >> count) || count < 0) {
                reader.fail("malformed physical name count");
            }
            for (long i = 0; i < count; ++i) {
                const std::string l = reader.expect_line("physical name");
                std::istringstream ls(l);
                int dim = 0;
                long tag = 0;
                if (!(ls >> dim >> tag)) {
                    reader.fail("malformed physical name entry");
                }
                const auto q1 = l.find('"');
                const auto q2 = l.rfind('"');
                if (q1 == std::string::npos || q2 == q1) {
                    reader.fail("physical name must be quoted");
                }
                physical_names[tag] = l.substr(q1 + 1, q2 - q1 - 1);
            }
            if (trim(reader.expect_line("$EndPhysicalNames")) != "$EndPhysicalNames") {
                reader.fail("expected $EndPhysicalNames");
            }
        } else if (section == "$Nodes") {
            std::istringstream cs(reader.expect_line("node count"));
            long count = 0;
            if (!(cs >> count) || count < 0) {
                reader.fail("malformed node count");
            }
            mesh.nodes.reserve(static_cast<std::size_t>(count));
            for (long i = 0; i < count; ++i) {
                std::istringstream ls(reader.expect_line("node"));
                long id = 0;
                double x = 0, y = 0, z = 0;
                if (!(ls >> id >> x >> y >> z)) {
                    reader.fail("malformed node line");
                }
                if (!node_index.emplace(id, mesh.nodes.size()).second) {
                    reader.fail("duplicate node id " + std::to_string(id));
                }
                mesh.nodes.emplace_back(x, y, z);
            }
            if (trim(reader.expect_line("$EndNodes")) != "$EndNodes") {
                reader.fail("expected $EndNodes");
            }
            have_nodes = true;
        } else if (section == "$Elements") {
            std::istringstream cs(reader.expect_line("element count"));
            long count = 0;
            if (!(cs >> count) || count < 0) {
                reader.fail("malformed element count");
            }
            for (long i = 0; i < count; ++i) {
                std::istringstream ls(reader.expect_line("element"));
                long id = 0;
                int type = 0;
                int ntags = 0;
                if (!(ls >> id >> type >> ntags) || ntags < 0) {
                    reader.fail("malformed element line");
                }
                std::vector<long> tags(static_cast<std::size_t>(ntags));
                for (auto& t : tags) {
                    if (!(ls >> t)) {
                        reader.fail("malformed element tags");
                    }
                }
                const long physical = tags.empty() ? 0 : tags[0];
                auto read_ids = [&](std::size_t n) {
                    std::vector<long> ids(n);
                    for (auto& v : ids) {
                        if (!(ls >> v)) {
                            reader.fail("element " + std::to_string(id) + ": missing node ids");
                        }
                    }
                    return ids;
                };
                if (type == 4) {
                    const auto ids = read_ids(4);
                    Tet t{};
                    for (int k = 0; k < 4; ++k) {
                        auto it = node_index.find(ids[static_cast<std::size_t>(k)]);
                        if (it == node_index.end()) {
                            reader.fail("element " + std::to_string(id) + " references unknown node");
                        }
                        t[static_cast<std::size_t>(k)] = it->second;
                    }
                    mesh.elements.push_back(t);
                    tet_ids.push_back(id);
                } else if (type == 2) {
                    const auto ids = read_ids(3);
                    tris.push_back({physical, {ids[0], ids[1], ids[2]}});
                } else if (type == 15) {
                    const auto ids = read_ids(1);
                    points.push_back({physical, ids[0]});
                }
                // other element types (lines, ...) carry no information we use
            }
            if (trim(reader.expect_line("$EndElements")) != "$EndElements") {
                reader.fail("expected $EndElements");
            }
        } else if (!section.empty() && section[0] == '$' && section.rfind("$End", 0) != 0) {
            // Unknown section: skip to its end marker.
            const std::string end = "$End" + section.substr(1);
            std::string l;
            while (true) {
                if (!reader.next(l)) {
                    reader.fail("unterminated section " + section);
                }
                if (trim(l) == end) {
                    break;
                }
            }
        } else {
            reader.fail("unexpected content '" + section + "'");
        }
    }
    if (!have_format) {
        throw ParseError("gmsh: missing $MeshFormat block");
    }
    if (!have_nodes) {
        throw ParseError("gmsh: missing $Nodes block");
    }

    auto name_of = [&](long tag) {
        auto it = physical_names.find(tag);
        return it != physical_names.end() ? it->second : "physical_" + std::to_string(tag);
    };
    auto lookup = [&](long id) {
        auto it = node_index.find(id);
        if (it == node_index.end()) {
            throw ParseError("gmsh: boundary element references unknown node " + std::to_string(id));
        }
        return it->second;
    };
    for (const auto& t : tris) {
        mesh.facet_sets[name_of(t.tag)].push_back({lookup(t.ids[0]), lookup(t.ids[1]), lookup(t.ids[2])});
    }
    for (const auto& p : points) {
        mesh.node_sets[name_of(p.tag)].push_back(lookup(p.id));
    }

    // Report inverted tets by their file id.
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& el = mesh.elements[e];
        const double v = signed_volume(mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]], mesh.nodes[el[3]]);
        if (!(v > 0.0)) {
            std::ostringstream msg;
            msg << "element " << tet_ids[e] << " is inverted or degenerate (signed volume " << v << " m^3)";
            throw ValidationError(msg.str());
        }
    }
    mesh.validate();
    return mesh;
}

void write_gmsh(const Mesh& mesh, std::ostream& out) {
    out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
    std::map<std::string, long> tags;
    long next_tag = 1;
    for (const auto& [name, tris] : mesh.facet_sets) {
        tags[name] = next_tag++;
    }
    std::map<std::string, long> point_tags;
    for (const auto& [name, ids] : mesh.node_sets) {
        point_tags[name] = next_tag++;
    }
    out << "$PhysicalNames\n" << tags.size() + point_tags.size() + 1 << '\n';
    for (const auto& [name, tag] : point_tags) {
        out << "0 " << tag << " \"" << name << "\"\n";
    }
    for (const auto& [name, tag] : tags) {
        out << "2 " << tag << " \"" << name << "\"\n";
    }
    out << "3 " << next_tag << " \"volume\"\n";
    out << "$EndPhysicalNames\n";
    out << "$Nodes\n" << mesh.nodes.size() << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        out << i + 1 << ' ' << mesh.nodes[i].x() << ' ' << mesh.nodes[i].y() << ' ' << mesh.nodes[i].z() << '\n';
    }
    out << "$EndNodes\n";
    std::size_t count = mesh.elements.size();
    for (const auto& [name, ids] : mesh.node_sets) {
        count += ids.size();
    }
    for (const auto& [name, tris] : mesh.facet_sets) {
        count += tris.size();
    }
    out << "$Elements\n" << count << '\n';
    std::size_t id = 1;
    for (const auto& [name, ids] : mesh.node_sets) {
        for (auto n : ids) {
            out << id++ << " 15 2 " << point_tags[name] << " 0 " << n + 1 << '\n';
        }
    }
    for (const auto& [name, tris] : mesh.facet_sets) {
        for (const auto& t : tris) {
            out << id++ << " 2 2 " << tags[name] << " 0 " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
        }
    }
    for (const auto& e : mesh.elements) {
        out << id++ << " 4 2 " << next_tag << " 0 " << e[0] + 1 << ' ' << e[1] + 1 << ' ' << e[2] + 1 << ' '
            << e[3] + 1 << '\n';
    }
    out << "$EndElements\n";
}

// ---------------------------------------------------------------- JSON

Mesh mesh_from_json(const nlohmann::json& doc) {
    JsonReader r(doc, "mesh");
    const auto format = r.get<std::string>("format");
    if (format != "hotemboss-mesh") {
        throw ParseError("mesh: unsupported format '" + format + "'");
    }
    const int version = r.get<int>("version");
    if (version != 1) {
        throw ParseError("mesh: unsupported version " + std::to_string(version));
    }
    const double scale = r.get_or<double>("scale", 1.0);
    if (!(scale > 0.0)) {
        throw ConfigError("mesh: scale must be > 0");
    }
    Mesh mesh;
    for (const auto& p : r.get<std::vector<std::array<double, 3>>>("nodes")) {
        mesh.nodes.emplace_back(p[0] * scale, p[1] * scale, p[2] * scale);
    }
    mesh.elements = r.get<std::vector<Tet>>("elements");
    if (auto fs = r.optional_raw("facet_sets")) {
        mesh.facet_sets = fs->get<std::map<std::string, std::vector<Tri>>>();
    }
    if (auto ns = r.optional_raw("node_sets")) {
        mesh.node_sets = ns->get<std::map<std::string, std::vector<std::size_t>>>();
    }
    r.finish();
    mesh.validate();
    return mesh;
}

nlohmann::json mesh_to_json(const Mesh& mesh) {
    nlohmann::json j;
    j["format"] = "hotemboss-mesh";
    j["version"] = 1;
    auto nodes = nlohmann::json::array();
    for (const auto& p : mesh.nodes) {
        nodes.push_back({p.x(), p.y(), p.z()});
    }
    j["nodes"] = nodes;
    j["elements"] = mesh.elements;
    j["facet_sets"] = mesh.facet_sets;
    j["node_sets"] = mesh.node_sets;
    return j;
}

Mesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open mesh file " + path.string());
    }
    const auto ext = path.extension().string();
    try {
        if (ext == ".json") {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("mesh JSON: ") + e.what());
            }
            return mesh_from_json(doc);
        }
        return read_gmsh(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- generators

void tag_boundary(Mesh& mesh, const std::function<std::string(const Vec3&, const Vec3&)>& classify) {
    for (const auto& f : boundary_facets(mesh)) {
        const Vec3 c = (mesh.nodes[f.nodes[0]] + mesh.nodes[f.nodes[1]] + mesh.nodes[f.nodes[2]]) / 3.0;
        const std::string name = classify(c, f.normal);
        if (!name.empty()) {
            mesh.facet_sets[name].push_back(f.nodes);
        }
    }
}

Mesh make_structured_mesh(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& zs,
                          const std::function<bool(std::size_t, std::size_t, std::size_t)>& active) {
    if (xs.size() < 2 || ys.size() < 2 || zs.size() < 2) {
        throw ValidationError("structured mesh needs at least two coordinates per axis");
    }
    const std::size_t nx = xs.size() - 1, ny = ys.size() - 1, nz = zs.size() - 1;
    auto grid_id = [&](std::size_t i, std::size_t j, std::size_t k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    std::vector<std::size_t> remap((nx + 1) * (ny + 1) * (nz + 1), static_cast<std::size_t>(-1));
    Mesh mesh;
    auto node = [&](std::size_t i, std::size_t j, std::size_t k) {
        auto& slot = remap[grid_id(i, j, k)];
        if (slot == static_cast<std::size_t>(-1)) {
            slot = mesh.nodes.size();
            mesh.nodes.emplace_back(xs[i], ys[j], zs[k]);
        }
        return slot;
    };
    // Six tets per cell along the (0,0,0)-(1,1,1) diagonal; conforming across cells.
    constexpr std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (std::size_t k = 0; k < nz; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                if (active && !active(i, j, k)) {
                    continue;
                }
                for (const auto& p : perms) {
                    std::array<std::size_t, 3> c{i, j, k};
                    Tet t{};
                    t[0] = node(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[static_cast<std::size_t>(p[static_cast<std::size_t>(s)])];
                        t[static_cast<std::size_t>(s + 1)] = node(c[0], c[1], c[2]);
                    }
                    if (signed_volume(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], mesh.nodes[t[3]]) < 0.0) {
                        std::swap(t[2], t[3]);
                    }
                    mesh.elements.push_back(t);
                }
            }
        }
    }
    return mesh;
}

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
    }
    v.back() = b;
    return v;
}

// Subdivides each interval between consecutive breakpoints into cells no
// larger than h.
std::vector<double> graded(const std::vector<double>& breaks, double h) {
    std::vector<double> out{breaks.front()};
    for (std::size_t i = 1; i < breaks.size(); ++i) {
        const double len = breaks[i] - breaks[i - 1];
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h - 1e-9)));
        for (std::size_t k = 1; k <= n; ++k) {
            out.push_back(k == n ? breaks[i] : breaks[i - 1] + len * static_cast<double>(k) / static_cast<double>(n));
        }
    }
    return out;
}

}  // namespace

Mesh make_box_mesh(std::size_t nx, std::size_t ny, std::size_t nz, double lx, double ly, double lz) {
    Mesh mesh = make_structured_mesh(linspace(0, lx, nx), linspace(0, ly, ny), linspace(0, lz, nz));
    const double tol = 1e-9 * std::max({lx, ly, lz});
    tag_boundary(mesh, [&](const Vec3& c, const Vec3&) -> std::string {
        if (std::abs(c.x()) < tol) return "xmin";
        if (std::abs(c.x() - lx) < tol) return "xmax";
        if (std::abs(c.y()) < tol) return "ymin";
        if (std::abs(c.y() - ly) < tol) return "ymax";
        if (std::abs(c.z()) < tol) return "zmin";
        if (std::abs(c.z() - lz) < tol) return "zmax";
        return "";
    });
    return mesh;
}

Mesh make_ribbed_plate(const RibbedPlateSpec& s) {
    std::vector<double> xb{0.0};
    std::vector<std::pair<double, double>> ribs;
    for (std::size_t r = 0; r < s.rib_count; ++r) {
        const double x0 = s.first_rib_x + static_cast<double>(r) * s.rib_pitch;
        ribs.emplace_back(x0, x0 + s.rib_width);
        if (x0 > xb.back()) xb.push_back(x0);
        xb.push_back(x0 + s.rib_width);
    }
    if (xb.back() >= s.half_length) {
        throw ValidationError("ribbed plate: ribs extend past the plate edge");
    }
    xb.push_back(s.half_length);
    const auto xs = graded(xb, s.cell_size);
    const auto ys = graded({0.0, s.half_width}, s.cell_size_y);
    const double top = s.base_thickness + s.rib_height;
    const auto zs = graded({0.0, s.base_thickness, top}, s.cell_size);

    auto in_rib = [&](double x) {
        for (const auto& [a, b] : ribs) {
            if (x > a && x < b) return true;
        }
        return false;
    };
    Mesh mesh = make_structured_mesh(xs, ys, zs, [&](std::size_t i, std::size_t, std::size_t k) {
        const double zc = 0.5 * (zs[k] + zs[k + 1]);
        if (zc < s.base_thickness) return true;
        return in_rib(0.5 * (xs[i] + xs[i + 1]));
    });

    const double tol = 1e-9 * s.half_length;
    tag_boundary(mesh, [&](const Vec3& c, const Vec3& n) -> std::string {
        if (std::abs(c.z()) < tol && n.z() < -0.5) return "bottom";
        if (std::abs(c.x()) < tol && n.x() < -0.5) return "sym_x";
        if (std::abs(c.y()) < tol && n.y() < -0.5) return "sym_y";
        if (std::abs(c.x() - s.half_length) < tol && n.x() > 0.5) return "edge_x";
        if (std::abs(c.y() - s.half_width) < tol && n.y() > 0.5) return "edge_y";
        return "mold_side";
    });
    for (std::size_t r = 0; r < ribs.size(); ++r) {
        auto& set = mesh.node_sets["feature_rib" + std::to_string(r)];
        for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
            const auto& p = mesh.nodes[i];
            if (std::abs(p.z() - top) < tol && p.x() >= ribs[r].first - tol && p.x() <= ribs[r].second + tol) {
                set.push_back(i);
            }
        }
    }
    return mesh;
}

Mesh mirror(const Mesh& mesh, int axis, const std::vector<std::string>& drop_sets) {
    if (axis < 0 || axis > 2) {
        throw ValidationError("mirror axis must be 0, 1 or 2");
    }
    double extent = 0.0;
    for (const auto& p : mesh.nodes) {
        extent = std::max(extent, p.cwiseAbs().maxCoeff());
    }
    const double tol = 1e-12 * std::max(extent, 1e-30);
    Mesh out = mesh;
    std::vector<std::size_t> image(mesh.nodes.size());
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        Vec3 p = mesh.nodes[i];
        if (std::abs(p[axis]) <= tol) {
            image[i] = i;
            continue;
        }
        p[axis] = -p[axis];
        image[i] = out.nodes.size();
        out.nodes.push_back(p);
    }
    for (const auto& e : mesh.elements) {
        // Reflection flips orientation; swapping two nodes restores it.
        out.elements.push_back({image[e[0]], image[e[2]], image[e[1]], image[e[3]]});
    }
    for (const auto& name : drop_sets) {
        out.facet_sets.erase(name);
        out.node_sets.erase(name);
    }
    for (auto& [name, tris] : out.facet_sets) {
        const auto& original = mesh.facet_sets.at(name);
        for (const auto& t : original) {
            tris.push_back({image[t[0]], image[t[2]], image[t[1]]});
        }
    }
    for (auto& [name, ids] : out.node_sets) {
        const auto& original = mesh.node_sets.at(name);
        for (auto n : original) {
            if (image[n] != n) {
                ids.push_back(image[n]);
            }
        }
    }
    return out;
}

}  // namespace hotemboss::mesh
