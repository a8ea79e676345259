#include "hotemboss/vtk.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hotemboss/errors.hpp"

namespace hotemboss::vtk {

namespace {

constexpr int kVtkTetra = 10;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    Writer& num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out_ << buf;
        return *this;
    }
    Writer& text(const char* s) {
        out_ << s;
        return *this;
    }
    template <typename T>
    Writer& integer(T v) {
        out_ << v;
        return *this;
    }

private:
    std::ostream& out_;
};

void cell_component(std::ostream& out, const char* name, const std::vector<Tensor3>& t, int i, int j) {
    Writer w(out);
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (const auto& m : t) {
        w.num(m(i, j)).text("\n");
    }
}

}  // namespace

void write_vtk(const std::filesystem::path& path, const mesh::Mesh& mesh, const Fields& fields, double amplification,
               const std::string& title) {
    const std::size_t n = mesh.num_nodes();
    const std::size_t m = mesh.num_elements();
    if ((!fields.temperature.empty() && fields.temperature.size() != n) ||
        (!fields.displacement.empty() && fields.displacement.size() != n) ||
        (!fields.contact_status.empty() && fields.contact_status.size() != n) ||
        (!fields.stress.empty() && fields.stress.size() != m) || (!fields.strain.empty() && fields.strain.size() != m)) {
        throw DimensionMismatchError("write_vtk: field sizes do not match the mesh (" + path.string() + ")");
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("write_vtk: cannot open " + path.string() + " for writing");
    }
    Writer w(out);
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 x = mesh.nodes[i];
        if (!fields.displacement.empty()) {
            x += amplification * fields.displacement[i];
        }
        w.num(x.x()).text(" ").num(x.y()).text(" ").num(x.z()).text("\n");
    }
    out << "CELLS " << m << " " << 5 * m << "\n";
    for (const auto& e : mesh.elements) {
        out << 4 << " " << e[0] << " " << e[1] << " " << e[2] << " " << e[3] << "\n";
    }
    out << "CELL_TYPES " << m << "\n";
    for (std::size_t e = 0; e < m; ++e) {
        out << kVtkTetra << "\n";
    }

    out << "POINT_DATA " << n << "\n";
    if (!fields.temperature.empty()) {
        out << "SCALARS temperature_K double 1\nLOOKUP_TABLE default\n";
        for (double t : fields.temperature) {
            w.num(t).text("\n");
        }
    }
    if (!fields.displacement.empty()) {
        out << "VECTORS displacement_m double\n";
        for (const auto& u : fields.displacement) {
            w.num(u.x()).text(" ").num(u.y()).text(" ").num(u.z()).text("\n");
        }
    }
    if (!fields.contact_status.empty()) {
        out << "SCALARS contact_status int 1\nLOOKUP_TABLE default\n";
        for (int s : fields.contact_status) {
            w.integer(s).text("\n");
        }
    }

    if (!fields.stress.empty() || !fields.strain.empty()) {
        out << "CELL_DATA " << m << "\n";
    }
    if (!fields.stress.empty()) {
        cell_component(out, "s_xx", fields.stress, 0, 0);
        cell_component(out, "s_yy", fields.stress, 1, 1);
        cell_component(out, "s_zz", fields.stress, 2, 2);
        cell_component(out, "s_xy", fields.stress, 0, 1);
        cell_component(out, "s_yz", fields.stress, 1, 2);
        cell_component(out, "s_xz", fields.stress, 0, 2);
    }
    if (!fields.strain.empty()) {
        cell_component(out, "e_xx", fields.strain, 0, 0);
        cell_component(out, "e_yy", fields.strain, 1, 1);
        cell_component(out, "e_zz", fields.strain, 2, 2);
        cell_component(out, "e_xy", fields.strain, 0, 1);
        cell_component(out, "e_yz", fields.strain, 1, 2);
        cell_component(out, "e_xz", fields.strain, 0, 2);
    }
    out.flush();
    if (!out) {
        throw Error("write_vtk: write failed for " + path.string());
    }
}

namespace {

class Tokens {
public:
    Tokens(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    std::string word() {
        std::string s;
        if (!(in_ >> s)) {
            throw ParseError(path_ + ": unexpected end of file");
        }
        return s;
    }
    bool try_word(std::string& s) { return static_cast<bool>(in_ >> s); }

    double number() {
        const std::string s = word();
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) {
                return v;
            }
        } catch (const std::exception&) {
        }
        throw ParseError(path_ + ": expected a number, got '" + s + "'");
    }
    Vec3 vec3() {
        const double x = number();
        const double y = number();
        const double z = number();
        return {x, y, z};
    }
    std::size_t count() {
        const double v = number();
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw ParseError(path_ + ": expected a non-negative integer");
        }
        return static_cast<std::size_t>(v);
    }
    void expect(const std::string& w) {
        const auto s = word();
        if (s != w) {
            throw ParseError(path_ + ": expected '" + w + "', got '" + s + "'");
        }
    }

private:
    std::istream& in_;
    std::string path_;
};

}  // namespace

Document read_vtk(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("read_vtk: cannot open " + path.string());
    }
    Document doc;
    std::string line;
    std::getline(in, line);
    if (line.rfind("# vtk DataFile", 0) != 0) {
        throw ParseError(path.string() + ": missing VTK header", 1);
    }
    std::getline(in, doc.title);
    std::getline(in, line);
    if (line.rfind("ASCII", 0) != 0) {
        throw ParseError(path.string() + ": only ASCII files are supported", 3);
    }
    Tokens t(in, path.string());
    t.expect("DATASET");
    t.expect("UNSTRUCTURED_GRID");

    std::size_t point_count = 0;
    std::size_t cell_count = 0;
    enum class Section { none, point, cell } section = Section::none;
    std::string key;
    while (t.try_word(key)) {
        if (key == "POINTS") {
            point_count = t.count();
            t.word();  // data type
            doc.points.resize(point_count);
            for (auto& p : doc.points) {
                p = t.vec3();
            }
        } else if (key == "CELLS") {
            cell_count = t.count();
            t.count();
            doc.cells.resize(cell_count);
            for (auto& c : doc.cells) {
                c.resize(t.count());
                for (auto& v : c) {
                    v = t.count();
                }
            }
        } else if (key == "CELL_TYPES") {
            doc.cell_types.resize(t.count());
            for (auto& c : doc.cell_types) {
                c = static_cast<int>(t.count());
            }
        } else if (key == "POINT_DATA") {
            if (t.count() != point_count) {
                throw ParseError(path.string() + ": POINT_DATA count differs from POINTS");
            }
            section = Section::point;
        } else if (key == "CELL_DATA") {
            if (t.count() != cell_count) {
                throw ParseError(path.string() + ": CELL_DATA count differs from CELLS");
            }
            section = Section::cell;
        } else if (key == "SCALARS") {
            const auto name = t.word();
            t.word();  // data type
            std::string next = t.word();
            if (next != "LOOKUP_TABLE") {
                if (next != "1") {
                    throw ParseError(path.string() + ": only one-component SCALARS are supported");
                }
                t.expect("LOOKUP_TABLE");
            }
            t.word();
            if (section == Section::none) {
                throw ParseError(path.string() + ": SCALARS outside POINT_DATA/CELL_DATA");
            }
            const std::size_t count = section == Section::point ? point_count : cell_count;
            auto& target = section == Section::point ? doc.point_scalars[name] : doc.cell_scalars[name];
            target.resize(count);
            for (auto& v : target) {
                v = t.number();
            }
        } else if (key == "VECTORS") {
            const auto name = t.word();
            t.word();
            if (section != Section::point) {
                throw ParseError(path.string() + ": VECTORS are only supported as point data");
            }
            auto& target = doc.point_vectors[name];
            target.resize(point_count);
            for (auto& v : target) {
                v = t.vec3();
            }
        } else {
            throw ParseError(path.string() + ": unsupported keyword '" + key + "'");
        }
    }
    return doc;
}

}  // namespace hotemboss::vtk
