#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "biot_hdg/assembly.hpp"
#include "biot_hdg/errors.hpp"
#include "biot_hdg/scenarios.hpp"

namespace biot_hdg {

inline constexpr const char* kCsvHeader = "h,err_triple,order_triple,err_l2_u,order_u,err_l2_p,order_p";

inline std::string format_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline std::string format_order(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

inline void write_csv(std::ostream& out, const ErrorReport& report) {
    out << kCsvHeader << '\n';
    for (const auto& r : report.rows) {
        out << "1/" << r.n << ',' << format_sci(r.err.triple) << ',' << format_order(r.order_triple) << ','
            << format_sci(r.err.l2_u) << ',' << format_order(r.order_u) << ',' << format_sci(r.err.l2_p) << ','
            << format_order(r.order_p) << '\n';
    }
}

inline void emit_csv(const ErrorReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    write_csv(out, report);
    if (!out) throw IoError("write failed: " + path);
}

/// Legacy ASCII VTK: pressure as cell average, displacement at vertices
/// (averaged over incident elements). With `deformed`, vertex coordinates
/// are displaced by `scale` times u.
inline void emit_vtk(const Discretization& disc, const Eigen::VectorXd& state, const std::string& path,
                     bool deformed = false, double scale = 1.0) {
    const Mesh& mesh = disc.mesh();
    std::vector<Vec2> u(mesh.num_vertices(), Vec2::Zero());
    std::vector<int> count(mesh.num_vertices(), 0);
    std::vector<double> p_avg(mesh.num_elements(), 0.0);
    const TriangleRule& rule = disc.load_rule();
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = disc.element(e);
        for (int v : mesh.triangle(e)) {
            u[v] += disc.displacement_at(state, e, mesh.vertex(v));
            ++count[v];
        }
        double integral = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
            integral += rule.weights[q] * el.geom.det * disc.pressure_at(state, e, el.geom.to_physical(rule.points[q]));
        p_avg[e] = integral / mesh.area(e);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(12);
    out << "# vtk DataFile Version 3.0\nbiot-hdg fields\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (count[v] > 0) u[v] /= count[v];
        const Vec2 x = deformed ? Vec2(mesh.vertex(v) + scale * u[v]) : mesh.vertex(v);
        out << x.x() << ' ' << x.y() << " 0\n";
    }
    out << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << '\n';
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    out << "CELL_TYPES " << mesh.num_elements() << '\n';
    for (int e = 0; e < mesh.num_elements(); ++e) out << "5\n";
    out << "CELL_DATA " << mesh.num_elements() << "\nSCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (double p : p_avg) out << p << '\n';
    out << "POINT_DATA " << mesh.num_vertices() << "\nVECTORS displacement double\n";
    for (const Vec2& d : u) out << d.x() << ' ' << d.y() << " 0\n";
    if (!out) throw IoError("write failed: " + path);
}

inline void emit_line_samples(const std::vector<LineSample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(10);
    out << "x,y,p,u_x,u_y\n";
    for (const auto& s : samples) out << s.x.x() << ',' << s.x.y() << ',' << s.p << ',' << s.u.x() << ',' << s.u.y() << '\n';
}

/// Flat key=value config; `#` starts a comment, blank lines are ignored.
inline std::map<std::string, std::string> parse_config(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("config line " + std::to_string(lineno) + ": expected key=value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_config(in);
}

} // namespace biot_hdg
