#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/errors.hpp"

namespace biot_hdg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Edge of the triangulation.
///
/// `vertices` is sorted ascending; the facet-local coordinate runs from
/// vertices[0] to vertices[1]. The stored normal points from the element with
/// the lower id into the element with the higher id, and outward on the
/// boundary. `tangent` is the unit vector from vertices[0] to vertices[1].
struct Facet {
    std::array<int, 2> vertices{};
    std::array<int, 2> elements{-1, -1};
    Vec2 normal = Vec2::Zero();
    Vec2 tangent = Vec2::Zero();
    double length = 0.0;

    bool is_boundary() const noexcept { return elements[1] < 0; }
};

/// Conforming triangulation of a polygonal domain.
///
/// Triangles are stored counterclockwise. Local facet i of a triangle is the
/// edge opposite to its local vertex i.
class Mesh {
public:
    Mesh() = default;

    Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
        build_topology();
    }

    const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
    const std::vector<Facet>& facets() const noexcept { return facets_; }

    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_elements() const noexcept { return static_cast<int>(triangles_.size()); }
    int num_facets() const noexcept { return static_cast<int>(facets_.size()); }
    int num_boundary_facets() const noexcept {
        return static_cast<int>(std::count_if(facets_.begin(), facets_.end(),
                                              [](const Facet& f) { return f.is_boundary(); }));
    }

    const Vec2& vertex(int v) const { return vertices_[v]; }
    const std::array<int, 3>& triangle(int e) const { return triangles_[e]; }
    const Facet& facet(int f) const { return facets_[f]; }

    const std::array<int, 3>& element_facets(int e) const { return element_facets_[e]; }
    /// +1 if the element's outward normal on local facet i equals the stored facet normal.
    const std::array<int, 3>& element_facet_signs(int e) const { return element_facet_signs_[e]; }

    double area(int e) const { return areas_[e]; }
    /// Diameter h_T (longest edge).
    double diameter(int e) const { return diameters_[e]; }
    /// Maximum element diameter.
    double h() const noexcept { return h_global_; }

    Vec2 outward_normal(int e, int local_facet) const {
        const auto& f = facets_[element_facets_[e][local_facet]];
        return element_facet_signs_[e][local_facet] * f.normal;
    }

    Vec2 centroid(int e) const {
        const auto& t = triangles_[e];
        return (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
    }

    double signed_area(int e) const {
        const auto& t = triangles_[e];
        const Vec2 a = vertices_[t[1]] - vertices_[t[0]];
        const Vec2 b = vertices_[t[2]] - vertices_[t[0]];
        return 0.5 * (a.x() * b.y() - a.y() * b.x());
    }

    /// Barycentric coordinates of x with respect to element e.
    Eigen::Vector3d barycentric(int e, const Vec2& x) const {
        const auto& t = triangles_[e];
        const Vec2& a = vertices_[t[0]];
        Mat2 jac;
        jac.col(0) = vertices_[t[1]] - a;
        jac.col(1) = vertices_[t[2]] - a;
        const Vec2 xi = jac.inverse() * (x - a);
        return {1.0 - xi.x() - xi.y(), xi.x(), xi.y()};
    }

private:
    void build_topology() {
        const int ne = num_elements();
        element_facets_.assign(ne, {-1, -1, -1});
        element_facet_signs_.assign(ne, {0, 0, 0});
        areas_.resize(ne);
        diameters_.resize(ne);
        facets_.clear();

        std::map<std::pair<int, int>, int> edge_index;
        for (int e = 0; e < ne; ++e) {
            const auto& t = triangles_[e];
            for (int i = 0; i < 3; ++i) {
                int a = t[(i + 1) % 3];
                int b = t[(i + 2) % 3];
                const auto key = std::minmax(a, b);
                auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, num_facets());
                if (inserted) {
                    Facet f;
                    f.vertices = {key.first, key.second};
                    f.elements[0] = e;
                    const Vec2 d = vertices_[key.second] - vertices_[key.first];
                    f.length = d.norm();
                    f.tangent = d / f.length;
                    facets_.push_back(f);
                } else {
                    facets_[it->second].elements[1] = e;
                }
                element_facets_[e][i] = it->second;
            }
            areas_[e] = signed_area(e);
            double diam = 0.0;
            for (int i = 0; i < 3; ++i)
                diam = std::max(diam, (vertices_[t[i]] - vertices_[t[(i + 1) % 3]]).norm());
            diameters_[e] = diam;
        }
        h_global_ = diameters_.empty() ? 0.0 : *std::max_element(diameters_.begin(), diameters_.end());

        // elements[0] < elements[1] holds by construction (first visit wins),
        // so the normal is the outward normal of elements[0].
        for (int e = 0; e < ne; ++e) {
            const auto& t = triangles_[e];
            for (int i = 0; i < 3; ++i) {
                auto& f = facets_[element_facets_[e][i]];
                const Vec2 d = vertices_[t[(i + 2) % 3]] - vertices_[t[(i + 1) % 3]];
                const Vec2 outward = Vec2(d.y(), -d.x()).normalized();
                if (f.elements[0] == e) f.normal = outward;
            }
        }
        for (int e = 0; e < ne; ++e) {
            const auto& t = triangles_[e];
            for (int i = 0; i < 3; ++i) {
                const auto& f = facets_[element_facets_[e][i]];
                const Vec2 d = vertices_[t[(i + 2) % 3]] - vertices_[t[(i + 1) % 3]];
                const Vec2 outward(d.y(), -d.x());
                element_facet_signs_[e][i] = outward.dot(f.normal) > 0.0 ? 1 : -1;
            }
        }
    }

    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<Facet> facets_;
    std::vector<std::array<int, 3>> element_facets_;
    std::vector<std::array<int, 3>> element_facet_signs_;
    std::vector<double> areas_;
    std::vector<double> diameters_;
    double h_global_ = 0.0;
};

/// Uniform nx-by-ny grid of (0,a)x(0,b), each cell split along the
/// bottom-left to top-right diagonal.
inline Mesh build_uniform_rectangle(int nx, int ny, double a = 1.0, double b = 1.0) {
    if (nx < 1 || ny < 1) throw Error("uniform mesh needs at least one cell per direction");
    std::vector<Vec2> vertices;
    vertices.reserve(static_cast<size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            vertices.emplace_back(a * i / nx, b * j / ny);
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<size_t>(2 * nx * ny));
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
            triangles.push_back({v00, v10, v11});
            triangles.push_back({v00, v11, v01});
        }
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

inline Mesh build_uniform_unit_square(int n) { return build_uniform_rectangle(n, n); }

/// Red refinement: every triangle is split into four through its edge midpoints.
inline Mesh refine_uniform(const Mesh& mesh) {
    std::vector<Vec2> vertices = mesh.vertices();
    std::vector<int> midpoint(mesh.num_facets());
    for (int f = 0; f < mesh.num_facets(); ++f) {
        const auto& fv = mesh.facet(f).vertices;
        midpoint[f] = static_cast<int>(vertices.size());
        vertices.push_back(0.5 * (mesh.vertex(fv[0]) + mesh.vertex(fv[1])));
    }
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(4 * static_cast<size_t>(mesh.num_elements()));
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.triangle(e);
        const auto& ef = mesh.element_facets(e);
        // local facet i is opposite vertex i
        const int m12 = midpoint[ef[0]], m20 = midpoint[ef[1]], m01 = midpoint[ef[2]];
        triangles.push_back({t[0], m01, m20});
        triangles.push_back({m01, t[1], m12});
        triangles.push_back({m20, m12, t[2]});
        triangles.push_back({m01, m12, m20});
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

/// Ids of every element whose closure contains x.
inline std::vector<int> locate_point(const Mesh& mesh, const Vec2& x, double tol = 1e-12) {
    std::vector<int> hits;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::Vector3d lam = mesh.barycentric(e, x);
        if (lam.minCoeff() >= -tol) hits.push_back(e);
    }
    if (hits.empty()) throw PointOutsideDomain(x.x(), x.y());
    return hits;
}

/// Legacy ASCII VTK unstructured grid with the mesh only.
inline void write_mesh_vtk(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path);
    out.precision(17);
    out << "# vtk DataFile Version 3.0\nbiot-hdg mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << " 0\n";
    out << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << '\n';
    for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "CELL_TYPES " << mesh.num_elements() << '\n';
    for (int e = 0; e < mesh.num_elements(); ++e) out << "5\n";
}

} // namespace biot_hdg
