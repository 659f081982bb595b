#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cnpressure/exceptions.hpp"

namespace cnpressure::fem {

using Point = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

/// Axis-aligned rectangle (x0, x1) x (y0, y1).
struct Rectangle {
    double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }

    bool on_boundary(const Point& p, double tol = 1e-12) const {
        const double s = tol * std::max(x1 - x0, y1 - y0);
        return std::abs(p.x() - x0) <= s || std::abs(p.x() - x1) <= s || std::abs(p.y() - y0) <= s ||
               std::abs(p.y() - y1) <= s;
    }
};

/// Triangulation of a rectangle. Structured meshes split every cell along the
/// diagonal from its lower-left to its upper-right corner.
class FemMesh2D {
public:
    FemMesh2D(Rectangle box, std::vector<Point> vertices, std::vector<Triangle> triangles)
        : box_(box), vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
        for (const auto& t : triangles_)
            for (int v : t)
                if (v < 0 || static_cast<std::size_t>(v) >= vertices_.size())
                    throw InvalidArgument("triangle references unknown vertex " + std::to_string(v));
        boundary_.resize(vertices_.size());
        for (std::size_t i = 0; i < vertices_.size(); ++i) boundary_[i] = box_.on_boundary(vertices_[i]);
    }

    static FemMesh2D structured(Rectangle box, int nx, int ny) {
        if (nx < 1 || ny < 1) throw InvalidArgument("subdivision counts must be positive");
        if (!(box.x1 > box.x0) || !(box.y1 > box.y0)) throw InvalidArgument("empty rectangle");
        std::vector<Point> vertices;
        vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                vertices.emplace_back(box.x0 + (box.x1 - box.x0) * i / nx, box.y0 + (box.y1 - box.y0) * j / ny);
        std::vector<Triangle> triangles;
        triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
        auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }
        FemMesh2D mesh(box, std::move(vertices), std::move(triangles));
        mesh.nx_ = nx;
        mesh.ny_ = ny;
        return mesh;
    }

    const Rectangle& box() const noexcept { return box_; }
    const std::vector<Point>& vertices() const noexcept { return vertices_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    bool is_boundary_vertex(std::size_t v) const { return boundary_.at(v); }
    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t triangle_count() const noexcept { return triangles_.size(); }
    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }

    /// Signed area; positive for counter-clockwise triangles.
    double signed_area(std::size_t t) const {
        const auto& tri = triangles_.at(t);
        const Point a = vertices_[tri[1]] - vertices_[tri[0]];
        const Point b = vertices_[tri[2]] - vertices_[tri[0]];
        return 0.5 * (a.x() * b.y() - a.y() * b.x());
    }

private:
    Rectangle box_;
    std::vector<Point> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<bool> boundary_;
    int nx_ = 0, ny_ = 0;
};

}  // namespace cnpressure::fem
