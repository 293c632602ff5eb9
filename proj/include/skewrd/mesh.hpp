#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace skewrd {

using Point = std::array<double, 2>;

/// A face (point in 1D, edge in 2D) between one or two elements.
///
/// `right < 0` marks a boundary face. Boundary faces are kept for completeness
/// but never enter the interior-penalty sums (homogeneous Neumann data).
struct Face {
  int left = -1;
  int right = -1;
  std::array<int, 2> vertices{-1, -1};  // second entry unused in 1D
  double h = 0.0;                       // penalty length scale h_e
  double measure = 0.0;                 // edge length in 2D, 1 in 1D
  Point normal{0.0, 0.0};               // unit outward normal of `left`

  bool interior() const noexcept { return right >= 0; }
};

/// Conforming partition of an interval or a rectangle.
///
/// Elements are intervals (2 vertices) or triangles (3 vertices, counter-
/// clockwise). Immutable after construction.
class Mesh {
 public:
  int dim() const noexcept { return dim_; }
  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_elements() const noexcept { return elements_.size(); }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<std::array<int, 3>>& elements() const noexcept { return elements_; }
  const std::vector<Face>& interior_faces() const noexcept { return interior_faces_; }
  const std::vector<Face>& boundary_faces() const noexcept { return boundary_faces_; }
  const std::vector<double>& measures() const noexcept { return measures_; }

  /// Number of vertices per element (2 or 3).
  int vertices_per_element() const noexcept { return dim_ + 1; }
  Point vertex(std::size_t element, int local) const {
    return vertices_[static_cast<std::size_t>(elements_[element][static_cast<std::size_t>(local)])];
  }
  double total_measure() const noexcept;
  /// Bounding box as {xmin, xmax, ymin, ymax}.
  std::array<double, 4> bounds() const noexcept;

  friend Mesh build_interval_mesh(double a, double b, double dx);
  friend Mesh build_triangular_mesh(std::array<double, 2> x_range,
                                    std::array<double, 2> y_range, int n);

 private:
  Mesh() = default;
  void finalize_2d();

  int dim_ = 1;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<Face> interior_faces_;
  std::vector<Face> boundary_faces_;
  std::vector<double> measures_;
};

/// Uniform partition of [a, b] into round((b - a) / dx) intervals.
Mesh build_interval_mesh(double a, double b, double dx);

/// n x n squares over the rectangle, each cut bottom-left to top-right.
Mesh build_triangular_mesh(std::array<double, 2> x_range, std::array<double, 2> y_range, int n);

/// Plain-text listing of vertices, elements and faces.
void write_mesh_dump(std::ostream& os, const Mesh& mesh);

}  // namespace skewrd
