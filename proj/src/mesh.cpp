#include "skewrd/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace skewrd {

double Mesh::total_measure() const noexcept {
  double s = 0.0;
  for (double m : measures_) s += m;
  return s;
}

std::array<double, 4> Mesh::bounds() const noexcept {
  std::array<double, 4> b{vertices_.front()[0], vertices_.front()[0], vertices_.front()[1],
                          vertices_.front()[1]};
  for (const auto& p : vertices_) {
    b[0] = std::min(b[0], p[0]);
    b[1] = std::max(b[1], p[0]);
    b[2] = std::min(b[2], p[1]);
    b[3] = std::max(b[3], p[1]);
  }
  return b;
}

Mesh build_interval_mesh(double a, double b, double dx) {
  if (!std::isfinite(dx) || dx <= 0.0) {
    throw std::invalid_argument("build_interval_mesh: dx must be finite and positive");
  }
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw std::invalid_argument("build_interval_mesh: need finite a < b");
  }
  const double ratio = (b - a) / dx;
  const auto n = static_cast<long long>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 0.5) {
    throw std::invalid_argument("build_interval_mesh: (b - a) / dx does not round to a count");
  }

  Mesh mesh;
  mesh.dim_ = 1;
  const auto count = static_cast<std::size_t>(n);
  const double h = (b - a) / static_cast<double>(count);
  mesh.vertices_.reserve(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    // Pin the last vertex so the measures sum to b - a exactly.
    const double x = (i == count) ? b : a + h * static_cast<double>(i);
    mesh.vertices_.push_back({x, 0.0});
  }
  mesh.elements_.reserve(count);
  mesh.measures_.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    mesh.elements_.push_back({static_cast<int>(e), static_cast<int>(e + 1), -1});
    mesh.measures_.push_back(mesh.vertices_[e + 1][0] - mesh.vertices_[e][0]);
  }

  Face left_end;
  left_end.left = 0;
  left_end.vertices = {0, -1};
  left_end.h = mesh.measures_.front();
  left_end.measure = 1.0;
  left_end.normal = {-1.0, 0.0};
  mesh.boundary_faces_.push_back(left_end);

  mesh.interior_faces_.reserve(count - 1);
  for (std::size_t e = 0; e + 1 < count; ++e) {
    Face f;
    f.left = static_cast<int>(e);
    f.right = static_cast<int>(e + 1);
    f.vertices = {static_cast<int>(e + 1), -1};
    f.h = 0.5 * (mesh.measures_[e] + mesh.measures_[e + 1]);
    f.measure = 1.0;
    f.normal = {1.0, 0.0};
    mesh.interior_faces_.push_back(f);
  }

  Face right_end;
  right_end.left = static_cast<int>(count - 1);
  right_end.vertices = {static_cast<int>(count), -1};
  right_end.h = mesh.measures_.back();
  right_end.measure = 1.0;
  right_end.normal = {1.0, 0.0};
  mesh.boundary_faces_.push_back(right_end);
  return mesh;
}

Mesh build_triangular_mesh(std::array<double, 2> x_range, std::array<double, 2> y_range, int n) {
  if (n < 1) throw std::invalid_argument("build_triangular_mesh: n must be >= 1");
  if (!(x_range[0] < x_range[1]) || !(y_range[0] < y_range[1])) {
    throw std::invalid_argument("build_triangular_mesh: degenerate range");
  }
  Mesh mesh;
  mesh.dim_ = 2;
  const auto np = static_cast<std::size_t>(n) + 1;
  const double hx = (x_range[1] - x_range[0]) / n;
  const double hy = (y_range[1] - y_range[0]) / n;
  mesh.vertices_.reserve(np * np);
  for (std::size_t j = 0; j < np; ++j) {
    for (std::size_t i = 0; i < np; ++i) {
      const double x = (i + 1 == np) ? x_range[1] : x_range[0] + hx * static_cast<double>(i);
      const double y = (j + 1 == np) ? y_range[1] : y_range[0] + hy * static_cast<double>(j);
      mesh.vertices_.push_back({x, y});
    }
  }
  auto vid = [np](std::size_t i, std::size_t j) { return static_cast<int>(j * np + i); };
  mesh.elements_.reserve(2 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (std::size_t j = 0; j + 1 < np; ++j) {
    for (std::size_t i = 0; i + 1 < np; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      mesh.elements_.push_back({v00, v10, v11});
      mesh.elements_.push_back({v00, v11, v01});
    }
  }
  mesh.finalize_2d();
  return mesh;
}

void Mesh::finalize_2d() {
  measures_.clear();
  measures_.reserve(elements_.size());
  for (const auto& el : elements_) {
    const Point& a = vertices_[static_cast<std::size_t>(el[0])];
    const Point& b = vertices_[static_cast<std::size_t>(el[1])];
    const Point& c = vertices_[static_cast<std::size_t>(el[2])];
    const double area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    if (!(area > 0.0)) throw std::logic_error("Mesh: non-positive triangle area");
    measures_.push_back(area);
  }

  // Edge key (sorted vertex pair) -> owning elements in index order. std::map
  // keeps face enumeration deterministic.
  std::map<std::pair<int, int>, std::vector<int>> edges;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    for (int k = 0; k < 3; ++k) {
      int a = el[static_cast<std::size_t>(k)];
      int b = el[static_cast<std::size_t>((k + 1) % 3)];
      if (a > b) std::swap(a, b);
      edges[{a, b}].push_back(static_cast<int>(e));
    }
  }

  interior_faces_.clear();
  boundary_faces_.clear();
  for (const auto& [key, owners] : edges) {
    if (owners.size() > 2) throw std::logic_error("Mesh: non-manifold edge");
    Face f;
    f.left = owners[0];
    f.right = owners.size() == 2 ? owners[1] : -1;
    f.vertices = {key.first, key.second};
    const Point& p = vertices_[static_cast<std::size_t>(key.first)];
    const Point& q = vertices_[static_cast<std::size_t>(key.second)];
    const double dx = q[0] - p[0], dy = q[1] - p[1];
    f.measure = std::hypot(dx, dy);
    f.h = f.measure;
    Point nrm{dy / f.measure, -dx / f.measure};
    // Orient away from the left element's opposite vertex.
    const auto& el = elements_[static_cast<std::size_t>(f.left)];
    int opposite = -1;
    for (int v : el) {
      if (v != key.first && v != key.second) opposite = v;
    }
    const Point& o = vertices_[static_cast<std::size_t>(opposite)];
    if (nrm[0] * (o[0] - p[0]) + nrm[1] * (o[1] - p[1]) > 0.0) {
      nrm = {-nrm[0], -nrm[1]};
    }
    f.normal = nrm;
    (f.interior() ? interior_faces_ : boundary_faces_).push_back(f);
  }
}

void write_mesh_dump(std::ostream& os, const Mesh& mesh) {
  os.precision(17);
  os << "dim " << mesh.dim() << "\n";
  os << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& p : mesh.vertices()) os << p[0] << ' ' << p[1] << "\n";
  os << "elements " << mesh.num_elements() << "\n";
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements()[e];
    os << el[0] << ' ' << el[1];
    if (mesh.dim() == 2) os << ' ' << el[2];
    os << ' ' << mesh.measures()[e] << "\n";
  }
  auto dump_faces = [&os](const char* label, const std::vector<Face>& faces) {
    os << label << ' ' << faces.size() << "\n";
    for (const auto& f : faces) {
      os << f.left << ' ' << f.right << ' ' << f.vertices[0] << ' ' << f.vertices[1] << ' ' << f.h
         << ' ' << f.normal[0] << ' ' << f.normal[1] << "\n";
    }
  };
  dump_faces("interior_faces", mesh.interior_faces());
  dump_faces("boundary_faces", mesh.boundary_faces());
}

}  // namespace skewrd
