#include "skewrd/dg_space.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace skewrd {

Eigen::VectorXd BlockDiagonal::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(x.size());
  for (std::size_t e = 0; e < count(); ++e) {
    const auto off = static_cast<Eigen::Index>(e) * block;
    y.segment(off, block).noalias() = (*this)[e] * x.segment(off, block);
  }
  return y;
}

SparseOperator BlockDiagonal::to_sparse() const {
  const auto n = blocks.cols();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(block));
  for (std::size_t e = 0; e < count(); ++e) {
    const auto off = static_cast<Eigen::Index>(e) * block;
    const auto b = (*this)[e];
    for (int j = 0; j < block; ++j) {
      for (int i = 0; i < block; ++i) {
        if (b(i, j) != 0.0) trip.emplace_back(off + i, off + j, b(i, j));
      }
    }
  }
  SparseOperator out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

double default_penalty(int degree) { return 3.0 * degree * (degree + 1); }

DgSpace::DgSpace(std::shared_ptr<const Mesh> mesh, int degree, BasisKind kind,
                 std::optional<double> sigma)
    : mesh_(std::move(mesh)),
      basis_(mesh_ ? mesh_->dim() : 1, degree, kind),
      sigma_(sigma.value_or(default_penalty(degree))) {
  if (!mesh_) throw std::invalid_argument("DgSpace: null mesh");
  if (degree < 1) throw std::invalid_argument("DgSpace: degree must be >= 1");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
    throw std::invalid_argument("DgSpace: penalty must be positive");
  }
  const int d = mesh_->dim();
  const int nloc = basis_.size();

  // Exact for f(u_h) phi with cubic f: degree 4k.
  volume_rule_ = d == 1 ? interval_rule(4 * degree) : triangle_rule(4 * degree);
  volume_values_.resize(static_cast<Eigen::Index>(volume_rule_.size()), nloc);
  reference_gradients_.reserve(volume_rule_.size());
  for (std::size_t q = 0; q < volume_rule_.size(); ++q) {
    volume_values_.row(static_cast<Eigen::Index>(q)) = basis_.values(volume_rule_.points[q]).transpose();
    reference_gradients_.push_back(basis_.gradients(volume_rule_.points[q]));
  }

  const std::size_t ne = mesh_->num_elements();
  det_.resize(ne);
  jac_.resize(ne);
  jac_inv_.resize(ne);
  origin_.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const Point a = mesh_->vertex(e, 0);
    const Point b = mesh_->vertex(e, 1);
    Eigen::Matrix2d j = Eigen::Matrix2d::Identity();
    if (d == 1) {
      j(0, 0) = b[0] - a[0];
    } else {
      const Point c = mesh_->vertex(e, 2);
      j << b[0] - a[0], c[0] - a[0], b[1] - a[1], c[1] - a[1];
    }
    origin_[e] = a;
    jac_[e] = j;
    jac_inv_[e] = j.inverse();
    det_[e] = std::abs(j.determinant());
  }

  const QuadratureRule edge_rule = interval_rule(2 * degree);
  traces_.reserve(mesh_->interior_faces().size());
  for (const Face& f : mesh_->interior_faces()) {
    std::vector<Point> pts;
    std::vector<double> wts;
    if (d == 1) {
      pts.push_back(mesh_->vertices()[static_cast<std::size_t>(f.vertices[0])]);
      wts.push_back(1.0);
    } else {
      const Point& p = mesh_->vertices()[static_cast<std::size_t>(f.vertices[0])];
      const Point& q = mesh_->vertices()[static_cast<std::size_t>(f.vertices[1])];
      for (std::size_t k = 0; k < edge_rule.size(); ++k) {
        const double t = edge_rule.points[k][0];
        pts.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
        wts.push_back(edge_rule.weights[k] * f.measure);
      }
    }
    FaceTrace tr;
    tr.left = f.left;
    tr.right = f.right;
    tr.h = f.h;
    const auto nq = static_cast<Eigen::Index>(pts.size());
    tr.weights = Eigen::Map<const Eigen::VectorXd>(wts.data(), nq);
    tr.values_left.resize(nq, nloc);
    tr.values_right.resize(nq, nloc);
    tr.normal_derivative_left.resize(nq, nloc);
    tr.normal_derivative_right.resize(nq, nloc);
    const Eigen::Vector2d n(f.normal[0], f.normal[1]);
    auto fill = [&](std::size_t elem, Eigen::MatrixXd& vals, Eigen::MatrixXd& dn) {
      for (Eigen::Index k = 0; k < nq; ++k) {
        const Point xi = to_reference(elem, pts[static_cast<std::size_t>(k)]);
        vals.row(k) = basis_.values(xi).transpose();
        const Eigen::MatrixXd g =
            basis_.gradients(xi) * jac_inv_[elem].topLeftCorner(d, d);
        dn.row(k) = (g * n.head(d)).transpose();
      }
    };
    fill(static_cast<std::size_t>(f.left), tr.values_left, tr.normal_derivative_left);
    fill(static_cast<std::size_t>(f.right), tr.values_right, tr.normal_derivative_right);
    traces_.push_back(std::move(tr));
  }
}

Eigen::MatrixXd DgSpace::physical_gradients(std::size_t element, std::size_t q) const {
  const int d = dim();
  return reference_gradients_[q] * jac_inv_[element].topLeftCorner(d, d);
}

Point DgSpace::to_physical(std::size_t element, const Point& xi) const {
  const Eigen::Vector2d x =
      Eigen::Vector2d(origin_[element][0], origin_[element][1]) + jac_[element] * Eigen::Vector2d(xi[0], xi[1]);
  return {x(0), dim() == 1 ? 0.0 : x(1)};
}

Point DgSpace::to_reference(std::size_t element, const Point& x) const {
  Eigen::Vector2d rel(x[0] - origin_[element][0], dim() == 1 ? 0.0 : x[1] - origin_[element][1]);
  const Eigen::Vector2d xi = jac_inv_[element] * rel;
  return {xi(0), dim() == 1 ? 0.0 : xi(1)};
}

double DgSpace::evaluate(const Eigen::VectorXd& coeffs, std::size_t element, const Point& x) const {
  return basis_.values(to_reference(element, x)).dot(coeffs.segment(first_dof(element), local_size()));
}

Eigen::VectorXd DgSpace::project(const std::function<double(const Point&)>& fn) const {
  const int nloc = local_size();
  Eigen::LLT<Eigen::MatrixXd> ref_mass(basis_.reference_mass());
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  Eigen::VectorXd rhs(nloc);
  for (std::size_t e = 0; e < num_elements(); ++e) {
    rhs.setZero();
    for (std::size_t q = 0; q < volume_rule_.size(); ++q) {
      const double v = fn(to_physical(e, volume_rule_.points[q]));
      rhs.noalias() += (volume_rule_.weights[q] * v) * volume_values_.row(static_cast<Eigen::Index>(q)).transpose();
    }
    // The Jacobian determinant cancels between the local mass and the load.
    out.segment(first_dof(e), nloc) = ref_mass.solve(rhs);
  }
  return out;
}

Eigen::VectorXd DgSpace::project_piecewise_constant(std::span<const double> values) const {
  if (values.size() != num_elements()) {
    throw std::invalid_argument("project_piecewise_constant: one value per element expected");
  }
  const int nloc = local_size();
  Eigen::LLT<Eigen::MatrixXd> ref_mass(basis_.reference_mass());
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(nloc);
  for (std::size_t q = 0; q < volume_rule_.size(); ++q) {
    moments.noalias() += volume_rule_.weights[q] * volume_values_.row(static_cast<Eigen::Index>(q)).transpose();
  }
  const Eigen::VectorXd unit = ref_mass.solve(moments);
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t e = 0; e < num_elements(); ++e) out.segment(first_dof(e), nloc) = values[e] * unit;
  return out;
}

Eigen::VectorXd DgSpace::constant_load() const {
  const int nloc = local_size();
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(nloc);
  for (std::size_t q = 0; q < volume_rule_.size(); ++q) {
    moments.noalias() += volume_rule_.weights[q] * volume_values_.row(static_cast<Eigen::Index>(q)).transpose();
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t e = 0; e < num_elements(); ++e) out.segment(first_dof(e), nloc) = det_[e] * moments;
  return out;
}

namespace {

// Runs body(i) for i in [0, n) over `threads` workers with static chunks.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
}

void push_block(std::vector<Eigen::Triplet<double>>& trip, Eigen::Index row0, Eigen::Index col0,
                const Eigen::MatrixXd& block) {
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      trip.emplace_back(row0 + i, col0 + j, block(i, j));
    }
  }
}

}  // namespace

BlockDiagonal mass_blocks(const DgSpace& space) {
  const int nloc = space.local_size();
  BlockDiagonal m;
  m.block = nloc;
  m.blocks.resize(nloc, static_cast<Eigen::Index>(space.size()));
  const auto& rule = space.volume_rule();
  const auto& vals = space.volume_values();
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(nloc, nloc);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto row = vals.row(static_cast<Eigen::Index>(q));
    ref.noalias() += rule.weights[q] * row.transpose() * row;
  }
  for (std::size_t e = 0; e < space.num_elements(); ++e) m[e] = space.jacobian_det(e) * ref;
  return m;
}

SparseOperator assemble_mass(const DgSpace& space, AssemblyOptions opts) {
  const int nloc = space.local_size();
  const auto& rule = space.volume_rule();
  const auto& vals = space.volume_values();
  std::vector<Eigen::MatrixXd> local(space.num_elements());
  parallel_for(space.num_elements(), opts.threads, [&](std::size_t e) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nloc, nloc);
    const double det = space.jacobian_det(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto row = vals.row(static_cast<Eigen::Index>(q));
      b.noalias() += (rule.weights[q] * det) * row.transpose() * row;
    }
    local[e] = std::move(b);
  });
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(space.num_elements() * static_cast<std::size_t>(nloc * nloc));
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    push_block(trip, space.first_dof(e), space.first_dof(e), local[e]);
  }
  const auto n = static_cast<Eigen::Index>(space.size());
  SparseOperator m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseOperator assemble_stiffness(const DgSpace& space, double d, AssemblyOptions opts) {
  if (!(d >= 0.0) || !std::isfinite(d)) {
    throw std::invalid_argument("assemble_stiffness: diffusion must be finite and >= 0");
  }
  const int nloc = space.local_size();
  const auto n = static_cast<Eigen::Index>(space.size());
  SparseOperator s(n, n);
  if (d == 0.0) return s;

  const auto& rule = space.volume_rule();
  std::vector<Eigen::MatrixXd> volume(space.num_elements());
  parallel_for(space.num_elements(), opts.threads, [&](std::size_t e) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nloc, nloc);
    const double det = space.jacobian_det(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::MatrixXd g = space.physical_gradients(e, q);
      b.noalias() += (rule.weights[q] * det * d) * g * g.transpose();
    }
    volume[e] = std::move(b);
  });

  // Face blocks in order LL, LR, RL, RR. With [u] = (u_L - u_R) n and
  // {grad u}.n the mean normal derivative:
  //   -{d grad u}.[w] - {d grad w}.[u] + (sigma d / h) [u].[w]
  const auto& traces = space.interior_traces();
  std::vector<std::array<Eigen::MatrixXd, 4>> faces(traces.size());
  const double sigma = space.sigma();
  parallel_for(traces.size(), opts.threads, [&](std::size_t fi) {
    const FaceTrace& t = traces[fi];
    const Eigen::MatrixXd* vals[2] = {&t.values_left, &t.values_right};
    const Eigen::MatrixXd* dns[2] = {&t.normal_derivative_left, &t.normal_derivative_right};
    const double sign[2] = {1.0, -1.0};
    const double penalty = sigma * d / t.h;
    for (int a = 0; a < 2; ++a) {      // test side
      for (int b = 0; b < 2; ++b) {    // trial side
        Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(nloc, nloc);
        for (Eigen::Index q = 0; q < t.weights.size(); ++q) {
          const auto va = vals[a]->row(q).transpose();
          const auto vb = vals[b]->row(q);
          const auto da = dns[a]->row(q).transpose();
          const auto db = dns[b]->row(q);
          const double w = t.weights(q);
          blk.noalias() -= (0.5 * d * w * sign[a]) * va * db;
          blk.noalias() -= (0.5 * d * w * sign[b]) * da * vb;
          blk.noalias() += (penalty * w * sign[a] * sign[b]) * va * vb;
        }
        faces[fi][static_cast<std::size_t>(2 * a + b)] = std::move(blk);
      }
    }
  });

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve((space.num_elements() + 4 * traces.size()) * static_cast<std::size_t>(nloc * nloc));
  for (std::size_t e = 0; e < space.num_elements(); ++e) {
    push_block(trip, space.first_dof(e), space.first_dof(e), volume[e]);
  }
  for (std::size_t fi = 0; fi < traces.size(); ++fi) {
    const Eigen::Index off[2] = {space.first_dof(static_cast<std::size_t>(traces[fi].left)),
                                 space.first_dof(static_cast<std::size_t>(traces[fi].right))};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) push_block(trip, off[a], off[b], faces[fi][static_cast<std::size_t>(2 * a + b)]);
    }
  }
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

}  // namespace skewrd
