#include "bundlespectra/bundle.hpp"

#include "bundlespectra/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>

namespace bspec {

namespace {

bool is_orthogonal(const Eigen::MatrixXd& m, double tol) {
  Eigen::MatrixXd d = m.transpose() * m - Eigen::MatrixXd::Identity(m.rows(), m.cols());
  return d.cwiseAbs().maxCoeff() <= tol;
}

int find_edge(const FineMesh& mesh, int u, int v) {
  for (auto [w, e] : mesh.adj[u])
    if (w == v) return e;
  return -1;
}

} // namespace

std::string bundle_class_name(BundleClass c) {
  switch (c) {
    case BundleClass::Flat: return "flat";
    case BundleClass::RankOneComplex: return "rank_one_complex";
    case BundleClass::HarmonicCurvature: return "harmonic_curvature";
    case BundleClass::Generic: return "generic";
  }
  return "generic";
}

BundleClass bundle_class_from_name(const std::string& name) {
  if (name == "flat") return BundleClass::Flat;
  if (name == "rank_one_complex") return BundleClass::RankOneComplex;
  if (name == "harmonic_curvature") return BundleClass::HarmonicCurvature;
  if (name == "generic") return BundleClass::Generic;
  throw ValidationError("unknown bundle class: " + name);
}

Eigen::Matrix2d rotation2(double angle) {
  Eigen::Matrix2d r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

Eigen::MatrixXd Bundle::transport_between(int from, int to) const {
  int e = find_edge(*mesh, from, to);
  if (e < 0) throw ValidationError("transport requested between non-adjacent vertices");
  if (mesh->edges[e].u == from) return transport[e];
  return transport[e].transpose();
}

bool Bundle::identity_edge(int edge_index, double tol) const {
  const Eigen::MatrixXd& u = transport[edge_index];
  return (u - Eigen::MatrixXd::Identity(rank, rank)).cwiseAbs().maxCoeff() <= tol;
}

Bundle trivial_bundle(std::shared_ptr<const FineMesh> mesh, int rank) {
  if (rank < 1 || rank > 4) throw ValidationError("bundle rank must be between 1 and 4");
  Bundle b;
  b.mesh = std::move(mesh);
  b.rank = rank;
  b.class_hint = BundleClass::Flat;
  b.transport.assign(b.mesh->edges.size(), Eigen::MatrixXd::Identity(rank, rank));
  return b;
}

Bundle flat_bundle_from_representation(std::shared_ptr<const FineMesh> mesh,
                                       const std::vector<Eigen::MatrixXd>& generators) {
  if (generators.empty()) throw ValidationError("flat bundle needs at least one generator");
  const int n = static_cast<int>(generators[0].rows());
  if (n < 1 || n > 4) throw ValidationError("bundle rank must be between 1 and 4");
  for (const auto& g : generators) {
    if (g.rows() != n || g.cols() != n) throw ValidationError("generators must share one size");
    if (!is_orthogonal(g, 1e-12)) throw ValidationError("flat bundle generator is not orthogonal");
  }

  Bundle b = trivial_bundle(mesh, n);
  const FineMesh& m = *b.mesh;

  switch (m.kind) {
    case ManifoldKind::Circle: {
      if (generators.size() != 1)
        throw ValidationError("circle takes exactly one holonomy generator");
      // Seam: the wrap edge (N-1, 0) carries the generator.
      int e = find_edge(m, m.vertex_count() - 1, 0);
      b.transport[e] = (m.edges[e].u == m.vertex_count() - 1) ? generators[0]
                                                              : generators[0].transpose().eval();
      break;
    }
    case ManifoldKind::Torus: {
      if (generators.size() != 2)
        throw ValidationError("torus takes exactly two holonomy generators");
      const Eigen::MatrixXd &g1 = generators[0], &g2 = generators[1];
      if ((g1 * g2 - g2 * g1).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("flat structure requires commuting holonomy");
      int n1 = m.grid_n1, n2 = m.grid_n2;
      auto vid = [&](int i, int j) { return ((i % n1 + n1) % n1) * n2 + ((j % n2 + n2) % n2); };
      for (int j = 0; j < n2; j++) {
        int e = find_edge(m, vid(n1 - 1, j), vid(0, j));
        b.transport[e] = (m.edges[e].u == vid(n1 - 1, j)) ? g1 : g1.transpose().eval();
      }
      for (int i = 0; i < n1; i++) {
        int e = find_edge(m, vid(i, n2 - 1), vid(i, 0));
        b.transport[e] = (m.edges[e].u == vid(i, n2 - 1)) ? g2 : g2.transpose().eval();
      }
      break;
    }
    case ManifoldKind::Sphere: {
      for (const auto& g : generators)
        if ((g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12)
          throw ValidationError("the sphere is simply connected: only the trivial representation");
      break;
    }
  }
  return b;
}

Bundle landau_line_bundle(std::shared_ptr<const FineMesh> mesh, int flux_quanta) {
  if (mesh->kind != ManifoldKind::Torus)
    throw ValidationError("landau bundle requires a flat torus grid");
  Bundle b = trivial_bundle(std::move(mesh), 2);
  const FineMesh& m = *b.mesh;
  if (flux_quanta == 0) return b;

  const int n1 = m.grid_n1, n2 = m.grid_n2;
  const double phi0 = 2.0 * M_PI * flux_quanta / (static_cast<double>(n1) * n2);
  auto vid = [&](int i, int j) { return ((i % n1 + n1) % n1) * n2 + ((j % n2 + n2) % n2); };
  // Landau gauge: vertical edges (i,j)->(i,j+1) carry angle phi0*i; the
  // horizontal wrap column (n1-1,j)->(0,j) carries -phi0*n1*j. Every
  // plaquette then holds exactly phi0.
  auto set = [&](int u, int v, double theta) {
    int e = find_edge(m, u, v);
    b.transport[e] = (m.edges[e].u == u) ? rotation2(theta) : rotation2(-theta);
  };
  for (int i = 0; i < n1; i++)
    for (int j = 0; j < n2; j++) {
      set(vid(i, j), vid(i, j + 1), phi0 * i);
      if (i == n1 - 1) set(vid(i, j), vid(i + 1, j), -phi0 * n1 * j);
    }
  b.class_hint = BundleClass::RankOneComplex;
  b.complex_structure = rotation2(M_PI / 2.0);
  return b;
}

Bundle sphere_tangent_bundle(std::shared_ptr<const FineMesh> mesh) {
  if (mesh->kind != ManifoldKind::Sphere)
    throw ValidationError("tangent bundle construction requires a sphere mesh");
  Bundle b;
  b.mesh = std::move(mesh);
  b.rank = 2;
  b.class_hint = BundleClass::HarmonicCurvature;
  const FineMesh& m = *b.mesh;
  const int nv = m.vertex_count();

  // Fixed tangent frame per vertex.
  std::vector<Eigen::Matrix<double, 3, 2>> frame(nv);
  for (int v = 0; v < nv; v++) {
    Eigen::Vector3d nrm = m.positions[v].normalized();
    Eigen::Vector3d ref = std::abs(nrm.z()) < 0.9 ? Eigen::Vector3d::UnitZ()
                                                  : Eigen::Vector3d::UnitX();
    Eigen::Vector3d t1 = ref.cross(nrm).normalized();
    Eigen::Vector3d t2 = nrm.cross(t1);
    frame[v].col(0) = t1;
    frame[v].col(1) = t2;
  }

  b.transport.resize(m.edges.size());
  for (size_t e = 0; e < m.edges.size(); e++) {
    int u = m.edges[e].u, v = m.edges[e].v;
    Eigen::Vector3d nu = m.positions[u].normalized(), nv3 = m.positions[v].normalized();
    // Rotate the tangent plane at u onto the plane at v about their common
    // perpendicular (transport along the great-circle arc).
    Eigen::Vector3d axis = nu.cross(nv3);
    double s = axis.norm(), c = nu.dot(nv3);
    Eigen::Matrix3d rot;
    if (s < 1e-15) {
      rot = Eigen::Matrix3d::Identity();
    } else {
      axis /= s;
      double angle = std::atan2(s, c);
      rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    }
    Eigen::Matrix2d u2 = frame[v].transpose() * rot * frame[u];
    // Exact in exact arithmetic; strip roundoff so the orthogonality
    // invariant holds at 1e-12.
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(u2, Eigen::ComputeFullU | Eigen::ComputeFullV);
    b.transport[e] = svd.matrixU() * svd.matrixV().transpose();
  }
  return b;
}

Eigen::MatrixXd transport_along_path(const Bundle& bundle, const std::vector<int>& path) {
  if (path.empty()) throw ValidationError("empty transport path");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(bundle.rank, bundle.rank);
  for (size_t i = 1; i < path.size(); i++)
    acc = bundle.transport_between(path[i - 1], path[i]) * acc;
  return acc;
}

Eigen::MatrixXd skew_log(const Eigen::MatrixXd& orthogonal) {
  const int n = static_cast<int>(orthogonal.rows());
  if (orthogonal.determinant() < 0.0)
    throw NumericError("face holonomy is orientation-reversing; no principal log");
  Eigen::RealSchur<Eigen::MatrixXd> schur(orthogonal);
  const Eigen::MatrixXd& t = schur.matrixT();
  const Eigen::MatrixXd& q = schur.matrixU();
  Eigen::MatrixXd logt = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n;) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > 1e-14) {
      double angle = std::atan2(t(i + 1, i), t(i, i));
      if (std::abs(angle) >= M_PI / 2.0)
        throw NumericError("mesh too coarse for log: face rotation angle >= pi/2");
      logt(i, i + 1) = -angle;
      logt(i + 1, i) = angle;
      i += 2;
    } else {
      if (t(i, i) < 0.0)
        throw NumericError("mesh too coarse for log: face rotation angle >= pi/2");
      i += 1;
    }
  }
  return q * logt * q.transpose();
}

CurvatureReport curvature_report(const Bundle& bundle) {
  const FineMesh& m = *bundle.mesh;
  CurvatureReport rep;

  // Per-face curvature coefficient B_f = skew log of the face holonomy over
  // the face area, plus a vertex -> incident faces table for the divergence.
  struct FaceCurv {
    Eigen::MatrixXd b;
  };
  std::vector<FaceCurv> curv;
  std::vector<std::vector<int>> faces_at(m.vertex_count());
  std::vector<double> face_area;

  auto handle_face = [&](const std::vector<int>& cycle, double area) {
    std::vector<int> loop = cycle;
    loop.push_back(cycle.front());
    Eigen::MatrixXd h = transport_along_path(bundle, loop);
    Eigen::MatrixXd b = skew_log(h) / area;
    int f = static_cast<int>(curv.size());
    curv.push_back({b});
    face_area.push_back(area);
    for (int v : cycle) faces_at[v].push_back(f);
    rep.k1_hat = std::max(rep.k1_hat, b.norm());
  };

  if (!m.quad_faces.empty()) {
    double area = m.measure[0]; // uniform grid cell
    for (auto& f : m.quad_faces) handle_face({f[0], f[1], f[2], f[3]}, area);
  } else if (!m.tri_faces.empty()) {
    double r = m.params[0];
    for (auto& f : m.tri_faces) {
      Eigen::Vector3d a = m.positions[f[0]], b3 = m.positions[f[1]], c = m.positions[f[2]];
      auto arc = [](const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
        return std::atan2(x.normalized().cross(y.normalized()).norm(),
                          x.normalized().dot(y.normalized()));
      };
      double sa = arc(b3, c), sb = arc(c, a), sc = arc(a, b3);
      double s = 0.5 * (sa + sb + sc);
      double t = std::tan(s / 2) * std::tan((s - sa) / 2) * std::tan((s - sb) / 2) *
                 std::tan((s - sc) / 2);
      double area = 4.0 * std::atan(std::sqrt(std::max(0.0, t))) * r * r;
      handle_face({f[0], f[1], f[2]}, area);
    }
  } else {
    return rep; // circle: no faces, flat by construction
  }
  rep.face_count = static_cast<int>(curv.size());

  // First-order divergence: largest face-to-face jump of the curvature
  // field across pairs of faces meeting at a vertex, per mesh step.
  for (int v = 0; v < m.vertex_count(); v++) {
    const auto& fs = faces_at[v];
    for (size_t a = 0; a < fs.size(); a++)
      for (size_t c = a + 1; c < fs.size(); c++) {
        double jump = (curv[fs[a]].b - curv[fs[c]].b).norm() / m.mesh_scale;
        rep.k2_hat = std::max(rep.k2_hat, jump);
      }
  }
  return rep;
}

Bundle gauge_transformed(const Bundle& bundle, const std::vector<Eigen::MatrixXd>& gauge) {
  if (static_cast<int>(gauge.size()) != bundle.mesh->vertex_count())
    throw ValidationError("gauge field must cover every vertex");
  Bundle out = bundle;
  for (size_t e = 0; e < bundle.transport.size(); e++) {
    int u = bundle.mesh->edges[e].u, v = bundle.mesh->edges[e].v;
    out.transport[e] = gauge[v] * bundle.transport[e] * gauge[u].transpose();
  }
  return out;
}

} // namespace bspec
