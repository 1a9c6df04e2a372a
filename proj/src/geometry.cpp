#include "bundlespectra/geometry.hpp"

#include "bundlespectra/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

namespace bspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void finalize(FineMesh& mesh) {
  mesh.adj.assign(mesh.vertex_count(), {});
  double h = 0.0;
  for (int e = 0; e < static_cast<int>(mesh.edges.size()); e++) {
    const MeshEdge& ed = mesh.edges[e];
    if (ed.len <= 0.0) throw ValidationError("mesh edge with non-positive length");
    mesh.adj[ed.u].push_back({ed.v, e});
    mesh.adj[ed.v].push_back({ed.u, e});
    h = std::max(h, ed.len);
  }
  mesh.mesh_scale = h;
  for (double m : mesh.measure)
    if (m <= 0.0) throw ValidationError("mesh vertex with non-positive measure");
}

} // namespace

double FineMesh::total_measure() const {
  return std::accumulate(measure.begin(), measure.end(), 0.0);
}

std::string FineMesh::kind_name() const {
  switch (kind) {
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Torus: return "torus";
    case ManifoldKind::Sphere: return "sphere";
  }
  return "unknown";
}

FineMesh build_circle(double length, int vertex_count) {
  if (length <= 0.0) throw ValidationError("circle length must be positive");
  if (vertex_count < 16)
    throw ValidationError("circle needs at least 16 vertices to resolve a usable net scale");
  FineMesh mesh;
  mesh.kind = ManifoldKind::Circle;
  mesh.params = {length};
  const int n = vertex_count;
  const double step = length / n;
  const double rad = length / (2.0 * M_PI);
  mesh.positions.resize(n);
  mesh.measure.assign(n, step);
  for (int i = 0; i < n; i++) {
    double t = 2.0 * M_PI * i / n;
    mesh.positions[i] = Eigen::Vector3d(rad * std::cos(t), rad * std::sin(t), 0.0);
  }
  for (int i = 0; i < n; i++) mesh.edges.push_back({i, (i + 1) % n, step});
  mesh.r0 = M_PI * length / 2.0;
  finalize(mesh);
  return mesh;
}

FineMesh build_flat_torus(double l1, double l2, int n1, int n2) {
  if (l1 <= 0.0 || l2 <= 0.0) throw ValidationError("torus side lengths must be positive");
  if (n1 < 16 || n2 < 16) throw ValidationError("torus grid needs at least 16x16 vertices");
  const double h1 = l1 / n1, h2 = l2 / n2;
  double ratio = h1 / h2;
  if (ratio > 4.0 || ratio < 0.25)
    throw ValidationError("anisotropic torus grid (cell aspect ratio > 4) distorts geodesic distances");
  FineMesh mesh;
  mesh.kind = ManifoldKind::Torus;
  mesh.params = {l1, l2};
  mesh.grid_n1 = n1;
  mesh.grid_n2 = n2;
  const int nv = n1 * n2;
  mesh.positions.resize(nv);
  mesh.measure.assign(nv, h1 * h2);
  auto vid = [&](int i, int j) { return ((i % n1 + n1) % n1) * n2 + ((j % n2 + n2) % n2); };
  for (int i = 0; i < n1; i++)
    for (int j = 0; j < n2; j++) mesh.positions[vid(i, j)] = Eigen::Vector3d(i * h1, j * h2, 0.0);
  for (int i = 0; i < n1; i++)
    for (int j = 0; j < n2; j++) {
      mesh.edges.push_back({vid(i, j), vid(i + 1, j), h1});
      mesh.edges.push_back({vid(i, j), vid(i, j + 1), h2});
      mesh.quad_faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  // Generous convention matching the circle's pi*L/2: keeps the r0 >= 20*eps
  // hypothesis satisfiable at the grid-resolvable net scales.
  mesh.r0 = M_PI * std::min(l1, l2) / 2.0;
  finalize(mesh);
  return mesh;
}

namespace {

double spherical_triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c, double r) {
  // Girard excess via l'Huilier, on unit vectors.
  Eigen::Vector3d ua = a.normalized(), ub = b.normalized(), uc = c.normalized();
  auto arc = [](const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
    return std::atan2(x.cross(y).norm(), x.dot(y));
  };
  double sa = arc(ub, uc), sb = arc(uc, ua), sc = arc(ua, ub);
  double s = 0.5 * (sa + sb + sc);
  double t = std::tan(s / 2) * std::tan((s - sa) / 2) * std::tan((s - sb) / 2) *
             std::tan((s - sc) / 2);
  double excess = 4.0 * std::atan(std::sqrt(std::max(0.0, t)));
  return excess * r * r;
}

} // namespace

FineMesh build_sphere(double radius, int subdivisions) {
  if (radius <= 0.0) throw ValidationError("sphere radius must be positive");
  if (subdivisions < 3) throw ValidationError("sphere needs at least 3 icosahedral subdivisions");

  // Icosahedron, then `subdivisions` rounds of 4-to-1 refinement projected
  // back to the sphere.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int round = 0; round < subdivisions; round++) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d m = (verts[a] + verts[b]).normalized();
      verts.push_back(m);
      int id = static_cast<int>(verts.size()) - 1;
      midpoint[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  FineMesh mesh;
  mesh.kind = ManifoldKind::Sphere;
  mesh.params = {radius};
  const int nv = static_cast<int>(verts.size());
  mesh.positions.resize(nv);
  for (int i = 0; i < nv; i++) mesh.positions[i] = radius * verts[i];
  mesh.measure.assign(nv, 0.0);
  mesh.tri_faces = faces;

  std::map<std::pair<int, int>, double> edge_set;
  for (auto& f : faces) {
    double area = spherical_triangle_area(verts[f[0]], verts[f[1]], verts[f[2]], radius);
    for (int c = 0; c < 3; c++) {
      mesh.measure[f[c]] += area / 3.0;
      int a = f[c], b = f[(c + 1) % 3];
      auto key = std::minmax(a, b);
      if (!edge_set.count(key)) {
        double arc = radius * std::atan2(verts[a].cross(verts[b]).norm(), verts[a].dot(verts[b]));
        edge_set[key] = arc;
      }
    }
  }
  for (auto& [key, len] : edge_set) mesh.edges.push_back({key.first, key.second, len});
  mesh.r0 = M_PI * radius / 2.0;
  finalize(mesh);
  return mesh;
}

namespace {

// Shared Dijkstra core; stop < 0 means no truncation.
void dijkstra(const FineMesh& mesh, int source, double stop, std::vector<double>& dist,
              std::vector<int>& pred) {
  const int nv = mesh.vertex_count();
  if (source < 0 || source >= nv) throw ValidationError("distance source outside the mesh");
  dist.assign(nv, kInf);
  pred.assign(nv, -1);
  dist[source] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (stop >= 0.0 && d >= stop) continue;
    for (auto [v, e] : mesh.adj[u]) {
      double nd = d + mesh.edges[e].len;
      if (nd < dist[v] || (nd == dist[v] && pred[v] >= 0 && u < pred[v])) {
        dist[v] = nd;
        pred[v] = u;
        pq.push({nd, v});
      }
    }
  }
}

} // namespace

std::vector<double> geodesic_distances(const FineMesh& mesh, int source) {
  std::vector<double> dist;
  std::vector<int> pred;
  dijkstra(mesh, source, -1.0, dist, pred);
  for (double d : dist)
    if (d == kInf) throw NumericError("mesh is disconnected");
  return dist;
}

Ball ball(const FineMesh& mesh, int center, double radius) {
  if (radius <= 0.0) throw ValidationError("ball radius must be positive");
  std::vector<double> dist;
  std::vector<int> pred;
  dijkstra(mesh, center, radius, dist, pred);
  Ball b;
  b.center = center;
  b.radius = radius;
  std::vector<std::pair<double, int>> inside;
  for (int v = 0; v < mesh.vertex_count(); v++)
    if (dist[v] < radius) inside.push_back({dist[v], v});
  std::sort(inside.begin(), inside.end());
  for (auto& [d, v] : inside) {
    b.members.push_back(v);
    b.dist.push_back(d);
    b.preds.push_back(pred[v]);
    b.volume += mesh.measure[v];
    if (d >= radius - mesh.mesh_scale) b.boundary.push_back(v);
  }
  return b;
}

Ball shrink_ball(const FineMesh& mesh, const Ball& b, double radius) {
  if (radius > b.radius) throw ValidationError("shrink_ball cannot grow a ball");
  Ball out;
  out.center = b.center;
  out.radius = radius;
  for (size_t i = 0; i < b.members.size(); i++) {
    if (b.dist[i] >= radius) break; // (dist,id)-sorted
    out.members.push_back(b.members[i]);
    out.dist.push_back(b.dist[i]);
    out.preds.push_back(b.preds[i]);
    out.volume += mesh.measure[b.members[i]];
    if (b.dist[i] >= radius - mesh.mesh_scale) out.boundary.push_back(b.members[i]);
  }
  return out;
}

int geodesic_midpoint(const FineMesh& mesh, int p, int q) {
  if (p == q) throw ValidationError("midpoint of a vertex with itself is undefined");
  std::vector<double> dist;
  std::vector<int> pred;
  dijkstra(mesh, p, -1.0, dist, pred);
  if (dist[q] == kInf) throw NumericError("mesh is disconnected");
  std::vector<int> path; // q back to p
  for (int v = q; v != -1; v = pred[v]) path.push_back(v);
  double half = dist[q] / 2.0;
  int best = path.front();
  double best_err = std::abs(dist[best] - half);
  for (int v : path) {
    double err = std::abs(dist[v] - half);
    if (err < best_err || (err == best_err && v < best)) {
      best = v;
      best_err = err;
    }
  }
  return best;
}

double diameter(const FineMesh& mesh) {
  const int nv = mesh.vertex_count();
  double diam = 0.0;
  if (nv <= 5000) {
    for (int s = 0; s < nv; s++) {
      std::vector<double> d = geodesic_distances(mesh, s);
      diam = std::max(diam, *std::max_element(d.begin(), d.end()));
    }
    return diam;
  }
  // Farthest-point sampling: lower estimate, deterministic.
  int src = 0;
  std::vector<double> min_dist(nv, kInf);
  for (int round = 0; round < 64; round++) {
    std::vector<double> d = geodesic_distances(mesh, src);
    diam = std::max(diam, *std::max_element(d.begin(), d.end()));
    int far = 0;
    double far_d = -1.0;
    for (int v = 0; v < nv; v++) {
      min_dist[v] = std::min(min_dist[v], d[v]);
      if (min_dist[v] > far_d) {
        far_d = min_dist[v];
        far = v;
      }
    }
    src = far;
  }
  return diam;
}

} // namespace bspec
