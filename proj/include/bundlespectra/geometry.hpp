#ifndef BUNDLESPECTRA_GEOMETRY_HPP
#define BUNDLESPECTRA_GEOMETRY_HPP

#include <Eigen/Core>
#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bspec {

enum class ManifoldKind { Circle, Torus, Sphere };

struct MeshEdge {
  int u, v;
  double len;
};

// Weighted graph standing in for a model manifold. Distances are shortest
// paths along edges; on the torus grid this is the L1 (staircase) metric,
// which overestimates Euclidean distances by at most a factor sqrt(2).
struct FineMesh {
  ManifoldKind kind;
  std::vector<double> params; // circle {L}, torus {L1,L2}, sphere {r}
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> measure;
  std::vector<MeshEdge> edges;
  std::vector<std::vector<std::pair<int, int>>> adj; // vertex -> (neighbor, edge index)
  double mesh_scale = 0.0;                           // h, max edge length
  double r0 = 0.0;                                   // injectivity-radius stand-in
  int grid_n1 = 0, grid_n2 = 0;                      // torus grid dimensions
  std::vector<std::array<int, 4>> quad_faces;        // torus plaquettes, ccw
  std::vector<std::array<int, 3>> tri_faces;         // sphere triangles, outward ccw

  int vertex_count() const { return static_cast<int>(measure.size()); }
  double total_measure() const;
  std::string kind_name() const;
};

struct Ball {
  int center = -1;
  double radius = 0.0;
  std::vector<int> members;  // sorted by (distance, id)
  std::vector<double> dist;  // aligned with members
  std::vector<int> preds;    // Dijkstra predecessor, -1 at center
  std::vector<int> boundary; // members with dist >= radius - h
  double volume = 0.0;       // sum of member measures
};

FineMesh build_circle(double length, int vertex_count);
FineMesh build_flat_torus(double l1, double l2, int n1, int n2);
FineMesh build_sphere(double radius, int subdivisions);

// Single-source distances (Dijkstra, deterministic predecessor rule:
// strictly shorter wins, exact ties go to the smaller predecessor id).
std::vector<double> geodesic_distances(const FineMesh& mesh, int source);

// Truncated Dijkstra; members are exactly the vertices with d < radius.
Ball ball(const FineMesh& mesh, int center, double radius);

// Vertex on a shortest p-q path whose arclength from p is nearest to
// d(p,q)/2; ties resolved to the smaller vertex id.
int geodesic_midpoint(const FineMesh& mesh, int p, int q);

// Exact for <= 5000 vertices, otherwise a 64-source farthest-point lower
// estimate.
double diameter(const FineMesh& mesh);

// Restrict a ball to a smaller radius (prefix of the (dist,id) ordering).
Ball shrink_ball(const FineMesh& mesh, const Ball& b, double radius);

} // namespace bspec

#endif
