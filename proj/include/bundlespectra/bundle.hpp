#ifndef BUNDLESPECTRA_BUNDLE_HPP
#define BUNDLESPECTRA_BUNDLE_HPP

#include "bundlespectra/geometry.hpp"

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bspec {

enum class BundleClass { Flat, RankOneComplex, HarmonicCurvature, Generic };

std::string bundle_class_name(BundleClass c);
BundleClass bundle_class_from_name(const std::string& name);

// Riemannian vector bundle as orthogonal transport matrices on mesh edges
// (lattice-gauge storage). One matrix per undirected edge, oriented along
// the stored (u,v); the reverse transport is the transpose, so reversal
// holds exactly.
struct Bundle {
  std::shared_ptr<const FineMesh> mesh;
  int rank = 0;
  BundleClass class_hint = BundleClass::Generic;
  std::optional<Eigen::Matrix2d> complex_structure; // J, rank_one_complex only
  std::vector<Eigen::MatrixXd> transport;           // per edge index, U(u,v)

  // U(from,to) for adjacent vertices; throws if not adjacent.
  Eigen::MatrixXd transport_between(int from, int to) const;
  bool identity_edge(int edge_index, double tol = 1e-14) const;
};

Bundle trivial_bundle(std::shared_ptr<const FineMesh> mesh, int rank);

// Flat bundle from holonomy generators: one for the circle, two commuting
// for the torus; the sphere only accepts identity generators. Transports
// are identity away from the seam edges.
Bundle flat_bundle_from_representation(std::shared_ptr<const FineMesh> mesh,
                                       const std::vector<Eigen::MatrixXd>& generators);

// Rank-2 torus bundle with uniform plaquette flux 2*pi*q/(N1*N2) in Landau
// gauge. Commutes with J = rotation(pi/2); q = 0 degenerates to the trivial
// flat bundle.
Bundle landau_line_bundle(std::shared_ptr<const FineMesh> mesh, int flux_quanta);

// Discrete Levi-Civita transport between per-vertex tangent frames.
Bundle sphere_tangent_bundle(std::shared_ptr<const FineMesh> mesh);

// Ordered product mapping the fiber at path.front() to the fiber at
// path.back(); identity for a single-vertex path.
Eigen::MatrixXd transport_along_path(const Bundle& bundle, const std::vector<int>& path);

struct CurvatureReport {
  double k1_hat = 0.0; // max face |log holonomy| / area
  double k2_hat = 0.0; // max vertex discrete divergence of the face field
  int face_count = 0;
};

CurvatureReport curvature_report(const Bundle& bundle);

// U(u,v) -> g(v) U(u,v) g(u)^T for a per-vertex orthogonal field g.
Bundle gauge_transformed(const Bundle& bundle, const std::vector<Eigen::MatrixXd>& gauge);

Eigen::Matrix2d rotation2(double angle);

// Principal skew-symmetric log of a rotation matrix (n <= 4); throws
// NumericError when any rotation angle reaches pi/2.
Eigen::MatrixXd skew_log(const Eigen::MatrixXd& orthogonal);

} // namespace bspec

#endif
