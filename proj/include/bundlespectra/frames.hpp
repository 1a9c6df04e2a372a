#ifndef BUNDLESPECTRA_FRAMES_HPP
#define BUNDLESPECTRA_FRAMES_HPP

#include "bundlespectra/bundle.hpp"
#include "bundlespectra/netdisc.hpp"
#include "bundlespectra/spectral.hpp"

#include <Eigen/Core>
#include <vector>

namespace bspec {

struct FrameConfig {
  double alpha = 0.0; // entrywise Gram tolerance, in (0, 1/(n+1))
  double delta = 0.0; // ball-eigenvalue threshold, 1/length^2 units

  // alpha = 1/(2(n+1)); delta = 0.05 * (pi/(10 eps))^2, a fixed fraction of
  // the Neumann gap scale of a radius-10*eps ball.
  static FrameConfig defaults(int rank, double epsilon);
};

// Local almost-orthonormal frame over B(p, 10 eps): Neumann eigensections
// below the threshold, parallel extensions above.
struct Frame {
  int net_index = -1;
  int p = -1; // mesh id
  int mu = 0;
  Eigen::VectorXd ball_eigenvalues; // leading ball spectrum (continuum units)
  double gram_dev = 0.0;            // max |<e_i,e_j> - delta_ij| over B(p,8eps)
  double delta_prime = 0.0;         // (n+1) * gram_dev
  double ball_volume = 0.0;

  std::vector<int> verts;    // B(p,10eps) members, ball order
  std::vector<double> vdist; // distances from p
  std::vector<int> local;    // mesh id -> row block, -1 outside
  Eigen::MatrixXd sections;  // (|verts| * n) x n, column i = e_i

  int rank() const { return static_cast<int>(sections.cols()); }
  bool contains(int mesh_vertex) const { return local[mesh_vertex] >= 0; }
  // n x n matrix whose columns are e_1(x)..e_n(x).
  Eigen::MatrixXd frame_at(int mesh_vertex) const;
};

// mu(p): how many of the first n ball eigenvalues sit at or below delta.
int compute_mu(const Eigen::VectorXd& ball_eigenvalues, double delta, int rank);

Frame build_frame(const Bundle& bundle, const Discretization& disc, int net_index,
                  const FrameConfig& config);

// All net frames; whole-mesh balls share one eigensolve.
std::vector<Frame> build_all_frames(const Bundle& bundle, const Discretization& disc,
                                    const FrameConfig& config);

struct GramCertificate {
  double gram_dev = 0.0;
  double grad_sup_parallel = 0.0; // difference-quotient sup over B(p,9eps), slots > mu
  double grad_sup_eigsec = 0.0;   // same for eigensection slots
};

GramCertificate certify_gram(const Bundle& bundle, const Discretization& disc,
                             const Frame& frame);

} // namespace bspec

#endif
