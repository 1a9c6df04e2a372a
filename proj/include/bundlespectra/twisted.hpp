#ifndef BUNDLESPECTRA_TWISTED_HPP
#define BUNDLESPECTRA_TWISTED_HPP

#include "bundlespectra/frames.hpp"
#include "bundlespectra/netdisc.hpp"
#include "bundlespectra/spectral.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace bspec {

enum class TwistMode { Harmonic, RankOne };
enum class TwistModeChoice { Auto, Harmonic, RankOne };

std::string twist_mode_name(TwistMode m);
TwistModeChoice twist_mode_choice_from_name(const std::string& name);
// Auto resolution and compatibility: harmonic is valid for every class
// produced here (the rank-one examples carry constant, hence harmonic,
// curvature); rank_one requires a flat or complex rank-one bundle.
TwistMode resolve_mode(BundleClass hint, TwistModeChoice choice);

// Graph with a linear map on every ordered neighbor pair. F(X) is stored as
// one stacked vector (rank entries per vertex) with the plain Euclidean
// inner product, exactly the paper's normalization.
struct TwistedGraph {
  int rank = 0;
  std::vector<std::vector<int>> nbr;           // symmetric adjacency
  std::vector<std::vector<Eigen::MatrixXd>> A; // aligned with nbr: A(p, nbr[p][t])

  int size() const { return static_cast<int>(nbr.size()); }
  int dim() const { return rank * size(); }
  // Position of q in nbr[p], or -1.
  int find(int p, int q) const;
  const Eigen::MatrixXd& at(int p, int q) const;
  // max over ordered pairs of the operator 2-norm of A(p,q).
  double max_change_norm() const;
};

// Diagonal potential; empty diag means identically zero. Entries are
// dimensionless (ball eigenvalues enter eps^2-rescaled).
struct Potential {
  Eigen::MatrixXd diag; // rank x |X|, column per net vertex
  bool zero() const { return diag.size() == 0; }
  double max_entry() const { return zero() ? 0.0 : diag.maxCoeff(); }
};

// D_A f on ordered neighbor pairs.
struct EdgeFunction {
  std::vector<std::vector<Eigen::VectorXd>> values; // aligned with graph.nbr
};

// a(p,q)(x): coefficient matrix expressing frame p in frame q at x, solved
// through the Gram matrix of frame q (normal equations).
Eigen::MatrixXd change_of_basis(const Frame& frame_p, const Frame& frame_q, int mesh_vertex);

// A(p,q) for all ordered neighbor pairs. Harmonic mode evaluates a(p,q) at
// q; rank-one mode averages it over the 5*eps ball at the p-q midpoint.
TwistedGraph connection_matrices(const Bundle& bundle, const Discretization& disc,
                                 const std::vector<Frame>& frames, TwistMode mode);

Potential build_potential(const Discretization& disc, const std::vector<Frame>& frames,
                          TwistMode mode);

// Delta_A + V as a symmetric operator with identity mass.
SymmetricOperator assemble_twisted(const TwistedGraph& graph, const Potential& potential);

EdgeFunction apply_DA(const TwistedGraph& graph, const Eigen::VectorXd& f);
// (F,G) = 1/2 sum_p sum_q F(p,q).G(p,q)
double edge_inner(const TwistedGraph& graph, const EdgeFunction& f, const EdgeFunction& g);
double potential_quad(const Potential& potential, const Eigen::VectorXd& f, int rank);

// (Sf)(x) = sum_p psi_p(x) sum_i f_i(p) e_i^p(x) with a normalized tent
// partition subordinate to {B(p, 2 eps)}. Returns a section vector.
Eigen::VectorXd smooth(const Bundle& bundle, const Discretization& disc,
                       const std::vector<Frame>& frames, const Eigen::VectorXd& f);

// (Ds)(p): measure-weighted average of the frame-p coordinates of s over
// B(p, 3 eps). Returns a graph function vector.
Eigen::VectorXd discretize_section(const Discretization& disc, const std::vector<Frame>& frames,
                                   const Eigen::VectorXd& s);

} // namespace bspec

#endif
