#ifndef BUNDLESPECTRA_HOLONOMY_HPP
#define BUNDLESPECTRA_HOLONOMY_HPP

#include "bundlespectra/bundle.hpp"
#include "bundlespectra/netdisc.hpp"
#include "bundlespectra/twisted.hpp"

#include <Eigen/Core>
#include <vector>

namespace bspec {

// Spanning-tree trivialization of a flat bundle over the net graph: frames
// transported from the root along BFS tree paths. Tree edges carry the
// identity exactly; each non-tree edge carries the holonomy of its
// fundamental loop.
struct TreeGauge {
  int root = 0;                          // net index
  std::vector<int> parent;               // net index, -1 at root
  std::vector<int> hop;                  // BFS layer
  std::vector<double> path_len;          // geodesic length of the tree path
  std::vector<Eigen::MatrixXd> to_root;  // transport root -> p
  TwistedGraph connection;
  std::vector<std::pair<int, int>> tree_pairs;  // net index pairs, i < j
  std::vector<std::pair<int, int>> cross_pairs; // non-tree neighbor pairs, i < j
};

TreeGauge tree_gauge(const Bundle& bundle, const Discretization& disc, int root_net);

struct LoopHolonomy {
  std::vector<int> loop; // closed mesh-id sequence through net points
  Eigen::MatrixXd holonomy;
  double length = 0.0;
};

// One loop per non-tree neighbor pair (root -> p -> q -> root), filtered by
// total geodesic length.
std::vector<LoopHolonomy> fundamental_loops(const Discretization& disc, const TreeGauge& gauge,
                                            double max_length);

struct AlphaEstimate {
  double alpha_hat = 0.0;
  Eigen::VectorXd witness; // minimizing unit direction
};

// min over unit v of max over loops |H_c v - v|. Exact 1-degree scan plus
// golden-section refinement for n = 2; deterministic sphere sampling with
// pattern-search refinement for n = 3, 4.
AlphaEstimate estimate_alpha(const std::vector<LoopHolonomy>& loops, int rank);

struct HolonomyReport {
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double diam = 0.0;
  double lambda1_E = 0.0;
  double lambda1_net = 0.0;
  double ratio_lower = 0.0; // lambda1_net * d^2 / alpha^2
  double ratio_upper = 0.0; // lambda1_net / alpha'^2
  int nu = 0;
  int commutant_dim = 0;
  bool reducible_flag = false;
  bool degenerate = false; // no holonomy: ratios meaningless
  int loop_count = 0;
};

// Both Theorem-style diagnostics for a flat bundle; lambda1_E is the
// caller's oracle value (first rough eigenvalue).
HolonomyReport check_holonomy_bounds(const Bundle& bundle, const Discretization& disc,
                                     double lambda1_E);

} // namespace bspec

#endif
