#ifndef BUNDLESPECTRA_NETDISC_HPP
#define BUNDLESPECTRA_NETDISC_HPP

#include "bundlespectra/geometry.hpp"

#include <memory>
#include <string>
#include <vector>

namespace bspec {

// Maximal epsilon-separated subset of the fine mesh with the 3*epsilon edge
// rule. Construction is greedy over a fixed scan order (ascending ids for
// seed 0, a seeded permutation otherwise), so identical inputs give
// identical nets.
struct Discretization {
  std::shared_ptr<const FineMesh> mesh;
  double epsilon = 0.0;
  unsigned seed = 0;
  std::vector<int> X;                           // mesh vertex ids, admission order
  std::vector<int> net_index;                   // mesh id -> index into X, or -1
  std::vector<std::vector<int>> neighbors;      // per net index, net indices, ascending
  std::vector<std::vector<double>> neighbor_dist;
  int nu_X = 0;
  std::vector<Ball> ball10;                     // per net index, radius 10*epsilon

  int size() const { return static_cast<int>(X.size()); }
  int degree(int net_idx) const { return static_cast<int>(neighbors[net_idx].size()); }
  // Slice of the cached 10*epsilon ball; radius must not exceed 10*epsilon.
  Ball ball_at(int net_idx, double radius) const;
};

Discretization epsilon_net(std::shared_ptr<const FineMesh> mesh, double epsilon,
                           unsigned seed = 0);

struct DiscretizationReport {
  double min_pairwise_distance = 0.0;
  double covering_radius = 0.0;
  int nu_X = 0;
  bool connected = false;
  bool separation_ok = false;
  bool covering_ok = false;
  bool edge_rule_ok = false;
  bool epsilon_scale_ok = false;
  std::string detail;
  bool ok() const {
    return connected && separation_ok && covering_ok && edge_rule_ok && epsilon_scale_ok;
  }
};

DiscretizationReport validate(const Discretization& disc);

} // namespace bspec

#endif
