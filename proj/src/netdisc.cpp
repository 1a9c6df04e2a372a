#include "bundlespectra/netdisc.hpp"

#include "bundlespectra/errors.hpp"
#include "bundlespectra/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

namespace bspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Update dist_to_net with distances from a newly admitted point, truncated
// at `stop`.
void relax_from(const FineMesh& mesh, int source, double stop, std::vector<double>& dist_to_net) {
  std::vector<double> local(mesh.vertex_count(), kInf);
  local[source] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > local[u]) continue;
    dist_to_net[u] = std::min(dist_to_net[u], d);
    if (d >= stop) continue;
    for (auto [v, e] : mesh.adj[u]) {
      double nd = d + mesh.edges[e].len;
      if (nd < local[v]) {
        local[v] = nd;
        pq.push({nd, v});
      }
    }
  }
}

// Multi-source Dijkstra from all net points; exact covering radii.
std::vector<double> distance_to_set(const FineMesh& mesh, const std::vector<int>& sources) {
  std::vector<double> dist(mesh.vertex_count(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  for (int s : sources) {
    dist[s] = 0.0;
    pq.push({0.0, s});
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (auto [v, e] : mesh.adj[u]) {
      double nd = d + mesh.edges[e].len;
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.push({nd, v});
      }
    }
  }
  return dist;
}

} // namespace

Ball Discretization::ball_at(int net_idx, double radius) const {
  return shrink_ball(*mesh, ball10[net_idx], radius);
}

Discretization epsilon_net(std::shared_ptr<const FineMesh> mesh, double epsilon, unsigned seed) {
  const FineMesh& m = *mesh;
  if (epsilon > m.r0 / 20.0) {
    std::ostringstream os;
    os << "epsilon " << epsilon << " violates the comparison hypothesis r0 >= 20*epsilon"
       << " (r0 = " << m.r0 << ", r0/20 = " << m.r0 / 20.0 << ")";
    throw ValidationError(os.str());
  }
  if (epsilon < 4.0 * m.mesh_scale)
    throw ValidationError("fine mesh under-resolves epsilon (need epsilon >= 4h)");

  Discretization disc;
  disc.mesh = mesh;
  disc.epsilon = epsilon;
  disc.seed = seed;

  std::vector<int> order(m.vertex_count());
  std::iota(order.begin(), order.end(), 0);
  if (seed != 0) {
    std::mt19937 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }

  // Greedy: admit a vertex iff it sits at distance >= epsilon from all
  // previously admitted ones. Maximality makes the result epsilon-covering.
  std::vector<double> dist_to_net(m.vertex_count(), kInf);
  for (int v : order) {
    if (dist_to_net[v] >= epsilon) {
      disc.X.push_back(v);
      relax_from(m, v, epsilon, dist_to_net);
    }
  }

  const int nx = disc.size();
  disc.net_index.assign(m.vertex_count(), -1);
  for (int i = 0; i < nx; i++) disc.net_index[disc.X[i]] = i;

  disc.ball10.resize(nx);
  parallel_for(nx, [&](int i) { disc.ball10[i] = ball(m, disc.X[i], 10.0 * epsilon); });

  // Edge rule 0 < d < 3*epsilon; each unordered pair decided once from the
  // smaller net index so the relation is exactly symmetric.
  disc.neighbors.assign(nx, {});
  disc.neighbor_dist.assign(nx, {});
  for (int i = 0; i < nx; i++) {
    const Ball& b = disc.ball10[i];
    for (size_t t = 0; t < b.members.size(); t++) {
      int j = disc.net_index[b.members[t]];
      if (j < 0 || j <= i) continue;
      double d = b.dist[t];
      if (d > 0.0 && d < 3.0 * epsilon) {
        disc.neighbors[i].push_back(j);
        disc.neighbor_dist[i].push_back(d);
        disc.neighbors[j].push_back(i);
        disc.neighbor_dist[j].push_back(d);
      }
    }
  }
  for (int i = 0; i < nx; i++) {
    std::vector<int> perm(disc.neighbors[i].size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](int a, int b) { return disc.neighbors[i][a] < disc.neighbors[i][b]; });
    std::vector<int> ns(perm.size());
    std::vector<double> ds(perm.size());
    for (size_t t = 0; t < perm.size(); t++) {
      ns[t] = disc.neighbors[i][perm[t]];
      ds[t] = disc.neighbor_dist[i][perm[t]];
    }
    disc.neighbors[i] = std::move(ns);
    disc.neighbor_dist[i] = std::move(ds);
    disc.nu_X = std::max(disc.nu_X, static_cast<int>(disc.neighbors[i].size()));
  }
  return disc;
}

DiscretizationReport validate(const Discretization& disc) {
  const FineMesh& m = *disc.mesh;
  DiscretizationReport rep;
  const double h = m.mesh_scale;
  const double eps = disc.epsilon;
  rep.nu_X = disc.nu_X;
  rep.epsilon_scale_ok = eps <= m.r0 / 20.0 && eps >= 4.0 * h;

  // Separation from the cached per-point balls (any violating pair is
  // within 10*eps, hence visible there).
  double min_pair = kInf;
  for (int i = 0; i < disc.size(); i++) {
    const Ball& b = disc.ball10[i];
    for (size_t t = 0; t < b.members.size(); t++) {
      int j = disc.net_index[b.members[t]];
      if (j >= 0 && j != i && b.dist[t] > 0.0) min_pair = std::min(min_pair, b.dist[t]);
    }
  }
  if (min_pair == kInf) min_pair = 0.0; // single-point net
  rep.min_pairwise_distance = min_pair;
  rep.separation_ok = disc.size() <= 1 || min_pair >= eps - h;

  std::vector<double> cover = distance_to_set(m, disc.X);
  rep.covering_radius = *std::max_element(cover.begin(), cover.end());
  rep.covering_ok = rep.covering_radius <= eps + h;

  // Edge rule and symmetry.
  rep.edge_rule_ok = true;
  for (int i = 0; i < disc.size() && rep.edge_rule_ok; i++) {
    const Ball& b = disc.ball10[i];
    std::vector<int> expected;
    for (size_t t = 0; t < b.members.size(); t++) {
      int j = disc.net_index[b.members[t]];
      if (j >= 0 && j != i && b.dist[t] < 3.0 * eps) expected.push_back(j);
    }
    std::sort(expected.begin(), expected.end());
    if (expected != disc.neighbors[i]) rep.edge_rule_ok = false;
  }

  // Connectivity of (X, N).
  if (disc.size() > 0) {
    std::vector<char> seen(disc.size(), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : disc.neighbors[u])
        if (!seen[v]) {
          seen[v] = 1;
          reached++;
          stack.push_back(v);
        }
    }
    rep.connected = reached == disc.size();
  }

  std::ostringstream os;
  os << "|X|=" << disc.size() << " nu_X=" << rep.nu_X << " min_pair=" << rep.min_pairwise_distance
     << " covering=" << rep.covering_radius << (rep.ok() ? " [ok]" : " [invariant violated]");
  rep.detail = os.str();
  return rep;
}

} // namespace bspec
