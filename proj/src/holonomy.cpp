#include "bundlespectra/holonomy.hpp"

#include "bundlespectra/errors.hpp"
#include "bundlespectra/geometry.hpp"
#include "bundlespectra/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

namespace bspec {

namespace {

// Fine-mesh path between neighboring net points, read off the cached
// Dijkstra tree of the smaller net index so both directions agree exactly.
std::vector<int> fine_path(const Discretization& disc, int i, int j) {
  bool swap = j < i;
  int a = swap ? j : i, b = swap ? i : j;
  const Ball& ballA = disc.ball10[a];
  std::vector<int> rev; // X[b] .. X[a]
  int target = disc.X[b];
  int li = -1;
  for (size_t t = 0; t < ballA.members.size(); t++)
    if (ballA.members[t] == target) {
      li = static_cast<int>(t);
      break;
    }
  if (li < 0) throw NumericError("net neighbor left the cached ball");
  std::vector<int> local(disc.mesh->vertex_count(), -1);
  for (size_t t = 0; t < ballA.members.size(); t++) local[ballA.members[t]] = static_cast<int>(t);
  for (int v = target; v != -1; v = ballA.preds[local[v]]) rev.push_back(v);
  std::vector<int> path(rev.rbegin(), rev.rend()); // X[a] .. X[b]
  if (swap) std::reverse(path.begin(), path.end());
  return path;
}

Eigen::MatrixXd net_transport(const Bundle& bundle, const Discretization& disc, int i, int j) {
  return transport_along_path(bundle, fine_path(disc, i, j));
}

} // namespace

TreeGauge tree_gauge(const Bundle& bundle, const Discretization& disc, int root_net) {
  if (bundle.class_hint != BundleClass::Flat)
    throw ValidationError("tree gauge with parallel frames requires a flat bundle");
  if (root_net < 0 || root_net >= disc.size())
    throw ValidationError("tree root outside the net");

  const int nx = disc.size();
  const int n = bundle.rank;
  TreeGauge tg;
  tg.root = root_net;
  tg.parent.assign(nx, -1);
  tg.hop.assign(nx, -1);
  tg.path_len.assign(nx, 0.0);
  tg.to_root.assign(nx, Eigen::MatrixXd::Identity(n, n));

  // BFS layers X_i = {p : d_G(p, root) = i}; parent = smallest eligible
  // index in the previous layer.
  std::deque<int> queue = {root_net};
  tg.hop[root_net] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : disc.neighbors[u]) {
      if (tg.hop[v] < 0) {
        tg.hop[v] = tg.hop[u] + 1;
        tg.parent[v] = u;
        queue.push_back(v);
      } else if (tg.hop[v] == tg.hop[u] + 1 && u < tg.parent[v]) {
        tg.parent[v] = u;
      }
    }
  }
  for (int v = 0; v < nx; v++)
    if (tg.hop[v] < 0) throw NumericError("net graph is disconnected");

  // Transports along tree paths, children after parents.
  std::vector<int> order(nx);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return tg.hop[a] != tg.hop[b] ? tg.hop[a] < tg.hop[b] : a < b;
  });
  for (int v : order) {
    if (v == root_net) continue;
    int par = tg.parent[v];
    double d = 0.0;
    for (size_t t = 0; t < disc.neighbors[v].size(); t++)
      if (disc.neighbors[v][t] == par) d = disc.neighbor_dist[v][t];
    tg.path_len[v] = tg.path_len[par] + d;
    tg.to_root[v] = net_transport(bundle, disc, par, v) * tg.to_root[par];
  }

  tg.connection.rank = n;
  tg.connection.nbr = disc.neighbors;
  tg.connection.A.resize(nx);
  for (int p = 0; p < nx; p++) {
    tg.connection.A[p].resize(disc.neighbors[p].size());
    for (size_t t = 0; t < disc.neighbors[p].size(); t++) {
      int q = disc.neighbors[p][t];
      bool tree_edge = tg.parent[q] == p || tg.parent[p] == q;
      if (tree_edge) {
        // Identity by construction of the gauge; set exactly.
        tg.connection.A[p][t] = Eigen::MatrixXd::Identity(n, n);
      } else {
        tg.connection.A[p][t] =
            tg.to_root[q].transpose() * net_transport(bundle, disc, p, q) * tg.to_root[p];
      }
      if (p < q) {
        if (tree_edge)
          tg.tree_pairs.push_back({p, q});
        else
          tg.cross_pairs.push_back({p, q});
      }
    }
  }
  return tg;
}

std::vector<LoopHolonomy> fundamental_loops(const Discretization& disc, const TreeGauge& gauge,
                                            double max_length) {
  std::vector<LoopHolonomy> loops;
  auto tree_path = [&](int v) {
    std::vector<int> path; // root .. v, mesh ids
    for (int u = v; u != -1; u = gauge.parent[u]) path.push_back(disc.X[u]);
    std::reverse(path.begin(), path.end());
    return path;
  };
  for (auto [i, j] : gauge.cross_pairs) {
    double dij = 0.0;
    for (size_t t = 0; t < disc.neighbors[i].size(); t++)
      if (disc.neighbors[i][t] == j) dij = disc.neighbor_dist[i][t];
    double len = gauge.path_len[i] + dij + gauge.path_len[j];
    if (len > max_length) continue;
    LoopHolonomy lh;
    lh.length = len;
    lh.holonomy = gauge.connection.at(i, j);
    std::vector<int> down = tree_path(i);
    std::vector<int> up = tree_path(j);
    lh.loop = down;
    for (auto it = up.rbegin(); it != up.rend(); ++it) lh.loop.push_back(*it);
    loops.push_back(std::move(lh));
  }
  return loops;
}

namespace {

double defect2(const std::vector<Eigen::MatrixXd>& mc, const Eigen::VectorXd& v) {
  double worst = 0.0;
  for (const auto& m : mc) worst = std::max(worst, v.dot(m * v));
  return worst;
}

} // namespace

AlphaEstimate estimate_alpha(const std::vector<LoopHolonomy>& loops, int rank) {
  if (rank > 4) throw ValidationError("alpha scan implemented for rank <= 4 only");
  AlphaEstimate est;
  est.witness = Eigen::VectorXd::Unit(std::max(rank, 1), 0);
  if (loops.empty()) return est;

  std::vector<Eigen::MatrixXd> mc;
  mc.reserve(loops.size());
  for (const auto& l : loops) {
    const Eigen::MatrixXd& h = l.holonomy;
    mc.push_back(2.0 * Eigen::MatrixXd::Identity(rank, rank) - h - h.transpose());
  }

  if (rank == 1) {
    est.alpha_hat = std::sqrt(std::max(0.0, defect2(mc, est.witness)));
    return est;
  }

  if (rank == 2) {
    auto val = [&](double a) {
      Eigen::VectorXd v(2);
      v << std::cos(a), std::sin(a);
      return defect2(mc, v);
    };
    double best_a = 0.0, best = val(0.0);
    for (int d = 1; d < 180; d++) {
      double a = d * M_PI / 180.0;
      double f = val(a);
      if (f < best) {
        best = f;
        best_a = a;
      }
    }
    // Golden-section refinement on the bracketing degree.
    double lo = best_a - M_PI / 180.0, hi = best_a + M_PI / 180.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = val(x1), f2 = val(x2);
    while (hi - lo > 1e-6) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = val(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = val(x2);
      }
    }
    double a = (lo + hi) / 2.0;
    double f = val(a);
    if (best < f) {
      a = best_a;
      f = best;
    }
    est.alpha_hat = std::sqrt(std::max(0.0, f));
    est.witness.resize(2);
    est.witness << std::cos(a), std::sin(a);
    return est;
  }

  // rank 3, 4: deterministic sphere sampling with pattern-search polish.
  std::mt19937 rng(987654321u);
  std::normal_distribution<double> nd;
  Eigen::VectorXd best_v = est.witness;
  if (best_v.size() != rank) best_v = Eigen::VectorXd::Unit(rank, 0);
  double best = defect2(mc, best_v);
  const int samples = 100000;
  for (int s = 0; s < samples; s++) {
    Eigen::VectorXd v(rank);
    for (int t = 0; t < rank; t++) v[t] = nd(rng);
    v.normalize();
    double f = defect2(mc, v);
    if (f < best) {
      best = f;
      best_v = v;
    }
  }
  double step = 0.05;
  while (step > 1e-7) {
    bool improved = false;
    for (int t = 0; t < rank; t++)
      for (double sgn : {1.0, -1.0}) {
        Eigen::VectorXd v = best_v + sgn * step * Eigen::VectorXd::Unit(rank, t);
        v.normalize();
        double f = defect2(mc, v);
        if (f < best) {
          best = f;
          best_v = v;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
  }
  est.alpha_hat = std::sqrt(std::max(0.0, best));
  est.witness = best_v;
  return est;
}

HolonomyReport check_holonomy_bounds(const Bundle& bundle, const Discretization& disc,
                                     double lambda1_E) {
  HolonomyReport rep;
  rep.nu = disc.nu_X;
  rep.diam = diameter(*disc.mesh);
  rep.lambda1_E = lambda1_E;

  TreeGauge gauge = tree_gauge(bundle, disc, 0);
  std::vector<LoopHolonomy> loops = fundamental_loops(disc, gauge, 7.0 * rep.diam);
  rep.loop_count = static_cast<int>(loops.size());

  // One fundamental system serves both constants: flat holonomy only
  // depends on the cycle space.
  AlphaEstimate a = estimate_alpha(loops, bundle.rank);
  rep.alpha = a.alpha_hat;
  rep.alpha_prime = a.alpha_hat;

  Potential zero;
  SymmetricOperator delta = assemble_twisted(gauge.connection, zero);
  SpectrumResult sr = eigs(delta, 1);
  rep.lambda1_net = sr.eigenvalues[0];

  rep.degenerate = rep.alpha <= 1e-8;
  if (!rep.degenerate) {
    rep.ratio_lower = rep.lambda1_net * rep.diam * rep.diam / (rep.alpha * rep.alpha);
    rep.ratio_upper = rep.lambda1_net / (rep.alpha_prime * rep.alpha_prime);
  }

  // Commutant of the generated holonomy: kernel dimension of
  // Y -> sum_c (H_c Y - Y H_c).
  const int n = bundle.rank;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n * n, n * n);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  for (const auto& l : loops) {
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
    // vec(HY - YH) = (I (x) H - H^T (x) I) vec(Y), column-major vec.
    for (int c = 0; c < n; c++)
      for (int r = 0; r < n; r++)
        for (int c2 = 0; c2 < n; c2++)
          for (int r2 = 0; r2 < n; r2++)
            op(c * n + r, c2 * n + r2) =
                (c == c2 ? l.holonomy(r, r2) : 0.0) - (r == r2 ? l.holonomy(c2, c) : 0.0);
    gram += op.transpose() * op;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  double tol = 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff());
  rep.commutant_dim = 0;
  for (int i = 0; i < n * n; i++)
    if (es.eigenvalues()[i] <= tol) rep.commutant_dim++;

  bool has_holonomy = false;
  for (const auto& l : loops)
    if ((l.holonomy - eye).cwiseAbs().maxCoeff() > 1e-8) has_holonomy = true;
  rep.reducible_flag = has_holonomy && rep.alpha <= 1e-8;
  return rep;
}

} // namespace bspec
