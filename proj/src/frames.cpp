#include "bundlespectra/frames.hpp"

#include "bundlespectra/errors.hpp"
#include "bundlespectra/parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace bspec {

FrameConfig FrameConfig::defaults(int rank, double epsilon) {
  FrameConfig c;
  c.alpha = 1.0 / (2.0 * (rank + 1));
  c.delta = 0.05 * std::pow(M_PI / (10.0 * epsilon), 2);
  return c;
}

Eigen::MatrixXd Frame::frame_at(int mesh_vertex) const {
  const int n = rank();
  int l = local[mesh_vertex];
  if (l < 0) throw ValidationError("vertex outside the frame's ball");
  return sections.block(l * n, 0, n, n);
}

int compute_mu(const Eigen::VectorXd& ball_eigenvalues, double delta, int rank) {
  if (ball_eigenvalues.size() < rank)
    throw ValidationError("ball spectrum shorter than the bundle rank");
  int mu = 0;
  for (int i = 0; i < rank; i++)
    if (ball_eigenvalues[i] <= delta) mu = i + 1;
  return mu;
}

namespace {

// Parallel transport of the fiber at the ball center along the Dijkstra
// predecessor tree ("radial geodesics"). Returns per-member transport
// matrices T_x with e(x) = T_x e(p); members are (dist,id)-sorted so a
// predecessor always precedes its children.
std::vector<Eigen::MatrixXd> tree_transports(const Bundle& bundle, const Ball& b) {
  const int n = bundle.rank;
  const int nb = static_cast<int>(b.members.size());
  std::vector<int> local(bundle.mesh->vertex_count(), -1);
  for (int i = 0; i < nb; i++) local[b.members[i]] = i;
  std::vector<Eigen::MatrixXd> t(nb);
  t[0] = Eigen::MatrixXd::Identity(n, n);
  for (int i = 1; i < nb; i++) {
    int pr = b.preds[i];
    int lp = pr >= 0 ? local[pr] : -1;
    if (lp < 0 || lp >= i) throw NumericError("ball predecessor tree is inconsistent");
    t[i] = bundle.transport_between(pr, b.members[i]) * t[lp];
  }
  return t;
}

struct BallSolve {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors; // mass-orthonormal, rows in ball order
};

BallSolve solve_ball(const Bundle& bundle, const Ball& b, int count) {
  SymmetricOperator op = neumann_ball_operator(bundle, b);
  int k = std::min(count, op.dim());
  SpectrumResult sr = eigs(op, k);
  return {sr.eigenvalues, sr.eigenvectors};
}

} // namespace

namespace detail {

Frame build_frame_with_solve(const Bundle& bundle, const Discretization& disc, int net_index,
                             const FrameConfig& config, const BallSolve& solve) {
  const FineMesh& mesh = *bundle.mesh;
  const int n = bundle.rank;
  const Ball& b10 = disc.ball10[net_index];
  const int nb = static_cast<int>(b10.members.size());

  Frame fr;
  fr.net_index = net_index;
  fr.p = disc.X[net_index];
  fr.verts = b10.members;
  fr.vdist = b10.dist;
  fr.ball_volume = b10.volume;
  fr.local.assign(mesh.vertex_count(), -1);
  for (int i = 0; i < nb; i++) fr.local[b10.members[i]] = i;
  fr.ball_eigenvalues = solve.values;
  fr.mu = compute_mu(solve.values, config.delta, n);

  // Mass metric for section-space inner products.
  Eigen::VectorXd mvec(nb);
  for (int i = 0; i < nb; i++) mvec[i] = mesh.measure[b10.members[i]];

  auto mass_ip = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& c) {
    double s = 0.0;
    for (int i = 0; i < nb; i++)
      for (int t = 0; t < n; t++) s += mvec[i] * a[i * n + t] * c[i * n + t];
    return s;
  };

  std::vector<Eigen::MatrixXd> tree = tree_transports(bundle, b10);

  // Mass-normalized parallel extensions of the coordinate basis at p.
  Eigen::MatrixXd par(nb * n, n);
  for (int i = 0; i < nb; i++) par.block(i * n, 0, n, n) = tree[i];
  double par_norm = std::sqrt(mvec.sum());
  par /= par_norm;

  // Canonicalize degenerate eigenvalue blocks among the first n pairs:
  // inside each cluster the solver's basis is arbitrary, so replace it by
  // the projections of the parallel candidates. Flat kernels then reproduce
  // parallel frames exactly, and the whole construction becomes gauge
  // covariant.
  Eigen::MatrixXd vecs = solve.vectors.leftCols(std::min<int>(n, solve.vectors.cols()));
  const int have = static_cast<int>(vecs.cols());
  double scale_ref = std::max({std::abs(solve.values[solve.values.size() - 1]), config.delta,
                               1e-12});
  double cluster_tol = 1e-7 * scale_ref;
  for (int a = 0; a < have;) {
    int bend = a + 1;
    while (bend < have && solve.values[bend] - solve.values[bend - 1] <= cluster_tol) bend++;
    int m = bend - a;
    if (m > 1 || (m == 1 && std::abs(solve.values[a]) <= cluster_tol)) {
      // Coefficients of the candidates in the block's orthonormal basis.
      Eigen::MatrixXd w = vecs.middleCols(a, m);
      std::vector<Eigen::VectorXd> picked;
      for (int cand = 0; cand < n && static_cast<int>(picked.size()) < m; cand++) {
        Eigen::VectorXd y(m);
        for (int t = 0; t < m; t++) y[t] = mass_ip(w.col(t), par.col(cand));
        for (const auto& prev : picked) y -= prev.dot(y) * prev;
        if (y.norm() >= 1e-6) picked.push_back(y.normalized());
      }
      if (static_cast<int>(picked.size()) == m) {
        Eigen::MatrixXd mix(m, m);
        for (int t = 0; t < m; t++) mix.col(t) = picked[t];
        vecs.middleCols(a, m) = (w * mix).eval();
      }
    }
    a = bend;
  }

  // Pointwise-orthogonal choice inside J-degenerate pairs.
  if (bundle.complex_structure && n == 2) {
    for (int a = 0; a + 1 < have;) {
      if (solve.values[a + 1] - solve.values[a] <= cluster_tol) {
        const Eigen::Matrix2d& j = *bundle.complex_structure;
        for (int i = 0; i < nb; i++)
          vecs.block(i * n, a + 1, n, 1) = j * vecs.block(i * n, a, n, 1);
        a += 2;
      } else {
        a += 1;
      }
    }
  }

  // Assemble sections: eigensections scaled to int <e_k,e_l> = delta_kl * V,
  // then an orthonormal completion at p extended by parallel transport.
  fr.sections.resize(nb * n, n);
  double sqv = std::sqrt(b10.volume);
  for (int i = 0; i < fr.mu; i++) fr.sections.col(i) = vecs.col(i) * sqv;

  if (fr.mu < n) {
    // Orthonormal complement of span{sigma_i(p)} at the center fiber,
    // built from the smallest-index coordinate vectors.
    Eigen::MatrixXd atp(n, fr.mu);
    for (int i = 0; i < fr.mu; i++) atp.col(i) = fr.sections.block(0, i, n, 1);
    Eigen::MatrixXd base(n, n);
    int picked = 0;
    // Orthonormalize the occupied directions first.
    for (int i = 0; i < fr.mu; i++) {
      Eigen::VectorXd v = atp.col(i);
      for (int t = 0; t < picked; t++) v -= base.col(t).dot(v) * base.col(t);
      if (v.norm() < 1e-8) throw NumericError("degenerate eigensection values at the center");
      base.col(picked++) = v.normalized();
    }
    int filled = fr.mu;
    for (int cand = 0; cand < n && filled < n; cand++) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, cand);
      for (int t = 0; t < picked; t++) v -= base.col(t).dot(v) * base.col(t);
      if (v.norm() < 1e-6) continue;
      v.normalize();
      base.col(picked++) = v;
      for (int i = 0; i < nb; i++) fr.sections.block(i * n, filled, n, 1) = tree[i] * v;
      filled++;
    }
    if (filled < n) throw NumericError("failed to complete the frame at the center fiber");
  }

  // Gram certification over B(p, 8 eps).
  double dev = 0.0;
  const double r8 = 8.0 * disc.epsilon;
  for (int i = 0; i < nb; i++) {
    if (fr.vdist[i] >= r8) break;
    Eigen::MatrixXd s = fr.sections.block(i * n, 0, n, n);
    Eigen::MatrixXd g = s.transpose() * s - Eigen::MatrixXd::Identity(n, n);
    dev = std::max(dev, g.cwiseAbs().maxCoeff());
  }
  fr.gram_dev = dev;
  fr.delta_prime = (n + 1) * dev;
  if (dev > config.alpha) {
    std::ostringstream os;
    os << "frame not almost-orthonormal at net point " << fr.p << " (gram_dev " << dev
       << " > alpha " << config.alpha << "): delta too large for this geometry";
    throw NumericError(os.str());
  }
  return fr;
}

} // namespace detail

Frame build_frame(const Bundle& bundle, const Discretization& disc, int net_index,
                  const FrameConfig& config) {
  if (net_index < 0 || net_index >= disc.size())
    throw ValidationError("net index outside the discretization");
  BallSolve solve = solve_ball(bundle, disc.ball10[net_index], bundle.rank + 2);
  return detail::build_frame_with_solve(bundle, disc, net_index, config, solve);
}

std::vector<Frame> build_all_frames(const Bundle& bundle, const Discretization& disc,
                                    const FrameConfig& config) {
  const int nx = disc.size();
  const int nv = bundle.mesh->vertex_count();
  std::vector<Frame> frames(nx);

  // Saturated balls share one eigensolve (the operator is the whole-mesh
  // Neumann problem in every case, up to row order).
  BallSolve shared;
  bool have_shared = false;
  Ball canonical;
  for (int i = 0; i < nx && !have_shared; i++) {
    if (static_cast<int>(disc.ball10[i].members.size()) == nv) {
      canonical = disc.ball10[i];
      shared = solve_ball(bundle, canonical, bundle.rank + 2);
      have_shared = true;
    }
  }

  parallel_for(nx, [&](int i) {
    const Ball& b = disc.ball10[i];
    if (have_shared && static_cast<int>(b.members.size()) == nv) {
      // Remap the shared solve into this ball's row order.
      BallSolve remapped;
      remapped.values = shared.values;
      remapped.vectors.resize(shared.vectors.rows(), shared.vectors.cols());
      const int n = bundle.rank;
      std::vector<int> canon_local(nv);
      for (int t = 0; t < nv; t++) canon_local[canonical.members[t]] = t;
      for (int t = 0; t < static_cast<int>(b.members.size()); t++) {
        int src = canon_local[b.members[t]];
        remapped.vectors.middleRows(t * n, n) = shared.vectors.middleRows(src * n, n);
      }
      frames[i] = detail::build_frame_with_solve(bundle, disc, i, config, remapped);
    } else {
      BallSolve solve = solve_ball(bundle, b, bundle.rank + 2);
      frames[i] = detail::build_frame_with_solve(bundle, disc, i, config, solve);
    }
  });
  return frames;
}

GramCertificate certify_gram(const Bundle& bundle, const Discretization& disc,
                             const Frame& frame) {
  const FineMesh& mesh = *bundle.mesh;
  const int n = bundle.rank;
  GramCertificate cert;

  const double r8 = 8.0 * disc.epsilon;
  const double r9 = 9.0 * disc.epsilon;
  for (size_t i = 0; i < frame.verts.size(); i++) {
    if (frame.vdist[i] >= r8) break;
    Eigen::MatrixXd s = frame.sections.block(i * n, 0, n, n);
    Eigen::MatrixXd g = s.transpose() * s - Eigen::MatrixXd::Identity(n, n);
    cert.gram_dev = std::max(cert.gram_dev, g.cwiseAbs().maxCoeff());
  }

  // Discrete |nabla e_i| sup over edges inside B(p, 9 eps).
  for (size_t i = 0; i < frame.verts.size(); i++) {
    if (frame.vdist[i] >= r9) break;
    int u = frame.verts[i];
    for (auto [v, e] : mesh.adj[u]) {
      int lv = frame.local[v];
      if (lv < 0 || frame.vdist[lv] >= r9) continue;
      const MeshEdge& ed = mesh.edges[e];
      Eigen::MatrixXd uu =
          (ed.u == u) ? bundle.transport[e] : bundle.transport[e].transpose().eval();
      for (int c = 0; c < n; c++) {
        Eigen::VectorXd a = frame.sections.block(i * n, c, n, 1);
        Eigen::VectorXd bb = frame.sections.block(lv * n, c, n, 1);
        double quot = (bb - uu * a).norm() / ed.len;
        if (c < frame.mu)
          cert.grad_sup_eigsec = std::max(cert.grad_sup_eigsec, quot);
        else
          cert.grad_sup_parallel = std::max(cert.grad_sup_parallel, quot);
      }
    }
  }
  return cert;
}

} // namespace bspec
