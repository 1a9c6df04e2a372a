#include "bundlespectra/twisted.hpp"

#include "bundlespectra/errors.hpp"
#include "bundlespectra/parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace bspec {

std::string twist_mode_name(TwistMode m) {
  return m == TwistMode::Harmonic ? "harmonic" : "rank_one";
}

TwistModeChoice twist_mode_choice_from_name(const std::string& name) {
  if (name == "auto") return TwistModeChoice::Auto;
  if (name == "harmonic") return TwistModeChoice::Harmonic;
  if (name == "rank_one") return TwistModeChoice::RankOne;
  throw ValidationError("unknown twist mode: " + name + " (want auto|harmonic|rank_one)");
}

TwistMode resolve_mode(BundleClass hint, TwistModeChoice choice) {
  switch (choice) {
    case TwistModeChoice::Auto:
      return hint == BundleClass::RankOneComplex ? TwistMode::RankOne : TwistMode::Harmonic;
    case TwistModeChoice::Harmonic:
      return TwistMode::Harmonic;
    case TwistModeChoice::RankOne:
      if (hint != BundleClass::Flat && hint != BundleClass::RankOneComplex)
        throw ValidationError("mode mismatch: rank_one construction needs a flat or complex "
                              "rank-one bundle");
      return TwistMode::RankOne;
  }
  return TwistMode::Harmonic;
}

int TwistedGraph::find(int p, int q) const {
  const auto& list = nbr[p];
  for (size_t t = 0; t < list.size(); t++)
    if (list[t] == q) return static_cast<int>(t);
  return -1;
}

const Eigen::MatrixXd& TwistedGraph::at(int p, int q) const {
  int t = find(p, q);
  if (t < 0) throw ValidationError("A(p,q) requested for a non-neighbor pair");
  return A[p][t];
}

double TwistedGraph::max_change_norm() const {
  double m = 0.0;
  for (const auto& row : A)
    for (const auto& a : row) m = std::max(m, a.operatorNorm());
  return m;
}

Eigen::MatrixXd change_of_basis(const Frame& frame_p, const Frame& frame_q, int mesh_vertex) {
  if (!frame_p.contains(mesh_vertex) || !frame_q.contains(mesh_vertex))
    throw ValidationError("change of basis outside the frame overlap");
  Eigen::MatrixXd sp = frame_p.frame_at(mesh_vertex);
  Eigen::MatrixXd sq = frame_q.frame_at(mesh_vertex);
  Eigen::MatrixXd gram = sq.transpose() * sq;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0 || lmax / lmin > 1e3)
    throw NumericError("frame degenerate at overlap vertex (Gram condition > 1e3)");
  return gram.ldlt().solve(sq.transpose() * sp);
}

namespace {

// Midpoint of net points p = X[i], q = X[j] read off the cached Dijkstra
// tree of the smaller net index, so both directions share one ball B_pq.
int cached_midpoint(const Discretization& disc, int i, int j) {
  const Ball& b = disc.ball10[i];
  std::vector<int> local(disc.mesh->vertex_count(), -1);
  // Local walk: only the path vertices are touched, so a map would do; the
  // dense array keeps it simple and this runs once per unordered pair.
  for (size_t t = 0; t < b.members.size(); t++) local[b.members[t]] = static_cast<int>(t);
  int q = disc.X[j];
  if (local[q] < 0) throw NumericError("net neighbor left the cached ball");
  double half = b.dist[local[q]] / 2.0;
  int best = q;
  double best_err = std::abs(b.dist[local[q]] - half);
  for (int v = q; v != -1;) {
    int lv = local[v];
    double err = std::abs(b.dist[lv] - half);
    if (err < best_err || (err == best_err && v < best)) {
      best = v;
      best_err = err;
    }
    v = b.preds[lv];
  }
  return best;
}

} // namespace

TwistedGraph connection_matrices(const Bundle& bundle, const Discretization& disc,
                                 const std::vector<Frame>& frames, TwistMode mode) {
  const int nx = disc.size();
  const int n = bundle.rank;
  TwistedGraph g;
  g.rank = n;
  g.nbr = disc.neighbors;
  g.A.resize(nx);
  for (int i = 0; i < nx; i++)
    g.A[i].assign(disc.neighbors[i].size(), Eigen::MatrixXd::Zero(n, n));

  if (mode == TwistMode::Harmonic) {
    parallel_for(nx, [&](int i) {
      for (size_t t = 0; t < disc.neighbors[i].size(); t++) {
        int j = disc.neighbors[i][t];
        g.A[i][t] = change_of_basis(frames[i], frames[j], disc.X[j]);
      }
    });
    return g;
  }

  // Rank-one mode: averages over the midpoint balls, one ball per unordered
  // pair.
  struct Pair {
    int i, j, ti, tj;
  };
  std::vector<Pair> pairs;
  for (int i = 0; i < nx; i++)
    for (size_t t = 0; t < disc.neighbors[i].size(); t++) {
      int j = disc.neighbors[i][t];
      if (j < i) continue;
      pairs.push_back({i, j, static_cast<int>(t), g.find(j, i)});
    }
  std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> results(pairs.size());

  parallel_for(static_cast<int>(pairs.size()), [&](int idx) {
    const Pair& pr = pairs[idx];
    int mid = cached_midpoint(disc, pr.i, pr.j);
    Ball bpq = ball(*disc.mesh, mid, 5.0 * disc.epsilon);
    std::vector<char> inside(disc.mesh->vertex_count(), 0);
    for (int v : bpq.members) inside[v] = 1;
    // B_pq must contain B(p,3eps) and B(q,3eps).
    for (int side : {pr.i, pr.j}) {
      Ball b3 = disc.ball_at(side, 3.0 * disc.epsilon);
      for (int v : b3.members)
        if (!inside[v]) throw NumericError("midpoint ball fails to cover the 3*eps balls");
    }
    Eigen::MatrixXd acc_pq = Eigen::MatrixXd::Zero(frames[pr.i].rank(), frames[pr.i].rank());
    Eigen::MatrixXd acc_qp = acc_pq;
    for (int v : bpq.members) {
      double m = disc.mesh->measure[v];
      acc_pq += m * change_of_basis(frames[pr.i], frames[pr.j], v);
      acc_qp += m * change_of_basis(frames[pr.j], frames[pr.i], v);
    }
    results[idx] = {acc_pq / bpq.volume, acc_qp / bpq.volume};
  });

  for (size_t idx = 0; idx < pairs.size(); idx++) {
    const Pair& pr = pairs[idx];
    g.A[pr.i][pr.ti] = results[idx].first;
    g.A[pr.j][pr.tj] = results[idx].second;
  }
  return g;
}

Potential build_potential(const Discretization& disc, const std::vector<Frame>& frames,
                          TwistMode mode) {
  const int nx = disc.size();
  const int n = frames.empty() ? 0 : frames[0].rank();
  const double e2 = disc.epsilon * disc.epsilon;
  // Numerical kernel values map to an exact zero so flat bundles produce an
  // identically zero potential.
  auto clamp = [](double v) { return v <= 1e-10 ? 0.0 : v; };

  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(n, nx);
  if (mode == TwistMode::Harmonic) {
    for (int i = 0; i < nx; i++)
      for (int c = 0; c < n; c++)
        diag(c, i) = c < frames[i].mu ? clamp(e2 * frames[i].ball_eigenvalues[c]) : 1.0;
  } else {
    for (int i = 0; i < nx; i++) {
      double v = frames[i].ball_eigenvalues[0];
      for (int j : disc.neighbors[i]) v += frames[j].ball_eigenvalues[0];
      diag.col(i).setConstant(clamp(e2 * v));
    }
  }
  Potential pot;
  if (diag.cwiseAbs().maxCoeff() > 0.0) pot.diag = diag;
  return pot;
}

SymmetricOperator assemble_twisted(const TwistedGraph& graph, const Potential& potential) {
  const int n = graph.rank;
  const int nx = graph.size();
  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> ts;

  for (int p = 0; p < nx; p++) {
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(n, n);
    for (size_t t = 0; t < graph.nbr[p].size(); t++) {
      int q = graph.nbr[p][t];
      const Eigen::MatrixXd& apq = graph.A[p][t];
      int back = graph.find(q, p);
      if (back < 0) throw ValidationError("twisted graph adjacency is not symmetric");
      const Eigen::MatrixXd& aqp = graph.A[q][back];
      diag += 0.5 * (Eigen::MatrixXd::Identity(n, n) + apq.transpose() * apq);
      Eigen::MatrixXd off = -0.5 * (aqp + apq.transpose());
      for (int a = 0; a < n; a++)
        for (int c = 0; c < n; c++)
          if (off(a, c) != 0.0) ts.push_back({p * n + a, q * n + c, off(a, c)});
    }
    if (!potential.zero())
      for (int a = 0; a < n; a++) diag(a, a) += potential.diag(a, p);
    for (int a = 0; a < n; a++)
      for (int c = 0; c < n; c++)
        if (diag(a, c) != 0.0) ts.push_back({p * n + a, p * n + c, diag(a, c)});
  }

  SymmetricOperator op;
  op.form.resize(nx * n, nx * n);
  op.form.setFromTriplets(ts.begin(), ts.end());
  op.mass = Eigen::VectorXd::Ones(nx * n);
  op.label = "twisted";

  Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(op.form.transpose()) - op.form;
  double asym = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
      asym = std::max(asym, std::abs(it.value()));
  if (asym > 1e-10) {
    std::ostringstream os;
    os << "twisted assembly asymmetric by " << asym;
    throw NumericError(os.str());
  }
  return op;
}

EdgeFunction apply_DA(const TwistedGraph& graph, const Eigen::VectorXd& f) {
  const int n = graph.rank;
  if (f.size() != graph.dim()) throw ValidationError("graph function has the wrong dimension");
  EdgeFunction ef;
  ef.values.resize(graph.size());
  for (int p = 0; p < graph.size(); p++) {
    ef.values[p].resize(graph.nbr[p].size());
    for (size_t t = 0; t < graph.nbr[p].size(); t++) {
      int q = graph.nbr[p][t];
      ef.values[p][t] = f.segment(q * n, n) - graph.A[p][t] * f.segment(p * n, n);
    }
  }
  return ef;
}

double edge_inner(const TwistedGraph& graph, const EdgeFunction& f, const EdgeFunction& g) {
  double s = 0.0;
  for (int p = 0; p < graph.size(); p++)
    for (size_t t = 0; t < graph.nbr[p].size(); t++) s += f.values[p][t].dot(g.values[p][t]);
  return 0.5 * s;
}

double potential_quad(const Potential& potential, const Eigen::VectorXd& f, int rank) {
  if (potential.zero()) return 0.0;
  double s = 0.0;
  for (int p = 0; p < potential.diag.cols(); p++)
    for (int c = 0; c < rank; c++)
      s += potential.diag(c, p) * f[p * rank + c] * f[p * rank + c];
  return s;
}

Eigen::VectorXd smooth(const Bundle& bundle, const Discretization& disc,
                       const std::vector<Frame>& frames, const Eigen::VectorXd& f) {
  const FineMesh& mesh = *bundle.mesh;
  const int n = bundle.rank;
  const int nv = mesh.vertex_count();
  if (f.size() != disc.size() * n) throw ValidationError("graph function has the wrong dimension");

  Eigen::VectorXd num = Eigen::VectorXd::Zero(nv * n);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(nv);
  const double r2 = 2.0 * disc.epsilon;
  for (int i = 0; i < disc.size(); i++) {
    const Frame& fr = frames[i];
    Eigen::VectorXd fi = f.segment(i * n, n);
    for (size_t t = 0; t < fr.verts.size(); t++) {
      if (fr.vdist[t] >= r2) break;
      double w = 1.0 - fr.vdist[t] / r2;
      int v = fr.verts[t];
      num.segment(v * n, n) += w * (fr.sections.middleRows(t * n, n) * fi);
      den[v] += w;
    }
  }
  for (int v = 0; v < nv; v++) {
    if (den[v] <= 0.0)
      throw NumericError("partition of unity has a hole: net fails to 2*eps-cover the mesh");
    num.segment(v * n, n) /= den[v];
  }
  return num;
}

Eigen::VectorXd discretize_section(const Discretization& disc, const std::vector<Frame>& frames,
                                   const Eigen::VectorXd& s) {
  const FineMesh& mesh = *disc.mesh;
  const int n = frames.empty() ? 0 : frames[0].rank();
  if (s.size() != mesh.vertex_count() * n)
    throw ValidationError("section has the wrong dimension");

  Eigen::VectorXd out = Eigen::VectorXd::Zero(disc.size() * n);
  const double r3 = 3.0 * disc.epsilon;
  for (int i = 0; i < disc.size(); i++) {
    const Frame& fr = frames[i];
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    double vol = 0.0;
    for (size_t t = 0; t < fr.verts.size(); t++) {
      if (fr.vdist[t] >= r3) break;
      int v = fr.verts[t];
      Eigen::MatrixXd sx = fr.sections.middleRows(t * n, n);
      Eigen::MatrixXd gram = sx.transpose() * sx;
      Eigen::VectorXd coords = gram.ldlt().solve(sx.transpose() * s.segment(v * n, n));
      acc += mesh.measure[v] * coords;
      vol += mesh.measure[v];
    }
    out.segment(i * n, n) = acc / vol;
  }
  return out;
}

} // namespace bspec
