#include "bundlespectra/spectral.hpp"

#include "bundlespectra/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace bspec {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// Problems at or below this size go to the dense path. Dense LAPACK-style
// solves above ~1500 take minutes at desk scale while the factorized
// Lanczos resolves the low end of the spectrum in milliseconds.
constexpr int kDenseLimit = 1500;

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  double amax = v.cwiseAbs().maxCoeff();
  if (amax == 0.0) return;
  for (int i = 0; i < v.size(); i++) {
    if (std::abs(v[i]) > 1e-12 * amax) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

SpectrumResult dense_eigs(const SymmetricOperator& op, int k) {
  const int n = op.dim();
  Eigen::VectorXd si = op.mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd b = Eigen::MatrixXd(op.form);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) b(i, j) *= si[i] * si[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  if (es.info() != Eigen::Success) throw NumericError("dense eigensolver failed");
  SpectrumResult res;
  res.eigenvalues = es.eigenvalues().head(k);
  res.eigenvectors.resize(n, k);
  for (int c = 0; c < k; c++) {
    res.eigenvectors.col(c) = si.cwiseProduct(es.eigenvectors().col(c));
    fix_sign(res.eigenvectors.col(c));
  }
  res.residuals.resize(k);
  double sc = std::max(op.scale(), 1e-300);
  for (int c = 0; c < k; c++) {
    Eigen::VectorXd v = res.eigenvectors.col(c);
    double num = (op.form * v - res.eigenvalues[c] * op.mass.cwiseProduct(v)).norm();
    res.residuals[c] = num / (std::sqrt(op.mass_inner(v, v)) * sc);
  }
  return res;
}

// Block Lanczos on T = M^{1/2} (K + tau M)^{-1} M^{1/2}; the top of T is the
// bottom of the pencil. Full reorthogonalization, banded Rayleigh-Ritz,
// residuals verified on the original pencil before accepting.
SpectrumResult lanczos_eigs(const SymmetricOperator& op, int k) {
  const int n = op.dim();
  const double sc = std::max(op.scale(), 1e-300);
  const double tau = 1e-5 * sc;

  Eigen::VectorXd sm = op.mass.cwiseSqrt();
  Eigen::VectorXd smi = sm.cwiseInverse();
  SpMat c = op.form;
  {
    SpMat taum(n, n);
    std::vector<Trip> ts;
    ts.reserve(n);
    for (int i = 0; i < n; i++) ts.push_back({i, i, tau * op.mass[i]});
    taum.setFromTriplets(ts.begin(), ts.end());
    c += taum;
  }
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(c);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("shift-invert factorization failed (operator not PSD?)");

  auto apply_t = [&](const Eigen::MatrixXd& w) -> Eigen::MatrixXd {
    Eigen::MatrixXd rhs = sm.asDiagonal() * w;
    Eigen::MatrixXd sol = ldlt.solve(rhs);
    return sm.asDiagonal() * sol;
  };

  const int b = std::max(2, std::min(k, 4));
  const int mcap = std::min(n, std::max(6 * k + 60, 120));
  const int maxblocks = (mcap + b - 1) / b;

  Eigen::MatrixXd q(n, b * (maxblocks + 1));
  Eigen::MatrixXd band = Eigen::MatrixXd::Zero(b * (maxblocks + 1), b * (maxblocks + 1));

  std::mt19937 rng(123457u);
  std::normal_distribution<double> nd;
  {
    Eigen::MatrixXd z(n, b);
    for (int j = 0; j < b; j++)
      for (int i = 0; i < n; i++) z(i, j) = nd(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    q.leftCols(b) = qr.householderQ() * Eigen::MatrixXd::Identity(n, b);
  }

  SpectrumResult res;
  for (int j = 0; j < maxblocks; j++) {
    Eigen::MatrixXd qj = q.middleCols(j * b, b);
    Eigen::MatrixXd w = apply_t(qj);
    band.block(j * b, j * b, b, b) = qj.transpose() * w;
    // Reorthogonalize against everything computed so far (twice).
    auto qall = q.leftCols((j + 1) * b);
    w -= qall * (qall.transpose() * w);
    w -= qall * (qall.transpose() * w);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
    Eigen::MatrixXd r =
        qr.matrixQR().topRows(b).template triangularView<Eigen::Upper>();
    q.middleCols((j + 1) * b, b) = qr.householderQ() * Eigen::MatrixXd::Identity(n, b);
    band.block((j + 1) * b, j * b, b, b) = r;
    band.block(j * b, (j + 1) * b, b, b) = r.transpose();

    int m = (j + 1) * b;
    if (m < k + b && j + 1 < maxblocks) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(band.topLeftCorner(m, m));
    // Cheap Ritz residual screen via the next coupling block.
    Eigen::MatrixXd bottom = es.eigenvectors().bottomRows(b);
    bool promising = true;
    for (int t = 0; t < k; t++) {
      double theta = es.eigenvalues()(m - 1 - t);
      double bound = (r * bottom.col(m - 1 - t)).norm();
      if (theta <= 0.0 || bound > 1e-11 * theta) promising = false;
    }
    if (!promising && j + 1 < maxblocks) continue;

    // Assemble candidates, verify on the pencil.
    Eigen::VectorXd lam(k);
    Eigen::MatrixXd vecs(n, k);
    Eigen::VectorXd resid(k);
    bool accepted = true;
    for (int t = 0; t < k; t++) {
      double theta = es.eigenvalues()(m - 1 - t);
      if (theta <= 0.0) {
        accepted = false;
        break;
      }
      lam[t] = 1.0 / theta - tau;
      Eigen::VectorXd w_ritz = q.leftCols(m) * es.eigenvectors().col(m - 1 - t);
      Eigen::VectorXd v = smi.cwiseProduct(w_ritz);
      double vm = std::sqrt(op.mass_inner(v, v));
      v /= vm;
      vecs.col(t) = v;
      double num = (op.form * v - lam[t] * op.mass.cwiseProduct(v)).norm();
      resid[t] = num / sc;
      if (resid[t] > 1e-10) accepted = false;
    }
    if (!accepted && j + 1 < maxblocks) continue;
    if (!accepted) {
      std::ostringstream os;
      os << "eigensolver did not converge within the iteration cap (dim " << n << ", k " << k
         << "); worst residual " << resid.maxCoeff();
      throw NumericError(os.str());
    }

    // Ascending order with deterministic signs.
    std::vector<int> idx(k);
    for (int t = 0; t < k; t++) idx[t] = t;
    std::sort(idx.begin(), idx.end(), [&](int a, int bb) { return lam[a] < lam[bb]; });
    res.eigenvalues.resize(k);
    res.eigenvectors.resize(n, k);
    res.residuals.resize(k);
    for (int t = 0; t < k; t++) {
      res.eigenvalues[t] = lam[idx[t]];
      res.eigenvectors.col(t) = vecs.col(idx[t]);
      fix_sign(res.eigenvectors.col(t));
      res.residuals[t] = resid[idx[t]];
    }
    return res;
  }
  throw NumericError("eigensolver did not converge");
}

} // namespace

double SymmetricOperator::scale() const {
  double g = 0.0;
  Eigen::VectorXd si = mass.cwiseSqrt().cwiseInverse();
  for (int outer = 0; outer < form.outerSize(); ++outer) {
    double row = 0.0;
    for (SpMat::InnerIterator it(form, outer); it; ++it)
      row += std::abs(it.value()) * si[it.row()] * si[it.col()];
    g = std::max(g, row);
  }
  return g;
}

namespace {

// Edge weights of the rough quadratic form. Structured grids use the
// finite-difference stencil, triangulations half-cotangent weights.
std::vector<double> form_weights(const FineMesh& mesh) {
  std::vector<double> weight(mesh.edges.size(), 0.0);
  if (mesh.kind == ManifoldKind::Sphere) {
    std::map<std::pair<int, int>, int> eidx;
    for (size_t e = 0; e < mesh.edges.size(); e++)
      eidx[std::minmax(mesh.edges[e].u, mesh.edges[e].v)] = static_cast<int>(e);
    for (const auto& f : mesh.tri_faces) {
      for (int c = 0; c < 3; c++) {
        int a = f[c], b = f[(c + 1) % 3], opp = f[(c + 2) % 3];
        Eigen::Vector3d ea = mesh.positions[a] - mesh.positions[opp];
        Eigen::Vector3d eb = mesh.positions[b] - mesh.positions[opp];
        double cot = ea.dot(eb) / ea.cross(eb).norm();
        weight[eidx[std::minmax(a, b)]] += 0.5 * cot;
      }
    }
  } else {
    for (size_t e = 0; e < mesh.edges.size(); e++) {
      const MeshEdge& ed = mesh.edges[e];
      weight[e] = (mesh.measure[ed.u] + mesh.measure[ed.v]) / (2.0 * ed.len * ed.len);
    }
  }
  return weight;
}

} // namespace

SymmetricOperator rough_laplacian(const Bundle& bundle) {
  const FineMesh& mesh = *bundle.mesh;
  const int n = bundle.rank;
  const int nv = mesh.vertex_count();

  std::vector<double> weight = form_weights(mesh);

  std::vector<Trip> ts;
  ts.reserve(mesh.edges.size() * 4 * n * n);
  for (size_t e = 0; e < mesh.edges.size(); e++) {
    const MeshEdge& ed = mesh.edges[e];
    const Eigen::MatrixXd& u = bundle.transport[e];
    double w = weight[e];
    for (int a = 0; a < n; a++) {
      ts.push_back({ed.v * n + a, ed.v * n + a, w});
      ts.push_back({ed.u * n + a, ed.u * n + a, w});
      for (int bb = 0; bb < n; bb++) {
        ts.push_back({ed.v * n + a, ed.u * n + bb, -w * u(a, bb)});
        ts.push_back({ed.u * n + bb, ed.v * n + a, -w * u(a, bb)});
      }
    }
  }
  SymmetricOperator op;
  op.form.resize(nv * n, nv * n);
  op.form.setFromTriplets(ts.begin(), ts.end());
  op.mass.resize(nv * n);
  for (int v = 0; v < nv; v++)
    for (int a = 0; a < n; a++) op.mass[v * n + a] = mesh.measure[v];
  op.label = "rough";
  return op;
}

SymmetricOperator neumann_ball_operator(const Bundle& bundle, const Ball& b) {
  const FineMesh& mesh = *bundle.mesh;
  const int n = bundle.rank;
  const int nb = static_cast<int>(b.members.size());
  if (nb < n + 2) throw ValidationError("ball too small for a Neumann eigenproblem");

  std::vector<int> local(mesh.vertex_count(), -1);
  for (int i = 0; i < nb; i++) local[b.members[i]] = i;

  std::vector<double> weight = form_weights(mesh);
  std::vector<Trip> ts;
  for (size_t e = 0; e < mesh.edges.size(); e++) {
    const MeshEdge& ed = mesh.edges[e];
    int lu = local[ed.u], lv = local[ed.v];
    if (lu < 0 || lv < 0) continue;
    double w = weight[e];
    const Eigen::MatrixXd& u = bundle.transport[e];
    for (int a = 0; a < n; a++) {
      ts.push_back({lv * n + a, lv * n + a, w});
      ts.push_back({lu * n + a, lu * n + a, w});
      for (int bb = 0; bb < n; bb++) {
        ts.push_back({lv * n + a, lu * n + bb, -w * u(a, bb)});
        ts.push_back({lu * n + bb, lv * n + a, -w * u(a, bb)});
      }
    }
  }
  SymmetricOperator op;
  op.form.resize(nb * n, nb * n);
  op.form.setFromTriplets(ts.begin(), ts.end());
  op.mass.resize(nb * n);
  for (int i = 0; i < nb; i++)
    for (int a = 0; a < n; a++) op.mass[i * n + a] = mesh.measure[b.members[i]];
  op.label = "neumann_ball";
  return op;
}

SpectrumResult eigs(const SymmetricOperator& op, int k) {
  if (k < 1) throw ValidationError("eigs needs k >= 1");
  if (k > op.dim()) throw ValidationError("eigs needs k <= operator dimension");
  if (op.dim() <= kDenseLimit || k > op.dim() / 3) return dense_eigs(op, k);
  return lanczos_eigs(op, k);
}

double rayleigh(const SymmetricOperator& op, const Eigen::VectorXd& v) {
  double m = op.mass_inner(v, v);
  if (m <= 0.0) throw ValidationError("rayleigh quotient of the zero vector");
  return op.quad(v) / m;
}

} // namespace bspec
