#ifndef BUNDLESPECTRA_SPECTRAL_HPP
#define BUNDLESPECTRA_SPECTRAL_HPP

#include "bundlespectra/bundle.hpp"
#include "bundlespectra/geometry.hpp"

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace bspec {

// Symmetric pencil K v = lambda M v with positive diagonal mass M. The
// quadratic form K is assembled sparse; mass defines the inner product.
struct SymmetricOperator {
  Eigen::SparseMatrix<double> form;
  Eigen::VectorXd mass;
  std::string label;

  int dim() const { return static_cast<int>(form.rows()); }
  double quad(const Eigen::VectorXd& v) const { return v.dot(form * v); }
  double mass_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(mass.cwiseProduct(b));
  }
  // Largest |eigenvalue| bound (Gershgorin in the mass-scaled coordinates).
  double scale() const;
};

struct SpectrumResult {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors; // mass-orthonormal columns
  Eigen::VectorXd residuals;    // |Kv - lambda Mv| / (|v|_M * scale)
};

// Quadratic form sum_edges w_e |s(v) - U(u,v) s(u)|^2 against the vertex
// measures. Structured grids use w_e = (m_u + m_v) / (2 len^2), which is the
// standard finite-difference stencil; triangulations use half-cotangent
// weights. Eigenvalues come out in continuum units (1/length^2).
SymmetricOperator rough_laplacian(const Bundle& bundle);

// Variational (natural/Neumann) restriction: form summed over edges with
// both endpoints inside the ball, mass restricted to the members. Rows
// follow ball.members order, rank entries per vertex.
SymmetricOperator neumann_ball_operator(const Bundle& bundle, const Ball& b);

// k smallest eigenpairs. Dense solve for small problems, block Lanczos with
// a shift-inverted sparse factorization for large ones; deterministic
// (fixed seeds, fixed sign convention: first significant coordinate
// positive).
SpectrumResult eigs(const SymmetricOperator& op, int k);

double rayleigh(const SymmetricOperator& op, const Eigen::VectorXd& v);

} // namespace bspec

#endif
