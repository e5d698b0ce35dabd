// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_NUMKERNEL_HPP
#define MRHS_NUMKERNEL_HPP

#include <span>
#include <vector>

#include "mrhs/types.hpp"

namespace mrhs
{

// Relative thresholds shared by the kernels below.
inline constexpr Real kBreakdownTol = 1e-14;
inline constexpr Real kRankTol = 1e-14;
inline constexpr Real kPivotTol = 1e-14;

struct LeastSquaresResult
{
  Vector solution;
  Real residual_norm = 0.0;
};

/// Minimizes ||c - H d||_2 for a p x q matrix H with p >= q via Givens QR.
/// Throws RankDeficientError when a diagonal entry of R falls below kRankTol * ||H||_F.
LeastSquaresResult least_squares(const Matrix &h, std::span<const Scalar> c);

/// Column-incremental QR least squares with any number of right-hand sides.
///
/// Columns are pushed one at a time; each may be longer than the previous one (the
/// row count grows), which covers Arnoldi Hessenberg matrices, band-Hessenberg block
/// matrices, and deflated matrices whose leading block is full. Earlier columns are
/// implicitly zero in rows beyond their length. Residual norms are available after
/// every push at O(1) cost.
class GivensLeastSquares
{
public:
  explicit GivensLeastSquares(const Matrix &rhs);
  explicit GivensLeastSquares(std::span<const Scalar> rhs);

  void push_column(std::span<const Scalar> column);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index num_rhs() const { return static_cast<Index>(g_.size()); }

  Real residual_norm(Index rhs = 0) const;
  Vector solve(Index rhs = 0) const;
  Matrix solve_all() const;

  /// Orthonormal basis (rows x (rows - cols)) of the orthogonal complement of the
  /// range of the pushed matrix, i.e. the null space of its adjoint.
  Matrix null_space_basis() const;

private:
  struct Rotation
  {
    Index row;  // acts on rows (row, row + 1)
    Real c;
    Scalar s;
  };

  void grow_rows(Index rows);

  std::vector<Rotation> rotations_;
  std::vector<std::vector<Scalar>> r_;  // column j holds R(0..j, j)
  std::vector<std::vector<Scalar>> g_;  // rotated right-hand sides
  Index rows_ = 0;
  Index cols_ = 0;
  Real norm_sq_ = 0.0;
};

struct OrthoResult
{
  Vector v_orth;
  Vector coeffs;
  Real new_norm = 0.0;
  bool breakdown = false;
};

/// Modified Gram-Schmidt against the first `ncols` columns of `basis`, followed by one
/// full reorthogonalization pass. Reconstruction: v = basis * coeffs + new_norm * v_orth.
/// `breakdown` is set when new_norm < kBreakdownTol * ||v||; v_orth is then left
/// unnormalized.
OrthoResult orthonormalize_against(Vector v, const Matrix &basis, Index ncols);

/// In-place variant used by the Arnoldi loops. Writes ncols coefficients to `coeffs`.
Real orthonormalize_in_place(std::span<Scalar> v, const Matrix &basis, Index ncols,
                             std::span<Scalar> coeffs, bool &breakdown);

struct EigenPair
{
  Scalar value;
  Vector vector;  // unit 2-norm
};

/// Maximum number of QR sweeps per eigenvalue before small_dense_eig gives up.
inline constexpr Index kEigSweepsPerValue = 30;

/// All eigenpairs of a general complex square matrix: Householder reduction to
/// Hessenberg form, single-shift complex QR to Schur form, triangular back
/// substitution for the eigenvectors. Throws ConvergenceError past
/// kEigSweepsPerValue * q sweeps.
std::vector<EigenPair> small_dense_eig(const Matrix &m);

/// Eigenvalues only (same iteration, no vector accumulation cost saved; convenience).
std::vector<Scalar> small_dense_eigenvalues(const Matrix &m);

/// LU with partial pivoting. Throws SingularMatrixError for pivots below
/// kPivotTol * ||M||_F.
Vector small_dense_solve(const Matrix &m, std::span<const Scalar> rhs);
Matrix small_dense_solve(const Matrix &m, const Matrix &rhs);

}  // namespace mrhs

#endif  // MRHS_NUMKERNEL_HPP
