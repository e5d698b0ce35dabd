// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_OPERATORS_HPP
#define MRHS_OPERATORS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mrhs/types.hpp"

namespace mrhs
{

/// Abstract n x n operator. Implementations are immutable and may be shared by any
/// number of concurrent solve sessions.
class LinearOperator
{
public:
  virtual ~LinearOperator() = default;

  virtual Index dim() const = 0;

  /// y = A x
  virtual void apply(std::span<const Scalar> x, std::span<Scalar> y) const = 0;

  /// Average stored nonzeros per row, used to weight matvec cost in reports.
  virtual Real nnz_per_row() const { return static_cast<Real>(dim()); }
};

/// Compressed sparse row matrix. Column indices are strictly increasing within a row.
class CsrMatrix final : public LinearOperator
{
public:
  struct Triplet
  {
    Index row;
    Index col;
    Scalar value;
  };

  CsrMatrix() = default;
  CsrMatrix(Index n, std::vector<Index> row_ptr, std::vector<Index> col_idx,
            std::vector<Scalar> values);

  /// Builds from unordered (row, col, value) entries; duplicates are summed.
  static CsrMatrix from_triplets(Index n, std::vector<Triplet> entries);
  static CsrMatrix identity(Index n);
  static CsrMatrix from_dense(const Matrix &a);

  Index dim() const override { return n_; }
  void apply(std::span<const Scalar> x, std::span<Scalar> y) const override;
  Real nnz_per_row() const override;

  Index nnz() const { return static_cast<Index>(values_.size()); }
  const std::vector<Index> &row_ptr() const { return row_ptr_; }
  const std::vector<Index> &col_idx() const { return col_idx_; }
  const std::vector<Scalar> &values() const { return values_; }

  /// Stored value at (i, j), zero when not present.
  Scalar entry(Index i, Index j) const;
  bool is_real() const;
  Matrix to_dense() const;

  friend bool operator==(const CsrMatrix &a, const CsrMatrix &b)
  {
    return a.n_ == b.n_ && a.row_ptr_ == b.row_ptr_ && a.col_idx_ == b.col_idx_ &&
           a.values_ == b.values_;
  }

private:
  Index n_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<Scalar> values_;
};

/// Cost counters for one solve session.
struct OpCounters
{
  std::int64_t matvecs = 0;
  std::int64_t vecops = 0;  // length-n dot products and scaled additions
  // Applications used only to verify a declared convergence; not part of the
  // method's cost.
  std::int64_t check_matvecs = 0;

  OpCounters &operator+=(const OpCounters &o)
  {
    matvecs += o.matvecs;
    vecops += o.vecops;
    check_matvecs += o.check_matvecs;
    return *this;
  }
  friend bool operator==(const OpCounters &, const OpCounters &) = default;
};

/// A solve session: a shared immutable operator plus the session's own counters.
/// Every length-n kernel a solver uses goes through here so costs are tallied in
/// one place.
class Session
{
public:
  explicit Session(const LinearOperator &op) : op_(&op) {}

  const LinearOperator &op() const { return *op_; }
  Index dim() const { return op_->dim(); }
  const OpCounters &counters() const { return counters_; }
  OpCounters &counters() { return counters_; }

  void apply(std::span<const Scalar> x, std::span<Scalar> y);
  Vector apply(std::span<const Scalar> x);
  /// Uncharged application used to verify a true residual.
  Vector apply_check(std::span<const Scalar> x);

  Scalar dot(std::span<const Scalar> x, std::span<const Scalar> y);
  Real norm(std::span<const Scalar> x);
  void axpy(Scalar a, std::span<const Scalar> x, std::span<Scalar> y);
  void scale(Scalar a, std::span<Scalar> x);
  /// y += basis(:, 0..coeffs.size()) * coeffs, one vecop per column.
  void gemv_add(const Matrix &basis, std::span<const Scalar> coeffs, std::span<Scalar> y,
                Scalar alpha = 1.0);
  void charge_vecops(std::int64_t count) { counters_.vecops += count; }

private:
  const LinearOperator *op_;
  OpCounters counters_;
};

/// Counted y = A x for a CSR matrix.
Vector apply_csr(const CsrMatrix &a, std::span<const Scalar> x, OpCounters &counters);

//
// Generators
//

/// Upper bidiagonal: diagonal (0.1, 1, 2, ..., n-1), superdiagonal all ones.
CsrMatrix gen_bidiagonal(Index n);

/// Upper bidiagonal with the given diagonal and unit superdiagonal.
CsrMatrix gen_bidiagonal(std::span<const Real> diagonal);

/// 2-D periodic L x L lattice with two spin components per site (n = 2 L^2):
///   A = I - kappa * sum_mu [ (1 - sigma_mu) U_mu(x) delta_{x+mu,y}
///                          + (1 + sigma_mu) conj(U_mu(x-mu)) delta_{x-mu,y} ]
/// with sigma_1, sigma_2 the first two Pauli matrices and U unit-modulus link phases
/// exp(i phi), phi uniform on [0, 2 pi) from std::mt19937_64(seed). Site (x0, x1)
/// maps to spin index 2 * (x0 + L * x1) + s.
CsrMatrix gen_lattice_surrogate(Index lattice, Real kappa, std::uint64_t seed);

//
// Matrix Market coordinate format
//

CsrMatrix read_matrix_market(std::istream &in);
CsrMatrix load_matrix_market(const std::filesystem::path &path);
/// Writes `real` when every value has zero imaginary part, `complex` otherwise;
/// values are printed with 17 significant digits so a reload is bitwise exact.
void write_matrix_market(const CsrMatrix &a, std::ostream &out);
void save_matrix_market(const CsrMatrix &a, const std::filesystem::path &path);

}  // namespace mrhs

#endif  // MRHS_OPERATORS_HPP
