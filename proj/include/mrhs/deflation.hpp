// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_DEFLATION_HPP
#define MRHS_DEFLATION_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrhs/krylov.hpp"
#include "mrhs/operators.hpp"
#include "mrhs/types.hpp"

namespace mrhs
{

/// Compact recurrence A V(:, 0..k) = V H for a set of approximate eigenvectors.
///
/// V has k + block_size orthonormal columns (fewer if a direction was lost to rank
/// deficiency) and H is V.cols() x k and generally full.
struct DeflationSubspace
{
  Matrix basis;
  Matrix h;
  Index block_size = 1;

  Index k() const { return h.cols(); }
  Index dim() const { return basis.rows(); }

  /// The k = 0 subspace: V = e_1, H is 1 x 0.
  static DeflationSubspace empty(Index n, Index p = 1);
};

struct HarmonicRitzPair
{
  Scalar theta;
  Vector g;  // coefficients in the first m basis columns
};

/// Harmonic Ritz pairs of a (m + q) x m matrix whose top m x m block is square part
/// H_m and whose remaining q rows form Hb: eigenpairs of H_m + F Hb with
/// H_m^H F = Hb^H. Sorted by ascending |theta|, ties by real then imaginary part.
/// Throws SingularMatrixError when H_m is singular.
std::vector<HarmonicRitzPair> harmonic_ritz(const Matrix &hbar);
std::vector<HarmonicRitzPair> harmonic_ritz(const KrylovFactorization &fact);
std::vector<HarmonicRitzPair> harmonic_ritz(const DeflationSubspace &d);

/// y = basis(:, 0..g.size()) * g
Vector ritz_vector(const Matrix &basis, const HarmonicRitzPair &pair);

/// Number of pairs to keep: k, or k + 1 when pairs k and k + 1 are a complex
/// conjugate pair and k + 1 <= limit.
Index select_count(const std::vector<HarmonicRitzPair> &pairs, Index k, Index limit);

/// Builds the deflation subspace from a completed cycle entirely in coefficient space.
/// P = orth([g_1 .. g_k (zero padded), null(Hbar^H)]), V_new = V P, H_new = P^H Hbar P_k.
/// `short_residual` holds the cycle's residuals in basis coordinates; when
/// `new_rhs_coeffs` is non-null it receives P^H short_residual. Harmonic vectors lost
/// to rank deficiency reduce k for this restart with a warning.
DeflationSubspace gmresdr_restart(Session &session, const KrylovFactorization &fact, Index k,
                                  const Matrix &short_residual, Matrix *new_rhs_coeffs = nullptr,
                                  std::vector<std::string> *warnings = nullptr);

struct DrConfig
{
  Index m = 25;
  Index k = 10;
  Real rtol = 1e-6;
  Index max_matvecs = 10000;

  void validate() const;
};

struct GmresDrResult
{
  Vector x;
  SolveReport report;
  DeflationSubspace subspace;
};

/// GMRES-DR(m, k) from a zero initial guess. Convergence is tested at the end of each
/// cycle; matvecs = m + (cycles - 1)(m - k) when no budget truncation occurs.
GmresDrResult gmres_dr_solve(const LinearOperator &a, const Vector &b, const DrConfig &cfg);

/// General minimum residual projection over span(V): one matvec per column, normal
/// equations (AV)^H (AV) d = (AV)^H r. A singular normal matrix falls back to the
/// independent subset of AV with a warning. Updates x and r in place.
void minres_project_general(Session &session, const Matrix &v, Vector &x, Vector &r,
                            std::vector<std::string> *warnings = nullptr);

/// Projection over span(V_k) using the stored recurrence: c = V^H r, d = argmin
/// ||c - H d||, x += V_k d, r -= V (H d). No matvecs; 3k + 2 vecops for a single
/// trailing column (k + q dots and axpys plus k axpys in general).
void minres_project_compact(Session &session, const DeflationSubspace &d, std::span<Scalar> x,
                            std::span<Scalar> r);

/// Fixed augmenting vectors for GMRES-E: Y = V_k and A Y = V H, no matvecs needed.
/// Charges V.cols() vecops per image column when `counters` is given.
Augmentation make_augmentation(const DeflationSubspace &d, OpCounters *counters = nullptr);

/// Binary container: "MRHSDEFL", uint32 version, int64 n, k, block size, V column
/// count, then V and H column-major as pairs of little-endian doubles.
void write_deflation_subspace(const DeflationSubspace &d, std::ostream &out);
DeflationSubspace read_deflation_subspace(std::istream &in);
void save_deflation_subspace(const DeflationSubspace &d, const std::filesystem::path &path);
DeflationSubspace load_deflation_subspace(const std::filesystem::path &path);

namespace detail
{

struct DrEngineConfig
{
  Index m = 25;
  Index k = 10;
  Real rtol = 1e-6;
  Index max_matvecs = 10000;
  Index block_size = 1;
};

struct DrEngineOutcome
{
  Matrix x;
  std::vector<SolveReport> columns;  // per right-hand side; counters are the shared totals
  DeflationSubspace subspace;
  OpCounters counters;
  Index cycles = 0;
  std::vector<std::string> warnings;
};

/// Deflated restarting for a block of right-hand sides. A single column is GMRES-DR.
DrEngineOutcome deflated_restart_solve(const LinearOperator &a, const Matrix &b,
                                       const DrEngineConfig &cfg);

}  // namespace detail

}  // namespace mrhs

#endif  // MRHS_DEFLATION_HPP
