// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_KRYLOV_HPP
#define MRHS_KRYLOV_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrhs/operators.hpp"
#include "mrhs/types.hpp"

namespace mrhs
{

/// Arnoldi-type factorization A * basis(:, 0..steps) = basis * hessenberg.
///
/// Single-vector Arnoldi has basis_size == steps + 1 until a happy breakdown. The
/// band (block) variant starts from block_size columns and keeps basis_size ==
/// steps + block_size, minus any columns deflated for rank loss. After a deflated
/// restart the leading block of `hessenberg` is full rather than Hessenberg.
struct KrylovFactorization
{
  Matrix basis;       // n x basis_size, orthonormal columns
  Matrix hessenberg;  // basis_size x steps
  Index block_size = 1;
  bool breakdown = false;  // invariant subspace reached; no unprocessed columns left
  Index deflated = 0;      // dependent directions dropped while other columns remained

  Index steps() const { return hessenberg.cols(); }
  Index basis_size() const { return basis.cols(); }
};

/// Orthonormalizes the columns of `block` into the starting basis of a factorization.
/// On return block = basis * coeffs, coeffs is basis_size x block.cols() upper
/// trapezoidal. Columns dependent on their predecessors are dropped from the basis.
KrylovFactorization start_factorization(Session &session, const Matrix &block, Matrix &coeffs);

/// Called after every Arnoldi step; returning true stops the extension early.
using StepCallback = std::function<bool(const KrylovFactorization &)>;

/// Processes up to `steps` further basis columns: multiply, orthogonalize against the
/// whole basis (MGS plus one reorthogonalization), append. A dependent new vector is
/// not appended; when no unprocessed column remains the factorization is marked as
/// broken down. Returns the number of steps taken.
Index arnoldi_extend(Session &session, KrylovFactorization &fact, Index steps,
                     const StepCallback &on_step = {});

/// Minimum-residual coefficients over a factorization for one or more right-hand sides
/// given in basis coordinates.
struct ProjectedSolution
{
  Matrix coeffs;          // steps x nrhs
  Matrix short_residual;  // basis_size x nrhs: rhs_coeffs - hessenberg * coeffs
  std::vector<Real> residual_norms;
};

/// Extends `fact` until it has `total_steps` columns and solves the projected least
/// squares problems min || rhs_coeffs(:, i) - H d_i ||. With non-empty `stop_targets`
/// the extension stops as soon as every residual estimate is at or below its target.
ProjectedSolution extend_and_minimize(Session &session, KrylovFactorization &fact,
                                      const Matrix &rhs_coeffs, Index total_steps,
                                      std::span<const Real> stop_targets = {});

//
// Reports
//

enum class HistoryEvent
{
  cycle,
  projection,
  converged
};

const char *to_string(HistoryEvent e);

struct HistoryEntry
{
  std::int64_t matvecs = 0;
  Real relative_residual = 0.0;
  HistoryEvent event = HistoryEvent::cycle;

  friend bool operator==(const HistoryEntry &, const HistoryEntry &) = default;
};

struct SolveReport
{
  bool converged = false;
  bool breakdown = false;  // BiCGStab rho/omega breakdown
  Real final_relative_residual = 1.0;
  // ||b - A x|| / ||r_0|| recomputed once at declared convergence (NaN otherwise).
  Real true_relative_residual = std::numeric_limits<Real>::quiet_NaN();
  OpCounters counters;
  Index cycles = 0;
  std::vector<HistoryEntry> history;
  std::vector<std::string> warnings;
  std::string error;  // set when the solve aborted with an exception
};

struct SolveResult
{
  Vector x;
  SolveReport report;
};

/// Appends the converged marker (when converged and not already last), recomputes the true residual with
/// an uncharged application, and copies the session counters into the report.
void finish_report(Session &session, SolveReport &report, std::span<const Scalar> b,
                   std::span<const Scalar> x, Real initial_norm);

struct SolveConfig
{
  Index m = 15;              // cycle (Krylov subspace) dimension
  Real rtol = 1e-6;          // target ||r|| / ||r_0||
  Index max_matvecs = 10000;
  bool test_in_cycle = true;  // check the residual estimate after every Arnoldi step

  void validate() const;
};

//
// GMRES cycles
//

struct CycleResult
{
  Vector x;
  Vector r;
  KrylovFactorization fact;
  Vector coeffs;
  Real residual_norm = 0.0;
};

/// Fixed approximate eigenvectors and their images under A.
struct Augmentation
{
  Matrix vectors;  // n x k
  Matrix images;   // n x k, A * vectors

  Index size() const { return vectors.cols(); }
};

struct BlockCycleResult
{
  Matrix x;
  Matrix r;
  KrylovFactorization fact;
  Matrix coeffs;
  std::vector<Real> residual_norms;
};

/// Shared cycle kernel for every GMRES flavour: orthonormalize the residual block,
/// build `krylov_dim` Arnoldi columns, optionally append augmenting vectors, then
/// minimize each column's residual over the whole space. X and R are updated as
/// X0 + Z D and R0 - V H D.
BlockCycleResult minimize_cycle(Session &session, const Matrix &x0, const Matrix &r0,
                                Index krylov_dim, std::span<const Real> stop_targets,
                                const Augmentation *aug = nullptr,
                                std::vector<std::string> *warnings = nullptr);

/// One GMRES(m) cycle from x0 with residual r0 = b - A x0. The new residual is formed
/// as r0 - V H d, so the cycle costs exactly `steps` matvecs. A positive
/// `stop_below` ends the cycle once the residual estimate reaches it.
CycleResult gmres_cycle(Session &session, const Vector &x0, const Vector &r0, Index m,
                        Real stop_below = 0.0);

/// One GMRES-E cycle: a Krylov space of dimension `krylov_dim` followed by the fixed
/// augmenting vectors (eigenvectors last). The residual is minimized over the span of
/// both. Augmenting vectors whose images are dependent on the current basis are
/// dropped with a warning. With an empty augmentation this is exactly gmres_cycle.
CycleResult gmres_e_cycle(Session &session, const Vector &x0, const Vector &r0,
                          Index krylov_dim, const Augmentation &aug, Real stop_below = 0.0,
                          std::vector<std::string> *warnings = nullptr);

/// Restarted GMRES(m). A zero x0 (the default) makes the initial residual b itself.
SolveResult gmres_restarted(const LinearOperator &a, const Vector &b, const SolveConfig &cfg,
                            const std::optional<Vector> &x0 = std::nullopt);

/// Unrestarted GMRES: a single cycle as large as the budget allows.
SolveResult gmres_full(const LinearOperator &a, const Vector &b, Real rtol, Index max_matvecs);

/// Restarted GMRES-E with fixed augmenting vectors; cfg.m is the Krylov dimension.
SolveResult gmres_e_solve(const LinearOperator &a, const Vector &b, const Augmentation &aug,
                          const SolveConfig &cfg);

/// Breakdown threshold on |rho| and |omega|.
inline constexpr Real kBicgstabBreakdown = 1e-30;

/// Textbook BiCGStab, two matvecs per iteration, shadow residual r_0.
SolveResult bicgstab(const LinearOperator &a, const Vector &b, Real rtol, Index max_matvecs,
                     const std::optional<Vector> &x0 = std::nullopt);

//
// Diagnostics (uncounted operator applications)
//

/// || A * basis(:, 0..h.cols()) - basis(:, 0..h.rows()) * h ||_F
Real recurrence_defect(const LinearOperator &a, const Matrix &basis, const Matrix &h);
/// max |(basis^H basis - I)_{ij}|
Real orthonormality_defect(const Matrix &basis);
/// || b - A x ||
Real true_residual_norm(const LinearOperator &a, const Vector &b, const Vector &x);

}  // namespace mrhs

#endif  // MRHS_KRYLOV_HPP
