// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_BLOCK_HPP
#define MRHS_BLOCK_HPP

#include <span>
#include <string>
#include <vector>

#include "mrhs/deflation.hpp"
#include "mrhs/krylov.hpp"
#include "mrhs/multirhs.hpp"
#include "mrhs/operators.hpp"

namespace mrhs
{

/// Reports for one block solve. Every column report carries the shared block counters.
struct BlockSolveReport
{
  std::vector<SolveReport> columns;
  OpCounters counters;
  Index cycles = 0;
  bool converged = false;  // all columns
  std::vector<std::string> warnings;
  std::string error;
};

struct BlockSolveResult
{
  Matrix x;
  BlockSolveReport report;
};

struct BlockDrConfig
{
  Index m = 170;  // total subspace dimension (columns of the projected matrix)
  Index p = 5;
  Index k = 10;
  Real rtol = 1e-6;
  Index max_matvecs = 10000;

  /// Rejects m - k < p: each right-hand side would get no Krylov growth per cycle.
  void validate() const;
};

struct BlockDrResult
{
  Matrix x;
  BlockSolveReport report;
  DeflationSubspace subspace;
};

struct BlockProjConfig
{
  Index m = 160;
  Real rtol = 1e-6;
  Index max_matvecs = 10000;
  ProjSchedule schedule;
  bool test_in_cycle = true;

  void validate() const;
};

/// Band block Arnoldi: the same kernel as arnoldi_extend, which already processes
/// one column at a time and drops dependent directions.
inline Index block_arnoldi_extend(Session &session, KrylovFactorization &fact, Index steps,
                                  const StepCallback &on_step = {})
{
  return arnoldi_extend(session, fact, steps, on_step);
}

/// One Bl-GMRES(m) cycle over the block Krylov space of R0: every column is minimized
/// against the same projected matrix. Non-empty `stop_targets` end the cycle once all
/// estimates are below their targets. Directions dropped for rank loss are reported
/// through `warnings`.
BlockCycleResult bl_gmres_cycle(Session &session, const Matrix &x0, const Matrix &r0, Index m,
                                std::span<const Real> stop_targets = {},
                                std::vector<std::string> *warnings = nullptr);

/// Block GMRES-DR(m, p, k) from zero initial guesses; B has at most p columns.
BlockDrResult bl_gmres_dr_solve(const LinearOperator &a, const Matrix &b,
                                const BlockDrConfig &cfg);

/// Bl-GMRES(m, p)-Proj(k) from zero initial guesses. Previous solutions, when given,
/// are projected over once before the loop. Converged columns are frozen and drop
/// out of the block.
BlockSolveResult bl_gmres_proj_solve(const LinearOperator &a, const Matrix &b,
                                     const DeflationSubspace &d, const BlockProjConfig &cfg,
                                     std::span<const Vector> prev_solutions = {});

struct BlockMultiRhsResult
{
  std::vector<Vector> solutions;
  std::vector<BlockSolveReport> groups;
  DeflationSubspace subspace;
  OpCounters totals;
  bool all_converged = true;
};

/// Groups of p right-hand sides: the first by block GMRES-DR, the rest by block
/// GMRES-Proj with the resulting subspace.
BlockMultiRhsResult solve_all_block(const LinearOperator &a, const std::vector<Vector> &rhs,
                                    const BlockDrConfig &first, const BlockProjConfig &rest,
                                    bool related = false);

}  // namespace mrhs

#endif  // MRHS_BLOCK_HPP
