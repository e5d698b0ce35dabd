// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_MULTIRHS_HPP
#define MRHS_MULTIRHS_HPP

#include <span>
#include <string>
#include <vector>

#include "mrhs/deflation.hpp"
#include "mrhs/krylov.hpp"
#include "mrhs/operators.hpp"

namespace mrhs
{

/// When to apply the compact projection, with GMRES cycles counted from 1.
struct ProjSchedule
{
  enum class Mode
  {
    every_cycle,
    every_jth,     // before cycles 1, j + 1, 2j + 1, ...
    at_multiples,  // before cycles j, 2j, 3j, ...
  };

  Mode mode = Mode::every_cycle;
  Index j = 1;

  static ProjSchedule every_cycle() { return {Mode::every_cycle, 1}; }
  static ProjSchedule every_jth(Index j) { return {Mode::every_jth, j}; }
  static ProjSchedule at_multiples(Index j) { return {Mode::at_multiples, j}; }

  bool project_before(Index cycle) const;
  void validate() const;
  /// "every_cycle", "every_jth:5", "at_multiples:10"
  std::string to_string() const;
  static ProjSchedule parse(const std::string &text);

  friend bool operator==(const ProjSchedule &, const ProjSchedule &) = default;
};

struct ProjConfig
{
  Index m = 15;
  Real rtol = 1e-6;
  Index max_matvecs = 10000;
  ProjSchedule schedule;
  bool test_in_cycle = true;

  void validate() const;
};

/// One-dimensional minimum residual projection over each previous solution in turn:
/// d = <Av, r> / ||Av||^2, x += d v, r -= d Av. One matvec per solution; solutions with
/// A v = 0 are skipped with a warning.
void solution_project(Session &session, std::span<const Vector> prev_solutions, Vector &x,
                      Vector &r, std::vector<std::string> *warnings = nullptr);

/// GMRES(m)-Proj(k) from a zero initial guess: optional projection over previous
/// solutions, then projections over `d` (per schedule) alternated with GMRES(m)
/// cycles. Convergence is tested after every projection and every cycle.
SolveResult gmres_proj_solve(const LinearOperator &a, const Vector &b, const DeflationSubspace &d,
                             const ProjConfig &cfg,
                             std::span<const Vector> prev_solutions = {});

struct MultiRhsProblem
{
  const LinearOperator *a = nullptr;
  std::vector<Vector> rhs;
  bool related = false;  // project each later solve over the earlier solutions
};

/// Solver used for right-hand sides 2..s.
enum class RestSolver
{
  projection,  // GMRES(m)-Proj(k)
  augmented,   // GMRES-E with the k fixed vectors, Krylov dimension m
};

struct MultiRhsResult
{
  std::vector<Vector> solutions;
  std::vector<SolveReport> reports;
  DeflationSubspace subspace;
  OpCounters totals;
  bool all_converged = true;
};

/// First right-hand side by GMRES-DR, the rest by the chosen deflated solver. A
/// failed right-hand side is recorded in its report and the remaining ones still run.
MultiRhsResult solve_all(const MultiRhsProblem &problem, const DrConfig &first,
                         const ProjConfig &rest, RestSolver solver = RestSolver::projection);

}  // namespace mrhs

#endif  // MRHS_MULTIRHS_HPP
