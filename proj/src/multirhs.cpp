// SPDX-License-Identifier: Apache-2.0

#include "mrhs/multirhs.hpp"

#include <algorithm>

namespace mrhs
{

bool ProjSchedule::project_before(Index cycle) const
{
  switch (mode)
  {
    case Mode::every_cycle:
      return true;
    case Mode::every_jth:
      return (cycle - 1) % j == 0;
    case Mode::at_multiples:
      return cycle % j == 0;
  }
  return false;
}

void ProjSchedule::validate() const
{
  if (j < 1)
  {
    throw ConfigError("schedule", "period must be at least 1");
  }
}

std::string ProjSchedule::to_string() const
{
  switch (mode)
  {
    case Mode::every_cycle:
      return "every_cycle";
    case Mode::every_jth:
      return "every_jth:" + std::to_string(j);
    case Mode::at_multiples:
      return "at_multiples:" + std::to_string(j);
  }
  return "unknown";
}

ProjSchedule ProjSchedule::parse(const std::string &text)
{
  if (text == "every_cycle")
  {
    return every_cycle();
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos)
  {
    throw ConfigError("schedule", "unknown schedule '" + text + "'");
  }
  const std::string name = text.substr(0, colon);
  Index j = 0;
  try
  {
    std::size_t used = 0;
    j = std::stoll(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1)
    {
      throw std::invalid_argument("trailing characters");
    }
  }
  catch (const std::exception &)
  {
    throw ConfigError("schedule", "bad period in '" + text + "'");
  }
  ProjSchedule s;
  if (name == "every_jth")
  {
    s = every_jth(j);
  }
  else if (name == "at_multiples")
  {
    s = at_multiples(j);
  }
  else
  {
    throw ConfigError("schedule", "unknown schedule '" + name + "'");
  }
  s.validate();
  return s;
}

void ProjConfig::validate() const
{
  if (m < 1)
  {
    throw ConfigError("m", "must be at least 1");
  }
  if (!(rtol > 0.0 && rtol < 1.0))
  {
    throw ConfigError("rtol", "must lie in (0, 1)");
  }
  if (max_matvecs < 1)
  {
    throw ConfigError("max_matvecs", "must be positive");
  }
  schedule.validate();
}

void solution_project(Session &session, std::span<const Vector> prev_solutions, Vector &x,
                      Vector &r, std::vector<std::string> *warnings)
{
  for (std::size_t i = 0; i < prev_solutions.size(); i++)
  {
    const Vector &v = prev_solutions[i];
    const Vector av = session.apply(v);
    const Real nav2 = session.dot(av, av).real();
    if (nav2 == 0.0)
    {
      if (warnings)
      {
        warnings->push_back("previous solution " + std::to_string(i) +
                            " has zero image; skipped");
      }
      continue;
    }
    const Scalar d = session.dot(av, r) / nav2;
    session.axpy(d, v, x);
    session.axpy(-d, av, r);
  }
}

SolveResult gmres_proj_solve(const LinearOperator &a, const Vector &b, const DeflationSubspace &d,
                             const ProjConfig &cfg, std::span<const Vector> prev_solutions)
{
  cfg.validate();
  const Index n = a.dim();
  if (b.size() != n)
  {
    throw DimensionError("right-hand side length differs from operator dimension");
  }
  if (d.k() > 0 && d.dim() != n)
  {
    throw DimensionError("deflation subspace dimension differs from operator dimension");
  }
  Session session(a);
  SolveResult res;
  SolveReport &rep = res.report;
  res.x = Vector(n);
  Vector r = b;
  const Real r0n = session.norm(r);
  if (r0n == 0.0)
  {
    rep.converged = true;
    rep.final_relative_residual = 0.0;
    finish_report(session, rep, b, res.x, r0n);
    return res;
  }
  const Real target = cfg.rtol * r0n;
  auto record = [&](Real rel, HistoryEvent e)
  {
    rep.final_relative_residual = rel;
    rep.history.push_back({session.counters().matvecs, rel, e});
    if (rel <= cfg.rtol)
    {
      rep.converged = true;
    }
  };

  if (!prev_solutions.empty())
  {
    solution_project(session, prev_solutions, res.x, r, &rep.warnings);
    record(session.norm(r) / r0n, HistoryEvent::projection);
  }

  for (Index cycle = 1; !rep.converged; cycle++)
  {
    if (d.k() > 0 && cfg.schedule.project_before(cycle))
    {
      minres_project_compact(session, d, res.x, r);
      record(session.norm(r) / r0n, HistoryEvent::projection);
      if (rep.converged)
      {
        break;
      }
    }
    const Index remaining = cfg.max_matvecs - session.counters().matvecs;
    if (remaining <= 0)
    {
      break;
    }
    CycleResult cyc =
        gmres_cycle(session, res.x, r, std::min(cfg.m, remaining), cfg.test_in_cycle ? target : 0.0);
    res.x = std::move(cyc.x);
    r = std::move(cyc.r);
    rep.cycles++;
    record(cyc.residual_norm / r0n, HistoryEvent::cycle);
  }
  finish_report(session, rep, b, res.x, r0n);
  return res;
}

MultiRhsResult solve_all(const MultiRhsProblem &problem, const DrConfig &first,
                         const ProjConfig &rest, RestSolver solver)
{
  if (problem.a == nullptr || problem.rhs.empty())
  {
    throw ConfigError("rhs", "at least one right-hand side and an operator are required");
  }
  first.validate();
  rest.validate();
  const LinearOperator &a = *problem.a;
  MultiRhsResult out;
  const std::size_t s = problem.rhs.size();
  out.solutions.resize(s);
  out.reports.resize(s);

  try
  {
    GmresDrResult dr = gmres_dr_solve(a, problem.rhs[0], first);
    out.solutions[0] = std::move(dr.x);
    out.reports[0] = std::move(dr.report);
    out.subspace = std::move(dr.subspace);
  }
  catch (const std::exception &e)
  {
    out.reports[0].error = e.what();
    out.solutions[0] = Vector(a.dim());
    out.subspace = DeflationSubspace::empty(a.dim());
  }

  Augmentation aug;
  OpCounters aug_cost;
  if (solver == RestSolver::augmented)
  {
    aug = make_augmentation(out.subspace, &aug_cost);
  }

  std::vector<Vector> done;
  if (problem.related && out.reports[0].error.empty())
  {
    done.push_back(out.solutions[0]);
  }
  for (std::size_t i = 1; i < s; i++)
  {
    try
    {
      SolveResult r;
      if (solver == RestSolver::projection)
      {
        r = gmres_proj_solve(a, problem.rhs[i], out.subspace, rest,
                             problem.related ? std::span<const Vector>(done)
                                             : std::span<const Vector>());
      }
      else
      {
        SolveConfig sc;
        sc.m = rest.m;
        sc.rtol = rest.rtol;
        sc.max_matvecs = rest.max_matvecs;
        sc.test_in_cycle = rest.test_in_cycle;
        r = gmres_e_solve(a, problem.rhs[i], aug, sc);
        if (i == 1)
        {
          // Forming A Y once is charged to the first solve that uses it.
          r.report.counters += aug_cost;
        }
      }
      out.solutions[i] = std::move(r.x);
      out.reports[i] = std::move(r.report);
    }
    catch (const std::exception &e)
    {
      out.reports[i].error = e.what();
      out.solutions[i] = Vector(a.dim());
    }
    if (problem.related && out.reports[i].error.empty())
    {
      done.push_back(out.solutions[i]);
    }
  }

  for (const auto &rep : out.reports)
  {
    out.totals += rep.counters;
    out.all_converged = out.all_converged && rep.converged && rep.error.empty();
  }
  return out;
}

}  // namespace mrhs
