// SPDX-License-Identifier: Apache-2.0

#include "mrhs/block.hpp"

#include <algorithm>

namespace mrhs
{

void BlockDrConfig::validate() const
{
  if (p < 1)
  {
    throw ConfigError("p", "block size must be at least 1");
  }
  if (m < 1)
  {
    throw ConfigError("m", "must be at least 1");
  }
  if (k < 0 || k >= m)
  {
    throw ConfigError("k", "must satisfy 0 <= k < m");
  }
  if (m - k < p)
  {
    throw ConfigError("m", "m - k must be at least the block size p");
  }
  if (!(rtol > 0.0 && rtol < 1.0))
  {
    throw ConfigError("rtol", "must lie in (0, 1)");
  }
  if (max_matvecs < 1)
  {
    throw ConfigError("max_matvecs", "must be positive");
  }
}

void BlockProjConfig::validate() const
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

BlockCycleResult bl_gmres_cycle(Session &session, const Matrix &x0, const Matrix &r0, Index m,
                                std::span<const Real> stop_targets,
                                std::vector<std::string> *warnings)
{
  return minimize_cycle(session, x0, r0, m, stop_targets, nullptr, warnings);
}

BlockDrResult bl_gmres_dr_solve(const LinearOperator &a, const Matrix &b,
                                const BlockDrConfig &cfg)
{
  cfg.validate();
  if (b.cols() < 1 || b.cols() > cfg.p)
  {
    throw DimensionError("block GMRES-DR needs between 1 and p right-hand sides");
  }
  detail::DrEngineOutcome eng =
      detail::deflated_restart_solve(a, b, {cfg.m, cfg.k, cfg.rtol, cfg.max_matvecs, cfg.p});
  BlockDrResult res;
  res.x = std::move(eng.x);
  res.subspace = std::move(eng.subspace);
  BlockSolveReport &rep = res.report;
  rep.columns = std::move(eng.columns);
  rep.counters = eng.counters;
  rep.cycles = eng.cycles;
  rep.warnings = std::move(eng.warnings);
  rep.converged = std::all_of(rep.columns.begin(), rep.columns.end(),
                              [](const SolveReport &r) { return r.converged; });
  return res;
}

BlockSolveResult bl_gmres_proj_solve(const LinearOperator &a, const Matrix &b,
                                     const DeflationSubspace &d, const BlockProjConfig &cfg,
                                     std::span<const Vector> prev_solutions)
{
  cfg.validate();
  const Index n = a.dim();
  const Index nrhs = b.cols();
  if (b.rows() != n)
  {
    throw DimensionError("right-hand side length differs from operator dimension");
  }
  if (d.k() > 0 && d.dim() != n)
  {
    throw DimensionError("deflation subspace dimension differs from operator dimension");
  }
  Session session(a);
  BlockSolveResult res;
  BlockSolveReport &br = res.report;
  br.columns.resize(static_cast<std::size_t>(nrhs));
  res.x = Matrix(n, nrhs);
  Matrix r = b;

  std::vector<Real> norm0(static_cast<std::size_t>(nrhs));
  std::vector<Index> active;
  for (Index j = 0; j < nrhs; j++)
  {
    norm0[j] = session.norm(r.col(j));
    if (norm0[j] == 0.0)
    {
      br.columns[j].converged = true;
      br.columns[j].final_relative_residual = 0.0;
    }
    else
    {
      active.push_back(j);
    }
  }

  // Records a residual for column j; returns true when it converged (and is frozen).
  auto record = [&](Index j, Real norm, HistoryEvent e)
  {
    SolveReport &rep = br.columns[j];
    const Real rel = norm / norm0[j];
    const std::int64_t mv = session.counters().matvecs;
    rep.final_relative_residual = rel;
    rep.history.push_back({mv, rel, e});
    if (rel <= cfg.rtol)
    {
      rep.converged = true;
      rep.history.push_back({mv, rel, HistoryEvent::converged});
      return true;
    }
    return false;
  };
  auto prune = [&](const std::vector<bool> &done)
  {
    std::vector<Index> keep;
    for (std::size_t t = 0; t < active.size(); t++)
    {
      if (!done[t])
      {
        keep.push_back(active[t]);
      }
    }
    active = std::move(keep);
  };

  if (!prev_solutions.empty() && !active.empty())
  {
    std::vector<bool> done(active.size(), false);
    for (std::size_t t = 0; t < active.size(); t++)
    {
      const Index j = active[t];
      Vector xj(res.x.col(j)), rj(r.col(j));
      solution_project(session, prev_solutions, xj, rj, &br.columns[j].warnings);
      std::copy(xj.begin(), xj.end(), res.x.col(j).begin());
      std::copy(rj.begin(), rj.end(), r.col(j).begin());
      done[t] = record(j, session.norm(r.col(j)), HistoryEvent::projection);
    }
    prune(done);
  }

  for (Index cycle = 1; !active.empty(); cycle++)
  {
    if (d.k() > 0 && cfg.schedule.project_before(cycle))
    {
      std::vector<bool> done(active.size(), false);
      for (std::size_t t = 0; t < active.size(); t++)
      {
        const Index j = active[t];
        minres_project_compact(session, d, res.x.col(j), r.col(j));
        done[t] = record(j, session.norm(r.col(j)), HistoryEvent::projection);
      }
      prune(done);
      if (active.empty())
      {
        break;
      }
    }
    const Index remaining = cfg.max_matvecs - session.counters().matvecs;
    if (remaining <= 0)
    {
      break;
    }
    const Index q = static_cast<Index>(active.size());
    Matrix xa(n, q), ra(n, q);
    std::vector<Real> targets;
    for (Index t = 0; t < q; t++)
    {
      std::copy(res.x.col(active[t]).begin(), res.x.col(active[t]).end(), xa.col(t).begin());
      std::copy(r.col(active[t]).begin(), r.col(active[t]).end(), ra.col(t).begin());
      targets.push_back(cfg.rtol * norm0[active[t]]);
    }
    BlockCycleResult cyc = bl_gmres_cycle(session, xa, ra, std::min(cfg.m, remaining),
                                          cfg.test_in_cycle ? std::span<const Real>(targets)
                                                            : std::span<const Real>(),
                                          &br.warnings);
    br.cycles++;
    std::vector<bool> done(active.size(), false);
    for (Index t = 0; t < q; t++)
    {
      const Index j = active[t];
      std::copy(cyc.x.col(t).begin(), cyc.x.col(t).end(), res.x.col(j).begin());
      std::copy(cyc.r.col(t).begin(), cyc.r.col(t).end(), r.col(j).begin());
      br.columns[j].cycles++;
      done[t] = record(j, cyc.residual_norms[t], HistoryEvent::cycle);
    }
    prune(done);
  }

  for (Index j = 0; j < nrhs; j++)
  {
    finish_report(session, br.columns[j], b.col(j), res.x.col(j), norm0[j]);
  }
  br.counters = session.counters();
  for (auto &rep : br.columns)
  {
    rep.counters = br.counters;
    rep.warnings.insert(rep.warnings.end(), br.warnings.begin(), br.warnings.end());
  }
  br.converged = std::all_of(br.columns.begin(), br.columns.end(),
                             [](const SolveReport &rep) { return rep.converged; });
  return res;
}

BlockMultiRhsResult solve_all_block(const LinearOperator &a, const std::vector<Vector> &rhs,
                                    const BlockDrConfig &first, const BlockProjConfig &rest,
                                    bool related)
{
  if (rhs.empty())
  {
    throw ConfigError("rhs", "at least one right-hand side is required");
  }
  first.validate();
  rest.validate();
  const Index n = a.dim();
  const Index p = first.p;
  const Index count = static_cast<Index>(rhs.size());
  BlockMultiRhsResult out;
  out.solutions.resize(rhs.size(), Vector(n));
  out.subspace = DeflationSubspace::empty(n, p);
  std::vector<Vector> done;

  for (Index start = 0; start < count; start += p)
  {
    const Index q = std::min(p, count - start);
    Matrix b(n, q);
    for (Index t = 0; t < q; t++)
    {
      if (rhs[start + t].size() != n)
      {
        throw DimensionError("right-hand side length differs from operator dimension");
      }
      std::copy(rhs[start + t].begin(), rhs[start + t].end(), b.col(t).begin());
    }
    BlockSolveReport rep;
    Matrix x(n, q);
    try
    {
      if (start == 0)
      {
        BlockDrResult r = bl_gmres_dr_solve(a, b, first);
        rep = std::move(r.report);
        x = std::move(r.x);
        out.subspace = std::move(r.subspace);
      }
      else
      {
        BlockSolveResult r =
            bl_gmres_proj_solve(a, b, out.subspace, rest,
                                related ? std::span<const Vector>(done) : std::span<const Vector>());
        rep = std::move(r.report);
        x = std::move(r.x);
      }
    }
    catch (const std::exception &e)
    {
      rep.error = e.what();
      rep.columns.resize(static_cast<std::size_t>(q));
      for (auto &c : rep.columns)
      {
        c.error = e.what();
      }
    }
    for (Index t = 0; t < q; t++)
    {
      out.solutions[start + t] = Vector(x.col(t));
      if (related && rep.error.empty())
      {
        done.push_back(out.solutions[start + t]);
      }
    }
    out.totals += rep.counters;
    out.all_converged = out.all_converged && rep.converged && rep.error.empty();
    out.groups.push_back(std::move(rep));
  }
  return out;
}

}  // namespace mrhs
