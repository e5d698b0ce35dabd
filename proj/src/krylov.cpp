// SPDX-License-Identifier: Apache-2.0

#include "mrhs/krylov.hpp"

#include <algorithm>
#include <cmath>

#include "mrhs/numkernel.hpp"
#include "mrhs/vecops.hpp"

namespace mrhs
{

namespace
{

// Gram-Schmidt against b vectors: two passes of (dot + axpy), two norms, one scale.
constexpr std::int64_t OrthoVecops(Index b)
{
  return 4 * b + 3;
}

Matrix AsColumn(const Vector &v)
{
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.col(0).begin());
  return m;
}

}  // namespace

const char *to_string(HistoryEvent e)
{
  switch (e)
  {
    case HistoryEvent::cycle:
      return "cycle";
    case HistoryEvent::projection:
      return "projection";
    case HistoryEvent::converged:
      return "converged";
  }
  return "unknown";
}

void SolveConfig::validate() const
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
}

KrylovFactorization start_factorization(Session &session, const Matrix &block, Matrix &coeffs)
{
  const Index n = block.rows(), p = block.cols();
  KrylovFactorization fact;
  fact.block_size = p;
  fact.basis = Matrix(n, 0);
  fact.basis.reserve_cols(p);
  Matrix c(p, p);
  std::vector<Scalar> proj(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; j++)
  {
    Vector v(block.col(j));
    const Index b = fact.basis.cols();
    bool dependent = false;
    const Real norm = orthonormalize_in_place(v, fact.basis, b, proj, dependent);
    session.charge_vecops(OrthoVecops(b));
    for (Index i = 0; i < b; i++)
    {
      c(i, j) = proj[i];
    }
    if (!dependent)
    {
      fact.basis.resize_cols(b + 1);
      std::copy(v.begin(), v.end(), fact.basis.col(b).begin());
      c(b, j) = norm;
    }
  }
  c.resize(fact.basis.cols(), p);
  coeffs = std::move(c);
  if (fact.basis.cols() > 0)
  {
    fact.deflated = p - fact.basis.cols();
  }
  fact.hessenberg = Matrix(fact.basis.cols(), 0);
  fact.breakdown = fact.basis.cols() == 0;
  return fact;
}

Index arnoldi_extend(Session &session, KrylovFactorization &fact, Index steps,
                     const StepCallback &on_step)
{
  if (fact.basis_size() == 0)
  {
    throw Error("arnoldi_extend: zero starting vector");
  }
  fact.basis.reserve_cols(fact.basis_size() + steps);
  std::vector<Scalar> proj;
  Index taken = 0;
  while (taken < steps)
  {
    const Index j = fact.steps();
    if (j >= fact.basis_size())
    {
      fact.breakdown = true;
      break;
    }
    const Index b = fact.basis_size();
    Vector w = session.apply(fact.basis.col(j));
    proj.resize(static_cast<std::size_t>(b));
    bool dependent = false;
    const Real norm = orthonormalize_in_place(w, fact.basis, b, proj, dependent);
    session.charge_vecops(OrthoVecops(b));

    fact.hessenberg.resize(dependent ? b : b + 1, j + 1);
    for (Index i = 0; i < b; i++)
    {
      fact.hessenberg(i, j) = proj[i];
    }
    if (!dependent)
    {
      fact.hessenberg(b, j) = norm;
      fact.basis.resize_cols(b + 1);
      std::copy(w.begin(), w.end(), fact.basis.col(b).begin());
    }
    taken++;
    if (j + 1 >= fact.basis_size())
    {
      fact.breakdown = true;
    }
    else if (dependent)
    {
      fact.deflated++;
    }
    if (on_step && on_step(fact))
    {
      break;
    }
    if (fact.breakdown)
    {
      break;
    }
  }
  return taken;
}

namespace
{

bool TargetsMet(const GivensLeastSquares &ls, std::span<const Real> targets)
{
  if (targets.empty())
  {
    return false;
  }
  for (Index i = 0; i < ls.num_rhs(); i++)
  {
    if (ls.residual_norm(i) > targets[i])
    {
      return false;
    }
  }
  return true;
}

Matrix PadRows(const Matrix &a, Index rows)
{
  Matrix out = a;
  out.resize(rows, a.cols());
  return out;
}

}  // namespace

ProjectedSolution extend_and_minimize(Session &session, KrylovFactorization &fact,
                                      const Matrix &rhs_coeffs, Index total_steps,
                                      std::span<const Real> stop_targets)
{
  GivensLeastSquares ls(rhs_coeffs);
  for (Index j = 0; j < fact.steps(); j++)
  {
    ls.push_column(fact.hessenberg.col(j));
  }
  if (total_steps > fact.steps() && !fact.breakdown)
  {
    arnoldi_extend(session, fact, total_steps - fact.steps(),
                   [&](const KrylovFactorization &f)
                   {
                     ls.push_column(f.hessenberg.col(f.steps() - 1));
                     return TargetsMet(ls, stop_targets);
                   });
  }
  ProjectedSolution out;
  out.coeffs = ls.solve_all();
  const Matrix hd = multiply(fact.hessenberg, out.coeffs);
  out.short_residual = PadRows(rhs_coeffs, fact.basis_size());
  for (Index j = 0; j < hd.cols(); j++)
  {
    for (Index i = 0; i < hd.rows(); i++)
    {
      out.short_residual(i, j) -= hd(i, j);
    }
  }
  for (Index i = 0; i < ls.num_rhs(); i++)
  {
    out.residual_norms.push_back(ls.residual_norm(i));
  }
  return out;
}

BlockCycleResult minimize_cycle(Session &session, const Matrix &x0, const Matrix &r0,
                                Index krylov_dim, std::span<const Real> stop_targets,
                                const Augmentation *aug, std::vector<std::string> *warnings)
{
  const Index nrhs = r0.cols();
  BlockCycleResult out;
  out.x = x0;
  out.r = r0;
  Matrix c;
  out.fact = start_factorization(session, r0, c);
  KrylovFactorization &fact = out.fact;
  if (fact.basis_size() == 0)
  {
    out.coeffs = Matrix(0, nrhs);
    out.residual_norms.assign(static_cast<std::size_t>(nrhs), 0.0);
    return out;
  }

  GivensLeastSquares ls(c);
  bool met = false;
  arnoldi_extend(session, fact, krylov_dim,
                 [&](const KrylovFactorization &f)
                 {
                   ls.push_column(f.hessenberg.col(f.steps() - 1));
                   met = TargetsMet(ls, stop_targets);
                   return met;
                 });
  const Index krylov_steps = fact.steps();

  // Augmenting vectors go last; their images extend the orthonormal basis.
  std::vector<Index> kept;
  if (aug != nullptr && !met)
  {
    std::vector<Scalar> proj;
    for (Index i = 0; i < aug->size(); i++)
    {
      Vector w(aug->images.col(i));
      const Index b = fact.basis_size();
      proj.resize(static_cast<std::size_t>(b));
      bool dependent = false;
      const Real norm = orthonormalize_in_place(w, fact.basis, b, proj, dependent);
      session.charge_vecops(OrthoVecops(b));
      if (dependent)
      {
        if (warnings)
        {
          warnings->push_back("augmenting vector " + std::to_string(i) +
                              " dependent on the Krylov basis; dropped");
        }
        continue;
      }
      const Index col = fact.steps();
      fact.hessenberg.resize(b + 1, col + 1);
      for (Index r = 0; r < b; r++)
      {
        fact.hessenberg(r, col) = proj[r];
      }
      fact.hessenberg(b, col) = norm;
      fact.basis.resize_cols(b + 1);
      std::copy(w.begin(), w.end(), fact.basis.col(b).begin());
      ls.push_column(fact.hessenberg.col(col));
      kept.push_back(i);
    }
  }

  if (fact.deflated > 0 && warnings)
  {
    warnings->push_back("block basis dropped " + std::to_string(fact.deflated) +
                        " dependent direction(s)");
  }

  out.coeffs = ls.solve_all();
  const Matrix hd = multiply(fact.hessenberg, out.coeffs);
  for (Index c_idx = 0; c_idx < nrhs; c_idx++)
  {
    auto x = out.x.col(c_idx);
    auto r = out.r.col(c_idx);
    const auto d = out.coeffs.col(c_idx);
    for (Index j = 0; j < krylov_steps; j++)
    {
      session.axpy(d[j], fact.basis.col(j), x);
    }
    for (std::size_t t = 0; t < kept.size(); t++)
    {
      session.axpy(d[krylov_steps + static_cast<Index>(t)], aug->vectors.col(kept[t]), x);
    }
    for (Index i = 0; i < hd.rows(); i++)
    {
      session.axpy(-hd(i, c_idx), fact.basis.col(i), r);
    }
    out.residual_norms.push_back(ls.residual_norm(c_idx));
  }
  return out;
}

CycleResult gmres_e_cycle(Session &session, const Vector &x0, const Vector &r0,
                          Index krylov_dim, const Augmentation &aug, Real stop_below,
                          std::vector<std::string> *warnings)
{
  const Real target[1] = {stop_below};
  std::span<const Real> targets;
  if (stop_below > 0.0)
  {
    targets = target;
  }
  BlockCycleResult block = minimize_cycle(session, AsColumn(x0), AsColumn(r0), krylov_dim,
                                          targets, aug.size() > 0 ? &aug : nullptr, warnings);
  CycleResult out;
  out.x = Vector(block.x.col(0));
  out.r = Vector(block.r.col(0));
  out.coeffs = Vector(block.coeffs.col(0));
  out.residual_norm = block.residual_norms[0];
  out.fact = std::move(block.fact);
  return out;
}

CycleResult gmres_cycle(Session &session, const Vector &x0, const Vector &r0, Index m,
                        Real stop_below)
{
  return gmres_e_cycle(session, x0, r0, m, Augmentation{}, stop_below, nullptr);
}

void finish_report(Session &session, SolveReport &report, std::span<const Scalar> b,
                   std::span<const Scalar> x, Real initial_norm)
{
  if (report.converged)
  {
    if (report.history.empty() || report.history.back().event != HistoryEvent::converged)
    {
      report.history.push_back(
          {session.counters().matvecs, report.final_relative_residual, HistoryEvent::converged});
    }
    const Vector ax = session.apply_check(x);
    Real s = 0.0;
    for (std::size_t i = 0; i < b.size(); i++)
    {
      s += std::norm(b[i] - ax[static_cast<Index>(i)]);
    }
    report.true_relative_residual = initial_norm > 0.0 ? std::sqrt(s) / initial_norm : 0.0;
  }
  report.counters = session.counters();
}

namespace
{

// Shared restarted driver for GMRES(m) and GMRES-E.
SolveResult RestartedDriver(const LinearOperator &a, const Vector &b, const SolveConfig &cfg,
                            const std::optional<Vector> &x0, const Augmentation &aug)
{
  cfg.validate();
  if (b.size() != a.dim())
  {
    throw DimensionError("right-hand side length differs from operator dimension");
  }
  Session session(a);
  SolveResult res;
  SolveReport &rep = res.report;
  res.x = x0.value_or(Vector(a.dim()));
  Vector r = b;
  if (x0)
  {
    const Vector ax = session.apply(res.x);
    for (Index i = 0; i < r.size(); i++)
    {
      r[i] -= ax[i];
    }
  }
  const Real r0n = session.norm(r);
  if (r0n == 0.0)
  {
    rep.converged = true;
    rep.final_relative_residual = 0.0;
    finish_report(session, rep, b, res.x, r0n);
    return res;
  }
  const Real target = cfg.rtol * r0n;
  while (true)
  {
    const Index remaining = cfg.max_matvecs - session.counters().matvecs;
    if (remaining <= 0)
    {
      break;
    }
    CycleResult cyc = gmres_e_cycle(session, res.x, r, std::min(cfg.m, remaining), aug,
                                    cfg.test_in_cycle ? target : 0.0, &rep.warnings);
    res.x = std::move(cyc.x);
    r = std::move(cyc.r);
    rep.cycles++;
    rep.final_relative_residual = cyc.residual_norm / r0n;
    rep.history.push_back(
        {session.counters().matvecs, rep.final_relative_residual, HistoryEvent::cycle});
    if (rep.final_relative_residual <= cfg.rtol)
    {
      rep.converged = true;
      break;
    }
  }
  finish_report(session, rep, b, res.x, r0n);
  return res;
}

}  // namespace

SolveResult gmres_restarted(const LinearOperator &a, const Vector &b, const SolveConfig &cfg,
                            const std::optional<Vector> &x0)
{
  return RestartedDriver(a, b, cfg, x0, Augmentation{});
}

SolveResult gmres_full(const LinearOperator &a, const Vector &b, Real rtol, Index max_matvecs)
{
  SolveConfig cfg;
  cfg.m = std::min(max_matvecs, a.dim());
  cfg.rtol = rtol;
  cfg.max_matvecs = max_matvecs;
  return gmres_restarted(a, b, cfg);
}

SolveResult gmres_e_solve(const LinearOperator &a, const Vector &b, const Augmentation &aug,
                          const SolveConfig &cfg)
{
  if (aug.size() > 0 && (aug.vectors.rows() != a.dim() || aug.images.rows() != a.dim() ||
                         aug.images.cols() != aug.vectors.cols()))
  {
    throw DimensionError("gmres_e_solve: augmentation shape mismatch");
  }
  return RestartedDriver(a, b, cfg, std::nullopt, aug);
}

SolveResult bicgstab(const LinearOperator &a, const Vector &b, Real rtol, Index max_matvecs,
                     const std::optional<Vector> &x0)
{
  if (b.size() != a.dim())
  {
    throw DimensionError("right-hand side length differs from operator dimension");
  }
  Session session(a);
  const Index n = a.dim();
  SolveResult res;
  SolveReport &rep = res.report;
  Vector &x = res.x;
  x = x0.value_or(Vector(n));
  Vector r = b;
  if (x0)
  {
    const Vector ax = session.apply(x);
    for (Index i = 0; i < n; i++)
    {
      r[i] -= ax[i];
    }
  }
  const Real r0n = session.norm(r);
  if (r0n == 0.0)
  {
    rep.converged = true;
    rep.final_relative_residual = 0.0;
    finish_report(session, rep, b, x, r0n);
    return res;
  }
  const Real target = rtol * r0n;
  const Vector rhat = r;
  Vector p(n), v(n), s(n), t(n);
  Scalar rho = 1.0, alpha = 1.0, omega = 1.0;
  auto record = [&](Real norm)
  {
    rep.final_relative_residual = norm / r0n;
    rep.history.push_back(
        {session.counters().matvecs, rep.final_relative_residual, HistoryEvent::cycle});
  };

  for (Index iter = 0; session.counters().matvecs < max_matvecs; iter++)
  {
    const Scalar rho_new = session.dot(rhat, r);
    if (std::abs(rho_new) < kBicgstabBreakdown)
    {
      rep.breakdown = true;
      rep.warnings.push_back("rho breakdown");
      break;
    }
    if (iter == 0)
    {
      p = r;
    }
    else
    {
      const Scalar beta = (rho_new / rho) * (alpha / omega);
      for (Index i = 0; i < n; i++)
      {
        p[i] = r[i] + beta * (p[i] - omega * v[i]);
      }
      session.charge_vecops(2);
    }
    session.apply(p, v);
    const Scalar denom = session.dot(rhat, v);
    if (std::abs(denom) < kBicgstabBreakdown)
    {
      rep.breakdown = true;
      rep.warnings.push_back("rhat^H v breakdown");
      break;
    }
    alpha = rho_new / denom;
    s = r;
    session.axpy(-alpha, v, s);
    const Real sn = session.norm(s);
    rep.cycles++;
    if (sn <= target)
    {
      session.axpy(alpha, p, x);
      r = s;
      record(sn);
      rep.converged = true;
      break;
    }
    if (session.counters().matvecs >= max_matvecs)
    {
      session.axpy(alpha, p, x);
      r = s;
      record(sn);
      break;
    }
    session.apply(s, t);
    const Real tt = session.dot(t, t).real();
    omega = tt > 0.0 ? session.dot(t, s) / tt : Scalar(0.0);
    session.axpy(alpha, p, x);
    if (std::abs(omega) < kBicgstabBreakdown)
    {
      r = s;
      record(sn);
      rep.breakdown = true;
      rep.warnings.push_back("omega breakdown");
      break;
    }
    session.axpy(omega, s, x);
    r = s;
    session.axpy(-omega, t, r);
    const Real rn = session.norm(r);
    record(rn);
    if (rn <= target)
    {
      rep.converged = true;
      break;
    }
    rho = rho_new;
  }
  finish_report(session, rep, b, x, r0n);
  return res;
}

//
// Diagnostics
//

Real recurrence_defect(const LinearOperator &a, const Matrix &basis, const Matrix &h)
{
  const Index n = basis.rows();
  Real s = 0.0;
  Vector av(n);
  for (Index j = 0; j < h.cols(); j++)
  {
    a.apply(basis.col(j), av);
    for (Index i = 0; i < h.rows(); i++)
    {
      vec::axpy(-h(i, j), basis.col(i), av);
    }
    const Real nj = vec::norm(av);
    s += nj * nj;
  }
  return std::sqrt(s);
}

Real orthonormality_defect(const Matrix &basis)
{
  Real worst = 0.0;
  for (Index j = 0; j < basis.cols(); j++)
  {
    for (Index i = 0; i <= j; i++)
    {
      Scalar g = vec::dot(basis.col(i), basis.col(j));
      if (i == j)
      {
        g -= 1.0;
      }
      worst = std::max(worst, std::abs(g));
    }
  }
  return worst;
}

Real true_residual_norm(const LinearOperator &a, const Vector &b, const Vector &x)
{
  Vector ax(a.dim());
  a.apply(x, ax);
  for (Index i = 0; i < ax.size(); i++)
  {
    ax[i] = b[i] - ax[i];
  }
  return vec::norm(ax);
}

}  // namespace mrhs
