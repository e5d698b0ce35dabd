// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when any criterion fails.

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mrhs/block.hpp"
#include "mrhs/harness.hpp"
#include "mrhs/vecops.hpp"
#include "test_util.hpp"

using namespace mrhs;
using mrhs::test::Rng;

namespace
{

constexpr std::uint64_t kSeed = 42;

struct Check
{
  std::string name;
  bool ok = false;
  std::string detail;
};

struct Criterion
{
  int id = 0;
  std::vector<Check> checks;

  void add(const std::string &name, bool ok, const std::string &detail)
  {
    checks.push_back({name, ok, detail});
  }
  bool ok() const
  {
    return std::all_of(checks.begin(), checks.end(), [](const Check &c) { return c.ok; });
  }
};

std::string fmt(const char *format, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

bool within(double value, double target, double frac)
{
  return std::abs(value - target) <= frac * target;
}

SuiteResult suite(const std::string &name)
{
  SuiteOptions opts;
  opts.seed = kSeed;
  opts.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return run_suite(name, opts);
}

std::int64_t total(const SuiteResult &s, const std::string &label)
{
  return s.cell(label).record.totals.matvecs;
}

Matrix stack(const std::vector<Vector> &cols)
{
  Matrix m(cols.front().size(), static_cast<Index>(cols.size()));
  for (Index j = 0; j < m.cols(); j++)
  {
    std::copy(cols[j].begin(), cols[j].end(), m.col(j).begin());
  }
  return m;
}

Real condition_number(const Matrix &a)
{
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(test::to_eigen(a));
  const auto &sv = svd.singularValues();
  return sv(0) / sv(sv.size() - 1);
}

/// Largest matvec offset and residual gap between two histories; -1 when the shapes differ.
std::pair<std::int64_t, Real> history_gap(const std::vector<HistoryEntry> &a,
                                          const std::vector<HistoryEntry> &b)
{
  if (a.size() != b.size())
  {
    return {-1, INFINITY};
  }
  std::int64_t mv = 0;
  Real res = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    if (a[i].event != b[i].event)
    {
      return {-1, INFINITY};
    }
    mv = std::max(mv, std::abs(a[i].matvecs - b[i].matvecs));
    res = std::max(res, std::abs(a[i].relative_residual - b[i].relative_residual));
  }
  return {mv, res};
}

Vector ex1_rhs(std::uint64_t seed, Index index)
{
  RhsSpec spec;
  spec.count = index + 1;
  spec.seed = seed;
  return build_rhs(spec, 2000, true)[index];
}

Criterion first_rhs()
{
  Criterion c{1};
  const CsrMatrix a = gen_bidiagonal(2000);
  for (std::uint64_t seed = kSeed; seed < kSeed + 5; seed++)
  {
    const GmresDrResult r = gmres_dr_solve(a, ex1_rhs(seed, 0), {25, 10, 1e-6, 10000});
    const auto mv = r.report.counters.matvecs;
    c.add(fmt("seed %llu", static_cast<unsigned long long>(seed)),
          r.report.converged && mv >= 230 && mv <= 340, fmt("%lld matvecs", (long long)mv));
  }
  return c;
}

Criterion second_rhs(const SuiteResult &s)
{
  Criterion c{2};
  const auto &proj = s.cell("gmres_proj_15_10").record;
  const auto pmv = proj.matvecs_for(1);
  c.add("GMRES(15)-Proj(10) in 105-160", proj.report_for(1).converged && pmv >= 105 && pmv <= 160,
        fmt("%lld", (long long)pmv));

  const auto &bi = s.cell("bicgstab").record;
  const auto bmv = bi.matvecs_for(1);
  // Context only: the same count on neighbouring seeds.
  std::string spread;
  const CsrMatrix a = gen_bidiagonal(2000);
  for (std::uint64_t seed = kSeed + 1; seed <= kSeed + 5; seed++)
  {
    const SolveResult r = bicgstab(a, ex1_rhs(seed, 1), 1e-6, 10000);
    spread += (spread.empty() ? "" : " ") + std::to_string(r.report.counters.matvecs);
  }
  c.add("BiCGStab in 290-440", bi.report_for(1).converged && bmv >= 290 && bmv <= 440,
        fmt("%lld (seeds %llu-%llu: %s)", (long long)bmv, (unsigned long long)(kSeed + 1),
            (unsigned long long)(kSeed + 5), spread.c_str()));

  const auto &gm = s.cell("gmres_15").record;
  c.add("GMRES(15) not converged within 600", !gm.report_for(1).converged && gm.matvecs_for(1) <= 600,
        fmt("%lld matvecs, residual %.2e", (long long)gm.matvecs_for(1),
            gm.report_for(1).final_relative_residual));
  return c;
}

Criterion table31_every_cycle(const SuiteResult &s)
{
  Criterion c{3};
  const std::map<Index, double> target = {{5, 2440}, {10, 1658}, {15, 1405}, {20, 1298}, {25, 1257}};
  std::int64_t prev = -1;
  bool decreasing = true;
  std::string seq;
  for (const auto &[m, t] : target)
  {
    const auto v = total(s, "m" + std::to_string(m) + "_every_cycle");
    c.add(fmt("m=%d within 15%% of %.0f", (int)m, t), within(v, t, 0.15), fmt("%lld", (long long)v));
    decreasing = decreasing && (prev < 0 || v < prev);
    prev = v;
    seq += (seq.empty() ? "" : " > ") + std::to_string(v);
  }
  c.add("strictly decreasing in m", decreasing, seq);
  return c;
}

Criterion table31_schedules(const SuiteResult &s)
{
  Criterion c{4};
  const auto e5 = total(s, "m20_every_jth:5");
  const auto e10 = total(s, "m20_every_jth:10");
  const auto every = total(s, "m20_every_cycle");
  c.add("every 5th within 15% of 1330", within(e5, 1330, 0.15), fmt("%lld", (long long)e5));
  c.add("every 10th >= 1.4x every cycle", e10 >= 1.4 * every,
        fmt("%lld vs %lld (%.2fx)", (long long)e10, (long long)every, double(e10) / every));
  return c;
}

Criterion accuracy_study(const SuiteResult &s)
{
  Criterion c{5};
  const auto &r6 = s.cell("first_rtol_1e-06").record;
  const auto &r8 = s.cell("first_rtol_1e-08").record;
  const auto &r10 = s.cell("first_rtol_1e-10").record;
  c.add("total(1e-8) < total(1e-6)", r8.totals.matvecs < r6.totals.matvecs,
        fmt("%lld < %lld", (long long)r8.totals.matvecs, (long long)r6.totals.matvecs));
  bool same = true;
  std::string a, b;
  for (Index i = 1; i < 10; i++)
  {
    same = same && r8.matvecs_for(i) == r10.matvecs_for(i);
    a += (i > 1 ? " " : "") + std::to_string(r8.matvecs_for(i));
    b += (i > 1 ? " " : "") + std::to_string(r10.matvecs_for(i));
  }
  c.add("later counts equal for 1e-10 and 1e-8", same, "1e-8: " + a + " | 1e-10: " + b);
  return c;
}

Criterion proj_vs_e(const SuiteResult &s)
{
  Criterion c{6};
  for (Index m : {5, 10, 15, 20, 25})
  {
    const auto p = total(s, "m" + std::to_string(m) + "_gmres_proj");
    const auto e = total(s, "m" + std::to_string(m) + "_gmres_e");
    c.add(fmt("m=%d within 10%%", (int)m), std::abs(p - e) <= 0.10 * std::min(p, e),
          fmt("%lld vs %lld", (long long)p, (long long)e));
  }
  return c;
}

Criterion related(const SuiteResult &s, const SuiteResult &t31)
{
  Criterion c{7};
  const auto rel = total(s, "related_every_jth5");
  const auto unrel = total(t31, "m15_every_cycle");
  c.add("related total in 420-630", rel >= 420 && rel <= 630, fmt("%lld", (long long)rel));
  c.add(">= 2.5x fewer than unrelated", 2.5 * rel <= unrel,
        fmt("%lld vs %lld (%.2fx)", (long long)rel, (long long)unrel, double(unrel) / rel));
  return c;
}

Criterion block_table(const SuiteResult &s)
{
  Criterion c{8};
  const auto p5 = total(s, "block_p5");
  const auto p10 = total(s, "block_p10");
  const auto &p20 = s.cell("block_p20").record;
  const auto nb = total(s, "gmres_dr_proj");
  c.add("p=5 within 15% of 4169", within(p5, 4169, 0.15) && s.cell("block_p5").record.all_converged,
        fmt("%lld", (long long)p5));
  c.add("p=10 within 15% of 4960", within(p10, 4960, 0.15) && s.cell("block_p10").record.all_converged,
        fmt("%lld", (long long)p10));
  c.add("p=20 first solve fails within 10000", !p20.solves.front().converged,
        fmt("first solve %s in %lld matvecs", p20.solves.front().converged ? "converged" : "not converged",
            (long long)p20.solves.front().counters.matvecs));
  c.add("non-block within 15% of 5151", within(nb, 5151, 0.15) && s.cell("gmres_dr_proj").record.all_converged,
        fmt("%lld", (long long)nb));
  return c;
}

Criterion properties()
{
  Criterion c{9};
  const CsrMatrix ex1 = gen_bidiagonal(2000);
  const Vector b0 = ex1_rhs(kSeed, 0);

  // (a) Truncating the budget at each cycle boundary yields the subspace of that restart.
  {
    const GmresDrResult full = gmres_dr_solve(ex1, b0, {25, 10, 1e-6, 10000});
    Real worst_rec = 0.0, worst_orth = 0.0;
    bool ok = full.report.converged;
    for (Index cyc = 1; cyc <= full.report.cycles; cyc++)
    {
      const GmresDrResult part = gmres_dr_solve(ex1, b0, {25, 10, 1e-6, 25 + (cyc - 1) * 15});
      const DeflationSubspace &d = part.subspace;
      const Real rec = recurrence_defect(ex1, d.basis, d.h) / frobenius_norm(d.h);
      const Real orth = orthonormality_defect(d.basis);
      worst_rec = std::max(worst_rec, rec);
      worst_orth = std::max(worst_orth, orth);
      ok = ok && part.report.cycles == cyc && rec <= 1e-8 && orth <= 1e-10;
    }
    c.add("(a) invariants on every restart", ok,
          fmt("%lld restarts, recurrence %.1e, orthonormality %.1e", (long long)full.report.cycles,
              worst_rec, worst_orth));
  }

  // (b) Forward error within cond(A) * rtol and true residual within rtol.
  {
    Rng rng(900);
    const Real rtol = 1e-10;
    bool ok = true;
    Real worst = 0.0;
    for (int t = 0; t < 20; t++)
    {
      const Index n = 20 + 2 * t;
      const Real shift = 2.5 + 1.5 * std::sqrt(0.15 * static_cast<Real>(n));
      const CsrMatrix a = test::random_sparse(rng, n, 0.15, shift, t % 4 == 0);
      const Matrix dense = a.to_dense();
      const Real kappa = condition_number(dense);
      const Vector b1 = rng.vector(n), b2 = rng.vector(n);
      const GmresDrResult g = gmres_dr_solve(a, b1, {std::min<Index>(20, n), 5, rtol, 20000});
      const BlockDrResult bl = bl_gmres_dr_solve(a, stack({b1, b2}), {24, 2, 6, rtol, 20000});
      ok = ok && g.report.converged && bl.report.converged;
      const std::vector<std::pair<Vector, Vector>> pairs = {
          {g.x, b1}, {Vector(bl.x.col(0)), b1}, {Vector(bl.x.col(1)), b2}};
      for (const auto &[x, b] : pairs)
      {
        const Real err = test::rel_diff(x, test::dense_solve(dense, b));
        worst = std::max(worst, err / (kappa * rtol));
        ok = ok && err <= kappa * rtol &&
             true_residual_norm(a, b, x) <= rtol * norm2(b) * 1.01;
      }
    }
    c.add("(b) dense-oracle agreement, 20 systems", ok,
          fmt("worst forward error %.2f of cond*rtol", worst));
  }

  // (c), (d) Compact against general projection.
  {
    Rng rng(901);
    bool agree = true, cost = true;
    Real worst = 0.0;
    for (int t = 0; t < 50; t++)
    {
      const Index n = 30 + t;
      const Real shift = 2.5 + 1.5 * std::sqrt(0.15 * static_cast<Real>(n));
      const CsrMatrix a = test::random_sparse(rng, n, 0.15, shift, t % 3 == 0);
      const GmresDrResult dr = gmres_dr_solve(a, rng.vector(n), {16, 3 + t % 6, 1e-8, 4000});
      const DeflationSubspace &d = dr.subspace;
      const Index k = d.k();
      const Vector b = rng.vector(n);
      Vector x1(n), r1 = b, x2(n), r2 = b;
      Session s1(a), s2(a);
      minres_project_compact(s1, d, x1, r1);
      minres_project_general(s2, columns(d.basis, 0, k), x2, r2);
      const Real diff = test::rel_diff(x1, x2);
      worst = std::max(worst, diff);
      agree = agree && dr.report.converged && k >= 1 && diff <= 1e-9;
      cost = cost && s1.counters().matvecs == 0 && s1.counters().vecops == 3 * k + 2;
    }
    c.add("(c) compact matches general, 50 instances", agree, fmt("worst %.1e", worst));
    c.add("(d) compact vecops exactly 3k+2", cost, "50 instances");
  }

  // (e) p = 1 block solvers against their single-vector counterparts.
  {
    const GmresDrResult g = gmres_dr_solve(ex1, b0, {25, 10, 1e-6, 10000});
    const BlockDrResult bl = bl_gmres_dr_solve(ex1, stack({b0}), {25, 1, 10, 1e-6, 10000});
    const auto [dmv, dres] = history_gap(g.report.history, bl.report.columns[0].history);
    const Vector b1 = ex1_rhs(kSeed, 1);
    ProjConfig pc;
    pc.m = 15;
    BlockProjConfig bc;
    bc.m = 15;
    const SolveResult gp = gmres_proj_solve(ex1, b1, g.subspace, pc);
    const BlockSolveResult bp = bl_gmres_proj_solve(ex1, stack({b1}), g.subspace, bc);
    const auto [pmv, pres] = history_gap(gp.report.history, bp.report.columns[0].history);
    const bool ok =
        std::abs(g.report.counters.matvecs - bl.report.counters.matvecs) <= 1 &&
        std::abs(gp.report.counters.matvecs - bp.report.counters.matvecs) <= 1 && dmv >= 0 &&
        dmv <= 1 && dres <= 1e-10 && pmv >= 0 && pmv <= 1 && pres <= 1e-10;
    c.add("(e) p=1 block equals non-block", ok,
          fmt("DR %lld/%lld gap %.1e, Proj %lld/%lld gap %.1e", (long long)g.report.counters.matvecs,
              (long long)bl.report.counters.matvecs, dres, (long long)gp.report.counters.matvecs,
              (long long)bp.report.counters.matvecs, pres));
  }

  // (f) Harmonic Ritz values of the full Krylov space are the eigenvalues.
  {
    Rng rng(902);
    bool ok = true;
    Real worst = 0.0;
    for (Index n = 3; n <= 12; n++)
    {
      const CsrMatrix a = test::random_sparse(rng, n, 0.5, 2.0, n % 2 == 0);
      Session s(a);
      Matrix block(n, 1), coeffs;
      const Vector r = rng.vector(n);
      std::copy(r.begin(), r.end(), block.col(0).begin());
      KrylovFactorization f = start_factorization(s, block, coeffs);
      arnoldi_extend(s, f, n);
      std::vector<Scalar> theta;
      for (const auto &p : harmonic_ritz(f))
      {
        theta.push_back(p.theta);
      }
      const Real dist = test::set_distance(theta, test::dense_eigenvalues(a.to_dense()));
      worst = std::max(worst, dist);
      ok = ok && f.steps() == n && dist <= 1e-8;
    }
    c.add("(f) harmonic Ritz equals eigenvalues, n=3..12", ok, fmt("worst %.1e", worst));
  }
  return c;
}

/// The hard lattice configuration: L = 8, kappa = 0.35, seed 42.
Criterion lattice()
{
  Criterion c{10};
  ExperimentConfig proj;
  proj.name = "lattice-hard";
  proj.matrix.generator = "lattice";
  proj.matrix.lattice = 8;
  proj.matrix.kappa = 0.35;
  proj.matrix.seed = kSeed;
  proj.rhs.count = 2;
  proj.rhs.seed = kSeed;
  proj.first.solver = "gmres_dr";
  proj.first.m = 30;
  proj.first.k = 10;
  proj.first.rtol = 1e-10;
  SolverSpec rest;
  rest.solver = "gmres_proj";
  rest.m = 20;
  rest.k = 10;
  rest.rtol = 1e-8;
  proj.rest = rest;

  ExperimentConfig plain = proj;
  plain.rest->solver = "gmres";

  const RunRecord a = run_experiment(proj);
  const RunRecord b = run_experiment(plain);
  const auto pmv = a.matvecs_for(1), gmv = b.matvecs_for(1);
  c.add("first solve converged", a.report_for(0).converged, fmt("%lld", (long long)a.matvecs_for(0)));
  c.add("GMRES(20)-Proj(10) <= half of GMRES(20)",
        a.report_for(1).converged && b.report_for(1).converged && 2 * pmv <= gmv,
        fmt("%lld vs %lld (%.2fx)", (long long)pmv, (long long)gmv, double(gmv) / pmv));
  return c;
}

void print(const Criterion &c)
{
  std::printf("Criterion %d: %s\n", c.id, c.ok() ? "PASS" : "FAIL");
  for (const auto &k : c.checks)
  {
    std::printf("    [%s] %s: %s\n", k.ok ? "ok" : "FAIL", k.name.c_str(), k.detail.c_str());
  }
  std::fflush(stdout);
}

}  // namespace

int main()
{
  std::vector<Criterion> all;
  auto run = [&](Criterion c)
  {
    print(c);
    all.push_back(std::move(c));
  };

  run(first_rhs());
  run(second_rhs(suite("ex1-fig31")));
  const SuiteResult t31 = suite("table31");
  run(table31_every_cycle(t31));
  run(table31_schedules(t31));
  run(accuracy_study(suite("sec34")));
  run(proj_vs_e(suite("table32")));
  run(related(suite("sec37"), t31));
  run(block_table(suite("table41-subset")));
  run(properties());
  run(lattice());

  std::sort(all.begin(), all.end(), [](const Criterion &x, const Criterion &y) { return x.id < y.id; });
  std::printf("\nSummary\n");
  int failed = 0;
  for (const auto &c : all)
  {
    std::printf("Criterion %d: %s\n", c.id, c.ok() ? "PASS" : "FAIL");
    failed += c.ok() ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
