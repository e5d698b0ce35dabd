// SPDX-License-Identifier: Apache-2.0

#include "mrhs/deflation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mrhs/numkernel.hpp"
#include "mrhs/vecops.hpp"

namespace mrhs
{

namespace
{

Matrix TopRows(const Matrix &a, Index count)
{
  Matrix out(count, a.cols());
  for (Index j = 0; j < a.cols(); j++)
  {
    std::copy_n(a.col(j).begin(), count, out.col(j).begin());
  }
  return out;
}

Matrix BottomRows(const Matrix &a, Index first)
{
  Matrix out(a.rows() - first, a.cols());
  for (Index j = 0; j < a.cols(); j++)
  {
    std::copy(a.col(j).begin() + first, a.col(j).end(), out.col(j).begin());
  }
  return out;
}

Matrix SelectColumns(const Matrix &a, const std::vector<Index> &which)
{
  Matrix out(a.rows(), static_cast<Index>(which.size()));
  for (std::size_t t = 0; t < which.size(); t++)
  {
    std::copy(a.col(which[t]).begin(), a.col(which[t]).end(),
              out.col(static_cast<Index>(t)).begin());
  }
  return out;
}

bool ConjugatePair(Scalar a, Scalar b)
{
  const Real scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0 || std::abs(a.imag()) <= 1e-8 * scale)
  {
    return false;
  }
  return std::abs(a - std::conj(b)) <= 1e-8 * scale;
}

}  // namespace

DeflationSubspace DeflationSubspace::empty(Index n, Index p)
{
  DeflationSubspace d;
  d.basis = Matrix(n, 1);
  if (n > 0)
  {
    d.basis(0, 0) = 1.0;
  }
  d.h = Matrix(1, 0);
  d.block_size = p;
  return d;
}

//
// Harmonic Ritz extraction
//

std::vector<HarmonicRitzPair> harmonic_ritz(const Matrix &hbar)
{
  const Index m = hbar.cols();
  if (hbar.rows() < m)
  {
    throw DimensionError("harmonic_ritz: matrix has fewer rows than columns");
  }
  std::vector<HarmonicRitzPair> out;
  if (m == 0)
  {
    return out;
  }
  Matrix mat = TopRows(hbar, m);
  if (hbar.rows() > m)
  {
    const Matrix hb = BottomRows(hbar, m);
    const Matrix f = small_dense_solve(adjoint(mat), adjoint(hb));
    const Matrix fh = multiply(f, hb);
    for (Index j = 0; j < m; j++)
    {
      for (Index i = 0; i < m; i++)
      {
        mat(i, j) += fh(i, j);
      }
    }
  }
  else
  {
    // Square case: still reject a singular H_m so both paths share one contract.
    small_dense_solve(mat, Vector(m, 1.0));
  }
  for (auto &pair : small_dense_eig(mat))
  {
    out.push_back({pair.value, std::move(pair.vector)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const HarmonicRitzPair &a, const HarmonicRitzPair &b)
                   {
                     const Real aa = std::abs(a.theta), ab = std::abs(b.theta);
                     if (aa != ab)
                     {
                       return aa < ab;
                     }
                     if (a.theta.real() != b.theta.real())
                     {
                       return a.theta.real() < b.theta.real();
                     }
                     return a.theta.imag() < b.theta.imag();
                   });
  return out;
}

std::vector<HarmonicRitzPair> harmonic_ritz(const KrylovFactorization &fact)
{
  return harmonic_ritz(fact.hessenberg);
}

std::vector<HarmonicRitzPair> harmonic_ritz(const DeflationSubspace &d)
{
  return harmonic_ritz(d.h);
}

Vector ritz_vector(const Matrix &basis, const HarmonicRitzPair &pair)
{
  Vector y(basis.rows());
  for (Index j = 0; j < pair.g.size(); j++)
  {
    vec::axpy(pair.g[j], basis.col(j), y);
  }
  return y;
}

Index select_count(const std::vector<HarmonicRitzPair> &pairs, Index k, Index limit)
{
  const Index avail = static_cast<Index>(pairs.size());
  k = std::min({k, avail, limit});
  if (k <= 0)
  {
    return 0;
  }
  if (k < avail && k + 1 <= limit && ConjugatePair(pairs[k - 1].theta, pairs[k].theta))
  {
    return k + 1;
  }
  return k;
}

//
// Deflated restart
//

DeflationSubspace gmresdr_restart(Session &session, const KrylovFactorization &fact, Index k,
                                  const Matrix &short_residual, Matrix *new_rhs_coeffs,
                                  std::vector<std::string> *warnings)
{
  const Index steps = fact.steps();
  const Index bs = fact.basis_size();
  auto warn = [&](std::string msg)
  {
    if (warnings)
    {
      warnings->push_back(std::move(msg));
    }
  };

  std::vector<HarmonicRitzPair> pairs;
  if (k > 0)
  {
    try
    {
      pairs = harmonic_ritz(fact.hessenberg);
    }
    catch (const SingularMatrixError &)
    {
      warn("singular projected matrix; restarting without approximate eigenvectors");
    }
    catch (const ConvergenceError &)
    {
      warn("harmonic Ritz iteration failed; restarting without approximate eigenvectors");
    }
  }
  const Index limit = std::max<Index>(steps - 1, 0);
  const Index kk = pairs.empty() ? 0 : select_count(pairs, k, limit);
  if (!pairs.empty() && kk < k)
  {
    warn("only " + std::to_string(kk) + " of " + std::to_string(k) +
         " approximate eigenvectors available; k reduced for this restart");
  }

  // Columns of P: harmonic coefficient vectors first, then the orthogonal complement of
  // range(Hbar), which contains every short residual.
  GivensLeastSquares qr(Matrix(bs, 0));
  for (Index j = 0; j < steps; j++)
  {
    qr.push_column(fact.hessenberg.col(j));
  }
  const Matrix null = qr.null_space_basis();

  Matrix p(bs, 0);
  p.reserve_cols(kk + null.cols());
  std::vector<Scalar> proj(static_cast<std::size_t>(kk + null.cols()));
  Index kept_g = 0;
  auto append = [&](Vector v) -> bool
  {
    bool dependent = false;
    orthonormalize_in_place(v, p, p.cols(), std::span<Scalar>(proj).first(p.cols()),
                            dependent);
    if (dependent)
    {
      return false;
    }
    p.resize_cols(p.cols() + 1);
    std::copy(v.begin(), v.end(), p.col(p.cols() - 1).begin());
    return true;
  };
  for (Index i = 0; i < kk; i++)
  {
    Vector g(bs);
    std::copy(pairs[i].g.begin(), pairs[i].g.end(), g.begin());
    if (append(std::move(g)))
    {
      kept_g++;
    }
  }
  if (kept_g < kk)
  {
    warn("approximate eigenvectors lost to rank deficiency; k reduced to " +
         std::to_string(kept_g));
  }
  for (Index j = 0; j < null.cols(); j++)
  {
    if (!append(Vector(null.col(j))))
    {
      warn("residual direction dependent on approximate eigenvectors; dropped");
    }
  }

  DeflationSubspace out;
  out.block_size = fact.block_size;
  out.basis = multiply(fact.basis, p);
  session.charge_vecops(bs * p.cols());
  Matrix pk(steps, kept_g);
  for (Index j = 0; j < kept_g; j++)
  {
    std::copy_n(p.col(j).begin(), steps, pk.col(j).begin());
  }
  out.h = multiply_adjoint(p, multiply(fact.hessenberg, pk));
  if (new_rhs_coeffs)
  {
    *new_rhs_coeffs = multiply_adjoint(p, short_residual);
  }
  return out;
}

void DrConfig::validate() const
{
  if (m < 1)
  {
    throw ConfigError("m", "must be at least 1");
  }
  if (k < 0 || k >= m)
  {
    throw ConfigError("k", "must satisfy 0 <= k < m");
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

namespace detail
{

DrEngineOutcome deflated_restart_solve(const LinearOperator &a, const Matrix &b,
                                       const DrEngineConfig &cfg)
{
  const Index n = a.dim();
  const Index nrhs = b.cols();
  if (b.rows() != n)
  {
    throw DimensionError("right-hand side length differs from operator dimension");
  }
  Session session(a);
  DrEngineOutcome out;
  out.x = Matrix(n, nrhs);
  out.columns.resize(static_cast<std::size_t>(nrhs));

  std::vector<Real> norm0(static_cast<std::size_t>(nrhs));
  std::vector<Index> active;
  for (Index j = 0; j < nrhs; j++)
  {
    norm0[j] = session.norm(b.col(j));
    if (norm0[j] == 0.0)
    {
      out.columns[j].converged = true;
      out.columns[j].final_relative_residual = 0.0;
    }
    else
    {
      active.push_back(j);
    }
  }

  if (!active.empty())
  {
    Matrix coeffs;
    KrylovFactorization fact = start_factorization(session, SelectColumns(b, active), coeffs);
    fact.block_size = cfg.block_size;
    Index total = std::min(cfg.m, cfg.max_matvecs);
    while (true)
    {
      const std::int64_t before = session.counters().matvecs;
      ProjectedSolution ps = extend_and_minimize(session, fact, coeffs, total);
      out.cycles++;
      if (fact.deflated > 0)
      {
        out.warnings.push_back("cycle " + std::to_string(out.cycles) + ": block basis dropped " +
                               std::to_string(fact.deflated) + " dependent direction(s)");
      }
      const Index steps = fact.steps();
      for (std::size_t t = 0; t < active.size(); t++)
      {
        auto x = out.x.col(active[t]);
        for (Index j = 0; j < steps; j++)
        {
          session.axpy(ps.coeffs(j, static_cast<Index>(t)), fact.basis.col(j), x);
        }
      }

      std::vector<Index> still_active;
      std::vector<Index> keep_cols;
      for (std::size_t t = 0; t < active.size(); t++)
      {
        const Index j = active[t];
        SolveReport &rep = out.columns[j];
        rep.cycles = out.cycles;
        rep.final_relative_residual = ps.residual_norms[t] / norm0[j];
        const std::int64_t mv = session.counters().matvecs;
        rep.history.push_back({mv, rep.final_relative_residual, HistoryEvent::cycle});
        if (rep.final_relative_residual <= cfg.rtol)
        {
          rep.converged = true;
          rep.history.push_back({mv, rep.final_relative_residual, HistoryEvent::converged});
        }
        else
        {
          still_active.push_back(j);
          keep_cols.push_back(static_cast<Index>(t));
        }
      }

      const Index remaining = cfg.max_matvecs - session.counters().matvecs;
      const Matrix s_active = SelectColumns(ps.short_residual, keep_cols);
      Matrix next_coeffs;
      out.subspace = gmresdr_restart(session, fact, cfg.k, s_active, &next_coeffs, &out.warnings);
      active = std::move(still_active);

      if (active.empty() || remaining <= 0)
      {
        break;
      }
      if (session.counters().matvecs == before)
      {
        out.warnings.push_back("cycle made no progress; stopping");
        break;
      }
      fact = KrylovFactorization{out.subspace.basis, out.subspace.h, cfg.block_size, false};
      if (fact.basis_size() <= fact.steps())
      {
        out.warnings.push_back("no residual direction left after restart; stopping");
        break;
      }
      coeffs = std::move(next_coeffs);
      total = fact.steps() + std::min(cfg.m - fact.steps(), remaining);
    }
  }
  else
  {
    out.subspace = DeflationSubspace::empty(n, cfg.block_size);
  }

  for (Index j = 0; j < nrhs; j++)
  {
    SolveReport &rep = out.columns[j];
    rep.warnings = out.warnings;
    finish_report(session, rep, b.col(j), out.x.col(j), norm0[j]);
  }
  out.counters = session.counters();
  for (auto &rep : out.columns)
  {
    rep.counters = out.counters;
  }
  return out;
}

}  // namespace detail

GmresDrResult gmres_dr_solve(const LinearOperator &a, const Vector &b, const DrConfig &cfg)
{
  cfg.validate();
  Matrix bm(b.size(), 1);
  std::copy(b.begin(), b.end(), bm.col(0).begin());
  detail::DrEngineOutcome eng =
      detail::deflated_restart_solve(a, bm, {cfg.m, cfg.k, cfg.rtol, cfg.max_matvecs, 1});
  GmresDrResult res;
  res.x = Vector(eng.x.col(0));
  res.report = std::move(eng.columns[0]);
  res.subspace = std::move(eng.subspace);
  return res;
}

//
// Projections
//

void minres_project_general(Session &session, const Matrix &v, Vector &x, Vector &r,
                            std::vector<std::string> *warnings)
{
  const Index q = v.cols();
  if (q == 0)
  {
    return;
  }
  Matrix w(v.rows(), q);
  for (Index j = 0; j < q; j++)
  {
    session.apply(v.col(j), w.col(j));
  }

  auto solve_subset = [&](const std::vector<Index> &cols) -> Vector
  {
    const Index s = static_cast<Index>(cols.size());
    Matrix g(s, s);
    Vector rhs(s);
    for (Index i = 0; i < s; i++)
    {
      for (Index j = i; j < s; j++)
      {
        g(i, j) = session.dot(w.col(cols[i]), w.col(cols[j]));
        g(j, i) = std::conj(g(i, j));
      }
      rhs[i] = session.dot(w.col(cols[i]), r);
    }
    return small_dense_solve(g, rhs);
  };

  std::vector<Index> cols(static_cast<std::size_t>(q));
  for (Index j = 0; j < q; j++)
  {
    cols[j] = j;
  }
  Vector d;
  try
  {
    d = solve_subset(cols);
  }
  catch (const SingularMatrixError &)
  {
    if (warnings)
    {
      warnings->push_back("projection normal equations singular; using independent subset");
    }
    // Keep the columns of AV that are independent of their predecessors.
    Matrix qbasis(v.rows(), 0);
    std::vector<Scalar> proj(static_cast<std::size_t>(q));
    cols.clear();
    for (Index j = 0; j < q; j++)
    {
      Vector t(w.col(j));
      bool dependent = false;
      orthonormalize_in_place(t, qbasis, qbasis.cols(),
                              std::span<Scalar>(proj).first(qbasis.cols()), dependent);
      if (!dependent)
      {
        qbasis.resize_cols(qbasis.cols() + 1);
        std::copy(t.begin(), t.end(), qbasis.col(qbasis.cols() - 1).begin());
        cols.push_back(j);
      }
    }
    d = Vector(q);
    if (!cols.empty())
    {
      const Vector ds = solve_subset(cols);
      for (std::size_t t = 0; t < cols.size(); t++)
      {
        d[cols[t]] = ds[static_cast<Index>(t)];
      }
    }
  }
  for (Index j = 0; j < q; j++)
  {
    if (d[j] != Scalar(0.0))
    {
      session.axpy(d[j], v.col(j), x);
      session.axpy(-d[j], w.col(j), r);
    }
  }
}

void minres_project_compact(Session &session, const DeflationSubspace &d, std::span<Scalar> x,
                            std::span<Scalar> r)
{
  const Index k = d.k();
  if (k == 0)
  {
    return;
  }
  const Index q = d.basis.cols();
  Vector c(q);
  for (Index i = 0; i < q; i++)
  {
    c[i] = session.dot(d.basis.col(i), r);
  }
  const Vector coef = least_squares(d.h, c).solution;
  for (Index j = 0; j < k; j++)
  {
    session.axpy(coef[j], d.basis.col(j), x);
  }
  const Vector hd = multiply(d.h, coef);
  for (Index i = 0; i < q; i++)
  {
    session.axpy(-hd[i], d.basis.col(i), r);
  }
}

Augmentation make_augmentation(const DeflationSubspace &d, OpCounters *counters)
{
  Augmentation aug;
  aug.vectors = columns(d.basis, 0, d.k());
  aug.images = multiply(d.basis, d.h);
  if (counters)
  {
    counters->vecops += d.basis.cols() * d.k();
  }
  return aug;
}

//
// Serialization
//

namespace
{

constexpr char kMagic[8] = {'M', 'R', 'H', 'S', 'D', 'E', 'F', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void Put(std::ostream &out, T value)
{
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T>
T Get(std::istream &in)
{
  T value{};
  if (!in.read(reinterpret_cast<char *>(&value), sizeof(T)))
  {
    throw ParseError("truncated deflation subspace container", 0);
  }
  return value;
}

void PutMatrix(std::ostream &out, const Matrix &m)
{
  for (Index j = 0; j < m.cols(); j++)
  {
    for (const Scalar &v : m.col(j))
    {
      Put<double>(out, v.real());
      Put<double>(out, v.imag());
    }
  }
}

Matrix GetMatrix(std::istream &in, Index rows, Index cols)
{
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; j++)
  {
    for (Scalar &v : m.col(j))
    {
      const double re = Get<double>(in);
      const double im = Get<double>(in);
      v = {re, im};
    }
  }
  return m;
}

}  // namespace

void write_deflation_subspace(const DeflationSubspace &d, std::ostream &out)
{
  out.write(kMagic, sizeof(kMagic));
  Put<std::uint32_t>(out, kVersion);
  Put<std::int64_t>(out, d.dim());
  Put<std::int64_t>(out, d.k());
  Put<std::int64_t>(out, d.block_size);
  Put<std::int64_t>(out, d.basis.cols());
  PutMatrix(out, d.basis);
  PutMatrix(out, d.h);
}

DeflationSubspace read_deflation_subspace(std::istream &in)
{
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
  {
    throw ParseError("not a deflation subspace container", 0);
  }
  const auto version = Get<std::uint32_t>(in);
  if (version != kVersion)
  {
    throw ParseError("unsupported container version " + std::to_string(version), 0);
  }
  const auto n = Get<std::int64_t>(in);
  const auto k = Get<std::int64_t>(in);
  const auto p = Get<std::int64_t>(in);
  const auto vcols = Get<std::int64_t>(in);
  if (n < 0 || k < 0 || p < 1 || vcols < k || vcols > n + 1)
  {
    throw ParseError("inconsistent deflation subspace header", 0);
  }
  DeflationSubspace d;
  d.block_size = p;
  d.basis = GetMatrix(in, n, vcols);
  d.h = GetMatrix(in, vcols, k);
  return d;
}

void save_deflation_subspace(const DeflationSubspace &d, const std::filesystem::path &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error("cannot write " + path.string());
  }
  write_deflation_subspace(d, out);
  if (!out)
  {
    throw Error("write failed for " + path.string());
  }
}

DeflationSubspace load_deflation_subspace(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error("cannot open " + path.string());
  }
  return read_deflation_subspace(in);
}

}  // namespace mrhs
