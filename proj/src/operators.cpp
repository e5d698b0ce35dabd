// SPDX-License-Identifier: Apache-2.0

#include "mrhs/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mrhs/vecops.hpp"

namespace mrhs
{

CsrMatrix::CsrMatrix(Index n, std::vector<Index> row_ptr, std::vector<Index> col_idx,
                     std::vector<Scalar> values)
  : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values))
{
  if (n_ < 0 || static_cast<Index>(row_ptr_.size()) != n_ + 1)
  {
    throw DimensionError("CsrMatrix: row offsets must have n + 1 entries");
  }
  if (col_idx_.size() != values_.size() || row_ptr_.front() != 0 ||
      row_ptr_.back() != static_cast<Index>(values_.size()))
  {
    throw DimensionError("CsrMatrix: offsets inconsistent with stored entries");
  }
  for (Index i = 0; i < n_; i++)
  {
    if (row_ptr_[i] > row_ptr_[i + 1])
    {
      throw DimensionError("CsrMatrix: row offsets decrease at row " + std::to_string(i));
    }
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      if (col_idx_[p] < 0 || col_idx_[p] >= n_)
      {
        throw DimensionError("CsrMatrix: column index out of range in row " +
                             std::to_string(i));
      }
      if (p > row_ptr_[i] && col_idx_[p] <= col_idx_[p - 1])
      {
        throw DimensionError("CsrMatrix: column indices not strictly increasing in row " +
                             std::to_string(i));
      }
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(Index n, std::vector<Triplet> entries)
{
  for (const auto &t : entries)
  {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
    {
      throw DimensionError("CsrMatrix::from_triplets: index out of range");
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet &a, const Triplet &b)
                   { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  std::vector<Index> row_ptr(static_cast<std::size_t>(n + 1), 0);
  std::vector<Index> col_idx;
  std::vector<Scalar> values;
  col_idx.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t p = 0; p < entries.size(); p++)
  {
    const auto &t = entries[p];
    if (p > 0 && entries[p - 1].row == t.row && entries[p - 1].col == t.col)
    {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    row_ptr[t.row + 1]++;
  }
  for (Index i = 0; i < n; i++)
  {
    row_ptr[i + 1] += row_ptr[i];
  }
  return CsrMatrix(n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

CsrMatrix CsrMatrix::identity(Index n)
{
  std::vector<Index> row_ptr(static_cast<std::size_t>(n + 1));
  std::vector<Index> col_idx(static_cast<std::size_t>(n));
  for (Index i = 0; i <= n; i++)
  {
    row_ptr[i] = i;
  }
  for (Index i = 0; i < n; i++)
  {
    col_idx[i] = i;
  }
  return CsrMatrix(n, std::move(row_ptr), std::move(col_idx),
                   std::vector<Scalar>(static_cast<std::size_t>(n), Scalar(1.0)));
}

CsrMatrix CsrMatrix::from_dense(const Matrix &a)
{
  if (a.rows() != a.cols())
  {
    throw DimensionError("CsrMatrix::from_dense: matrix is not square");
  }
  std::vector<Triplet> entries;
  for (Index i = 0; i < a.rows(); i++)
  {
    for (Index j = 0; j < a.cols(); j++)
    {
      if (a(i, j) != Scalar(0.0))
      {
        entries.push_back({i, j, a(i, j)});
      }
    }
  }
  return from_triplets(a.rows(), std::move(entries));
}

void CsrMatrix::apply(std::span<const Scalar> x, std::span<Scalar> y) const
{
  if (static_cast<Index>(x.size()) != n_ || static_cast<Index>(y.size()) != n_)
  {
    throw DimensionError("CsrMatrix::apply: vector length differs from dimension");
  }
  for (Index i = 0; i < n_; i++)
  {
    Real re = 0.0, im = 0.0;
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      const Scalar a = values_[p];
      const Scalar v = x[col_idx_[p]];
      re += a.real() * v.real() - a.imag() * v.imag();
      im += a.real() * v.imag() + a.imag() * v.real();
    }
    y[i] = {re, im};
  }
}

Real CsrMatrix::nnz_per_row() const
{
  return n_ > 0 ? static_cast<Real>(nnz()) / static_cast<Real>(n_) : 0.0;
}

Scalar CsrMatrix::entry(Index i, Index j) const
{
  const auto first = col_idx_.begin() + row_ptr_[i];
  const auto last = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? values_[it - col_idx_.begin()] : Scalar(0.0);
}

bool CsrMatrix::is_real() const
{
  return std::all_of(values_.begin(), values_.end(),
                     [](const Scalar &v) { return v.imag() == 0.0; });
}

Matrix CsrMatrix::to_dense() const
{
  Matrix a(n_, n_);
  for (Index i = 0; i < n_; i++)
  {
    for (Index p = row_ptr_[i]; p < row_ptr_[i + 1]; p++)
    {
      a(i, col_idx_[p]) = values_[p];
    }
  }
  return a;
}

//
// Session
//

void Session::apply(std::span<const Scalar> x, std::span<Scalar> y)
{
  op_->apply(x, y);
  counters_.matvecs++;
}

Vector Session::apply(std::span<const Scalar> x)
{
  Vector y(dim());
  apply(x, y);
  return y;
}

Vector Session::apply_check(std::span<const Scalar> x)
{
  Vector y(dim());
  op_->apply(x, y);
  counters_.check_matvecs++;
  return y;
}

Scalar Session::dot(std::span<const Scalar> x, std::span<const Scalar> y)
{
  counters_.vecops++;
  return vec::dot(x, y);
}

Real Session::norm(std::span<const Scalar> x)
{
  counters_.vecops++;
  return vec::norm(x);
}

void Session::axpy(Scalar a, std::span<const Scalar> x, std::span<Scalar> y)
{
  counters_.vecops++;
  vec::axpy(a, x, y);
}

void Session::scale(Scalar a, std::span<Scalar> x)
{
  counters_.vecops++;
  vec::scale(a, x);
}

void Session::gemv_add(const Matrix &basis, std::span<const Scalar> coeffs, std::span<Scalar> y,
                       Scalar alpha)
{
  for (std::size_t j = 0; j < coeffs.size(); j++)
  {
    axpy(alpha * coeffs[j], basis.col(static_cast<Index>(j)), y);
  }
}

Vector apply_csr(const CsrMatrix &a, std::span<const Scalar> x, OpCounters &counters)
{
  Vector y(a.dim());
  a.apply(x, y);
  counters.matvecs++;
  return y;
}

//
// Generators
//

CsrMatrix gen_bidiagonal(Index n)
{
  if (n < 2)
  {
    throw DimensionError("gen_bidiagonal: n must be at least 2");
  }
  std::vector<Real> diag(static_cast<std::size_t>(n));
  diag[0] = 0.1;
  for (Index i = 1; i < n; i++)
  {
    diag[i] = static_cast<Real>(i);
  }
  return gen_bidiagonal(diag);
}

CsrMatrix gen_bidiagonal(std::span<const Real> diagonal)
{
  const Index n = static_cast<Index>(diagonal.size());
  std::vector<Index> row_ptr(static_cast<std::size_t>(n + 1), 0);
  std::vector<Index> col_idx;
  std::vector<Scalar> values;
  col_idx.reserve(static_cast<std::size_t>(2 * n));
  values.reserve(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; i++)
  {
    col_idx.push_back(i);
    values.emplace_back(diagonal[i]);
    if (i + 1 < n)
    {
      col_idx.push_back(i + 1);
      values.emplace_back(1.0);
    }
    row_ptr[i + 1] = static_cast<Index>(values.size());
  }
  return CsrMatrix(n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

CsrMatrix gen_lattice_surrogate(Index lattice, Real kappa, std::uint64_t seed)
{
  if (lattice < 2)
  {
    throw DimensionError("gen_lattice_surrogate: lattice extent must be at least 2");
  }
  const Index L = lattice;
  const Index sites = L * L;
  const Index n = 2 * sites;

  // Link phases U_mu(x), mu = 0, 1, drawn site-major.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> angle(0.0, 2.0 * std::numbers::pi);
  std::vector<Scalar> links(static_cast<std::size_t>(2 * sites));
  for (auto &u : links)
  {
    u = std::polar(1.0, angle(rng));
  }

  // 1 -/+ sigma_mu as 2x2 row-major blocks.
  const Scalar I(0.0, 1.0);
  const Scalar minus_sigma[2][4] = {{1.0, -1.0, -1.0, 1.0}, {1.0, I, -I, 1.0}};
  const Scalar plus_sigma[2][4] = {{1.0, 1.0, 1.0, 1.0}, {1.0, -I, I, 1.0}};

  std::vector<CsrMatrix::Triplet> entries;
  entries.reserve(static_cast<std::size_t>(9 * n));
  auto site = [L](Index x0, Index x1) { return ((x0 + L) % L) + L * ((x1 + L) % L); };
  for (Index x1 = 0; x1 < L; x1++)
  {
    for (Index x0 = 0; x0 < L; x0++)
    {
      const Index s = site(x0, x1);
      entries.push_back({2 * s, 2 * s, 1.0});
      entries.push_back({2 * s + 1, 2 * s + 1, 1.0});
      if (kappa == 0.0)
      {
        continue;
      }
      for (int mu = 0; mu < 2; mu++)
      {
        const Index fwd = mu == 0 ? site(x0 + 1, x1) : site(x0, x1 + 1);
        const Index bwd = mu == 0 ? site(x0 - 1, x1) : site(x0, x1 - 1);
        const Scalar u_fwd = links[2 * s + mu];
        const Scalar u_bwd = std::conj(links[2 * bwd + mu]);
        for (int a = 0; a < 2; a++)
        {
          for (int b = 0; b < 2; b++)
          {
            entries.push_back({2 * s + a, 2 * fwd + b, -kappa * minus_sigma[mu][2 * a + b] * u_fwd});
            entries.push_back({2 * s + a, 2 * bwd + b, -kappa * plus_sigma[mu][2 * a + b] * u_bwd});
          }
        }
      }
    }
  }
  return CsrMatrix::from_triplets(n, std::move(entries));
}

}  // namespace mrhs
