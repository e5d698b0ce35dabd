// SPDX-License-Identifier: Apache-2.0

#include "mrhs/numkernel.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "mrhs/vecops.hpp"

namespace mrhs
{

namespace
{

// Rotation G = [c s; -conj(s) c] with real c such that G [a; b] = [r; 0].
void MakeRotation(Scalar a, Scalar b, Real &c, Scalar &s, Scalar &r)
{
  if (b == Scalar(0.0))
  {
    c = 1.0;
    s = 0.0;
    r = a;
    return;
  }
  if (a == Scalar(0.0))
  {
    const Real bb = std::abs(b);
    c = 0.0;
    s = std::conj(b) / bb;
    r = bb;
    return;
  }
  const Real aa = std::abs(a), bb = std::abs(b);
  const Real t = std::hypot(aa, bb);
  const Scalar phase = a / aa;
  c = aa / t;
  s = phase * std::conj(b) / t;
  r = phase * t;
}

inline void ApplyRotation(Real c, Scalar s, Scalar &x, Scalar &y)
{
  const Scalar xn = c * x + s * y;
  y = -std::conj(s) * x + c * y;
  x = xn;
}

inline void ApplyRotationAdjoint(Real c, Scalar s, Scalar &x, Scalar &y)
{
  const Scalar xn = c * x - s * y;
  y = std::conj(s) * x + c * y;
  x = xn;
}

}  // namespace

//
// GivensLeastSquares
//

GivensLeastSquares::GivensLeastSquares(const Matrix &rhs)
  : g_(static_cast<std::size_t>(rhs.cols())), rows_(rhs.rows())
{
  for (Index j = 0; j < rhs.cols(); j++)
  {
    g_[j].assign(rhs.col(j).begin(), rhs.col(j).end());
  }
}

GivensLeastSquares::GivensLeastSquares(std::span<const Scalar> rhs)
  : g_(1, std::vector<Scalar>(rhs.begin(), rhs.end())), rows_(static_cast<Index>(rhs.size()))
{
}

void GivensLeastSquares::grow_rows(Index rows)
{
  if (rows <= rows_)
  {
    return;
  }
  for (auto &g : g_)
  {
    g.resize(static_cast<std::size_t>(rows), Scalar(0.0));
  }
  rows_ = rows;
}

void GivensLeastSquares::push_column(std::span<const Scalar> column)
{
  const Index j = cols_;
  grow_rows(std::max<Index>(static_cast<Index>(column.size()), j + 1));
  std::vector<Scalar> h(static_cast<std::size_t>(rows_), Scalar(0.0));
  std::copy(column.begin(), column.end(), h.begin());
  for (const auto &v : column)
  {
    norm_sq_ += std::norm(v);
  }

  for (const auto &rot : rotations_)
  {
    ApplyRotation(rot.c, rot.s, h[rot.row], h[rot.row + 1]);
  }

  // Eliminate everything below the diagonal, bottom up.
  Index last = rows_ - 1;
  while (last > j && h[last] == Scalar(0.0))
  {
    last--;
  }
  for (Index r = last; r > j; r--)
  {
    Rotation rot{r - 1, 0.0, 0.0};
    Scalar top;
    MakeRotation(h[r - 1], h[r], rot.c, rot.s, top);
    h[r - 1] = top;
    h[r] = 0.0;
    for (auto &g : g_)
    {
      ApplyRotation(rot.c, rot.s, g[r - 1], g[r]);
    }
    rotations_.push_back(rot);
  }

  r_.emplace_back(h.begin(), h.begin() + j + 1);
  cols_++;
}

Real GivensLeastSquares::residual_norm(Index rhs) const
{
  const auto &g = g_[rhs];
  return norm2({g.data() + cols_, static_cast<std::size_t>(rows_ - cols_)});
}

Vector GivensLeastSquares::solve(Index rhs) const
{
  const Real tol = kRankTol * std::sqrt(norm_sq_);
  const auto &g = g_[rhs];
  Vector d(cols_);
  for (Index i = cols_ - 1; i >= 0; i--)
  {
    const Scalar rii = r_[i][i];
    if (std::abs(rii) <= tol)
    {
      throw RankDeficientError("least squares: matrix is rank deficient at column " +
                               std::to_string(i));
    }
    Scalar s = g[i];
    for (Index l = i + 1; l < cols_; l++)
    {
      s -= r_[l][i] * d[l];
    }
    d[i] = s / rii;
  }
  return d;
}

Matrix GivensLeastSquares::solve_all() const
{
  Matrix d(cols_, num_rhs());
  for (Index j = 0; j < num_rhs(); j++)
  {
    const Vector dj = solve(j);
    std::copy(dj.begin(), dj.end(), d.col(j).begin());
  }
  return d;
}

Matrix GivensLeastSquares::null_space_basis() const
{
  Matrix basis(rows_, rows_ - cols_);
  for (Index t = cols_; t < rows_; t++)
  {
    auto q = basis.col(t - cols_);
    q[t] = 1.0;
    for (auto it = rotations_.rbegin(); it != rotations_.rend(); ++it)
    {
      ApplyRotationAdjoint(it->c, it->s, q[it->row], q[it->row + 1]);
    }
  }
  return basis;
}

LeastSquaresResult least_squares(const Matrix &h, std::span<const Scalar> c)
{
  if (static_cast<Index>(c.size()) != h.rows())
  {
    throw DimensionError("least_squares: right-hand side length differs from row count");
  }
  if (h.rows() < h.cols())
  {
    throw DimensionError("least_squares: more columns than rows");
  }
  GivensLeastSquares ls(c);
  for (Index j = 0; j < h.cols(); j++)
  {
    ls.push_column(h.col(j));
  }
  return {ls.solve(), ls.residual_norm()};
}

//
// Gram-Schmidt
//

Real orthonormalize_in_place(std::span<Scalar> v, const Matrix &basis, Index ncols,
                             std::span<Scalar> coeffs, bool &breakdown)
{
  const Real vnorm = vec::norm(v);
  std::fill(coeffs.begin(), coeffs.begin() + ncols, Scalar(0.0));
  for (int pass = 0; pass < 2; pass++)
  {
    for (Index i = 0; i < ncols; i++)
    {
      const auto q = basis.col(i);
      const Scalar h = vec::dot(q, v);
      vec::axpy(-h, q, v);
      coeffs[i] += h;
    }
  }
  const Real new_norm = vec::norm(v);
  breakdown = new_norm <= kBreakdownTol * vnorm;
  if (!breakdown)
  {
    vec::scale(1.0 / new_norm, v);
  }
  return new_norm;
}

OrthoResult orthonormalize_against(Vector v, const Matrix &basis, Index ncols)
{
  if (ncols > 0 && basis.rows() != v.size())
  {
    throw DimensionError("orthonormalize_against: basis rows differ from vector length");
  }
  OrthoResult out;
  out.coeffs = Vector(ncols);
  out.new_norm = orthonormalize_in_place(v, basis, ncols, out.coeffs, out.breakdown);
  out.v_orth = std::move(v);
  return out;
}

//
// Dense eigensolver
//

namespace
{

// Householder reduction to upper Hessenberg form, accumulating the unitary factor.
void ReduceToHessenberg(Matrix &a, Matrix &q)
{
  const Index n = a.rows();
  std::vector<Scalar> v(static_cast<std::size_t>(n));
  for (Index k = 0; k + 2 < n; k++)
  {
    Real xnorm = 0.0;
    for (Index i = k + 1; i < n; i++)
    {
      xnorm += std::norm(a(i, k));
    }
    xnorm = std::sqrt(xnorm);
    if (xnorm == 0.0)
    {
      continue;
    }
    const Scalar x0 = a(k + 1, k);
    const Scalar phase = (x0 == Scalar(0.0)) ? Scalar(1.0) : x0 / std::abs(x0);
    const Scalar alpha = -phase * xnorm;
    Real vnorm = 0.0;
    for (Index i = k + 1; i < n; i++)
    {
      v[i] = a(i, k);
      if (i == k + 1)
      {
        v[i] -= alpha;
      }
      vnorm += std::norm(v[i]);
    }
    vnorm = std::sqrt(vnorm);
    if (vnorm == 0.0)
    {
      continue;
    }
    for (Index i = k + 1; i < n; i++)
    {
      v[i] /= vnorm;
    }
    // Left: A <- (I - 2 v v^H) A
    for (Index j = k; j < n; j++)
    {
      Scalar s = 0.0;
      for (Index i = k + 1; i < n; i++)
      {
        s += std::conj(v[i]) * a(i, j);
      }
      s *= 2.0;
      for (Index i = k + 1; i < n; i++)
      {
        a(i, j) -= v[i] * s;
      }
    }
    // Right: A <- A (I - 2 v v^H), and the same for Q.
    for (Matrix *m : {&a, &q})
    {
      for (Index i = 0; i < n; i++)
      {
        Scalar s = 0.0;
        for (Index j = k + 1; j < n; j++)
        {
          s += (*m)(i, j) * v[j];
        }
        s *= 2.0;
        for (Index j = k + 1; j < n; j++)
        {
          (*m)(i, j) -= s * std::conj(v[j]);
        }
      }
    }
    a(k + 1, k) = alpha;
    for (Index i = k + 2; i < n; i++)
    {
      a(i, k) = 0.0;
    }
  }
}

Scalar WilkinsonShift(const Matrix &t, Index iu, Index iter)
{
  if (iter == 10 || iter == 20)
  {
    Real s = std::abs(t(iu, iu - 1).real());
    if (iu >= 2)
    {
      s += std::abs(t(iu - 1, iu - 2).real());
    }
    return s;
  }
  Scalar a = t(iu - 1, iu - 1), b = t(iu - 1, iu), c = t(iu, iu - 1), d = t(iu, iu);
  const Real scale = std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d);
  if (scale == 0.0)
  {
    return d;
  }
  a /= scale;
  b /= scale;
  c /= scale;
  d /= scale;
  const Scalar half_tr = 0.5 * (a + d);
  const Scalar det = a * d - b * c;
  const Scalar disc = std::sqrt(0.25 * (a - d) * (a - d) + b * c);
  Scalar ev1 = half_tr + disc, ev2 = half_tr - disc;
  // Recover the smaller root from the product to avoid cancellation.
  if (std::abs(ev1) > std::abs(ev2))
  {
    ev2 = det / ev1;
  }
  else if (ev2 != Scalar(0.0))
  {
    ev1 = det / ev2;
  }
  const Scalar pick = std::abs(ev1 - d) < std::abs(ev2 - d) ? ev1 : ev2;
  return scale * pick;
}

// Complex Schur decomposition of a Hessenberg matrix in place: t <- Q^H t Q.
void ReduceToTriangular(Matrix &t, Matrix &q)
{
  const Index n = t.rows();
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Index max_sweeps = kEigSweepsPerValue * std::max<Index>(n, 1);
  auto negligible = [&](Index i)
  {
    const Real sub = std::abs(t(i + 1, i));
    return sub == 0.0 || sub <= eps * (std::abs(t(i, i)) + std::abs(t(i + 1, i + 1)));
  };

  Index iu = n - 1, iter = 0, total = 0;
  while (true)
  {
    while (iu > 0)
    {
      if (negligible(iu - 1))
      {
        t(iu, iu - 1) = 0.0;
        iu--;
        iter = 0;
      }
      else
      {
        break;
      }
    }
    if (iu <= 0)
    {
      break;
    }
    iter++;
    if (++total > max_sweeps)
    {
      throw ConvergenceError("small_dense_eig: QR iteration did not converge in " +
                             std::to_string(max_sweeps) + " sweeps");
    }
    Index il = iu - 1;
    while (il > 0 && !negligible(il - 1))
    {
      il--;
    }
    const Scalar shift = WilkinsonShift(t, iu, iter);

    if (il > 0)
    {
      t(il, il - 1) = 0.0;
    }
    auto apply = [&](Index i, Index first_col, Real c, Scalar s)
    {
      for (Index j = first_col; j < n; j++)
      {
        ApplyRotation(c, s, t(i, j), t(i + 1, j));
      }
      const Index rmax = std::min(i + 2, iu);
      for (Index r = 0; r <= rmax; r++)
      {
        // columns (i, i+1) <- columns * G^H
        Scalar &x = t(r, i);
        Scalar &y = t(r, i + 1);
        const Scalar xn = c * x + std::conj(s) * y;
        y = -s * x + c * y;
        x = xn;
      }
      for (Index r = 0; r < n; r++)
      {
        Scalar &x = q(r, i);
        Scalar &y = q(r, i + 1);
        const Scalar xn = c * x + std::conj(s) * y;
        y = -s * x + c * y;
        x = xn;
      }
    };

    Real c;
    Scalar s, r;
    MakeRotation(t(il, il) - shift, t(il + 1, il), c, s, r);
    apply(il, il, c, s);
    for (Index i = il + 1; i < iu; i++)
    {
      MakeRotation(t(i, i - 1), t(i + 1, i - 1), c, s, r);
      apply(i, i - 1, c, s);
      t(i + 1, i - 1) = 0.0;
    }
  }
}

std::vector<EigenPair> SchurEigenpairs(const Matrix &m, bool want_vectors)
{
  const Index n = m.rows();
  if (m.cols() != n)
  {
    throw DimensionError("small_dense_eig: matrix is not square");
  }
  Matrix t = m;
  Matrix q = Matrix::identity(n);
  ReduceToHessenberg(t, q);
  ReduceToTriangular(t, q);

  std::vector<EigenPair> pairs(static_cast<std::size_t>(n));
  if (!want_vectors)
  {
    for (Index i = 0; i < n; i++)
    {
      pairs[i].value = t(i, i);
    }
    return pairs;
  }
  const Real tnorm = frobenius_norm(t);
  const Real small =
      std::max(std::numeric_limits<Real>::epsilon() * tnorm, std::numeric_limits<Real>::min());
  Vector y(n);
  for (Index i = 0; i < n; i++)
  {
    const Scalar lambda = t(i, i);
    y.fill(0.0);
    y[i] = 1.0;
    for (Index j = i - 1; j >= 0; j--)
    {
      Scalar s = 0.0;
      for (Index l = j + 1; l <= i; l++)
      {
        s += t(j, l) * y[l];
      }
      Scalar denom = t(j, j) - lambda;
      if (std::abs(denom) < small)
      {
        denom = small;
      }
      y[j] = -s / denom;
    }
    Vector g(n);
    for (Index l = 0; l <= i; l++)
    {
      const Scalar yl = y[l];
      for (Index r = 0; r < n; r++)
      {
        g[r] += q(r, l) * yl;
      }
    }
    const Real gn = norm2(g);
    for (auto &v : g)
    {
      v /= gn;
    }
    pairs[i] = {lambda, std::move(g)};
  }
  return pairs;
}

}  // namespace

std::vector<EigenPair> small_dense_eig(const Matrix &m)
{
  return SchurEigenpairs(m, true);
}

std::vector<Scalar> small_dense_eigenvalues(const Matrix &m)
{
  const auto pairs = SchurEigenpairs(m, false);
  std::vector<Scalar> values;
  values.reserve(pairs.size());
  for (const auto &p : pairs)
  {
    values.push_back(p.value);
  }
  return values;
}

//
// Dense solve
//

Matrix small_dense_solve(const Matrix &m, const Matrix &rhs)
{
  const Index n = m.rows();
  if (m.cols() != n || rhs.rows() != n)
  {
    throw DimensionError("small_dense_solve: dimension mismatch");
  }
  Matrix lu = m;
  Matrix x = rhs;
  const Real tol = kPivotTol * frobenius_norm(m);
  for (Index k = 0; k < n; k++)
  {
    Index piv = k;
    Real best = std::abs(lu(k, k));
    for (Index i = k + 1; i < n; i++)
    {
      if (std::abs(lu(i, k)) > best)
      {
        best = std::abs(lu(i, k));
        piv = i;
      }
    }
    if (best <= tol)
    {
      throw SingularMatrixError("small_dense_solve: pivot " + std::to_string(best) +
                                " below tolerance at column " + std::to_string(k));
    }
    if (piv != k)
    {
      for (Index j = 0; j < n; j++)
      {
        std::swap(lu(k, j), lu(piv, j));
      }
      for (Index j = 0; j < x.cols(); j++)
      {
        std::swap(x(k, j), x(piv, j));
      }
    }
    for (Index i = k + 1; i < n; i++)
    {
      const Scalar f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (Index j = k + 1; j < n; j++)
      {
        lu(i, j) -= f * lu(k, j);
      }
      for (Index j = 0; j < x.cols(); j++)
      {
        x(i, j) -= f * x(k, j);
      }
    }
  }
  for (Index j = 0; j < x.cols(); j++)
  {
    for (Index i = n - 1; i >= 0; i--)
    {
      Scalar s = x(i, j);
      for (Index l = i + 1; l < n; l++)
      {
        s -= lu(i, l) * x(l, j);
      }
      x(i, j) = s / lu(i, i);
    }
  }
  return x;
}

Vector small_dense_solve(const Matrix &m, std::span<const Scalar> rhs)
{
  Matrix b(static_cast<Index>(rhs.size()), 1);
  std::copy(rhs.begin(), rhs.end(), b.col(0).begin());
  const Matrix x = small_dense_solve(m, b);
  return Vector(x.col(0));
}

}  // namespace mrhs
