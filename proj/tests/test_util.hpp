// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the tests: seeded random data and dense oracles built on Eigen.

#ifndef MRHS_TEST_UTIL_HPP
#define MRHS_TEST_UTIL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mrhs/operators.hpp"
#include "mrhs/types.hpp"

namespace mrhs::test
{

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  Real normal() { return normal_(gen_); }
  Scalar cnormal() { return {normal(), normal()}; }
  Real uniform(Real lo, Real hi) { return std::uniform_real_distribution<Real>(lo, hi)(gen_); }

  Vector vector(Index n, bool real = false)
  {
    Vector v(n);
    for (auto &x : v)
    {
      x = real ? Scalar(normal()) : cnormal();
    }
    return v;
  }
  Matrix matrix(Index rows, Index cols, bool real = false)
  {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; j++)
    {
      for (Index i = 0; i < rows; i++)
      {
        m(i, j) = real ? Scalar(normal()) : cnormal();
      }
    }
    return m;
  }
  std::mt19937_64 &engine() { return gen_; }

private:
  std::mt19937_64 gen_;
  std::normal_distribution<Real> normal_{0.0, 1.0};
};

inline Eigen::MatrixXcd to_eigen(const Matrix &a)
{
  Eigen::MatrixXcd e(a.rows(), a.cols());
  for (Index j = 0; j < a.cols(); j++)
  {
    for (Index i = 0; i < a.rows(); i++)
    {
      e(i, j) = a(i, j);
    }
  }
  return e;
}

inline Eigen::VectorXcd to_eigen(std::span<const Scalar> v)
{
  Eigen::VectorXcd e(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); i++)
  {
    e(static_cast<Index>(i)) = v[i];
  }
  return e;
}

inline Vector from_eigen(const Eigen::VectorXcd &e)
{
  Vector v(e.size());
  for (Index i = 0; i < e.size(); i++)
  {
    v[i] = e(i);
  }
  return v;
}

inline Eigen::VectorXcd dense_solve(const Matrix &a, std::span<const Scalar> b)
{
  return to_eigen(a).partialPivLu().solve(to_eigen(b));
}

/// Eigenvalues sorted by modulus, then real part, then imaginary part.
inline std::vector<Scalar> dense_eigenvalues(const Matrix &a)
{
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_eigen(a), false);
  std::vector<Scalar> out(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
  std::sort(out.begin(), out.end(),
            [](Scalar x, Scalar y)
            {
              if (std::abs(x) != std::abs(y))
                return std::abs(x) < std::abs(y);
              if (x.real() != y.real())
                return x.real() < y.real();
              return x.imag() < y.imag();
            });
  return out;
}

/// Largest distance from any value in `got` to its nearest value in `want`, and back.
inline Real set_distance(const std::vector<Scalar> &got, const std::vector<Scalar> &want)
{
  auto one_way = [](const std::vector<Scalar> &a, const std::vector<Scalar> &b)
  {
    Real worst = 0.0;
    for (auto x : a)
    {
      Real best = INFINITY;
      for (auto y : b)
      {
        best = std::min(best, std::abs(x - y));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_way(got, want), one_way(want, got));
}

inline Real rel_diff(std::span<const Scalar> x, std::span<const Scalar> y)
{
  Real num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); i++)
  {
    num += std::norm(x[i] - y[i]);
    den += std::norm(y[i]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline Real rel_diff(std::span<const Scalar> x, const Eigen::VectorXcd &y)
{
  const Vector yv = from_eigen(y);
  return rel_diff(x, yv.span());
}

/// Random sparse-ish non-symmetric matrix with a dominant diagonal shift so it is
/// comfortably nonsingular.
inline CsrMatrix random_sparse(Rng &rng, Index n, Real density, Scalar shift, bool real = false)
{
  std::vector<CsrMatrix::Triplet> t;
  for (Index i = 0; i < n; i++)
  {
    t.push_back({i, i, shift + (real ? Scalar(rng.normal()) : rng.cnormal())});
    for (Index j = 0; j < n; j++)
    {
      if (j != i && rng.uniform(0.0, 1.0) < density)
      {
        t.push_back({i, j, real ? Scalar(rng.normal()) : rng.cnormal()});
      }
    }
  }
  return CsrMatrix::from_triplets(n, std::move(t));
}

/// Diagonal matrix with the given entries.
inline CsrMatrix diagonal(const std::vector<Scalar> &d)
{
  std::vector<CsrMatrix::Triplet> t;
  for (std::size_t i = 0; i < d.size(); i++)
  {
    t.push_back({static_cast<Index>(i), static_cast<Index>(i), d[i]});
  }
  return CsrMatrix::from_triplets(static_cast<Index>(d.size()), std::move(t));
}

}  // namespace mrhs::test

#endif  // MRHS_TEST_UTIL_HPP
