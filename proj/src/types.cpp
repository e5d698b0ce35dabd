// SPDX-License-Identifier: Apache-2.0

#include "mrhs/types.hpp"

#include <cmath>

namespace mrhs
{

Matrix::Matrix(std::initializer_list<std::initializer_list<Scalar>> row_major)
{
  rows_ = static_cast<Index>(row_major.size());
  cols_ = rows_ > 0 ? static_cast<Index>(row_major.begin()->size()) : 0;
  data_.assign(static_cast<std::size_t>(rows_ * cols_), Scalar(0.0));
  Index i = 0;
  for (const auto &row : row_major)
  {
    if (static_cast<Index>(row.size()) != cols_)
    {
      throw DimensionError("Matrix: ragged initializer list");
    }
    Index j = 0;
    for (const auto &v : row)
    {
      (*this)(i, j++) = v;
    }
    i++;
  }
}

Matrix Matrix::identity(Index n)
{
  Matrix m(n, n);
  for (Index i = 0; i < n; i++)
  {
    m(i, i) = 1.0;
  }
  return m;
}

void Matrix::resize_cols(Index cols)
{
  data_.resize(static_cast<std::size_t>(rows_ * cols), Scalar(0.0));
  cols_ = cols;
}

void Matrix::resize(Index rows, Index cols)
{
  if (rows == rows_)
  {
    resize_cols(cols);
    return;
  }
  Matrix out(rows, cols);
  const Index r = std::min(rows, rows_);
  const Index c = std::min(cols, cols_);
  for (Index j = 0; j < c; j++)
  {
    std::copy_n(col(j).data(), r, out.col(j).data());
  }
  *this = std::move(out);
}

Matrix adjoint(const Matrix &a)
{
  Matrix out(a.cols(), a.rows());
  for (Index j = 0; j < a.cols(); j++)
  {
    for (Index i = 0; i < a.rows(); i++)
    {
      out(j, i) = std::conj(a(i, j));
    }
  }
  return out;
}

Matrix multiply(const Matrix &a, const Matrix &b)
{
  if (a.cols() != b.rows())
  {
    throw DimensionError("multiply: inner dimensions differ");
  }
  Matrix out(a.rows(), b.cols());
  for (Index j = 0; j < b.cols(); j++)
  {
    for (Index l = 0; l < a.cols(); l++)
    {
      const Scalar blj = b(l, j);
      if (blj == Scalar(0.0))
      {
        continue;
      }
      for (Index i = 0; i < a.rows(); i++)
      {
        out(i, j) += a(i, l) * blj;
      }
    }
  }
  return out;
}

Matrix multiply_adjoint(const Matrix &a, const Matrix &b)
{
  if (a.rows() != b.rows())
  {
    throw DimensionError("multiply_adjoint: row counts differ");
  }
  Matrix out(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); j++)
  {
    for (Index i = 0; i < a.cols(); i++)
    {
      Scalar s = 0.0;
      for (Index l = 0; l < a.rows(); l++)
      {
        s += std::conj(a(l, i)) * b(l, j);
      }
      out(i, j) = s;
    }
  }
  return out;
}

Vector multiply(const Matrix &a, std::span<const Scalar> x)
{
  if (a.cols() != static_cast<Index>(x.size()))
  {
    throw DimensionError("multiply: vector length differs from column count");
  }
  Vector out(a.rows());
  for (Index j = 0; j < a.cols(); j++)
  {
    const Scalar xj = x[static_cast<std::size_t>(j)];
    for (Index i = 0; i < a.rows(); i++)
    {
      out[i] += a(i, j) * xj;
    }
  }
  return out;
}

Matrix columns(const Matrix &a, Index first, Index count)
{
  Matrix out(a.rows(), count);
  for (Index j = 0; j < count; j++)
  {
    std::copy_n(a.col(first + j).data(), a.rows(), out.col(j).data());
  }
  return out;
}

Real frobenius_norm(const Matrix &a)
{
  return norm2({a.data(), static_cast<std::size_t>(a.rows() * a.cols())});
}

Real norm2(std::span<const Scalar> x)
{
  // Scaled accumulation avoids overflow for the small coefficient vectors this serves.
  Real scale = 0.0, ssq = 1.0;
  for (const auto &v : x)
  {
    for (Real part : {v.real(), v.imag()})
    {
      if (part != 0.0)
      {
        const Real a = std::abs(part);
        if (scale < a)
        {
          ssq = 1.0 + ssq * (scale / a) * (scale / a);
          scale = a;
        }
        else
        {
          ssq += (a / scale) * (a / scale);
        }
      }
    }
  }
  return scale * std::sqrt(ssq);
}

}  // namespace mrhs
