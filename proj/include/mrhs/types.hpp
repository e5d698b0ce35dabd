// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_TYPES_HPP
#define MRHS_TYPES_HPP

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrhs
{

using Real = double;
using Scalar = std::complex<double>;
using Index = std::ptrdiff_t;

//
// Error hierarchy. Everything the library throws derives from Error.
//
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error
{
public:
  using Error::Error;
};

class RankDeficientError : public Error
{
public:
  using Error::Error;
};

class SingularMatrixError : public Error
{
public:
  using Error::Error;
};

class ConvergenceError : public Error
{
public:
  using Error::Error;
};

class ParseError : public Error
{
public:
  ParseError(const std::string &msg, Index line)
    : Error("line " + std::to_string(line) + ": " + msg), line_(line)
  {
  }
  Index line() const { return line_; }

private:
  Index line_;
};

class ConfigError : public Error
{
public:
  ConfigError(const std::string &field, const std::string &msg)
    : Error(field + ": " + msg), field_(field)
  {
  }
  const std::string &field() const { return field_; }

private:
  std::string field_;
};

/// Fixed-length complex vector.
class Vector
{
public:
  Vector() = default;
  explicit Vector(Index n, Scalar value = Scalar(0.0)) : data_(static_cast<std::size_t>(n), value)
  {
  }
  Vector(std::initializer_list<Scalar> values) : data_(values) {}
  explicit Vector(std::span<const Scalar> values) : data_(values.begin(), values.end()) {}

  Index size() const { return static_cast<Index>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Scalar &operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  const Scalar &operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  Scalar *data() { return data_.data(); }
  const Scalar *data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<Scalar> span() { return data_; }
  std::span<const Scalar> span() const { return data_; }
  operator std::span<Scalar>() { return data_; }
  operator std::span<const Scalar>() const { return data_; }

  void fill(Scalar value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Vector &, const Vector &) = default;

private:
  std::vector<Scalar> data_;
};

/// Dense complex matrix, column-major: entry (i, j) lives at data[i + j * rows].
/// Columns are contiguous so n-length basis vectors can be handed out as spans.
class Matrix
{
public:
  Matrix() = default;
  Matrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), Scalar(0.0))
  {
  }
  Matrix(std::initializer_list<std::initializer_list<Scalar>> row_major);

  static Matrix identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Scalar &operator()(Index i, Index j)
  {
    return data_[static_cast<std::size_t>(i + j * rows_)];
  }
  const Scalar &operator()(Index i, Index j) const
  {
    return data_[static_cast<std::size_t>(i + j * rows_)];
  }

  std::span<Scalar> col(Index j)
  {
    return {data_.data() + j * rows_, static_cast<std::size_t>(rows_)};
  }
  std::span<const Scalar> col(Index j) const
  {
    return {data_.data() + j * rows_, static_cast<std::size_t>(rows_)};
  }

  Scalar *data() { return data_.data(); }
  const Scalar *data() const { return data_.data(); }

  // Appending or dropping trailing columns keeps existing columns in place.
  void resize_cols(Index cols);
  // General resize; the overlapping top-left block is preserved, new entries are zero.
  void resize(Index rows, Index cols);
  void reserve_cols(Index cols) { data_.reserve(static_cast<std::size_t>(rows_ * cols)); }

  friend bool operator==(const Matrix &, const Matrix &) = default;

private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Scalar> data_;
};

//
// Small dense helpers (coefficient space).
//
Matrix adjoint(const Matrix &a);
Matrix multiply(const Matrix &a, const Matrix &b);
// a^H * b without forming the adjoint.
Matrix multiply_adjoint(const Matrix &a, const Matrix &b);
Vector multiply(const Matrix &a, std::span<const Scalar> x);
Matrix columns(const Matrix &a, Index first, Index count);
Real frobenius_norm(const Matrix &a);
Real norm2(std::span<const Scalar> x);

}  // namespace mrhs

#endif  // MRHS_TYPES_HPP
