// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_VECOPS_HPP
#define MRHS_VECOPS_HPP

#include <cmath>
#include <span>

#include "mrhs/types.hpp"

// Length-n vector kernels. Complex products are spelled out on real and imaginary
// parts so the compiler does not route them through the NaN-recovering multiply.

namespace mrhs::vec
{

/// x^H y
inline Scalar dot(std::span<const Scalar> x, std::span<const Scalar> y)
{
  Real re = 0.0, im = 0.0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; i++)
  {
    const Real xr = x[i].real(), xi = x[i].imag();
    const Real yr = y[i].real(), yi = y[i].imag();
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return {re, im};
}

inline Real norm(std::span<const Scalar> x)
{
  Real s = 0.0;
  for (const auto &v : x)
  {
    s += v.real() * v.real() + v.imag() * v.imag();
  }
  return std::sqrt(s);
}

/// y += a * x
inline void axpy(Scalar a, std::span<const Scalar> x, std::span<Scalar> y)
{
  const Real ar = a.real(), ai = a.imag();
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; i++)
  {
    const Real xr = x[i].real(), xi = x[i].imag();
    y[i] = Scalar(y[i].real() + ar * xr - ai * xi, y[i].imag() + ar * xi + ai * xr);
  }
}

inline void scale(Scalar a, std::span<Scalar> x)
{
  const Real ar = a.real(), ai = a.imag();
  for (auto &v : x)
  {
    const Real xr = v.real(), xi = v.imag();
    v = Scalar(ar * xr - ai * xi, ar * xi + ai * xr);
  }
}

}  // namespace mrhs::vec

#endif  // MRHS_VECOPS_HPP
