// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "mrhs/operators.hpp"

namespace mrhs
{

namespace
{

std::string Lower(std::string s)
{
  for (auto &c : s)
  {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

bool IsBlank(const std::string &line)
{
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string FormatReal(Real v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CsrMatrix read_matrix_market(std::istream &in)
{
  std::string line;
  Index lineno = 0;
  if (!std::getline(in, line))
  {
    throw ParseError("empty input, expected %%MatrixMarket header", 1);
  }
  lineno++;
  bool is_complex = false;
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket")
    {
      throw ParseError("missing %%MatrixMarket banner", lineno);
    }
    if (Lower(object) != "matrix" || Lower(format) != "coordinate")
    {
      throw ParseError("only 'matrix coordinate' files are supported", lineno);
    }
    field = Lower(field);
    if (field == "complex")
    {
      is_complex = true;
    }
    else if (field != "real" && field != "integer")
    {
      throw ParseError("unsupported field '" + field + "'", lineno);
    }
    if (Lower(symmetry) != "general")
    {
      throw ParseError("unsupported symmetry '" + symmetry + "', expected general", lineno);
    }
  }

  Index rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line))
  {
    lineno++;
    if (line.empty() || line[0] == '%' || IsBlank(line))
    {
      continue;
    }
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
    {
      throw ParseError("malformed size line", lineno);
    }
    break;
  }
  if (rows < 0)
  {
    throw ParseError("missing size line", lineno);
  }
  if (rows != cols)
  {
    throw ParseError("matrix is not square (" + std::to_string(rows) + " x " +
                         std::to_string(cols) + ")",
                     lineno);
  }

  std::vector<CsrMatrix::Triplet> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  while (static_cast<Index>(entries.size()) < nnz && std::getline(in, line))
  {
    lineno++;
    if (line.empty() || line[0] == '%' || IsBlank(line))
    {
      continue;
    }
    std::istringstream ss(line);
    Index i = 0, j = 0;
    Real re = 0.0, im = 0.0;
    if (!(ss >> i >> j >> re) || (is_complex && !(ss >> im)))
    {
      throw ParseError("malformed entry", lineno);
    }
    if (i < 1 || i > rows || j < 1 || j > cols)
    {
      throw ParseError("index (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") out of bounds",
                       lineno);
    }
    entries.push_back({i - 1, j - 1, Scalar(re, im)});
  }
  if (static_cast<Index>(entries.size()) < nnz)
  {
    throw ParseError("expected " + std::to_string(nnz) + " entries, found " +
                         std::to_string(entries.size()),
                     lineno);
  }
  while (std::getline(in, line))
  {
    lineno++;
    if (!line.empty() && line[0] != '%' && !IsBlank(line))
    {
      throw ParseError("more entries than declared", lineno);
    }
  }
  return CsrMatrix::from_triplets(rows, std::move(entries));
}

CsrMatrix load_matrix_market(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error("cannot open " + path.string());
  }
  return read_matrix_market(in);
}

void write_matrix_market(const CsrMatrix &a, std::ostream &out)
{
  const bool real = a.is_real();
  out << "%%MatrixMarket matrix coordinate " << (real ? "real" : "complex") << " general\n";
  out << a.dim() << ' ' << a.dim() << ' ' << a.nnz() << '\n';
  for (Index i = 0; i < a.dim(); i++)
  {
    for (Index p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; p++)
    {
      const Scalar v = a.values()[p];
      out << (i + 1) << ' ' << (a.col_idx()[p] + 1) << ' ' << FormatReal(v.real());
      if (!real)
      {
        out << ' ' << FormatReal(v.imag());
      }
      out << '\n';
    }
  }
}

void save_matrix_market(const CsrMatrix &a, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error("cannot write " + path.string());
  }
  write_matrix_market(a, out);
  if (!out)
  {
    throw Error("write failed for " + path.string());
  }
}

}  // namespace mrhs
