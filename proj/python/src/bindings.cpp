// SPDX-License-Identifier: Apache-2.0

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mrhs/block.hpp"
#include "mrhs/harness.hpp"

namespace py = pybind11;
using namespace mrhs;

namespace
{

using CArray = py::array_t<Scalar, py::array::c_style | py::array::forcecast>;
using FArray = py::array_t<Scalar, py::array::f_style | py::array::forcecast>;

Vector to_vector(const CArray &a)
{
  if (a.ndim() != 1)
  {
    throw DimensionError("expected a one-dimensional array");
  }
  return Vector(std::span<const Scalar>(a.data(), static_cast<std::size_t>(a.shape(0))));
}

Matrix to_matrix(const FArray &a)
{
  if (a.ndim() == 1)
  {
    Matrix m(a.shape(0), 1);
    std::copy(a.data(), a.data() + a.shape(0), m.data());
    return m;
  }
  if (a.ndim() != 2)
  {
    throw DimensionError("expected a two-dimensional array");
  }
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data());
  return m;
}

py::array_t<Scalar> to_array(std::span<const Scalar> v)
{
  py::array_t<Scalar> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<Scalar> to_array(const Matrix &m)
{
  py::array_t<Scalar, py::array::f_style> out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.rows() * m.cols(), out.mutable_data());
  return out;
}

py::object json_to_py(const Json &j)
{
  return py::module_::import("json").attr("loads")(j.dump());
}

Json py_to_json(const py::object &o)
{
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict counters_dict(const OpCounters &c)
{
  py::dict d;
  d["matvecs"] = c.matvecs;
  d["vecops"] = c.vecops;
  d["check_matvecs"] = c.check_matvecs;
  return d;
}

py::dict report_dict(const SolveReport &r)
{
  py::dict d;
  d["converged"] = r.converged;
  d["breakdown"] = r.breakdown;
  d["final_relative_residual"] = r.final_relative_residual;
  d["true_relative_residual"] = r.true_relative_residual;
  d["counters"] = counters_dict(r.counters);
  d["matvecs"] = r.counters.matvecs;
  d["cycles"] = r.cycles;
  py::list history;
  for (const auto &h : r.history)
  {
    history.append(py::make_tuple(h.matvecs, h.relative_residual, to_string(h.event)));
  }
  d["history"] = history;
  d["warnings"] = r.warnings;
  d["error"] = r.error;
  return d;
}

py::dict block_report_dict(const BlockSolveReport &r)
{
  py::dict d;
  py::list cols;
  for (const auto &c : r.columns)
  {
    cols.append(report_dict(c));
  }
  d["columns"] = cols;
  d["counters"] = counters_dict(r.counters);
  d["matvecs"] = r.counters.matvecs;
  d["cycles"] = r.cycles;
  d["converged"] = r.converged;
  d["warnings"] = r.warnings;
  d["error"] = r.error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Deflated restarted GMRES for sequences of right-hand sides";

  // Translators are tried newest first, so the base class goes first.
  const auto &error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", error.ptr());

  py::class_<CsrMatrix>(m, "CsrMatrix")
      .def_static("from_dense", [](const FArray &a) { return CsrMatrix::from_dense(to_matrix(a)); })
      .def_static("identity", &CsrMatrix::identity)
      .def_property_readonly("n", &CsrMatrix::dim)
      .def_property_readonly("nnz", &CsrMatrix::nnz)
      .def("is_real", &CsrMatrix::is_real)
      .def("to_dense", [](const CsrMatrix &a) { return to_array(a.to_dense()); })
      .def("apply",
           [](const CsrMatrix &a, const CArray &x)
           {
             const Vector v = to_vector(x);
             if (v.size() != a.dim())
             {
               throw DimensionError("vector length does not match the operator");
             }
             Vector y(a.dim());
             a.apply(v, y);
             return to_array(y.span());
           })
      .def("__matmul__", [](const CsrMatrix &a, const CArray &x)
           {
             const Vector v = to_vector(x);
             if (v.size() != a.dim())
             {
               throw DimensionError("vector length does not match the operator");
             }
             Vector y(a.dim());
             a.apply(v, y);
             return to_array(y.span());
           });

  m.def("gen_bidiagonal", py::overload_cast<Index>(&gen_bidiagonal), py::arg("n"));
  m.def("gen_lattice_surrogate", &gen_lattice_surrogate, py::arg("lattice"), py::arg("kappa"),
        py::arg("seed"));
  m.def("load_matrix_market", &load_matrix_market, py::arg("path"));
  m.def("save_matrix_market", &save_matrix_market, py::arg("matrix"), py::arg("path"));

  py::class_<DeflationSubspace>(m, "DeflationSubspace")
      .def_property_readonly("k", &DeflationSubspace::k)
      .def_property_readonly("dim", &DeflationSubspace::dim)
      .def_readonly("block_size", &DeflationSubspace::block_size)
      .def_property_readonly("basis", [](const DeflationSubspace &d) { return to_array(d.basis); })
      .def_property_readonly("h", [](const DeflationSubspace &d) { return to_array(d.h); })
      .def("harmonic_ritz_values",
           [](const DeflationSubspace &d)
           {
             std::vector<Scalar> out;
             if (d.k() > 0)
             {
               for (const auto &p : harmonic_ritz(d))
               {
                 out.push_back(p.theta);
               }
             }
             return to_array(out);
           })
      .def("save", [](const DeflationSubspace &d, const std::filesystem::path &p)
           { save_deflation_subspace(d, p); })
      .def_static("load", &load_deflation_subspace);

  m.def(
      "gmres",
      [](const CsrMatrix &a, const CArray &b, Index m, Real rtol, Index max_matvecs)
      {
        const SolveResult r = gmres_restarted(a, to_vector(b), {m, rtol, max_matvecs, true});
        return py::make_tuple(to_array(r.x.span()), report_dict(r.report));
      },
      py::arg("a"), py::arg("b"), py::arg("m") = 15, py::arg("rtol") = 1e-6,
      py::arg("max_matvecs") = 10000);

  m.def(
      "bicgstab",
      [](const CsrMatrix &a, const CArray &b, Real rtol, Index max_matvecs)
      {
        const SolveResult r = mrhs::bicgstab(a, to_vector(b), rtol, max_matvecs);
        return py::make_tuple(to_array(r.x.span()), report_dict(r.report));
      },
      py::arg("a"), py::arg("b"), py::arg("rtol") = 1e-6, py::arg("max_matvecs") = 10000);

  m.def(
      "gmres_dr",
      [](const CsrMatrix &a, const CArray &b, Index m, Index k, Real rtol, Index max_matvecs)
      {
        GmresDrResult r = gmres_dr_solve(a, to_vector(b), {m, k, rtol, max_matvecs});
        return py::make_tuple(to_array(r.x.span()), report_dict(r.report), std::move(r.subspace));
      },
      py::arg("a"), py::arg("b"), py::arg("m") = 25, py::arg("k") = 10, py::arg("rtol") = 1e-6,
      py::arg("max_matvecs") = 10000);

  m.def(
      "gmres_proj",
      [](const CsrMatrix &a, const CArray &b, const DeflationSubspace &d, Index m, Real rtol,
         Index max_matvecs, const std::string &schedule)
      {
        ProjConfig cfg;
        cfg.m = m;
        cfg.rtol = rtol;
        cfg.max_matvecs = max_matvecs;
        cfg.schedule = ProjSchedule::parse(schedule);
        const SolveResult r = gmres_proj_solve(a, to_vector(b), d, cfg);
        return py::make_tuple(to_array(r.x.span()), report_dict(r.report));
      },
      py::arg("a"), py::arg("b"), py::arg("subspace"), py::arg("m") = 15, py::arg("rtol") = 1e-6,
      py::arg("max_matvecs") = 10000, py::arg("schedule") = "every_cycle");

  m.def(
      "bl_gmres_dr",
      [](const CsrMatrix &a, const FArray &b, Index m, Index k, Real rtol, Index max_matvecs)
      {
        const Matrix bm = to_matrix(b);
        BlockDrResult r = bl_gmres_dr_solve(a, bm, {m, bm.cols(), k, rtol, max_matvecs});
        return py::make_tuple(to_array(r.x), block_report_dict(r.report), std::move(r.subspace));
      },
      py::arg("a"), py::arg("b"), py::arg("m") = 170, py::arg("k") = 10, py::arg("rtol") = 1e-6,
      py::arg("max_matvecs") = 10000);

  m.def(
      "bl_gmres_proj",
      [](const CsrMatrix &a, const FArray &b, const DeflationSubspace &d, Index m, Real rtol,
         Index max_matvecs, const std::string &schedule)
      {
        BlockProjConfig cfg;
        cfg.m = m;
        cfg.rtol = rtol;
        cfg.max_matvecs = max_matvecs;
        cfg.schedule = ProjSchedule::parse(schedule);
        const BlockSolveResult r = bl_gmres_proj_solve(a, to_matrix(b), d, cfg);
        return py::make_tuple(to_array(r.x), block_report_dict(r.report));
      },
      py::arg("a"), py::arg("b"), py::arg("subspace"), py::arg("m") = 160, py::arg("rtol") = 1e-6,
      py::arg("max_matvecs") = 10000, py::arg("schedule") = "every_cycle");

  m.def(
      "run_experiment",
      [](const py::object &config)
      {
        const ExperimentConfig cfg = ExperimentConfig::from_json(py_to_json(config));
        RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = run_experiment(cfg);
        }
        return json_to_py(rec.to_json());
      },
      py::arg("config"), "Runs one experiment from a configuration dict; returns the run record.");

  m.def("suite_names", &suite_names);
  m.def(
      "run_suite",
      [](const std::string &name, std::uint64_t seed, int jobs)
      {
        SuiteOptions opts;
        opts.seed = seed;
        opts.jobs = jobs;
        SuiteResult res;
        {
          py::gil_scoped_release release;
          res = run_suite(name, opts);
        }
        return json_to_py(res.to_json());
      },
      py::arg("name"), py::arg("seed") = 42, py::arg("jobs") = 1);
}
