// SPDX-License-Identifier: Apache-2.0

#include "mrhs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace mrhs
{

namespace
{

//
// JSON field access with dotted paths in errors
//

void CheckKeys(const Json &obj, const std::string &path, const std::set<std::string> &allowed)
{
  if (!obj.is_object())
  {
    throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it)
  {
    if (!allowed.count(it.key()))
    {
      throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
    }
  }
}

std::string Join(const std::string &path, const std::string &key)
{
  return path.empty() ? key : path + "." + key;
}

Index GetIndex(const Json &obj, const std::string &path, const std::string &key, Index def)
{
  if (!obj.contains(key))
  {
    return def;
  }
  const Json &v = obj.at(key);
  if (!v.is_number_integer())
  {
    throw ConfigError(Join(path, key), "expected an integer");
  }
  return v.get<Index>();
}

Real GetReal(const Json &obj, const std::string &path, const std::string &key, Real def)
{
  if (!obj.contains(key))
  {
    return def;
  }
  const Json &v = obj.at(key);
  if (!v.is_number())
  {
    throw ConfigError(Join(path, key), "expected a number");
  }
  return v.get<Real>();
}

bool GetBool(const Json &obj, const std::string &path, const std::string &key, bool def)
{
  if (!obj.contains(key))
  {
    return def;
  }
  const Json &v = obj.at(key);
  if (!v.is_boolean())
  {
    throw ConfigError(Join(path, key), "expected true or false");
  }
  return v.get<bool>();
}

std::string GetString(const Json &obj, const std::string &path, const std::string &key,
                      const std::string &def)
{
  if (!obj.contains(key))
  {
    return def;
  }
  const Json &v = obj.at(key);
  if (!v.is_string())
  {
    throw ConfigError(Join(path, key), "expected a string");
  }
  return v.get<std::string>();
}

std::uint64_t GetSeed(const Json &v, const std::string &path)
{
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0))
  {
    throw ConfigError(path, "expected a non-negative integer seed");
  }
  return v.get<std::uint64_t>();
}

const std::set<std::string> kFirstSolvers = {"gmres", "gmres_dr", "bicgstab", "bl_gmres_dr"};
const std::set<std::string> kRestSolvers = {"gmres",   "gmres_dr", "bicgstab",
                                            "gmres_proj", "gmres_e", "bl_gmres_proj"};

SolverSpec ParseSolver(const Json &obj, const std::string &path)
{
  CheckKeys(obj, path,
            {"solver", "m", "k", "p", "rtol", "max_matvecs", "schedule", "test_in_cycle",
             "related"});
  SolverSpec s;
  if (!obj.contains("solver"))
  {
    throw ConfigError(Join(path, "solver"), "missing");
  }
  s.solver = GetString(obj, path, "solver", "");
  s.m = GetIndex(obj, path, "m", s.m);
  s.k = GetIndex(obj, path, "k", s.k);
  s.p = GetIndex(obj, path, "p", s.p);
  s.rtol = GetReal(obj, path, "rtol", s.rtol);
  s.max_matvecs = GetIndex(obj, path, "max_matvecs", s.max_matvecs);
  s.test_in_cycle = GetBool(obj, path, "test_in_cycle", s.test_in_cycle);
  s.related = GetBool(obj, path, "related", s.related);
  if (obj.contains("schedule"))
  {
    try
    {
      s.schedule = ProjSchedule::parse(GetString(obj, path, "schedule", ""));
    }
    catch (const ConfigError &e)
    {
      throw ConfigError(Join(path, "schedule"), e.what());
    }
  }
  return s;
}

Json SolverToJson(const SolverSpec &s)
{
  return Json{{"solver", s.solver},
              {"m", s.m},
              {"k", s.k},
              {"p", s.p},
              {"rtol", s.rtol},
              {"max_matvecs", s.max_matvecs},
              {"schedule", s.schedule.to_string()},
              {"test_in_cycle", s.test_in_cycle},
              {"related", s.related}};
}

void ValidateSolver(const SolverSpec &s, const std::string &path)
{
  if (s.m < 1)
  {
    throw ConfigError(path + ".m", "must be at least 1");
  }
  if (!(s.rtol > 0.0 && s.rtol < 1.0))
  {
    throw ConfigError(path + ".rtol", "must lie in (0, 1)");
  }
  if (s.max_matvecs < 1)
  {
    throw ConfigError(path + ".max_matvecs", "must be positive");
  }
  if (s.p < 1)
  {
    throw ConfigError(path + ".p", "must be at least 1");
  }
  if (s.schedule.j < 1)
  {
    throw ConfigError(path + ".schedule", "period must be at least 1");
  }
  if ((s.solver == "gmres_dr" || s.solver == "bl_gmres_dr") && (s.k < 0 || s.k >= s.m))
  {
    throw ConfigError(path + ".k", "must satisfy 0 <= k < m");
  }
  if (s.solver == "bl_gmres_dr" && s.m - s.k < s.p)
  {
    throw ConfigError(path + ".m", "m - k must be at least the block size p");
  }
  if (s.related && s.solver != "gmres_proj" && s.solver != "bl_gmres_proj")
  {
    throw ConfigError(path + ".related", "only projection solvers use previous solutions");
  }
}

}  // namespace

//
// ExperimentConfig
//

ExperimentConfig ExperimentConfig::from_json(const Json &j)
{
  CheckKeys(j, "", {"schema_version", "name", "matrix", "rhs", "pipeline", "output"});
  if (!j.contains("schema_version"))
  {
    throw ConfigError("schema_version", "missing");
  }
  if (GetIndex(j, "", "schema_version", 0) != kConfigSchemaVersion)
  {
    throw ConfigError("schema_version",
                      "unsupported version; expected " + std::to_string(kConfigSchemaVersion));
  }
  ExperimentConfig c;
  c.name = GetString(j, "", "name", c.name);

  if (!j.contains("matrix"))
  {
    throw ConfigError("matrix", "missing");
  }
  {
    const Json &m = j.at("matrix");
    CheckKeys(m, "matrix", {"generator", "n", "L", "kappa", "seed", "path"});
    c.matrix.path = GetString(m, "matrix", "path", "");
    c.matrix.generator = GetString(m, "matrix", "generator", "");
    c.matrix.n = GetIndex(m, "matrix", "n", c.matrix.n);
    c.matrix.lattice = GetIndex(m, "matrix", "L", c.matrix.lattice);
    c.matrix.kappa = GetReal(m, "matrix", "kappa", c.matrix.kappa);
    if (m.contains("seed"))
    {
      c.matrix.seed = GetSeed(m.at("seed"), "matrix.seed");
    }
  }

  if (!j.contains("rhs"))
  {
    throw ConfigError("rhs", "missing");
  }
  {
    const Json &r = j.at("rhs");
    CheckKeys(r, "rhs", {"count", "kind", "seed", "epsilon", "coordinates"});
    c.rhs.count = GetIndex(r, "rhs", "count", c.rhs.count);
    c.rhs.kind = GetString(r, "rhs", "kind", c.rhs.kind);
    if (r.contains("seed"))
    {
      c.rhs.seed = GetSeed(r.at("seed"), "rhs.seed");
    }
    c.rhs.epsilon = GetReal(r, "rhs", "epsilon", c.rhs.epsilon);
    if (r.contains("coordinates"))
    {
      const Json &cs = r.at("coordinates");
      if (!cs.is_array())
      {
        throw ConfigError("rhs.coordinates", "expected an array of integers");
      }
      for (std::size_t i = 0; i < cs.size(); i++)
      {
        if (!cs[i].is_number_integer())
        {
          throw ConfigError("rhs.coordinates[" + std::to_string(i) + "]", "expected an integer");
        }
        c.rhs.coordinates.push_back(cs[i].get<Index>());
      }
    }
  }

  if (!j.contains("pipeline"))
  {
    throw ConfigError("pipeline", "missing");
  }
  {
    const Json &p = j.at("pipeline");
    CheckKeys(p, "pipeline", {"first", "rest"});
    if (!p.contains("first"))
    {
      throw ConfigError("pipeline.first", "missing");
    }
    c.first = ParseSolver(p.at("first"), "pipeline.first");
    if (p.contains("rest"))
    {
      c.rest = ParseSolver(p.at("rest"), "pipeline.rest");
    }
  }

  if (j.contains("output"))
  {
    const Json &o = j.at("output");
    CheckKeys(o, "output", {"directory", "history", "spectrum", "subspace"});
    c.output.directory = GetString(o, "output", "directory", "");
    c.output.history = GetBool(o, "output", "history", c.output.history);
    c.output.spectrum = GetBool(o, "output", "spectrum", c.output.spectrum);
    c.output.subspace = GetBool(o, "output", "subspace", c.output.subspace);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error("cannot open " + path.string());
  }
  Json j;
  try
  {
    j = Json::parse(in);
  }
  catch (const Json::parse_error &e)
  {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

Json ExperimentConfig::to_json() const
{
  Json m;
  if (!matrix.path.empty())
  {
    m["path"] = matrix.path.string();
  }
  else
  {
    m["generator"] = matrix.generator;
    if (matrix.generator == "lattice")
    {
      m["L"] = matrix.lattice;
      m["kappa"] = matrix.kappa;
      m["seed"] = matrix.seed;
    }
    else
    {
      m["n"] = matrix.n;
    }
  }
  Json r{{"count", rhs.count}, {"kind", rhs.kind}};
  if (rhs.seed)
  {
    r["seed"] = *rhs.seed;
  }
  if (rhs.kind == "related")
  {
    r["epsilon"] = rhs.epsilon;
  }
  if (!rhs.coordinates.empty())
  {
    r["coordinates"] = rhs.coordinates;
  }
  Json p{{"first", SolverToJson(first)}};
  if (rest)
  {
    p["rest"] = SolverToJson(*rest);
  }
  Json out{{"schema_version", kConfigSchemaVersion},
           {"name", name},
           {"matrix", m},
           {"rhs", r},
           {"pipeline", p}};
  if (!output.directory.empty())
  {
    out["output"] = Json{{"directory", output.directory.string()},
                         {"history", output.history},
                         {"spectrum", output.spectrum},
                         {"subspace", output.subspace}};
  }
  return out;
}

void ExperimentConfig::validate() const
{
  if (matrix.path.empty())
  {
    if (matrix.generator == "bidiagonal")
    {
      if (matrix.n < 2)
      {
        throw ConfigError("matrix.n", "bidiagonal needs n >= 2");
      }
    }
    else if (matrix.generator == "identity")
    {
      if (matrix.n < 1)
      {
        throw ConfigError("matrix.n", "must be at least 1");
      }
    }
    else if (matrix.generator == "lattice")
    {
      if (matrix.lattice < 2)
      {
        throw ConfigError("matrix.L", "must be at least 2");
      }
      if (!(matrix.kappa >= 0.0 && matrix.kappa < 1.0))
      {
        throw ConfigError("matrix.kappa", "must lie in [0, 1)");
      }
    }
    else
    {
      throw ConfigError("matrix.generator",
                        "expected bidiagonal, lattice or identity (or give matrix.path)");
    }
  }

  if (rhs.count < 1)
  {
    throw ConfigError("rhs.count", "must be at least 1");
  }
  if (rhs.kind == "random_normal" || rhs.kind == "related")
  {
    if (!rhs.seed)
    {
      throw ConfigError("rhs.seed", "required for random right-hand sides");
    }
    if (rhs.kind == "related" && !(rhs.epsilon > 0.0))
    {
      throw ConfigError("rhs.epsilon", "must be positive");
    }
  }
  else if (rhs.kind == "unit_coordinate")
  {
    if (rhs.coordinates.empty() && !rhs.seed)
    {
      throw ConfigError("rhs.seed", "required when coordinates are drawn at random");
    }
    if (!rhs.coordinates.empty() && static_cast<Index>(rhs.coordinates.size()) != rhs.count)
    {
      throw ConfigError("rhs.coordinates", "length must equal rhs.count");
    }
  }
  else
  {
    throw ConfigError("rhs.kind", "expected random_normal, unit_coordinate or related");
  }

  if (!kFirstSolvers.count(first.solver))
  {
    throw ConfigError("pipeline.first.solver",
                      "'" + first.solver + "' cannot solve a first right-hand side");
  }
  ValidateSolver(first, "pipeline.first");
  if (rest)
  {
    if (!kRestSolvers.count(rest->solver))
    {
      throw ConfigError("pipeline.rest.solver", "unknown solver '" + rest->solver + "'");
    }
    ValidateSolver(*rest, "pipeline.rest");
    const bool deflating = rest->solver == "gmres_proj" || rest->solver == "gmres_e";
    if (deflating && first.solver != "gmres_dr")
    {
      throw ConfigError("pipeline.rest.solver", rest->solver + " needs gmres_dr as first solver");
    }
    if ((rest->solver == "bl_gmres_proj") != (first.solver == "bl_gmres_dr"))
    {
      throw ConfigError("pipeline.rest.solver", "bl_gmres_proj pairs only with bl_gmres_dr");
    }
  }
}

//
// Problem construction
//

CsrMatrix build_matrix(const MatrixSpec &spec)
{
  if (!spec.path.empty())
  {
    return load_matrix_market(spec.path);
  }
  if (spec.generator == "bidiagonal")
  {
    return gen_bidiagonal(spec.n);
  }
  if (spec.generator == "identity")
  {
    return CsrMatrix::identity(spec.n);
  }
  if (spec.generator == "lattice")
  {
    return gen_lattice_surrogate(spec.lattice, spec.kappa, spec.seed);
  }
  throw ConfigError("matrix.generator", "unknown generator '" + spec.generator + "'");
}

std::vector<Vector> build_rhs(const RhsSpec &spec, Index n, bool real)
{
  std::vector<Vector> out;
  std::mt19937_64 rng(spec.seed.value_or(0));
  std::normal_distribution<double> normal(0.0, 1.0);
  const Real imag_scale = std::sqrt(0.5);
  auto random_vector = [&]()
  {
    Vector v(n);
    for (auto &x : v)
    {
      if (real)
      {
        x = normal(rng);
      }
      else
      {
        const Real re = normal(rng);
        const Real im = normal(rng);
        x = {imag_scale * re, imag_scale * im};
      }
    }
    return v;
  };

  if (spec.kind == "random_normal")
  {
    for (Index i = 0; i < spec.count; i++)
    {
      out.push_back(random_vector());
    }
  }
  else if (spec.kind == "related")
  {
    out.push_back(random_vector());
    for (Index i = 1; i < spec.count; i++)
    {
      Vector v = random_vector();
      for (Index t = 0; t < n; t++)
      {
        v[t] = out[0][t] + spec.epsilon * v[t];
      }
      out.push_back(std::move(v));
    }
  }
  else if (spec.kind == "unit_coordinate")
  {
    std::vector<Index> coords = spec.coordinates;
    if (coords.empty())
    {
      if (spec.count > n)
      {
        throw ConfigError("rhs.count", "more unit vectors requested than coordinates");
      }
      std::uniform_int_distribution<Index> pick(0, n - 1);
      std::set<Index> used;
      while (static_cast<Index>(coords.size()) < spec.count)
      {
        const Index c = pick(rng);
        if (used.insert(c).second)
        {
          coords.push_back(c);
        }
      }
    }
    for (std::size_t i = 0; i < coords.size(); i++)
    {
      if (coords[i] < 0 || coords[i] >= n)
      {
        throw ConfigError("rhs.coordinates[" + std::to_string(i) + "]", "out of range");
      }
      Vector v(n);
      v[coords[i]] = 1.0;
      out.push_back(std::move(v));
    }
  }
  else
  {
    throw ConfigError("rhs.kind", "unknown kind '" + spec.kind + "'");
  }
  return out;
}

//
// Running
//

const SolveReport &RunRecord::report_for(Index rhs) const
{
  for (const auto &s : solves)
  {
    for (std::size_t t = 0; t < s.rhs.size(); t++)
    {
      if (s.rhs[t] == rhs)
      {
        return s.columns[t];
      }
    }
  }
  throw Error("no report for right-hand side " + std::to_string(rhs));
}

std::int64_t RunRecord::matvecs_for(Index rhs) const
{
  for (const auto &s : solves)
  {
    if (std::find(s.rhs.begin(), s.rhs.end(), rhs) != s.rhs.end())
    {
      return s.counters.matvecs;
    }
  }
  throw Error("no solve for right-hand side " + std::to_string(rhs));
}

namespace
{

Json CountersJson(const OpCounters &c)
{
  return Json{{"matvecs", c.matvecs}, {"vecops", c.vecops}, {"check_matvecs", c.check_matvecs}};
}

Json NumberOrNull(Real v)
{
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Json ReportJson(const SolveReport &r, Index rhs)
{
  Json hist = Json::array();
  for (const auto &e : r.history)
  {
    hist.push_back(Json::array({e.matvecs, NumberOrNull(e.relative_residual), to_string(e.event)}));
  }
  Json j{{"rhs", rhs},
         {"converged", r.converged},
         {"breakdown", r.breakdown},
         {"final_relative_residual", NumberOrNull(r.final_relative_residual)},
         {"true_relative_residual", NumberOrNull(r.true_relative_residual)},
         {"cycles", r.cycles},
         {"warnings", r.warnings},
         {"history", hist}};
  if (!r.error.empty())
  {
    j["error"] = r.error;
  }
  return j;
}

SolveRecord SingleRecord(const std::string &solver, Index rhs, SolveReport report)
{
  SolveRecord s;
  s.solver = solver;
  s.rhs = {rhs};
  s.counters = report.counters;
  s.cycles = report.cycles;
  s.converged = report.converged && report.error.empty();
  s.error = report.error;
  s.columns.push_back(std::move(report));
  return s;
}

SolveRecord BlockRecord(const std::string &solver, std::vector<Index> rhs, BlockSolveReport rep)
{
  SolveRecord s;
  s.solver = solver;
  s.rhs = std::move(rhs);
  s.counters = rep.counters;
  s.cycles = rep.cycles;
  s.converged = rep.converged && rep.error.empty();
  s.error = rep.error;
  s.columns = std::move(rep.columns);
  return s;
}

std::string FormatDouble(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Json RunRecord::to_json(bool include_wall_time) const
{
  Json js = Json::array();
  for (const auto &s : solves)
  {
    Json cols = Json::array();
    for (std::size_t t = 0; t < s.columns.size(); t++)
    {
      cols.push_back(ReportJson(s.columns[t], s.rhs[t]));
    }
    Json sj{{"solver", s.solver},
            {"rhs", s.rhs},
            {"counters", CountersJson(s.counters)},
            {"cycles", s.cycles},
            {"converged", s.converged},
            {"columns", cols}};
    if (!s.error.empty())
    {
      sj["error"] = s.error;
    }
    js.push_back(sj);
  }
  Json j{{"schema_version", kConfigSchemaVersion},
         {"config", config.to_json()},
         {"rng", rng},
         {"n", n},
         {"nnz_per_row", nnz_per_row},
         {"solves", js},
         {"totals", CountersJson(totals)},
         {"matvec_cost_nnz", static_cast<Real>(totals.matvecs) * nnz_per_row},
         {"all_converged", all_converged}};
  if (subspace)
  {
    j["subspace"] = Json{{"k", subspace->k()}, {"block_size", subspace->block_size}};
  }
  if (include_wall_time)
  {
    j["wall_seconds"] = wall_seconds;
  }
  return j;
}

RunRecord run_experiment(const ExperimentConfig &config)
{
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config;
  const CsrMatrix a = build_matrix(config.matrix);
  rec.n = a.dim();
  rec.nnz_per_row = a.nnz_per_row();
  const std::vector<Vector> b = build_rhs(config.rhs, a.dim(), a.is_real());
  const Index count = static_cast<Index>(b.size());
  const SolverSpec &first = config.first;
  const SolverSpec &rest = config.rest ? *config.rest : config.first;
  std::vector<Vector> solutions(b.size(), Vector(a.dim()));
  std::vector<Vector> done;

  if (first.solver == "bl_gmres_dr")
  {
    const Index p = first.p;
    for (Index start = 0; start < count; start += p)
    {
      const Index q = std::min(p, count - start);
      Matrix bm(a.dim(), q);
      std::vector<Index> idx;
      for (Index t = 0; t < q; t++)
      {
        std::copy(b[start + t].begin(), b[start + t].end(), bm.col(t).begin());
        idx.push_back(start + t);
      }
      const bool use_dr = start == 0 || rest.solver == "bl_gmres_dr";
      const std::string name = use_dr ? "bl_gmres_dr" : "bl_gmres_proj";
      Matrix x(a.dim(), q);
      BlockSolveReport rep;
      try
      {
        if (use_dr)
        {
          const SolverSpec &s = start == 0 ? first : rest;
          BlockDrResult r = bl_gmres_dr_solve(a, bm, {s.m, s.p, s.k, s.rtol, s.max_matvecs});
          x = std::move(r.x);
          rep = std::move(r.report);
          if (start == 0)
          {
            rec.subspace = std::move(r.subspace);
          }
        }
        else
        {
          BlockProjConfig pc{rest.m, rest.rtol, rest.max_matvecs, rest.schedule,
                             rest.test_in_cycle};
          BlockSolveResult r =
              bl_gmres_proj_solve(a, bm, *rec.subspace, pc,
                                  rest.related ? std::span<const Vector>(done)
                                               : std::span<const Vector>());
          x = std::move(r.x);
          rep = std::move(r.report);
        }
      }
      catch (const std::exception &e)
      {
        rep.error = e.what();
        rep.columns.assign(static_cast<std::size_t>(q), SolveReport{});
        for (auto &c : rep.columns)
        {
          c.error = e.what();
        }
      }
      for (Index t = 0; t < q; t++)
      {
        solutions[start + t] = Vector(x.col(t));
        if (rest.related && rep.error.empty())
        {
          done.push_back(solutions[start + t]);
        }
      }
      rec.solves.push_back(BlockRecord(name, std::move(idx), std::move(rep)));
    }
  }
  else
  {
    std::optional<Augmentation> aug;
    for (Index i = 0; i < count; i++)
    {
      const SolverSpec &s = i == 0 ? first : rest;
      SolveReport report;
      try
      {
        SolveResult res;
        if (s.solver == "gmres")
        {
          res = gmres_restarted(a, b[i], {s.m, s.rtol, s.max_matvecs, s.test_in_cycle});
        }
        else if (s.solver == "bicgstab")
        {
          res = bicgstab(a, b[i], s.rtol, s.max_matvecs);
        }
        else if (s.solver == "gmres_dr")
        {
          GmresDrResult r = gmres_dr_solve(a, b[i], {s.m, s.k, s.rtol, s.max_matvecs});
          res.x = std::move(r.x);
          res.report = std::move(r.report);
          if (i == 0)
          {
            rec.subspace = std::move(r.subspace);
          }
        }
        else if (s.solver == "gmres_proj")
        {
          if (!rec.subspace)
          {
            throw Error("no deflation subspace available");
          }
          res = gmres_proj_solve(a, b[i], *rec.subspace,
                                 {s.m, s.rtol, s.max_matvecs, s.schedule, s.test_in_cycle},
                                 s.related ? std::span<const Vector>(done)
                                           : std::span<const Vector>());
        }
        else if (s.solver == "gmres_e")
        {
          if (!rec.subspace)
          {
            throw Error("no deflation subspace available");
          }
          OpCounters setup;
          if (!aug)
          {
            aug = make_augmentation(*rec.subspace, &setup);
          }
          res = gmres_e_solve(a, b[i], *aug, {s.m, s.rtol, s.max_matvecs, s.test_in_cycle});
          res.report.counters += setup;
        }
        else
        {
          throw Error("unknown solver " + s.solver);
        }
        solutions[i] = std::move(res.x);
        report = std::move(res.report);
      }
      catch (const std::exception &e)
      {
        report = SolveReport{};
        report.error = e.what();
      }
      if (rest.related && report.error.empty())
      {
        done.push_back(solutions[i]);
      }
      rec.solves.push_back(SingleRecord(s.solver, i, std::move(report)));
    }
  }

  rec.all_converged = true;
  for (const auto &s : rec.solves)
  {
    rec.totals += s.counters;
    rec.all_converged = rec.all_converged && s.converged;
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!config.output.directory.empty())
  {
    const auto &dir = config.output.directory;
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "record.json", rec.to_json().dump(2) + "\n");
    if (config.output.history)
    {
      emit_history_csv(rec, dir);
    }
    if (config.output.spectrum && rec.subspace)
    {
      emit_spectrum_csv(*rec.subspace, dir / "spectrum.csv");
    }
    if (config.output.subspace && rec.subspace)
    {
      std::ostringstream os;
      write_deflation_subspace(*rec.subspace, os);
      write_file_atomic(dir / "subspace.bin", os.str());
    }
  }
  return rec;
}

//
// Output
//

void write_file_atomic(const std::filesystem::path &path, const std::string &content)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
    {
      throw Error("cannot write " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out)
    {
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
  {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_history_csv(const SolveReport &report, std::ostream &out)
{
  out << "matvecs,relative_residual,event\n";
  for (const auto &e : report.history)
  {
    out << e.matvecs << ',' << FormatDouble(e.relative_residual) << ',' << to_string(e.event)
        << '\n';
  }
}

std::vector<std::filesystem::path> emit_history_csv(const RunRecord &record,
                                                    const std::filesystem::path &directory)
{
  std::filesystem::create_directories(directory);
  std::vector<std::filesystem::path> paths;
  for (const auto &s : record.solves)
  {
    for (std::size_t t = 0; t < s.rhs.size(); t++)
    {
      char name[32];
      std::snprintf(name, sizeof(name), "history_rhs%03lld.csv",
                    static_cast<long long>(s.rhs[t]));
      std::ostringstream os;
      write_history_csv(s.columns[t], os);
      const auto path = directory / name;
      write_file_atomic(path, os.str());
      paths.push_back(path);
    }
  }
  return paths;
}

void write_spectrum_csv(const std::vector<HarmonicRitzPair> &pairs, std::ostream &out)
{
  std::vector<Scalar> values;
  for (const auto &p : pairs)
  {
    values.push_back(p.theta);
  }
  std::stable_sort(values.begin(), values.end(),
                   [](Scalar a, Scalar b) { return std::abs(a) < std::abs(b); });
  out << "re,im,abs\n";
  for (const auto &v : values)
  {
    out << FormatDouble(v.real()) << ',' << FormatDouble(v.imag()) << ','
        << FormatDouble(std::abs(v)) << '\n';
  }
}

void emit_spectrum_csv(const std::vector<HarmonicRitzPair> &pairs,
                       const std::filesystem::path &path)
{
  std::ostringstream os;
  write_spectrum_csv(pairs, os);
  write_file_atomic(path, os.str());
}

void emit_spectrum_csv(const DeflationSubspace &d, const std::filesystem::path &path)
{
  emit_spectrum_csv(d.k() > 0 ? harmonic_ritz(d) : std::vector<HarmonicRitzPair>{}, path);
}

}  // namespace mrhs
