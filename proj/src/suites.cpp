// SPDX-License-Identifier: Apache-2.0

#include "mrhs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace mrhs
{

namespace
{

SolverSpec Solver(const std::string &name, Index m, Real rtol = 1e-6, Index max_matvecs = 10000)
{
  SolverSpec s;
  s.solver = name;
  s.m = m;
  s.rtol = rtol;
  s.max_matvecs = max_matvecs;
  return s;
}

SolverSpec Dr(Index m, Index k, Real rtol = 1e-6)
{
  SolverSpec s = Solver("gmres_dr", m, rtol);
  s.k = k;
  return s;
}

SolverSpec Proj(Index m, ProjSchedule schedule)
{
  SolverSpec s = Solver("gmres_proj", m);
  s.schedule = schedule;
  return s;
}

/// The bidiagonal test problem with `count` random right-hand sides.
ExperimentConfig Bidiagonal(const std::string &name, Index count, std::uint64_t seed)
{
  ExperimentConfig c;
  c.name = name;
  c.matrix.generator = "bidiagonal";
  c.matrix.n = 2000;
  c.rhs.count = count;
  c.rhs.kind = "random_normal";
  c.rhs.seed = seed;
  c.first = Dr(25, 10);
  return c;
}

struct Cell
{
  std::string label;
  ExperimentConfig config;
};

std::vector<Cell> Ex1Fig31(std::uint64_t seed)
{
  std::vector<Cell> cells;
  cells.push_back({"gmres_dr_25_10", Bidiagonal("ex1-fig31", 1, seed)});

  ExperimentConfig proj = Bidiagonal("ex1-fig31", 2, seed);
  proj.rest = Proj(15, ProjSchedule::every_cycle());
  cells.push_back({"gmres_proj_15_10", proj});

  ExperimentConfig gm = Bidiagonal("ex1-fig31", 2, seed);
  gm.first = Solver("gmres", 15, 1e-6, 600);
  gm.rest = gm.first;
  cells.push_back({"gmres_15", gm});

  ExperimentConfig bi = Bidiagonal("ex1-fig31", 2, seed);
  bi.first = Solver("bicgstab", 1);
  bi.rest = bi.first;
  cells.push_back({"bicgstab", bi});
  return cells;
}

std::vector<Cell> Table31(std::uint64_t seed)
{
  const std::vector<ProjSchedule> schedules = {ProjSchedule::every_cycle(), ProjSchedule::every_jth(5),
                                               ProjSchedule::every_jth(10),
                                               ProjSchedule::at_multiples(10)};
  std::vector<Cell> cells;
  for (Index m : {5, 10, 15, 20, 25})
  {
    for (const auto &s : schedules)
    {
      ExperimentConfig c = Bidiagonal("table31", 10, seed);
      c.rest = Proj(m, s);
      cells.push_back({"m" + std::to_string(m) + "_" + s.to_string(), c});
    }
  }
  return cells;
}

std::vector<Cell> Table32(std::uint64_t seed)
{
  std::vector<Cell> cells;
  for (Index m : {5, 10, 15, 20, 25})
  {
    ExperimentConfig p = Bidiagonal("table32", 10, seed);
    p.rest = Proj(m, ProjSchedule::every_cycle());
    cells.push_back({"m" + std::to_string(m) + "_gmres_proj", p});
    ExperimentConfig e = Bidiagonal("table32", 10, seed);
    e.rest = Solver("gmres_e", m);
    cells.push_back({"m" + std::to_string(m) + "_gmres_e", e});
  }
  return cells;
}

std::vector<Cell> Table33Subset(std::uint64_t seed)
{
  std::vector<Cell> cells;
  ExperimentConfig p = Bidiagonal("table33-subset", 10, seed);
  p.rest = Proj(15, ProjSchedule::every_jth(5));
  cells.push_back({"gmres_dr_proj_every_jth5", p});
  ExperimentConfig b = Bidiagonal("table33-subset", 10, seed);
  b.first = Solver("bicgstab", 1);
  b.rest = b.first;
  cells.push_back({"bicgstab", b});
  return cells;
}

std::vector<Cell> Sec34(std::uint64_t seed)
{
  std::vector<Cell> cells;
  for (Real rtol : {1e-6, 1e-8, 1e-10})
  {
    ExperimentConfig c = Bidiagonal("sec34", 10, seed);
    c.first = Dr(25, 10, rtol);
    c.rest = Proj(15, ProjSchedule::every_cycle());
    char label[32];
    std::snprintf(label, sizeof(label), "first_rtol_%.0e", rtol);
    cells.push_back({label, c});
  }
  return cells;
}

std::vector<Cell> Sec37(std::uint64_t seed)
{
  std::vector<Cell> cells;
  ExperimentConfig rel = Bidiagonal("sec37", 10, seed);
  rel.rhs.kind = "related";
  rel.rhs.epsilon = 1e-4;
  rel.rest = Proj(15, ProjSchedule::every_jth(5));
  rel.rest->related = true;
  cells.push_back({"related_every_jth5", rel});
  ExperimentConfig unrel = Bidiagonal("sec37", 10, seed);
  unrel.rest = Proj(15, ProjSchedule::every_cycle());
  cells.push_back({"unrelated_every_cycle", unrel});
  return cells;
}

std::vector<Cell> Table41Subset(std::uint64_t seed)
{
  std::vector<Cell> cells;
  ExperimentConfig nb = Bidiagonal("table41-subset", 40, seed);
  nb.rest = Proj(15, ProjSchedule::every_cycle());
  cells.push_back({"gmres_dr_proj", nb});
  for (Index p : {5, 10, 20})
  {
    ExperimentConfig c = Bidiagonal("table41-subset", 40, seed);
    c.first = Solver("bl_gmres_dr", 170);
    c.first.p = p;
    c.first.k = 10;
    SolverSpec rest = Solver("bl_gmres_proj", 160);
    rest.p = p;
    c.rest = rest;
    cells.push_back({"block_p" + std::to_string(p), c});
  }
  return cells;
}

Json CellParams(const ExperimentConfig &c)
{
  Json j = c.to_json();
  j.erase("output");
  return j;
}

}  // namespace

std::vector<std::string> suite_names()
{
  return {"ex1-fig31", "table31", "table32", "table33-subset", "sec34", "sec37", "table41-subset"};
}

std::vector<std::pair<std::string, ExperimentConfig>> suite_configs(const std::string &name,
                                                                    const SuiteOptions &opts)
{
  std::vector<Cell> cells;
  if (name == "ex1-fig31")
  {
    cells = Ex1Fig31(opts.seed);
  }
  else if (name == "table31")
  {
    cells = Table31(opts.seed);
  }
  else if (name == "table32")
  {
    cells = Table32(opts.seed);
  }
  else if (name == "table33-subset")
  {
    cells = Table33Subset(opts.seed);
  }
  else if (name == "sec34")
  {
    cells = Sec34(opts.seed);
  }
  else if (name == "sec37")
  {
    cells = Sec37(opts.seed);
  }
  else if (name == "table41-subset")
  {
    cells = Table41Subset(opts.seed);
  }
  else
  {
    throw ConfigError("suite", "unknown suite '" + name + "'");
  }
  std::vector<std::pair<std::string, ExperimentConfig>> out;
  for (auto &c : cells)
  {
    c.config.validate();
    if (!opts.output.empty())
    {
      c.config.output.directory = opts.output / c.label;
    }
    out.emplace_back(c.label, std::move(c.config));
  }
  return out;
}

SuiteResult run_suite(const std::string &name, const SuiteOptions &opts)
{
  const auto configs = suite_configs(name, opts);
  SuiteResult result;
  result.name = name;
  result.cells.resize(configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]()
  {
    for (std::size_t i = next++; i < configs.size(); i = next++)
    {
      try
      {
        SuiteCell &cell = result.cells[i];
        cell.label = configs[i].first;
        cell.params = CellParams(configs[i].second);
        cell.record = run_experiment(configs[i].second);
      }
      catch (...)
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure)
        {
          failure = std::current_exception();
        }
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(configs.size())));
  if (jobs == 1)
  {
    worker();
  }
  else
  {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; t++)
    {
      pool.emplace_back(worker);
    }
    for (auto &t : pool)
    {
      t.join();
    }
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
  if (!opts.output.empty())
  {
    std::filesystem::create_directories(opts.output);
    write_file_atomic(opts.output / "suite.json", result.to_json().dump(2) + "\n");
  }
  return result;
}

const SuiteCell &SuiteResult::cell(const std::string &label) const
{
  for (const auto &c : cells)
  {
    if (c.label == label)
    {
      return c;
    }
  }
  throw Error("suite " + name + " has no cell '" + label + "'");
}

Json SuiteResult::to_json() const
{
  Json cs = Json::array();
  for (const auto &c : cells)
  {
    Json per = Json::array();
    for (const auto &s : c.record.solves)
    {
      per.push_back(Json{{"rhs", s.rhs},
                         {"solver", s.solver},
                         {"matvecs", s.counters.matvecs},
                         {"vecops", s.counters.vecops},
                         {"converged", s.converged}});
    }
    cs.push_back(Json{{"label", c.label},
                      {"params", c.params},
                      {"totals",
                       Json{{"matvecs", c.record.totals.matvecs},
                            {"vecops", c.record.totals.vecops},
                            {"check_matvecs", c.record.totals.check_matvecs}}},
                      {"all_converged", c.record.all_converged},
                      {"wall_seconds", c.record.wall_seconds},
                      {"solves", per}});
  }
  return Json{{"suite", name}, {"rng", kRhsGeneratorName}, {"cells", cs}};
}

std::string SuiteResult::summary() const
{
  std::size_t width = 5;
  for (const auto &c : cells)
  {
    width = std::max(width, c.label.size());
  }
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s %10s %12s %10s %9s\n", static_cast<int>(width), "cell",
                "matvecs", "vecops", "converged", "seconds");
  os << "suite " << name << "\n" << line;
  for (const auto &c : cells)
  {
    std::snprintf(line, sizeof(line), "%-*s %10lld %12lld %10s %9.2f\n", static_cast<int>(width),
                  c.label.c_str(), static_cast<long long>(c.record.totals.matvecs),
                  static_cast<long long>(c.record.totals.vecops),
                  c.record.all_converged ? "yes" : "no", c.record.wall_seconds);
    os << line;
  }
  return os.str();
}

}  // namespace mrhs
