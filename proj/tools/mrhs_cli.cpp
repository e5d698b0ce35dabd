// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: gen, solve, suite, spectrum.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mrhs/harness.hpp"

namespace
{

using mrhs::Json;

/// Optional overrides mirroring the ExperimentConfig fields.
struct Overrides
{
  std::optional<std::string> generator, matrix_path;
  std::optional<long long> n, lattice;
  std::optional<double> kappa;
  std::optional<unsigned long long> matrix_seed;

  std::optional<long long> rhs_count;
  std::optional<std::string> rhs_kind;
  std::optional<unsigned long long> rhs_seed;
  std::optional<double> epsilon;
  std::vector<long long> coordinates;

  struct Solver
  {
    std::optional<std::string> solver, schedule;
    std::optional<long long> m, k, p, max_matvecs;
    std::optional<double> rtol;
    std::optional<bool> test_in_cycle, related;
  } first, rest;

  std::optional<std::string> output;
  std::optional<bool> history, spectrum, subspace;
  std::optional<std::string> name;
};

// --NAME sets true, --no-NAME sets false; unset leaves the configured value alone.
void AddBoolFlag(CLI::App *app, const std::string &name, std::optional<bool> &target,
                 const std::string &help)
{
  app->add_flag("--" + name + ",!--no-" + name, target, help);
}

void AddSolverOptions(CLI::App *app, Overrides::Solver &s, const std::string &prefix)
{
  app->add_option("--" + prefix + "-solver", s.solver, "Solver name for " + prefix);
  app->add_option("--" + prefix + "-m", s.m, "Cycle or subspace dimension");
  app->add_option("--" + prefix + "-k", s.k, "Number of deflated eigenvectors");
  app->add_option("--" + prefix + "-p", s.p, "Block size");
  app->add_option("--" + prefix + "-rtol", s.rtol, "Relative residual tolerance");
  app->add_option("--" + prefix + "-max-matvecs", s.max_matvecs, "Matvec budget");
  app->add_option("--" + prefix + "-schedule", s.schedule,
                  "Projection schedule: every_cycle, every_jth:J, at_multiples:J");
  AddBoolFlag(app, prefix + "-test-in-cycle", s.test_in_cycle,
              "Check the residual estimate inside cycles");
  AddBoolFlag(app, prefix + "-related", s.related, "Project over previous solutions first");
}

void AddConfigOptions(CLI::App *app, Overrides &o)
{
  app->add_option("--name", o.name, "Experiment name");
  app->add_option("--generator", o.generator, "Matrix generator: bidiagonal, lattice, identity");
  app->add_option("--matrix", o.matrix_path, "Matrix Market file (replaces the generator)");
  app->add_option("--n", o.n, "Dimension for bidiagonal and identity");
  app->add_option("--L", o.lattice, "Lattice extent");
  app->add_option("--kappa", o.kappa, "Lattice hopping parameter");
  app->add_option("--matrix-seed", o.matrix_seed, "Seed for the lattice link phases");
  app->add_option("--rhs-count", o.rhs_count, "Number of right-hand sides");
  app->add_option("--rhs-kind", o.rhs_kind, "random_normal, unit_coordinate or related");
  app->add_option("--rhs-seed", o.rhs_seed, "Seed for random right-hand sides");
  app->add_option("--epsilon", o.epsilon, "Perturbation size for related right-hand sides");
  app->add_option("--coordinates", o.coordinates, "Unit vector coordinates (0-based)");
  AddSolverOptions(app, o.first, "first");
  AddSolverOptions(app, o.rest, "rest");
  app->add_option("--output", o.output, "Output directory");
  AddBoolFlag(app, "history", o.history, "Write history CSVs");
  AddBoolFlag(app, "spectrum", o.spectrum, "Write spectrum.csv");
  AddBoolFlag(app, "subspace", o.subspace, "Write subspace.bin");
}

template <class T>
void Set(Json &j, const char *key, const std::optional<T> &v)
{
  if (v)
  {
    j[key] = *v;
  }
}

void ApplySolver(Json &pipeline, const char *key, const Overrides::Solver &s)
{
  const bool any = s.solver || s.schedule || s.m || s.k || s.p || s.max_matvecs || s.rtol ||
                   s.test_in_cycle || s.related;
  if (!any)
  {
    return;
  }
  Json &j = pipeline[key];
  Set(j, "solver", s.solver);
  Set(j, "schedule", s.schedule);
  Set(j, "m", s.m);
  Set(j, "k", s.k);
  Set(j, "p", s.p);
  Set(j, "max_matvecs", s.max_matvecs);
  Set(j, "rtol", s.rtol);
  Set(j, "test_in_cycle", s.test_in_cycle);
  Set(j, "related", s.related);
}

Json DefaultConfigJson()
{
  return Json{{"schema_version", mrhs::kConfigSchemaVersion},
              {"name", "experiment"},
              {"matrix", {{"generator", "bidiagonal"}, {"n", 2000}}},
              {"rhs", {{"count", 1}, {"kind", "random_normal"}, {"seed", 42}}},
              {"pipeline", {{"first", {{"solver", "gmres_dr"}, {"m", 25}, {"k", 10}}}}}};
}

mrhs::ExperimentConfig BuildConfig(const std::optional<std::string> &config_path,
                                   const Overrides &o)
{
  Json j = DefaultConfigJson();
  if (config_path)
  {
    std::ifstream in(*config_path);
    if (!in)
    {
      throw mrhs::Error("cannot open " + *config_path);
    }
    try
    {
      j = Json::parse(in);
    }
    catch (const Json::parse_error &e)
    {
      throw mrhs::ConfigError("<file>", std::string("invalid JSON: ") + e.what());
    }
  }
  Set(j, "name", o.name);
  Json &m = j["matrix"];
  if (o.matrix_path)
  {
    m = Json{{"path", *o.matrix_path}};
  }
  if (o.generator)
  {
    m.erase("path");
    m["generator"] = *o.generator;
  }
  Set(m, "n", o.n);
  Set(m, "L", o.lattice);
  Set(m, "kappa", o.kappa);
  Set(m, "seed", o.matrix_seed);
  Json &r = j["rhs"];
  Set(r, "count", o.rhs_count);
  Set(r, "kind", o.rhs_kind);
  Set(r, "seed", o.rhs_seed);
  Set(r, "epsilon", o.epsilon);
  if (!o.coordinates.empty())
  {
    r["coordinates"] = o.coordinates;
  }
  ApplySolver(j["pipeline"], "first", o.first);
  ApplySolver(j["pipeline"], "rest", o.rest);
  if (o.output || o.history || o.spectrum || o.subspace)
  {
    Json &out = j["output"];
    Set(out, "directory", o.output);
    Set(out, "history", o.history);
    Set(out, "spectrum", o.spectrum);
    Set(out, "subspace", o.subspace);
  }
  return mrhs::ExperimentConfig::from_json(j);
}

void PrintRecord(const mrhs::RunRecord &rec)
{
  std::cout << "n = " << rec.n << ", nnz/row = " << rec.nnz_per_row << "\n";
  for (const auto &s : rec.solves)
  {
    std::cout << s.solver << " rhs";
    for (auto i : s.rhs)
    {
      std::cout << ' ' << i;
    }
    std::cout << ": matvecs " << s.counters.matvecs << ", vecops " << s.counters.vecops
              << ", cycles " << s.cycles << ", " << (s.converged ? "converged" : "NOT converged");
    if (!s.columns.empty())
    {
      mrhs::Real worst = 0.0;
      for (const auto &c : s.columns)
      {
        worst = std::max(worst, c.final_relative_residual);
      }
      std::cout << ", rel. residual " << worst;
    }
    if (!s.error.empty())
    {
      std::cout << ", error: " << s.error;
    }
    std::cout << "\n";
  }
  std::cout << "total matvecs " << rec.totals.matvecs << ", vecops " << rec.totals.vecops
            << ", wall " << rec.wall_seconds << " s\n";
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Deflated GMRES solvers for multiple right-hand sides"};
  app.require_subcommand(1);

  // gen
  auto *gen = app.add_subcommand("gen", "Write a generated matrix in Matrix Market format");
  std::string gen_generator = "bidiagonal";
  long long gen_n = 2000, gen_lattice = 8;
  double gen_kappa = 0.35;
  unsigned long long gen_seed = 42;
  std::string gen_out;
  gen->add_option("--generator", gen_generator, "bidiagonal, lattice or identity")
      ->check(CLI::IsMember({"bidiagonal", "lattice", "identity"}));
  gen->add_option("--n", gen_n, "Dimension for bidiagonal and identity");
  gen->add_option("--L", gen_lattice, "Lattice extent");
  gen->add_option("--kappa", gen_kappa, "Lattice hopping parameter");
  gen->add_option("--seed", gen_seed, "Seed for the lattice link phases");
  gen->add_option("--out,-o", gen_out, "Output file")->required();

  // solve
  auto *solve = app.add_subcommand("solve", "Run one solver pipeline");
  std::optional<std::string> solve_config;
  bool solve_print = false, solve_json = false;
  Overrides solve_over;
  solve->add_option("--config,-c", solve_config, "JSON configuration file");
  solve->add_flag("--print-config", solve_print, "Print the effective configuration and exit");
  solve->add_flag("--json", solve_json, "Print the run record as JSON");
  AddConfigOptions(solve, solve_over);

  // suite
  auto *suite = app.add_subcommand("suite", "Run a named experiment suite");
  std::string suite_name;
  mrhs::SuiteOptions suite_opts;
  std::string suite_output;
  bool suite_json = false;
  suite->add_option("name", suite_name, "Suite name")
      ->required()
      ->check(CLI::IsMember(mrhs::suite_names()));
  suite->add_option("--seed", suite_opts.seed, "Seed for the right-hand sides");
  suite->add_option("--jobs,-j", suite_opts.jobs, "Cells run in parallel")
      ->check(CLI::PositiveNumber);
  suite->add_option("--output", suite_output, "Directory for per-cell outputs");
  suite->add_flag("--json", suite_json, "Print the suite result as JSON");

  // spectrum
  auto *spectrum = app.add_subcommand(
      "spectrum", "Harmonic Ritz values of a stored subspace or of a first solve");
  std::optional<std::string> spec_subspace, spec_config;
  std::string spec_out;
  Overrides spec_over;
  spectrum->add_option("--from-subspace", spec_subspace, "Deflation subspace container file");
  spectrum->add_option("--config,-c", spec_config, "JSON configuration for the first solve");
  spectrum->add_option("--out,-o", spec_out, "CSV output file (default: standard output)");
  AddConfigOptions(spectrum, spec_over);

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (gen->parsed())
    {
      mrhs::MatrixSpec ms;
      ms.generator = gen_generator;
      ms.n = gen_n;
      ms.lattice = gen_lattice;
      ms.kappa = gen_kappa;
      ms.seed = gen_seed;
      mrhs::save_matrix_market(mrhs::build_matrix(ms), gen_out);
      return 0;
    }
    if (solve->parsed())
    {
      const mrhs::ExperimentConfig cfg = BuildConfig(solve_config, solve_over);
      if (solve_print)
      {
        std::cout << cfg.to_json().dump(2) << "\n";
        return 0;
      }
      const mrhs::RunRecord rec = mrhs::run_experiment(cfg);
      if (solve_json)
      {
        std::cout << rec.to_json().dump(2) << "\n";
      }
      else
      {
        PrintRecord(rec);
      }
      return rec.all_converged ? 0 : 1;
    }
    if (suite->parsed())
    {
      suite_opts.output = suite_output;
      const mrhs::SuiteResult res = mrhs::run_suite(suite_name, suite_opts);
      if (suite_json)
      {
        std::cout << res.to_json().dump(2) << "\n";
      }
      else
      {
        std::cout << res.summary();
      }
      bool ok = true;
      for (const auto &c : res.cells)
      {
        ok = ok && c.record.all_converged;
      }
      return ok ? 0 : 1;
    }
    if (spectrum->parsed())
    {
      std::ostringstream csv;
      bool ok = true;
      if (spec_subspace)
      {
        const auto d = mrhs::load_deflation_subspace(*spec_subspace);
        mrhs::write_spectrum_csv(d.k() > 0 ? mrhs::harmonic_ritz(d)
                                           : std::vector<mrhs::HarmonicRitzPair>{},
                                 csv);
      }
      else
      {
        mrhs::ExperimentConfig cfg = BuildConfig(spec_config, spec_over);
        cfg.rhs.count = 1;
        if (!cfg.rhs.coordinates.empty())
        {
          cfg.rhs.coordinates.resize(1);
        }
        cfg.output = {};
        const mrhs::RunRecord rec = mrhs::run_experiment(cfg);
        ok = rec.all_converged;
        if (!rec.subspace)
        {
          throw mrhs::ConfigError("pipeline.first.solver",
                                  "spectrum needs gmres_dr or bl_gmres_dr");
        }
        const auto &d = *rec.subspace;
        mrhs::write_spectrum_csv(d.k() > 0 ? mrhs::harmonic_ritz(d)
                                           : std::vector<mrhs::HarmonicRitzPair>{},
                                 csv);
      }
      if (spec_out.empty())
      {
        std::cout << csv.str();
      }
      else
      {
        mrhs::write_file_atomic(spec_out, csv.str());
      }
      return ok ? 0 : 1;
    }
  }
  catch (const mrhs::ConfigError &e)
  {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
