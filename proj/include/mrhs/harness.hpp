// SPDX-License-Identifier: Apache-2.0

#ifndef MRHS_HARNESS_HPP
#define MRHS_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrhs/block.hpp"
#include "mrhs/deflation.hpp"
#include "mrhs/krylov.hpp"
#include "mrhs/multirhs.hpp"
#include "mrhs/operators.hpp"

namespace mrhs
{

using Json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

/// Name of the generator used for random right-hand sides, recorded in every run.
inline constexpr const char *kRhsGeneratorName =
    "std::mt19937_64 + std::normal_distribution<double>(0, 1)";

struct MatrixSpec
{
  std::string generator = "bidiagonal";  // bidiagonal | lattice | identity | "" with path
  Index n = 2000;                        // bidiagonal, identity
  Index lattice = 8;                     // lattice extent L
  Real kappa = 0.35;
  std::uint64_t seed = 42;
  std::filesystem::path path;  // Matrix Market file; overrides the generator
};

struct RhsSpec
{
  Index count = 1;
  std::string kind = "random_normal";  // random_normal | unit_coordinate | related
  std::optional<std::uint64_t> seed;   // required for random kinds
  Real epsilon = 1e-4;                 // related: b_i = b_1 + epsilon * random
  std::vector<Index> coordinates;      // unit_coordinate (0-based); drawn when empty
};

struct SolverSpec
{
  std::string solver;  // gmres gmres_dr gmres_proj gmres_e bicgstab bl_gmres_dr bl_gmres_proj
  Index m = 15;
  Index k = 10;
  Index p = 1;
  Real rtol = 1e-6;
  Index max_matvecs = 10000;
  ProjSchedule schedule;
  bool test_in_cycle = true;
  bool related = false;
};

struct OutputSpec
{
  std::filesystem::path directory;  // empty: write nothing
  bool history = true;
  bool spectrum = true;
  bool subspace = false;
};

struct ExperimentConfig
{
  std::string name = "experiment";
  MatrixSpec matrix;
  RhsSpec rhs;
  SolverSpec first;
  std::optional<SolverSpec> rest;  // right-hand sides 2..s; defaults to `first`
  OutputSpec output;

  /// Parses and validates; errors are ConfigError with a dotted field path.
  static ExperimentConfig from_json(const Json &j);
  static ExperimentConfig load(const std::filesystem::path &path);
  Json to_json() const;
  void validate() const;
};

CsrMatrix build_matrix(const MatrixSpec &spec);

/// Real entries for real operators, otherwise complex with independent N(0, 1/2) parts.
std::vector<Vector> build_rhs(const RhsSpec &spec, Index n, bool real);

/// One solver invocation; a block group is a single solve covering several columns.
struct SolveRecord
{
  std::string solver;
  std::vector<Index> rhs;
  std::vector<SolveReport> columns;
  OpCounters counters;
  Index cycles = 0;
  bool converged = false;
  std::string error;
};

struct RunRecord
{
  ExperimentConfig config;
  std::string rng = kRhsGeneratorName;
  Index n = 0;
  Real nnz_per_row = 0.0;
  std::vector<SolveRecord> solves;
  OpCounters totals;
  bool all_converged = false;
  double wall_seconds = 0.0;
  std::optional<DeflationSubspace> subspace;

  /// Report for right-hand side i, whichever solve produced it.
  const SolveReport &report_for(Index rhs) const;
  /// Matvecs charged to the solve that handled right-hand side i.
  std::int64_t matvecs_for(Index rhs) const;

  Json to_json(bool include_wall_time = true) const;
};

/// Runs the pipeline: deterministic for a fixed config. Outputs are written when
/// config.output.directory is set. Solver failures are captured per solve.
RunRecord run_experiment(const ExperimentConfig &config);

void write_history_csv(const SolveReport &report, std::ostream &out);
/// One CSV per right-hand side, `history_rhsNNN.csv`, in `directory`.
std::vector<std::filesystem::path> emit_history_csv(const RunRecord &record,
                                                    const std::filesystem::path &directory);

void write_spectrum_csv(const std::vector<HarmonicRitzPair> &pairs, std::ostream &out);
/// re, im, abs of the harmonic Ritz values, ascending by modulus; header only for k = 0.
void emit_spectrum_csv(const DeflationSubspace &d, const std::filesystem::path &path);
void emit_spectrum_csv(const std::vector<HarmonicRitzPair> &pairs,
                       const std::filesystem::path &path);

/// Writes via a temporary file in the same directory followed by a rename.
void write_file_atomic(const std::filesystem::path &path, const std::string &content);

//
// Named experiment suites
//

struct SuiteOptions
{
  std::uint64_t seed = 42;
  int jobs = 1;
  std::filesystem::path output;  // per-cell outputs under output/<cell>; empty for none
};

struct SuiteCell
{
  std::string label;
  Json params;
  RunRecord record;
};

struct SuiteResult
{
  std::string name;
  std::vector<SuiteCell> cells;

  const SuiteCell &cell(const std::string &label) const;
  Json to_json() const;
  /// Plain-text table: label, total matvecs, vecops, converged.
  std::string summary() const;
};

std::vector<std::string> suite_names();
/// The experiment configurations a suite runs, in order, with their labels.
std::vector<std::pair<std::string, ExperimentConfig>> suite_configs(const std::string &name,
                                                                    const SuiteOptions &opts);
SuiteResult run_suite(const std::string &name, const SuiteOptions &opts = {});

}  // namespace mrhs

#endif  // MRHS_HARNESS_HPP
