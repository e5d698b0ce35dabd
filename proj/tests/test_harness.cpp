// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "mrhs/harness.hpp"
#include "test_util.hpp"

using namespace mrhs;
namespace fs = std::filesystem;

namespace
{

/// Fresh per-test scratch directory, removed on scope exit.
struct TempDir
{
  fs::path path;
  explicit TempDir(const std::string &tag)
  {
    path = fs::temp_directory_path() /
           ("mrhs_test_" + tag + "_" + std::to_string(static_cast<long long>(::getpid())));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Json base_config()
{
  return Json::parse(R"({
    "schema_version": 1,
    "name": "t",
    "matrix": {"generator": "bidiagonal", "n": 2000},
    "rhs": {"count": 2, "kind": "random_normal", "seed": 5},
    "pipeline": {
      "first": {"solver": "gmres_dr", "m": 25, "k": 10, "rtol": 1e-6},
      "rest": {"solver": "gmres_proj", "m": 15, "rtol": 1e-6, "schedule": "every_cycle"}
    }
  })");
}

/// Field path of the ConfigError raised by parsing `j`, or "" if it parses.
std::string error_field(const Json &j)
{
  try
  {
    ExperimentConfig::from_json(j);
  }
  catch (const ConfigError &e)
  {
    return e.field();
  }
  return "";
}

std::vector<std::vector<std::string>> read_csv(const fs::path &path)
{
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line))
  {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
    {
      cells.push_back(cell);
    }
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path &path)
{
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("ExperimentConfig")
{
  TEST_CASE("a complete configuration parses and round-trips through JSON")
  {
    const ExperimentConfig c = ExperimentConfig::from_json(base_config());
    CHECK(c.matrix.generator == "bidiagonal");
    CHECK(c.rhs.seed == std::optional<std::uint64_t>(5));
    REQUIRE(c.rest.has_value());
    CHECK(c.rest->solver == "gmres_proj");
    CHECK(c.rest->schedule == ProjSchedule::every_cycle());
    const ExperimentConfig again = ExperimentConfig::from_json(c.to_json());
    CHECK(again.to_json() == c.to_json());
  }

  TEST_CASE("errors name the offending field")
  {
    auto with = [](const std::string &pointer, const Json &value)
    {
      Json j = base_config();
      j[Json::json_pointer(pointer)] = value;
      return j;
    };
    auto without = [](const std::string &pointer)
    {
      Json j = base_config();
      const Json::json_pointer p(pointer);
      j[p.parent_pointer()].erase(p.back());
      return j;
    };
    CHECK(error_field(base_config()) == "");
    CHECK(error_field(without("/schema_version")) == "schema_version");
    CHECK(error_field(with("/schema_version", 2)) == "schema_version");
    CHECK(error_field(with("/colour", "red")) == "colour");
    CHECK(error_field(with("/rhs/colour", "red")) == "rhs.colour");
    CHECK(error_field(with("/pipeline/first/mm", 3)) == "pipeline.first.mm");
    CHECK(error_field(without("/rhs/seed")) == "rhs.seed");
    CHECK(error_field(with("/rhs/seed", -1)) == "rhs.seed");
    CHECK(error_field(with("/rhs/count", "two")) == "rhs.count");
    CHECK(error_field(with("/rhs/count", 0)) == "rhs.count");
    CHECK(error_field(with("/rhs/kind", "sideways")) == "rhs.kind");
    CHECK(error_field(with("/pipeline/first/m", 0)) == "pipeline.first.m");
    CHECK(error_field(with("/pipeline/first/k", 25)) == "pipeline.first.k");
    CHECK(error_field(with("/pipeline/first/rtol", 1.5)) == "pipeline.first.rtol");
    CHECK(error_field(with("/pipeline/first/solver", "gmres_proj")) == "pipeline.first.solver");
    CHECK(error_field(with("/pipeline/rest/schedule", "every_jth:0")) ==
          "pipeline.rest.schedule");
    CHECK(error_field(with("/pipeline/rest/solver", "qmr")) == "pipeline.rest.solver");
    CHECK(error_field(with("/pipeline/rest/max_matvecs", 0)) == "pipeline.rest.max_matvecs");
    CHECK(error_field(with("/pipeline/rest/test_in_cycle", "yes")) ==
          "pipeline.rest.test_in_cycle");
    CHECK(error_field(with("/matrix/generator", "hilbert")) == "matrix.generator");
    CHECK(error_field(with("/matrix/n", 1)) == "matrix.n");
    CHECK(error_field(without("/pipeline/first/solver")) == "pipeline.first.solver");
    CHECK(error_field(without("/pipeline/first")) == "pipeline.first");
    CHECK(error_field(without("/matrix")) == "matrix");
  }

  TEST_CASE("cross-field rules")
  {
    Json j = base_config();
    j["pipeline"]["first"]["solver"] = "gmres";
    CHECK(error_field(j) == "pipeline.rest.solver");

    j = base_config();
    j["pipeline"]["first"] = {{"solver", "bl_gmres_dr"}, {"m", 30}, {"k", 10}, {"p", 25}};
    j["pipeline"]["rest"] = {{"solver", "bl_gmres_proj"}, {"m", 30}};
    CHECK(error_field(j) == "pipeline.first.m");
    j["pipeline"]["first"]["p"] = 5;
    CHECK(error_field(j) == "");
    j["pipeline"]["rest"]["solver"] = "gmres_proj";
    CHECK(error_field(j) == "pipeline.rest.solver");

    j = base_config();
    j["pipeline"]["first"]["related"] = true;
    CHECK(error_field(j) == "pipeline.first.related");

    j = base_config();
    j["matrix"] = {{"generator", "lattice"}, {"L", 4}, {"kappa", 1.0}, {"seed", 3}};
    CHECK(error_field(j) == "matrix.kappa");
    j["matrix"]["kappa"] = 0.3;
    j["matrix"]["L"] = 1;
    CHECK(error_field(j) == "matrix.L");

    j = base_config();
    j["rhs"] = {{"count", 2}, {"kind", "related"}, {"seed", 1}, {"epsilon", 0.0}};
    CHECK(error_field(j) == "rhs.epsilon");

    j = base_config();
    j["rhs"] = {{"count", 2}, {"kind", "unit_coordinate"}, {"coordinates", {3}}};
    CHECK(error_field(j) == "rhs.coordinates");
    j["rhs"]["coordinates"] = {3, "x"};
    CHECK(error_field(j) == "rhs.coordinates[1]");
    j["rhs"]["coordinates"] = {3, 4};
    CHECK(error_field(j) == "");
    j["rhs"].erase("coordinates");
    CHECK(error_field(j) == "rhs.seed");
  }

  TEST_CASE("loading a file reports unreadable and malformed input")
  {
    TempDir tmp("load");
    CHECK_THROWS_AS(ExperimentConfig::load(tmp.path / "missing.json"), Error);
    std::ofstream(tmp.path / "bad.json") << "{ \"schema_version\": 1, ";
    try
    {
      ExperimentConfig::load(tmp.path / "bad.json");
      FAIL("malformed JSON accepted");
    }
    catch (const ConfigError &e)
    {
      CHECK(e.field() == "<file>");
    }
    std::ofstream(tmp.path / "good.json") << base_config().dump();
    CHECK(ExperimentConfig::load(tmp.path / "good.json").to_json() ==
          ExperimentConfig::from_json(base_config()).to_json());
  }
}

TEST_SUITE("build_rhs")
{
  TEST_CASE("random right-hand sides are seeded, real for real operators")
  {
    RhsSpec s;
    s.count = 3;
    s.seed = 9;
    const auto a = build_rhs(s, 50, true);
    const auto b = build_rhs(s, 50, true);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; i++)
    {
      CHECK(a[i] == b[i]);
      for (auto v : a[i])
      {
        CHECK(v.imag() == 0.0);
      }
    }
    CHECK_FALSE(a[0] == a[1]);
    s.seed = 10;
    CHECK_FALSE(build_rhs(s, 50, true)[0] == a[0]);
    bool complex_seen = false;
    const auto complex_rhs = build_rhs(s, 50, false);
    for (auto v : complex_rhs[0])
    {
      complex_seen = complex_seen || v.imag() != 0.0;
    }
    CHECK(complex_seen);
  }

  TEST_CASE("related right-hand sides are small perturbations of the first")
  {
    RhsSpec s;
    s.count = 4;
    s.kind = "related";
    s.seed = 2;
    s.epsilon = 1e-4;
    const auto b = build_rhs(s, 400, true);
    for (std::size_t i = 1; i < b.size(); i++)
    {
      const Real d = test::rel_diff(b[i], b[0]);
      CHECK(d > 0.0);
      CHECK(d < 3e-4);
    }
  }

  TEST_CASE("unit coordinate vectors, given or drawn")
  {
    RhsSpec s;
    s.count = 2;
    s.kind = "unit_coordinate";
    s.coordinates = {0, 7};
    auto b = build_rhs(s, 10, true);
    CHECK(b[0][0] == Scalar(1.0));
    CHECK(b[1][7] == Scalar(1.0));
    CHECK(norm2(b[1]) == 1.0);

    s.coordinates.clear();
    s.count = 10;
    s.seed = 4;
    b = build_rhs(s, 10, true);
    std::set<Index> hit;
    for (const auto &v : b)
    {
      for (Index i = 0; i < 10; i++)
      {
        if (v[i] == Scalar(1.0))
        {
          hit.insert(i);
        }
      }
      CHECK(norm2(v) == 1.0);
    }
    CHECK(hit.size() == 10);

    s.coordinates = {0, 12};
    s.count = 2;
    CHECK_THROWS_AS(build_rhs(s, 10, true), ConfigError);
  }
}

TEST_SUITE("run_experiment")
{
  TEST_CASE("identity matrix with one right-hand side costs one matvec")
  {
    Json j = base_config();
    j["matrix"] = {{"generator", "identity"}, {"n", 30}};
    j["rhs"]["count"] = 1;
    j["pipeline"].erase("rest");
    for (const char *solver : {"gmres", "gmres_dr"})
    {
      j["pipeline"]["first"] = {{"solver", solver}, {"m", 10}, {"k", 3}};
      const RunRecord r = run_experiment(ExperimentConfig::from_json(j));
      CHECK(r.totals.matvecs == 1);
      CHECK(r.all_converged);
    }
  }

  TEST_CASE("identical configurations give identical records")
  {
    Json j = base_config();
    j["rhs"]["count"] = 3;
    j["pipeline"]["rest"]["schedule"] = "every_jth:3";
    const ExperimentConfig c = ExperimentConfig::from_json(j);
    const RunRecord a = run_experiment(c), b = run_experiment(c);
    CHECK(a.to_json(false) == b.to_json(false));
    CHECK(a.to_json(false).dump() == b.to_json(false).dump());
  }

  TEST_CASE("totals are the exact sum of the solves")
  {
    for (const char *rest : {"gmres_proj", "gmres_e", "bicgstab", "gmres"})
    {
      Json j = base_config();
      j["rhs"]["count"] = 3;
      j["pipeline"]["rest"] = {{"solver", rest}, {"m", 15}, {"max_matvecs", 800}};
      const RunRecord r = run_experiment(ExperimentConfig::from_json(j));
      OpCounters sum;
      for (const auto &s : r.solves)
      {
        sum += s.counters;
      }
      CAPTURE(rest);
      CHECK(r.totals == sum);
      CHECK(r.solves.size() == 3);
      CHECK(r.to_json()["totals"]["matvecs"].get<std::int64_t>() == sum.matvecs);
      CHECK(r.to_json()["rng"] == kRhsGeneratorName);
    }
  }

  TEST_CASE("block pipelines group right-hand sides")
  {
    Json j = base_config();
    j["rhs"]["count"] = 5;
    j["pipeline"]["first"] = {{"solver", "bl_gmres_dr"}, {"m", 50}, {"k", 10}, {"p", 2}};
    j["pipeline"]["rest"] = {{"solver", "bl_gmres_proj"}, {"m", 40}};
    const RunRecord r = run_experiment(ExperimentConfig::from_json(j));
    REQUIRE(r.solves.size() == 3);
    CHECK(r.solves[0].solver == "bl_gmres_dr");
    CHECK(r.solves[1].solver == "bl_gmres_proj");
    CHECK(r.solves[2].rhs == std::vector<Index>{4});
    CHECK(r.all_converged);
    CHECK(r.matvecs_for(3) == r.solves[1].counters.matvecs);
    CHECK(r.report_for(3).converged);
    CHECK_THROWS_AS(r.report_for(5), Error);
    REQUIRE(r.subspace.has_value());
    CHECK(r.subspace->block_size == 2);
  }

  TEST_CASE("an unconverged first solve does not stop the run")
  {
    TempDir tmp("failure");
    const CsrMatrix small = gen_bidiagonal(10);
    save_matrix_market(small, tmp.path / "a.mtx");
    Json j = base_config();
    j["matrix"] = {{"path", (tmp.path / "a.mtx").string()}};
    j["rhs"]["count"] = 3;
    j["pipeline"]["first"] = {{"solver", "gmres_dr"}, {"m", 5}, {"k", 2}, {"max_matvecs", 1}};
    const RunRecord r = run_experiment(ExperimentConfig::from_json(j));
    CHECK_FALSE(r.all_converged);
    CHECK(r.solves.size() == 3);
    CHECK(r.solves[2].converged);
  }

  TEST_CASE("bidiagonal problem, ten right-hand sides, m = 15, every cycle")
  {
    Json j = base_config();
    j["rhs"] = {{"count", 10}, {"kind", "random_normal"}, {"seed", 42}};
    const RunRecord r = run_experiment(ExperimentConfig::from_json(j));
    CHECK(r.all_converged);
    CHECK(r.totals.matvecs >= 1194);
    CHECK(r.totals.matvecs <= 1616);
  }
}

TEST_SUITE("outputs")
{
  TEST_CASE("history CSVs end on a converged row and show scheduled projections")
  {
    TempDir tmp("history");
    Json j = base_config();
    j["rhs"]["count"] = 2;
    j["pipeline"]["rest"]["m"] = 10;
    j["pipeline"]["rest"]["schedule"] = "every_jth:3";
    j["output"] = {{"directory", tmp.path.string()}};
    const RunRecord r = run_experiment(ExperimentConfig::from_json(j));
    for (const char *f : {"record.json", "history_rhs000.csv", "history_rhs001.csv",
                          "spectrum.csv"})
    {
      CHECK(fs::exists(tmp.path / f));
    }
    CHECK_FALSE(fs::exists(tmp.path / "subspace.bin"));

    for (const char *f : {"history_rhs000.csv", "history_rhs001.csv"})
    {
      const auto rows = read_csv(tmp.path / f);
      REQUIRE(rows.size() >= 3);
      CHECK(rows[0] == std::vector<std::string>{"matvecs", "relative_residual", "event"});
      CHECK(rows.back()[2] == "converged");
      CHECK(std::stod(rows.back()[1]) <= 1e-6);
    }

    // Projections come before cycles 1, 4, 7, ... of the second solve.
    const auto rows = read_csv(tmp.path / "history_rhs001.csv");
    Index cycle = 1;
    for (std::size_t i = 1; i < rows.size(); i++)
    {
      if (rows[i][2] == "projection")
      {
        CHECK((cycle - 1) % 3 == 0);
      }
      else if (rows[i][2] == "cycle")
      {
        cycle++;
      }
    }
    CHECK(rows[1][2] == "projection");

    const Json rec = Json::parse(slurp(tmp.path / "record.json"));
    CHECK(rec["totals"]["matvecs"].get<std::int64_t>() == r.totals.matvecs);
    CHECK(rec["config"] == r.config.to_json());
  }

  TEST_CASE("history CSV format")
  {
    SolveReport rep;
    rep.history = {{15, 0.5, HistoryEvent::cycle},
                   {15, 0.25, HistoryEvent::projection},
                   {30, 1e-7, HistoryEvent::converged}};
    std::ostringstream os;
    write_history_csv(rep, os);
    CHECK(os.str() == "matvecs,relative_residual,event\n"
                      "15,0.5,cycle\n"
                      "15,0.25,projection\n"
                      "30,9.9999999999999995e-08,converged\n");
  }

  TEST_CASE("spectrum CSV: header only for k = 0, smallest near 0.1 for the bidiagonal problem")
  {
    TempDir tmp("spectrum");
    emit_spectrum_csv(DeflationSubspace::empty(10), tmp.path / "empty.csv");
    CHECK(slurp(tmp.path / "empty.csv") == "re,im,abs\n");

    Json j = base_config();
    j["rhs"]["count"] = 1;
    j["pipeline"].erase("rest");
    j["output"] = {{"directory", tmp.path.string()}, {"subspace", true}, {"history", false}};
    run_experiment(ExperimentConfig::from_json(j));
    CHECK_FALSE(fs::exists(tmp.path / "history_rhs000.csv"));
    const auto rows = read_csv(tmp.path / "spectrum.csv");
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == std::vector<std::string>{"re", "im", "abs"});
    CHECK(std::abs(std::stod(rows[1][2]) - 0.1) <= 1e-3);
    for (std::size_t i = 2; i < rows.size(); i++)
    {
      CHECK(std::stod(rows[i][2]) >= std::stod(rows[i - 1][2]));
    }
    const DeflationSubspace d = load_deflation_subspace(tmp.path / "subspace.bin");
    CHECK(d.k() == 10);

    j["pipeline"]["first"]["k"] = 0;
    j["output"]["directory"] = (tmp.path / "k0").string();
    run_experiment(ExperimentConfig::from_json(j));
    CHECK(slurp(tmp.path / "k0" / "spectrum.csv") == "re,im,abs\n");
  }

  TEST_CASE("hard lattice configuration has a harmonic Ritz value below 0.1")
  {
    Json j = base_config();
    j["matrix"] = {{"generator", "lattice"}, {"L", 8}, {"kappa", 0.35}, {"seed", 42}};
    j["rhs"]["count"] = 1;
    j["pipeline"].erase("rest");
    j["pipeline"]["first"] = {{"solver", "gmres_dr"}, {"m", 30}, {"k", 10}, {"rtol", 1e-10}};
    const RunRecord r = run_experiment(ExperimentConfig::from_json(j));
    REQUIRE(r.subspace.has_value());
    const auto pairs = harmonic_ritz(*r.subspace);
    REQUIRE(!pairs.empty());
    CHECK(std::abs(pairs.front().theta) < 0.1);
  }

  TEST_CASE("atomic writes replace files and leave no temporaries")
  {
    TempDir tmp("atomic");
    const fs::path f = tmp.path / "out.txt";
    write_file_atomic(f, "first");
    write_file_atomic(f, "second");
    CHECK(slurp(f) == "second");
    int entries = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(tmp.path))
    {
      entries++;
    }
    CHECK(entries == 1);
    CHECK_THROWS_AS(write_file_atomic(tmp.path / "no" / "such" / "dir.txt", "x"), Error);
  }
}

TEST_SUITE("suites")
{
  TEST_CASE("every named suite has cells")
  {
    const std::vector<std::string> want{"ex1-fig31", "table31", "table32", "table33-subset",
                                        "sec34",     "sec37",   "table41-subset"};
    CHECK(suite_names() == want);
    for (const auto &name : want)
    {
      CAPTURE(name);
      const auto cells = suite_configs(name, {});
      CHECK_FALSE(cells.empty());
      std::set<std::string> labels;
      for (const auto &[label, cfg] : cells)
      {
        labels.insert(label);
        CHECK_NOTHROW(cfg.validate());
      }
      CHECK(labels.size() == cells.size());
    }
    CHECK(suite_configs("table31", {}).size() == 20);
    CHECK_THROWS_AS(suite_configs("table99", {}), ConfigError);
  }

  TEST_CASE("suite results do not depend on the number of jobs")
  {
    TempDir tmp("suite");
    SuiteOptions one;
    SuiteOptions four;
    four.jobs = 4;
    four.output = tmp.path;
    const SuiteResult a = run_suite("ex1-fig31", one);
    const SuiteResult b = run_suite("ex1-fig31", four);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); i++)
    {
      CHECK(a.cells[i].label == b.cells[i].label);
      const Json ja = a.cells[i].record.to_json(false), jb = b.cells[i].record.to_json(false);
      CHECK(ja["solves"] == jb["solves"]);
      CHECK(ja["totals"] == jb["totals"]);
    }
    CHECK(fs::exists(tmp.path / "suite.json"));
    CHECK(fs::exists(tmp.path / "gmres_dr_25_10" / "record.json"));
    CHECK(a.cell("gmres_dr_25_10").record.solves[0].counters.matvecs >= 230);
    CHECK(a.summary().find("gmres_proj_15_10") != std::string::npos);
  }
}

TEST_SUITE("command line")
{
  // Runs the CLI through the shell; returns its exit status.
  int run_cli(const std::string &args)
  {
    const char *cli = std::getenv("MRHS_CLI");
    REQUIRE(cli != nullptr);
    const int status = std::system(("\"" + std::string(cli) + "\" " + args).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  TEST_CASE("subcommands and exit codes")
  {
    if (std::getenv("MRHS_CLI") == nullptr)
    {
      MESSAGE("MRHS_CLI not set; command line checks skipped");
      return;
    }
    TempDir tmp("cli");
    const std::string dir = tmp.path.string();

    CHECK(run_cli("gen --generator bidiagonal --n 10 --out " + dir + "/a.mtx") == 0);
    CHECK(load_matrix_market(tmp.path / "a.mtx") == gen_bidiagonal(10));

    CHECK(run_cli("solve --generator identity --n 5 --rhs-seed 1 --first-solver gmres --json > " +
                  dir + "/id.json") == 0);
    const Json rec = Json::parse(slurp(tmp.path / "id.json"));
    CHECK(rec["totals"]["matvecs"] == 1);

    CHECK(run_cli("solve --rhs-seed 3 --first-solver gmres --first-max-matvecs 30 > /dev/null") ==
          1);
    CHECK(run_cli("solve --rhs-seed 3 --first-solver nope 2> /dev/null") == 2);

    std::ofstream(tmp.path / "cfg.json") << base_config().dump();
    CHECK(run_cli("solve --config " + dir + "/cfg.json --rest-schedule every_jth:5 --output " +
                  dir + "/run --subspace > /dev/null") == 0);
    CHECK(fs::exists(tmp.path / "run" / "subspace.bin"));
    const Json run = Json::parse(slurp(tmp.path / "run" / "record.json"));
    CHECK(run["config"]["pipeline"]["rest"]["schedule"] == "every_jth:5");

    CHECK(run_cli("spectrum --from-subspace " + dir + "/run/subspace.bin --out " + dir +
                  "/spec.csv") == 0);
    CHECK(slurp(tmp.path / "spec.csv") == slurp(tmp.path / "run" / "spectrum.csv"));

    CHECK(run_cli("suite no-such-suite 2> /dev/null") != 0);
  }
}
