#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "btft/snapshot.hpp"

using namespace btft;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("btft_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("grid csv format") {
  Lattice lat(2, {Strategy::C, Strategy::D, Strategy::T, Strategy::T});
  std::ostringstream out;
  write_grid_csv(lat, out);
  CHECK(out.str() == "1,2\n3,3\n");
}

TEST_CASE("pgm of an all-D grid") {
  Lattice lat(4, Strategy::D);
  std::ostringstream out;
  write_grid_pgm(lat, out);
  std::istringstream in(out.str());
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == 4);
  CHECK(h == 4);
  CHECK(maxval == 255);
  int v, n = 0;
  while (in >> v) {
    CHECK(v == 0);
    ++n;
  }
  CHECK(n == 16);
}

TEST_CASE("grey levels") {
  CHECK(pgm_level(Strategy::C) == 85);
  CHECK(pgm_level(Strategy::D) == 0);
  CHECK(pgm_level(Strategy::T) == 170);
}

TEST_CASE("export and re-import round trip") {
  SimConfig cfg;
  cfg.side_l = 12;
  Rng rng(5);
  const auto lat = init_lattice(cfg, rng);
  const auto dir = scratch_dir("roundtrip");
  export_snapshot(lat, dir / "grid");
  CHECK(fs::exists(dir / "grid.csv"));
  CHECK(fs::exists(dir / "grid.pgm"));
  CHECK(read_grid_csv(dir / "grid.csv") == lat);
  fs::remove_all(dir);
}

TEST_CASE("malformed grids are rejected") {
  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_grid_csv(ragged), DomainError);
  std::istringstream bad("1,4\n2,2\n");
  CHECK_THROWS_AS(read_grid_csv(bad), DomainError);
  std::istringstream rect("1,2,3\n1,2,3\n");
  CHECK_THROWS_AS(read_grid_csv(rect), DomainError);
  CHECK_THROWS(read_grid_csv(fs::path("/nonexistent/grid.csv")));
}

TEST_CASE("unwritable snapshot path raises") {
  Lattice lat(4);
  CHECK_THROWS_AS(export_snapshot(lat, "/nonexistent/dir/grid"), IoError);
}

TEST_CASE("snapshot failures do not corrupt the run record") {
  SimConfig cfg;
  cfg.side_l = 10;
  cfg.mcs_total = 20;
  cfg.stationary_window = 5;
  cfg.snapshot_schedule = {0, 10};
  cfg.snapshot_dir = "/nonexistent/dir";
  const auto bad = run(cfg);
  CHECK(bad.snapshot_errors.size() == 2);
  cfg.snapshot_dir.clear();
  const auto good = run(cfg);
  CHECK(good.snapshot_errors.empty());
  CHECK(bad.stationary == good.stationary);
  CHECK(bad.series.size() == good.series.size());
}

TEST_CASE("scheduled snapshots are written") {
  const auto dir = scratch_dir("sched");
  SimConfig cfg;
  cfg.side_l = 10;
  cfg.mcs_total = 20;
  cfg.stationary_window = 5;
  cfg.snapshot_schedule = {0, 5, 20};
  cfg.snapshot_dir = dir;
  const auto rec = run(cfg);
  CHECK(rec.snapshot_errors.empty());
  for (int t : {0, 5, 20}) {
    CHECK(fs::exists(dir / ("snapshot_mcs" + std::to_string(t) + ".csv")));
    CHECK(fs::exists(dir / ("snapshot_mcs" + std::to_string(t) + ".pgm")));
  }
  // The MCS 0 snapshot is the initial lattice.
  Rng rng(cfg.seed);
  CHECK(read_grid_csv(dir / "snapshot_mcs0.csv") == init_lattice(cfg, rng));
  fs::remove_all(dir);
}

TEST_CASE("time series csv") {
  SimConfig cfg;
  cfg.side_l = 8;
  cfg.mcs_total = 3;
  cfg.stationary_window = 1;
  cfg.init = InitialCondition::from_lattice(Lattice(8, Strategy::C));
  std::ostringstream out;
  write_timeseries_csv(run(cfg), out);
  CHECK(out.str() == "mcs,x_c,x_d,x_t\n0,1,0,0\n");
}

TEST_CASE("shortest round-trip doubles") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.0) == "0");
  const double x = 1.0 / 3.0;
  CHECK(std::stod(format_double(x)) == x);
}
